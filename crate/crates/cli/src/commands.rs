//! Subcommand implementations. Every command writes one JSON report with
//! the keys `command`, `config`, `results`, `diagnostics`, `warnings`,
//! `seed` and `version`.

use std::io::Write;
use std::path::Path;

use hurst_core::diagnostics::{diagnose, DiagnoseConfig};
use hurst_core::estimators::{
    generalized_scale, regression_scale, sequential_scale, simple_regression, terminal_scale,
    EstimatorSpec,
};
use hurst_core::fbm::{monte_carlo, McConfig, McSummary};
use hurst_core::rolling::rolling_monitor_capped;
use hurst_core::variation::{burkholder_ratio, variation_profile, DEFAULT_BRANCH_CAP};
use hurst_core::{
    gladyshev, DyadicSeries, Detrend, EstimatorKind, FaberSchauderPyramid, WeightProfile,
    VERSION,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::ingest::{ingest_csv, Ingested, IngestPolicy, LengthPolicy};
use crate::parse::{parse_f64_list, parse_h_list, parse_pairs, parse_profile, parse_usize_list};
use crate::{
    AnalyzeArgs, CliError, Command, DiagnoseArgs, EstimateArgs, InputArgs, OutputArgs,
    OutputFormat, ProfileArgs, RollArgs, SimulateArgs,
};

#[derive(Debug, Serialize)]
struct Report<C: Serialize> {
    command: &'static str,
    config: C,
    results: Vec<Value>,
    diagnostics: Vec<Value>,
    warnings: Vec<String>,
    seed: Option<u64>,
    version: &'static str,
}

impl<C: Serialize> Report<C> {
    fn new(command: &'static str, config: C) -> Self {
        Self {
            command,
            config,
            results: Vec::new(),
            diagnostics: Vec::new(),
            warnings: Vec::new(),
            seed: None,
            version: VERSION,
        }
    }
}

pub fn dispatch(command: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Analyze(a) => analyze(a, stdout),
        Command::Estimate(a) => estimate(a, stdout),
        Command::Roll(a) => roll(a, stdout),
        Command::Simulate(a) => simulate(a, stdout),
        Command::Diagnose(a) => diagnose_cmd(a, stdout),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("cannot write {}: {e}", path.display()))
}

fn emit<C: Serialize>(
    report: &Report<C>,
    output: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    match &output.output {
        Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("cannot write output: {e}"))),
    }
}

fn policy(input: &InputArgs, default: LengthPolicy) -> IngestPolicy {
    IngestPolicy {
        time_col: input.time_col.clone(),
        value_col: input.value_col.clone(),
        length: input.length.unwrap_or(default),
        transform: input.transform,
        detrend: input.detrend,
    }
}

fn load_series(input: &InputArgs) -> Result<(DyadicSeries, Ingested), CliError> {
    let ingested = ingest_csv(&input.input, &policy(input, LengthPolicy::RequireDyadic))?;
    if ingested.metadata.resolution.is_none() {
        return Err(CliError::Input(format!(
            "{} samples is not 2^n + 1; use --length truncate-head or truncate-tail",
            ingested.values.len()
        )));
    }
    let series = DyadicSeries::from_vec(ingested.values.clone())?;
    Ok((series, ingested))
}

fn profile_of(args: &ProfileArgs) -> Result<WeightProfile, CliError> {
    parse_profile(&args.alpha, Some(args.m)).map_err(CliError::Usage)
}

fn default_lags(m: usize) -> Vec<usize> {
    (0..=m).map(|j| 1usize << j).collect()
}

fn estimator_spec(
    kind: EstimatorKind,
    profile: &ProfileArgs,
    ks: &Option<String>,
    qs: &str,
) -> Result<EstimatorSpec, CliError> {
    Ok(match kind {
        EstimatorKind::Gladyshev => EstimatorSpec::Gladyshev,
        EstimatorKind::Sequential => EstimatorSpec::Sequential {
            profile: profile_of(profile)?,
        },
        EstimatorKind::Terminal => EstimatorSpec::Terminal {
            profile: profile_of(profile)?,
        },
        EstimatorKind::Regression => EstimatorSpec::Regression {
            profile: profile_of(profile)?,
        },
        EstimatorKind::SimpleRegression => EstimatorSpec::SimpleRegression {
            ks: match ks {
                Some(s) => parse_usize_list(s).map_err(CliError::Usage)?,
                None => default_lags(profile.m),
            },
            qs: parse_f64_list(qs).map_err(CliError::Usage)?,
        },
        EstimatorKind::Generalized => {
            return Err(CliError::Usage(
                "the generalized estimator is only available in `estimate`".into(),
            ))
        }
    })
}

fn analyze(args: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (series, ingested) = load_series(&args.input)?;
    let p_grid = parse_f64_list(&args.p).map_err(CliError::Usage)?;
    let pyramid = FaberSchauderPyramid::analyze(&series);
    let trace = pyramid.energy_trace();
    let levels: Vec<Value> = (0..pyramid.depth())
        .map(|m| {
            let j = m + 1;
            let energy: f64 = pyramid.level(m).iter().map(|t| t * t).sum();
            json!({
                "m": m,
                "level_energy": energy,
                "s": trace.s(j),
                "xi": trace.xi(j),
                "gladyshev": trace.xi(j).map(|xi| 1.0 - xi),
            })
        })
        .collect();
    let resolution = series.resolution();
    let all_levels: Vec<u32> = (1..=resolution).collect();
    let variation = variation_profile(&series, &p_grid, &all_levels)?;
    let mut result = json!({
        "resolution": resolution,
        "x0": pyramid.x0(),
        "slope": pyramid.slope(),
        "levels": levels,
        "variation": variation,
    });
    if args.coefficients {
        result["coefficients"] = to_value(&pyramid.levels());
    }
    let mut report = Report::new("analyze", args);
    report.results.push(result);
    report.diagnostics.push(json!({ "ingest": ingested.metadata }));
    emit(&report, &args.output, stdout)
}

fn estimate(args: &EstimateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (series, ingested) = load_series(&args.input)?;
    let n = args.n.unwrap_or(series.resolution());
    let mut report = Report::new("estimate", args);
    let result = match args.kind {
        EstimatorKind::Gladyshev => json!({
            "kind": "gladyshev",
            "n": n,
            "h": gladyshev(&series, n)?,
        }),
        EstimatorKind::Sequential => to_value(&sequential_scale(&series, n, &profile_of(&args.profile)?)?),
        EstimatorKind::Terminal => to_value(&terminal_scale(&series, n, &profile_of(&args.profile)?)?),
        EstimatorKind::Regression => {
            let est = regression_scale(&series, n, &profile_of(&args.profile)?)?;
            if est.normalized_profile {
                report
                    .warnings
                    .push("regression weights rescaled to sum to one".into());
            }
            to_value(&est)
        }
        EstimatorKind::SimpleRegression => {
            let ks = match &args.ks {
                Some(s) => parse_usize_list(s).map_err(CliError::Usage)?,
                None => default_lags(args.profile.m),
            };
            let qs = parse_f64_list(&args.qs).map_err(CliError::Usage)?;
            to_value(&simple_regression(&series, n, &ks, &qs)?)
        }
        EstimatorKind::Generalized => {
            let pairs = args
                .pairs
                .as_deref()
                .ok_or_else(|| CliError::Usage("--pairs is required for generalized".into()))?;
            let pairs = parse_pairs(pairs).map_err(CliError::Usage)?;
            to_value(&generalized_scale(&series, n, &pairs)?)
        }
    };
    report.results.push(result);
    report.diagnostics.push(json!({ "ingest": ingested.metadata }));
    emit(&report, &args.output, stdout)
}

fn roll(args: &RollArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ingested = ingest_csv(&args.input.input, &policy(&args.input, LengthPolicy::Keep))?;
    let profile = profile_of(&args.profile)?;
    let rolling = rolling_monitor_capped(
        &ingested.values,
        args.n,
        args.stride,
        &profile,
        args.kind,
        args.max_windows,
    )?;
    let time_at = |i: usize| ingested.timestamps.as_ref().map(|ts| ts[i].clone());
    let mut report = Report::new("roll", args);
    for row in &rolling.rows {
        let mut v = to_value(row);
        if let Some(t) = time_at(row.end) {
            v["time"] = Value::String(t);
        }
        report.results.push(v);
    }
    report.diagnostics.push(json!({
        "shared_log2_lambda": rolling.shared_log2_lambda,
        "pooled_log2_lambda": rolling.pooled_log2_lambda,
        "windows": rolling.grid.len(),
        "stride": rolling.grid.stride(),
        "skipped": rolling.skipped,
        "ingest": ingested.metadata,
    }));
    report.warnings.extend(rolling.warnings.iter().cloned());
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
        w.write_record(["offset", "end", "time", "gladyshev", "raw", "raw_log2_lambda", "adjusted"])
            .map_err(|e| io_err(path, e))?;
        for row in &rolling.rows {
            w.write_record([
                row.offset.to_string(),
                row.end.to_string(),
                time_at(row.end).unwrap_or_default(),
                row.gladyshev.to_string(),
                row.raw.to_string(),
                row.raw_log2_lambda.to_string(),
                row.adjusted.to_string(),
            ])
            .map_err(|e| io_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
    }
    emit(&report, &args.output, stdout)
}

fn mc_csv(summaries: &[McSummary]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["H_true", "mean", "sd", "max", "min", "paths", "failures"])
        .expect("in-memory write");
    for s in summaries {
        w.write_record([
            s.h_true.to_string(),
            s.mean.to_string(),
            s.sd.to_string(),
            s.max.to_string(),
            s.min.to_string(),
            s.paths.to_string(),
            s.failures.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let h_list = parse_h_list(&args.h).map_err(CliError::Usage)?;
    let config = McConfig {
        estimator: estimator_spec(args.estimator, &args.profile, &args.ks, &args.qs)?,
        n: args.n,
        paths: args.paths,
        seed: args.seed,
        standardize: args.standardize,
        method: args.method.into(),
    };
    let summaries = monte_carlo(&config, &h_list)?;
    let table = mc_csv(&summaries);
    if let Some(path) = &args.csv {
        std::fs::write(path, &table).map_err(|e| io_err(path, e))?;
    }
    let mut report = Report::new("simulate", args);
    report.seed = Some(args.seed);
    for s in &summaries {
        if s.failures > 0 {
            report
                .warnings
                .push(format!("H = {}: {} paths failed", s.h_true, s.failures));
        }
        report.results.push(to_value(s));
    }
    report.diagnostics.push(json!({ "estimator": config.estimator }));
    if args.format == OutputFormat::Csv && args.output.output.is_none() {
        return stdout
            .write_all(table.as_bytes())
            .map_err(|e| CliError::Input(format!("cannot write output: {e}")));
    }
    emit(&report, &args.output, stdout)
}

fn diagnose_cmd(args: &DiagnoseArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (series, ingested) = load_series(&args.input)?;
    let p_grid = parse_f64_list(&args.p).map_err(CliError::Usage)?;
    let res = series.resolution();
    let top = args
        .max_level
        .unwrap_or(res.min(16))
        .min(res)
        .min(DEFAULT_BRANCH_CAP);
    let config = DiagnoseConfig {
        p_grid: p_grid.clone(),
        jensen_levels: (1..=top).collect(),
        nu_b: args.nu_b,
        nu_quantile: args.nu_q,
        h_candidate: args.h_candidate,
    };
    let diag = diagnose(&series, &config)?;
    let mut report = Report::new("diagnose", args);
    report.warnings.extend(diag.warnings.iter().cloned());
    let coarse = series.coarsened(top)?;
    let mut burkholder = Vec::new();
    for &p in &p_grid {
        match burkholder_ratio(&coarse, p, top, Detrend::Affine) {
            Ok(r) => burkholder.push(json!({ "n": top, "p": p, "ratio": r })),
            Err(e) => report.warnings.push(format!("Burkholder ratio at p = {p}: {e}")),
        }
    }
    report.results.push(to_value(&diag));
    report.diagnostics.push(json!({
        "burkholder": burkholder,
        "ingest": ingested.metadata,
    }));
    emit(&report, &args.output, stdout)
}
