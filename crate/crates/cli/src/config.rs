//! `--config file.toml` support.
//!
//! Each top-level key becomes `--key value` and is inserted right after the
//! subcommand, so flags given on the command line come later and win.

use std::ffi::OsString;

/// Expands `--config PATH` (or `--config=PATH`) into flag tokens.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        match arg.to_str() {
            Some("--config") => {
                path = Some(
                    iter.next()
                        .ok_or_else(|| "--config needs a file path".to_string())?,
                );
            }
            Some(s) if s.starts_with("--config=") => {
                path = Some(OsString::from(&s["--config=".len()..]));
            }
            _ => rest.push(arg),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let tokens = config_tokens(&text)?;
    // rest[0] is the program name, rest[1] the subcommand.
    let at = rest.len().min(2);
    rest.splice(at..at, tokens);
    Ok(rest)
}

/// Flag tokens for the keys of a TOML document, in key order.
pub fn config_tokens(text: &str) -> Result<Vec<OsString>, String> {
    let table: toml::Table = text.parse().map_err(|e| format!("invalid config: {e}"))?;
    let mut tokens = Vec::new();
    for (key, value) in &table {
        if key == "config" {
            return Err("config files cannot include other config files".into());
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => tokens.push(flag.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let joined = items
                    .iter()
                    .map(scalar)
                    .collect::<Result<Vec<_>, _>>()?
                    .join(",");
                tokens.push(flag.into());
                tokens.push(joined.into());
            }
            other => {
                tokens.push(flag.into());
                tokens.push(scalar(other)?.into());
            }
        }
    }
    Ok(tokens)
}

fn scalar(value: &toml::Value) -> Result<String, String> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value {other}")),
    }
}
