//! Parsers for list-valued flags.

use hurst_core::estimators::PairWeight;
use hurst_core::WeightProfile;

/// `uniform`, `geometric:r` (`alpha_k = r^k`) or an explicit comma list.
pub fn parse_profile(text: &str, m: Option<usize>) -> Result<WeightProfile, String> {
    let text = text.trim();
    let depth = || m.ok_or_else(|| format!("alpha {text:?} needs --m"));
    if text == "uniform" {
        return Ok(WeightProfile::uniform(depth()?));
    }
    if let Some(r) = text.strip_prefix("geometric:") {
        let r: f64 = r
            .trim()
            .parse()
            .map_err(|_| format!("bad geometric ratio in {text:?}"))?;
        return WeightProfile::geometric(depth()?, r).map_err(|e| e.to_string());
    }
    let alpha = parse_f64_list(text)?;
    if let Some(m) = m {
        if alpha.len() != m + 1 {
            return Err(format!(
                "alpha list has {} entries but --m {m} needs {}",
                alpha.len(),
                m + 1
            ));
        }
    }
    WeightProfile::new(alpha).map_err(|e| e.to_string())
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("cannot parse {t:?} as a number"))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| {
            if v.is_empty() {
                Err("empty list".to_string())
            } else {
                Ok(v)
            }
        })
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    let v = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("cannot parse {t:?} as a non-negative integer"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err("empty list".to_string());
    }
    Ok(v)
}

/// `lo..hi:step` (inclusive) or a comma list.
pub fn parse_h_list(s: &str) -> Result<Vec<f64>, String> {
    let Some((range, step)) = s.split_once(':') else {
        return parse_f64_list(s);
    };
    let (lo, hi) = range
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi:step, got {s:?}"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("cannot parse {t:?} in {s:?}"))
    };
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if step.is_nan() || step <= 0.0 || hi < lo {
        return Err(format!("empty or invalid range {s:?}"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // Round to 12 decimals so 0.1 + 2 * 0.1 prints as 0.3.
    Ok((0..count)
        .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// `hi:lo:alpha` triples separated by commas.
pub fn parse_pairs(s: &str) -> Result<Vec<PairWeight>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let parts: Vec<&str> = t.trim().split(':').collect();
            if parts.len() != 3 {
                return Err(format!("expected hi:lo:alpha, got {t:?}"));
            }
            Ok(PairWeight {
                hi: parts[0].parse().map_err(|_| format!("bad level in {t:?}"))?,
                lo: parts[1].parse().map_err(|_| format!("bad level in {t:?}"))?,
                alpha: parts[2].parse().map_err(|_| format!("bad weight in {t:?}"))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        assert_eq!(
            parse_profile("geometric:0.5", Some(2)).unwrap().alpha(),
            &[1.0, 0.5, 0.25]
        );
        assert_eq!(parse_profile("uniform", Some(1)).unwrap().alpha(), &[1.0, 1.0]);
        assert_eq!(parse_profile("1,0.3", None).unwrap().m(), 1);
        assert!(parse_profile("1,0.3", Some(2)).is_err());
        assert!(parse_profile("geometric:x", Some(1)).is_err());
        assert!(parse_profile("0,1", None).is_err());
    }

    #[test]
    fn h_ranges() {
        let h = parse_h_list("0.1..0.9:0.1").unwrap();
        assert_eq!(h.len(), 9);
        assert_eq!(h[2], 0.3);
        assert_eq!(h[8], 0.9);
        assert_eq!(parse_h_list("0.3,0.7").unwrap(), vec![0.3, 0.7]);
        assert!(parse_h_list("0.9..0.1:0.1").is_err());
    }

    #[test]
    fn pairs() {
        let p = parse_pairs("14:13:1,14:12:0.5").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].lo, 12);
        assert!(parse_pairs("14:13").is_err());
    }
}
