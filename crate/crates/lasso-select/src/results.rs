//! Persisted experiment results: a JSON document (configuration, every
//! replicate, aggregates) and a CSV table of the consistency curve.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lasso_select_core::harness::{curve_rows, CurveRow, ExperimentResult};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const CURVE_HEADER: [&str; 8] = ["n", "r", "kstar_r", "p_exact", "p_miss", "p_false", "ci_lo", "ci_hi"];

/// Number of significant digits in human-facing numeric output.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// Shortest representation that round-trips every `f64`.
    #[default]
    Full,
    /// Floats rounded to 12 significant digits.
    Significant,
}

/// Rounds `x` to `digits` significant decimal digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Formats `x` with at most 12 significant digits, switching to exponent
/// notation for very small or very large magnitudes.
pub fn fmt_num(x: f64) -> String {
    let v = round_significant(x, SIGNIFICANT_DIGITS);
    let a = v.abs();
    if v == 0.0 || (1e-5..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(num) = n.as_f64().and_then(|f| serde_json::Number::from_f64(round_significant(f, SIGNIFICANT_DIGITS))) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON for any serializable value, with a trailing newline.
pub fn to_json<T: Serialize>(value: &T, precision: Precision) -> Result<String> {
    let mut text = match precision {
        Precision::Full => serde_json::to_string_pretty(value)?,
        Precision::Significant => {
            let mut v = serde_json::to_value(value)?;
            round_value(&mut v);
            serde_json::to_string_pretty(&v)?
        }
    };
    text.push('\n');
    Ok(text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    fs::write(path, text).map_err(Error::io(path))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path, precision: Precision) -> Result<()> {
    write_text(path, &to_json(value, precision)?)
}

pub fn read_json(path: &Path) -> Result<ExperimentResult> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CURVE_HEADER)?;
    for row in rows {
        w.write_record([
            row.n.to_string(),
            fmt_num(row.r),
            fmt_num(row.kstar_r),
            fmt_num(row.p_exact),
            fmt_num(row.p_miss),
            fmt_num(row.p_false),
            fmt_num(row.ci_lo),
            fmt_num(row.ci_hi),
        ])?;
    }
    w.flush().map_err(Error::io("<csv sink>"))?;
    Ok(())
}

pub fn curve_csv(rows: &[CurveRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_curve_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

/// Files written by [`persist_results`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Persisted {
    pub json: PathBuf,
    pub csv: PathBuf,
}

/// Writes `results.json` and `curve.csv` into `dir`.
pub fn persist_results(result: &ExperimentResult, dir: &Path, precision: Precision) -> Result<Persisted> {
    let out = Persisted { json: dir.join("results.json"), csv: dir.join("curve.csv") };
    write_json(result, &out.json, precision)?;
    write_text(&out.csv, &curve_csv(&curve_rows(result))?)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_rounding() {
        assert_eq!(round_significant(0.1234567890123456, 12), 0.123456789012);
        assert_eq!(round_significant(-987_654.321_098_765, 12), -987654.321099);
        assert_eq!(fmt_num(3.656438465797678e-291), "3.6564384658e-291");
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(2.0 / 3.0), "0.666666666667");
    }

    #[test]
    fn empty_curve_is_header_only() {
        assert_eq!(curve_csv(&[]).unwrap(), "n,r,kstar_r,p_exact,p_miss,p_false,ci_lo,ci_hi\n");
    }

    #[test]
    fn significant_json_rounds_floats_only() {
        let v = serde_json::json!({"a": 0.1234567890123456, "n": 12345678901234u64, "xs": [1.0, 1.0 / 3.0]});
        let text = to_json(&v, Precision::Significant).unwrap();
        assert!(text.contains("0.123456789012"));
        assert!(text.contains("12345678901234"));
        assert!(text.contains("0.333333333333"));
        assert!(!text.contains("0.3333333333333"));
    }
}
