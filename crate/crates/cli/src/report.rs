//! Report rows and their JSON/CSV encodings.

use std::io::Write;

use anyhow::Result;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

/// How `measured` is compared with `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// measured ≤ bound + tolerance.
    AtMost,
    /// measured ≥ bound − tolerance.
    AtLeast,
    /// measured − tolerance > bound.
    Exceeds,
    /// |measured − bound| ≤ tolerance.
    Equals,
    /// Reported only; always passes.
    Report,
    /// The cell could not be run; always passes.
    Skipped,
}

impl Check {
    fn passes(self, measured: f64, bound: Option<f64>, tolerance: f64) -> bool {
        let Some(b) = bound else { return matches!(self, Check::Report | Check::Skipped) };
        match self {
            Check::AtMost => measured <= b + tolerance,
            Check::AtLeast => measured >= b - tolerance,
            Check::Exceeds => measured - tolerance > b,
            Check::Equals => (measured - b).abs() <= tolerance,
            Check::Report | Check::Skipped => true,
        }
    }
}

/// One measurement. The CSV columns are the field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub n: Option<usize>,
    /// Parameters plus the comparison used for `pass`.
    pub params_json: String,
    pub measured: f64,
    #[serde(serialize_with = "bound_or_na")]
    pub bound: Option<f64>,
    pub stderr: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn bound_or_na<S: Serializer>(b: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match b {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("n/a"),
    }
}

impl Row {
    #[allow(clippy::too_many_arguments)]
    pub fn new(experiment: &str, n: Option<usize>, params: Value, measured: f64, bound: Option<f64>, stderr: f64, tolerance: f64, check: Check) -> Self {
        let mut params = match params {
            Value::Object(m) => m,
            Value::Null => serde_json::Map::new(),
            other => {
                let mut m = serde_json::Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        params.insert("check".into(), json!(check));
        Row {
            experiment: experiment.into(),
            n,
            params_json: Value::Object(params).to_string(),
            measured,
            bound,
            stderr,
            tolerance,
            pass: check.passes(measured, bound, tolerance),
        }
    }

    pub fn skipped(experiment: &str, n: Option<usize>, mut params: Value, reason: &str) -> Self {
        if let Value::Object(m) = &mut params {
            m.insert("skipped".into(), json!(reason));
        }
        Row::new(experiment, n, params, f64::NAN, None, 0.0, 0.0, Check::Skipped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

pub fn all_pass(rows: &[Row]) -> bool {
    rows.iter().all(|r| r.pass)
}

/// Serializes `rows`; identical rows give identical bytes.
pub fn encode(rows: &[Row], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(rows)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if rows.is_empty() {
                w.write_record(["experiment", "n", "params_json", "measured", "bound", "stderr", "tolerance", "pass"])?;
            }
            for r in rows {
                w.serialize(r)?;
            }
            Ok(w.into_inner()?)
        }
    }
}

/// One summary line per row.
pub fn summarize(rows: &[Row], out: &mut impl Write) -> std::io::Result<()> {
    for r in rows {
        let bound = r.bound.map_or("n/a".to_string(), |b| format!("{b:.6e}"));
        writeln!(
            out,
            "{} {:<18} measured={:.6e} bound={} stderr={:.2e} {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.experiment,
            r.measured,
            bound,
            r.stderr,
            r.params_json
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_compare_in_the_right_direction() {
        let p = Value::Null;
        assert!(Row::new("x", None, p.clone(), 0.3, Some(0.25), 0.0, 0.1, Check::AtMost).pass);
        assert!(!Row::new("x", None, p.clone(), 0.4, Some(0.25), 0.0, 0.1, Check::AtMost).pass);
        assert!(Row::new("x", None, p.clone(), 0.2, Some(0.25), 0.0, 0.1, Check::AtLeast).pass);
        assert!(!Row::new("x", None, p.clone(), 0.3, Some(0.25), 0.0, 0.1, Check::Exceeds).pass);
        assert!(Row::new("x", None, p.clone(), 0.4, Some(0.25), 0.0, 0.1, Check::Exceeds).pass);
        assert!(Row::new("x", None, p.clone(), 1.0, Some(1.0 + 1e-12), 0.0, 1e-10, Check::Equals).pass);
        assert!(Row::new("x", None, p.clone(), 1.0, None, 0.0, 0.0, Check::Report).pass);
        assert!(!Row::new("x", None, p, 1.0, None, 0.0, 0.0, Check::AtMost).pass);
    }

    #[test]
    fn csv_has_fixed_columns_and_na_bound() {
        let rows = vec![Row::new("tracenorm", Some(3), json!({"M": 2}), 2.0, None, 0.0, 0.0, Check::Report)];
        let text = String::from_utf8(encode(&rows, Format::Csv).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "experiment,n,params_json,measured,bound,stderr,tolerance,pass");
        assert!(lines.next().unwrap().contains(",n/a,"));
        let empty = String::from_utf8(encode(&[], Format::Csv).unwrap()).unwrap();
        assert!(empty.starts_with("experiment,n,"));
    }

    #[test]
    fn json_round_trips_params() {
        let rows = vec![Row::new("binom", Some(1), json!({"t1": 2}), 0.0, Some(1e-9), 0.0, 0.0, Check::AtMost)];
        let v: Value = serde_json::from_slice(&encode(&rows, Format::Json).unwrap()).unwrap();
        let p: Value = serde_json::from_str(v[0]["params_json"].as_str().unwrap()).unwrap();
        assert_eq!(p["t1"], 2);
        assert_eq!(p["check"], "at_most");
    }

    #[test]
    fn skipped_rows_pass_and_record_reason() {
        let r = Row::skipped("types", Some(5), json!({"t": 4}), "too big");
        assert!(r.pass);
        assert!(r.params_json.contains("too big"));
    }
}
