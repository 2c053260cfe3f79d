//! CSV (RFC 4180) and text report writers. Floats are printed with 17
//! significant digits so re-runs are byte-identical and lossless.

use crate::convexity::ConditionReport;
use std::fmt::Write as _;
use std::path::Path;

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

fn quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Minimal RFC 4180 writer: header row mandatory, CRLF line endings.
pub struct Csv {
    buf: String,
    cols: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.iter().map(|h| quote(h)).collect::<Vec<_>>().join(","));
        buf.push_str("\r\n");
        Csv { buf, cols: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.cols, "column count mismatch");
        self.buf
            .push_str(&fields.iter().map(|f| quote(f)).collect::<Vec<_>>().join(","));
        self.buf.push_str("\r\n");
    }

    pub fn write(&self, path: &Path) -> crate::error::Result<()> {
        std::fs::write(path, self.buf.as_bytes())?;
        Ok(())
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// conditions.csv: one row per condition with the worst witness.
pub fn write_conditions_csv(path: &Path, reports: &[ConditionReport]) -> crate::error::Result<()> {
    let mut csv = Csv::new(&[
        "id", "passed", "margin", "samples", "worst_x", "worst_y", "worst_t", "worst_value",
    ]);
    for r in reports {
        let w = r.worst();
        csv.row(&[
            r.condition_id.clone(),
            if r.indeterminate {
                "indeterminate".into()
            } else {
                r.passed.to_string()
            },
            fmt_f64(r.margin),
            r.samples.to_string(),
            w.map(|w| fmt_f64(w.x.x)).unwrap_or_default(),
            w.map(|w| fmt_f64(w.x.y)).unwrap_or_default(),
            w.and_then(|w| w.t).map(fmt_f64).unwrap_or_default(),
            w.map(|w| fmt_f64(w.value)).unwrap_or_default(),
        ]);
    }
    csv.write(path)
}

/// Detailed text block per condition (margins, extras, witness list).
pub fn write_conditions_text(path: &Path, reports: &[ConditionReport]) -> crate::error::Result<()> {
    let mut out = String::new();
    for r in reports {
        let state = if r.indeterminate {
            "INDETERMINATE"
        } else if r.passed {
            "PASS"
        } else {
            "FAIL"
        };
        let _ = writeln!(out, "[{}] {}", state, r.condition_id);
        let _ = writeln!(out, "  margin = {} (equality tol {})", fmt_f64(r.margin), fmt_f64(r.equality_tol));
        let _ = writeln!(out, "  samples = {}", r.samples);
        for (k, v) in &r.extras {
            let _ = writeln!(out, "  {k} = {}", fmt_f64(*v));
        }
        for w in &r.witnesses {
            let _ = writeln!(
                out,
                "  witness x=({}, {}) t={} value={}",
                fmt_f64(w.x.x),
                fmt_f64(w.x.y),
                w.t.map(fmt_f64).unwrap_or_else(|| "-".into()),
                fmt_f64(w.value)
            );
        }
        out.push('\n');
    }
    std::fs::write(path, out.as_bytes())?;
    Ok(())
}

/// Generic key/value report.csv.
pub struct KeyValueReport {
    rows: Vec<(String, String)>,
}

impl KeyValueReport {
    pub fn new() -> Self {
        KeyValueReport { rows: Vec::new() }
    }

    pub fn push(&mut self, key: impl Into<String>, value: f64) {
        self.rows.push((key.into(), fmt_f64(value)));
    }

    pub fn push_str(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.rows.push((key.into(), value.into()));
    }

    pub fn write(&self, path: &Path) -> crate::error::Result<()> {
        let mut csv = Csv::new(&["key", "value"]);
        for (k, v) in &self.rows {
            csv.row(&[k.clone(), v.clone()]);
        }
        csv.write(path)
    }
}

impl Default for KeyValueReport {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_lossless() {
        for &v in &[std::f64::consts::PI, 1.0 / 3.0, -2.5e-17, 6.02e23] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn csv_quotes_special_fields() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&["plain".into(), "with,comma".into()]);
        csv.row(&["with\"quote".into(), "x".into()]);
        let s = csv.into_string();
        assert!(s.contains("\"with,comma\""));
        assert!(s.contains("\"with\"\"quote\""));
        assert!(s.ends_with("\r\n"));
    }
}
