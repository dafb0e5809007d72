//! Report rows, convergence rates and CSV output.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Int(i64),
    Float(f64),
}

impl std::fmt::Display for SweepValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepValue::Int(v) => write!(f, "{v}"),
            SweepValue::Float(v) => f.write_str(&sci(*v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// `ml`, `l_max`, `eps` or `n_parts`.
    pub sweep_name: String,
    pub sweep_value: SweepValue,
    /// Rows are grouped by series for rate computation (empty for single
    /// series experiments).
    pub series: String,
    /// Free DOFs of the solved system.
    pub n_dofs: usize,
    pub l2_error: f64,
    pub rate: Option<f64>,
    pub t_assembly: f64,
    pub t_total: f64,
    /// Experiment specific columns, emitted after the fixed ones.
    pub extras: Vec<(String, String)>,
}

impl ReportRow {
    pub fn new(sweep_name: &str, sweep_value: SweepValue, n_dofs: usize, l2_error: f64) -> Self {
        Self {
            sweep_name: sweep_name.to_string(),
            sweep_value,
            series: String::new(),
            n_dofs,
            l2_error,
            rate: None,
            t_assembly: 0.0,
            t_total: 0.0,
            extras: Vec::new(),
        }
    }

    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extras.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Six significant digits in scientific notation.
pub fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

/// ln(E_coarse / E_fine) / ln 2; `None` unless both errors are positive.
pub fn compute_rate(e_coarse: f64, e_fine: f64) -> Option<f64> {
    (e_coarse > 0.0 && e_fine > 0.0).then(|| (e_coarse / e_fine).ln() / std::f64::consts::LN_2)
}

/// The error as it appears in the CSV.
pub fn emitted(v: f64) -> f64 {
    sci(v).parse().expect("formatted float parses")
}

/// Fills `rate` between consecutive rows of the same sweep and series, from
/// the emitted (rounded) errors so the CSV is self-consistent.
pub fn attach_rates(rows: &mut [ReportRow]) {
    for k in 0..rows.len() {
        rows[k].rate = None;
        if k > 0 && rows[k - 1].sweep_name == rows[k].sweep_name && rows[k - 1].series == rows[k].series {
            rows[k].rate = compute_rate(emitted(rows[k - 1].l2_error), emitted(rows[k].l2_error));
        }
    }
}

pub const FIXED_COLUMNS: [&str; 7] =
    ["sweep_name", "sweep_value", "n_dofs", "l2_error", "rate", "t_assembly_s", "t_total_s"];

/// Writes the header and one record per row. Extra columns are the union of
/// the rows' extras in first-seen order; a series column is added when any
/// row has one.
pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no rows to write".into()));
    }
    let with_series = rows.iter().any(|r| !r.series.is_empty());
    let mut extra_keys: Vec<&str> = Vec::new();
    for r in rows {
        for (k, _) in &r.extras {
            if !extra_keys.contains(&k.as_str()) {
                extra_keys.push(k);
            }
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FIXED_COLUMNS.to_vec();
    if with_series {
        header.push("series");
    }
    header.extend(&extra_keys);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.n_dofs.to_string(),
            sci(r.l2_error),
            r.rate.map(sci).unwrap_or_default(),
            sci(r.t_assembly),
            sci(r.t_total),
        ];
        if with_series {
            rec.push(r.series.clone());
        }
        for k in &extra_keys {
            rec.push(r.extra(k).unwrap_or_default().to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ReportRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

/// Human-readable table of the rows.
pub fn format_table(rows: &[ReportRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let rate = r.rate.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
        let series = if r.series.is_empty() { String::new() } else { format!("[{}] ", r.series) };
        s.push_str(&format!(
            "{series}{}={} dofs={} err={} rate={} t_a={:.2}s t_t={:.2}s",
            r.sweep_name,
            r.sweep_value,
            r.n_dofs,
            sci(r.l2_error),
            rate,
            r.t_assembly,
            r.t_total
        ));
        for (k, v) in &r.extras {
            s.push_str(&format!(" {k}={v}"));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        let p = compute_rate(4.363e-3, 1.094e-3).unwrap();
        assert!((p - 1.996).abs() < 5e-4, "{p}");
        assert_eq!(compute_rate(2.5e-3, 2.5e-3), Some(0.0));
        assert!((compute_rate(1.0, 0.125).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(compute_rate(0.0, 1.0), None);
        assert_eq!(compute_rate(1.0, -1.0), None);
    }

    fn sample() -> Vec<ReportRow> {
        let mut rows = vec![
            ReportRow::new("ml", SweepValue::Int(2), 77, 4.363e-3),
            ReportRow::new("ml", SweepValue::Int(3), 345, 1.094e-3),
        ];
        attach_rates(&mut rows);
        rows
    }

    #[test]
    fn single_row_file_has_two_lines() {
        let mut buf = Vec::new();
        write_csv(&sample()[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), FIXED_COLUMNS.join(","));
        // Rate is blank on the first row.
        assert_eq!(text.lines().nth(1).unwrap(), "ml,2,77,4.36300e-3,,0.00000e0,0.00000e0");
    }

    #[test]
    fn rates_reproduce_from_csv() {
        let mut buf = Vec::new();
        write_csv(&sample(), &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let recs: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        let e0: f64 = recs[0][3].parse().unwrap();
        let e1: f64 = recs[1][3].parse().unwrap();
        assert_eq!(sci(compute_rate(e0, e1).unwrap()), &recs[1][4]);
        assert_eq!(&recs[0][4], "");
    }

    #[test]
    fn series_restart_rates() {
        let mut rows = sample();
        let mut other = ReportRow::new("ml", SweepValue::Int(2), 77, 1e-3);
        other.series = "b".into();
        other.extras.push(("eps".into(), sci(0.025)));
        rows.push(other);
        attach_rates(&mut rows);
        assert!(rows[1].rate.is_some());
        assert!(rows[2].rate.is_none());
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().ends_with(",series,eps"));
        assert!(text.lines().nth(1).unwrap().ends_with(",,"));
    }

    #[test]
    fn empty_and_unwritable() {
        assert!(write_csv(&[], Vec::new()).is_err());
        assert!(emit_csv(&sample(), Path::new("/nonexistent-dir/x.csv")).is_err());
    }
}
