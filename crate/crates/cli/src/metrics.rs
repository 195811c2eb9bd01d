//! Accuracy and consistency metrics of a run against truth.

use std::fmt::Write as _;
use std::path::Path;

use mukf_core::logio::results::{align_truth, truth_diff, EstimateRow};
use mukf_core::sim::TruthRecord;

use crate::error::CliError;

/// One aligned output step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSample {
    pub t: f64,
    /// m
    pub horizontal_error: f64,
    /// m
    pub horizontal_2sigma: f64,
    /// Position NEES.
    pub nees: f64,
    pub heading_error_deg: f64,
    pub heading_sigma_deg: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub label: String,
    /// Time of the last aligned step, s.
    pub final_t: f64,
    /// m
    pub final_horizontal: f64,
    /// Horizontal truth path up to `final_t`, m.
    pub path_length: f64,
    /// `100 · final_horizontal / path_length`
    pub percent: f64,
    /// Filter's horizontal 2σ at the last step, m.
    pub final_2sigma: f64,
    pub final_heading_error_deg: f64,
    pub final_heading_sigma_deg: f64,
    pub mean_nees: f64,
    /// Fraction of steps with the horizontal error inside the 2σ bound.
    pub envelope_fraction: f64,
    pub series: Vec<MetricSample>,
    /// Filter steps per wall-clock second, when known.
    pub throughput: Option<f64>,
}

impl RunMetrics {
    pub fn within_2sigma(&self) -> bool {
        self.final_horizontal <= self.final_2sigma
    }

    /// Fraction of steps at or after `after` whose horizontal error is
    /// within `k` horizontal standard deviations.
    pub fn envelope(&self, k: f64, after: f64) -> f64 {
        let tail: Vec<_> = self.series.iter().filter(|s| s.t >= after).collect();
        if tail.is_empty() {
            return 0.0;
        }
        let inside = tail
            .iter()
            .filter(|s| s.horizontal_error <= 0.5 * k * s.horizontal_2sigma)
            .count();
        inside as f64 / tail.len() as f64
    }

    /// Last aligned step at or before `t`.
    pub fn at(&self, t: f64) -> Option<&MetricSample> {
        self.series.iter().take_while(|s| s.t <= t + 1e-9).last()
    }
}

/// Horizontal length of the truth track up to and including time `until`.
pub fn path_length(truth: &[TruthRecord], until: f64) -> f64 {
    truth
        .windows(2)
        .take_while(|w| w[1].t <= until + 1e-9)
        .map(|w| (w[1].state.position.xy() - w[0].state.position.xy()).norm())
        .sum()
}

/// Aligns every row with the nearest truth record within `tol` seconds.
/// Rows without a partner are skipped; fewer than half aligning is an error.
pub fn evaluate(
    label: &str,
    rows: &[EstimateRow],
    truth: &[TruthRecord],
    tol: f64,
) -> Result<RunMetrics, CliError> {
    let mut series = Vec::with_capacity(rows.len());
    for r in rows {
        let Some(tr) = align_truth(truth, r.t, tol) else {
            continue;
        };
        let d = truth_diff(r, &tr.state);
        series.push(MetricSample {
            t: r.t,
            horizontal_error: d.horizontal,
            horizontal_2sigma: r.horizontal_2sigma,
            nees: d.nees,
            heading_error_deg: d.heading.to_degrees(),
            heading_sigma_deg: r.heading_sigma.to_degrees(),
        });
    }
    if series.is_empty() || 2 * series.len() < rows.len() {
        return Err(CliError::TimeBaseMismatch(format!(
            "{label}: {} of {} rows within {tol} s of a truth record",
            series.len(),
            rows.len()
        )));
    }
    let last = *series.last().unwrap();
    let path = path_length(truth, last.t);
    let nees: Vec<f64> = series.iter().map(|s| s.nees).filter(|x| x.is_finite()).collect();
    let mean_nees = if nees.is_empty() {
        f64::NAN
    } else {
        nees.iter().sum::<f64>() / nees.len() as f64
    };
    let mut m = RunMetrics {
        label: label.to_string(),
        final_t: last.t,
        final_horizontal: last.horizontal_error,
        path_length: path,
        percent: if path > 0.0 {
            100.0 * last.horizontal_error / path
        } else {
            f64::NAN
        },
        final_2sigma: last.horizontal_2sigma,
        final_heading_error_deg: last.heading_error_deg,
        final_heading_sigma_deg: last.heading_sigma_deg,
        mean_nees,
        envelope_fraction: 0.0,
        series,
        throughput: None,
    };
    m.envelope_fraction = m.envelope(2.0, f64::NEG_INFINITY);
    Ok(m)
}

pub const TABLE_COLUMNS: [&str; 12] = [
    "label",
    "final_t",
    "final_horizontal_m",
    "path_length_m",
    "percent",
    "final_2sigma_m",
    "within_2sigma",
    "final_heading_error_deg",
    "final_heading_sigma_deg",
    "mean_nees",
    "envelope_2sigma",
    "throughput_steps_per_s",
];

fn table_row(m: &RunMetrics) -> Vec<String> {
    vec![
        m.label.clone(),
        format!("{:.3}", m.final_t),
        format!("{:.4}", m.final_horizontal),
        format!("{:.3}", m.path_length),
        format!("{:.4}", m.percent),
        format!("{:.4}", m.final_2sigma),
        (m.within_2sigma() as u8).to_string(),
        format!("{:.4}", m.final_heading_error_deg),
        format!("{:.4}", m.final_heading_sigma_deg),
        format!("{:.4}", m.mean_nees),
        format!("{:.4}", m.envelope_fraction),
        m.throughput.map_or(String::new(), |x| format!("{x:.1}")),
    ]
}

/// Machine-readable summary, one CSV row per run.
pub fn table_csv(metrics: &[RunMetrics]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_COLUMNS).expect("in-memory write");
    for m in metrics {
        w.write_record(table_row(m)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("ASCII output")
}

/// Side-by-side comparison: one column per run.
pub fn comparison_table(metrics: &[RunMetrics]) -> String {
    let rows: [(&str, fn(&RunMetrics) -> String); 5] = [
        ("Filter position difference from truth (m)", |m| {
            format!("{:.1}", m.final_horizontal)
        }),
        ("Estimated uncertainty (2 sigma, m)", |m| format!("{:.1}", m.final_2sigma)),
        ("Difference in percent of distance (%)", |m| format!("{:.2}", m.percent)),
        ("Difference within 2 sigma", |m| {
            if m.within_2sigma() { "yes" } else { "no" }.to_string()
        }),
        ("Time (s)", |m| format!("{:.0}", m.final_t)),
    ];
    let head = rows.iter().map(|(h, _)| h.len()).max().unwrap_or(0);
    let width = metrics
        .iter()
        .map(|m| m.label.len())
        .max()
        .unwrap_or(0)
        .max(8);
    let mut out = format!("{:head$}", "");
    for m in metrics {
        let _ = write!(out, "  {:>width$}", m.label);
    }
    out.push('\n');
    for (name, f) in rows {
        let _ = write!(out, "{name:head$}");
        for m in metrics {
            let _ = write!(out, "  {:>width$}", f(m));
        }
        out.push('\n');
    }
    out
}

/// Per-step series of one run as CSV.
pub fn write_series(path: &Path, m: &RunMetrics) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::io(path, std::io::Error::other(e.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record([
        "t",
        "horizontal_error",
        "horizontal_2sigma",
        "nees_pos",
        "heading_error_deg",
        "heading_sigma_deg",
    ])
    .map_err(err)?;
    for s in &m.series {
        w.write_record([
            s.t.to_string(),
            s.horizontal_error.to_string(),
            s.horizontal_2sigma.to_string(),
            s.nees.to_string(),
            s.heading_error_deg.to_string(),
            s.heading_sigma_deg.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mukf_core::manifold::NAV_DIM;
    use mukf_core::NavState;
    use nalgebra::Vector3;

    fn truth_line(n: usize, dt: f64, speed: f64) -> Vec<TruthRecord> {
        (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let mut s = NavState::default();
                s.position = Vector3::new(speed * t, 0.0, 5.0);
                TruthRecord {
                    t,
                    state: s,
                    omega: Vector3::zeros(),
                }
            })
            .collect()
    }

    fn row_at(tr: &TruthRecord, offset: Vector3<f64>, sigma: f64) -> EstimateRow {
        let mut state = tr.state.clone();
        state.position += offset;
        let v = sigma * sigma;
        EstimateRow {
            t: tr.t,
            state,
            sigmas: vec![sigma; NAV_DIM],
            pos_cov: [v, 0.0, 0.0, v, 0.0, v],
            heading_sigma: 0.01,
            horizontal_2sigma: 2.0 * (2.0 * v).sqrt(),
        }
    }

    #[test]
    fn identical_results_give_zero() {
        let truth = truth_line(101, 0.1, 1.0);
        let rows: Vec<_> = truth.iter().map(|t| row_at(t, Vector3::zeros(), 1.0)).collect();
        let m = evaluate("x", &rows, &truth, 0.01).unwrap();
        assert_eq!(m.final_horizontal, 0.0);
        assert_eq!(m.percent, 0.0);
        assert_eq!(m.mean_nees, 0.0);
        assert_eq!(m.envelope_fraction, 1.0);
        assert!((m.path_length - 10.0).abs() < 1e-9);
    }

    #[test]
    fn three_four_five_offset() {
        let truth = truth_line(11, 0.1, 1.0);
        let mut rows: Vec<_> = truth.iter().map(|t| row_at(t, Vector3::zeros(), 1.0)).collect();
        *rows.last_mut().unwrap() = row_at(truth.last().unwrap(), Vector3::new(3.0, 4.0, 0.0), 1.0);
        let m = evaluate("x", &rows, &truth, 0.01).unwrap();
        assert!((m.final_horizontal - 5.0).abs() < 1e-12);
        assert!((m.percent - 500.0).abs() < 1e-9);
        assert!(!m.within_2sigma());
        assert!((m.envelope_fraction - 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_time_base_is_rejected() {
        let truth = truth_line(11, 0.1, 1.0);
        let mut rows: Vec<_> = truth.iter().map(|t| row_at(t, Vector3::zeros(), 1.0)).collect();
        for r in &mut rows {
            r.t += 0.05;
        }
        assert!(matches!(
            evaluate("x", &rows, &truth, 0.01),
            Err(CliError::TimeBaseMismatch(_))
        ));
        assert!(matches!(
            evaluate("x", &[], &truth, 0.01),
            Err(CliError::TimeBaseMismatch(_))
        ));
    }

    #[test]
    fn tables_have_one_line_per_run() {
        let truth = truth_line(11, 0.1, 1.0);
        let rows: Vec<_> = truth.iter().map(|t| row_at(t, Vector3::zeros(), 1.0)).collect();
        let a = evaluate("a", &rows, &truth, 0.01).unwrap();
        let b = evaluate("b", &rows, &truth, 0.01).unwrap();
        let csv = table_csv(&[a.clone(), b.clone()]);
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), TABLE_COLUMNS.len());
        let cmp = comparison_table(&[a, b]);
        assert!(cmp.lines().next().unwrap().trim_end().ends_with('b'));
    }
}
