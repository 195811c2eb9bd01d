//! CSV output of filter runs and simulator truth.
//!
//! Every state is written with the same 44 columns (see [`STATE_COLUMNS`]):
//! position, attitude quaternion, velocity, acceleration, the three 2×3
//! parameter blocks row-major, both currents, gravity and the three biases.

use std::path::Path;

use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};

use crate::error::LogError;
use crate::manifold::{idx, NavState, Rotation, NAV_DIM};
use crate::nav::models::{euler_from_attitude, heading};
use crate::sensors::SensorKind;
use crate::sim::TruthRecord;

pub const STATE_COLUMNS: [&str; 44] = [
    "pos_n", "pos_e", "pos_d", "q_w", "q_x", "q_y", "q_z", "vel_n", "vel_e", "vel_d", "acc_n",
    "acc_e", "acc_d", "m_uu", "m_uv", "m_ur", "m_vu", "m_vv", "m_vr", "dl_uu", "dl_uv", "dl_ur",
    "dl_vu", "dl_vv", "dl_vr", "dq_uu", "dq_uv", "dq_ur", "dq_vu", "dq_vv", "dq_vr", "cv_n",
    "cv_e", "cb_n", "cb_e", "gravity", "bg_x", "bg_y", "bg_z", "ba_x", "ba_y", "ba_z", "bc_x",
    "bc_y",
];

/// Names of the tangent-space coordinates, used for the σ columns.
pub fn tangent_names() -> Vec<String> {
    let sub = ["uu", "uv", "ur", "vu", "vv", "vr"];
    let mut out = Vec::with_capacity(NAV_DIM);
    for (block, range) in idx::BLOCKS.iter() {
        let n = range.len();
        for i in 0..n {
            let suffix = match (*block, n) {
                ("pos" | "vel" | "acc", _) => ["n", "e", "d"][i].to_string(),
                (_, 6) => sub[i].to_string(),
                (_, 3) => ["x", "y", "z"][i].to_string(),
                ("cv" | "cb", 2) => ["n", "e"][i].to_string(),
                (_, 2) => ["x", "y"][i].to_string(),
                _ => String::new(),
            };
            if suffix.is_empty() {
                out.push(block.to_string());
            } else {
                out.push(format!("{block}_{suffix}"));
            }
        }
    }
    out
}

pub fn state_values(s: &NavState) -> Vec<f64> {
    let q = s.attitude.quaternion();
    let mut v = Vec::with_capacity(44);
    v.extend_from_slice(s.position.as_slice());
    v.extend_from_slice(&[q.w, q.i, q.j, q.k]);
    v.extend_from_slice(s.velocity.as_slice());
    v.extend_from_slice(s.acceleration.as_slice());
    for m in [&s.inertia_sub, &s.lin_damping_sub, &s.quad_damping_sub] {
        for r in 0..2 {
            for c in 0..3 {
                v.push(m[(r, c)]);
            }
        }
    }
    v.extend_from_slice(s.current_vehicle.as_slice());
    v.extend_from_slice(s.current_bottom.as_slice());
    v.push(s.gravity);
    v.extend_from_slice(s.gyro_bias.as_slice());
    v.extend_from_slice(s.accel_bias.as_slice());
    v.extend_from_slice(s.adcp_bias.as_slice());
    v
}

pub fn state_from_values(v: &[f64]) -> NavState {
    let sub = |o: usize| Matrix2x3::from_fn(|r, c| v[o + 3 * r + c]);
    NavState {
        position: Vector3::new(v[0], v[1], v[2]),
        attitude: Rotation::from_wxyz(v[3], v[4], v[5], v[6]),
        velocity: Vector3::new(v[7], v[8], v[9]),
        acceleration: Vector3::new(v[10], v[11], v[12]),
        inertia_sub: sub(13),
        lin_damping_sub: sub(19),
        quad_damping_sub: sub(25),
        current_vehicle: Vector2::new(v[31], v[32]),
        current_bottom: Vector2::new(v[33], v[34]),
        gravity: v[35],
        gyro_bias: Vector3::new(v[36], v[37], v[38]),
        accel_bias: Vector3::new(v[39], v[40], v[41]),
        adcp_bias: Vector2::new(v[42], v[43]),
    }
}

/// One output step of a filter run.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRow {
    pub t: f64,
    pub state: NavState,
    /// Marginal σ of each tangent coordinate.
    pub sigmas: Vec<f64>,
    /// Position covariance `[nn, ne, nd, ee, ed, dd]`.
    pub pos_cov: [f64; 6],
    /// rad
    pub heading_sigma: f64,
    /// m
    pub horizontal_2sigma: f64,
}

impl EstimateRow {
    pub fn position_covariance(&self) -> Matrix3<f64> {
        let c = &self.pos_cov;
        Matrix3::new(c[0], c[1], c[2], c[1], c[3], c[4], c[2], c[4], c[5])
    }
}

/// Estimate minus truth at one output step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthDiff {
    pub position: Vector3<f64>,
    pub horizontal: f64,
    /// rad, wrapped to (−π, π]
    pub heading: f64,
    /// Position NEES.
    pub nees: f64,
}

pub fn wrap_angle(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let x = (a + std::f64::consts::PI).rem_euclid(t) - std::f64::consts::PI;
    if x == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        x
    }
}

pub fn truth_diff(row: &EstimateRow, truth: &NavState) -> TruthDiff {
    let e = row.state.position - truth.position;
    let nees = row
        .position_covariance()
        .try_inverse()
        .map(|inv| (e.transpose() * inv * e)[0])
        .unwrap_or(f64::NAN);
    TruthDiff {
        position: e,
        horizontal: e.xy().norm(),
        heading: wrap_angle(heading(&row.state.attitude) - heading(&truth.attitude)),
        nees,
    }
}

/// Truth record nearest to `t` if one lies within `tol`. `truth` must be
/// sorted by time.
pub fn align_truth(truth: &[TruthRecord], t: f64, tol: f64) -> Option<&TruthRecord> {
    let i = truth.partition_point(|r| r.t < t);
    let mut best: Option<&TruthRecord> = None;
    for j in [i.wrapping_sub(1), i] {
        if let Some(r) = truth.get(j) {
            if (r.t - t).abs() <= tol && best.is_none_or(|b| (r.t - t).abs() < (b.t - t).abs()) {
                best = Some(r);
            }
        }
    }
    best
}

pub const DIFF_COLUMNS: [&str; 6] = [
    "err_n",
    "err_e",
    "err_d",
    "horizontal_error",
    "heading_error_deg",
    "nees_pos",
];

/// Full header of the results file.
pub fn results_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(STATE_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(["roll_deg", "pitch_deg", "heading_deg"].map(String::from));
    h.extend(tangent_names().into_iter().map(|n| format!("sigma_{n}")));
    h.extend(["p_nn", "p_ne", "p_nd", "p_ee", "p_ed", "p_dd"].map(String::from));
    h.extend(["heading_sigma_deg", "horizontal_2sigma"].map(String::from));
    h.extend(DIFF_COLUMNS.iter().map(|s| s.to_string()));
    h
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> LogError {
    LogError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn create_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, LogError> {
    csv::Writer::from_path(path).map_err(|e| io_err(path, e))
}

/// Writes one row per estimate. Difference columns are filled where a truth
/// record lies within `tol` seconds and left empty otherwise.
pub fn write_results(
    path: &Path,
    rows: &[EstimateRow],
    truth: Option<&[TruthRecord]>,
    tol: f64,
) -> Result<(), LogError> {
    let mut w = create_writer(path)?;
    w.write_record(results_header()).map_err(|e| io_err(path, e))?;
    for r in rows {
        let (roll, pitch, _) = euler_from_attitude(&r.state.attitude);
        let mut rec: Vec<String> = vec![r.t.to_string()];
        rec.extend(state_values(&r.state).iter().map(|x| x.to_string()));
        rec.extend(
            [roll, pitch, heading(&r.state.attitude)]
                .iter()
                .map(|x| x.to_degrees().to_string()),
        );
        rec.extend(r.sigmas.iter().map(|x| x.to_string()));
        rec.extend(r.pos_cov.iter().map(|x| x.to_string()));
        rec.push(r.heading_sigma.to_degrees().to_string());
        rec.push(r.horizontal_2sigma.to_string());
        match truth.and_then(|tr| align_truth(tr, r.t, tol)) {
            Some(tr) => {
                let d = truth_diff(r, &tr.state);
                rec.extend(
                    [
                        d.position.x,
                        d.position.y,
                        d.position.z,
                        d.horizontal,
                        d.heading.to_degrees(),
                        d.nees,
                    ]
                    .iter()
                    .map(|x| x.to_string()),
                );
            }
            None => rec.extend(std::iter::repeat_n(String::new(), DIFF_COLUMNS.len())),
        }
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> LogError {
    LogError::MalformedRecord {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn read_table(path: &Path, expected: &[String]) -> Result<Vec<(usize, Vec<String>)>, LogError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .map(String::from)
        .collect();
    if header != expected {
        return Err(LogError::SchemaMismatch {
            path: path.to_path_buf(),
            found: header.join(","),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| malformed(path, line, e.to_string()))?;
        out.push((line, rec.iter().map(String::from).collect()));
    }
    Ok(out)
}

fn parse_cells(path: &Path, line: usize, cells: &[String]) -> Result<Vec<f64>, LogError> {
    cells
        .iter()
        .map(|c| {
            c.parse::<f64>()
                .map_err(|_| malformed(path, line, format!("'{c}' is not a number")))
        })
        .collect()
}

/// Reads back the estimate rows of a results file; difference columns are
/// ignored.
pub fn read_results(path: &Path) -> Result<Vec<EstimateRow>, LogError> {
    let header = results_header();
    let n_fixed = header.len() - DIFF_COLUMNS.len();
    let mut out = Vec::new();
    for (line, rec) in read_table(path, &header)? {
        let v = parse_cells(path, line, &rec[..n_fixed])?;
        let t = v[0];
        let state = state_from_values(&v[1..45]);
        let o = 45 + 3;
        let sigmas = v[o..o + NAV_DIM].to_vec();
        let o = o + NAV_DIM;
        let mut pos_cov = [0.0; 6];
        pos_cov.copy_from_slice(&v[o..o + 6]);
        out.push(EstimateRow {
            t,
            state,
            sigmas,
            pos_cov,
            heading_sigma: v[o + 6].to_radians(),
            horizontal_2sigma: v[o + 7],
        });
    }
    Ok(out)
}

pub fn truth_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(STATE_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(["w_x", "w_y", "w_z"].map(String::from));
    h
}

pub fn write_truth(path: &Path, truth: &[TruthRecord]) -> Result<(), LogError> {
    let mut w = create_writer(path)?;
    w.write_record(truth_header()).map_err(|e| io_err(path, e))?;
    for r in truth {
        let mut rec = vec![r.t.to_string()];
        rec.extend(state_values(&r.state).iter().map(|x| x.to_string()));
        rec.extend(r.omega.iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRecord>, LogError> {
    let mut out: Vec<TruthRecord> = Vec::new();
    for (line, rec) in read_table(path, &truth_header())? {
        let v = parse_cells(path, line, &rec)?;
        if let Some(prev) = out.last() {
            if v[0] < prev.t {
                return Err(LogError::NonMonotoneTimestamp {
                    path: path.to_path_buf(),
                    line,
                    t: v[0],
                    prev: prev.t,
                });
            }
        }
        out.push(TruthRecord {
            t: v[0],
            state: state_from_values(&v[1..45]),
            omega: Vector3::new(v[45], v[46], v[47]),
        });
    }
    Ok(out)
}

/// Outcome of one measurement update.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateRecord {
    pub t: f64,
    pub kind: SensorKind,
    pub dim: usize,
    pub mahalanobis_sq: f64,
    /// Gate threshold; infinite when gating is off.
    pub threshold: f64,
    pub accepted: bool,
}

pub const UPDATE_COLUMNS: [&str; 6] = ["t", "kind", "dim", "mahalanobis_sq", "threshold", "accepted"];

pub fn write_updates(path: &Path, updates: &[UpdateRecord]) -> Result<(), LogError> {
    let mut w = create_writer(path)?;
    w.write_record(UPDATE_COLUMNS).map_err(|e| io_err(path, e))?;
    for u in updates {
        w.write_record([
            u.t.to_string(),
            u.kind.tag().to_string(),
            u.dim.to_string(),
            u.mahalanobis_sq.to_string(),
            u.threshold.to_string(),
            (u.accepted as u8).to_string(),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
