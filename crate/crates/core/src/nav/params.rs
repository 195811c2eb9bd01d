//! Vehicle, Earth and stochastic-process parameters.

use nalgebra::{DMatrix, Matrix2x3, Matrix6, Vector3};
use serde::{Deserialize, Serialize};

/// Earth rotation rate, rad/s.
pub const EARTH_RATE: f64 = 7.292115e-5;

/// WGS-84 normal gravity at the equator, m/s².
pub const WGS84_GAMMA_E: f64 = 9.7803253359;
/// Somigliana constant `k = (b γ_p − a γ_e) / (a γ_e)`.
pub const WGS84_K: f64 = 0.00193185265241;
/// First eccentricity squared.
pub const WGS84_E2: f64 = 0.00669437999013;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeoConfig {
    /// Geodetic latitude, rad.
    pub latitude: f64,
    /// rad/s
    pub earth_rate: f64,
}

impl Default for GeoConfig {
    fn default() -> Self {
        GeoConfig {
            latitude: 0.0,
            earth_rate: EARTH_RATE,
        }
    }
}

impl GeoConfig {
    pub fn at_latitude(latitude: f64) -> Self {
        GeoConfig {
            latitude,
            ..Default::default()
        }
    }

    pub fn is_valid(&self) -> bool {
        self.latitude.is_finite() && self.latitude.abs() <= std::f64::consts::FRAC_PI_2
    }
}

/// Rows of the submatrices carried as filter states (surge, sway).
pub const SUB_ROWS: [usize; 2] = [0, 1];
/// Columns of the submatrices carried as filter states (u, v, r).
pub const SUB_COLS: [usize; 3] = [0, 1, 5];

/// Extracts rows {surge, sway} × columns {u, v, r} of a 6×6 matrix.
pub fn submatrix(m: &Matrix6<f64>) -> Matrix2x3<f64> {
    Matrix2x3::from_fn(|r, c| m[(SUB_ROWS[r], SUB_COLS[c])])
}

/// Writes a 2×3 block back into rows {surge, sway} × columns {u, v, r}.
pub fn override_submatrix(m: &Matrix6<f64>, sub: &Matrix2x3<f64>) -> Matrix6<f64> {
    let mut out = *m;
    for (r, &row) in SUB_ROWS.iter().enumerate() {
        for (c, &col) in SUB_COLS.iter().enumerate() {
            out[(row, col)] = sub[(r, c)];
        }
    }
    out
}

/// Rigid-body and hydrodynamic model of the vehicle. Body frame is x forward,
/// y left, z up; velocities are ordered `[u, v, w, p, q, r]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleParams {
    /// Inertia including added mass.
    pub mass: Matrix6<f64>,
    pub lin_damping: Matrix6<f64>,
    pub quad_damping: Matrix6<f64>,
    /// Weight, N.
    pub weight: f64,
    /// Buoyancy, N.
    pub buoyancy: f64,
    pub center_of_gravity: Vector3<f64>,
    pub center_of_buoyancy: Vector3<f64>,
    /// IMU position in the body frame.
    pub imu_lever: Vector3<f64>,
    /// DVL position relative to the IMU, body frame.
    pub dvl_lever: Vector3<f64>,
    /// 6×k map from thruster forces to body wrench.
    pub thruster_allocation: DMatrix<f64>,
}

impl VehicleParams {
    pub fn thruster_count(&self) -> usize {
        self.thruster_allocation.ncols()
    }

    /// Checks the structural invariants: symmetric positive-definite inertia,
    /// non-negative diagonal damping and an allocation reaching every
    /// actuated degree of freedom.
    pub fn validate(&self) -> Result<(), String> {
        let m = &self.mass;
        if (m - m.transpose()).abs().max() > 1e-9 * m.abs().max().max(1.0) {
            return Err("inertia matrix is not symmetric".into());
        }
        if m.cholesky().is_none() {
            return Err("inertia matrix is not positive definite".into());
        }
        for i in 0..6 {
            if self.lin_damping[(i, i)] < 0.0 || self.quad_damping[(i, i)] < 0.0 {
                return Err(format!("negative damping on axis {i}"));
            }
        }
        if self.thruster_allocation.nrows() != 6 {
            return Err("thruster allocation must have 6 rows".into());
        }
        let actuated = (0..6)
            .filter(|&r| self.thruster_allocation.row(r).iter().any(|x| x.abs() > 1e-12))
            .count();
        let rank = self.thruster_allocation.rank(1e-9);
        if rank < actuated {
            return Err(format!(
                "thruster allocation rank {rank} below {actuated} actuated DOFs"
            ));
        }
        Ok(())
    }

    /// Scales every matrix entry and scalar with per-parameter factors drawn
    /// by `factor` (called once per parameter). Geometry of the thrusters and
    /// sensor lever arms is left untouched.
    pub fn perturbed(&self, mut factor: impl FnMut() -> f64) -> VehicleParams {
        let mut out = self.clone();
        for i in 0..6 {
            for j in 0..6 {
                out.mass[(i, j)] = self.mass[(i, j)] * factor();
                out.lin_damping[(i, j)] = self.lin_damping[(i, j)] * factor();
                out.quad_damping[(i, j)] = self.quad_damping[(i, j)] * factor();
            }
        }
        out.mass = 0.5 * (out.mass + out.mass.transpose());
        // a common factor keeps the small weight/buoyancy difference meaningful
        let wb = factor();
        out.weight *= wb;
        out.buoyancy *= wb;
        let cg = factor();
        out.center_of_gravity *= cg;
        out.center_of_buoyancy *= cg;
        out
    }
}

impl Default for VehicleParams {
    /// A hovering-capable AUV of roughly 2 m length and 275 kg with six 60 N
    /// thrusters: two surge, two lateral, two vertical.
    fn default() -> Self {
        let rb_mass = 275.0;
        let g = 9.81;
        let mass = Matrix6::from_diagonal(&nalgebra::Vector6::new(
            rb_mass + 30.0,
            rb_mass + 200.0,
            rb_mass + 220.0,
            25.0,
            90.0,
            90.0,
        ));
        let lin_damping =
            Matrix6::from_diagonal(&nalgebra::Vector6::new(30.0, 80.0, 90.0, 30.0, 60.0, 50.0));
        let quad_damping =
            Matrix6::from_diagonal(&nalgebra::Vector6::new(60.0, 200.0, 220.0, 10.0, 40.0, 40.0));
        // columns: surge port, surge stbd, lateral fwd, lateral aft, vertical fwd, vertical aft
        let positions = [
            Vector3::new(-0.8, 0.3, 0.0),
            Vector3::new(-0.8, -0.3, 0.0),
            Vector3::new(0.7, 0.0, 0.0),
            Vector3::new(-0.7, 0.0, 0.0),
            Vector3::new(0.6, 0.0, 0.0),
            Vector3::new(-0.6, 0.0, 0.0),
        ];
        let directions = [
            Vector3::x(),
            Vector3::x(),
            Vector3::y(),
            Vector3::y(),
            Vector3::z(),
            Vector3::z(),
        ];
        let mut alloc = DMatrix::zeros(6, 6);
        for k in 0..6 {
            let f = directions[k];
            let t = positions[k].cross(&f);
            for i in 0..3 {
                alloc[(i, k)] = f[i];
                alloc[(3 + i, k)] = t[i];
            }
        }
        VehicleParams {
            mass,
            lin_damping,
            quad_damping,
            weight: rb_mass * g,
            buoyancy: rb_mass * g + 5.0,
            center_of_gravity: Vector3::zeros(),
            center_of_buoyancy: Vector3::new(0.0, 0.0, 0.05),
            imu_lever: Vector3::zeros(),
            dvl_lever: Vector3::new(-0.3, 0.0, -0.25),
            thruster_allocation: alloc,
        }
    }
}

/// First-order Gauss-Markov process `ḃ = −(b − b₀)/τ + ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovProcess {
    /// Time constant, s.
    pub tau: f64,
    /// Stationary standard deviation bound.
    pub sigma_drift: f64,
    /// Rate at which the driving noise is sampled, Hz.
    pub freq: f64,
}

impl MarkovProcess {
    pub fn new(tau: f64, sigma_drift: f64, freq: f64) -> Self {
        MarkovProcess {
            tau,
            sigma_drift,
            freq,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.tau > 0.0 && self.sigma_drift >= 0.0 && self.freq > 0.0
    }

    /// Per-sample driving noise standard deviation, `√(2 f σ² / τ)`.
    pub fn process_sigma(&self) -> f64 {
        (2.0 * self.freq * self.sigma_drift * self.sigma_drift / self.tau).sqrt()
    }

    /// Variance added over `dt`: the sampled noise has power spectral density
    /// `σ_b² / f`, so this is `σ_b² dt / f = 2 σ² dt / τ`.
    pub fn variance_over(&self, dt: f64) -> f64 {
        let s = self.process_sigma();
        s * s * dt / self.freq
    }

    /// Deterministic Euler step toward `mean`.
    pub fn step(&self, x: f64, mean: f64, dt: f64) -> f64 {
        markov_step(x, mean, self.tau, dt)
    }
}

/// `x + dt·(−(x − mean)/τ)`.
pub fn markov_step(x: f64, mean: f64, tau: f64, dt: f64) -> f64 {
    x + dt * (-(x - mean) / tau)
}

/// Per-process Markov models. Submatrix processes express `sigma_drift`
/// relative to the nominal parameter magnitude (see [`param_sigma`]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarkovConfig {
    pub gyro_bias: MarkovProcess,
    pub accel_bias: MarkovProcess,
    pub adcp_bias: MarkovProcess,
    pub inertia: MarkovProcess,
    pub lin_damping: MarkovProcess,
    pub quad_damping: MarkovProcess,
    pub current_vehicle: MarkovProcess,
    pub current_bottom: MarkovProcess,
}

impl Default for MarkovConfig {
    fn default() -> Self {
        let deg_per_hour = std::f64::consts::PI / 180.0 / 3600.0;
        MarkovConfig {
            gyro_bias: MarkovProcess::new(3600.0, 0.05 * deg_per_hour, 100.0),
            accel_bias: MarkovProcess::new(3600.0, 1e-3, 100.0),
            adcp_bias: MarkovProcess::new(1800.0, 0.01, 1.0),
            inertia: MarkovProcess::new(3600.0, 0.2, 10.0),
            lin_damping: MarkovProcess::new(3600.0, 0.2, 10.0),
            quad_damping: MarkovProcess::new(3600.0, 0.2, 10.0),
            current_vehicle: MarkovProcess::new(3600.0, 0.05, 100.0),
            current_bottom: MarkovProcess::new(3600.0, 0.05, 100.0),
        }
    }
}

/// Absolute standard deviation for a submatrix entry given a relative drift
/// bound: relative to the entry itself, floored at 5% of the row's diagonal
/// magnitude so that nominally-zero couplings can still move.
pub fn param_sigma(full: &Matrix6<f64>, row: usize, col: usize, relative: f64) -> f64 {
    let diag = full[(row, row)].abs();
    relative * full[(row, col)].abs().max(0.05 * diag)
}

/// Per-entry absolute standard deviations of a 2×3 submatrix.
pub fn submatrix_sigmas(full: &Matrix6<f64>, relative: f64) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (r, &row) in SUB_ROWS.iter().enumerate() {
        for (c, &col) in SUB_COLS.iter().enumerate() {
            out[3 * r + c] = param_sigma(full, row, col, relative);
        }
    }
    out
}
