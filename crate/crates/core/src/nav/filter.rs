//! The navigation filter: a [`Ukf`] over [`NavState`] plus the aiding
//! sources that feed it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix6, Vector3};
use serde::{Deserialize, Serialize};

use super::models::{self, attitude_from_euler, heading_direction};
use super::params::{submatrix, submatrix_sigmas, GeoConfig, MarkovConfig, VehicleParams};
use crate::error::NavError;
use crate::manifold::{idx, NavState, NAV_DIM};
use crate::sensors::{AdcpProfile, ImuSample, Payload, SensorKind, SensorSample};
use crate::ukf::{gate_threshold, GaussianBelief, Ukf, UpdateReport, UtParams};

const DEG: f64 = PI / 180.0;

/// Process and measurement noise. Process densities are per √s, measurement
/// values are per-sample standard deviations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Gyro angle random walk, rad/√s.
    pub gyro_arw: f64,
    /// m/√s
    pub pos_process: f64,
    /// m/s/√s
    pub vel_process: f64,
    /// Acceleration random walk, m/s²/√s.
    pub acc_process: f64,
    /// m/s²/√s
    pub gravity_process: f64,
    /// m/s²
    pub accel: f64,
    /// m/s
    pub dvl: f64,
    /// m/s
    pub adcp: f64,
    /// m
    pub gps: f64,
    /// m
    pub pressure: f64,
    /// N
    pub model_force: f64,
    /// N·m
    pub model_torque: f64,
    /// Model-aiding noise multiplier while surfaced.
    pub surfaced_inflation: f64,
    /// Depth below which the vehicle counts as surfaced, m.
    pub surface_depth: f64,
    /// Length scale of horizontal current variation, m.
    pub current_spatial_scale: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            gyro_arw: 0.012 * DEG / 60.0,
            pos_process: 1e-4,
            vel_process: 1e-3,
            acc_process: 0.5,
            gravity_process: 1e-6,
            accel: 5e-3,
            dvl: 0.01,
            adcp: 0.02,
            gps: 1.5,
            pressure: 0.05,
            model_force: 5.0,
            model_torque: 5.0,
            surfaced_inflation: 10.0,
            surface_depth: 0.5,
            current_spatial_scale: 100.0,
        }
    }
}

/// Gate confidence per aiding source. Values outside `(0, 1)` disable the
/// gate for that source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateSettings {
    pub imu: f64,
    pub dvl: f64,
    pub adcp: f64,
    pub gps: f64,
    pub pres: f64,
    pub thr: f64,
}

impl Default for GateSettings {
    fn default() -> Self {
        GateSettings {
            imu: 0.99,
            dvl: 0.99,
            adcp: 0.99,
            gps: 0.99,
            pres: 0.99,
            thr: 0.99,
        }
    }
}

impl GateSettings {
    pub fn confidence(&self, kind: SensorKind) -> Option<f64> {
        let c = match kind {
            SensorKind::Imu => self.imu,
            SensorKind::Dvl => self.dvl,
            SensorKind::Adcp => self.adcp,
            SensorKind::Gps => self.gps,
            SensorKind::Pressure => self.pres,
            SensorKind::Thruster => self.thr,
        };
        (c > 0.0 && c < 1.0).then_some(c)
    }
}

/// Initial standard deviations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitSigma {
    /// North, east, down, m.
    pub position: [f64; 3],
    /// rad
    pub roll_pitch: f64,
    /// rad
    pub heading: f64,
    pub velocity: f64,
    pub acceleration: f64,
    /// Relative to the nominal parameter magnitude.
    pub param_relative: f64,
    pub current: f64,
    pub gravity: f64,
    /// rad/s
    pub gyro_bias: f64,
    pub accel_bias: f64,
    pub adcp_bias: f64,
}

impl Default for InitSigma {
    fn default() -> Self {
        InitSigma {
            position: [1.0, 1.0, 0.2],
            roll_pitch: 1.0 * DEG,
            heading: 30.0 * DEG,
            velocity: 0.1,
            acceleration: 0.05,
            param_relative: 0.2,
            current: 0.2,
            gravity: 1e-3,
            gyro_bias: 0.1 * DEG / 3600.0,
            accel_bias: 5e-3,
            adcp_bias: 0.02,
        }
    }
}

/// Initial mean and uncertainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    /// NED, m.
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    /// NED, m/s².
    pub acceleration: [f64; 3],
    /// rad, clockwise from north.
    pub heading: f64,
    /// Added to `heading` to start from a deliberately wrong heading.
    pub heading_offset: f64,
    pub roll: f64,
    pub pitch: f64,
    /// Take roll and pitch from the first accelerometer sample.
    pub level_from_accel: bool,
    pub current_vehicle: [f64; 2],
    pub current_bottom: [f64; 2],
    /// Defaults to normal gravity at the configured latitude.
    pub gravity: Option<f64>,
    pub sigma: InitSigma,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            position: [0.0; 3],
            velocity: [0.0; 3],
            acceleration: [0.0; 3],
            heading: 0.0,
            heading_offset: 0.0,
            roll: 0.0,
            pitch: 0.0,
            level_from_accel: true,
            current_vehicle: [0.0; 2],
            current_bottom: [0.0; 2],
            gravity: None,
            sigma: InitSigma::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub ut: UtParams,
    pub noise: NoiseConfig,
    pub markov: MarkovConfig,
    pub geo: GeoConfig,
    pub gates: GateSettings,
    pub init: InitConfig,
}

/// Roll and pitch of a body at rest from its specific-force reading.
pub fn level_from_specific_force(f: &Vector3<f64>) -> (f64, f64) {
    let roll = f.y.atan2(f.z);
    let pitch = f.x.atan2((f.y * f.y + f.z * f.z).sqrt());
    (roll, pitch)
}

/// Outcome of one measurement update.
#[derive(Clone, Debug)]
pub struct AppliedUpdate {
    pub kind: SensorKind,
    pub report: UpdateReport,
}

#[derive(Clone)]
pub struct NavFilter {
    cfg: FilterConfig,
    vehicle: VehicleParams,
    ukf: Ukf,
    belief: GaussianBelief<NavState>,
    means: NavState,
    t: f64,
    gyro: Vector3<f64>,
    depth: Option<f64>,
    thresholds: BTreeMap<(SensorKind, usize), f64>,
    sub_sigmas: [[f64; 6]; 3],
    predict_steps: u64,
}

impl NavFilter {
    /// Builds the initial belief at time `t0`. `first_imu` supplies the
    /// levelling reading and the gyro held until the next sample.
    pub fn new(
        cfg: FilterConfig,
        vehicle: VehicleParams,
        t0: f64,
        first_imu: Option<&ImuSample>,
    ) -> Result<Self, NavError> {
        if !cfg.geo.is_valid() {
            return Err(NavError::Diverged(format!(
                "invalid latitude {}",
                cfg.geo.latitude
            )));
        }
        let init = &cfg.init;
        let (mut roll, mut pitch) = (init.roll, init.pitch);
        if init.level_from_accel {
            if let Some(imu) = first_imu {
                (roll, pitch) = level_from_specific_force(&imu.accel);
            }
        }
        let mut s = NavState::default();
        s.position = Vector3::from(init.position);
        s.velocity = Vector3::from(init.velocity);
        s.acceleration = Vector3::from(init.acceleration);
        s.attitude = attitude_from_euler(roll, pitch, init.heading + init.heading_offset);
        s.inertia_sub = submatrix(&vehicle.mass);
        s.lin_damping_sub = submatrix(&vehicle.lin_damping);
        s.quad_damping_sub = submatrix(&vehicle.quad_damping);
        s.current_vehicle = init.current_vehicle.into();
        s.current_bottom = init.current_bottom.into();
        s.gravity = init.gravity.unwrap_or_else(|| models::wgs84_gravity(&cfg.geo));

        let sg = &init.sigma;
        let mut var = [0.0; NAV_DIM];
        for i in 0..3 {
            var[idx::POS.start + i] = sg.position[i].powi(2);
            var[idx::VEL.start + i] = sg.velocity.powi(2);
            var[idx::ACC.start + i] = sg.acceleration.powi(2);
            var[idx::GYRO_BIAS.start + i] = sg.gyro_bias.powi(2);
            var[idx::ACC_BIAS.start + i] = sg.accel_bias.powi(2);
        }
        let subs = [
            submatrix_sigmas(&vehicle.mass, sg.param_relative),
            submatrix_sigmas(&vehicle.lin_damping, sg.param_relative),
            submatrix_sigmas(&vehicle.quad_damping, sg.param_relative),
        ];
        for (b, start) in [idx::INERTIA.start, idx::LIN_DAMP.start, idx::QUAD_DAMP.start]
            .iter()
            .enumerate()
        {
            for k in 0..6 {
                var[start + k] = subs[b][k].powi(2);
            }
        }
        for i in 0..2 {
            var[idx::CUR_VEH.start + i] = sg.current.powi(2);
            var[idx::CUR_BOT.start + i] = sg.current.powi(2);
            var[idx::ADCP_BIAS.start + i] = sg.adcp_bias.powi(2);
        }
        var[idx::GRAVITY] = sg.gravity.powi(2);
        let mut cov = DMatrix::from_diagonal(&DVector::from_column_slice(&var));

        // heading uncertainty about the navigation vertical, roll/pitch about
        // the two horizontal axes, all expressed in body coordinates
        let c = heading_direction(&s.attitude);
        let att = nalgebra::Matrix3::identity() * sg.roll_pitch.powi(2)
            + c * c.transpose() * (sg.heading.powi(2) - sg.roll_pitch.powi(2));
        cov.view_mut((idx::ATT.start, idx::ATT.start), (3, 3))
            .copy_from(&att);

        let mut means = s.clone();
        means.gyro_bias = Vector3::zeros();
        means.accel_bias = Vector3::zeros();
        means.adcp_bias = nalgebra::Vector2::zeros();

        let m = &cfg.markov;
        let sub_sigmas = [
            submatrix_sigmas(&vehicle.mass, m.inertia.sigma_drift),
            submatrix_sigmas(&vehicle.lin_damping, m.lin_damping.sigma_drift),
            submatrix_sigmas(&vehicle.quad_damping, m.quad_damping.sigma_drift),
        ];

        Ok(NavFilter {
            ukf: Ukf::new(cfg.ut),
            belief: GaussianBelief::new(s, cov),
            means,
            t: t0,
            gyro: first_imu.map(|i| i.gyro).unwrap_or_else(Vector3::zeros),
            depth: None,
            thresholds: BTreeMap::new(),
            sub_sigmas,
            predict_steps: 0,
            cfg,
            vehicle,
        })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }

    pub fn vehicle(&self) -> &VehicleParams {
        &self.vehicle
    }

    pub fn belief(&self) -> &GaussianBelief<NavState> {
        &self.belief
    }

    pub fn state(&self) -> &NavState {
        &self.belief.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.belief.cov
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn predict_steps(&self) -> u64 {
        self.predict_steps
    }

    /// Replaces the belief, e.g. to restart from a saved snapshot.
    pub fn set_belief(&mut self, belief: GaussianBelief<NavState>) {
        self.belief = belief;
    }

    /// Heading standard deviation, rad.
    pub fn heading_sigma(&self) -> f64 {
        let c = heading_direction(&self.belief.mean.attitude);
        let p = self
            .belief
            .cov
            .fixed_view::<3, 3>(idx::ATT.start, idx::ATT.start)
            .into_owned();
        (c.transpose() * p * c)[0].max(0.0).sqrt()
    }

    /// `2·√(σ_N² + σ_E²)`, m.
    pub fn horizontal_2sigma(&self) -> f64 {
        2.0 * (self.belief.cov[(0, 0)] + self.belief.cov[(1, 1)]).max(0.0).sqrt()
    }

    /// Records the latest depth reading used for surfacing decisions.
    pub fn note_depth(&mut self, depth: f64) {
        self.depth = Some(depth);
    }

    pub fn is_surfaced(&self) -> bool {
        self.depth
            .map(|d| d < self.cfg.noise.surface_depth)
            .unwrap_or(false)
    }

    fn threshold(&mut self, kind: SensorKind, dof: usize) -> f64 {
        let conf = self.cfg.gates.confidence(kind);
        *self
            .thresholds
            .entry((kind, dof))
            .or_insert_with(|| conf.map_or(f64::INFINITY, |c| gate_threshold(dof, c)))
    }

    /// Diagonal process noise accumulated over `dt`.
    pub fn process_noise(&self, dt: f64) -> DMatrix<f64> {
        let n = &self.cfg.noise;
        let m = &self.cfg.markov;
        let s = &self.belief.mean;
        let mut q = [0.0; NAV_DIM];
        for i in 0..3 {
            q[idx::POS.start + i] = n.pos_process.powi(2) * dt;
            q[idx::ATT.start + i] = n.gyro_arw.powi(2) * dt;
            q[idx::VEL.start + i] = n.vel_process.powi(2) * dt;
            q[idx::ACC.start + i] = n.acc_process.powi(2) * dt;
            q[idx::GYRO_BIAS.start + i] = m.gyro_bias.variance_over(dt);
            q[idx::ACC_BIAS.start + i] = m.accel_bias.variance_over(dt);
        }
        let procs = [m.inertia, m.lin_damping, m.quad_damping];
        for (b, start) in [idx::INERTIA.start, idx::LIN_DAMP.start, idx::QUAD_DAMP.start]
            .iter()
            .enumerate()
        {
            let p = procs[b];
            for k in 0..6 {
                let sig = self.sub_sigmas[b][k];
                q[start + k] = 2.0 * sig * sig * dt / p.tau;
            }
        }
        let speed = (s.velocity.x.powi(2) + s.velocity.y.powi(2)).sqrt();
        let cv = models::water_current_q_scale(
            m.current_vehicle.variance_over(dt),
            speed,
            n.current_spatial_scale,
        );
        let cb = models::water_current_q_scale(
            m.current_bottom.variance_over(dt),
            speed,
            n.current_spatial_scale,
        );
        for i in 0..2 {
            q[idx::CUR_VEH.start + i] = cv;
            q[idx::CUR_BOT.start + i] = cb;
            q[idx::ADCP_BIAS.start + i] = m.adcp_bias.variance_over(dt);
        }
        q[idx::GRAVITY] = n.gravity_process.powi(2) * dt;
        DMatrix::from_diagonal(&DVector::from_column_slice(&q))
    }

    /// Runs the prediction to time `t` with the gyro reading held from the
    /// previous IMU sample.
    pub fn predict_to(&mut self, t: f64) -> Result<(), NavError> {
        self.predict_with(t, self.gyro)
    }

    fn predict_with(&mut self, t: f64, gyro: Vector3<f64>) -> Result<(), NavError> {
        let dt = t - self.t;
        if dt <= 0.0 {
            return Err(NavError::NonPositiveDt(dt));
        }
        let q = self.process_noise(dt);
        let geo = self.cfg.geo;
        let markov = self.cfg.markov;
        let means = &self.means;
        let mut err = None;
        let next = self.ukf.predict(
            &self.belief,
            |s| match models::predict_inertial(s, &gyro, dt, &geo, &markov, means) {
                Ok(n) => n,
                Err(e) => {
                    err = Some(e);
                    s.clone()
                }
            },
            &q,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        check_finite(&next)?;
        self.belief = next;
        self.t = t;
        self.predict_steps += 1;
        Ok(())
    }

    /// Prediction step driven by an IMU sample. The rate over the interval
    /// is the mean of the previous and the new gyro reading; the new one is
    /// then latched for later updates.
    pub fn propagate_imu(&mut self, t: f64, imu: &ImuSample) -> Result<(), NavError> {
        if t > self.t {
            self.predict_with(t, (self.gyro + imu.gyro) * 0.5)?;
        } else if t < self.t {
            return Err(NavError::NonPositiveDt(t - self.t));
        }
        self.gyro = imu.gyro;
        Ok(())
    }

    fn apply(
        &mut self,
        kind: SensorKind,
        z: DVector<f64>,
        r: DMatrix<f64>,
        h: impl FnMut(&NavState, &mut [f64]),
    ) -> Result<AppliedUpdate, NavError> {
        let threshold = self.threshold(kind, z.len());
        let (next, report) = self
            .ukf
            .update_with_threshold(&self.belief, h, &z, &r, threshold)?;
        check_finite(&next)?;
        self.belief = next;
        Ok(AppliedUpdate { kind, report })
    }

    pub fn update_accel(&mut self, f: &Vector3<f64>) -> Result<AppliedUpdate, NavError> {
        let r = DMatrix::identity(3, 3) * self.cfg.noise.accel.powi(2);
        self.apply(SensorKind::Imu, DVector::from_column_slice(f.as_slice()), r, |s, out| {
            out.copy_from_slice(models::accel_measurement(s).as_slice())
        })
    }

    pub fn update_dvl(&mut self, v: &Vector3<f64>) -> Result<AppliedUpdate, NavError> {
        let r = DMatrix::identity(3, 3) * self.cfg.noise.dvl.powi(2);
        let (gyro, geo, p) = (self.gyro, self.cfg.geo, self.vehicle.clone());
        self.apply(SensorKind::Dvl, DVector::from_column_slice(v.as_slice()), r, |s, out| {
            let w = models::body_rate(s, &gyro, &geo);
            out.copy_from_slice(models::dvl_measurement(s, &w, &p).as_slice())
        })
    }

    /// One update per valid cell.
    pub fn update_adcp(&mut self, profile: &AdcpProfile) -> Result<Vec<AppliedUpdate>, NavError> {
        let mut out = Vec::new();
        let dmax = profile.max_range;
        for cell in profile.cells.iter().filter(|c| c.valid) {
            if !(cell.range >= 0.0 && cell.range <= dmax) || dmax <= 0.0 {
                return Err(NavError::CellOutOfRange {
                    range: cell.range,
                    max: dmax,
                });
            }
            let frac = cell.range / dmax;
            let r = DMatrix::identity(3, 3) * self.cfg.noise.adcp.powi(2);
            let z = DVector::from_column_slice(cell.velocity.as_slice());
            out.push(self.apply(SensorKind::Adcp, z, r, |s, o| {
                o.copy_from_slice(models::adcp_cell_unchecked(s, frac).as_slice())
            })?);
        }
        Ok(out)
    }

    pub fn update_gps(&mut self, ne: &nalgebra::Vector2<f64>) -> Result<AppliedUpdate, NavError> {
        let r = DMatrix::identity(2, 2) * self.cfg.noise.gps.powi(2);
        self.apply(SensorKind::Gps, DVector::from_column_slice(ne.as_slice()), r, |s, o| {
            o.copy_from_slice(models::gps_measurement(s).as_slice())
        })
    }

    pub fn update_pressure(&mut self, depth: f64) -> Result<AppliedUpdate, NavError> {
        self.note_depth(depth);
        let r = DMatrix::from_element(1, 1, self.cfg.noise.pressure.powi(2));
        self.apply(SensorKind::Pressure, DVector::from_element(1, depth), r, |s, o| {
            o[0] = models::pressure_measurement(s)
        })
    }

    /// Model-aiding update against the wrench produced by `forces`.
    pub fn update_model(&mut self, forces: &[f64]) -> Result<AppliedUpdate, NavError> {
        let tau = models::thruster_wrench(forces, &self.vehicle)?;
        let n = &self.cfg.noise;
        let f2 = n.model_force.powi(2);
        let t2 = n.model_torque.powi(2);
        let base = Matrix6::from_diagonal(&nalgebra::Vector6::new(f2, f2, f2, t2, t2, t2));
        let r6 = models::surfaced_model_noise(&base, self.is_surfaced(), n.surfaced_inflation);
        let r = DMatrix::from_column_slice(6, 6, r6.as_slice());
        let (gyro, geo, p) = (self.gyro, self.cfg.geo, self.vehicle.clone());
        self.apply(
            SensorKind::Thruster,
            DVector::from_column_slice(tau.as_slice()),
            r,
            |s, o| {
                let w = models::body_rate(s, &gyro, &geo);
                o.copy_from_slice(models::model_aiding_measurement(s, &w, &p).as_slice())
            },
        )
    }
}

fn check_finite(b: &GaussianBelief<NavState>) -> Result<(), NavError> {
    let s = &b.mean;
    let ok = s.position.iter().all(|x| x.is_finite())
        && s.velocity.iter().all(|x| x.is_finite())
        && s.acceleration.iter().all(|x| x.is_finite())
        && s.attitude.quaternion().coords.iter().all(|x| x.is_finite())
        && b.cov.diagonal().iter().all(|x| x.is_finite());
    if ok {
        Ok(())
    } else {
        Err(NavError::Diverged("non-finite state or covariance".into()))
    }
}

/// A measurement source the filter can be aided with.
pub trait Aiding: Send + Sync {
    /// Registry key, equal to the log tag of the consumed sensor.
    fn name(&self) -> &'static str;

    fn kind(&self) -> SensorKind;

    /// Applies one sample. A sample may yield no update (an invalid DVL
    /// reading) or several (one per ADCP cell).
    fn apply(
        &self,
        filter: &mut NavFilter,
        sample: &SensorSample,
    ) -> Result<Vec<AppliedUpdate>, NavError>;
}

struct AccelAiding;
struct DvlAiding;
struct AdcpAiding;
struct GpsAiding;
struct PressureAiding;
struct ModelAiding;

fn wrong_payload(name: &str) -> NavError {
    NavError::Diverged(format!("{name} aiding received a foreign payload"))
}

impl Aiding for AccelAiding {
    fn name(&self) -> &'static str {
        "imu"
    }
    fn kind(&self) -> SensorKind {
        SensorKind::Imu
    }
    fn apply(&self, f: &mut NavFilter, s: &SensorSample) -> Result<Vec<AppliedUpdate>, NavError> {
        match &s.payload {
            Payload::Imu(imu) => Ok(vec![f.update_accel(&imu.accel)?]),
            _ => Err(wrong_payload(self.name())),
        }
    }
}

impl Aiding for DvlAiding {
    fn name(&self) -> &'static str {
        "dvl"
    }
    fn kind(&self) -> SensorKind {
        SensorKind::Dvl
    }
    fn apply(&self, f: &mut NavFilter, s: &SensorSample) -> Result<Vec<AppliedUpdate>, NavError> {
        match &s.payload {
            Payload::Dvl { velocity, valid } if *valid => Ok(vec![f.update_dvl(velocity)?]),
            Payload::Dvl { .. } => Ok(Vec::new()),
            _ => Err(wrong_payload(self.name())),
        }
    }
}

impl Aiding for AdcpAiding {
    fn name(&self) -> &'static str {
        "adcp"
    }
    fn kind(&self) -> SensorKind {
        SensorKind::Adcp
    }
    fn apply(&self, f: &mut NavFilter, s: &SensorSample) -> Result<Vec<AppliedUpdate>, NavError> {
        match &s.payload {
            Payload::Adcp(p) => f.update_adcp(p),
            _ => Err(wrong_payload(self.name())),
        }
    }
}

impl Aiding for GpsAiding {
    fn name(&self) -> &'static str {
        "gps"
    }
    fn kind(&self) -> SensorKind {
        SensorKind::Gps
    }
    fn apply(&self, f: &mut NavFilter, s: &SensorSample) -> Result<Vec<AppliedUpdate>, NavError> {
        match &s.payload {
            Payload::Gps { position } => Ok(vec![f.update_gps(position)?]),
            _ => Err(wrong_payload(self.name())),
        }
    }
}

impl Aiding for PressureAiding {
    fn name(&self) -> &'static str {
        "pres"
    }
    fn kind(&self) -> SensorKind {
        SensorKind::Pressure
    }
    fn apply(&self, f: &mut NavFilter, s: &SensorSample) -> Result<Vec<AppliedUpdate>, NavError> {
        match &s.payload {
            Payload::Pressure { depth } => Ok(vec![f.update_pressure(*depth)?]),
            _ => Err(wrong_payload(self.name())),
        }
    }
}

impl Aiding for ModelAiding {
    fn name(&self) -> &'static str {
        "thr"
    }
    fn kind(&self) -> SensorKind {
        SensorKind::Thruster
    }
    fn apply(&self, f: &mut NavFilter, s: &SensorSample) -> Result<Vec<AppliedUpdate>, NavError> {
        match &s.payload {
            Payload::Thruster { forces } => Ok(vec![f.update_model(forces)?]),
            _ => Err(wrong_payload(self.name())),
        }
    }
}

/// Aiding sources by name.
pub struct AidingRegistry {
    entries: BTreeMap<&'static str, Box<dyn Aiding>>,
}

impl Default for AidingRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl AidingRegistry {
    pub fn empty() -> Self {
        AidingRegistry {
            entries: BTreeMap::new(),
        }
    }

    /// All built-in sources: `imu` (accelerometer), `dvl`, `adcp`, `gps`,
    /// `pres` and `thr` (model aiding).
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(AccelAiding));
        r.register(Box::new(DvlAiding));
        r.register(Box::new(AdcpAiding));
        r.register(Box::new(GpsAiding));
        r.register(Box::new(PressureAiding));
        r.register(Box::new(ModelAiding));
        r
    }

    /// Adds or replaces a source under its name.
    pub fn register(&mut self, aiding: Box<dyn Aiding>) {
        self.entries.insert(aiding.name(), aiding);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Aiding> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn for_kind(&self, kind: SensorKind) -> Option<&dyn Aiding> {
        self.get(kind.tag())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}
