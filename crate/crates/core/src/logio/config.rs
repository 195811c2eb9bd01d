//! Experiment configuration (TOML). Every field has a default, so an empty
//! file is a valid configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix6, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::nav::{FilterConfig, GeoConfig, VehicleParams};
use crate::sensors::SensorKind;
use crate::sim::SimConfig;

/// Serializable mirror of [`VehicleParams`] with row-major matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleSpec {
    pub mass: [[f64; 6]; 6],
    pub lin_damping: [[f64; 6]; 6],
    pub quad_damping: [[f64; 6]; 6],
    pub weight: f64,
    pub buoyancy: f64,
    pub center_of_gravity: [f64; 3],
    pub center_of_buoyancy: [f64; 3],
    pub imu_lever: [f64; 3],
    pub dvl_lever: [f64; 3],
    /// Six rows, one column per thruster.
    pub thruster_allocation: Vec<Vec<f64>>,
}

fn rows6(m: &Matrix6<f64>) -> [[f64; 6]; 6] {
    let mut out = [[0.0; 6]; 6];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = m[(r, c)];
        }
    }
    out
}

impl From<&VehicleParams> for VehicleSpec {
    fn from(p: &VehicleParams) -> Self {
        let a = &p.thruster_allocation;
        VehicleSpec {
            mass: rows6(&p.mass),
            lin_damping: rows6(&p.lin_damping),
            quad_damping: rows6(&p.quad_damping),
            weight: p.weight,
            buoyancy: p.buoyancy,
            center_of_gravity: p.center_of_gravity.into(),
            center_of_buoyancy: p.center_of_buoyancy.into(),
            imu_lever: p.imu_lever.into(),
            dvl_lever: p.dvl_lever.into(),
            thruster_allocation: (0..a.nrows())
                .map(|r| a.row(r).iter().copied().collect())
                .collect(),
        }
    }
}

impl Default for VehicleSpec {
    fn default() -> Self {
        VehicleSpec::from(&VehicleParams::default())
    }
}

impl VehicleSpec {
    pub fn to_params(&self) -> Result<VehicleParams, ConfigError> {
        let m6 = |a: &[[f64; 6]; 6]| Matrix6::from_fn(|r, c| a[r][c]);
        let rows = self.thruster_allocation.len();
        let cols = self.thruster_allocation.first().map_or(0, |r| r.len());
        if rows != 6 || cols == 0 || self.thruster_allocation.iter().any(|r| r.len() != cols) {
            return Err(ConfigError::Invalid(format!(
                "thruster_allocation must be 6 rows of equal length, got {rows} rows"
            )));
        }
        let p = VehicleParams {
            mass: m6(&self.mass),
            lin_damping: m6(&self.lin_damping),
            quad_damping: m6(&self.quad_damping),
            weight: self.weight,
            buoyancy: self.buoyancy,
            center_of_gravity: Vector3::from(self.center_of_gravity),
            center_of_buoyancy: Vector3::from(self.center_of_buoyancy),
            imu_lever: Vector3::from(self.imu_lever),
            dvl_lever: Vector3::from(self.dvl_lever),
            thruster_allocation: DMatrix::from_fn(6, cols, |r, c| self.thruster_allocation[r][c]),
        };
        p.validate().map_err(ConfigError::Invalid)?;
        Ok(p)
    }
}

/// Which sensor streams the filter consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnableFlags {
    pub imu: bool,
    pub dvl: bool,
    pub adcp: bool,
    pub gps: bool,
    pub pres: bool,
    pub thr: bool,
}

impl Default for EnableFlags {
    fn default() -> Self {
        EnableFlags {
            imu: true,
            dvl: true,
            adcp: true,
            gps: true,
            pres: true,
            thr: true,
        }
    }
}

impl EnableFlags {
    pub fn get(&self, kind: SensorKind) -> bool {
        match kind {
            SensorKind::Imu => self.imu,
            SensorKind::Dvl => self.dvl,
            SensorKind::Adcp => self.adcp,
            SensorKind::Gps => self.gps,
            SensorKind::Pressure => self.pres,
            SensorKind::Thruster => self.thr,
        }
    }

    pub fn set(&mut self, kind: SensorKind, on: bool) {
        let f = match kind {
            SensorKind::Imu => &mut self.imu,
            SensorKind::Dvl => &mut self.dvl,
            SensorKind::Adcp => &mut self.adcp,
            SensorKind::Gps => &mut self.gps,
            SensorKind::Pressure => &mut self.pres,
            SensorKind::Thruster => &mut self.thr,
        };
        *f = on;
    }
}

/// Interval `[start, end)` in which the filter ignores the listed sensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenialWindow {
    pub start: f64,
    pub end: f64,
    pub sensors: Vec<SensorKind>,
}

impl DenialWindow {
    pub fn denies(&self, kind: SensorKind, t: f64) -> bool {
        t >= self.start && t < self.end && self.sensors.contains(&kind)
    }
}

impl FromStr for DenialWindow {
    type Err = String;

    /// `dvl,gps:600-1600`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kinds, span) = s
            .split_once(':')
            .ok_or_else(|| format!("'{s}' is not <sensor,...>:<t0>-<t1>"))?;
        let sensors = kinds
            .split(',')
            .map(|k| k.parse::<SensorKind>())
            .collect::<Result<Vec<_>, _>>()?;
        let (a, b) = span
            .split_once('-')
            .ok_or_else(|| format!("'{span}' is not <t0>-<t1>"))?;
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{x}' is not a time in seconds"))
        };
        let w = DenialWindow {
            start: num(a)?,
            end: num(b)?,
            sensors,
        };
        if !(w.start.is_finite() && w.end.is_finite() && w.end > w.start) {
            return Err(format!("denial window '{span}' is empty or reversed"));
        }
        Ok(w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// One results row every this many IMU steps.
    pub decimation: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            decimation: 10,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Seed for simulation noise and model perturbation.
    pub seed: u64,
    pub geo: GeoConfig,
    /// Vehicle flown by the simulator; the filter uses it too unless
    /// `model_error` is set.
    pub vehicle: VehicleSpec,
    /// Relative error of the filter's vehicle model: every parameter is
    /// scaled by a factor drawn uniformly from `[1 − e, 1 + e]`.
    pub model_error: f64,
    pub filter: FilterConfig,
    pub sim: SimConfig,
    pub enable: EnableFlags,
    pub deny: Vec<DenialWindow>,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    /// Filter configuration with the experiment's geography applied.
    pub fn filter_config(&self) -> FilterConfig {
        let mut f = self.filter.clone();
        f.geo = self.geo;
        f
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !self.geo.is_valid() {
            return bad(format!("latitude {} rad out of range", self.geo.latitude));
        }
        self.vehicle.to_params()?;
        if !(0.0..1.0).contains(&self.model_error) {
            return bad(format!("model_error {} outside [0, 1)", self.model_error));
        }
        let m = &self.filter.markov;
        for p in [
            m.gyro_bias,
            m.accel_bias,
            m.adcp_bias,
            m.inertia,
            m.lin_damping,
            m.quad_damping,
            m.current_vehicle,
            m.current_bottom,
        ] {
            if !p.is_valid() {
                return bad(format!("invalid Markov process {p:?}"));
            }
        }
        let ut = &self.filter.ut;
        if !(ut.alpha > 0.0 && ut.alpha <= 1.0) {
            return bad(format!("UT alpha {} outside (0, 1]", ut.alpha));
        }
        for w in &self.deny {
            if !(w.end > w.start) || w.sensors.is_empty() {
                return bad(format!("denial window {w:?} is empty"));
            }
        }
        if self.output.decimation == 0 {
            return bad("output.decimation must be at least 1".into());
        }
        self.sim
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// The vehicle flown by the simulator.
    pub fn truth_vehicle(&self) -> Result<VehicleParams, ConfigError> {
        self.vehicle.to_params()
    }

    /// The vehicle model given to the filter. With a nonzero `model_error`
    /// every parameter is scaled by its own factor from `[1 − e, 1 + e]`,
    /// drawn from a stream separate from the simulator's noise.
    pub fn filter_vehicle(&self) -> Result<VehicleParams, ConfigError> {
        let truth = self.vehicle.to_params()?;
        if self.model_error == 0.0 {
            return Ok(truth);
        }
        let e = self.model_error;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        let p = truth.perturbed(|| 1.0 + e * (2.0 * rng.random::<f64>() - 1.0));
        p.validate().map_err(ConfigError::Invalid)?;
        Ok(p)
    }

    /// Denial windows must fall within the data they apply to.
    pub fn check_denials_within(&self, t_start: f64, t_end: f64) -> Result<(), ConfigError> {
        for w in &self.deny {
            if w.start < t_start - 1e-9 || w.end > t_end + 1e-9 {
                return Err(ConfigError::Invalid(format!(
                    "denial window [{}, {}) outside data span [{t_start}, {t_end}]",
                    w.start, w.end
                )));
            }
        }
        Ok(())
    }

    pub fn denied(&self, kind: SensorKind, t: f64) -> bool {
        self.deny.iter().any(|w| w.denies(kind, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::from_toml("", Path::new("x.toml")).unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.vehicle.to_params().unwrap(), VehicleParams::default());
    }

    #[test]
    fn filter_vehicle_perturbation_is_bounded_and_seeded() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.filter_vehicle().unwrap(), VehicleParams::default());
        c.model_error = 0.2;
        c.seed = 4;
        let a = c.filter_vehicle().unwrap();
        assert_eq!(a, c.filter_vehicle().unwrap());
        let nominal = VehicleParams::default();
        for i in 0..6 {
            let r = a.mass[(i, i)] / nominal.mass[(i, i)];
            assert!((0.8..=1.2).contains(&r), "{r}");
            let r = a.quad_damping[(i, i)] / nominal.quad_damping[(i, i)];
            assert!((0.8..=1.2).contains(&r), "{r}");
        }
        assert_ne!(a, nominal);
        c.seed = 5;
        assert_ne!(a, c.filter_vehicle().unwrap());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::default();
        c.seed = 9;
        c.geo.latitude = -0.2269;
        c.enable.gps = false;
        c.deny.push("dvl,gps:600-1600".parse().unwrap());
        c.filter.init.heading_offset = -0.26;
        let text = c.to_toml();
        let back = ExperimentConfig::from_toml(&text, Path::new("x.toml")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let text = "[geo]\nlatitude = -0.2\n[enable]\ngps = false\n[filter.noise]\ndvl = 0.02\n";
        let c = ExperimentConfig::from_toml(text, Path::new("x.toml")).unwrap();
        assert_eq!(c.geo.latitude, -0.2);
        assert!(!c.enable.gps && c.enable.dvl);
        assert_eq!(c.filter.noise.dvl, 0.02);
        assert_eq!(c.filter.noise.gps, FilterConfig::default().noise.gps);
        assert_eq!(c.filter_config().geo.latitude, -0.2);
    }

    #[test]
    fn invalid_values_rejected() {
        let p = Path::new("x.toml");
        assert!(matches!(
            ExperimentConfig::from_toml("seed = \"x\"", p),
            Err(ConfigError::Parse { .. })
        ));
        for text in [
            "[geo]\nlatitude = 3.0",
            "model_error = 1.5",
            "[[deny]]\nstart = 5.0\nend = 1.0\nsensors = [\"dvl\"]",
            "[output]\ndecimation = 0",
            "[vehicle]\nthruster_allocation = [[1.0]]",
        ] {
            assert!(
                matches!(ExperimentConfig::from_toml(text, p), Err(ConfigError::Invalid(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn denial_parsing_and_membership() {
        let w: DenialWindow = "dvl,pressure:10-20".parse().unwrap();
        assert_eq!(w.sensors, vec![SensorKind::Dvl, SensorKind::Pressure]);
        assert!(w.denies(SensorKind::Dvl, 10.0));
        assert!(!w.denies(SensorKind::Dvl, 20.0));
        assert!(!w.denies(SensorKind::Gps, 15.0));
        assert!("dvl:20-10".parse::<DenialWindow>().is_err());
        assert!("dvl".parse::<DenialWindow>().is_err());
        assert!("sonar:1-2".parse::<DenialWindow>().is_err());
    }

    #[test]
    fn flags_cover_every_kind() {
        let mut f = EnableFlags::default();
        for k in SensorKind::ALL {
            assert!(f.get(k));
            f.set(k, false);
            assert!(!f.get(k));
        }
    }
}
