//! Sensor rates, noise levels, biases and validity rules for the simulator.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::sensors::SensorKind;

const DEG: f64 = std::f64::consts::PI / 180.0;

/// Bias truth: a constant offset plus a zero-mean first-order Markov drift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasSpec {
    pub constant: [f64; 3],
    /// σ of the initial drift value, drawn once per run.
    pub initial_sigma: f64,
    /// Stationary σ of the drift.
    pub sigma_drift: f64,
    /// s
    pub tau: f64,
}

impl Default for BiasSpec {
    fn default() -> Self {
        BiasSpec {
            constant: [0.0; 3],
            initial_sigma: 0.0,
            sigma_drift: 0.0,
            tau: 3600.0,
        }
    }
}

impl BiasSpec {
    fn is_zero(&self) -> bool {
        self.constant.iter().all(|c| *c == 0.0) && self.initial_sigma == 0.0 && self.sigma_drift == 0.0
    }
}

/// Running bias with the drift integrated as an exact discrete
/// Ornstein-Uhlenbeck process.
#[derive(Clone, Debug)]
pub struct BiasState {
    spec: BiasSpec,
    drift: Vector3<f64>,
}

impl BiasState {
    pub fn new(spec: BiasSpec, rng: &mut impl Rng) -> Self {
        let mut drift = Vector3::zeros();
        if spec.initial_sigma > 0.0 {
            for d in drift.iter_mut() {
                *d = spec.initial_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        BiasState { spec, drift }
    }

    pub fn value(&self) -> Vector3<f64> {
        Vector3::from(self.spec.constant) + self.drift
    }

    pub fn step(&mut self, dt: f64, rng: &mut impl Rng) {
        if self.spec.sigma_drift == 0.0 {
            return;
        }
        let phi = (-dt / self.spec.tau).exp();
        let q = self.spec.sigma_drift * (1.0 - phi * phi).sqrt();
        for d in self.drift.iter_mut() {
            *d = phi * *d + q * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImuSpec {
    /// Hz; also the truth integration rate.
    pub rate: f64,
    /// Angular random walk, rad/√s.
    pub gyro_arw: f64,
    /// Per-sample accelerometer noise σ, m/s².
    pub accel_noise: f64,
    pub gyro_bias: BiasSpec,
    pub accel_bias: BiasSpec,
}

impl Default for ImuSpec {
    fn default() -> Self {
        let deg_per_hour = DEG / 3600.0;
        ImuSpec {
            rate: 100.0,
            gyro_arw: 0.012 * DEG / 60.0,
            accel_noise: 5e-3,
            gyro_bias: BiasSpec {
                initial_sigma: 0.1 * deg_per_hour,
                sigma_drift: 0.05 * deg_per_hour,
                ..Default::default()
            },
            accel_bias: BiasSpec {
                initial_sigma: 2e-3,
                sigma_drift: 1e-3,
                ..Default::default()
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DvlSpec {
    pub rate: f64,
    /// m/s per axis
    pub noise: f64,
    /// Bottom-lock altitude band, m.
    pub min_altitude: f64,
    pub max_altitude: f64,
}

impl Default for DvlSpec {
    fn default() -> Self {
        DvlSpec {
            rate: 5.0,
            noise: 0.01,
            min_altitude: 0.5,
            max_altitude: 200.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdcpSpec {
    pub rate: f64,
    /// m/s per axis
    pub noise: f64,
    /// Blanking distance, m.
    pub blank: f64,
    /// Cell size, m.
    pub cell: f64,
    pub cells: usize,
    /// Cells deeper than this fraction of the altitude see the seafloor.
    pub valid_fraction: f64,
    /// Shallower than this the transducer is aerated and every cell is
    /// invalid, m.
    pub min_depth: f64,
    /// Horizontal bias; only the first two entries are used.
    pub bias: BiasSpec,
}

impl Default for AdcpSpec {
    fn default() -> Self {
        AdcpSpec {
            rate: 1.0,
            noise: 0.02,
            blank: 0.5,
            cell: 1.0,
            cells: 20,
            valid_fraction: 0.85,
            min_depth: 0.0,
            bias: BiasSpec {
                initial_sigma: 0.01,
                sigma_drift: 0.005,
                tau: 1800.0,
                ..Default::default()
            },
        }
    }
}

impl AdcpSpec {
    pub fn max_range(&self) -> f64 {
        self.blank + self.cells as f64 * self.cell
    }

    pub fn cell_range(&self, i: usize) -> f64 {
        self.blank + (i as f64 + 0.5) * self.cell
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpsSpec {
    pub rate: f64,
    /// m per axis
    pub noise: f64,
    /// Fixes are only produced shallower than this, m.
    pub max_depth: f64,
    pub outlier_probability: f64,
    /// Outliers are displaced by this distance in a random direction, m.
    pub outlier_magnitude: f64,
}

impl Default for GpsSpec {
    fn default() -> Self {
        GpsSpec {
            rate: 1.0,
            noise: 1.5,
            max_depth: 0.5,
            outlier_probability: 0.02,
            outlier_magnitude: 30.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PressureSpec {
    pub rate: f64,
    /// m
    pub noise: f64,
}

impl Default for PressureSpec {
    fn default() -> Self {
        PressureSpec {
            rate: 10.0,
            noise: 0.05,
        }
    }
}

/// Thruster command logging; the rate is also the controller rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThrusterSpec {
    pub rate: f64,
    /// N per thruster
    pub noise: f64,
}

impl Default for ThrusterSpec {
    fn default() -> Self {
        ThrusterSpec {
            rate: 10.0,
            noise: 1.0,
        }
    }
}

/// Interval `[start, end)` during which the listed sensors produce nothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dropout {
    pub start: f64,
    pub end: f64,
    pub sensors: Vec<SensorKind>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorSpec {
    pub imu: ImuSpec,
    pub dvl: DvlSpec,
    pub adcp: AdcpSpec,
    pub gps: GpsSpec,
    pub pressure: PressureSpec,
    pub thruster: ThrusterSpec,
    pub dropouts: Vec<Dropout>,
}

impl SensorSpec {
    /// Same rates and geometry with every noise, bias and outlier removed.
    pub fn noiseless(&self) -> SensorSpec {
        let mut s = self.clone();
        s.imu.gyro_arw = 0.0;
        s.imu.accel_noise = 0.0;
        s.imu.gyro_bias = BiasSpec::default();
        s.imu.accel_bias = BiasSpec::default();
        s.dvl.noise = 0.0;
        s.adcp.noise = 0.0;
        s.adcp.bias = BiasSpec::default();
        s.gps.noise = 0.0;
        s.gps.outlier_probability = 0.0;
        s.pressure.noise = 0.0;
        s.thruster.noise = 0.0;
        s
    }

    pub fn is_noiseless(&self) -> bool {
        self.imu.gyro_arw == 0.0
            && self.imu.accel_noise == 0.0
            && self.imu.gyro_bias.is_zero()
            && self.imu.accel_bias.is_zero()
            && self.dvl.noise == 0.0
            && self.adcp.noise == 0.0
            && self.adcp.bias.is_zero()
            && self.gps.noise == 0.0
            && self.gps.outlier_probability == 0.0
            && self.pressure.noise == 0.0
            && self.thruster.noise == 0.0
    }

    pub fn rate(&self, kind: SensorKind) -> f64 {
        match kind {
            SensorKind::Imu => self.imu.rate,
            SensorKind::Dvl => self.dvl.rate,
            SensorKind::Adcp => self.adcp.rate,
            SensorKind::Gps => self.gps.rate,
            SensorKind::Pressure => self.pressure.rate,
            SensorKind::Thruster => self.thruster.rate,
        }
    }

    /// IMU steps between two samples of `kind`.
    pub fn decimation(&self, kind: SensorKind) -> usize {
        ((self.imu.rate / self.rate(kind)).round() as usize).max(1)
    }

    pub fn dropped(&self, kind: SensorKind, t: f64) -> bool {
        self.dropouts
            .iter()
            .any(|d| t >= d.start && t < d.end && d.sensors.contains(&kind))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidSpec(m.to_string()));
        for k in SensorKind::ALL {
            let r = self.rate(k);
            if !(r > 0.0 && r.is_finite()) {
                return bad(&format!("{k} rate must be positive"));
            }
            if r > self.imu.rate {
                return bad(&format!("{k} rate exceeds the IMU rate"));
            }
        }
        if self.imu.rate < 100.0 {
            return bad("IMU rate below 100 Hz gives a truth step above 0.01 s");
        }
        let noises = [
            self.imu.gyro_arw,
            self.imu.accel_noise,
            self.dvl.noise,
            self.adcp.noise,
            self.gps.noise,
            self.pressure.noise,
            self.thruster.noise,
        ];
        if noises.iter().any(|n| !(*n >= 0.0)) {
            return bad("noise levels must be non-negative");
        }
        for b in [self.imu.gyro_bias, self.imu.accel_bias, self.adcp.bias] {
            if !(b.tau > 0.0 && b.sigma_drift >= 0.0 && b.initial_sigma >= 0.0) {
                return bad("bias drift needs tau > 0 and non-negative sigmas");
            }
        }
        if !(self.dvl.min_altitude >= 0.0 && self.dvl.max_altitude > self.dvl.min_altitude) {
            return bad("DVL altitude band");
        }
        if self.adcp.cells == 0
            || !(self.adcp.cell > 0.0)
            || !(self.adcp.blank >= 0.0)
            || !self.adcp.min_depth.is_finite()
        {
            return bad("ADCP cell layout");
        }
        if !(0.0..=1.0).contains(&self.gps.outlier_probability) {
            return bad("GPS outlier probability outside [0, 1]");
        }
        if self.dropouts.iter().any(|d| !(d.end >= d.start)) {
            return bad("dropout ends before it starts");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_spec_is_valid_and_noiseless_is_noiseless() {
        let s = SensorSpec::default();
        s.validate().unwrap();
        assert!(!s.is_noiseless());
        assert!(s.noiseless().is_noiseless());
        assert_eq!(s.decimation(SensorKind::Dvl), 20);
        assert_eq!(s.decimation(SensorKind::Imu), 1);
    }

    #[test]
    fn rates_above_imu_rejected() {
        let mut s = SensorSpec::default();
        s.dvl.rate = 200.0;
        assert!(s.validate().is_err());
        let mut s = SensorSpec::default();
        s.imu.rate = 50.0;
        s.gps.rate = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn dropouts_are_half_open() {
        let mut s = SensorSpec::default();
        s.dropouts.push(Dropout {
            start: 10.0,
            end: 20.0,
            sensors: vec![SensorKind::Dvl],
        });
        assert!(s.dropped(SensorKind::Dvl, 10.0));
        assert!(!s.dropped(SensorKind::Dvl, 20.0));
        assert!(!s.dropped(SensorKind::Gps, 15.0));
    }

    #[test]
    fn bias_drift_keeps_stationary_sigma() {
        let spec = BiasSpec {
            sigma_drift: 0.3,
            initial_sigma: 0.3,
            tau: 5.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut b = BiasState::new(spec, &mut rng);
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            b.step(0.1, &mut rng);
            acc += b.value().norm_squared() / 3.0;
        }
        let sigma = (acc / n as f64).sqrt();
        assert!((sigma - 0.3).abs() < 0.03, "{sigma}");
    }
}
