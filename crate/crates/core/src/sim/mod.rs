//! Ground-truth simulation: vehicle dynamics flown along a scripted mission
//! and the sensor streams it would produce.

pub mod dynamics;
pub mod mission;
pub mod sensors;

use nalgebra::{Vector2, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use dynamics::{Bathymetry, CurrentField, Dynamics, Shoal, Tether, TruthState};
pub use mission::{Controller, ControllerGains, Mission, Segment};
pub use sensors::{
    AdcpSpec, BiasSpec, BiasState, DvlSpec, Dropout, GpsSpec, ImuSpec, PressureSpec, SensorSpec,
    ThrusterSpec,
};

use crate::error::SimError;
use crate::manifold::NavState;
use crate::nav::models::{attitude_from_euler, earth_rotation_ned, wgs84_gravity};
use crate::nav::params::submatrix;
use crate::nav::{GeoConfig, VehicleParams};
use crate::sensors::{AdcpCell, AdcpProfile, ImuSample, Payload, SensorKind, SensorSample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub mission: Mission,
    pub gains: ControllerGains,
    pub current: CurrentField,
    pub bathymetry: Bathymetry,
    pub tether: Option<Tether>,
    /// Include the Coriolis and centripetal terms in the truth dynamics.
    pub coriolis: bool,
    pub sensors: SensorSpec,
    /// Truth output rate, Hz.
    pub truth_rate: f64,
    /// Fixed run length, s. Without it the run ends with the mission.
    pub duration: Option<f64>,
    /// Safety stop for missions that never finish, s.
    pub max_duration: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mission: Mission::default(),
            gains: ControllerGains::default(),
            current: CurrentField::default(),
            bathymetry: Bathymetry::default(),
            tether: None,
            coriolis: true,
            sensors: SensorSpec::default(),
            truth_rate: 10.0,
            duration: None,
            max_duration: 7200.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.mission.validate()?;
        self.current.validate()?;
        self.sensors.validate()?;
        if !(self.truth_rate > 0.0 && self.truth_rate <= self.sensors.imu.rate) {
            return Err(SimError::InvalidSpec("truth rate".into()));
        }
        if let Some(d) = self.duration {
            if !(d > 0.0) {
                return Err(SimError::InvalidSpec("duration must be positive".into()));
            }
        }
        Ok(())
    }
}

/// True navigation state at one instant; `omega` is the body rate relative
/// to the navigation frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthRecord {
    pub t: f64,
    pub state: NavState,
    pub omega: Vector3<f64>,
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub samples: Vec<SensorSample>,
    pub truth: Vec<TruthRecord>,
    /// Horizontal distance actually travelled, m.
    pub path_length: f64,
    pub duration: f64,
}

fn gauss(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * rng.sample::<f64, _>(StandardNormal)
    }
}

fn gauss3(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    Vector3::new(gauss(rng, sigma), gauss(rng, sigma), gauss(rng, sigma))
}

/// Runs the mission and synthesizes all sensor streams. Deterministic for a
/// given `seed`.
pub fn simulate(
    cfg: &SimConfig,
    vehicle: &VehicleParams,
    geo: &GeoConfig,
    seed: u64,
) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    vehicle.validate().map_err(SimError::InvalidSpec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = &cfg.sensors;
    let gravity = wgs84_gravity(geo);
    let earth = earth_rotation_ned(geo);
    let dynamics = Dynamics::new(
        vehicle.clone(),
        gravity,
        cfg.coriolis,
        cfg.current.clone(),
        cfg.tether.clone(),
    )?;
    let mut controller = Controller::new(cfg.mission.clone(), cfg.gains, vehicle.clone())?;

    let dt = 1.0 / spec.imu.rate;
    let mut gyro_bias = BiasState::new(spec.imu.gyro_bias, &mut rng);
    let mut accel_bias = BiasState::new(spec.imu.accel_bias, &mut rng);
    let mut adcp_bias = BiasState::new(spec.adcp.bias, &mut rng);

    let m = &cfg.mission;
    let mut s = TruthState::at_rest(
        Vector3::from(m.start),
        attitude_from_euler(0.0, 0.0, m.start_heading),
    );
    let dec = |k: SensorKind| spec.decimation(k);
    let (d_dvl, d_adcp, d_gps, d_pres, d_thr) = (
        dec(SensorKind::Dvl),
        dec(SensorKind::Adcp),
        dec(SensorKind::Gps),
        dec(SensorKind::Pressure),
        dec(SensorKind::Thruster),
    );
    let d_truth = ((spec.imu.rate / cfg.truth_rate).round() as usize).max(1);
    let max_range = spec.adcp.max_range();
    let gyro_sigma = spec.imu.gyro_arw * spec.imu.rate.sqrt();

    let mut samples = Vec::new();
    let mut truth = Vec::new();
    let mut forces = vec![0.0; vehicle.thruster_count()];
    let mut tau = Vector6::zeros();
    let mut path_length = 0.0;
    let mut k: usize = 0;
    loop {
        let t = k as f64 * dt;
        let finished = match cfg.duration {
            Some(d) => t > d + 1e-9,
            None => controller.is_done() || t > cfg.max_duration,
        };
        if finished {
            break;
        }
        if k % d_thr == 0 {
            forces = controller.command(t, &s);
            let w = &vehicle.thruster_allocation * nalgebra::DVector::from_column_slice(&forces);
            tau = Vector6::from_column_slice(w.as_slice());
        }
        let acc = dynamics.accelerations(&s, &tau, t);
        let depth = s.position.z;
        let cv = cfg.current.at(depth, t);
        let cb = cfg.current.at(depth + max_range, t);

        if k % d_truth == 0 {
            truth.push(TruthRecord {
                t,
                state: NavState {
                    position: s.position,
                    attitude: s.attitude.clone(),
                    velocity: s.velocity,
                    acceleration: acc.linear,
                    inertia_sub: submatrix(&vehicle.mass),
                    lin_damping_sub: submatrix(&vehicle.lin_damping),
                    quad_damping_sub: submatrix(&vehicle.quad_damping),
                    current_vehicle: cv,
                    current_bottom: cb,
                    gravity,
                    gyro_bias: gyro_bias.value(),
                    accel_bias: accel_bias.value(),
                    adcp_bias: adcp_bias.value().xy(),
                },
                omega: s.omega,
            });
        }

        if !spec.dropped(SensorKind::Imu, t) {
            let gyro = s.omega
                + s.attitude.inverse_rotate(&earth)
                + gyro_bias.value()
                + gauss3(&mut rng, gyro_sigma);
            let specific = acc.linear - Vector3::new(0.0, 0.0, gravity);
            let accel = s.attitude.inverse_rotate(&specific)
                + accel_bias.value()
                + gauss3(&mut rng, spec.imu.accel_noise);
            samples.push(SensorSample {
                t,
                payload: Payload::Imu(ImuSample { gyro, accel }),
            });
        }

        // logged after the IMU so a reader sees the acceleration the command produced
        if k % d_thr == 0 && !spec.dropped(SensorKind::Thruster, t) {
            let logged = forces
                .iter()
                .map(|f| f + gauss(&mut rng, spec.thruster.noise))
                .collect();
            samples.push(SensorSample {
                t,
                payload: Payload::Thruster { forces: logged },
            });
        }

        let altitude = cfg.bathymetry.seafloor(s.position.x, s.position.y) - depth;
        if k % d_dvl == 0 && !spec.dropped(SensorKind::Dvl, t) {
            let valid = altitude >= spec.dvl.min_altitude && altitude <= spec.dvl.max_altitude;
            let velocity = if valid {
                s.attitude.inverse_rotate(&s.velocity)
                    + s.omega.cross(&vehicle.dvl_lever)
                    + gauss3(&mut rng, spec.dvl.noise)
            } else {
                Vector3::zeros()
            };
            samples.push(SensorSample {
                t,
                payload: Payload::Dvl { velocity, valid },
            });
        }

        if k % d_adcp == 0 && !spec.dropped(SensorKind::Adcp, t) {
            let down = s.attitude.rotate(&Vector3::new(0.0, 0.0, -1.0)).z;
            let b = adcp_bias.value();
            let submerged = depth >= spec.adcp.min_depth;
            let cells = (0..spec.adcp.cells)
                .map(|i| {
                    let range = spec.adcp.cell_range(i);
                    let valid = submerged && range < spec.adcp.valid_fraction * altitude;
                    let c = cfg.current.at(depth + range * down, t);
                    let rel = Vector3::new(c.x, c.y, 0.0) - s.velocity;
                    let mut v = s.attitude.inverse_rotate(&rel) + gauss3(&mut rng, spec.adcp.noise);
                    v.x += b.x;
                    v.y += b.y;
                    AdcpCell {
                        range,
                        velocity: if valid { v } else { Vector3::zeros() },
                        valid,
                    }
                })
                .collect();
            samples.push(SensorSample {
                t,
                payload: Payload::Adcp(AdcpProfile { cells, max_range }),
            });
        }

        if k % d_gps == 0 && depth < spec.gps.max_depth && !spec.dropped(SensorKind::Gps, t) {
            let mut p = Vector2::new(
                s.position.x + gauss(&mut rng, spec.gps.noise),
                s.position.y + gauss(&mut rng, spec.gps.noise),
            );
            if spec.gps.outlier_probability > 0.0 && rng.random::<f64>() < spec.gps.outlier_probability
            {
                let a = rng.random::<f64>() * std::f64::consts::TAU;
                p += Vector2::new(a.cos(), a.sin()) * spec.gps.outlier_magnitude;
            }
            samples.push(SensorSample {
                t,
                payload: Payload::Gps { position: p },
            });
        }

        if k % d_pres == 0 && !spec.dropped(SensorKind::Pressure, t) {
            samples.push(SensorSample {
                t,
                payload: Payload::Pressure {
                    depth: depth + gauss(&mut rng, spec.pressure.noise),
                },
            });
        }

        let next = dynamics.step(&s, &tau, t, dt);
        path_length += (next.position.xy() - s.position.xy()).norm();
        s = next;
        if !s.position.iter().all(|x| x.is_finite()) {
            return Err(SimError::InvalidSpec(format!(
                "truth integration blew up at t = {t:.2} s"
            )));
        }
        gyro_bias.step(dt, &mut rng);
        accel_bias.step(dt, &mut rng);
        adcp_bias.step(dt, &mut rng);
        k += 1;
    }
    let duration = (k.max(1) - 1) as f64 * dt;
    Ok(SimOutput {
        samples,
        truth,
        path_length,
        duration,
    })
}
