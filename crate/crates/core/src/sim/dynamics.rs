//! Six-degree-of-freedom truth dynamics, water currents and bathymetry.

use nalgebra::{Matrix3, Matrix6, Quaternion, UnitQuaternion, Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::manifold::Rotation;
use crate::nav::models::{damping_wrench, restoring_wrench};
use crate::nav::VehicleParams;

/// Horizontal current, linear in depth through a surface value and a value
/// at `reference_depth`, extrapolated beyond, plus a uniform drift in time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurrentField {
    pub surface: [f64; 2],
    pub reference: [f64; 2],
    pub reference_depth: f64,
    /// m/s per s
    pub drift: [f64; 2],
}

impl Default for CurrentField {
    fn default() -> Self {
        CurrentField {
            surface: [0.0; 2],
            reference: [0.0; 2],
            reference_depth: 50.0,
            drift: [0.0; 2],
        }
    }
}

impl CurrentField {
    pub fn uniform(c: [f64; 2]) -> Self {
        CurrentField {
            surface: c,
            reference: c,
            ..Default::default()
        }
    }

    pub fn at(&self, depth: f64, t: f64) -> Vector2<f64> {
        let s = Vector2::from(self.surface);
        let r = Vector2::from(self.reference);
        s + (r - s) * (depth / self.reference_depth) + Vector2::from(self.drift) * t
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let finite = self
            .surface
            .iter()
            .chain(&self.reference)
            .chain(&self.drift)
            .all(|x| x.is_finite());
        if !finite || !(self.reference_depth > 0.0) {
            return Err(SimError::InvalidSpec("current field".into()));
        }
        Ok(())
    }
}

/// Gaussian bump rising from the seafloor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shoal {
    pub north: f64,
    pub east: f64,
    /// m
    pub radius: f64,
    /// Rise above the base depth at the center, m.
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bathymetry {
    /// Base water depth, m.
    pub depth: f64,
    pub shoals: Vec<Shoal>,
}

impl Default for Bathymetry {
    fn default() -> Self {
        Bathymetry {
            depth: 40.0,
            shoals: Vec::new(),
        }
    }
}

impl Bathymetry {
    /// Seafloor depth below the surface at a horizontal position.
    pub fn seafloor(&self, north: f64, east: f64) -> f64 {
        let rise: f64 = self
            .shoals
            .iter()
            .map(|s| {
                let d2 = (north - s.north).powi(2) + (east - s.east).powi(2);
                s.height * (-d2 / (2.0 * s.radius * s.radius)).exp()
            })
            .sum();
        self.depth - rise
    }
}

/// Slowly rotating horizontal force at the body origin, e.g. a tether.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tether {
    /// N
    pub force: f64,
    /// Rotation period of the force direction, s.
    pub period: f64,
    /// Direction at t = 0, rad from north.
    pub phase: f64,
}

impl Tether {
    pub fn force_ned(&self, t: f64) -> Vector3<f64> {
        let a = self.phase + 2.0 * std::f64::consts::PI * t / self.period;
        Vector3::new(a.cos(), a.sin(), 0.0) * self.force
    }
}

/// Rigid-body truth state.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthState {
    /// NED, m.
    pub position: Vector3<f64>,
    pub attitude: Rotation,
    /// NED, m/s.
    pub velocity: Vector3<f64>,
    /// Body rate, rad/s.
    pub omega: Vector3<f64>,
}

impl TruthState {
    pub fn at_rest(position: Vector3<f64>, attitude: Rotation) -> Self {
        TruthState {
            position,
            attitude,
            velocity: Vector3::zeros(),
            omega: Vector3::zeros(),
        }
    }
}

/// Time derivative of the velocity states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accelerations {
    /// NED, m/s².
    pub linear: Vector3<f64>,
    /// Body, rad/s².
    pub angular: Vector3<f64>,
}

/// Vehicle dynamics `M [Cᵇₙ aⁿ; ω̇] = τ + τ_ext − C(ν_r) ν_r − D(ν_r) ν_r − g(R)`
/// with `ν_r` the water-relative body velocity.
#[derive(Clone, Debug)]
pub struct Dynamics {
    pub params: VehicleParams,
    minv: Matrix6<f64>,
    /// Translational added mass, used by the Coriolis term.
    added_mass: Matrix3<f64>,
    /// Include added-mass Coriolis/centripetal and gyroscopic terms.
    pub coriolis: bool,
    pub current: CurrentField,
    pub tether: Option<Tether>,
}

impl Dynamics {
    pub fn new(
        params: VehicleParams,
        gravity: f64,
        coriolis: bool,
        current: CurrentField,
        tether: Option<Tether>,
    ) -> Result<Self, SimError> {
        let minv = params.mass.try_inverse().ok_or(SimError::SingularInertia)?;
        if !minv.iter().all(|x| x.is_finite()) {
            return Err(SimError::SingularInertia);
        }
        let rigid = params.weight / gravity;
        let added_mass = params.mass.fixed_view::<3, 3>(0, 0).into_owned()
            - Matrix3::identity() * rigid;
        Ok(Dynamics {
            params,
            minv,
            added_mass,
            coriolis,
            current,
            tether,
        })
    }

    /// Water-relative body velocity `[v; ω]`.
    pub fn relative_velocity(&self, s: &TruthState, t: f64) -> Vector6<f64> {
        let c = self.current.at(s.position.z, t);
        let v = s
            .attitude
            .inverse_rotate(&(s.velocity - Vector3::new(c.x, c.y, 0.0)));
        Vector6::new(v.x, v.y, v.z, s.omega.x, s.omega.y, s.omega.z)
    }

    pub fn accelerations(&self, s: &TruthState, tau: &Vector6<f64>, t: f64) -> Accelerations {
        let p = &self.params;
        let nu = self.relative_velocity(s, t);
        let v = nu.fixed_rows::<3>(0).into_owned();
        let w = s.omega;
        let mut rhs = tau - damping_wrench(&p.lin_damping, &p.quad_damping, &nu)
            - restoring_wrench(&s.attitude, p);
        if let Some(tether) = &self.tether {
            let f = s.attitude.inverse_rotate(&tether.force_ned(t));
            rhs += Vector6::new(f.x, f.y, f.z, 0.0, 0.0, 0.0);
        }
        if self.coriolis {
            let lin = self.added_mass * v;
            let ang = p.mass.fixed_view::<3, 3>(3, 3) * w;
            let f = w.cross(&lin);
            let m = v.cross(&lin) + w.cross(&ang);
            rhs -= Vector6::new(f.x, f.y, f.z, m.x, m.y, m.z);
        }
        let x = self.minv * rhs;
        Accelerations {
            linear: s.attitude.rotate(&Vector3::new(x[0], x[1], x[2])),
            angular: Vector3::new(x[3], x[4], x[5]),
        }
    }

    /// One classical Runge-Kutta step with the wrench held constant.
    pub fn step(&self, s: &TruthState, tau: &Vector6<f64>, t: f64, dt: f64) -> TruthState {
        // state: p(3) q(4) v(3) ω(3)
        let deriv = |x: &[f64; 13], tt: f64| -> [f64; 13] {
            let q = UnitQuaternion::new_normalize(Quaternion::new(x[3], x[4], x[5], x[6]));
            let st = TruthState {
                position: Vector3::new(x[0], x[1], x[2]),
                attitude: Rotation::from_quaternion(q),
                velocity: Vector3::new(x[7], x[8], x[9]),
                omega: Vector3::new(x[10], x[11], x[12]),
            };
            let a = self.accelerations(&st, tau, tt);
            let qq = Quaternion::new(x[3], x[4], x[5], x[6]);
            let qd = qq * Quaternion::new(0.0, st.omega.x, st.omega.y, st.omega.z) * 0.5;
            [
                x[7], x[8], x[9], qd.w, qd.i, qd.j, qd.k, a.linear.x, a.linear.y, a.linear.z,
                a.angular.x, a.angular.y, a.angular.z,
            ]
        };
        let q = s.attitude.quaternion();
        let x0 = [
            s.position.x, s.position.y, s.position.z, q.w, q.i, q.j, q.k, s.velocity.x,
            s.velocity.y, s.velocity.z, s.omega.x, s.omega.y, s.omega.z,
        ];
        let add = |a: &[f64; 13], k: &[f64; 13], h: f64| {
            let mut o = *a;
            for i in 0..13 {
                o[i] += h * k[i];
            }
            o
        };
        let k1 = deriv(&x0, t);
        let k2 = deriv(&add(&x0, &k1, 0.5 * dt), t + 0.5 * dt);
        let k3 = deriv(&add(&x0, &k2, 0.5 * dt), t + 0.5 * dt);
        let k4 = deriv(&add(&x0, &k3, dt), t + dt);
        let mut x = x0;
        for i in 0..13 {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        TruthState {
            position: Vector3::new(x[0], x[1], x[2]),
            attitude: Rotation::from_wxyz(x[3], x[4], x[5], x[6]),
            velocity: Vector3::new(x[7], x[8], x[9]),
            omega: Vector3::new(x[10], x[11], x[12]),
        }
    }

    /// `½ νᵀ M ν` of the water-relative velocity.
    pub fn kinetic_energy(&self, s: &TruthState, t: f64) -> f64 {
        let nu = self.relative_velocity(s, t);
        0.5 * (nu.transpose() * self.params.mass * nu)[0]
    }
}
