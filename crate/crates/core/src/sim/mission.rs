//! Scripted missions and the waypoint controller that flies them.

use nalgebra::{DMatrix, DVector, Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::dynamics::TruthState;
use crate::error::SimError;
use crate::nav::models::{euler_from_attitude, heading};
use crate::nav::VehicleParams;

/// Upper bound on commanded speed, m/s.
pub const MAX_SPEED: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// Keep station for `duration` seconds.
    Hold { duration: f64 },
    /// Follow the straight line from the current target to `(north, east)`.
    Goto { north: f64, east: f64, speed: f64 },
    /// Turn on the spot to `heading` (rad) and hold it for `duration`.
    Turn { heading: f64, duration: f64 },
    /// Change the depth target while keeping station; 0 surfaces.
    Depth { depth: f64, duration: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Mission {
    /// NED start position, m.
    pub start: [f64; 3],
    /// rad
    pub start_heading: f64,
    pub segments: Vec<Segment>,
}

impl Default for Mission {
    fn default() -> Self {
        Mission {
            start: [0.0; 3],
            start_heading: 0.0,
            segments: vec![Segment::Hold { duration: 60.0 }],
        }
    }
}

impl Mission {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.segments.is_empty() {
            return Err(SimError::InvalidMission("no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            let ok = match s {
                Segment::Hold { duration } => *duration > 0.0,
                Segment::Goto { speed, north, east } => {
                    *speed > 0.0 && *speed <= MAX_SPEED && north.is_finite() && east.is_finite()
                }
                Segment::Turn { duration, heading } => *duration > 0.0 && heading.is_finite(),
                Segment::Depth { depth, duration } => *duration > 0.0 && *depth >= 0.0,
            };
            if !ok {
                return Err(SimError::InvalidMission(format!("segment {i}: {s:?}")));
            }
        }
        Ok(())
    }

    /// Horizontal length of the straight legs, m.
    pub fn nominal_length(&self) -> f64 {
        let mut p = Vector2::new(self.start[0], self.start[1]);
        let mut len = 0.0;
        for s in &self.segments {
            if let Segment::Goto { north, east, .. } = s {
                let q = Vector2::new(*north, *east);
                len += (q - p).norm();
                p = q;
            }
        }
        len
    }
}

/// Proportional-derivative gains expressed as natural frequencies (rad/s)
/// with critical damping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerGains {
    pub heading: f64,
    pub depth: f64,
    pub pitch: f64,
    pub position: f64,
    /// 1/s
    pub speed: f64,
    /// Line-of-sight lookahead, m.
    pub lookahead: f64,
    /// Waypoint acceptance radius, m.
    pub acceptance: f64,
    /// Per-thruster saturation, N.
    pub max_thrust: f64,
    /// Per-thruster slew limit, N/s.
    pub max_thrust_rate: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        ControllerGains {
            heading: 0.7,
            depth: 0.3,
            pitch: 1.0,
            position: 0.15,
            speed: 1.0,
            lookahead: 10.0,
            acceptance: 1.0,
            max_thrust: 60.0,
            max_thrust_rate: 20.0,
        }
    }
}

fn wrap(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let mut x = a % t;
    if x > std::f64::consts::PI {
        x -= t;
    } else if x < -std::f64::consts::PI {
        x += t;
    }
    x
}

/// Steps through a [`Mission`] and turns the truth state into thruster
/// commands.
#[derive(Clone, Debug)]
pub struct Controller {
    mission: Mission,
    gains: ControllerGains,
    params: VehicleParams,
    alloc_pinv: DMatrix<f64>,
    segment: usize,
    segment_start: f64,
    /// Station-keeping / line-start point.
    anchor: Vector2<f64>,
    target_heading: f64,
    target_depth: f64,
    done: bool,
    last: Option<(f64, Vec<f64>)>,
}

impl Controller {
    pub fn new(
        mission: Mission,
        gains: ControllerGains,
        params: VehicleParams,
    ) -> Result<Self, SimError> {
        mission.validate()?;
        let alloc_pinv = params
            .thruster_allocation
            .clone()
            .pseudo_inverse(1e-9)
            .map_err(|e| SimError::InvalidSpec(e.to_string()))?;
        Ok(Controller {
            anchor: Vector2::new(mission.start[0], mission.start[1]),
            target_heading: mission.start_heading,
            target_depth: mission.start[2],
            mission,
            gains,
            params,
            alloc_pinv,
            segment: 0,
            segment_start: 0.0,
            done: false,
            last: None,
        })
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn segment_index(&self) -> usize {
        self.segment
    }

    fn advance(&mut self, t: f64, s: &TruthState) {
        loop {
            if self.segment >= self.mission.segments.len() {
                self.done = true;
                return;
            }
            let elapsed = t - self.segment_start;
            let finished = match &self.mission.segments[self.segment] {
                Segment::Hold { duration } => elapsed >= *duration,
                Segment::Turn { duration, .. } => elapsed >= *duration,
                Segment::Depth { duration, .. } => elapsed >= *duration,
                Segment::Goto { north, east, .. } => {
                    let wp = Vector2::new(*north, *east);
                    let p = s.position.xy();
                    let leg = wp - self.anchor;
                    let along = if leg.norm() > 0.0 {
                        (p - self.anchor).dot(&leg) / leg.norm()
                    } else {
                        0.0
                    };
                    (wp - p).norm() < self.gains.acceptance || along >= leg.norm()
                }
            };
            if !finished {
                return;
            }
            match &self.mission.segments[self.segment] {
                Segment::Goto { north, east, .. } => {
                    let wp = Vector2::new(*north, *east);
                    let leg = wp - self.anchor;
                    if leg.norm() > 0.0 {
                        self.target_heading = leg.y.atan2(leg.x);
                    }
                    self.anchor = wp;
                }
                Segment::Turn { heading, .. } => self.target_heading = *heading,
                Segment::Depth { depth, .. } => self.target_depth = *depth,
                Segment::Hold { .. } => {}
            }
            self.segment += 1;
            self.segment_start = t;
        }
    }

    /// Thruster commands for the current state, saturated and slew limited
    /// per thruster.
    pub fn command(&mut self, t: f64, s: &TruthState) -> Vec<f64> {
        self.advance(t, s);
        let g = self.gains;
        let p = &self.params;
        let m = |i: usize| p.mass[(i, i)];
        let vb = s.attitude.inverse_rotate(&s.velocity);
        let psi = heading(&s.attitude);
        let (_, pitch, _) = euler_from_attitude(&s.attitude);
        let pos = s.position.xy();

        let mut depth_target = self.target_depth;
        let mut psi_d = self.target_heading;
        let mut force_h = Vector2::zeros(); // body x, y
        let mut surge_ff = 0.0;
        let seg = if self.done {
            None
        } else {
            self.mission.segments.get(self.segment).cloned()
        };
        match seg {
            Some(Segment::Goto { north, east, speed }) => {
                let wp = Vector2::new(north, east);
                let leg = wp - self.anchor;
                let chi = leg.y.atan2(leg.x);
                let right = Vector2::new(-chi.sin(), chi.cos());
                let cross = (pos - self.anchor).dot(&right);
                psi_d = chi - (cross / g.lookahead).atan();
                // slow down while the heading error is large
                let align = wrap(psi_d - psi).cos().max(0.0).powi(2);
                let u_d = speed * align;
                surge_ff = p.lin_damping[(0, 0)] * u_d + p.quad_damping[(0, 0)] * u_d * u_d;
                force_h.x = m(0) * g.speed * (u_d - vb.x);
                force_h.y = -m(1) * g.speed * vb.y;
            }
            Some(Segment::Turn { heading, .. }) => {
                psi_d = heading;
                force_h = self.station_keep(pos, &vb, psi);
            }
            Some(Segment::Depth { depth, .. }) => {
                depth_target = depth;
                force_h = self.station_keep(pos, &vb, psi);
            }
            Some(Segment::Hold { .. }) | None => {
                force_h = self.station_keep(pos, &vb, psi);
            }
        }

        let wh = g.heading;
        let yaw = -m(5) * wh * wh * wrap(psi_d - psi) - 2.0 * m(5) * wh * s.omega.z;
        let wd = g.depth;
        let up_vel = -s.velocity.z;
        let restoring_up = p.weight - p.buoyancy;
        let up = m(2) * wd * wd * (s.position.z - depth_target) - 2.0 * m(2) * wd * up_vel
            + restoring_up;
        let wp = g.pitch;
        // body y is left: nose-up pitch is a negative rotation about it
        let pitch_torque = m(4) * wp * wp * pitch - 2.0 * m(4) * wp * s.omega.y;
        let tau = Vector6::new(
            surge_ff + force_h.x,
            force_h.y,
            up,
            0.0,
            pitch_torque,
            yaw,
        );
        let u = &self.alloc_pinv * DVector::from_column_slice(tau.as_slice());
        let mut out: Vec<f64> = u
            .iter()
            .map(|f| f.clamp(-g.max_thrust, g.max_thrust))
            .collect();
        if let Some((t_prev, prev)) = &self.last {
            let step = g.max_thrust_rate * (t - t_prev);
            for (f, p) in out.iter_mut().zip(prev) {
                *f = f.clamp(p - step, p + step);
            }
        }
        self.last = Some((t, out.clone()));
        out
    }

    fn station_keep(&self, pos: Vector2<f64>, vb: &Vector3<f64>, psi: f64) -> Vector2<f64> {
        let w = self.gains.position;
        let e = self.anchor - pos;
        // nav error into body x (forward) and y (left)
        let (s, c) = psi.sin_cos();
        let ex = c * e.x + s * e.y;
        let ey = s * e.x - c * e.y;
        let m = |i: usize| self.params.mass[(i, i)];
        Vector2::new(
            m(0) * (w * w * ex - 2.0 * w * vb.x),
            m(1) * (w * w * ey - 2.0 * w * vb.y),
        )
    }
}
