//! Chart operations for SO(3) and for the full navigation state.
//!
//! The attitude is stored as a unit quaternion and perturbed on the right:
//! `boxplus(s, δ).attitude = s.attitude ∘ exp(δφ)`, so the attitude block of
//! every tangent vector and covariance is expressed in the body frame.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix2x3, Matrix3, Quaternion, UnitQuaternion, Vector2, Vector3};

/// Below this angle exp/log use second-order series.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Tangent dimension of [`NavState`].
pub const NAV_DIM: usize = 43;

/// Offsets of each block inside a 43-component tangent vector.
///
/// The ordering is part of the public contract: covariance indices are
/// shared across the filter, the result files and the evaluation tools.
pub mod idx {
    use std::ops::Range;

    pub const POS: Range<usize> = 0..3;
    pub const ATT: Range<usize> = 3..6;
    pub const VEL: Range<usize> = 6..9;
    pub const ACC: Range<usize> = 9..12;
    pub const INERTIA: Range<usize> = 12..18;
    pub const LIN_DAMP: Range<usize> = 18..24;
    pub const QUAD_DAMP: Range<usize> = 24..30;
    pub const CUR_VEH: Range<usize> = 30..32;
    pub const CUR_BOT: Range<usize> = 32..34;
    pub const GRAVITY: usize = 34;
    pub const GYRO_BIAS: Range<usize> = 35..38;
    pub const ACC_BIAS: Range<usize> = 38..41;
    pub const ADCP_BIAS: Range<usize> = 41..43;

    /// Block names and ranges in tangent order.
    pub const BLOCKS: [(&str, Range<usize>); 13] = [
        ("pos", POS),
        ("att", ATT),
        ("vel", VEL),
        ("acc", ACC),
        ("msub", INERTIA),
        ("dlsub", LIN_DAMP),
        ("dqsub", QUAD_DAMP),
        ("cv", CUR_VEH),
        ("cb", CUR_BOT),
        ("g", GRAVITY..GRAVITY + 1),
        ("bw", GYRO_BIAS),
        ("ba", ACC_BIAS),
        ("bc", ADCP_BIAS),
    ];
}

/// Element of SO(3), body to navigation frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(UnitQuaternion<f64>);

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation(UnitQuaternion::identity())
    }

    pub fn from_quaternion(q: UnitQuaternion<f64>) -> Self {
        Rotation(UnitQuaternion::new_normalize(q.into_inner()))
    }

    /// Builds from a raw quaternion `(w, x, y, z)`, normalizing it.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Self {
        Rotation(UnitQuaternion::new_normalize(Quaternion::new(w, x, y, z)))
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let rot = nalgebra::Rotation3::from_matrix(m);
        Rotation(UnitQuaternion::from_rotation_matrix(&rot))
    }

    pub fn quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }

    /// `C^n_b`: maps body-frame vectors into the navigation frame.
    pub fn matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.transform_vector(v)
    }

    pub fn inverse_rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.inverse_transform_vector(v)
    }

    pub fn inverse(&self) -> Self {
        Rotation(self.0.inverse())
    }

    /// `self ∘ other`, renormalized.
    pub fn compose(&self, other: &Rotation) -> Self {
        let q = self.0.quaternion() * other.0.quaternion();
        Rotation(UnitQuaternion::new_normalize(q))
    }

    /// Angular distance to `other` in radians.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        log_so3(&self.inverse().compose(other)).norm()
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}

/// Exponential map: rotation by `‖v‖` about `v / ‖v‖`.
pub fn exp_so3(v: &Vector3<f64>) -> Rotation {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let (w, s) = if theta < SMALL_ANGLE {
        // sin(θ/2)/θ ≈ 1/2 − θ²/48
        (1.0 - theta2 / 8.0, 0.5 - theta2 / 48.0)
    } else {
        let half = 0.5 * theta;
        (half.cos(), half.sin() / theta)
    };
    Rotation::from_wxyz(w, s * v.x, s * v.y, s * v.z)
}

/// Logarithm map returning the principal rotation vector, `‖result‖ ≤ π`.
///
/// At exactly π the axis sign is ambiguous; the axis whose first nonzero
/// component is positive is returned.
pub fn log_so3(r: &Rotation) -> Vector3<f64> {
    let q = r.0.quaternion();
    let (mut w, mut xyz) = (q.w, q.imag());
    if w < 0.0 {
        w = -w;
        xyz = -xyz;
    }
    let s = xyz.norm();
    if s < SMALL_ANGLE {
        // θ/sin(θ/2) ≈ 2 (1 + θ²/24) with θ ≈ 2s
        let k = 2.0 / w * (1.0 - s * s / (3.0 * w * w));
        return xyz * k;
    }
    let theta = 2.0 * s.atan2(w);
    let mut axis = xyz / s;
    if w == 0.0 {
        let first = axis.iter().copied().find(|c| *c != 0.0).unwrap_or(1.0);
        if first < 0.0 {
            axis = -axis;
        }
    }
    axis * theta
}

/// Skew-symmetric cross-product matrix.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// A point on a manifold with a fixed-dimension local chart.
pub trait Manifold: Clone {
    /// Tangent-space dimension.
    const DIM: usize;

    /// `self ⊞ delta`, with `delta.len() == DIM`.
    fn boxplus(&self, delta: &[f64]) -> Self;

    /// Writes `self ⊟ other` into `out`.
    fn boxminus_into(&self, other: &Self, out: &mut [f64]);

    fn boxminus(&self, other: &Self) -> Vec<f64> {
        let mut out = vec![0.0; Self::DIM];
        self.boxminus_into(other, &mut out);
        out
    }
}

/// Plain Euclidean point, mostly useful for checking the filter against
/// closed-form linear estimators.
#[derive(Clone, Debug, PartialEq)]
pub struct Euclidean<const N: usize>(pub [f64; N]);

impl<const N: usize> Manifold for Euclidean<N> {
    const DIM: usize = N;

    fn boxplus(&self, delta: &[f64]) -> Self {
        let mut out = self.0;
        for (o, d) in out.iter_mut().zip(delta) {
            *o += d;
        }
        Euclidean(out)
    }

    fn boxminus_into(&self, other: &Self, out: &mut [f64]) {
        for i in 0..N {
            out[i] = self.0[i] - other.0[i];
        }
    }
}

/// 43-component tangent vector, ordered as in [`idx`].
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector(pub [f64; NAV_DIM]);

impl Default for TangentVector {
    fn default() -> Self {
        TangentVector([0.0; NAV_DIM])
    }
}

impl TangentVector {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut t = Self::zeros();
        t.0.copy_from_slice(s);
        t
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn block(&self, r: std::ops::Range<usize>) -> &[f64] {
        &self.0[r]
    }

    pub fn set_block(&mut self, start: usize, values: &[f64]) {
        self.0[start..start + values.len()].copy_from_slice(values);
    }
}

/// Full navigation filter state.
#[derive(Clone, Debug, PartialEq)]
pub struct NavState {
    /// IMU position, NED, m.
    pub position: Vector3<f64>,
    /// Body (x fwd, y left, z up) to NED.
    pub attitude: Rotation,
    /// IMU velocity, NED, m/s.
    pub velocity: Vector3<f64>,
    /// IMU acceleration, NED, m/s².
    pub acceleration: Vector3<f64>,
    /// Inertia rows {surge, sway} × columns {u, v, r}.
    pub inertia_sub: Matrix2x3<f64>,
    pub lin_damping_sub: Matrix2x3<f64>,
    pub quad_damping_sub: Matrix2x3<f64>,
    /// Horizontal water current around the vehicle, NED.
    pub current_vehicle: Vector2<f64>,
    /// Horizontal water current at the maximum ADCP range, NED.
    pub current_bottom: Vector2<f64>,
    /// Gravity magnitude, m/s².
    pub gravity: f64,
    pub gyro_bias: Vector3<f64>,
    pub accel_bias: Vector3<f64>,
    /// ADCP bias on the two horizontal body axes.
    pub adcp_bias: Vector2<f64>,
}

impl Default for NavState {
    fn default() -> Self {
        NavState {
            position: Vector3::zeros(),
            attitude: Rotation::identity(),
            velocity: Vector3::zeros(),
            acceleration: Vector3::zeros(),
            inertia_sub: Matrix2x3::zeros(),
            lin_damping_sub: Matrix2x3::zeros(),
            quad_damping_sub: Matrix2x3::zeros(),
            current_vehicle: Vector2::zeros(),
            current_bottom: Vector2::zeros(),
            gravity: 0.0,
            gyro_bias: Vector3::zeros(),
            accel_bias: Vector3::zeros(),
            adcp_bias: Vector2::zeros(),
        }
    }
}

fn add3(v: &mut Vector3<f64>, d: &[f64]) {
    v.x += d[0];
    v.y += d[1];
    v.z += d[2];
}

fn add2(v: &mut Vector2<f64>, d: &[f64]) {
    v.x += d[0];
    v.y += d[1];
}

fn add2x3(m: &mut Matrix2x3<f64>, d: &[f64]) {
    for r in 0..2 {
        for c in 0..3 {
            m[(r, c)] += d[3 * r + c];
        }
    }
}

fn sub3(out: &mut [f64], a: &Vector3<f64>, b: &Vector3<f64>) {
    out[0] = a.x - b.x;
    out[1] = a.y - b.y;
    out[2] = a.z - b.z;
}

fn sub2(out: &mut [f64], a: &Vector2<f64>, b: &Vector2<f64>) {
    out[0] = a.x - b.x;
    out[1] = a.y - b.y;
}

fn sub2x3(out: &mut [f64], a: &Matrix2x3<f64>, b: &Matrix2x3<f64>) {
    for r in 0..2 {
        for c in 0..3 {
            out[3 * r + c] = a[(r, c)] - b[(r, c)];
        }
    }
}

impl Manifold for NavState {
    const DIM: usize = NAV_DIM;

    fn boxplus(&self, d: &[f64]) -> Self {
        debug_assert_eq!(d.len(), NAV_DIM);
        let mut s = self.clone();
        add3(&mut s.position, &d[idx::POS]);
        let dphi = Vector3::new(d[3], d[4], d[5]);
        if dphi != Vector3::zeros() {
            s.attitude = self.attitude.compose(&exp_so3(&dphi));
        }
        add3(&mut s.velocity, &d[idx::VEL]);
        add3(&mut s.acceleration, &d[idx::ACC]);
        add2x3(&mut s.inertia_sub, &d[idx::INERTIA]);
        add2x3(&mut s.lin_damping_sub, &d[idx::LIN_DAMP]);
        add2x3(&mut s.quad_damping_sub, &d[idx::QUAD_DAMP]);
        add2(&mut s.current_vehicle, &d[idx::CUR_VEH]);
        add2(&mut s.current_bottom, &d[idx::CUR_BOT]);
        s.gravity += d[idx::GRAVITY];
        add3(&mut s.gyro_bias, &d[idx::GYRO_BIAS]);
        add3(&mut s.accel_bias, &d[idx::ACC_BIAS]);
        add2(&mut s.adcp_bias, &d[idx::ADCP_BIAS]);
        s
    }

    fn boxminus_into(&self, b: &Self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), NAV_DIM);
        sub3(&mut out[idx::POS], &self.position, &b.position);
        let dphi = if self.attitude == b.attitude {
            Vector3::zeros()
        } else {
            log_so3(&b.attitude.inverse().compose(&self.attitude))
        };
        out[3] = dphi.x;
        out[4] = dphi.y;
        out[5] = dphi.z;
        sub3(&mut out[idx::VEL], &self.velocity, &b.velocity);
        sub3(&mut out[idx::ACC], &self.acceleration, &b.acceleration);
        sub2x3(&mut out[idx::INERTIA], &self.inertia_sub, &b.inertia_sub);
        sub2x3(&mut out[idx::LIN_DAMP], &self.lin_damping_sub, &b.lin_damping_sub);
        sub2x3(&mut out[idx::QUAD_DAMP], &self.quad_damping_sub, &b.quad_damping_sub);
        sub2(&mut out[idx::CUR_VEH], &self.current_vehicle, &b.current_vehicle);
        sub2(&mut out[idx::CUR_BOT], &self.current_bottom, &b.current_bottom);
        out[idx::GRAVITY] = self.gravity - b.gravity;
        sub3(&mut out[idx::GYRO_BIAS], &self.gyro_bias, &b.gyro_bias);
        sub3(&mut out[idx::ACC_BIAS], &self.accel_bias, &b.accel_bias);
        sub2(&mut out[idx::ADCP_BIAS], &self.adcp_bias, &b.adcp_bias);
    }
}

impl NavState {
    pub fn plus(&self, delta: &TangentVector) -> NavState {
        self.boxplus(&delta.0)
    }

    pub fn minus(&self, other: &NavState) -> TangentVector {
        let mut t = TangentVector::zeros();
        self.boxminus_into(other, &mut t.0);
        t
    }

    /// `C^b_n`.
    pub fn nav_to_body(&self) -> Matrix3<f64> {
        self.attitude.matrix().transpose()
    }
}

impl fmt::Display for NavState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = self.attitude.quaternion();
        write!(
            f,
            "p=({:.3},{:.3},{:.3}) q=({:.5},{:.5},{:.5},{:.5}) v=({:.3},{:.3},{:.3})",
            self.position.x,
            self.position.y,
            self.position.z,
            q.w,
            q.i,
            q.j,
            q.k,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn exp_zero_is_identity() {
        let r = exp_so3(&Vector3::zeros());
        assert_eq!(r.quaternion().w, 1.0);
        assert_abs_diff_eq!(r.quaternion().imag().norm(), 0.0);
    }

    #[test]
    fn quarter_turn_about_x_maps_y_to_z() {
        // Rodrigues: R = I + sinθ K + (1-cosθ) K², θ = π/2, axis x.
        let r = exp_so3(&Vector3::new(FRAC_PI_2, 0.0, 0.0));
        let out = r.rotate(&Vector3::new(0.0, 1.0, 0.0));
        assert_abs_diff_eq!(out, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn log_inverts_exp() {
        let v = Vector3::new(0.1, -0.2, 0.3);
        assert_abs_diff_eq!(log_so3(&exp_so3(&v)), v, epsilon = 1e-12);
        let v = Vector3::new(0.3, 0.0, 0.0);
        assert_abs_diff_eq!(log_so3(&exp_so3(&v)), v, epsilon = 1e-12);
        assert_abs_diff_eq!(log_so3(&Rotation::identity()), Vector3::zeros());
    }

    #[test]
    fn log_at_pi_uses_positive_axis() {
        let r = Rotation::from_wxyz(0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(log_so3(&r), Vector3::new(0.0, 0.0, PI), epsilon = 1e-12);
        let r = Rotation::from_wxyz(0.0, 0.0, 0.0, -1.0);
        assert_abs_diff_eq!(log_so3(&r), Vector3::new(0.0, 0.0, PI), epsilon = 1e-12);
        let r = Rotation::from_wxyz(0.0, 0.0, -0.6, 0.8);
        assert_abs_diff_eq!(
            log_so3(&r),
            Vector3::new(0.0, 0.6 * PI, -0.8 * PI),
            epsilon = 1e-12
        );
    }

    #[test]
    fn small_angle_branch_is_consistent() {
        let v = Vector3::new(3e-9, -1e-9, 2e-9);
        let r = exp_so3(&v);
        assert_abs_diff_eq!(log_so3(&r), v, epsilon = 1e-20);
        let just_above = Vector3::new(2e-8, 0.0, 0.0);
        assert_abs_diff_eq!(log_so3(&exp_so3(&just_above)), just_above, epsilon = 1e-20);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let r = exp_so3(&Vector3::new(0.4, 1.1, -2.0));
        let id = r.compose(&r.inverse());
        assert!(log_so3(&id).norm() < 1e-12);
        assert_eq!(r.compose(&Rotation::identity()), r);
    }

    #[test]
    fn boxplus_zero_and_position_block() {
        let mut s = NavState::default();
        s.position = Vector3::new(1.0, 2.0, 3.0);
        s.gravity = 9.81;
        assert_eq!(s.plus(&TangentVector::zeros()), s);

        let mut d = TangentVector::zeros();
        d.0[0] = 0.1;
        let p = s.plus(&d);
        assert_abs_diff_eq!(p.position, Vector3::new(1.1, 2.0, 3.0), epsilon = 1e-15);
    }

    #[test]
    fn boxminus_self_is_zero_and_gravity_difference() {
        let mut a = NavState::default();
        a.attitude = exp_so3(&Vector3::new(0.3, 0.2, -1.0));
        a.gravity = 9.81;
        assert!(a.minus(&a).norm() < 1e-15);
        let mut b = a.clone();
        b.gravity = 9.80;
        let d = a.minus(&b);
        assert_abs_diff_eq!(d.0[idx::GRAVITY], 0.01, epsilon = 1e-12);
        assert!(d.0.iter().enumerate().all(|(i, x)| i == idx::GRAVITY || *x == 0.0));
    }

    #[test]
    fn boxplus_perturbs_on_the_right() {
        let mut s = NavState::default();
        s.attitude = exp_so3(&Vector3::new(0.0, 0.0, 1.0));
        let mut d = TangentVector::zeros();
        d.0[3] = 0.2;
        let p = s.plus(&d);
        let expected = s.attitude.compose(&exp_so3(&Vector3::new(0.2, 0.0, 0.0)));
        assert!(p.attitude.angle_to(&expected) < 1e-14);
    }

    #[test]
    fn block_table_covers_tangent_space() {
        let mut next = 0;
        for (_, r) in idx::BLOCKS.iter() {
            assert_eq!(r.start, next);
            next = r.end;
        }
        assert_eq!(next, NAV_DIM);
    }
}
