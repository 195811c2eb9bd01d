//! Process and measurement models of the navigation filter. All functions
//! are pure and evaluated once per sigma point.

use nalgebra::{DVector, Matrix6, Vector2, Vector3, Vector6};

use super::params::{override_submatrix, GeoConfig, MarkovConfig, VehicleParams};
use crate::error::NavError;
use crate::manifold::{exp_so3, NavState, Rotation};

/// Earth rotation in NED: `(ω_e cos λ, 0, −ω_e sin λ)`.
pub fn earth_rotation_ned(geo: &GeoConfig) -> Vector3<f64> {
    let (s, c) = geo.latitude.sin_cos();
    Vector3::new(geo.earth_rate * c, 0.0, -geo.earth_rate * s)
}

/// Somigliana normal gravity on the WGS-84 ellipsoid.
pub fn wgs84_gravity(geo: &GeoConfig) -> f64 {
    use super::params::{WGS84_E2, WGS84_GAMMA_E, WGS84_K};
    let s2 = geo.latitude.sin().powi(2);
    WGS84_GAMMA_E * (1.0 + WGS84_K * s2) / (1.0 - WGS84_E2 * s2).sqrt()
}

/// Unit vertical opposing gravity, NED.
fn up_ned() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -1.0)
}

/// Body angular rate relative to the navigation frame:
/// gyro reading minus bias minus Earth rate seen in the body.
pub fn body_rate(s: &NavState, gyro: &Vector3<f64>, geo: &GeoConfig) -> Vector3<f64> {
    gyro - s.gyro_bias - s.attitude.inverse_rotate(&earth_rotation_ned(geo))
}

/// Inertial prediction over `dt`: constant acceleration for translation
/// (exact over the step, so position picks up `a·dt²/2`),
/// constant angular rate for attitude, Markov decay for biases, parameters
/// and currents.
pub fn predict_inertial(
    s: &NavState,
    gyro: &Vector3<f64>,
    dt: f64,
    geo: &GeoConfig,
    markov: &MarkovConfig,
    means: &NavState,
) -> Result<NavState, NavError> {
    if !(dt > 0.0) {
        return Err(NavError::NonPositiveDt(dt));
    }
    let mut n = s.clone();
    n.position = s.position + s.velocity * dt + s.acceleration * (0.5 * dt * dt);
    n.velocity = s.velocity + s.acceleration * dt;
    // C^n_b(ω − b) − Ω_e, applied as a body-frame increment on the right
    let rate = body_rate(s, gyro, geo);
    n.attitude = s.attitude.compose(&exp_so3(&(rate * dt)));

    let step = |x: f64, m: f64, tau: f64| x + dt * (-(x - m) / tau);
    for i in 0..3 {
        n.gyro_bias[i] = step(s.gyro_bias[i], means.gyro_bias[i], markov.gyro_bias.tau);
        n.accel_bias[i] = step(s.accel_bias[i], means.accel_bias[i], markov.accel_bias.tau);
    }
    for i in 0..2 {
        n.adcp_bias[i] = step(s.adcp_bias[i], means.adcp_bias[i], markov.adcp_bias.tau);
        n.current_vehicle[i] = step(
            s.current_vehicle[i],
            means.current_vehicle[i],
            markov.current_vehicle.tau,
        );
        n.current_bottom[i] = step(
            s.current_bottom[i],
            means.current_bottom[i],
            markov.current_bottom.tau,
        );
    }
    for k in 0..6 {
        n.inertia_sub[k] = step(s.inertia_sub[k], means.inertia_sub[k], markov.inertia.tau);
        n.lin_damping_sub[k] = step(
            s.lin_damping_sub[k],
            means.lin_damping_sub[k],
            markov.lin_damping.tau,
        );
        n.quad_damping_sub[k] = step(
            s.quad_damping_sub[k],
            means.quad_damping_sub[k],
            markov.quad_damping.tau,
        );
    }
    Ok(n)
}

/// Predicted accelerometer reading `C^b_n (aⁿ − gⁿ) + b_a`, `gⁿ = (0, 0, g)`.
pub fn accel_measurement(s: &NavState) -> Vector3<f64> {
    let specific = s.acceleration - Vector3::new(0.0, 0.0, s.gravity);
    s.attitude.inverse_rotate(&specific) + s.accel_bias
}

/// Restoring forces and moments in the body frame.
///
/// `k̂` is the vertical unit vector opposing gravity, so a vehicle heavier
/// than its buoyancy needs a positive (upward) body force to hover.
pub fn restoring_wrench(r: &Rotation, p: &VehicleParams) -> Vector6<f64> {
    let k = r.inverse_rotate(&up_ned());
    let f = k * (p.weight - p.buoyancy);
    let m = p.center_of_gravity.cross(&(k * p.weight)) - p.center_of_buoyancy.cross(&(k * p.buoyancy));
    Vector6::new(f.x, f.y, f.z, m.x, m.y, m.z)
}

/// Body-frame acceleration of the body origin, `C^b_n aⁿ − ω × (ω × pᵇ)`.
pub fn body_acceleration(s: &NavState, omega: &Vector3<f64>, p: &VehicleParams) -> Vector3<f64> {
    s.attitude.inverse_rotate(&s.acceleration) - omega.cross(&omega.cross(&p.imu_lever))
}

/// Water-relative body velocity, `C^b_n (vⁿ − v_c) − ω × pᵇ`; the current has
/// no vertical component.
pub fn body_velocity(s: &NavState, omega: &Vector3<f64>, p: &VehicleParams) -> Vector3<f64> {
    let c = &s.current_vehicle;
    let rel = s.velocity - Vector3::new(c.x, c.y, 0.0);
    s.attitude.inverse_rotate(&rel) - omega.cross(&p.imu_lever)
}

/// `D_l ν + D_q (|ν| ⊙ ν)`.
pub fn damping_wrench(dl: &Matrix6<f64>, dq: &Matrix6<f64>, nu: &Vector6<f64>) -> Vector6<f64> {
    let abs_nu = nu.map(|x| x.abs() * x);
    dl * nu + dq * abs_nu
}

/// Full 6×6 matrices with the filter's 2×3 state blocks written in.
pub fn effective_matrices(
    s: &NavState,
    p: &VehicleParams,
) -> (Matrix6<f64>, Matrix6<f64>, Matrix6<f64>) {
    (
        override_submatrix(&p.mass, &s.inertia_sub),
        override_submatrix(&p.lin_damping, &s.lin_damping_sub),
        override_submatrix(&p.quad_damping, &s.quad_damping_sub),
    )
}

/// Predicted body wrench from the vehicle model. Angular acceleration is
/// taken as zero.
pub fn model_aiding_measurement(
    s: &NavState,
    omega: &Vector3<f64>,
    p: &VehicleParams,
) -> Vector6<f64> {
    let (m, dl, dq) = effective_matrices(s, p);
    let a = body_acceleration(s, omega, p);
    let v = body_velocity(s, omega, p);
    let accel = Vector6::new(a.x, a.y, a.z, 0.0, 0.0, 0.0);
    let nu = Vector6::new(v.x, v.y, v.z, omega.x, omega.y, omega.z);
    m * accel + damping_wrench(&dl, &dq, &nu) + restoring_wrench(&s.attitude, p)
}

/// Body wrench produced by the thruster forces.
pub fn thruster_wrench(forces: &[f64], p: &VehicleParams) -> Result<Vector6<f64>, NavError> {
    let k = p.thruster_count();
    if forces.len() != k {
        return Err(NavError::DimensionMismatch {
            expected: k,
            got: forces.len(),
        });
    }
    let w = &p.thruster_allocation * DVector::from_column_slice(forces);
    Ok(Vector6::from_column_slice(w.as_slice()))
}

/// Predicted ADCP reading of the cell at `range`: water velocity relative to
/// the vehicle, linearly interpolated between the two current states, in the
/// body frame plus the horizontal ADCP bias.
pub fn adcp_cell_measurement(
    s: &NavState,
    range: f64,
    max_range: f64,
) -> Result<Vector3<f64>, NavError> {
    if !(range >= 0.0 && range <= max_range) || max_range <= 0.0 {
        return Err(NavError::CellOutOfRange {
            range,
            max: max_range,
        });
    }
    Ok(adcp_cell_unchecked(s, range / max_range))
}

/// [`adcp_cell_measurement`] with the range already normalized to `[0, 1]`.
pub fn adcp_cell_unchecked(s: &NavState, frac: f64) -> Vector3<f64> {
    let c = s.current_vehicle * (1.0 - frac) + s.current_bottom * frac;
    let rel = Vector3::new(c.x, c.y, 0.0) - s.velocity;
    let mut z = s.attitude.inverse_rotate(&rel);
    z.x += s.adcp_bias.x;
    z.y += s.adcp_bias.y;
    z
}

/// Bottom-track velocity at the DVL: `C^b_n vⁿ + ω × p_dvl`.
pub fn dvl_measurement(s: &NavState, omega: &Vector3<f64>, p: &VehicleParams) -> Vector3<f64> {
    s.attitude.inverse_rotate(&s.velocity) + omega.cross(&p.dvl_lever)
}

/// Horizontal (N, E) position.
pub fn gps_measurement(s: &NavState) -> Vector2<f64> {
    Vector2::new(s.position.x, s.position.y)
}

/// Depth, positive down.
pub fn pressure_measurement(s: &NavState) -> f64 {
    s.position.z
}

/// Water-current process noise grown linearly with vehicle speed:
/// `base_q (1 + speed / spatial_scale)`.
pub fn water_current_q_scale(base_q: f64, speed: f64, spatial_scale: f64) -> f64 {
    base_q * (1.0 + speed / spatial_scale)
}

/// Model-aiding noise, inflated by `inflation²` while surfaced.
pub fn surfaced_model_noise(r: &Matrix6<f64>, surfaced: bool, inflation: f64) -> Matrix6<f64> {
    if surfaced {
        r * (inflation * inflation)
    } else {
        *r
    }
}

/// Heading (rad, clockwise from north) of the body x axis.
pub fn heading(r: &Rotation) -> f64 {
    let x = r.rotate(&Vector3::x());
    x.y.atan2(x.x)
}

/// Attitude for the given roll, pitch and heading with the body z axis up.
///
/// Roll and pitch follow the usual forward-right-down convention (positive
/// pitch is nose up, positive roll is starboard down).
pub fn attitude_from_euler(roll: f64, pitch: f64, heading: f64) -> Rotation {
    use nalgebra::{Matrix3, UnitQuaternion};
    let frd = UnitQuaternion::from_euler_angles(roll, pitch, heading);
    let flip = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
    Rotation::from_matrix(&(frd.to_rotation_matrix().into_inner() * flip))
}

/// Roll, pitch, heading of an attitude (inverse of [`attitude_from_euler`]).
pub fn euler_from_attitude(r: &Rotation) -> (f64, f64, f64) {
    use nalgebra::{Matrix3, Rotation3};
    let flip = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
    let frd = Rotation3::from_matrix_unchecked(r.matrix() * flip);
    frd.euler_angles()
}

/// Direction cosines of the navigation-frame down axis in the attitude
/// tangent (body) coordinates; the heading variance is `cᵀ P_att c`.
pub fn heading_direction(r: &Rotation) -> Vector3<f64> {
    r.inverse_rotate(&Vector3::z())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::log_so3;
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix3;
    use std::f64::consts::FRAC_PI_2;

    fn level_north() -> Rotation {
        attitude_from_euler(0.0, 0.0, 0.0)
    }

    #[test]
    fn earth_rotation_values() {
        let eq = earth_rotation_ned(&GeoConfig::at_latitude(0.0));
        assert_abs_diff_eq!(eq, Vector3::new(7.292115e-5, 0.0, 0.0), epsilon = 1e-18);
        let pole = earth_rotation_ned(&GeoConfig::at_latitude(FRAC_PI_2));
        assert_abs_diff_eq!(pole, Vector3::new(0.0, 0.0, -7.292115e-5), epsilon = 1e-18);
        let salvador = earth_rotation_ned(&GeoConfig::at_latitude((-13.0f64).to_radians()));
        assert_abs_diff_eq!(salvador.x, 7.106e-5, epsilon = 1e-8);
        assert_abs_diff_eq!(salvador.z, 1.640e-5, epsilon = 1e-8);
    }

    #[test]
    fn somigliana_gravity() {
        assert_abs_diff_eq!(wgs84_gravity(&GeoConfig::at_latitude(0.0)), 9.7803253359, epsilon = 1e-9);
        assert_abs_diff_eq!(
            wgs84_gravity(&GeoConfig::at_latitude(FRAC_PI_2)),
            9.8321849379,
            epsilon = 1e-7
        );
        let mut prev = 0.0;
        for d in 0..=90 {
            let g = wgs84_gravity(&GeoConfig::at_latitude((d as f64).to_radians()));
            let gs = wgs84_gravity(&GeoConfig::at_latitude(-(d as f64).to_radians()));
            assert_abs_diff_eq!(g, gs, epsilon = 1e-15);
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn level_attitude_is_z_up() {
        let r = level_north();
        assert_abs_diff_eq!(
            r.matrix(),
            Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)),
            epsilon = 1e-12
        );
        let r = attitude_from_euler(0.1, -0.2, 2.0);
        let (roll, pitch, yaw) = euler_from_attitude(&r);
        assert_abs_diff_eq!(roll, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(pitch, -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(yaw, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(heading(&r), 2.0, epsilon = 1e-12);
    }

    fn markov_means(s: &NavState) -> NavState {
        s.clone()
    }

    #[test]
    fn inertial_prediction_translation() {
        let mut s = NavState::default();
        s.velocity = Vector3::new(1.0, 0.0, 0.0);
        s.gravity = 9.81;
        let geo = GeoConfig::at_latitude(0.3);
        let gyro = s.attitude.inverse_rotate(&earth_rotation_ned(&geo));
        let n = predict_inertial(&s, &gyro, 0.01, &geo, &MarkovConfig::default(), &markov_means(&s)).unwrap();
        assert_abs_diff_eq!(n.position, Vector3::new(0.01, 0.0, 0.0), epsilon = 1e-15);
        assert!(predict_inertial(&s, &gyro, 0.0, &geo, &MarkovConfig::default(), &s).is_err());
    }

    #[test]
    fn zero_net_rate_keeps_attitude() {
        let mut s = NavState::default();
        s.attitude = attitude_from_euler(0.05, -0.1, 1.2);
        s.gyro_bias = Vector3::new(1e-5, -2e-5, 3e-6);
        let geo = GeoConfig::at_latitude((-13.0f64).to_radians());
        let gyro = s.gyro_bias + s.attitude.inverse_rotate(&earth_rotation_ned(&geo));
        let n = predict_inertial(&s, &gyro, 0.01, &geo, &MarkovConfig::default(), &s).unwrap();
        assert!(n.attitude.angle_to(&s.attitude) < 1e-15);
    }

    #[test]
    fn wrong_heading_drifts_attitude_like_a_rotating_frame() {
        // True vehicle stationary with heading 0; filter believes heading 0.2 rad.
        let geo = GeoConfig::at_latitude((-13.0f64).to_radians());
        let truth = level_north();
        let earth = earth_rotation_ned(&geo);
        let gyro = truth.inverse_rotate(&earth);
        let mut s = NavState::default();
        s.attitude = attitude_from_euler(0.0, 0.0, 0.2);
        let dt = 1.0;
        let n = predict_inertial(&s, &gyro, dt, &geo, &MarkovConfig::default(), &s).unwrap();
        // Oracle: the believed attitude rotates by C_est (C_trueᵀ Ω) − Ω in the
        // navigation frame, i.e. the Earth vector the gyro saw, mapped with the
        // wrong heading, minus the true Earth rate.
        let seen = s.attitude.rotate(&gyro);
        let expected_nav_rate = seen - earth;
        let actual_nav_rot = log_so3(&n.attitude.compose(&s.attitude.inverse()));
        assert_abs_diff_eq!(actual_nav_rot, expected_nav_rate * dt, epsilon = 1e-12);
        assert!(expected_nav_rate.norm() > 1e-6);
        // drift is horizontal: the vertical Earth component is heading-invariant
        assert!(expected_nav_rate.z.abs() < 1e-15);
    }

    #[test]
    fn accel_rest_free_fall_and_level_acceleration() {
        let mut s = NavState::default();
        s.attitude = level_north();
        s.gravity = 9.81;
        let rest = accel_measurement(&s);
        assert_abs_diff_eq!(rest, Vector3::new(0.0, 0.0, 9.81), epsilon = 1e-12);

        s.acceleration = Vector3::new(0.0, 0.0, 9.81);
        assert_abs_diff_eq!(accel_measurement(&s), Vector3::zeros(), epsilon = 1e-12);

        s.acceleration = Vector3::new(0.1, 0.0, 0.0);
        let z = accel_measurement(&s);
        assert_abs_diff_eq!(z, Vector3::new(0.1, 0.0, 9.81), epsilon = 1e-12);
    }

    #[test]
    fn restoring_wrench_cases() {
        let mut p = VehicleParams::default();
        p.weight = 100.0;
        p.buoyancy = 100.0;
        p.center_of_gravity = Vector3::new(0.1, 0.2, 0.3);
        p.center_of_buoyancy = p.center_of_gravity;
        let tilted = attitude_from_euler(0.3, -0.2, 1.0);
        assert_abs_diff_eq!(restoring_wrench(&tilted, &p), Vector6::zeros(), epsilon = 1e-12);

        p.weight = 100.0;
        p.buoyancy = 90.0;
        p.center_of_gravity = Vector3::zeros();
        p.center_of_buoyancy = Vector3::zeros();
        let w = restoring_wrench(&level_north(), &p);
        assert_abs_diff_eq!(w, Vector6::new(0.0, 0.0, 10.0, 0.0, 0.0, 0.0), epsilon = 1e-12);

        // equal offsets with W = B cancel in the torque
        p.buoyancy = 100.0;
        p.center_of_gravity = Vector3::new(0.0, 0.0, -0.1);
        p.center_of_buoyancy = Vector3::new(0.0, 0.0, 0.2);
        let base = restoring_wrench(&tilted, &p);
        let off = Vector3::new(0.3, -0.4, 0.5);
        p.center_of_gravity += off;
        p.center_of_buoyancy += off;
        assert_abs_diff_eq!(restoring_wrench(&tilted, &p), base, epsilon = 1e-12);
    }

    #[test]
    fn restoring_torque_rights_a_rolled_vehicle() {
        let p = VehicleParams::default();
        let rolled = attitude_from_euler(0.2, 0.0, 0.0);
        let g = restoring_wrench(&rolled, &p);
        // τ = ... + g, so the free response is −g; a starboard-down roll must
        // produce a torque rolling back (negative about body x for z-up)
        let free = -g;
        let nose = rolled.rotate(&Vector3::x());
        let torque_nav = rolled.rotate(&Vector3::new(free[3], free[4], free[5]));
        assert!(torque_nav.dot(&nose) < 0.0);
    }

    #[test]
    fn body_acceleration_lever_term() {
        let mut p = VehicleParams::default();
        p.imu_lever = Vector3::new(1.0, 0.0, 0.0);
        let s = NavState::default();
        let a = body_acceleration(&s, &Vector3::new(0.0, 0.0, 1.0), &p);
        assert_abs_diff_eq!(a, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        p.imu_lever = Vector3::zeros();
        let mut s = NavState::default();
        s.acceleration = Vector3::new(0.3, 0.2, 0.1);
        s.attitude = level_north();
        assert_abs_diff_eq!(
            body_acceleration(&s, &Vector3::new(0.4, 0.1, 0.2), &p),
            s.attitude.inverse_rotate(&s.acceleration),
            epsilon = 1e-15
        );
    }

    #[test]
    fn body_velocity_cases() {
        let mut p = VehicleParams::default();
        p.imu_lever = Vector3::zeros();
        let mut s = NavState::default();
        s.velocity = Vector3::new(0.3, -0.2, 0.1);
        assert_abs_diff_eq!(body_velocity(&s, &Vector3::zeros(), &p), s.velocity);
        s.velocity = Vector3::new(1.0, 0.0, 0.0);
        s.current_vehicle = Vector2::new(1.0, 0.0);
        assert_abs_diff_eq!(body_velocity(&s, &Vector3::zeros(), &p), Vector3::zeros());
        let s = NavState::default();
        p.imu_lever = Vector3::new(0.0, 1.0, 0.0);
        let v = body_velocity(&s, &Vector3::new(0.0, 0.0, 0.5), &p);
        assert_abs_diff_eq!(v, Vector3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn damping_cases() {
        let dl = Matrix6::from_diagonal(&Vector6::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0));
        assert_eq!(damping_wrench(&dl, &Matrix6::zeros(), &Vector6::zeros()), Vector6::zeros());
        assert_eq!(
            damping_wrench(&dl, &Matrix6::zeros(), &Vector6::x()),
            Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        );
        let mut dq = Matrix6::zeros();
        dq[(0, 0)] = 2.0;
        let w = damping_wrench(&Matrix6::zeros(), &dq, &Vector6::new(-3.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(w[0], -18.0);
    }

    fn neutral_params() -> VehicleParams {
        let mut p = VehicleParams::default();
        p.buoyancy = p.weight;
        p.center_of_buoyancy = p.center_of_gravity;
        p
    }

    fn state_with_params(p: &VehicleParams) -> NavState {
        let mut s = NavState::default();
        s.attitude = level_north();
        s.inertia_sub = super::super::params::submatrix(&p.mass);
        s.lin_damping_sub = super::super::params::submatrix(&p.lin_damping);
        s.quad_damping_sub = super::super::params::submatrix(&p.quad_damping);
        s
    }

    #[test]
    fn model_aiding_rest_and_surge() {
        let p = neutral_params();
        let mut s = state_with_params(&p);
        assert_abs_diff_eq!(
            model_aiding_measurement(&s, &Vector3::zeros(), &p),
            Vector6::zeros(),
            epsilon = 1e-9
        );
        // heading north, level: body x = north
        let u = 0.8;
        s.velocity = Vector3::new(u, 0.0, 0.0);
        let tau = model_aiding_measurement(&s, &Vector3::zeros(), &p);
        let expected = p.lin_damping[(0, 0)] * u + p.quad_damping[(0, 0)] * u * u;
        assert_abs_diff_eq!(tau[0], expected, epsilon = 1e-9);
        assert_abs_diff_eq!(tau[1], 0.0, epsilon = 1e-9);

        // the state submatrix, not the nominal matrix, drives the surge row
        let delta = 3.5;
        let mut s2 = s.clone();
        s2.lin_damping_sub[(0, 0)] += delta;
        let tau2 = model_aiding_measurement(&s2, &Vector3::zeros(), &p);
        assert_abs_diff_eq!(tau2[0] - tau[0], delta * u, epsilon = 1e-9);
    }

    #[test]
    fn thruster_wrench_cases() {
        let p = VehicleParams::default();
        assert_eq!(thruster_wrench(&[0.0; 6], &p).unwrap(), Vector6::zeros());
        assert!(matches!(
            thruster_wrench(&[1.0; 3], &p),
            Err(NavError::DimensionMismatch { expected: 6, got: 3 })
        ));

        let mut single = p.clone();
        single.thruster_allocation = nalgebra::DMatrix::from_column_slice(6, 1, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            thruster_wrench(&[10.0], &single).unwrap(),
            Vector6::new(10.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        );

        // opposed lateral thrusters at x = ±1 m: forces along y
        let mut lateral = p.clone();
        let mut a = nalgebra::DMatrix::zeros(6, 2);
        for (k, x) in [1.0, -1.0].iter().enumerate() {
            let t = Vector3::new(*x, 0.0, 0.0).cross(&Vector3::y());
            a[(1, k)] = 1.0;
            a[(5, k)] = t.z;
        }
        lateral.thruster_allocation = a;
        let w = thruster_wrench(&[5.0, -5.0], &lateral).unwrap();
        assert_abs_diff_eq!(w, Vector6::new(0.0, 0.0, 0.0, 0.0, 0.0, 10.0), epsilon = 1e-12);
    }

    #[test]
    fn adcp_interpolation() {
        let mut s = NavState::default();
        s.current_vehicle = Vector2::new(1.0, 0.0);
        s.current_bottom = Vector2::new(0.0, 1.0);
        let near = adcp_cell_measurement(&s, 0.0, 20.0).unwrap();
        assert_abs_diff_eq!(near, Vector3::new(1.0, 0.0, 0.0));
        let far = adcp_cell_measurement(&s, 20.0, 20.0).unwrap();
        assert_abs_diff_eq!(far, Vector3::new(0.0, 1.0, 0.0));
        let mid = adcp_cell_measurement(&s, 10.0, 20.0).unwrap();
        assert_abs_diff_eq!(mid, Vector3::new(0.5, 0.5, 0.0), epsilon = 1e-15);
        assert!(matches!(
            adcp_cell_measurement(&s, 21.0, 20.0),
            Err(NavError::CellOutOfRange { .. })
        ));
        assert!(adcp_cell_measurement(&s, -0.1, 20.0).is_err());
    }

    #[test]
    fn dvl_cases() {
        let p = VehicleParams {
            dvl_lever: Vector3::new(1.0, 0.0, 0.0),
            ..VehicleParams::default()
        };
        let mut s = NavState::default();
        s.velocity = Vector3::new(0.2, 0.1, -0.05);
        assert_abs_diff_eq!(dvl_measurement(&s, &Vector3::zeros(), &p), s.velocity);
        let still = NavState::default();
        assert_abs_diff_eq!(
            dvl_measurement(&still, &Vector3::new(0.0, 0.0, 1.0), &p),
            Vector3::new(0.0, 1.0, 0.0),
            epsilon = 1e-15
        );
        let mut drifting = s.clone();
        drifting.current_vehicle = Vector2::new(0.4, -0.3);
        drifting.current_bottom = Vector2::new(0.1, 0.1);
        assert_eq!(
            dvl_measurement(&drifting, &Vector3::zeros(), &p),
            dvl_measurement(&s, &Vector3::zeros(), &p)
        );
    }

    #[test]
    fn position_projections() {
        let mut s = NavState::default();
        s.position = Vector3::new(10.0, -5.0, 3.0);
        assert_eq!(gps_measurement(&s), Vector2::new(10.0, -5.0));
        assert_eq!(pressure_measurement(&s), 3.0);
        s.position.z = 40.0;
        assert_eq!(gps_measurement(&s), Vector2::new(10.0, -5.0));
        s.position.z = 0.0;
        assert_eq!(pressure_measurement(&s), 0.0);
    }

    #[test]
    fn current_noise_scaling() {
        assert_eq!(water_current_q_scale(2e-6, 0.0, 50.0), 2e-6);
        let base = 1e-6;
        let added = |v: f64| water_current_q_scale(base, v, 100.0) - base;
        assert_abs_diff_eq!(added(1.0) * 2.0, added(2.0), epsilon = 1e-20);
        assert_abs_diff_eq!(water_current_q_scale(1e-6, 1.0, 100.0), 1e-6 * 1.01, epsilon = 1e-20);
    }

    #[test]
    fn surfaced_noise_inflation() {
        let r = Matrix6::identity() * 4.0;
        assert_eq!(surfaced_model_noise(&r, false, 10.0), r);
        assert_eq!(surfaced_model_noise(&r, true, 10.0), r * 100.0);
    }
}
