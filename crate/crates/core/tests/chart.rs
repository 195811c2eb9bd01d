use mukf_core::manifold::{exp_so3, log_so3, Manifold};
use mukf_core::{NavState, Rotation, NAV_DIM};
use nalgebra::{Matrix2x3, Vector2, Vector3};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn vec3(scale: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-scale..scale).prop_map(Vector3::from)
}

/// Rotation vectors strictly inside the principal ball.
fn rotvec() -> impl Strategy<Value = Vector3<f64>> {
    (prop::array::uniform3(-1.0..1.0f64), 0.0..3.1f64).prop_filter_map("zero axis", |(a, th)| {
        let a = Vector3::from(a);
        (a.norm() > 1e-3).then(|| a.normalize() * th)
    })
}

fn mat23() -> impl Strategy<Value = Matrix2x3<f64>> {
    prop::array::uniform6(-500.0..500.0f64).prop_map(|a| Matrix2x3::from_row_slice(&a))
}

fn nav_state() -> impl Strategy<Value = NavState> {
    (
        (vec3(1e4), rotvec(), vec3(3.0), vec3(1.0)),
        (mat23(), mat23(), mat23()),
        (vec3(1.0), 9.0..10.0f64, vec3(1e-3), vec3(0.1), vec3(0.1)),
    )
        .prop_map(|((p, r, v, a), (m, dl, dq), (c, g, bw, ba, bc))| NavState {
            position: p,
            attitude: exp_so3(&r),
            velocity: v,
            acceleration: a,
            inertia_sub: m,
            lin_damping_sub: dl,
            quad_damping_sub: dq,
            current_vehicle: c.xy(),
            current_bottom: Vector2::new(c.z, -c.x),
            gravity: g,
            gyro_bias: bw,
            accel_bias: ba,
            adcp_bias: bc.xy(),
        })
}

fn delta() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-10.0..10.0f64, NAV_DIM), rotvec()).prop_map(|(mut d, r)| {
        d[3..6].copy_from_slice(r.as_slice());
        d
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn same_state(a: &NavState, b: &NavState) -> f64 {
    let d = a.boxminus(b);
    let rot = a.attitude.angle_to(&b.attitude);
    max_abs_diff(&d, &[0.0; NAV_DIM]).max(rot)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn boxplus_then_boxminus_recovers_delta(x in nav_state(), d in delta()) {
        let back = x.boxplus(&d).boxminus(&x);
        prop_assert!(max_abs_diff(&back, &d) < TOL, "{back:?} vs {d:?}");
    }

    #[test]
    fn boxminus_then_boxplus_recovers_state(x in nav_state(), y in nav_state()) {
        let z = x.boxplus(&y.boxminus(&x));
        prop_assert!(same_state(&z, &y) < TOL);
    }

    #[test]
    fn boxminus_of_self_is_zero(x in nav_state()) {
        prop_assert_eq!(x.boxminus(&x), vec![0.0; NAV_DIM]);
    }

    #[test]
    fn log_inverts_exp(v in rotvec()) {
        prop_assert!((log_so3(&exp_so3(&v)) - v).amax() < TOL);
    }

    #[test]
    fn exp_inverts_log(v in rotvec()) {
        let r: Rotation = exp_so3(&v);
        prop_assert!(exp_so3(&log_so3(&r)).angle_to(&r) < TOL);
    }
}

#[test]
fn tiny_rotations_round_trip() {
    for k in 0..40 {
        let v = Vector3::new(1.0, -2.0, 0.5) * 10f64.powi(-k / 2);
        assert!((log_so3(&exp_so3(&v)) - v).amax() < TOL * v.norm().max(1e-12));
    }
}
