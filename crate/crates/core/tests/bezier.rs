mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stplan::bezier::{check_dynamic_limits, CompositeTrajectory, CubicPiece, DynamicLimits};
use stplan::Vec3;

#[test]
fn samples_stay_in_control_point_hull() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dirs = common::unit_dirs(&mut rng, 64);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let piece = common::random_piece(&mut rng);
        let cp = piece.position_control_points();
        let scale = 1.0 + cp.iter().map(|p| p.amax()).fold(0.0, f64::max);
        for k in 0..200 {
            let tau = piece.dt() * k as f64 / 199.0;
            let x = piece.eval(tau).position;
            worst = worst.max(common::hull_excess(&cp, &x, &dirs) / scale);
        }
    }
    assert!(worst <= 1e-9, "hull excess {worst}");
}

#[test]
fn control_points_reproduce_curve_in_bernstein_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let piece = common::random_piece(&mut rng);
        let cp = piece.position_control_points();
        let dp = piece.derivative_control_points();
        for k in 0..=20 {
            let s = k as f64 / 20.0;
            let st = piece.eval(s * piece.dt());
            let b3 = common::bernstein(3, s);
            let b2 = common::bernstein(2, s);
            let b1 = common::bernstein(1, s);
            let pos: Vec3 = (0..4).map(|i| cp[i] * b3[i]).sum();
            let vel: Vec3 = (0..3).map(|i| dp.velocity[i] * b2[i]).sum();
            let acc: Vec3 = (0..2).map(|i| dp.acceleration[i] * b1[i]).sum();
            let sc = 1.0 + st.position.amax() + st.velocity.amax() + st.acceleration.amax();
            assert!((pos - st.position).amax() <= 1e-10 * sc);
            assert!((vel - st.velocity).amax() <= 1e-9 * sc);
            assert!((acc - st.acceleration).amax() <= 1e-9 * sc);
            assert!((dp.jerk - st.jerk).amax() <= 1e-9 * sc);
        }
    }
}

#[test]
fn derivatives_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let piece = common::random_piece(&mut rng);
        for k in 1..20 {
            let tau = piece.dt() * k as f64 / 20.0;
            let (m, c, p) = (piece.eval(tau - h), piece.eval(tau), piece.eval(tau + h));
            let fd_v = (p.position - m.position) / (2.0 * h);
            let fd_a = (p.velocity - m.velocity) / (2.0 * h);
            let fd_j = (p.acceleration - m.acceleration) / (2.0 * h);
            worst = worst.max((fd_v - c.velocity).amax()).max((fd_a - c.acceleration).amax()).max((fd_j - c.jerk).amax());
        }
    }
    assert!(worst <= 1e-6, "finite-difference gap {worst}");
}

#[test]
fn composite_rejects_discontinuity() {
    let a = CubicPiece::new(Vec3::zeros(), Vec3::zeros(), Vec3::x(), Vec3::zeros(), 1.0).unwrap();
    let b = CubicPiece::new(Vec3::zeros(), Vec3::zeros(), Vec3::x(), Vec3::new(1.5, 0.0, 0.0), 1.0).unwrap();
    assert!(CompositeTrajectory::new(vec![a, b], 0.0).is_err());
    let c = CubicPiece::new(Vec3::zeros(), Vec3::zeros(), Vec3::x(), Vec3::x(), 1.0).unwrap();
    let tr = CompositeTrajectory::new(vec![a, c], 2.0).unwrap();
    assert_eq!(tr.t_end(), 4.0);
    assert!((tr.sample(3.5).unwrap().position.x - 1.5).abs() < 1e-12);
    assert!(tr.sample(4.5).is_err());
}

proptest! {
    // Control-point bounds imply sampled bounds.
    #[test]
    fn control_point_limits_bound_samples(seed in 0u64..2000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let piece = common::random_piece(&mut rng);
        let tr = CompositeTrajectory::new(vec![piece], 0.0).unwrap();
        let dp = piece.derivative_control_points();
        let v = dp.velocity.iter().map(|x| x.amax()).fold(0.0, f64::max) + 1e-12;
        let a = dp.acceleration.iter().map(|x| x.amax()).fold(0.0, f64::max) + 1e-12;
        let j = dp.jerk.amax() + 1e-12;
        let lim = DynamicLimits::new(v, a, j).unwrap();
        let rep = check_dynamic_limits(&tr, &lim, piece.dt() / 97.0, 1e-9);
        prop_assert!(!rep.sampled_violation);
        prop_assert!(!rep.control_point_violation);
    }
}
