use std::f64::consts::{FRAC_PI_2, PI};

use fishloc_core::camera::{
    calibrate, CalibrationOptions, CameraError, Correspondence, FisheyeModel, WorldPoint, MIN_CORRESPONDENCES,
};
use fishloc_core::geometry::wrap_angle;
use proptest::prelude::*;

fn model() -> impl Strategy<Value = FisheyeModel> {
    (
        200.0..1500.0f64,
        500.0..2500.0f64,
        500.0..2500.0f64,
        0.5..1.5f64,
        -0.1..0.1f64,
        -0.01..0.01f64,
        -1e-3..1e-3f64,
        -1e-4..1e-4f64,
        2.5..4.0f64,
    )
        .prop_filter_map("not monotone", |(f, u0, v0, k1, a, b, c, d, z)| {
            FisheyeModel::new(f, u0, v0, [k1, a * k1, b * k1, c * k1, d * k1], Some(z)).ok()
        })
}

proptest! {
    #[test]
    fn radial_round_trip(m in model(), theta in 0.0..FRAC_PI_2 - 1e-3) {
        let r = m.radial_forward(theta).unwrap();
        let back = m.radial_inverse(r).unwrap();
        prop_assert!((back - theta).abs() <= 1e-9);
        prop_assert!((m.radial_forward(back).unwrap() - r).abs() <= 1e-10);
    }

    #[test]
    fn floor_point_keeps_its_angles(m in model(), rho in 1e-3..40.0f64, phi in -PI..PI) {
        let z = m.altitude().unwrap();
        let p = WorldPoint::new(rho * phi.cos(), rho * phi.sin(), z);
        let ray = m.pixel_to_ray(m.ray_to_pixel(p).unwrap()).unwrap();
        prop_assert!((ray.theta - rho.atan2(z)).abs() <= 1e-9);
        prop_assert!(wrap_angle(ray.phi - phi).abs() <= 1e-9);
    }

    #[test]
    fn projection_is_purely_radial(m in model(), x in -30.0..30.0f64, y in -30.0..30.0f64) {
        prop_assume!(x.hypot(y) > 1e-3);
        let p = m.ray_to_pixel(WorldPoint::new(x, y, m.altitude().unwrap())).unwrap();
        let c = m.principal_point();
        prop_assert!(wrap_angle((p.v - c.v).atan2(p.u - c.u) - y.atan2(x)).abs() <= 1e-12);
    }

    #[test]
    fn inverse_is_increasing(m in model(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let rmax = m.max_radius();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        prop_assert!(m.radial_inverse(lo * rmax).unwrap() < m.radial_inverse(hi * rmax).unwrap());
    }
}

#[test]
fn negative_slope_before_horizon_is_rejected() {
    let err = FisheyeModel::new(500.0, 0.0, 0.0, [1.0, -1.0, 0.0, 0.0, 0.0], None).unwrap_err();
    assert!(matches!(err, CameraError::NotMonotonic { .. }), "{err:?}");
}

#[test]
fn inverse_beyond_rim_fails() {
    let m = FisheyeModel::equidistant(1.0, 0.0, 0.0, None).unwrap();
    assert!(m.radial_inverse(m.max_radius() * 1.01).is_err());
    assert!(m.radial_inverse(-1.0).is_err());
}

fn grid(m: &FisheyeModel, n: usize) -> Vec<Correspondence> {
    let z = m.altitude().unwrap();
    (0..n)
        .map(|i| {
            let theta = 0.15 + 1.2 * i as f64 / n as f64;
            let phi = i as f64 * 2.4;
            let world = WorldPoint::new(z * theta.tan() * phi.cos(), z * theta.tan() * phi.sin(), z);
            Correspondence { world, pixel: m.ray_to_pixel(world).unwrap() }
        })
        .collect()
}

#[test]
fn calibration_recovers_equidistant_lens() {
    let truth = FisheyeModel::new(940.0, 1476.0, 1470.0, [1.0, -0.02, 0.003, 0.0, 0.0], Some(3.0)).unwrap();
    let fit = calibrate(&grid(&truth, 30), &CalibrationOptions::new(800.0)).unwrap();
    assert!(fit.rms_px < 1e-6, "rms {}", fit.rms_px);
    for theta in [0.1, 0.5, 1.0, 1.4] {
        let a = truth.angles_to_pixel(theta, 0.3).unwrap();
        let b = fit.model.angles_to_pixel(theta, 0.3).unwrap();
        assert!(a.distance(&b) < 1e-5, "θ={theta}: {a:?} vs {b:?}");
    }
}

#[test]
fn calibration_needs_enough_points() {
    let truth = FisheyeModel::equidistant(900.0, 1000.0, 1000.0, Some(3.0)).unwrap();
    let pts = grid(&truth, MIN_CORRESPONDENCES - 1);
    assert!(calibrate(&pts, &CalibrationOptions::new(900.0)).is_err());
}
