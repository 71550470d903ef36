use std::f64::consts::PI;

use fishloc_core::camera::{FisheyeModel, ImagePoint};
use fishloc_core::geometry::RadiusAlignedBox;
use fishloc_core::localization::{localize, localize_batch, localize_point, AnchorStrategy};
use proptest::prelude::*;

fn model() -> FisheyeModel {
    FisheyeModel::new(930.0, 1476.0, 1476.0, [1.0, -0.03, 0.002, 0.0, 0.0], Some(3.2)).unwrap()
}

fn ra_box() -> impl Strategy<Value = RadiusAlignedBox> {
    (5.0..1200.0f64, -PI..PI, 5.0..60.0f64, 10.0..150.0f64).prop_map(|(d, phi, w, h)| {
        // keep the near edge clear of the principal point
        let d = d + h / 2.0;
        RadiusAlignedBox::new(1476.0 + d * phi.cos(), 1476.0 + d * phi.sin(), w, h).unwrap()
    })
}

proptest! {
    #[test]
    fn rotating_the_box_rotates_the_floor_point(b in ra_box(), t in -PI..PI) {
        let m = model();
        let p = localize(&b, None, &m, AnchorStrategy::RadialNearMidpoint).unwrap();
        let q = localize(&b.rotate_about(t, m.principal_point()), None, &m, AnchorStrategy::RadialNearMidpoint).unwrap();
        let (s, c) = t.sin_cos();
        prop_assert!((q.x - (c * p.x - s * p.y)).abs() <= 1e-9);
        prop_assert!((q.y - (s * p.x + c * p.y)).abs() <= 1e-9);
    }

    #[test]
    fn doubling_altitude_doubles_exactly(u in 500.0..2400.0f64, v in 500.0..2400.0f64) {
        let m = model();
        let high = m.with_altitude(Some(6.4)).unwrap();
        let p = ImagePoint::new(u, v);
        match (localize_point(p, &m), localize_point(p, &high)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(b.x, 2.0 * a.x);
                prop_assert_eq!(b.y, 2.0 * a.y);
            }
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn floor_radius_is_altitude_times_tangent(u in 500.0..2400.0f64, v in 500.0..2400.0f64) {
        let m = model();
        if let Ok(r) = localize_point(ImagePoint::new(u, v), &m) {
            prop_assert!((r.x.hypot(r.y) - 3.2 * r.theta.tan()).abs() <= 1e-9);
            prop_assert!((r.error_to((r.x + 3.0, r.y - 4.0)) - 5.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn batch_keeps_order_and_failures() {
    let m = model();
    let rim = m.image_circle_radius();
    let items = vec![
        (RadiusAlignedBox::new(1676.0, 1476.0, 20.0, 60.0).unwrap(), None),
        (RadiusAlignedBox::new(1476.0 + rim + 40.0, 1476.0, 20.0, 60.0).unwrap(), None),
        (RadiusAlignedBox::new(1476.0, 1276.0, 20.0, 60.0).unwrap(), None),
    ];
    let out = localize_batch(&items, &m, AnchorStrategy::RadialNearMidpoint);
    assert!(out[0].as_ref().unwrap().x > 0.0);
    assert!(out[1].is_err());
    assert!(out[2].as_ref().unwrap().y < 0.0);
    assert!(localize(&items[0].0, None, &m, AnchorStrategy::HeadCenter).is_err());
}
