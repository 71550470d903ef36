use fishloc_core::camera::ImagePoint;
use fishloc_core::eval::{
    average_precision, bucketed_ap, coco_thresholds, evaluate, mean_ap, positional_error, EvalDetection, EvalGt,
    EvalImage, EvalOptions,
};
use fishloc_core::geometry::RadiusAlignedBox;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRINCIPAL: ImagePoint = ImagePoint { u: 500.0, v: 500.0 };

fn random_box(rng: &mut ChaCha8Rng) -> RadiusAlignedBox {
    RadiusAlignedBox::new(
        rng.random_range(100.0..900.0),
        rng.random_range(100.0..900.0),
        rng.random_range(10.0..40.0),
        rng.random_range(20.0..90.0),
    )
    .unwrap()
}

fn floor(b: &RadiusAlignedBox) -> (f64, f64) {
    ((b.cx - 500.0) / 15.0, (b.cy - 500.0) / 15.0)
}

/// Jittered copies of the ground truth plus strays, all with distinct scores
/// and floor positions.
fn images(seed: u64, first_id: usize) -> Vec<EvalImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rng.random_range(1..=4))
        .map(|k| {
            let gts: Vec<EvalGt> = (0..rng.random_range(0..=6))
                .map(|_| {
                    let b = random_box(&mut rng);
                    EvalGt { bbox: b, world: Some(floor(&b)) }
                })
                .collect();
            let mut detections = Vec::new();
            for g in &gts {
                if rng.random_bool(0.8) {
                    let mut b = g.bbox;
                    b.cx += rng.random_range(-6.0..6.0);
                    b.cy += rng.random_range(-6.0..6.0);
                    b.h *= rng.random_range(0.85..1.15);
                    detections.push(EvalDetection { bbox: b, score: rng.random(), world: Some(floor(&b)) });
                }
            }
            for _ in 0..rng.random_range(0..=3) {
                let b = random_box(&mut rng);
                detections.push(EvalDetection { bbox: b, score: rng.random(), world: Some(floor(&b)) });
            }
            EvalImage {
                image_id: format!("{}", first_id + k),
                seen: Some(rng.random_bool(0.5)),
                principal: PRINCIPAL,
                gts,
                detections,
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn ap_falls_as_the_threshold_rises(seed in any::<u64>()) {
        let imgs = images(seed, 0);
        let aps: Vec<_> = coco_thresholds().iter().map(|&t| average_precision(&imgs, t)).collect();
        for w in aps.windows(2) {
            if let (Some(a), Some(b)) = (w[0], w[1]) {
                prop_assert!(b <= a + 1e-12);
            }
        }
        for ap in aps.iter().flatten() {
            prop_assert!((0.0..=1.0).contains(ap));
        }
        if let (Some(m), Some(a50)) = (mean_ap(&imgs), aps[0]) {
            prop_assert!(m <= a50 + 1e-12);
        }
    }

    #[test]
    fn input_order_does_not_matter(seed in any::<u64>()) {
        let imgs = images(seed, 0);
        let mut shuffled = imgs.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        shuffled.shuffle(&mut rng);
        for img in &mut shuffled {
            img.detections.shuffle(&mut rng);
            img.gts.shuffle(&mut rng);
        }
        let opts = EvalOptions::default();
        let (a, b) = (evaluate(&imgs, &opts), evaluate(&shuffled, &opts));
        prop_assert_eq!(a.map, b.map);
        prop_assert_eq!(bucketed_ap(&imgs), bucketed_ap(&shuffled));
        prop_assert_eq!(a.ap50, b.ap50);
        prop_assert_eq!(a.pe.overall.count, b.pe.overall.count);
        prop_assert!((a.pe.overall.sum - b.pe.overall.sum).abs() <= 1e-9);
    }

    #[test]
    fn positional_error_merges_by_count(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = images(s1, 0);
        let b = images(s2, 100);
        let (pa, pb) = (positional_error(&a).overall, positional_error(&b).overall);
        let all: Vec<_> = a.iter().chain(&b).cloned().collect();
        let merged = positional_error(&all).overall;
        prop_assert_eq!(merged.count, pa.count + pb.count);
        if merged.count > 0 {
            let weighted = (pa.mean().unwrap_or(0.0) * pa.count as f64 + pb.mean().unwrap_or(0.0) * pb.count as f64)
                / merged.count as f64;
            prop_assert!((merged.mean().unwrap() - weighted).abs() <= 1e-12);
        }
    }

    #[test]
    fn report_counts_add_up(seed in any::<u64>()) {
        let imgs = images(seed, 0);
        let r = evaluate(&imgs, &EvalOptions::default());
        let c = r.counts;
        prop_assert_eq!(c.near + c.middle + c.far + c.unlocated, r.gts);
        if let Some(pe) = r.pe.overall.mean() {
            prop_assert!(pe >= 0.0);
        }
    }
}

#[test]
fn perfect_detections_score_full_marks() {
    let mut imgs = images(9, 0);
    for img in &mut imgs {
        img.detections = img
            .gts
            .iter()
            .map(|g| EvalDetection { bbox: g.bbox, score: 0.9, world: g.world })
            .collect();
    }
    let r = evaluate(&imgs, &EvalOptions::default());
    assert_eq!(r.map, Some(1.0));
    assert_eq!(r.pe.overall.mean(), Some(0.0));
}
