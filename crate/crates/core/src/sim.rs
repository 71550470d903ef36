//! Synthetic overhead scenes with exact ground truth.
//!
//! Each person is a vertical segment standing on the floor with a lateral
//! radius. Projecting the foot, the head and the two lateral extremes at
//! mid-height through the lens yields a radius-aligned box whose near side
//! midpoint is, by construction, the foot pixel.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use rayon::prelude::*;

use crate::camera::{CameraError, FisheyeModel, ImagePoint, WorldPoint, NUM_COEFFS, THETA_MAX};
use crate::eval::DistanceBucket;
use crate::geometry::{RadiusAlignedBox, MIN_EXTENT};
use crate::matching::Detection;

pub const DEFAULT_IMAGE_SIDE: f64 = 2952.0;
pub const DEFAULT_HEIGHT: f64 = 1.7;
pub const DEFAULT_BODY_RADIUS: f64 = 0.25;
/// Mounting height range of the capture rigs.
pub const ALTITUDE_RANGE: (f64, f64) = (2.5, 4.0);
/// Floor area seen by a typical rig, m².
pub const DEFAULT_FOV_AREA: f64 = 250.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("could not place person {person} without overlap after {attempts} attempts")]
    Infeasible { person: usize, attempts: usize },
    #[error(transparent)]
    Camera(#[from] CameraError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Person {
    /// Floor position relative to nadir, meters.
    pub x: f64,
    pub y: f64,
    pub height: f64,
    pub radius: f64,
}

impl Person {
    pub fn distance(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Lens with its altitude set.
    pub model: FisheyeModel,
    pub image_side: f64,
    pub persons: Vec<Person>,
    pub seed: u64,
}

impl Scene {
    /// The same scene with every floor position rotated about nadir.
    pub fn rotated(&self, angle: f64) -> Scene {
        let (s, c) = angle.sin_cos();
        Scene {
            persons: self
                .persons
                .iter()
                .map(|p| Person { x: c * p.x - s * p.y, y: s * p.x + c * p.y, ..*p })
                .collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    UniformDisc { radius: f64 },
    UniformAnnulus { inner: f64, outer: f64 },
}

impl Placement {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Placement::UniformDisc { radius } => (0.0, radius),
            Placement::UniformAnnulus { inner, outer } => (inner, outer),
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> (f64, f64) {
        let (lo, hi) = self.bounds();
        // uniform in area
        let rho = (lo * lo + rng.random::<f64>() * (hi * hi - lo * lo)).sqrt();
        let phi = rng.random_range(-PI..PI);
        (rho * phi.cos(), rho * phi.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Altitude {
    Fixed(f64),
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub altitude: Altitude,
    pub person_count: usize,
    pub placement: Placement,
    /// Inclusive ranges; equal ends give a fixed value.
    pub height_range: (f64, f64),
    pub radius_range: (f64, f64),
    /// Reject placements whose body discs overlap.
    pub avoid_overlap: bool,
    pub max_attempts: usize,
    pub image_side: f64,
    pub lens: [f64; NUM_COEFFS],
    /// Defaults to the focal length that puts the horizon on the image border.
    pub focal: Option<f64>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            altitude: Altitude::Uniform { lo: ALTITUDE_RANGE.0, hi: ALTITUDE_RANGE.1 },
            person_count: 10,
            placement: Placement::UniformDisc { radius: (DEFAULT_FOV_AREA / PI).sqrt() },
            height_range: (DEFAULT_HEIGHT, DEFAULT_HEIGHT),
            radius_range: (DEFAULT_BODY_RADIUS, DEFAULT_BODY_RADIUS),
            avoid_overlap: true,
            max_attempts: 1000,
            image_side: DEFAULT_IMAGE_SIDE,
            lens: [1.0, 0.0, 0.0, 0.0, 0.0],
            focal: None,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<(), SimError> {
    if lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi {
        Ok(())
    } else {
        Err(SimError::InvalidConfig(format!("{name} range ({lo}, {hi})")))
    }
}

fn draw(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

impl SceneConfig {
    fn validate(&self) -> Result<(), SimError> {
        check_range("height", self.height_range)?;
        check_range("radius", self.radius_range)?;
        match self.altitude {
            Altitude::Fixed(z) => check_range("altitude", (z, z))?,
            Altitude::Uniform { lo, hi } => check_range("altitude", (lo, hi))?,
        }
        let (inner, outer) = self.placement.bounds();
        if !(inner.is_finite() && outer.is_finite() && inner >= 0.0 && inner <= outer) {
            return Err(SimError::InvalidConfig(format!("placement ({inner}, {outer})")));
        }
        if !(self.image_side.is_finite() && self.image_side > 0.0) {
            return Err(SimError::InvalidConfig(format!("image side {}", self.image_side)));
        }
        Ok(())
    }

    fn model(&self, altitude: f64) -> Result<FisheyeModel, SimError> {
        let half = 0.5 * self.image_side;
        let probe = FisheyeModel::new(1.0, 0.0, 0.0, self.lens, None)?;
        let f = self.focal.unwrap_or(half / probe.max_radius());
        Ok(FisheyeModel::new(f, half, half, self.lens, Some(altitude))?)
    }
}

/// Deterministic scene for the given seed.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<Scene, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let altitude = match config.altitude {
        Altitude::Fixed(z) => z,
        Altitude::Uniform { lo, hi } => draw(&mut rng, (lo, hi)),
    };
    let model = config.model(altitude)?;
    let mut persons: Vec<Person> = Vec::with_capacity(config.person_count);
    for idx in 0..config.person_count {
        let height = draw(&mut rng, config.height_range);
        let radius = draw(&mut rng, config.radius_range);
        let mut placed = None;
        for _ in 0..config.max_attempts.max(1) {
            let (x, y) = config.placement.sample(&mut rng);
            let free = !config.avoid_overlap
                || persons
                    .iter()
                    .all(|p| (p.x - x).hypot(p.y - y) >= p.radius + radius);
            if free {
                placed = Some((x, y));
                break;
            }
        }
        let (x, y) = placed.ok_or(SimError::Infeasible { person: idx, attempts: config.max_attempts })?;
        persons.push(Person { x, y, height, radius });
    }
    Ok(Scene { model, image_side: config.image_side, persons, seed })
}

/// `count` frames from one rig: the altitude is drawn once, then each frame
/// gets its own persons.
pub fn generate_frames(config: &SceneConfig, count: usize, seed: u64) -> Result<Vec<Scene>, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let altitude = match config.altitude {
        Altitude::Fixed(z) => z,
        Altitude::Uniform { lo, hi } => draw(&mut rng, (lo, hi)),
    };
    let fixed = SceneConfig { altitude: Altitude::Fixed(altitude), ..config.clone() };
    let seeds: Vec<u64> = (0..count).map(|_| rng.random()).collect();
    seeds.into_par_iter().map(|s| generate_scene(&fixed, s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedAnnotation {
    pub person: usize,
    /// Ground-truth box in pixels.
    pub bbox: RadiusAlignedBox,
    /// Foot pixel, the near-side midpoint of the box.
    pub anchor: ImagePoint,
    pub head: ImagePoint,
    pub world: (f64, f64),
    pub bucket: DistanceBucket,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PersonRender {
    Visible(SimulatedAnnotation),
    Unprojectable { person: usize, reason: String },
}

impl PersonRender {
    pub fn visible(&self) -> Option<&SimulatedAnnotation> {
        match self {
            PersonRender::Visible(a) => Some(a),
            PersonRender::Unprojectable { .. } => None,
        }
    }
}

fn render_person(model: &FisheyeModel, idx: usize, p: &Person) -> PersonRender {
    let unprojectable = |reason: String| PersonRender::Unprojectable { person: idx, reason };
    let z = match model.altitude() {
        Some(z) => z,
        None => return unprojectable("camera model has no altitude".into()),
    };
    if p.height >= z {
        return unprojectable(format!("head at {} m is not below the camera at {z} m", p.height));
    }
    let rho = p.distance();
    let (sin_phi, cos_phi) = if rho == 0.0 { (0.0, 1.0) } else { (p.y / rho, p.x / rho) };
    let project = |x: f64, y: f64, depth: f64| model.ray_to_pixel(WorldPoint::new(x, y, depth));
    let (foot, head) = match (project(p.x, p.y, z), project(p.x, p.y, z - p.height)) {
        (Ok(f), Ok(h)) => (f, h),
        (Err(e), _) | (_, Err(e)) => return unprojectable(e.to_string()),
    };
    // lateral extremes at mid-height, perpendicular to the radial direction
    let mid_depth = z - 0.5 * p.height;
    let (tx, ty) = (-sin_phi * p.radius, cos_phi * p.radius);
    let width = match (
        project(p.x + tx, p.y + ty, mid_depth),
        project(p.x - tx, p.y - ty, mid_depth),
    ) {
        (Ok(l), Ok(r)) => l.distance(&r),
        (Err(e), _) | (_, Err(e)) => return unprojectable(e.to_string()),
    };

    let principal = model.principal_point();
    let bbox = if rho == 0.0 {
        // seen from straight above: square footprint on the principal point
        RadiusAlignedBox::new(principal.u, principal.v, width, width)
    } else {
        RadiusAlignedBox::new(
            0.5 * (foot.u + head.u),
            0.5 * (foot.v + head.v),
            width,
            foot.distance(&head),
        )
    };
    match bbox {
        Ok(bbox) => PersonRender::Visible(SimulatedAnnotation {
            person: idx,
            bbox,
            anchor: foot,
            head,
            world: (p.x, p.y),
            bucket: DistanceBucket::from_distance(rho),
        }),
        Err(e) => unprojectable(e.to_string()),
    }
}

/// Ground-truth annotations for every person, in person order.
pub fn render_annotations(scene: &Scene) -> Vec<PersonRender> {
    scene
        .persons
        .par_iter()
        .enumerate()
        .map(|(i, p)| render_person(&scene.model, i, p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreModel {
    Fixed(f64),
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub center_sigma_px: f64,
    pub size_sigma_px: f64,
    pub score: ScoreModel,
    /// Probability that a ground-truth box is not detected.
    pub miss_rate: f64,
    /// Probability, per ground-truth box, of one extra false positive.
    pub false_positive_rate: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            center_sigma_px: 0.0,
            size_sigma_px: 0.0,
            score: ScoreModel::Fixed(1.0),
            miss_rate: 0.0,
            false_positive_rate: 0.0,
        }
    }
}

impl NoiseConfig {
    fn validate(&self) -> Result<(), SimError> {
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        if !rate_ok(self.miss_rate) || !rate_ok(self.false_positive_rate) {
            return Err(SimError::InvalidConfig("rates must lie in [0, 1]".into()));
        }
        if !(self.center_sigma_px >= 0.0 && self.size_sigma_px >= 0.0)
            || !self.center_sigma_px.is_finite()
            || !self.size_sigma_px.is_finite()
        {
            return Err(SimError::InvalidConfig("noise sigmas must be finite and non-negative".into()));
        }
        match self.score {
            ScoreModel::Fixed(s) if rate_ok(s) => Ok(()),
            ScoreModel::Uniform { lo, hi } if rate_ok(lo) && rate_ok(hi) && lo <= hi => Ok(()),
            other => Err(SimError::InvalidConfig(format!("score model {other:?}"))),
        }
    }
}

fn draw_score(rng: &mut impl Rng, m: ScoreModel) -> f64 {
    match m {
        ScoreModel::Fixed(s) => s,
        ScoreModel::Uniform { lo, hi } => draw_unit(rng, lo, hi),
    }
}

fn draw_unit(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Synthetic detector output: jittered copies of the ground truth with
/// misses dropped and false positives scattered uniformly over the image
/// circle. Boxes stay in pixels and inside the image. Image `i` draws from
/// its own RNG stream, so results do not depend on evaluation order.
pub fn perturb_detections(
    images: &[Vec<RadiusAlignedBox>],
    model: &FisheyeModel,
    image_side: f64,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<Vec<Vec<Detection>>, SimError> {
    noise.validate()?;
    let center = Normal::new(0.0, noise.center_sigma_px).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let size = Normal::new(0.0, noise.size_sigma_px).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let miss = Bernoulli::new(noise.miss_rate).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let fp = Bernoulli::new(noise.false_positive_rate).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let principal = model.principal_point();
    let circle = model
        .image_circle_radius()
        .min(principal.u)
        .min(principal.v)
        .min(image_side - principal.u)
        .min(image_side - principal.v)
        .max(0.0);
    // leave the horizon ring alone so false positives stay localizable
    let circle = circle * (1.0 - 1e-6);

    Ok(images
        .par_iter()
        .enumerate()
        .map(|(i, gts)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut out = Vec::with_capacity(gts.len());
            let mut fp_count = 0usize;
            for g in gts {
                let dropped = miss.sample(&mut rng);
                let mut b = *g;
                if noise.center_sigma_px > 0.0 {
                    b.cx += center.sample(&mut rng);
                    b.cy += center.sample(&mut rng);
                }
                if noise.size_sigma_px > 0.0 {
                    b.w = (b.w + size.sample(&mut rng)).abs().max(MIN_EXTENT);
                    b.h = (b.h + size.sample(&mut rng)).abs().max(MIN_EXTENT);
                }
                // stay inside the image
                b.cx = b.cx.clamp(0.0, image_side);
                b.cy = b.cy.clamp(0.0, image_side);
                b.w = b.w.min(image_side);
                b.h = b.h.min(image_side);
                let score = draw_score(&mut rng, noise.score);
                if !dropped {
                    out.push(Detection { bbox: b, score });
                }
                if fp.sample(&mut rng) {
                    fp_count += 1;
                }
            }
            for _ in 0..fp_count {
                let template = gts[rng.random_range(0..gts.len())];
                let rho = circle * rng.random::<f64>().sqrt();
                let phi = rng.random_range(-PI..PI);
                let bbox = RadiusAlignedBox {
                    cx: principal.u + rho * phi.cos(),
                    cy: principal.v + rho * phi.sin(),
                    w: template.w,
                    h: template.h,
                };
                out.push(Detection { bbox, score: draw_score(&mut rng, noise.score) });
            }
            out
        })
        .collect())
}

/// Largest incidence angle of any head in the scene.
pub fn max_head_theta(scene: &Scene) -> Option<f64> {
    let z = scene.model.altitude()?;
    scene
        .persons
        .iter()
        .filter(|p| p.height < z)
        .map(|p| p.distance().atan2(z - p.height))
        .reduce(f64::max)
        .map(|t| t.min(THETA_MAX))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::anchor_point;
    use crate::localization::{localize, localize_point, AnchorStrategy};

    fn fixed_config() -> SceneConfig {
        SceneConfig { altitude: Altitude::Fixed(3.0), ..SceneConfig::default() }
    }

    #[test]
    fn empty_scene() {
        let cfg = SceneConfig { person_count: 0, ..fixed_config() };
        let s = generate_scene(&cfg, 1).unwrap();
        assert!(s.persons.is_empty());
        assert!(render_annotations(&s).is_empty());
    }

    #[test]
    fn seeded_generation_is_repeatable() {
        let cfg = SceneConfig::default();
        assert_eq!(generate_scene(&cfg, 42).unwrap(), generate_scene(&cfg, 42).unwrap());
        assert_ne!(generate_scene(&cfg, 42).unwrap(), generate_scene(&cfg, 43).unwrap());
        let z = generate_scene(&cfg, 42).unwrap().model.altitude().unwrap();
        assert!((2.5..=4.0).contains(&z));
    }

    #[test]
    fn infeasible_density() {
        let cfg = SceneConfig {
            person_count: 50,
            placement: Placement::UniformDisc { radius: 0.5 },
            max_attempts: 50,
            ..fixed_config()
        };
        assert!(matches!(generate_scene(&cfg, 3), Err(SimError::Infeasible { .. })));
    }

    #[test]
    fn nadir_person_box_is_centered() {
        let cfg = SceneConfig { person_count: 0, ..fixed_config() };
        let mut s = generate_scene(&cfg, 0).unwrap();
        s.persons.push(Person { x: 0.0, y: 0.0, height: 1.7, radius: 0.25 });
        let a = *render_annotations(&s)[0].visible().unwrap();
        assert_eq!(a.bbox.center(), s.model.principal_point());
        assert_eq!(a.anchor, s.model.principal_point());
        let p = localize_point(a.anchor, &s.model).unwrap();
        assert_eq!((p.x, p.y), (0.0, 0.0));
        let c = localize(&a.bbox, None, &s.model, AnchorStrategy::BoxCenter).unwrap();
        assert_eq!((c.x, c.y), (0.0, 0.0));
        // no radial direction at the principal point
        assert!(localize(&a.bbox, None, &s.model, AnchorStrategy::RadialNearMidpoint).is_err());
    }

    #[test]
    fn equidistant_person_at_45_degrees() {
        let model = FisheyeModel::equidistant(1000.0, 1476.0, 1476.0, Some(3.0)).unwrap();
        let s = Scene {
            model,
            image_side: 2952.0,
            persons: vec![Person { x: 3.0, y: 0.0, height: 1.7, radius: 0.25 }],
            seed: 0,
        };
        let a = *render_annotations(&s)[0].visible().unwrap();
        let want = 1476.0 + 1000.0 * std::f64::consts::FRAC_PI_4;
        assert!((a.anchor.u - want).abs() < 1e-9 && (a.anchor.v - 1476.0).abs() < 1e-12);
        let anchor = anchor_point(&a.bbox, model.principal_point()).unwrap();
        assert!(anchor.distance(&a.anchor) < 1e-6);
    }

    #[test]
    fn too_tall_person_is_flagged() {
        let model = FisheyeModel::equidistant(1000.0, 1476.0, 1476.0, Some(2.5)).unwrap();
        let s = Scene {
            model,
            image_side: 2952.0,
            persons: vec![Person { x: 1.0, y: 0.0, height: 2.6, radius: 0.25 }],
            seed: 0,
        };
        assert!(matches!(render_annotations(&s)[0], PersonRender::Unprojectable { .. }));
    }

    #[test]
    fn perturb_identity_and_full_miss() {
        let s = generate_scene(&fixed_config(), 5).unwrap();
        let gts: Vec<RadiusAlignedBox> = render_annotations(&s).iter().filter_map(|r| r.visible()).map(|a| a.bbox).collect();
        let out = perturb_detections(std::slice::from_ref(&gts), &s.model, s.image_side, &NoiseConfig::default(), 9).unwrap();
        assert_eq!(out[0].iter().map(|d| d.bbox).collect::<Vec<_>>(), gts);
        assert!(out[0].iter().all(|d| d.score == 1.0));

        let all_missed = NoiseConfig { miss_rate: 1.0, ..NoiseConfig::default() };
        let out = perturb_detections(&[gts], &s.model, s.image_side, &all_missed, 9).unwrap();
        assert!(out[0].is_empty());
    }

    #[test]
    fn perturb_rejects_bad_rates() {
        let s = generate_scene(&fixed_config(), 5).unwrap();
        let bad = NoiseConfig { miss_rate: 1.5, ..NoiseConfig::default() };
        assert!(perturb_detections(&[], &s.model, s.image_side, &bad, 0).is_err());
    }
}
