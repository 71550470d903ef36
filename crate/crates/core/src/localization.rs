//! Floor positions from image detections.
//!
//! The pixel chosen as the person's standing point is back-projected to its
//! incidence angle θ and polar angle φ, then intersected with the floor:
//! `X = Z·tan θ·cos φ`, `Y = Z·tan θ·sin φ`. The world frame has its origin
//! at nadir with X along +u and Y along +v.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::camera::{CameraError, FisheyeModel, ImagePoint, THETA_MAX};
use crate::geometry::{anchor_point, GeometryError, RadiusAlignedBox};
use crate::sim::{render_annotations, PersonRender, Scene};

/// Rays closer than this to the horizon are not localized.
pub const HORIZON_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LocalizationError {
    #[error("camera model has no altitude")]
    MissingAltitude,
    #[error("head-center strategy needs a head point")]
    MissingHeadPoint,
    #[error("ray at theta={theta} is too close to the horizon")]
    AtHorizon { theta: f64 },
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnchorStrategy {
    /// Midpoint of the box side nearest the principal point.
    #[default]
    RadialNearMidpoint,
    BoxCenter,
    /// A separately supplied head pixel.
    HeadCenter,
}

impl AnchorStrategy {
    pub const ALL: [AnchorStrategy; 3] = [
        AnchorStrategy::RadialNearMidpoint,
        AnchorStrategy::BoxCenter,
        AnchorStrategy::HeadCenter,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AnchorStrategy::RadialNearMidpoint => "radial-near-midpoint",
            AnchorStrategy::BoxCenter => "box-center",
            AnchorStrategy::HeadCenter => "head-center",
        }
    }
}

impl fmt::Display for AnchorStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnchorStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnchorStrategy::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown anchor strategy {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationResult {
    pub x: f64,
    pub y: f64,
    pub anchor: ImagePoint,
    pub theta: f64,
    pub phi: f64,
}

impl LocalizationResult {
    pub fn error_to(&self, truth: (f64, f64)) -> f64 {
        (self.x - truth.0).hypot(self.y - truth.1)
    }
}

pub fn select_anchor(
    bbox: &RadiusAlignedBox,
    head: Option<ImagePoint>,
    principal: ImagePoint,
    strategy: AnchorStrategy,
) -> Result<ImagePoint, LocalizationError> {
    match strategy {
        AnchorStrategy::RadialNearMidpoint => Ok(anchor_point(bbox, principal)?),
        AnchorStrategy::BoxCenter => Ok(bbox.center()),
        AnchorStrategy::HeadCenter => head.ok_or(LocalizationError::MissingHeadPoint),
    }
}

/// Put a single pixel on the floor.
pub fn localize_point(anchor: ImagePoint, model: &FisheyeModel) -> Result<LocalizationResult, LocalizationError> {
    let z = model.altitude().ok_or(LocalizationError::MissingAltitude)?;
    let ray = model.pixel_to_ray(anchor)?;
    if ray.theta >= THETA_MAX - HORIZON_GUARD {
        return Err(LocalizationError::AtHorizon { theta: ray.theta });
    }
    let radial = z * ray.theta.tan();
    let (s, c) = ray.phi.sin_cos();
    Ok(LocalizationResult {
        x: radial * c,
        y: radial * s,
        anchor,
        theta: ray.theta,
        phi: ray.phi,
    })
}

pub fn localize(
    bbox: &RadiusAlignedBox,
    head: Option<ImagePoint>,
    model: &FisheyeModel,
    strategy: AnchorStrategy,
) -> Result<LocalizationResult, LocalizationError> {
    let anchor = select_anchor(bbox, head, model.principal_point(), strategy)?;
    localize_point(anchor, model)
}

/// Localize many boxes; results keep the input order.
pub fn localize_batch(
    items: &[(RadiusAlignedBox, Option<ImagePoint>)],
    model: &FisheyeModel,
    strategy: AnchorStrategy,
) -> Vec<Result<LocalizationResult, LocalizationError>> {
    items
        .par_iter()
        .map(|(b, head)| localize(b, *head, model, strategy))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyError {
    pub strategy: AnchorStrategy,
    /// Mean positional error in meters over localized persons.
    pub mean_error: Option<f64>,
    pub localized: usize,
    pub failed: usize,
}

/// Render every person of the scene and localize its ground-truth box under
/// each strategy with `model`.
pub fn compare_strategies(scene: &Scene, model: &FisheyeModel) -> Vec<StrategyError> {
    let annotations: Vec<_> = render_annotations(scene)
        .into_iter()
        .filter_map(|r| match r {
            PersonRender::Visible(a) => Some(a),
            PersonRender::Unprojectable { .. } => None,
        })
        .collect();
    AnchorStrategy::ALL
        .iter()
        .map(|&strategy| {
            let (mut sum, mut localized, mut failed) = (0.0, 0usize, 0usize);
            for a in &annotations {
                match localize(&a.bbox, Some(a.head), model, strategy) {
                    Ok(loc) => {
                        sum += loc.error_to(a.world);
                        localized += 1;
                    }
                    Err(_) => failed += 1,
                }
            }
            StrategyError {
                strategy,
                mean_error: (localized > 0).then(|| sum / localized as f64),
                localized,
                failed,
            }
        })
        .collect()
}
