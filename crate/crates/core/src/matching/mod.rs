//! Query-to-ground-truth assignment and the rotation-equivariant loss.
//!
//! A detector answers a fixed number N of queries per image. Training pairs
//! the plain detection loss on the input with the same loss evaluated on a
//! rotated copy: the detector runs under rotation and is scored against the
//! ground truth rotated by the same angle about the principal point,
//!
//! ```text
//! L = L_det(gt, D(I)) + λ · L_det(rotate(gt, a), D(rotate(I, a)))
//! ```
//!
//! Each branch is matched independently. There is no network here: the
//! detector is anything implementing [`Detector`].

mod detector;
mod hungarian;

use rayon::prelude::*;

use crate::camera::ImagePoint;
use crate::geometry::{rotated_giou, RadiusAlignedBox};

pub use detector::{Detector, FileDetector, OracleDetector};
pub use hungarian::solve_assignment;

/// Weight of the equivariant branch in the total loss.
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Probabilities are floored here before taking logs.
const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatchError {
    #[error("{queries} queries cannot cover {gts} ground-truth boxes")]
    Capacity { queries: usize, gts: usize },
    #[error("detector returned {got} detections, expected {expected}")]
    QueryCount { expected: usize, got: usize },
    #[error("assignment covers {got} queries, expected {expected}")]
    AssignmentMismatch { expected: usize, got: usize },
    #[error("no ground truth for image {0:?}")]
    UnknownImage(String),
    #[error("no stored prediction for image {image:?} at angle {angle}")]
    MissingPrediction { image: String, angle: f64 },
    #[error("invalid detection: {0}")]
    InvalidDetection(String),
    #[error("lambda must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
}

/// A scored box. In the matching module boxes are normalized by the image side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: RadiusAlignedBox,
    pub score: f64,
}

impl Detection {
    pub fn new(bbox: RadiusAlignedBox, score: f64) -> Result<Self, MatchError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(MatchError::InvalidDetection(format!("score {score} outside [0, 1]")));
        }
        Ok(Self { bbox, score })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthBox {
    pub bbox: RadiusAlignedBox,
    /// Floor position (X, Y) in meters relative to nadir.
    pub world: Option<(f64, f64)>,
}

impl GroundTruthBox {
    pub fn new(bbox: RadiusAlignedBox) -> Self {
        Self { bbox, world: None }
    }

    pub fn rotated(&self, angle: f64, principal: ImagePoint) -> Self {
        Self {
            bbox: self.bbox.rotate_about(angle, principal),
            world: self.world,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchWeights {
    pub cls: f64,
    pub l1: f64,
    pub giou: f64,
}

impl Default for MatchWeights {
    fn default() -> Self {
        Self { cls: 2.0, l1: 5.0, giou: 2.0 }
    }
}

/// Ground-truth index per query; `None` is the no-object class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub query_to_gt: Vec<Option<usize>>,
}

impl Assignment {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.query_to_gt
            .iter()
            .enumerate()
            .filter_map(|(q, g)| g.map(|g| (q, g)))
    }
}

/// Loss of one detection branch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetLoss {
    pub cls: f64,
    pub l1: f64,
    pub giou: f64,
    pub det: f64,
}

/// Both branches combined. `cls`, `l1`, `giou` and `det` describe the
/// unrotated branch; `rotat_equi` is the `det` of the rotated branch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub cls: f64,
    pub l1: f64,
    pub giou: f64,
    pub det: f64,
    pub rotat_equi: f64,
    pub total: f64,
}

fn l1_distance(a: &RadiusAlignedBox, b: &RadiusAlignedBox) -> f64 {
    (a.cx - b.cx).abs() + (a.cy - b.cy).abs() + (a.w - b.w).abs() + (a.h - b.h).abs()
}

fn giou_radius_aligned(a: &RadiusAlignedBox, b: &RadiusAlignedBox, principal: ImagePoint) -> f64 {
    rotated_giou(&a.to_rotated(principal), &b.to_rotated(principal))
}

/// Matching cost of one (detection, ground truth) pair.
pub fn pair_cost(
    det: &Detection,
    gt: &GroundTruthBox,
    principal: ImagePoint,
    weights: &MatchWeights,
) -> f64 {
    weights.cls * (1.0 - det.score)
        + weights.l1 * l1_distance(&det.bbox, &gt.bbox)
        + weights.giou * (1.0 - giou_radius_aligned(&det.bbox, &gt.bbox, principal))
}

/// Minimum-cost bipartite assignment of ground truths to queries.
pub fn hungarian_match(
    detections: &[Detection],
    gts: &[GroundTruthBox],
    principal: ImagePoint,
    weights: &MatchWeights,
) -> Result<Assignment, MatchError> {
    if detections.len() < gts.len() {
        return Err(MatchError::Capacity { queries: detections.len(), gts: gts.len() });
    }
    let mut query_to_gt = vec![None; detections.len()];
    if gts.is_empty() {
        return Ok(Assignment { query_to_gt });
    }
    // rows are ground truths so that rows <= cols
    let cost: Vec<Vec<f64>> = gts
        .iter()
        .map(|g| detections.iter().map(|d| pair_cost(d, g, principal, weights)).collect())
        .collect();
    for (g, q) in solve_assignment(&cost).into_iter().enumerate() {
        query_to_gt[q] = Some(g);
    }
    Ok(Assignment { query_to_gt })
}

/// DETR-style set loss for a fixed assignment.
///
/// `cls` is the binary log-loss averaged over all queries (matched queries
/// target "person", the rest "no object"); `l1` and `giou` average over
/// matched pairs.
pub fn detection_loss(
    detections: &[Detection],
    gts: &[GroundTruthBox],
    assignment: &Assignment,
    principal: ImagePoint,
    weights: &MatchWeights,
) -> Result<DetLoss, MatchError> {
    if assignment.query_to_gt.len() != detections.len() {
        return Err(MatchError::AssignmentMismatch {
            expected: detections.len(),
            got: assignment.query_to_gt.len(),
        });
    }
    if detections.is_empty() {
        return Ok(DetLoss::default());
    }
    let mut cls_sum = 0.0;
    let (mut l1_sum, mut giou_sum, mut matched) = (0.0, 0.0, 0usize);
    for (det, target) in detections.iter().zip(&assignment.query_to_gt) {
        match target {
            Some(g) => {
                let gt = gts.get(*g).ok_or(MatchError::AssignmentMismatch {
                    expected: gts.len(),
                    got: *g + 1,
                })?;
                cls_sum -= det.score.max(LOG_FLOOR).ln();
                l1_sum += l1_distance(&det.bbox, &gt.bbox);
                giou_sum += 1.0 - giou_radius_aligned(&det.bbox, &gt.bbox, principal);
                matched += 1;
            }
            None => cls_sum -= (1.0 - det.score).max(LOG_FLOOR).ln(),
        }
    }
    let cls = cls_sum / detections.len() as f64;
    let (l1, giou) = if matched > 0 {
        (l1_sum / matched as f64, giou_sum / matched as f64)
    } else {
        (0.0, 0.0)
    };
    Ok(DetLoss {
        cls,
        l1,
        giou,
        det: weights.cls * cls + weights.l1 * l1 + weights.giou * giou,
    })
}

fn branch_loss<D: Detector + ?Sized>(
    detector: &D,
    image: &str,
    gts: &[GroundTruthBox],
    angle: f64,
    principal: ImagePoint,
    weights: &MatchWeights,
) -> Result<DetLoss, MatchError> {
    let targets: Vec<GroundTruthBox> = gts.iter().map(|g| g.rotated(angle, principal)).collect();
    let detections = detector.detect(image, angle)?;
    let expected = detector.num_queries();
    if detections.len() != expected {
        return Err(MatchError::QueryCount { expected, got: detections.len() });
    }
    let assignment = hungarian_match(&detections, &targets, principal, weights)?;
    detection_loss(&detections, &targets, &assignment, principal, weights)
}

/// Detection loss of the detector run under rotation `angle`, scored
/// against the ground truth rotated by the same angle about `principal`.
/// The returned `det` is the equivariant loss term.
pub fn rotat_equi_loss<D: Detector + ?Sized>(
    detector: &D,
    image: &str,
    gts: &[GroundTruthBox],
    angle: f64,
    principal: ImagePoint,
    weights: &MatchWeights,
) -> Result<DetLoss, MatchError> {
    branch_loss(detector, image, gts, angle, principal, weights)
}

pub fn total_loss(det: f64, rotat_equi: f64, lambda: f64) -> Result<f64, MatchError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(MatchError::InvalidLambda(lambda));
    }
    Ok(det + lambda * rotat_equi)
}

/// One training-loss evaluation: plain branch plus the branch at `angle`.
pub fn training_loss<D: Detector + ?Sized>(
    detector: &D,
    image: &str,
    gts: &[GroundTruthBox],
    angle: f64,
    principal: ImagePoint,
    weights: &MatchWeights,
    lambda: f64,
) -> Result<LossBreakdown, MatchError> {
    let plain = branch_loss(detector, image, gts, 0.0, principal, weights)?;
    let rotated = rotat_equi_loss(detector, image, gts, angle, principal, weights)?;
    Ok(LossBreakdown {
        cls: plain.cls,
        l1: plain.l1,
        giou: plain.giou,
        det: plain.det,
        rotat_equi: rotated.det,
        total: total_loss(plain.det, rotated.det, lambda)?,
    })
}

/// [`training_loss`] at each angle, in input order. Detectors that are not
/// thread safe are evaluated sequentially.
pub fn equivariance_sweep<D: Detector + Sync + ?Sized>(
    detector: &D,
    image: &str,
    gts: &[GroundTruthBox],
    angles: &[f64],
    principal: ImagePoint,
    weights: &MatchWeights,
    lambda: f64,
) -> Result<Vec<LossBreakdown>, MatchError> {
    let one = |&a: &f64| training_loss(detector, image, gts, a, principal, weights, lambda);
    if detector.thread_safe() {
        angles.par_iter().map(one).collect()
    } else {
        angles.iter().map(one).collect()
    }
}
