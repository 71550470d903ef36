use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Detection, GroundTruthBox, MatchError};
use crate::camera::ImagePoint;
use crate::geometry::RadiusAlignedBox;

/// Stand-in for the network: maps an image and a rotation angle to exactly
/// `num_queries()` detections.
pub trait Detector {
    fn num_queries(&self) -> usize;

    fn detect(&self, image: &str, angle: f64) -> Result<Vec<Detection>, MatchError>;

    /// Whether `detect` may be called from several threads at once.
    fn thread_safe(&self) -> bool {
        true
    }
}

// FNV-1a, for per-call seeds that do not depend on the std hasher
fn fnv1a(bytes: impl IntoIterator<Item = u8>, mut h: u64) -> u64 {
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Emits the ground truth, rotated with the image, optionally jittered.
/// Queries beyond the ground-truth count are filled with score-0 boxes.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    gts: HashMap<String, Vec<GroundTruthBox>>,
    principal: ImagePoint,
    num_queries: usize,
    /// Standard deviation of the center jitter, in normalized units.
    pub center_sigma: f64,
    pub seed: u64,
    /// When false the detector ignores the rotation and always answers with
    /// the unrotated ground truth.
    pub follows_rotation: bool,
}

impl OracleDetector {
    pub fn new(principal: ImagePoint, num_queries: usize) -> Self {
        Self {
            gts: HashMap::new(),
            principal,
            num_queries,
            center_sigma: 0.0,
            seed: 0,
            follows_rotation: true,
        }
    }

    pub fn with_image(mut self, image: impl Into<String>, gts: Vec<GroundTruthBox>) -> Self {
        self.gts.insert(image.into(), gts);
        self
    }

    fn filler(&self) -> Detection {
        Detection {
            bbox: RadiusAlignedBox { cx: 0.5, cy: 0.5, w: 0.01, h: 0.01 },
            score: 0.0,
        }
    }
}

impl Detector for OracleDetector {
    fn num_queries(&self) -> usize {
        self.num_queries
    }

    fn detect(&self, image: &str, angle: f64) -> Result<Vec<Detection>, MatchError> {
        let gts = self
            .gts
            .get(image)
            .ok_or_else(|| MatchError::UnknownImage(image.to_string()))?;
        if gts.len() > self.num_queries {
            return Err(MatchError::Capacity { queries: self.num_queries, gts: gts.len() });
        }
        let angle = if self.follows_rotation { angle } else { 0.0 };
        let seed = fnv1a(
            image.bytes().chain(angle.to_bits().to_le_bytes()),
            0xcbf2_9ce4_8422_2325 ^ self.seed,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jitter = Normal::new(0.0, self.center_sigma.max(0.0))
            .map_err(|e| MatchError::InvalidDetection(e.to_string()))?;
        let mut out: Vec<Detection> = gts
            .iter()
            .map(|g| {
                let mut b = g.bbox.rotate_about(angle, self.principal);
                if self.center_sigma > 0.0 {
                    b.cx += jitter.sample(&mut rng);
                    b.cy += jitter.sample(&mut rng);
                }
                Detection { bbox: b, score: 1.0 }
            })
            .collect();
        out.resize(self.num_queries, self.filler());
        Ok(out)
    }
}

/// Replays stored predictions keyed by image id and rotation angle.
#[derive(Debug, Clone, Default)]
pub struct FileDetector {
    records: HashMap<String, Vec<(f64, Vec<Detection>)>>,
    num_queries: Option<usize>,
}

/// Angles closer than this are the same replay key.
const ANGLE_TOLERANCE: f64 = 1e-9;

impl FileDetector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every stored prediction must answer the same number of queries.
    pub fn insert(&mut self, image: &str, angle: f64, detections: Vec<Detection>) -> Result<(), MatchError> {
        match self.num_queries {
            Some(n) if n != detections.len() => {
                return Err(MatchError::QueryCount { expected: n, got: detections.len() })
            }
            _ => self.num_queries = Some(detections.len()),
        }
        self.records
            .entry(image.to_string())
            .or_default()
            .push((angle, detections));
        Ok(())
    }

    /// Angles stored for an image, in insertion order.
    pub fn angles(&self, image: &str) -> Vec<f64> {
        self.records
            .get(image)
            .map(|v| v.iter().map(|(a, _)| *a).collect())
            .unwrap_or_default()
    }
}

impl Detector for FileDetector {
    fn num_queries(&self) -> usize {
        self.num_queries.unwrap_or(0)
    }

    fn detect(&self, image: &str, angle: f64) -> Result<Vec<Detection>, MatchError> {
        self.records
            .get(image)
            .and_then(|v| v.iter().find(|(a, _)| (a - angle).abs() <= ANGLE_TOLERANCE))
            .map(|(_, d)| d.clone())
            .ok_or_else(|| MatchError::MissingPrediction { image: image.to_string(), angle })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_pads_to_query_count() {
        let gt = GroundTruthBox::new(RadiusAlignedBox::new(0.7, 0.5, 0.05, 0.1).unwrap());
        let d = OracleDetector::new(ImagePoint::new(0.5, 0.5), 5).with_image("a", vec![gt]);
        let out = d.detect("a", 1.0).unwrap();
        assert_eq!(out.len(), 5);
        assert_eq!(out.iter().filter(|x| x.score == 1.0).count(), 1);
        assert!(d.detect("b", 0.0).is_err());
    }

    #[test]
    fn file_detector_checks_query_count() {
        let det = Detection::new(RadiusAlignedBox::new(0.7, 0.5, 0.05, 0.1).unwrap(), 0.5).unwrap();
        let mut f = FileDetector::new();
        f.insert("a", 0.0, vec![det, det]).unwrap();
        assert!(f.insert("a", 1.0, vec![det]).is_err());
        assert_eq!(f.detect("a", 0.0).unwrap().len(), 2);
        assert!(matches!(f.detect("a", 0.5), Err(MatchError::MissingPrediction { .. })));
    }
}
