//! Detection and localization metrics.
//!
//! Detection follows the COCO protocol: per image, detections are visited in
//! descending score order and each takes the unmatched ground truth with the
//! highest IoU at or above the threshold. The ranked list over all images
//! gives the precision/recall curve, and AP is its 101-point interpolation.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::camera::{FisheyeModel, ImagePoint};
use crate::geometry::{rotated_iou, RadiusAlignedBox};
use crate::localization::{localize, AnchorStrategy};

/// Slack for threshold comparisons, so an IoU that is the threshold in exact
/// arithmetic is not rejected over a rounding error.
pub const IOU_EPS: f64 = 1e-12;
pub const PE_IOU_THRESHOLD: f64 = 0.5;
pub const DEFAULT_SCORE_CUTOFF: f64 = 0.5;
const RECALL_POINTS: usize = 101;

/// The ten COCO thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceBucket {
    Near,
    Middle,
    Far,
}

impl DistanceBucket {
    pub const ALL: [DistanceBucket; 3] = [DistanceBucket::Near, DistanceBucket::Middle, DistanceBucket::Far];

    /// Near is [0, 10) m, middle [10, 20) m, far everything beyond.
    pub fn from_distance(d: f64) -> DistanceBucket {
        if d < 10.0 {
            DistanceBucket::Near
        } else if d < 20.0 {
            DistanceBucket::Middle
        } else {
            DistanceBucket::Far
        }
    }

    pub fn from_world(world: (f64, f64)) -> DistanceBucket {
        Self::from_distance(world.0.hypot(world.1))
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DistanceBucket::Near => "near",
            DistanceBucket::Middle => "middle",
            DistanceBucket::Far => "far",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalGt {
    pub bbox: RadiusAlignedBox,
    pub world: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalDetection {
    pub bbox: RadiusAlignedBox,
    pub score: f64,
    /// Floor position estimated from this detection, if any.
    pub world: Option<(f64, f64)>,
}

/// One image with boxes in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalImage {
    pub image_id: String,
    /// `Some(true)` for seen scenes, `Some(false)` for unseen, `None` when
    /// the split says neither.
    pub seen: Option<bool>,
    pub principal: ImagePoint,
    pub gts: Vec<EvalGt>,
    pub detections: Vec<EvalDetection>,
}

impl EvalImage {
    fn bucket(&self, g: usize) -> Option<DistanceBucket> {
        self.gts[g].world.map(DistanceBucket::from_world)
    }
}

/// Localize every detection of every image from its box.
pub fn attach_localizations(images: &mut [EvalImage], model: &FisheyeModel, strategy: AnchorStrategy) {
    images.par_iter_mut().for_each(|img| {
        for d in &mut img.detections {
            d.world = localize(&d.bbox, None, model, strategy).ok().map(|l| (l.x, l.y));
        }
    });
}

/// Per-image IoU table with detections in ranked order.
struct Prepared {
    /// Detection indices sorted by descending score, stable.
    order: Vec<usize>,
    /// `iou[k][g]` for the k-th ranked detection.
    iou: Vec<Vec<f64>>,
}

fn by_score_desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

fn prepare(img: &EvalImage) -> Prepared {
    let mut order: Vec<usize> = (0..img.detections.len()).collect();
    order.sort_by(|&a, &b| by_score_desc(img.detections[a].score, img.detections[b].score));
    let gts: Vec<_> = img.gts.iter().map(|g| g.bbox.to_rotated(img.principal)).collect();
    let iou = order
        .iter()
        .map(|&d| {
            let r = img.detections[d].bbox.to_rotated(img.principal);
            gts.iter().map(|g| rotated_iou(&r, g)).collect()
        })
        .collect();
    Prepared { order, iou }
}

/// Greedy matching at one threshold: the matched ground truth for each
/// ranked detection.
fn greedy(p: &Prepared, num_gts: usize, threshold: f64) -> Vec<Option<usize>> {
    let mut taken = vec![false; num_gts];
    p.iou
        .iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (g, &v) in row.iter().enumerate() {
                if taken[g] || v < threshold - IOU_EPS {
                    continue;
                }
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((g, v));
                }
            }
            best.map(|(g, _)| {
                taken[g] = true;
                g
            })
        })
        .collect()
}

/// A detection on the global ranked list.
#[derive(Debug, Clone, Copy)]
struct Ranked {
    score: f64,
    image: usize,
    rank: usize,
    tp: bool,
}

/// 101-point interpolated AP for a ranked list, `None` when there is
/// nothing to rank and nothing to find.
fn interpolated_ap(mut list: Vec<Ranked>, num_gts: usize) -> Option<f64> {
    if num_gts == 0 {
        return if list.is_empty() { None } else { Some(0.0) };
    }
    list.sort_by(|a, b| {
        by_score_desc(a.score, b.score)
            .then(a.image.cmp(&b.image))
            .then(a.rank.cmp(&b.rank))
    });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut recall = Vec::with_capacity(list.len());
    let mut precision = Vec::with_capacity(list.len());
    for r in &list {
        if r.tp {
            tp += 1;
        } else {
            fp += 1;
        }
        recall.push(tp as f64 / num_gts as f64);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }
    let mut sum = 0.0;
    for i in 0..RECALL_POINTS {
        let level = i as f64 * 0.01;
        let idx = recall.partition_point(|&r| r < level);
        if idx < precision.len() {
            sum += precision[idx];
        }
    }
    Some(sum / RECALL_POINTS as f64)
}

struct Workspace<'a> {
    images: &'a [EvalImage],
    prepared: Vec<Prepared>,
}

impl<'a> Workspace<'a> {
    fn new(images: &'a [EvalImage]) -> Self {
        Self { images, prepared: images.par_iter().map(prepare).collect() }
    }

    fn matches(&self, threshold: f64) -> Vec<Vec<Option<usize>>> {
        self.images
            .par_iter()
            .zip(&self.prepared)
            .map(|(img, p)| greedy(p, img.gts.len(), threshold))
            .collect()
    }

    fn ap(&self, threshold: f64, include: impl Fn(&EvalImage) -> bool) -> Option<f64> {
        let matched = self.matches(threshold);
        let mut list = Vec::new();
        let mut num_gts = 0;
        for (i, img) in self.images.iter().enumerate() {
            if !include(img) {
                continue;
            }
            num_gts += img.gts.len();
            for (rank, &d) in self.prepared[i].order.iter().enumerate() {
                list.push(Ranked { score: img.detections[d].score, image: i, rank, tp: matched[i][rank].is_some() });
            }
        }
        interpolated_ap(list, num_gts)
    }

    fn mean_ap(&self, include: impl Fn(&EvalImage) -> bool + Copy) -> Option<f64> {
        mean_of(coco_thresholds().map(|t| self.ap(t, include)))
    }

    /// AP restricted to the ground truth of one bucket. Detections matched
    /// to another bucket are left out; unmatched ones count against the
    /// bucket of their highest-IoU ground truth, or against every bucket
    /// when they overlap nothing.
    fn bucket_ap(&self, threshold: f64, bucket: DistanceBucket) -> Option<f64> {
        let matched = self.matches(threshold);
        let mut list = Vec::new();
        let mut num_gts = 0;
        for (i, img) in self.images.iter().enumerate() {
            num_gts += (0..img.gts.len()).filter(|&g| img.bucket(g) == Some(bucket)).count();
            let p = &self.prepared[i];
            for (rank, &d) in p.order.iter().enumerate() {
                let tp = match matched[i][rank] {
                    Some(g) if img.bucket(g) == Some(bucket) => true,
                    Some(_) => continue,
                    None => {
                        let nearest = p.iou[rank]
                            .iter()
                            .enumerate()
                            .filter(|(_, &v)| v > 0.0)
                            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal).then(b.0.cmp(&a.0)));
                        match nearest {
                            Some((g, _)) if img.bucket(g) != Some(bucket) => continue,
                            _ => false,
                        }
                    }
                };
                list.push(Ranked { score: img.detections[d].score, image: i, rank, tp });
            }
        }
        // a bucket without ground truth has no AP, whatever was detected
        if num_gts == 0 {
            return None;
        }
        interpolated_ap(list, num_gts)
    }

    fn bucket_map(&self, bucket: DistanceBucket) -> Option<f64> {
        mean_of(coco_thresholds().map(|t| self.bucket_ap(t, bucket)))
    }
}

/// Mean of the defined values, `None` when all are absent.
fn mean_of<const N: usize>(values: [Option<f64>; N]) -> Option<f64> {
    let defined: Vec<f64> = values.into_iter().flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

pub fn average_precision(images: &[EvalImage], iou_threshold: f64) -> Option<f64> {
    Workspace::new(images).ap(iou_threshold, |_| true)
}

/// AP averaged over the ten COCO thresholds.
pub fn mean_ap(images: &[EvalImage]) -> Option<f64> {
    Workspace::new(images).mean_ap(|_| true)
}

/// Threshold-averaged AP for the near, middle and far buckets.
pub fn bucketed_ap(images: &[EvalImage]) -> [Option<f64>; 3] {
    let ws = Workspace::new(images);
    DistanceBucket::ALL.map(|b| ws.bucket_map(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PeStat {
    pub sum: f64,
    pub count: usize,
}

impl PeStat {
    fn add(&mut self, e: f64) {
        self.sum += e;
        self.count += 1;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    pub fn merge(&self, other: &PeStat) -> PeStat {
        PeStat { sum: self.sum + other.sum, count: self.count + other.count }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PositionalError {
    pub overall: PeStat,
    /// Near, middle, far.
    pub buckets: [PeStat; 3],
    pub seen: PeStat,
    pub unseen: PeStat,
    /// Ground truth with no detection at IoU 0.5.
    pub unmatched_gts: usize,
    /// Matched pairs where either side has no floor position.
    pub unlocated_pairs: usize,
}

fn bucket_index(b: DistanceBucket) -> usize {
    b as usize
}

fn positional_error_ws(ws: &Workspace<'_>) -> PositionalError {
    let matched = ws.matches(PE_IOU_THRESHOLD);
    let mut pe = PositionalError::default();
    for (i, img) in ws.images.iter().enumerate() {
        let mut hit = vec![false; img.gts.len()];
        for (rank, &d) in ws.prepared[i].order.iter().enumerate() {
            let Some(g) = matched[i][rank] else { continue };
            hit[g] = true;
            match (img.detections[d].world, img.gts[g].world) {
                (Some(est), Some(truth)) => {
                    let e = (est.0 - truth.0).hypot(est.1 - truth.1);
                    pe.overall.add(e);
                    pe.buckets[bucket_index(DistanceBucket::from_world(truth))].add(e);
                    match img.seen {
                        Some(true) => pe.seen.add(e),
                        Some(false) => pe.unseen.add(e),
                        None => {}
                    }
                }
                _ => pe.unlocated_pairs += 1,
            }
        }
        pe.unmatched_gts += hit.iter().filter(|h| !**h).count();
    }
    pe
}

/// Mean floor-position error over true positives at IoU 0.5.
pub fn positional_error(images: &[EvalImage]) -> PositionalError {
    positional_error_ws(&Workspace::new(images))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub score_cutoff: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_score: Option<f64>,
}

/// Precision, recall and F-score at IoU 0.5 over detections scoring at
/// least `score_cutoff`.
pub fn operating_point(images: &[EvalImage], score_cutoff: f64) -> OperatingPoint {
    let kept: Vec<EvalImage> = images
        .iter()
        .map(|img| EvalImage {
            detections: img.detections.iter().copied().filter(|d| d.score >= score_cutoff).collect(),
            ..img.clone()
        })
        .collect();
    let ws = Workspace::new(&kept);
    let matched = ws.matches(PE_IOU_THRESHOLD);
    let tp: usize = matched.iter().map(|m| m.iter().flatten().count()).sum();
    let dets: usize = kept.iter().map(|i| i.detections.len()).sum();
    let gts: usize = kept.iter().map(|i| i.gts.len()).sum();
    let precision = (dets > 0).then(|| tp as f64 / dets as f64);
    let recall = (gts > 0).then(|| tp as f64 / gts as f64);
    let f_score = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    OperatingPoint {
        score_cutoff,
        true_positives: tp,
        false_positives: dets - tp,
        false_negatives: gts - tp,
        precision,
        recall,
        f_score,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub score_cutoff: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { score_cutoff: DEFAULT_SCORE_CUTOFF }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BucketCounts {
    pub near: usize,
    pub middle: usize,
    pub far: usize,
    /// Ground truth without a floor position.
    pub unlocated: usize,
}

/// One (split, bucket) row of the tabular report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub split: String,
    pub bucket: String,
    pub gts: usize,
    pub map: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub pe: Option<f64>,
    pub pe_pairs: usize,
}

/// AP values are fractions in [0, 1] here; the rendered reports show them
/// as percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub images: usize,
    pub gts: usize,
    pub detections: usize,
    pub map: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_n: Option<f64>,
    pub ap_m: Option<f64>,
    pub ap_f: Option<f64>,
    pub ap_seen: Option<f64>,
    pub ap_unseen: Option<f64>,
    pub pe: PositionalError,
    pub counts: BucketCounts,
    pub operating_point: OperatingPoint,
    pub rows: Vec<ReportRow>,
}

pub fn evaluate(images: &[EvalImage], options: &EvalOptions) -> EvalReport {
    let ws = Workspace::new(images);
    let seen = |img: &EvalImage| img.seen == Some(true);
    let unseen = |img: &EvalImage| img.seen == Some(false);
    let [ap_n, ap_m, ap_f] = DistanceBucket::ALL.map(|b| ws.bucket_map(b));
    let pe = positional_error_ws(&ws);

    let mut counts = BucketCounts::default();
    for img in images {
        for g in 0..img.gts.len() {
            match img.bucket(g) {
                Some(DistanceBucket::Near) => counts.near += 1,
                Some(DistanceBucket::Middle) => counts.middle += 1,
                Some(DistanceBucket::Far) => counts.far += 1,
                None => counts.unlocated += 1,
            }
        }
    }

    let splits: [(&str, Option<bool>); 3] = [("all", None), ("seen", Some(true)), ("unseen", Some(false))];
    let mut rows = Vec::new();
    for (name, want) in splits {
        let subset: Vec<EvalImage> = images
            .iter()
            .filter(|img| want.is_none() || img.seen == want)
            .cloned()
            .collect();
        let sub = Workspace::new(&subset);
        let sub_pe = positional_error_ws(&sub);
        let gts_all: usize = subset.iter().map(|i| i.gts.len()).sum();
        rows.push(ReportRow {
            split: name.into(),
            bucket: "all".into(),
            gts: gts_all,
            map: sub.mean_ap(|_| true),
            ap50: sub.ap(0.5, |_| true),
            ap75: sub.ap(0.75, |_| true),
            pe: sub_pe.overall.mean(),
            pe_pairs: sub_pe.overall.count,
        });
        for b in DistanceBucket::ALL {
            let gts = subset
                .iter()
                .map(|img| (0..img.gts.len()).filter(|&g| img.bucket(g) == Some(b)).count())
                .sum();
            let stat = sub_pe.buckets[bucket_index(b)];
            rows.push(ReportRow {
                split: name.into(),
                bucket: b.as_str().into(),
                gts,
                map: sub.bucket_map(b),
                ap50: sub.bucket_ap(0.5, b),
                ap75: sub.bucket_ap(0.75, b),
                pe: stat.mean(),
                pe_pairs: stat.count,
            });
        }
    }

    EvalReport {
        images: images.len(),
        gts: images.iter().map(|i| i.gts.len()).sum(),
        detections: images.iter().map(|i| i.detections.len()).sum(),
        map: ws.mean_ap(|_| true),
        ap50: ws.ap(0.5, |_| true),
        ap75: ws.ap(0.75, |_| true),
        ap_n,
        ap_m,
        ap_f,
        ap_seen: ws.mean_ap(seen),
        ap_unseen: ws.mean_ap(unseen),
        pe,
        counts,
        operating_point: operating_point(images, options.score_cutoff),
        rows,
    }
}

fn percent(v: Option<f64>) -> Option<f64> {
    v.map(|x| 100.0 * x)
}

#[derive(Serialize)]
struct DetectionSection {
    #[serde(rename = "mAP")]
    map: Option<f64>,
    #[serde(rename = "AP50")]
    ap50: Option<f64>,
    #[serde(rename = "AP75")]
    ap75: Option<f64>,
    #[serde(rename = "APn")]
    ap_n: Option<f64>,
    #[serde(rename = "APm")]
    ap_m: Option<f64>,
    #[serde(rename = "APf")]
    ap_f: Option<f64>,
    #[serde(rename = "AP_seen")]
    ap_seen: Option<f64>,
    #[serde(rename = "AP_unseen")]
    ap_unseen: Option<f64>,
}

#[derive(Serialize)]
struct LocalizationSection {
    #[serde(rename = "mPE")]
    mpe: Option<f64>,
    #[serde(rename = "PEn")]
    pe_n: Option<f64>,
    #[serde(rename = "PEm")]
    pe_m: Option<f64>,
    #[serde(rename = "PEf")]
    pe_f: Option<f64>,
    #[serde(rename = "PE_seen")]
    pe_seen: Option<f64>,
    #[serde(rename = "PE_unseen")]
    pe_unseen: Option<f64>,
    matched_pairs: usize,
    unmatched_gts: usize,
    unlocated_pairs: usize,
}

#[derive(Serialize)]
struct Document {
    format: &'static str,
    images: usize,
    gts: usize,
    detections: usize,
    gt_counts: BucketCounts,
    detection: DetectionSection,
    localization: LocalizationSection,
    operating_point: OperatingPoint,
    rows: Vec<ReportRow>,
}

impl EvalReport {
    /// Structured report; AP in percent, PE in meters.
    pub fn to_text(&self) -> String {
        let doc = Document {
            format: "fishloc.report/1",
            images: self.images,
            gts: self.gts,
            detections: self.detections,
            gt_counts: self.counts,
            detection: DetectionSection {
                map: percent(self.map),
                ap50: percent(self.ap50),
                ap75: percent(self.ap75),
                ap_n: percent(self.ap_n),
                ap_m: percent(self.ap_m),
                ap_f: percent(self.ap_f),
                ap_seen: percent(self.ap_seen),
                ap_unseen: percent(self.ap_unseen),
            },
            localization: LocalizationSection {
                mpe: self.pe.overall.mean(),
                pe_n: self.pe.buckets[0].mean(),
                pe_m: self.pe.buckets[1].mean(),
                pe_f: self.pe.buckets[2].mean(),
                pe_seen: self.pe.seen.mean(),
                pe_unseen: self.pe.unseen.mean(),
                matched_pairs: self.pe.overall.count,
                unmatched_gts: self.pe.unmatched_gts,
                unlocated_pairs: self.pe.unlocated_pairs,
            },
            operating_point: self.operating_point,
            rows: self
                .rows
                .iter()
                .map(|r| ReportRow { map: percent(r.map), ap50: percent(r.ap50), ap75: percent(r.ap75), ..r.clone() })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per (split, bucket); absent values are empty cells.
    pub fn to_csv(&self) -> String {
        fn cell(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.6}")).unwrap_or_default()
        }
        let mut out = String::from("split,bucket,gts,mAP,AP50,AP75,PE,pe_pairs\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.split,
                r.bucket,
                r.gts,
                cell(percent(r.map)),
                cell(percent(r.ap50)),
                cell(percent(r.ap75)),
                cell(r.pe),
                r.pe_pairs
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: ImagePoint = ImagePoint::new(500.0, 500.0);

    fn gt(cx: f64, cy: f64, world: Option<(f64, f64)>) -> EvalGt {
        EvalGt { bbox: RadiusAlignedBox::new(cx, cy, 20.0, 40.0).unwrap(), world }
    }

    fn det(b: RadiusAlignedBox, score: f64) -> EvalDetection {
        EvalDetection { bbox: b, score, world: None }
    }

    fn image(gts: Vec<EvalGt>, detections: Vec<EvalDetection>) -> EvalImage {
        EvalImage { image_id: "x".into(), seen: None, principal: P, gts, detections }
    }

    fn perfect() -> Vec<EvalImage> {
        let gts = vec![gt(600.0, 500.0, Some((3.0, 0.0))), gt(500.0, 650.0, Some((0.0, 12.0))), gt(200.0, 500.0, Some((-25.0, 0.0)))];
        let dets = gts.iter().map(|g| det(g.bbox, 1.0)).collect();
        vec![image(gts, dets)]
    }

    #[test]
    fn buckets_partition() {
        assert_eq!(DistanceBucket::from_distance(0.0), DistanceBucket::Near);
        assert_eq!(DistanceBucket::from_distance(9.999), DistanceBucket::Near);
        assert_eq!(DistanceBucket::from_distance(10.0), DistanceBucket::Middle);
        assert_eq!(DistanceBucket::from_distance(20.0), DistanceBucket::Far);
    }

    #[test]
    fn perfect_detections() {
        let imgs = perfect();
        for t in coco_thresholds() {
            assert_eq!(average_precision(&imgs, t), Some(1.0));
        }
        assert_eq!(mean_ap(&imgs), Some(1.0));
        assert_eq!(bucketed_ap(&imgs), [Some(1.0), Some(1.0), Some(1.0)]);
    }

    #[test]
    fn empty_cases() {
        let none = vec![image(vec![gt(600.0, 500.0, None)], vec![])];
        assert_eq!(average_precision(&none, 0.5), Some(0.0));
        let nothing = vec![image(vec![], vec![])];
        assert_eq!(average_precision(&nothing, 0.5), None);
        let spurious = vec![image(vec![], vec![det(RadiusAlignedBox::new(600.0, 500.0, 20.0, 40.0).unwrap(), 0.9)])];
        assert_eq!(average_precision(&spurious, 0.5), Some(0.0));
    }

    #[test]
    fn iou_point_six_passes_three_thresholds() {
        // radial shift s on height h gives IoU (h - s) / (h + s)
        let g = gt(700.0, 500.0, None);
        let s = 40.0 * 0.4 / 1.6;
        let shifted = RadiusAlignedBox::new(700.0 + s, 500.0, 20.0, 40.0).unwrap();
        let iou = rotated_iou(&shifted.to_rotated(P), &g.bbox.to_rotated(P));
        assert!((iou - 0.6).abs() < 1e-12, "{iou}");
        let imgs = vec![image(vec![g], vec![det(shifted, 1.0)])];
        let passes = coco_thresholds().iter().filter(|&&t| average_precision(&imgs, t) == Some(1.0)).count();
        assert_eq!(passes, 3);
    }

    #[test]
    fn far_misses_lower_only_far_bucket() {
        let mut imgs = perfect();
        imgs[0].detections.pop();
        let [n, m, f] = bucketed_ap(&imgs);
        assert_eq!(n, Some(1.0));
        assert_eq!(m, Some(1.0));
        assert_eq!(f, Some(0.0));
    }

    #[test]
    fn near_only_leaves_other_buckets_absent() {
        let g = gt(600.0, 500.0, Some((4.0, 0.0)));
        let stray = det(RadiusAlignedBox::new(100.0, 500.0, 20.0, 40.0).unwrap(), 0.5);
        let imgs = vec![image(vec![g], vec![det(g.bbox, 1.0), stray])];
        assert_eq!(bucketed_ap(&imgs), [Some(1.0), None, None]);
    }

    #[test]
    fn three_four_five() {
        let g = gt(600.0, 500.0, Some((0.0, 0.0)));
        let mut d = det(g.bbox, 1.0);
        d.world = Some((3.0, 4.0));
        let pe = positional_error(&[image(vec![g], vec![d])]);
        assert_eq!(pe.overall.mean(), Some(5.0));
        assert_eq!(pe.buckets[0].mean(), Some(5.0));
        assert_eq!(pe.unmatched_gts, 0);
    }

    #[test]
    fn operating_point_counts() {
        let mut imgs = perfect();
        imgs[0].detections[2].score = 0.1;
        let op = operating_point(&imgs, 0.5);
        assert_eq!((op.true_positives, op.false_positives, op.false_negatives), (2, 0, 1));
        assert_eq!(op.precision, Some(1.0));
        assert!((op.recall.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn report_counts_and_rows() {
        let r = evaluate(&perfect(), &EvalOptions::default());
        assert_eq!((r.counts.near, r.counts.middle, r.counts.far), (1, 1, 1));
        assert_eq!(r.rows.len(), 12);
        assert!(r.to_text().contains("\"mAP\": 100.0"));
        assert!(r.to_csv().starts_with("split,bucket,gts,mAP"));
    }
}
