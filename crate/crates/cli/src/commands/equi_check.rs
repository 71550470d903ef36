use std::path::PathBuf;

use fishloc_core::camera::ImagePoint;
use fishloc_core::io::{image_geometry, read_annotations, read_calibration, read_predictions, PredictionRecord};
use fishloc_core::matching::{equivariance_sweep, FileDetector, GroundTruthBox, LossBreakdown, MatchWeights, DEFAULT_LAMBDA};
use rayon::prelude::*;
use serde::Serialize;

use super::{csv_text, emit, pretty};
use crate::error::CliError;
use crate::{Format, Global};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Predictions for each image at angle 0 and at every rotated replica.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    /// Supplies the principal point; the image center is used otherwise.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Weight of the equivariant term.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    w_cls: Option<f64>,
    #[arg(long)]
    w_l1: Option<f64>,
    #[arg(long)]
    w_giou: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    image_id: String,
    angle: f64,
    cls: f64,
    l1: f64,
    giou: f64,
    det: f64,
    rotat_equi: f64,
    total: f64,
}

#[derive(Serialize)]
struct Aggregate {
    pairs: usize,
    images: usize,
    skipped_images: usize,
    mean_det: Option<f64>,
    mean_rotat_equi: Option<f64>,
    max_rotat_equi: Option<f64>,
    mean_total: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    lambda: f64,
    weights: [f64; 3],
    aggregate: Aggregate,
    rows: Vec<Row>,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn run(args: Args, global: &Global) -> Result<(), CliError> {
    let cfg = &global.config.equi_check;
    let lambda = args.lambda.or(cfg.lambda).unwrap_or(DEFAULT_LAMBDA);
    let base = MatchWeights::default();
    let weights = MatchWeights {
        cls: args.w_cls.or(cfg.weights.cls).unwrap_or(base.cls),
        l1: args.w_l1.or(cfg.weights.l1).unwrap_or(base.l1),
        giou: args.w_giou.or(cfg.weights.giou).unwrap_or(base.giou),
    };
    if [lambda, weights.cls, weights.l1, weights.giou].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(CliError::Validation("lambda and weights must be finite and non-negative".into()));
    }
    let calibration = args.calibration.as_deref().map(read_calibration).transpose()?;
    let annotations = read_annotations(&args.annotations)?;
    let predictions = read_predictions(&args.predictions)?;

    let mut jobs = Vec::new();
    let mut skipped = 0;
    for a in &annotations {
        let records: Vec<&PredictionRecord> = predictions.iter().filter(|p| p.image_id == a.image_id).collect();
        if records.is_empty() {
            skipped += 1;
            continue;
        }
        let principal = match &calibration {
            Some(c) => {
                let (side, p) = image_geometry(a, Some(c))?;
                ImagePoint::new(p.u / side, p.v / side)
            }
            None => ImagePoint::new(0.5, 0.5),
        };
        let mut detector = FileDetector::new();
        for r in &records {
            detector.insert(&a.image_id, r.angle.unwrap_or(0.0), r.detections.clone())?;
        }
        let angles: Vec<f64> = detector.angles(&a.image_id).into_iter().filter(|&x| x != 0.0).collect();
        if angles.len() == records.len() {
            return Err(CliError::Validation(format!("image {:?} has no unrotated predictions", a.image_id)));
        }
        let gts: Vec<GroundTruthBox> = a.boxes.iter().map(|b| GroundTruthBox::new(b.bbox)).collect();
        jobs.push((a.image_id.clone(), detector, gts, angles, principal));
    }

    let per_image: Vec<Vec<(f64, LossBreakdown)>> = jobs
        .par_iter()
        .map(|(id, detector, gts, angles, principal)| {
            let losses = equivariance_sweep(detector, id, gts, angles, *principal, &weights, lambda)?;
            Ok(angles.iter().copied().zip(losses).collect())
        })
        .collect::<Result<_, fishloc_core::matching::MatchError>>()?;

    let rows: Vec<Row> = jobs
        .iter()
        .zip(per_image)
        .flat_map(|((id, ..), losses)| {
            losses.into_iter().map(move |(angle, l)| Row {
                image_id: id.clone(),
                angle,
                cls: l.cls,
                l1: l.l1,
                giou: l.giou,
                det: l.det,
                rotat_equi: l.rotat_equi,
                total: l.total,
            })
        })
        .collect();
    let report = Report {
        lambda,
        weights: [weights.cls, weights.l1, weights.giou],
        aggregate: Aggregate {
            pairs: rows.len(),
            images: jobs.len(),
            skipped_images: skipped,
            mean_det: mean(rows.iter().map(|r| r.det)),
            mean_rotat_equi: mean(rows.iter().map(|r| r.rotat_equi)),
            max_rotat_equi: rows.iter().map(|r| r.rotat_equi).reduce(f64::max),
            mean_total: mean(rows.iter().map(|r| r.total)),
        },
        rows,
    };
    let text = match global.format {
        Format::Text => pretty(&report),
        Format::Csv => csv_text(
            &["image_id", "angle", "cls", "l1", "giou", "det", "rotat_equi", "total"],
            report.rows.iter().map(|r| {
                vec![
                    r.image_id.clone(),
                    r.angle.to_string(),
                    r.cls.to_string(),
                    r.l1.to_string(),
                    r.giou.to_string(),
                    r.det.to_string(),
                    r.rotat_equi.to_string(),
                    r.total.to_string(),
                ]
            }),
        ),
    };
    emit(&text, args.report.as_deref())
}
