use std::path::PathBuf;

use fishloc_core::geometry::RadiusAlignedBox;
use fishloc_core::io::{read_calibration, read_predictions, write_localizations, LocalizationOutcome, LocalizationRecord};
use fishloc_core::localization::{localize_batch, AnchorStrategy};
use serde::Serialize;

use super::{csv_text, emit, pretty, strategy};
use crate::error::CliError;
use crate::{Format, Global};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Prediction file (fishloc.predictions). Rotated replicas are skipped.
    #[arg(long)]
    predictions: PathBuf,
    /// Calibration file with altitude.
    #[arg(long)]
    calibration: PathBuf,
    #[arg(long)]
    strategy: Option<AnchorStrategy>,
    /// Image side in pixels; overrides the calibration file.
    #[arg(long)]
    image_side: Option<f64>,
    /// Localization file to write.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    strategy: String,
    images: usize,
    skipped_rotated: usize,
    detections: usize,
    located: usize,
    failed: usize,
}

pub fn run(args: Args, global: &Global) -> Result<(), CliError> {
    let strategy = strategy(args.strategy, global.config.localize.strategy.as_deref())?;
    let calibration = read_calibration(&args.calibration)?;
    let side = args.image_side.or(calibration.image_side).ok_or_else(|| {
        CliError::Validation("image side unknown: pass --image-side or set image_side in the calibration".into())
    })?;
    if !(side.is_finite() && side > 0.0) {
        return Err(CliError::Validation(format!("invalid image side {side}")));
    }
    if calibration.model.altitude().is_none() {
        return Err(CliError::Validation("the calibration has no altitude".into()));
    }
    let predictions = read_predictions(&args.predictions)?;
    let (plain, rotated): (Vec<_>, Vec<_>) = predictions.iter().partition(|p| p.angle.unwrap_or(0.0) == 0.0);

    let mut out = Vec::new();
    for p in &plain {
        let items: Vec<(RadiusAlignedBox, _)> = p.detections.iter().map(|d| (d.bbox.denormalized(side), None)).collect();
        for (i, (res, d)) in localize_batch(&items, &calibration.model, strategy)
            .into_iter()
            .zip(&p.detections)
            .enumerate()
        {
            let outcome = match res {
                Ok(l) => LocalizationOutcome::Located { x: l.x, y: l.y, theta: l.theta, phi: l.phi },
                Err(e) => LocalizationOutcome::Failed { reason: e.to_string() },
            };
            out.push(LocalizationRecord { image_id: p.image_id.clone(), detection: i, score: d.score, outcome });
        }
    }
    write_localizations(&out, &args.output)?;

    let located = out.iter().filter(|r| matches!(r.outcome, LocalizationOutcome::Located { .. })).count();
    let report = Report {
        strategy: strategy.to_string(),
        images: plain.len(),
        skipped_rotated: rotated.len(),
        detections: out.len(),
        located,
        failed: out.len() - located,
    };
    let text = match global.format {
        Format::Text => pretty(&report),
        Format::Csv => csv_text(
            &["strategy", "images", "skipped_rotated", "detections", "located", "failed"],
            [vec![
                report.strategy.clone(),
                report.images.to_string(),
                report.skipped_rotated.to_string(),
                report.detections.to_string(),
                report.located.to_string(),
                report.failed.to_string(),
            ]],
        ),
    };
    emit(&text, args.report.as_deref())
}
