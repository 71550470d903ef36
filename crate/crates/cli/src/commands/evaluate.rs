use std::path::PathBuf;

use fishloc_core::eval::{attach_localizations, evaluate, EvalOptions, DEFAULT_SCORE_CUTOFF};
use fishloc_core::io::{eval_images, read_annotations, read_calibration, read_predictions};
use fishloc_core::localization::AnchorStrategy;

use super::{emit, strategy};
use crate::error::CliError;
use crate::{Format, Global};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    /// Needed for positional error and for the principal point.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Fail unless positional error can be computed.
    #[arg(long)]
    pe: bool,
    /// Anchor used to localize detections.
    #[arg(long)]
    strategy: Option<AnchorStrategy>,
    /// Minimum score for precision, recall and F-score.
    #[arg(long)]
    score_cutoff: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run(args: Args, global: &Global) -> Result<(), CliError> {
    let cfg = &global.config.evaluate;
    let strategy = strategy(args.strategy, cfg.strategy.as_deref())?;
    let score_cutoff = args.score_cutoff.or(cfg.score_cutoff).unwrap_or(DEFAULT_SCORE_CUTOFF);
    if !score_cutoff.is_finite() {
        return Err(CliError::Validation(format!("invalid score cutoff {score_cutoff}")));
    }
    let calibration_path = args.calibration.clone().or(cfg.calibration.clone());
    if args.pe && calibration_path.is_none() {
        return Err(CliError::Validation("positional error needs --calibration".into()));
    }
    let calibration = calibration_path.as_deref().map(read_calibration).transpose()?;
    if args.pe && calibration.as_ref().is_some_and(|c| c.model.altitude().is_none()) {
        return Err(CliError::Validation("positional error needs a calibration with altitude".into()));
    }
    let annotations = read_annotations(&args.annotations)?;
    let predictions = read_predictions(&args.predictions)?;
    let mut images = eval_images(&annotations, &predictions, calibration.as_ref())?;
    if let Some(c) = calibration.as_ref().filter(|c| c.model.altitude().is_some()) {
        attach_localizations(&mut images, &c.model, strategy);
    }
    let report = evaluate(&images, &EvalOptions { score_cutoff });
    let text = match global.format {
        Format::Text => report.to_text(),
        Format::Csv => report.to_csv(),
    };
    emit(&text, args.report.as_deref())
}
