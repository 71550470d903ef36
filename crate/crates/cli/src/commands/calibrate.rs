use std::path::PathBuf;

use fishloc_core::camera::{calibrate, CalibrationOptions, Correspondence, ImagePoint, DEFAULT_MAX_ITERATIONS};
use fishloc_core::io::{read_correspondences, write_calibration, CalibrationFile};
use serde::Serialize;

use super::{cell, csv_text, emit, pretty};
use crate::error::CliError;
use crate::{Format, Global};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Correspondence file (fishloc.correspondences).
    #[arg(long)]
    correspondences: PathBuf,
    /// Starting focal length in pixels.
    #[arg(long)]
    initial_focal: Option<f64>,
    /// Starting principal point in pixels.
    #[arg(long, num_args = 2, value_names = ["U", "V"])]
    principal: Option<Vec<f64>>,
    /// Keep the principal point fixed at --principal.
    #[arg(long)]
    pin_principal: bool,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Image side in pixels, stored in the calibration file.
    #[arg(long)]
    image_side: Option<f64>,
    /// Calibration file to write.
    #[arg(long)]
    output: PathBuf,
    /// Report file; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    rms_px: f64,
    iterations: usize,
    correspondences: usize,
    focal: f64,
    principal: [f64; 2],
    coefficients: [f64; 5],
    altitude: Option<f64>,
}

pub fn run(args: Args, global: &Global) -> Result<(), CliError> {
    let cfg = &global.config.calibrate;
    let initial_focal = args
        .initial_focal
        .or(cfg.initial_focal)
        .ok_or_else(|| CliError::Validation("missing --initial-focal".into()))?;
    let records = read_correspondences(&args.correspondences)?;
    let points: Vec<Correspondence> = records
        .iter()
        .map(|r| Correspondence { world: r.world, pixel: r.pixel })
        .collect();
    let options = CalibrationOptions {
        initial_focal,
        principal: args.principal.as_deref().map(|p| ImagePoint::new(p[0], p[1])),
        pin_principal: args.pin_principal,
        max_iterations: args.max_iterations.or(cfg.max_iterations).unwrap_or(DEFAULT_MAX_ITERATIONS),
    };
    let result = calibrate(&points, &options)?;
    let image_side = args.image_side.or(cfg.image_side);
    write_calibration(
        &CalibrationFile { model: result.model, image_side, rms_px: Some(result.rms_px) },
        &args.output,
    )?;

    let p = result.model.principal_point();
    let report = Report {
        rms_px: result.rms_px,
        iterations: result.iterations,
        correspondences: points.len(),
        focal: result.model.focal(),
        principal: [p.u, p.v],
        coefficients: result.model.coefficients(),
        altitude: result.model.altitude(),
    };
    let text = match global.format {
        Format::Text => pretty(&report),
        Format::Csv => {
            let k = report.coefficients;
            csv_text(
                &["rms_px", "iterations", "correspondences", "focal", "u0", "v0", "k1", "k2", "k3", "k4", "k5", "altitude"],
                [vec![
                    report.rms_px.to_string(),
                    report.iterations.to_string(),
                    report.correspondences.to_string(),
                    report.focal.to_string(),
                    p.u.to_string(),
                    p.v.to_string(),
                    k[0].to_string(),
                    k[1].to_string(),
                    k[2].to_string(),
                    k[3].to_string(),
                    k[4].to_string(),
                    cell(report.altitude),
                ]],
            )
        }
    };
    emit(&text, args.report.as_deref())
}
