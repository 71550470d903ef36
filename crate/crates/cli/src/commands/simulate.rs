use std::path::PathBuf;

use fishloc_core::eval::DistanceBucket;
use fishloc_core::geometry::RadiusAlignedBox;
use fishloc_core::io::{
    simulated_annotation, write_annotations, write_calibration, write_predictions, write_scene, CalibrationFile,
    PredictionRecord, Split,
};
use fishloc_core::matching::Detection;
use fishloc_core::sim::{
    generate_frames, perturb_detections, render_annotations, Altitude, NoiseConfig, Placement, PersonRender,
    SceneConfig, ScoreModel,
};
use serde::Serialize;

use super::{csv_text, emit, pretty};
use crate::error::{io_error, CliError};
use crate::{Format, Global};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    output_dir: PathBuf,
    /// Frames to generate from one camera.
    #[arg(long)]
    images: Option<usize>,
    /// Persons per frame.
    #[arg(long)]
    persons: Option<usize>,
    /// Camera height in meters; drawn from 2.5 to 4.0 when absent.
    #[arg(long)]
    altitude: Option<f64>,
    /// Inner radius of the placement annulus, meters.
    #[arg(long)]
    min_distance: Option<f64>,
    /// Outer radius of the placement disc, meters.
    #[arg(long)]
    max_distance: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    height: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    radius: Option<Vec<f64>>,
    #[arg(long)]
    image_side: Option<f64>,
    /// Let body discs overlap.
    #[arg(long)]
    allow_overlap: bool,
    /// Split tag written into the annotations.
    #[arg(long)]
    split: Option<String>,
    /// Also write perturbed predictions.
    #[arg(long)]
    predictions: bool,
    /// Center jitter in pixels.
    #[arg(long)]
    center_sigma: Option<f64>,
    /// Size jitter in pixels.
    #[arg(long)]
    size_sigma: Option<f64>,
    /// Score range; a single value when both ends agree.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    score: Option<Vec<f64>>,
    #[arg(long)]
    miss_rate: Option<f64>,
    /// Chance, per ground-truth box, of one extra false positive.
    #[arg(long)]
    fp_rate: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    seed: u64,
    images: usize,
    altitude: f64,
    persons: usize,
    annotated: usize,
    unprojectable: usize,
    near: usize,
    middle: usize,
    far: usize,
    detections: Option<usize>,
}

fn range(v: Option<&Vec<f64>>, cfg: Option<[f64; 2]>, default: (f64, f64)) -> (f64, f64) {
    v.map(|v| (v[0], v[1])).or(cfg.map(|c| (c[0], c[1]))).unwrap_or(default)
}

pub fn run(args: Args, global: &Global) -> Result<(), CliError> {
    let cfg = &global.config.simulate;
    let defaults = SceneConfig::default();
    let images = args.images.or(cfg.images).unwrap_or(1);
    if images == 0 {
        return Err(CliError::Validation("--images must be at least 1".into()));
    }
    let default_radius = match defaults.placement {
        Placement::UniformDisc { radius } => radius,
        Placement::UniformAnnulus { outer, .. } => outer,
    };
    let outer = args.max_distance.or(cfg.max_distance).unwrap_or(default_radius);
    let placement = match args.min_distance.or(cfg.min_distance) {
        Some(inner) if inner > 0.0 => Placement::UniformAnnulus { inner, outer },
        _ => Placement::UniformDisc { radius: outer },
    };
    let split_name = args.split.clone().or(cfg.split.clone()).unwrap_or_else(|| Split::TestSeen.as_str().into());
    let split = Split::parse(&split_name).ok_or_else(|| CliError::Validation(format!("unknown split {split_name:?}")))?;
    let config = SceneConfig {
        altitude: args.altitude.or(cfg.altitude).map(Altitude::Fixed).unwrap_or(defaults.altitude),
        person_count: args.persons.or(cfg.persons).unwrap_or(defaults.person_count),
        placement,
        height_range: range(args.height.as_ref(), cfg.height, defaults.height_range),
        radius_range: range(args.radius.as_ref(), cfg.radius, defaults.radius_range),
        avoid_overlap: !(args.allow_overlap || cfg.allow_overlap.unwrap_or(false)),
        image_side: args.image_side.or(cfg.image_side).unwrap_or(defaults.image_side),
        ..defaults
    };
    let scenes = generate_frames(&config, images, global.seed)?;

    let dir = &args.output_dir;
    let scene_dir = dir.join("scenes");
    std::fs::create_dir_all(&scene_dir).map_err(|e| io_error(&scene_dir, e))?;
    let first = &scenes[0];
    write_calibration(
        &CalibrationFile { model: first.model, image_side: Some(first.image_side), rms_px: None },
        &dir.join("calibration.json"),
    )?;

    let mut records = Vec::with_capacity(scenes.len());
    let mut gt_boxes: Vec<Vec<RadiusAlignedBox>> = Vec::with_capacity(scenes.len());
    let mut report = Report {
        seed: global.seed,
        images,
        altitude: first.model.altitude().unwrap_or(f64::NAN),
        persons: 0,
        annotated: 0,
        unprojectable: 0,
        near: 0,
        middle: 0,
        far: 0,
        detections: None,
    };
    for (i, scene) in scenes.iter().enumerate() {
        let image_id = format!("{i:06}");
        write_scene(scene, &scene_dir.join(format!("{image_id}.json")))?;
        let renders = render_annotations(scene);
        report.persons += renders.len();
        for r in &renders {
            match r {
                PersonRender::Visible(a) => {
                    report.annotated += 1;
                    match a.bucket {
                        DistanceBucket::Near => report.near += 1,
                        DistanceBucket::Middle => report.middle += 1,
                        DistanceBucket::Far => report.far += 1,
                    }
                }
                PersonRender::Unprojectable { .. } => report.unprojectable += 1,
            }
        }
        gt_boxes.push(renders.iter().filter_map(|r| r.visible()).map(|a| a.bbox).collect());
        records.push(simulated_annotation(&image_id, "sim", split, scene, &renders));
    }
    write_annotations(&records, &dir.join("annotations.jsonl"))?;

    if args.predictions || cfg.predictions.unwrap_or(false) {
        let base = NoiseConfig::default();
        let score = match range(args.score.as_ref(), cfg.score, (f64::NAN, f64::NAN)) {
            (lo, hi) if lo.is_nan() && hi.is_nan() => base.score,
            (lo, hi) if lo == hi => ScoreModel::Fixed(lo),
            (lo, hi) => ScoreModel::Uniform { lo, hi },
        };
        let noise = NoiseConfig {
            center_sigma_px: args.center_sigma.or(cfg.center_sigma).unwrap_or(base.center_sigma_px),
            size_sigma_px: args.size_sigma.or(cfg.size_sigma).unwrap_or(base.size_sigma_px),
            score,
            miss_rate: args.miss_rate.or(cfg.miss_rate).unwrap_or(base.miss_rate),
            false_positive_rate: args.fp_rate.or(cfg.fp_rate).unwrap_or(base.false_positive_rate),
        };
        // a separate seed keeps the noise independent of the scene draws
        let noise_seed = global.seed.wrapping_add(1);
        let detections = perturb_detections(&gt_boxes, &first.model, first.image_side, &noise, noise_seed)?;
        let side = first.image_side;
        let predictions: Vec<PredictionRecord> = records
            .iter()
            .zip(detections)
            .map(|(r, dets)| PredictionRecord {
                image_id: r.image_id.clone(),
                angle: None,
                detections: dets.iter().map(|d| Detection { bbox: d.bbox.normalized(side), score: d.score }).collect(),
            })
            .collect();
        report.detections = Some(predictions.iter().map(|p| p.detections.len()).sum());
        write_predictions(&predictions, &dir.join("predictions.jsonl"))?;
    }

    let text = match global.format {
        Format::Text => pretty(&report),
        Format::Csv => csv_text(
            &["seed", "images", "altitude", "persons", "annotated", "unprojectable", "near", "middle", "far", "detections"],
            [vec![
                report.seed.to_string(),
                report.images.to_string(),
                report.altitude.to_string(),
                report.persons.to_string(),
                report.annotated.to_string(),
                report.unprojectable.to_string(),
                report.near.to_string(),
                report.middle.to_string(),
                report.far.to_string(),
                report.detections.map(|d| d.to_string()).unwrap_or_default(),
            ]],
        ),
    };
    emit(&text, args.report.as_deref())
}
