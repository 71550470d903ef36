//! File formats.
//!
//! Record files are JSON Lines: a header line
//! `{"format":"fishloc.<kind>","version":1}` followed by one record per line.
//! Calibration and scene files are single JSON objects carrying the same
//! `format`/`version` keys. Every float is written with 17 significant
//! digits, so reading back yields the same bits. See `docs/formats.md`.

mod convert;
mod wire;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::camera::{FisheyeModel, ImagePoint, WorldPoint};
use crate::eval::{EvalDetection, EvalGt, EvalImage};
use crate::geometry::RadiusAlignedBox;
use crate::matching::Detection;
use crate::sim::{Person, PersonRender, Scene};

pub use convert::{DatasetConverter, LoafConverter};
pub use wire::F17;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid {field}: {message}")]
    Validation { line: usize, field: String, message: String },
    #[error("line {line}: expected header for {expected}, found {found}")]
    Header { line: usize, expected: String, found: String },
    #[error("{0}")]
    Inconsistent(String),
    #[error("{0}")]
    Unsupported(String),
}

impl IoError {
    pub fn line(&self) -> Option<usize> {
        match self {
            IoError::Parse { line, .. } | IoError::Validation { line, .. } | IoError::Header { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// A record-level invariant violation, before a line number is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub field: String,
    pub message: String,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> Invalid {
    Invalid { field: field.into(), message: message.into() }
}

impl Invalid {
    fn at(self, line: usize) -> IoError {
        IoError::Validation { line, field: self.field, message: self.message }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    ValSeen,
    ValUnseen,
    TestSeen,
    TestUnseen,
}

impl Split {
    pub const ALL: [Split; 5] = [Split::Train, Split::ValSeen, Split::ValUnseen, Split::TestSeen, Split::TestUnseen];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::ValSeen => "val-seen",
            Split::ValUnseen => "val-unseen",
            Split::TestSeen => "test-seen",
            Split::TestUnseen => "test-unseen",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|x| x.as_str() == s)
    }

    /// Whether the split holds scenes seen in training; `None` for train.
    pub fn seen(&self) -> Option<bool> {
        match self {
            Split::Train => None,
            Split::ValSeen | Split::TestSeen => Some(true),
            Split::ValUnseen | Split::TestUnseen => Some(false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attribute {
    Day,
    Night,
    Outdoor,
    Indoor,
    Sunny,
    Rain,
    Foggy,
    Snow,
}

impl Attribute {
    pub const ALL: [Attribute; 8] = [
        Attribute::Day,
        Attribute::Night,
        Attribute::Outdoor,
        Attribute::Indoor,
        Attribute::Sunny,
        Attribute::Rain,
        Attribute::Foggy,
        Attribute::Snow,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Attribute::Day => "day",
            Attribute::Night => "night",
            Attribute::Outdoor => "outdoor",
            Attribute::Indoor => "indoor",
            Attribute::Sunny => "sunny",
            Attribute::Rain => "rain",
            Attribute::Foggy => "foggy",
            Attribute::Snow => "snow",
        }
    }

    pub fn parse(s: &str) -> Option<Attribute> {
        Attribute::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

/// A box in normalized image coordinates with optional floor position (m)
/// and head point (normalized).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotatedBox {
    pub bbox: RadiusAlignedBox,
    pub world: Option<(f64, f64)>,
    pub head: Option<ImagePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub scene_id: String,
    pub split: Split,
    /// Kept in file order; duplicates are rejected.
    pub attributes: Vec<Attribute>,
    /// Side of the square image in pixels, when known.
    pub image_side: Option<f64>,
    pub boxes: Vec<AnnotatedBox>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub image_id: String,
    /// Rotation applied to the image before inference, radians.
    pub angle: Option<f64>,
    /// Normalized boxes.
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrespondenceRecord {
    pub world: WorldPoint,
    pub pixel: ImagePoint,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalizationOutcome {
    Located { x: f64, y: f64, theta: f64, phi: f64 },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationRecord {
    pub image_id: String,
    /// Index of the detection within its prediction record.
    pub detection: usize,
    pub score: f64,
    pub outcome: LocalizationOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFile {
    pub model: FisheyeModel,
    pub image_side: Option<f64>,
    pub rms_px: Option<f64>,
}

/// A line-oriented record type.
pub trait Record: Sized {
    const FORMAT: &'static str;
    #[doc(hidden)]
    type Wire: Serialize + DeserializeOwned;
    #[doc(hidden)]
    fn from_wire(w: Self::Wire) -> Result<Self, Invalid>;
    #[doc(hidden)]
    fn to_wire(&self) -> Self::Wire;
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
}

fn header_line(format: &str) -> String {
    serde_json::to_string(&Header { format: format.into(), version: FORMAT_VERSION }).expect("header serializes")
}

fn check_header(line: usize, text: &str, expected: &str) -> Result<(), IoError> {
    let bad = |found: String| IoError::Header { line, expected: expected.into(), found };
    let h: Header = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if h.format != expected {
        return Err(bad(format!("format {:?}", h.format)));
    }
    if h.version != FORMAT_VERSION {
        return Err(bad(format!("version {}", h.version)));
    }
    Ok(())
}

/// Parse one record line; `line` is used for error messages only.
pub fn parse_record<T: Record>(text: &str, line: usize) -> Result<T, IoError> {
    let wire: T::Wire = serde_json::from_str(text).map_err(|e| IoError::Parse { line, message: e.to_string() })?;
    T::from_wire(wire).map_err(|e| e.at(line))
}

/// Streaming reader over a record file. Blank lines are skipped; an empty
/// input has no header and yields nothing.
pub struct RecordReader<R, T> {
    lines: std::io::Lines<R>,
    line: usize,
    header_seen: bool,
    _record: PhantomData<T>,
}

impl<R: BufRead, T: Record> RecordReader<R, T> {
    pub fn new(reader: R) -> Self {
        Self { lines: reader.lines(), line: 0, header_seen: false, _record: PhantomData }
    }
}

impl<R: BufRead, T: Record> Iterator for RecordReader<R, T> {
    type Item = Result<T, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => {
                    self.line += 1;
                    return Some(Err(IoError::Parse { line: self.line, message: e.to_string() }));
                }
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            if !self.header_seen {
                self.header_seen = true;
                match check_header(self.line, &text, T::FORMAT) {
                    Ok(()) => continue,
                    Err(e) => return Some(Err(e)),
                }
            }
            return Some(parse_record(&text, self.line));
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IoError::Io { path: path.into(), source })
}

pub fn read_records<T: Record>(path: &Path) -> Result<Vec<T>, IoError> {
    RecordReader::<_, T>::new(open(path)?).collect()
}

pub fn records_from_str<T: Record>(text: &str) -> Result<Vec<T>, IoError> {
    RecordReader::<_, T>::new(text.as_bytes()).collect()
}

/// Serialize records, header first. Invalid records are refused so every
/// written file reads back.
pub fn write_records_to<T: Record, W: Write>(records: &[T], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", header_line(T::FORMAT))?;
    for (i, r) in records.iter().enumerate() {
        let text = serde_json::to_string(&r.to_wire()).map_err(std::io::Error::other)?;
        parse_record::<T>(&text, i + 2).map_err(std::io::Error::other)?;
        writeln!(out, "{text}")?;
    }
    out.flush()
}

pub fn records_to_string<T: Record>(records: &[T]) -> Result<String, IoError> {
    let mut buf = Vec::new();
    write_records_to(records, &mut buf).map_err(|e| IoError::Parse { line: 0, message: e.to_string() })?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_records<T: Record>(records: &[T], path: &Path) -> Result<(), IoError> {
    let io_err = |source| IoError::Io { path: path.into(), source };
    let file = File::create(path).map_err(io_err)?;
    write_records_to(records, BufWriter::new(file)).map_err(io_err)
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, IoError> {
    read_records(path)
}

pub fn write_annotations(records: &[AnnotationRecord], path: &Path) -> Result<(), IoError> {
    write_records(records, path)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, IoError> {
    read_records(path)
}

pub fn write_predictions(records: &[PredictionRecord], path: &Path) -> Result<(), IoError> {
    write_records(records, path)
}

pub fn read_correspondences(path: &Path) -> Result<Vec<CorrespondenceRecord>, IoError> {
    read_records(path)
}

pub fn write_correspondences(records: &[CorrespondenceRecord], path: &Path) -> Result<(), IoError> {
    write_records(records, path)
}

pub fn read_localizations(path: &Path) -> Result<Vec<LocalizationRecord>, IoError> {
    read_records(path)
}

pub fn write_localizations(records: &[LocalizationRecord], path: &Path) -> Result<(), IoError> {
    write_records(records, path)
}

/// A single-object document.
pub trait Document: Sized {
    const FORMAT: &'static str;
    fn from_json(text: &str) -> Result<Self, IoError>;
    fn to_json(&self) -> Result<String, IoError>;
}

fn read_document<T: Document>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.into(), source })?;
    T::from_json(&text)
}

fn write_document<T: Document>(doc: &T, path: &Path) -> Result<(), IoError> {
    let text = doc.to_json()?;
    std::fs::write(path, text).map_err(|source| IoError::Io { path: path.into(), source })
}

pub fn read_calibration(path: &Path) -> Result<CalibrationFile, IoError> {
    read_document(path)
}

pub fn write_calibration(calibration: &CalibrationFile, path: &Path) -> Result<(), IoError> {
    write_document(calibration, path)
}

pub fn read_scene(path: &Path) -> Result<Scene, IoError> {
    read_document(path)
}

pub fn write_scene(scene: &Scene, path: &Path) -> Result<(), IoError> {
    write_document(scene, path)
}

fn parse_document<W: DeserializeOwned>(text: &str) -> Result<W, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse { line: e.line(), message: e.to_string() })
}

fn format_of(text: &str, expected: &str) -> Result<(), IoError> {
    #[derive(Deserialize)]
    struct Tag {
        format: String,
        version: u32,
    }
    let tag: Tag = parse_document(text)?;
    if tag.format != expected || tag.version != FORMAT_VERSION {
        return Err(IoError::Header {
            line: 1,
            expected: expected.into(),
            found: format!("{} version {}", tag.format, tag.version),
        });
    }
    Ok(())
}

impl Document for CalibrationFile {
    const FORMAT: &'static str = "fishloc.calibration";

    fn from_json(text: &str) -> Result<Self, IoError> {
        format_of(text, Self::FORMAT)?;
        let w: wire::CalibrationDoc = parse_document(text)?;
        w.into_calibration().map_err(|e| e.at(1))
    }

    fn to_json(&self) -> Result<String, IoError> {
        let mut s = serde_json::to_string_pretty(&wire::CalibrationDoc::from_calibration(self))
            .map_err(|e| IoError::Parse { line: 0, message: e.to_string() })?;
        s.push('\n');
        Self::from_json(&s)?;
        Ok(s)
    }
}

impl Document for Scene {
    const FORMAT: &'static str = "fishloc.scene";

    fn from_json(text: &str) -> Result<Self, IoError> {
        format_of(text, Self::FORMAT)?;
        let w: wire::SceneDoc = parse_document(text)?;
        w.into_scene().map_err(|e| e.at(1))
    }

    fn to_json(&self) -> Result<String, IoError> {
        let mut s = serde_json::to_string_pretty(&wire::SceneDoc::from_scene(self))
            .map_err(|e| IoError::Parse { line: 0, message: e.to_string() })?;
        s.push('\n');
        Self::from_json(&s)?;
        Ok(s)
    }
}

/// Pixel geometry of one image: its side and principal point. The
/// calibration's principal point wins; otherwise the image center is used.
pub fn image_geometry(
    record: &AnnotationRecord,
    calibration: Option<&CalibrationFile>,
) -> Result<(f64, ImagePoint), IoError> {
    let side = record
        .image_side
        .or(calibration.and_then(|c| c.image_side))
        .ok_or_else(|| {
            IoError::Inconsistent(format!(
                "image side of {:?} is unknown: set image_side in the annotations or the calibration",
                record.image_id
            ))
        })?;
    let principal = calibration
        .map(|c| c.model.principal_point())
        .unwrap_or(ImagePoint::new(0.5 * side, 0.5 * side));
    Ok((side, principal))
}

/// Join annotations with their unrotated predictions into pixel-space
/// evaluation images, in annotation order. Images without predictions get
/// no detections; predictions for unannotated images are an error.
pub fn eval_images(
    annotations: &[AnnotationRecord],
    predictions: &[PredictionRecord],
    calibration: Option<&CalibrationFile>,
) -> Result<Vec<EvalImage>, IoError> {
    let mut by_image: std::collections::HashMap<&str, &PredictionRecord> = std::collections::HashMap::new();
    for p in predictions.iter().filter(|p| p.angle.unwrap_or(0.0) == 0.0) {
        if by_image.insert(&p.image_id, p).is_some() {
            return Err(IoError::Inconsistent(format!("image {:?} has more than one prediction record", p.image_id)));
        }
    }
    let mut seen_ids = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(annotations.len());
    for a in annotations {
        if !seen_ids.insert(a.image_id.as_str()) {
            return Err(IoError::Inconsistent(format!("image {:?} is annotated twice", a.image_id)));
        }
        let (side, principal) = image_geometry(a, calibration)?;
        let gts = a
            .boxes
            .iter()
            .map(|b| EvalGt { bbox: b.bbox.denormalized(side), world: b.world })
            .collect();
        let detections = by_image
            .remove(a.image_id.as_str())
            .map(|p| {
                p.detections
                    .iter()
                    .map(|d| EvalDetection { bbox: d.bbox.denormalized(side), score: d.score, world: None })
                    .collect()
            })
            .unwrap_or_default();
        out.push(EvalImage { image_id: a.image_id.clone(), seen: a.split.seen(), principal, gts, detections });
    }
    if let Some(id) = by_image.keys().min() {
        return Err(IoError::Inconsistent(format!("predictions for unannotated image {id:?}")));
    }
    Ok(out)
}

/// Annotation record of a simulated frame. Unprojectable persons are left
/// out.
pub fn simulated_annotation(
    image_id: &str,
    scene_id: &str,
    split: Split,
    scene: &Scene,
    renders: &[PersonRender],
) -> AnnotationRecord {
    let side = scene.image_side;
    AnnotationRecord {
        image_id: image_id.into(),
        scene_id: scene_id.into(),
        split,
        attributes: Vec::new(),
        image_side: Some(side),
        boxes: renders
            .iter()
            .filter_map(|r| r.visible())
            .map(|a| AnnotatedBox {
                bbox: a.bbox.normalized(side),
                world: Some(a.world),
                head: Some(ImagePoint::new(a.head.u / side, a.head.v / side)),
            })
            .collect(),
    }
}

fn check_finite(field: &str, v: f64) -> Result<f64, Invalid> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("{v} is not finite")))
    }
}

fn check_unit(field: &str, v: f64) -> Result<f64, Invalid> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(invalid(field, format!("{v} is outside [0, 1]")))
    }
}

fn check_positive(field: &str, v: f64) -> Result<f64, Invalid> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("{v} must be finite and positive")))
    }
}

/// A normalized box: all four numbers in [0, 1], extents positive.
fn unit_box(field: &str, cx: f64, cy: f64, w: f64, h: f64) -> Result<RadiusAlignedBox, Invalid> {
    for (name, v) in [("cx", cx), ("cy", cy), ("w", w), ("h", h)] {
        check_unit(&format!("{field}.{name}"), v)?;
    }
    RadiusAlignedBox::new(cx, cy, w, h).map_err(|e| invalid(field, e.to_string()))
}

fn check_id(field: &str, id: &str) -> Result<(), Invalid> {
    if id.is_empty() {
        Err(invalid(field, "must not be empty"))
    } else {
        Ok(())
    }
}

fn check_attributes(names: &[String]) -> Result<Vec<Attribute>, Invalid> {
    let mut out: Vec<Attribute> = Vec::with_capacity(names.len());
    for n in names {
        let a = Attribute::parse(n).ok_or_else(|| invalid("attributes", format!("unknown attribute {n:?}")))?;
        if out.contains(&a) {
            return Err(invalid("attributes", format!("duplicate attribute {n:?}")));
        }
        out.push(a);
    }
    for (x, y) in [(Attribute::Day, Attribute::Night), (Attribute::Outdoor, Attribute::Indoor)] {
        if out.contains(&x) && out.contains(&y) {
            return Err(invalid(
                "attributes",
                format!("{} and {} are mutually exclusive", x.as_str(), y.as_str()),
            ));
        }
    }
    Ok(out)
}

fn check_score(field: &str, s: f64) -> Result<f64, Invalid> {
    check_unit(field, s)
}
