//! On-disk shapes of the records and their conversions.

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use super::*;
use crate::camera::NUM_COEFFS;

/// A float written with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct F17(pub f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom(format!("cannot write non-finite number {}", self.0)));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

fn f(v: f64) -> F17 {
    F17(v)
}

fn pair(p: (f64, f64)) -> [F17; 2] {
    [F17(p.0), F17(p.1)]
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxWire {
    cx: F17,
    cy: F17,
    w: F17,
    h: F17,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    world: Option<[F17; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    head: Option<[F17; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationWire {
    image_id: String,
    scene_id: String,
    split: String,
    attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    image_side: Option<F17>,
    boxes: Vec<BoxWire>,
}

impl Record for AnnotationRecord {
    const FORMAT: &'static str = "fishloc.annotations";
    type Wire = AnnotationWire;

    fn from_wire(w: AnnotationWire) -> Result<Self, Invalid> {
        check_id("image_id", &w.image_id)?;
        check_id("scene_id", &w.scene_id)?;
        let split = Split::parse(&w.split).ok_or_else(|| invalid("split", format!("unknown split {:?}", w.split)))?;
        let attributes = check_attributes(&w.attributes)?;
        let image_side = w.image_side.map(|s| check_positive("image_side", s.0)).transpose()?;
        let boxes = w
            .boxes
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let field = format!("boxes[{i}]");
                let bbox = unit_box(&field, b.cx.0, b.cy.0, b.w.0, b.h.0)?;
                let world = b
                    .world
                    .map(|[x, y]| -> Result<_, Invalid> {
                        Ok((check_finite(&format!("{field}.world"), x.0)?, check_finite(&format!("{field}.world"), y.0)?))
                    })
                    .transpose()?;
                let head = b
                    .head
                    .map(|[u, v]| -> Result<_, Invalid> {
                        Ok(ImagePoint::new(
                            check_unit(&format!("{field}.head"), u.0)?,
                            check_unit(&format!("{field}.head"), v.0)?,
                        ))
                    })
                    .transpose()?;
                Ok(AnnotatedBox { bbox, world, head })
            })
            .collect::<Result<_, Invalid>>()?;
        Ok(AnnotationRecord { image_id: w.image_id, scene_id: w.scene_id, split, attributes, image_side, boxes })
    }

    fn to_wire(&self) -> AnnotationWire {
        AnnotationWire {
            image_id: self.image_id.clone(),
            scene_id: self.scene_id.clone(),
            split: self.split.as_str().into(),
            attributes: self.attributes.iter().map(|a| a.as_str().into()).collect(),
            image_side: self.image_side.map(f),
            boxes: self
                .boxes
                .iter()
                .map(|b| BoxWire {
                    cx: f(b.bbox.cx),
                    cy: f(b.bbox.cy),
                    w: f(b.bbox.w),
                    h: f(b.bbox.h),
                    world: b.world.map(pair),
                    head: b.head.map(|p| pair((p.u, p.v))),
                })
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionWire {
    cx: F17,
    cy: F17,
    w: F17,
    h: F17,
    score: F17,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionWire {
    image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<F17>,
    detections: Vec<DetectionWire>,
}

impl Record for PredictionRecord {
    const FORMAT: &'static str = "fishloc.predictions";
    type Wire = PredictionWire;

    fn from_wire(w: PredictionWire) -> Result<Self, Invalid> {
        check_id("image_id", &w.image_id)?;
        let angle = w.angle.map(|a| check_finite("angle", a.0)).transpose()?;
        let detections = w
            .detections
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let field = format!("detections[{i}]");
                let bbox = unit_box(&field, d.cx.0, d.cy.0, d.w.0, d.h.0)?;
                let score = check_score(&format!("{field}.score"), d.score.0)?;
                Ok(Detection { bbox, score })
            })
            .collect::<Result<_, Invalid>>()?;
        Ok(PredictionRecord { image_id: w.image_id, angle, detections })
    }

    fn to_wire(&self) -> PredictionWire {
        PredictionWire {
            image_id: self.image_id.clone(),
            angle: self.angle.map(f),
            detections: self
                .detections
                .iter()
                .map(|d| DetectionWire {
                    cx: f(d.bbox.cx),
                    cy: f(d.bbox.cy),
                    w: f(d.bbox.w),
                    h: f(d.bbox.h),
                    score: f(d.score),
                })
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceWire {
    world: [F17; 3],
    pixel: [F17; 2],
}

impl Record for CorrespondenceRecord {
    const FORMAT: &'static str = "fishloc.correspondences";
    type Wire = CorrespondenceWire;

    fn from_wire(w: CorrespondenceWire) -> Result<Self, Invalid> {
        let [x, y, z] = w.world.map(|v| v.0);
        let [u, v] = w.pixel.map(|v| v.0);
        for (name, value) in [("world", x), ("world", y), ("world", z), ("pixel", u), ("pixel", v)] {
            check_finite(name, value)?;
        }
        Ok(CorrespondenceRecord { world: WorldPoint::new(x, y, z), pixel: ImagePoint::new(u, v) })
    }

    fn to_wire(&self) -> CorrespondenceWire {
        CorrespondenceWire {
            world: [f(self.world.x), f(self.world.y), f(self.world.z)],
            pixel: [f(self.pixel.u), f(self.pixel.v)],
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationWire {
    image_id: String,
    detection: usize,
    score: F17,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<F17>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<F17>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<F17>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<F17>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl Record for LocalizationRecord {
    const FORMAT: &'static str = "fishloc.localizations";
    type Wire = LocalizationWire;

    fn from_wire(w: LocalizationWire) -> Result<Self, Invalid> {
        check_id("image_id", &w.image_id)?;
        let score = check_score("score", w.score.0)?;
        let outcome = match (w.x, w.y, w.theta, w.phi, w.error) {
            (Some(x), Some(y), Some(theta), Some(phi), None) => LocalizationOutcome::Located {
                x: check_finite("x", x.0)?,
                y: check_finite("y", y.0)?,
                theta: check_finite("theta", theta.0)?,
                phi: check_finite("phi", phi.0)?,
            },
            (None, None, None, None, Some(reason)) => LocalizationOutcome::Failed { reason },
            _ => return Err(invalid("outcome", "expected either x, y, theta, phi or error")),
        };
        Ok(LocalizationRecord { image_id: w.image_id, detection: w.detection, score, outcome })
    }

    fn to_wire(&self) -> LocalizationWire {
        let mut w = LocalizationWire {
            image_id: self.image_id.clone(),
            detection: self.detection,
            score: f(self.score),
            x: None,
            y: None,
            theta: None,
            phi: None,
            error: None,
        };
        match &self.outcome {
            LocalizationOutcome::Located { x, y, theta, phi } => {
                w.x = Some(f(*x));
                w.y = Some(f(*y));
                w.theta = Some(f(*theta));
                w.phi = Some(f(*phi));
            }
            LocalizationOutcome::Failed { reason } => w.error = Some(reason.clone()),
        }
        w
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelWire {
    focal: F17,
    principal: [F17; 2],
    coefficients: [F17; NUM_COEFFS],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    altitude: Option<F17>,
}

impl ModelWire {
    fn from_model(m: &FisheyeModel) -> Self {
        let p = m.principal_point();
        ModelWire {
            focal: f(m.focal()),
            principal: pair((p.u, p.v)),
            coefficients: m.coefficients().map(f),
            altitude: m.altitude().map(f),
        }
    }

    fn into_model(self) -> Result<FisheyeModel, Invalid> {
        FisheyeModel::new(
            self.focal.0,
            self.principal[0].0,
            self.principal[1].0,
            self.coefficients.map(|c| c.0),
            self.altitude.map(|z| z.0),
        )
        .map_err(|e| invalid("model", e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationDoc {
    format: String,
    version: u32,
    model: ModelWire,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    image_side: Option<F17>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rms_px: Option<F17>,
}

impl CalibrationDoc {
    pub fn from_calibration(c: &CalibrationFile) -> Self {
        CalibrationDoc {
            format: CalibrationFile::FORMAT.into(),
            version: FORMAT_VERSION,
            model: ModelWire::from_model(&c.model),
            image_side: c.image_side.map(f),
            rms_px: c.rms_px.map(f),
        }
    }

    pub fn into_calibration(self) -> Result<CalibrationFile, Invalid> {
        Ok(CalibrationFile {
            model: self.model.into_model()?,
            image_side: self.image_side.map(|s| check_positive("image_side", s.0)).transpose()?,
            rms_px: self
                .rms_px
                .map(|r| {
                    if r.0.is_finite() && r.0 >= 0.0 {
                        Ok(r.0)
                    } else {
                        Err(invalid("rms_px", format!("{} must be finite and non-negative", r.0)))
                    }
                })
                .transpose()?,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonWire {
    x: F17,
    y: F17,
    height: F17,
    radius: F17,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDoc {
    format: String,
    version: u32,
    seed: u64,
    image_side: F17,
    model: ModelWire,
    persons: Vec<PersonWire>,
}

impl SceneDoc {
    pub fn from_scene(s: &Scene) -> Self {
        SceneDoc {
            format: Scene::FORMAT.into(),
            version: FORMAT_VERSION,
            seed: s.seed,
            image_side: f(s.image_side),
            model: ModelWire::from_model(&s.model),
            persons: s
                .persons
                .iter()
                .map(|p| PersonWire { x: f(p.x), y: f(p.y), height: f(p.height), radius: f(p.radius) })
                .collect(),
        }
    }

    pub fn into_scene(self) -> Result<Scene, Invalid> {
        let model = self.model.into_model()?;
        if model.altitude().is_none() {
            return Err(invalid("model.altitude", "a scene needs the camera altitude"));
        }
        let persons = self
            .persons
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let field = format!("persons[{i}]");
                Ok(Person {
                    x: check_finite(&format!("{field}.x"), p.x.0)?,
                    y: check_finite(&format!("{field}.y"), p.y.0)?,
                    height: check_positive(&format!("{field}.height"), p.height.0)?,
                    radius: check_positive(&format!("{field}.radius"), p.radius.0)?,
                })
            })
            .collect::<Result<_, Invalid>>()?;
        Ok(Scene {
            model,
            image_side: check_positive("image_side", self.image_side.0)?,
            persons,
            seed: self.seed,
        })
    }
}
