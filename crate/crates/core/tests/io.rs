use std::io::Write;

use fishloc_core::camera::{FisheyeModel, ImagePoint, WorldPoint};
use fishloc_core::geometry::RadiusAlignedBox;
use fishloc_core::io::{
    parse_record, read_annotations, read_calibration, read_correspondences, read_localizations, read_predictions,
    read_scene, records_from_str, records_to_string, write_annotations, write_calibration, write_correspondences,
    write_localizations, write_predictions, write_scene, AnnotatedBox, AnnotationRecord, Attribute, CalibrationFile,
    CorrespondenceRecord, Document, IoError, LocalizationOutcome, LocalizationRecord, PredictionRecord, Split,
};
use fishloc_core::matching::Detection;
use fishloc_core::sim::{generate_scene, SceneConfig};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn annotated_box() -> impl Strategy<Value = AnnotatedBox> {
    (
        unit(),
        unit(),
        1e-6..1.0f64,
        1e-6..1.0f64,
        proptest::option::of((-50.0..50.0f64, -50.0..50.0f64)),
        proptest::option::of((unit(), unit())),
    )
        .prop_map(|(cx, cy, w, h, world, head)| AnnotatedBox {
            bbox: RadiusAlignedBox::new(cx, cy, w, h).unwrap(),
            world,
            head: head.map(|(u, v)| ImagePoint::new(u, v)),
        })
}

fn annotation() -> impl Strategy<Value = AnnotationRecord> {
    (
        "[a-zA-Z0-9 _./\\-\"\\\\é]{1,16}",
        "[a-z0-9\\-]{1,8}",
        0..5usize,
        proptest::option::of(prop_oneof![Just(Attribute::Day), Just(Attribute::Night)]),
        proptest::option::of(prop_oneof![Just(Attribute::Indoor), Just(Attribute::Outdoor)]),
        proptest::option::of(prop_oneof![Just(Attribute::Rain), Just(Attribute::Snow)]),
        proptest::option::of(64.0..5000.0f64),
        proptest::collection::vec(annotated_box(), 0..6),
    )
        .prop_map(|(image_id, scene_id, split, a, b, c, image_side, boxes)| AnnotationRecord {
            image_id,
            scene_id,
            split: Split::ALL[split],
            attributes: [a, b, c].into_iter().flatten().collect(),
            image_side,
            boxes,
        })
}

fn prediction() -> impl Strategy<Value = PredictionRecord> {
    (
        "[a-z0-9]{1,10}",
        proptest::option::of(-7.0..7.0f64),
        proptest::collection::vec((unit(), unit(), 1e-6..1.0f64, 1e-6..1.0f64, unit()), 0..8),
    )
        .prop_map(|(image_id, angle, dets)| PredictionRecord {
            image_id,
            angle,
            detections: dets
                .into_iter()
                .map(|(cx, cy, w, h, s)| Detection::new(RadiusAlignedBox::new(cx, cy, w, h).unwrap(), s).unwrap())
                .collect(),
        })
}

proptest! {
    #[test]
    fn annotations_round_trip(recs in proptest::collection::vec(annotation(), 0..5)) {
        let text = records_to_string(&recs).unwrap();
        let back: Vec<AnnotationRecord> = records_from_str(&text).unwrap();
        prop_assert_eq!(&back, &recs);
        prop_assert_eq!(records_to_string(&back).unwrap(), text);
    }

    #[test]
    fn predictions_round_trip(recs in proptest::collection::vec(prediction(), 0..5)) {
        let text = records_to_string(&recs).unwrap();
        let back: Vec<PredictionRecord> = records_from_str(&text).unwrap();
        prop_assert_eq!(back, recs);
    }

    #[test]
    fn arbitrary_text_never_panics(line in "\\PC{0,200}") {
        let _ = parse_record::<AnnotationRecord>(&line, 7);
        let _ = parse_record::<PredictionRecord>(&line, 7);
        let _ = parse_record::<CorrespondenceRecord>(&line, 7);
        let _ = parse_record::<LocalizationRecord>(&line, 7);
        let _ = CalibrationFile::from_json(&line);
        if let Err(e) = parse_record::<PredictionRecord>(&line, 7) {
            prop_assert_eq!(e.line(), Some(7));
        }
    }

    #[test]
    fn json_shaped_noise_never_panics(
        id in proptest::option::of("[a-z]{0,4}"),
        score in proptest::num::f64::ANY,
        w in proptest::num::f64::ANY,
        extra in proptest::bool::ANY,
    ) {
        let id = id.map(|s| format!("\"{s}\"")).unwrap_or_else(|| "null".into());
        let line = format!(
            r#"{{"image_id":{id},"detections":[{{"cx":0.5,"cy":0.5,"w":{w:?},"h":0.1,"score":{score:?}}}]{}}}"#,
            if extra { r#","bogus":1"# } else { "" }
        );
        let _ = parse_record::<PredictionRecord>(&line, 1);
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = |n: &str| dir.path().join(n);

    let ann = vec![AnnotationRecord {
        image_id: "a".into(),
        scene_id: "s".into(),
        split: Split::ValUnseen,
        attributes: vec![Attribute::Night, Attribute::Indoor],
        image_side: Some(2952.0),
        boxes: vec![AnnotatedBox {
            bbox: RadiusAlignedBox::new(0.6, 0.5, 0.01, 0.05).unwrap(),
            world: Some((1.0 / 3.0, -2.0)),
            head: None,
        }],
    }];
    write_annotations(&ann, &path("a.jsonl")).unwrap();
    assert_eq!(read_annotations(&path("a.jsonl")).unwrap(), ann);

    let pred = vec![PredictionRecord { image_id: "a".into(), angle: Some(0.0), detections: vec![] }];
    write_predictions(&pred, &path("p.jsonl")).unwrap();
    assert_eq!(read_predictions(&path("p.jsonl")).unwrap(), pred);

    let corr = vec![CorrespondenceRecord { world: WorldPoint::new(1.0, 2.0, 3.0), pixel: ImagePoint::new(10.0, 20.0) }];
    write_correspondences(&corr, &path("c.jsonl")).unwrap();
    assert_eq!(read_correspondences(&path("c.jsonl")).unwrap(), corr);

    let loc = vec![
        LocalizationRecord {
            image_id: "a".into(),
            detection: 0,
            score: 0.5,
            outcome: LocalizationOutcome::Located { x: 0.1, y: 0.2, theta: 0.3, phi: 0.4 },
        },
        LocalizationRecord {
            image_id: "a".into(),
            detection: 1,
            score: 0.25,
            outcome: LocalizationOutcome::Failed { reason: "at horizon".into() },
        },
    ];
    write_localizations(&loc, &path("l.jsonl")).unwrap();
    assert_eq!(read_localizations(&path("l.jsonl")).unwrap(), loc);

    let cal = CalibrationFile {
        model: FisheyeModel::new(901.25, 1476.5, 1470.0, [1.0, -0.01, 1e-3, 0.0, 0.0], Some(3.3)).unwrap(),
        image_side: Some(2952.0),
        rms_px: Some(0.1),
    };
    write_calibration(&cal, &path("cal.json")).unwrap();
    assert_eq!(read_calibration(&path("cal.json")).unwrap(), cal);

    let scene = generate_scene(&SceneConfig::default(), 3).unwrap();
    write_scene(&scene, &path("scene.json")).unwrap();
    assert_eq!(read_scene(&path("scene.json")).unwrap(), scene);
}

#[test]
fn errors_point_at_the_offending_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.jsonl");
    let mut f = std::fs::File::create(&p).unwrap();
    writeln!(f, r#"{{"format":"fishloc.predictions","version":1}}"#).unwrap();
    writeln!(f, r#"{{"image_id":"a","detections":[]}}"#).unwrap();
    writeln!(f).unwrap();
    writeln!(f, r#"{{"image_id":"b","detections":[{{"cx":0.5,"cy":0.5,"w":0.1,"h":0.1,"score":-0.5}}]}}"#).unwrap();
    drop(f);
    let err = read_predictions(&p).unwrap_err();
    assert_eq!(err.line(), Some(4), "{err}");
    assert!(matches!(err, IoError::Validation { .. }), "{err:?}");

    let missing = read_predictions(&dir.path().join("nope.jsonl")).unwrap_err();
    assert!(matches!(missing, IoError::Io { .. }));
}
