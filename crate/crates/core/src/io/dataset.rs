//! Newline-delimited JSON dataset files.
//!
//! Line 1 is a header; every following line is one frame. Reals are written
//! rounded to 9 significant digits, and absent values are explicit `null`s,
//! so re-serializing a parsed file reproduces it byte for byte.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{Point2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraIntrinsics, GazePoint2D, GazeVector, Landmarks2D, NUM_LANDMARKS};
use crate::pipeline::{FrameRecord, FrameTruth, VisibilityCategory};

use super::{round_sig9, IoError};

pub const DATASET_FORMAT: &str = "eyecontact-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    feature_dim: Option<usize>,
    intrinsics: CameraIntrinsics,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthLine {
    gaze: [f64; 3],
    face_center: [f64; 3],
    pitch_n: f64,
    yaw_n: f64,
    target: Option<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    person_id: String,
    frame_id: String,
    category: VisibilityCategory,
    /// `null` means the header intrinsics.
    intrinsics: Option<CameraIntrinsics>,
    landmarks: [Option<[f64; 2]>; NUM_LANDMARKS],
    feature: Option<Vec<f64>>,
    gaze_estimate: Option<[f64; 3]>,
    gt_eye_contact: Option<bool>,
    truth: Option<TruthLine>,
}

fn r3(v: [f64; 3]) -> [f64; 3] {
    v.map(round_sig9)
}

fn round_intr(i: &CameraIntrinsics) -> CameraIntrinsics {
    CameraIntrinsics {
        fx: round_sig9(i.fx),
        fy: round_sig9(i.fy),
        cx: round_sig9(i.cx),
        cy: round_sig9(i.cy),
    }
}

fn to_line(rec: &FrameRecord, default_intr: &CameraIntrinsics) -> RecordLine {
    let intr = round_intr(&rec.intrinsics);
    RecordLine {
        person_id: rec.person_id.clone(),
        frame_id: rec.frame_id.clone(),
        category: rec.visibility_category,
        intrinsics: (intr != *default_intr).then_some(intr),
        landmarks: rec
            .landmarks
            .points
            .map(|p| p.map(|p| [round_sig9(p.x), round_sig9(p.y)])),
        feature: rec
            .feature
            .as_ref()
            .map(|f| f.iter().copied().map(round_sig9).collect()),
        gaze_estimate: rec.gaze_estimate.map(|g| r3(g.into())),
        gt_eye_contact: rec.gt_eye_contact,
        truth: rec.truth.as_ref().map(|t| TruthLine {
            gaze: r3(t.gaze.into()),
            face_center: r3([t.face_center.x, t.face_center.y, t.face_center.z]),
            pitch_n: round_sig9(t.pitch_n),
            yaw_n: round_sig9(t.yaw_n),
            target: t.target.map(|p| [round_sig9(p.x), round_sig9(p.y)]),
        }),
    }
}

fn stored_gaze(v: [f64; 3], line: usize, what: &str) -> Result<GazeVector, IoError> {
    GazeVector::from_stored(Vector3::from(v)).map_err(|e| IoError::Invalid {
        line,
        reason: format!("{what} is not a unit vector: {e}"),
    })
}

fn from_line(
    l: RecordLine,
    header: &Header,
    line: usize,
) -> Result<FrameRecord, IoError> {
    let invalid = |reason: String| IoError::Invalid { line, reason };
    if l.person_id.is_empty() {
        return Err(invalid("person_id is empty".into()));
    }
    if let Some(f) = &l.feature {
        let expected = header.feature_dim.unwrap_or(0);
        if f.len() != expected {
            return Err(IoError::DimensionMismatch {
                line,
                expected,
                got: f.len(),
            });
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(invalid("feature has non-finite entries".into()));
        }
    }
    let intrinsics = l.intrinsics.unwrap_or(header.intrinsics);
    intrinsics
        .validate()
        .map_err(|e| invalid(e.to_string()))?;
    let landmarks = Landmarks2D {
        points: l.landmarks.map(|p| p.map(|[x, y]| Point2::new(x, y))),
    };
    if !landmarks.is_finite() {
        return Err(invalid("landmarks must be finite".into()));
    }
    if !l.category.is_consistent_with(landmarks.visible_count()) {
        return Err(invalid(format!(
            "category {:?} is inconsistent with {} visible landmarks",
            l.category.name(),
            landmarks.visible_count()
        )));
    }
    let gaze_estimate = l
        .gaze_estimate
        .map(|g| stored_gaze(g, line, "gaze_estimate"))
        .transpose()?;
    let truth = l
        .truth
        .map(|t| -> Result<FrameTruth, IoError> {
            Ok(FrameTruth {
                gaze: stored_gaze(t.gaze, line, "truth.gaze")?,
                face_center: Vector3::from(t.face_center),
                pitch_n: t.pitch_n,
                yaw_n: t.yaw_n,
                target: t.target.map(|[x, y]| GazePoint2D { x, y }),
            })
        })
        .transpose()?;
    Ok(FrameRecord {
        person_id: l.person_id,
        frame_id: l.frame_id,
        landmarks,
        intrinsics,
        visibility_category: l.category,
        feature: l.feature,
        gaze_estimate,
        gt_eye_contact: l.gt_eye_contact,
        truth,
    })
}

fn json_err(e: serde_json::Error, line: usize) -> IoError {
    IoError::Parse {
        line,
        column: e.column(),
        reason: e.to_string(),
    }
}

/// Canonical text form of `records`.
pub fn dataset_to_string(records: &[FrameRecord]) -> Result<String, IoError> {
    let first = records.first().ok_or(IoError::EmptyDataset)?;
    let feature_dim = records.iter().find_map(|r| r.feature.as_ref().map(Vec::len));
    for (i, r) in records.iter().enumerate() {
        if let (Some(f), Some(d)) = (&r.feature, feature_dim) {
            if f.len() != d {
                return Err(IoError::DimensionMismatch {
                    line: i + 2,
                    expected: d,
                    got: f.len(),
                });
            }
        }
    }
    let header = Header {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        feature_dim,
        intrinsics: round_intr(&first.intrinsics),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(&to_line(r, &header.intrinsics)).expect("record serializes"));
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Vec<FrameRecord>, IoError> {
    let mut lines = reader.lines().enumerate();
    let header: Header = loop {
        match lines.next() {
            None => return Err(IoError::EmptyDataset),
            Some((i, text)) => {
                let text = text.map_err(|e| IoError::Read { line: i + 1, source: e })?;
                if text.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&text).map_err(|e| json_err(e, i + 1))?;
            }
        }
    };
    if header.format != DATASET_FORMAT {
        return Err(IoError::Invalid {
            line: 1,
            reason: format!("unknown format {:?}", header.format),
        });
    }
    if header.version != DATASET_VERSION {
        return Err(IoError::VersionMismatch {
            found: header.version,
            expected: DATASET_VERSION,
        });
    }
    let mut records = Vec::new();
    for (i, text) in lines {
        let line = i + 1;
        let text = text.map_err(|e| IoError::Read { line, source: e })?;
        if text.trim().is_empty() {
            continue;
        }
        let parsed: RecordLine = serde_json::from_str(&text).map_err(|e| json_err(e, line))?;
        records.push(from_line(parsed, &header, line)?);
    }
    if records.is_empty() {
        return Err(IoError::EmptyDataset);
    }
    Ok(records)
}

pub fn read_dataset(path: &Path) -> Result<Vec<FrameRecord>, IoError> {
    let file = File::open(path).map_err(|e| IoError::fs(path, e))?;
    parse_dataset(BufReader::new(file))
}

pub fn write_dataset(records: &[FrameRecord], path: &Path) -> Result<(), IoError> {
    let text = dataset_to_string(records)?;
    let file = File::create(path).map_err(|e| IoError::fs(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| IoError::fs(path, e))
}
