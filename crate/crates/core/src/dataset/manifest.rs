//! Manifest JSON: `{"schema_version":1,"videos":[...]}`.
//!
//! Parsing happens in two stages. The document is first deserialized into
//! loosely typed `Raw*` structs, so that structural JSON errors surface as
//! [`Error::Parse`]. Every semantic rule is then checked in one sweep that
//! collects all violations with a JSON pointer to the offending value.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BoxXywh, DatasetIndex, DescriptionType, ExpressionRecord, ObjectRecord, PartialTags, Split,
    VideoRecord,
};
use crate::error::{Error, Result, Violation};
use crate::mask::{RleJson, RleMask};
use crate::metrics::MaskSequence;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct RawManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema_version: Option<i64>,
    videos: Vec<RawVideo>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawVideo {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<String>,
    fps: f64,
    num_frames: i64,
    width: i64,
    height: i64,
    #[serde(default)]
    source_tag: String,
    #[serde(default)]
    objects: Vec<RawObject>,
    #[serde(default)]
    expressions: Vec<RawExpression>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawObject {
    id: String,
    #[serde(default)]
    category: String,
    #[serde(default)]
    masks: BTreeMap<String, Option<RleJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boxes: Option<BTreeMap<String, [f64; 4]>>,
    #[serde(default, skip_serializing_if = "PartialTags::is_empty")]
    attributes: PartialTags,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawExpression {
    id: String,
    object_id: String,
    text: String,
    #[serde(rename = "type")]
    kind: String,
}

/// Escapes one reference token of a JSON pointer.
fn token(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

/// Reads and validates a manifest file.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetIndex> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_named(&text, &path.display().to_string())
}

/// Validates manifest JSON held in memory.
pub fn parse_manifest(text: &str) -> Result<DatasetIndex> {
    parse_named(text, "<manifest>")
}

fn parse_named(text: &str, name: &str) -> Result<DatasetIndex> {
    let raw: RawManifest = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: name.to_string(),
        message: e.to_string(),
    })?;
    let mut violations = Vec::new();
    let index = validate(raw, &mut violations);
    if violations.is_empty() {
        Ok(index)
    } else {
        Err(Error::SchemaViolation(violations))
    }
}

fn validate(raw: RawManifest, out: &mut Vec<Violation>) -> DatasetIndex {
    match raw.schema_version {
        Some(v) if v == i64::from(SCHEMA_VERSION) => {}
        Some(v) => out.push(Violation::new(
            "/schema_version",
            format!("unsupported schema version {v}, expected {SCHEMA_VERSION}"),
        )),
        None => out.push(Violation::new("/schema_version", "missing schema_version")),
    }
    let mut seen_ids = HashSet::new();
    let videos = raw
        .videos
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let base = format!("/videos/{i}");
            if !seen_ids.insert(v.id.clone()) {
                out.push(Violation::new(
                    format!("{base}/id"),
                    format!("duplicate video id {:?}", v.id),
                ));
            }
            validate_video(v, &base, out)
        })
        .collect();
    DatasetIndex { videos }
}

fn validate_video(v: RawVideo, base: &str, out: &mut Vec<Violation>) -> VideoRecord {
    if v.id.is_empty() {
        out.push(Violation::new(format!("{base}/id"), "video id is empty"));
    }
    if !(v.fps.is_finite() && v.fps > 0.0) {
        out.push(Violation::new(
            format!("{base}/fps"),
            format!("fps must be positive, got {}", v.fps),
        ));
    }
    let num_frames = match u32::try_from(v.num_frames) {
        Ok(n) if n >= 1 => n,
        _ => {
            out.push(Violation::new(
                format!("{base}/num_frames"),
                format!("num_frames must be at least 1, got {}", v.num_frames),
            ));
            0
        }
    };
    let mut dim = |value: i64, key: &str| match u32::try_from(value) {
        Ok(n) if n >= 1 => n,
        _ => {
            out.push(Violation::new(
                format!("{base}/{key}"),
                format!("{key} must be positive, got {value}"),
            ));
            0
        }
    };
    let width = dim(v.width, "width");
    let height = dim(v.height, "height");
    let split = v.split.as_deref().and_then(|s| match s.parse::<Split>() {
        Ok(s) => Some(s),
        Err(msg) => {
            out.push(Violation::new(format!("{base}/split"), msg));
            None
        }
    });

    let mut object_ids = HashSet::new();
    let mut objects = Vec::with_capacity(v.objects.len());
    for (k, o) in v.objects.into_iter().enumerate() {
        let obase = format!("{base}/objects/{k}");
        if o.id.is_empty() {
            out.push(Violation::new(format!("{obase}/id"), "object id is empty"));
        }
        if !object_ids.insert(o.id.clone()) {
            out.push(Violation::new(
                format!("{obase}/id"),
                format!("duplicate object id {:?}", o.id),
            ));
        }
        objects.push(validate_object(o, &v.id, num_frames, (height, width), &obase, out));
    }

    let mut expr_ids = HashSet::new();
    let mut expressions = Vec::with_capacity(v.expressions.len());
    for (e, x) in v.expressions.into_iter().enumerate() {
        let ebase = format!("{base}/expressions/{e}");
        if x.id.is_empty() {
            out.push(Violation::new(format!("{ebase}/id"), "expression id is empty"));
        }
        if !expr_ids.insert(x.id.clone()) {
            out.push(Violation::new(
                format!("{ebase}/id"),
                format!("duplicate expression id {:?}", x.id),
            ));
        }
        if !object_ids.contains(&x.object_id) {
            out.push(Violation::new(
                format!("{ebase}/object_id"),
                format!("unknown object {:?}", x.object_id),
            ));
        }
        if x.text.trim().is_empty() {
            out.push(Violation::new(format!("{ebase}/text"), "text is empty"));
        }
        let kind = match x.kind.parse::<DescriptionType>() {
            Ok(k) => k,
            Err(msg) => {
                out.push(Violation::new(format!("{ebase}/type"), msg));
                DescriptionType::Static
            }
        };
        expressions.push(ExpressionRecord {
            id: x.id,
            object_id: x.object_id,
            text: x.text,
            kind,
        });
    }

    VideoRecord {
        id: v.id,
        fps: v.fps,
        num_frames,
        width,
        height,
        source_tag: v.source_tag,
        split,
        objects,
        expressions,
    }
}

fn parse_frame_key(key: &str, num_frames: u32) -> std::result::Result<u32, String> {
    let t: u32 = key
        .parse()
        .map_err(|_| format!("frame key {key:?} is not a non-negative integer"))?;
    if t >= num_frames {
        return Err(format!("frame {t} out of range for {num_frames} frames"));
    }
    Ok(t)
}

fn validate_object(
    o: RawObject,
    video_id: &str,
    num_frames: u32,
    shape: (u32, u32),
    base: &str,
    out: &mut Vec<Violation>,
) -> ObjectRecord {
    let mut frames = BTreeMap::new();
    // Frames whose mask entry was rejected; box checks skip them.
    let mut unknown = BTreeSet::new();
    for (key, entry) in o.masks {
        let pointer = format!("{base}/masks/{}", token(&key));
        let t = match parse_frame_key(&key, num_frames) {
            Ok(t) => t,
            Err(msg) => {
                out.push(Violation::new(pointer, msg));
                continue;
            }
        };
        let Some(raw) = entry else { continue };
        match RleMask::try_from(raw) {
            Ok(rle) if rle.shape() == shape => {
                frames.insert(t, rle);
            }
            Ok(rle) => {
                unknown.insert(t);
                out.push(Violation::new(
                    pointer,
                    format!(
                        "mask size {:?} does not match video size {:?}",
                        rle.shape(),
                        shape
                    ),
                ));
            }
            Err(e) => {
                unknown.insert(t);
                out.push(Violation::new(pointer, e.to_string()));
            }
        }
    }
    let masks = if shape.0 > 0 && shape.1 > 0 {
        MaskSequence::new(video_id, o.id.clone(), num_frames, shape, frames)
            .expect("frames were range- and shape-checked")
    } else {
        MaskSequence::empty(video_id, o.id.clone(), num_frames, shape)
    };

    let boxes = o.boxes.map(|raw| {
        let mut boxes = BTreeMap::new();
        for (key, b) in raw {
            let pointer = format!("{base}/boxes/{}", token(&key));
            let t = match parse_frame_key(&key, num_frames) {
                Ok(t) => t,
                Err(msg) => {
                    out.push(Violation::new(pointer, msg));
                    continue;
                }
            };
            let b = BoxXywh::from(b);
            if !(b.w > 0.0 && b.h > 0.0) || !b.x.is_finite() || !b.y.is_finite() {
                out.push(Violation::new(
                    pointer,
                    format!("box must have positive finite size, got {:?}", <[f64; 4]>::from(b)),
                ));
                continue;
            }
            if !unknown.contains(&t) && !masks.is_present(t) {
                out.push(Violation::new(
                    pointer,
                    format!("box on frame {t} where the mask is empty"),
                ));
                continue;
            }
            boxes.insert(t, b);
        }
        boxes
    });

    ObjectRecord {
        id: o.id,
        category: o.category,
        masks,
        boxes,
        manual: o.attributes,
    }
}

pub(super) fn to_json(index: &DatasetIndex) -> String {
    let raw = RawManifest {
        schema_version: Some(i64::from(SCHEMA_VERSION)),
        videos: index
            .videos
            .iter()
            .map(|v| RawVideo {
                id: v.id.clone(),
                split: v.split.map(|s| s.as_str().to_string()),
                fps: v.fps,
                num_frames: i64::from(v.num_frames),
                width: i64::from(v.width),
                height: i64::from(v.height),
                source_tag: v.source_tag.clone(),
                objects: v
                    .objects
                    .iter()
                    .map(|o| RawObject {
                        id: o.id.clone(),
                        category: o.category.clone(),
                        masks: o
                            .masks
                            .frames()
                            .iter()
                            .map(|(t, m)| (t.to_string(), Some(RleJson::from(m.clone()))))
                            .collect(),
                        boxes: o.boxes.as_ref().map(|b| {
                            b.iter()
                                .map(|(t, b)| (t.to_string(), <[f64; 4]>::from(*b)))
                                .collect()
                        }),
                        attributes: o.manual,
                    })
                    .collect(),
                expressions: v
                    .expressions
                    .iter()
                    .map(|e| RawExpression {
                        id: e.id.clone(),
                        object_id: e.object_id.clone(),
                        text: e.text.clone(),
                        kind: e.kind.as_str().to_string(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string(&raw).expect("manifest serialization is infallible")
}
