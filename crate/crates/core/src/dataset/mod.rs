//! Dataset manifests: loading, validation, selection criteria, statistics and
//! per-object attributes.

mod attributes;
mod criteria;
mod manifest;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::MaskSequence;

pub use attributes::{
    event_complexity, length_bucket, occlusion_rate, tag_attributes, AttributeTags,
    EventComplexity, EventKeywords, LengthBucket, OcclusionBracket, PartialTags,
    LONG_REAPPEARANCE_FRAMES, RATIO_RANGE,
};
pub use criteria::{check_selection_criteria, CriteriaViolation, MIN_DURATION_S, MIN_OBJECTS};
pub use manifest::{load_manifest, parse_manifest, SCHEMA_VERSION};
pub use stats::{compute_statistics, reference_discrepancies, DatasetStats, SplitCounts, TypeShares};

/// Description category of a referring expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptionType {
    /// Appearance, position or context.
    Static,
    /// Motion, interaction or change over time.
    Dynamic,
    /// Both.
    Hybrid,
}

impl DescriptionType {
    pub const ALL: [DescriptionType; 3] = [
        DescriptionType::Static,
        DescriptionType::Dynamic,
        DescriptionType::Hybrid,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DescriptionType::Static => "static",
            DescriptionType::Dynamic => "dynamic",
            DescriptionType::Hybrid => "hybrid",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            DescriptionType::Static => "Static",
            DescriptionType::Dynamic => "Dynamic",
            DescriptionType::Hybrid => "Hybrid",
        }
    }
}

impl fmt::Display for DescriptionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "static" => Ok(DescriptionType::Static),
            "dynamic" => Ok(DescriptionType::Dynamic),
            "hybrid" => Ok(DescriptionType::Hybrid),
            other => Err(format!("unknown description type {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "valid" | "val" | "validation" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Bounding box `(x, y, w, h)` in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoxXywh {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoxXywh {
    pub fn aspect_ratio(&self) -> f64 {
        self.w / self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

impl From<[f64; 4]> for BoxXywh {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        BoxXywh { x, y, w, h }
    }
}

impl From<BoxXywh> for [f64; 4] {
    fn from(b: BoxXywh) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectRecord {
    pub id: String,
    pub category: String,
    pub masks: MaskSequence,
    pub boxes: Option<BTreeMap<u32, BoxXywh>>,
    /// Manually annotated attribute labels carried by the manifest.
    pub manual: PartialTags,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpressionRecord {
    pub id: String,
    pub object_id: String,
    pub text: String,
    #[serde(rename = "type")]
    pub kind: DescriptionType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoRecord {
    pub id: String,
    pub fps: f64,
    pub num_frames: u32,
    pub width: u32,
    pub height: u32,
    pub source_tag: String,
    pub split: Option<Split>,
    pub objects: Vec<ObjectRecord>,
    pub expressions: Vec<ExpressionRecord>,
}

impl VideoRecord {
    pub fn duration_s(&self) -> f64 {
        f64::from(self.num_frames) / self.fps
    }

    pub fn shape(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    pub fn object(&self, id: &str) -> Option<&ObjectRecord> {
        self.objects.iter().find(|o| o.id == id)
    }
}

/// Validated, immutable view of a manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetIndex {
    pub videos: Vec<VideoRecord>,
}

impl DatasetIndex {
    pub fn video(&self, id: &str) -> Option<&VideoRecord> {
        self.videos.iter().find(|v| v.id == id)
    }

    pub fn num_expressions(&self) -> usize {
        self.videos.iter().map(|v| v.expressions.len()).sum()
    }

    /// Videos belonging to `split`, or all videos for `None`.
    pub fn videos_in(&self, split: Option<Split>) -> impl Iterator<Item = &VideoRecord> {
        self.videos
            .iter()
            .filter(move |v| split.is_none() || v.split == split)
    }

    /// Serializes back to manifest JSON.
    pub fn to_json(&self) -> String {
        manifest::to_json(self)
    }
}
