//! Per-object attribute tags and the per-expression bucketing rules used by
//! the breakdown reports.

use serde::{Deserialize, Serialize};

use super::{ObjectRecord, VideoRecord};
use crate::error::{Error, Result};

/// Minimum length, in frames, of an absence gap that counts as a long-term
/// reappearance.
pub const LONG_REAPPEARANCE_FRAMES: u32 = 100;

/// Box ratios (aspect ratio, area) inside this closed range are ordinary.
pub const RATIO_RANGE: (f64, f64) = (0.5, 2.0);

/// Video attribute labels. `None` means "not determined".
///
/// `lra`, `arc` and `sv` are derived from masks and boxes. `ov` and `foc` are
/// both derived as "the mask is empty on some frame" unless a manual label
/// is supplied, since masks alone cannot tell the two apart. `poc`, `vc`,
/// `cm` and `mb` are perceptual and only ever copied from manual labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeTags {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poc: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foc: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ov: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lra: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vc: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arc: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sv: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cm: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mb: Option<bool>,
}

/// Manually supplied labels; same shape as the derived tags.
pub type PartialTags = AttributeTags;

impl AttributeTags {
    pub fn is_empty(&self) -> bool {
        *self == AttributeTags::default()
    }
}

/// Fraction of the video's frames on which the object's mask is empty.
pub fn occlusion_rate(obj: &ObjectRecord, num_frames: u32) -> f64 {
    if num_frames == 0 {
        return 0.0;
    }
    1.0 - obj.masks.present_frames() as f64 / f64::from(num_frames)
}

/// True when the object disappears for at least `min_gap` consecutive frames
/// after having been seen, and then comes back.
fn has_long_reappearance(presence: &[u32], min_gap: u32) -> bool {
    presence
        .windows(2)
        .any(|w| w[1] - w[0] > min_gap)
}

fn outside_ratio_range(values: impl Iterator<Item = f64>) -> bool {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    // Some pair has ratio outside [0.5, 2] iff max / min > 2.
    hi.is_finite() && hi > RATIO_RANGE.1 * lo
}

/// Derives rule-based tags for `obj` and merges the manual labels.
///
/// With `box_rules` set, `arc` (aspect-ratio change) and `sv` (scale
/// variation) are computed from the object's boxes, and an object without
/// boxes is an error. Otherwise those two are taken from `manual`.
pub fn tag_attributes(
    obj: &ObjectRecord,
    video: &VideoRecord,
    manual: &PartialTags,
    box_rules: bool,
) -> Result<AttributeTags> {
    let presence = obj.masks.presence_set();
    let absent_somewhere = presence.len() < video.num_frames as usize;
    let (arc, sv) = if box_rules {
        let boxes = obj
            .boxes
            .as_ref()
            .ok_or_else(|| Error::MissingBoxes(obj.id.clone()))?;
        (
            Some(outside_ratio_range(boxes.values().map(|b| b.aspect_ratio()))),
            Some(outside_ratio_range(boxes.values().map(|b| b.area()))),
        )
    } else {
        (manual.arc, manual.sv)
    };
    Ok(AttributeTags {
        poc: manual.poc,
        foc: manual.foc.or(Some(absent_somewhere)),
        ov: manual.ov.or(Some(absent_somewhere)),
        lra: Some(has_long_reappearance(presence, LONG_REAPPEARANCE_FRAMES)),
        vc: manual.vc,
        arc,
        sv,
        cm: manual.cm,
        mb: manual.mb,
    })
}

/// Occlusion-rate brackets of the breakdown table.
///
/// The first two brackets as printed share the endpoint 0.25; a rate of
/// exactly 0.25 is assigned to the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OcclusionBracket {
    #[serde(rename = "[0, 0.25]")]
    Low,
    #[serde(rename = "[0.25, 0.5)")]
    MidLow,
    #[serde(rename = "[0.5, 0.75)")]
    MidHigh,
    #[serde(rename = "[0.75, 1]")]
    High,
}

impl OcclusionBracket {
    pub const ALL: [OcclusionBracket; 4] = [
        OcclusionBracket::Low,
        OcclusionBracket::MidLow,
        OcclusionBracket::MidHigh,
        OcclusionBracket::High,
    ];

    pub fn from_rate(rate: f64) -> Self {
        if rate <= 0.25 {
            OcclusionBracket::Low
        } else if rate < 0.5 {
            OcclusionBracket::MidLow
        } else if rate < 0.75 {
            OcclusionBracket::MidHigh
        } else {
            OcclusionBracket::High
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OcclusionBracket::Low => "[0, 0.25]",
            OcclusionBracket::MidLow => "[0.25, 0.5)",
            OcclusionBracket::MidHigh => "[0.5, 0.75)",
            OcclusionBracket::High => "[0.75, 1]",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LengthBucket {
    #[serde(rename = "<10")]
    Short,
    #[serde(rename = "[10, 20]")]
    Mid,
    #[serde(rename = ">20")]
    Long,
}

impl LengthBucket {
    pub const ALL: [LengthBucket; 3] = [LengthBucket::Short, LengthBucket::Mid, LengthBucket::Long];

    pub fn label(&self) -> &'static str {
        match self {
            LengthBucket::Short => "<10",
            LengthBucket::Mid => "[10, 20]",
            LengthBucket::Long => ">20",
        }
    }
}

/// Buckets a description by its whitespace-separated token count.
pub fn length_bucket(text: &str) -> LengthBucket {
    match text.split_whitespace().count() {
        0..=9 => LengthBucket::Short,
        10..=20 => LengthBucket::Mid,
        _ => LengthBucket::Long,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventComplexity {
    Single,
    Two,
    Multi,
}

impl EventComplexity {
    pub const ALL: [EventComplexity; 3] = [
        EventComplexity::Single,
        EventComplexity::Two,
        EventComplexity::Multi,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            EventComplexity::Single => "Single-event",
            EventComplexity::Two => "Two-event",
            EventComplexity::Multi => "Multi-event",
        }
    }
}

/// Sequencing keywords that mark an additional event in a description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventKeywords(pub Vec<String>);

impl Default for EventKeywords {
    fn default() -> Self {
        EventKeywords(
            ["then", "finally", "ultimately", "after", "before", "later"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
    }
}

impl EventKeywords {
    /// Case-insensitive whole-word keyword occurrences in `text`.
    pub fn count(&self, text: &str) -> usize {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .filter(|w| self.0.iter().any(|k| k.eq_ignore_ascii_case(w)))
            .count()
    }

    pub fn classify(&self, text: &str) -> EventComplexity {
        match self.count(text) {
            0 => EventComplexity::Single,
            1 => EventComplexity::Two,
            _ => EventComplexity::Multi,
        }
    }
}

/// Event complexity under the default keyword list.
pub fn event_complexity(text: &str) -> EventComplexity {
    EventKeywords::default().classify(text)
}
