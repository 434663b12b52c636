use serde::{Deserialize, Serialize};

use super::VideoRecord;

/// A selected video must last strictly longer than this.
pub const MIN_DURATION_S: f64 = 20.0;

/// Minimum number of annotated objects per video.
pub const MIN_OBJECTS: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriteriaViolation {
    DurationTooShort { duration_s: f64 },
    TooFewObjects { count: usize },
    /// Every object is visible on every frame.
    NoDiscontinuousObject,
}

impl std::fmt::Display for CriteriaViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CriteriaViolation::DurationTooShort { duration_s } => write!(
                f,
                "duration {duration_s:.2}s does not exceed {MIN_DURATION_S}s"
            ),
            CriteriaViolation::TooFewObjects { count } => {
                write!(f, "{count} object(s), need at least {MIN_OBJECTS}")
            }
            CriteriaViolation::NoDiscontinuousObject => {
                write!(f, "no object is ever absent from the video")
            }
        }
    }
}

/// Checks the video-level selection rules; an empty list means the video
/// qualifies.
pub fn check_selection_criteria(video: &VideoRecord) -> Vec<CriteriaViolation> {
    let mut out = Vec::new();
    let duration_s = video.duration_s();
    if duration_s <= MIN_DURATION_S || duration_s.is_nan() {
        out.push(CriteriaViolation::DurationTooShort { duration_s });
    }
    if video.objects.len() < MIN_OBJECTS {
        out.push(CriteriaViolation::TooFewObjects {
            count: video.objects.len(),
        });
    }
    let discontinuous = video
        .objects
        .iter()
        .any(|o| o.masks.present_frames() < video.num_frames as usize);
    if !discontinuous {
        out.push(CriteriaViolation::NoDiscontinuousObject);
    }
    out
}
