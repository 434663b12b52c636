//! Dataset statistics.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DatasetIndex, DescriptionType, VideoRecord};
use crate::numeric::exact_sum;

/// Default histogram bin width for durations, in seconds.
pub const DURATION_BIN_S: f64 = 10.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub videos: usize,
    pub expressions: usize,
}

pub type TypeShares = BTreeMap<DescriptionType, f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub num_videos: usize,
    pub num_objects: usize,
    pub num_expressions: usize,
    pub num_frames: u64,
    /// Non-empty object masks across all frames.
    pub num_masks: u64,
    pub num_categories: usize,
    pub total_duration_s: f64,
    pub mean_duration_s: f64,
    pub mean_frames: f64,
    /// Mean of per-object visible time (non-empty frames / fps).
    pub mean_object_duration_s: f64,
    /// Bin start (seconds) -> number of videos.
    pub video_duration_hist: BTreeMap<u64, usize>,
    /// Bin start (seconds) -> number of objects.
    pub object_duration_hist: BTreeMap<u64, usize>,
    pub objects_per_video: BTreeMap<usize, usize>,
    pub descriptions_per_object: BTreeMap<usize, usize>,
    pub type_counts: BTreeMap<DescriptionType, usize>,
    /// Percentage of descriptions of each type.
    pub type_percent: TypeShares,
    /// Keyed by split name; videos without a split are counted under
    /// `"unassigned"`.
    pub splits: BTreeMap<String, SplitCounts>,
    pub min_objects_per_video: usize,
    pub max_objects_per_video: usize,
}

struct VideoPartial {
    duration_s: f64,
    frames: u64,
    masks: u64,
    objects: usize,
    object_durations: Vec<f64>,
    descriptions_per_object: Vec<usize>,
    categories: Vec<String>,
    types: [usize; 3],
}

fn video_partial(v: &VideoRecord) -> VideoPartial {
    let mut types = [0usize; 3];
    for e in &v.expressions {
        types[e.kind as usize] += 1;
    }
    VideoPartial {
        duration_s: v.duration_s(),
        frames: u64::from(v.num_frames),
        masks: v.objects.iter().map(|o| o.masks.present_frames() as u64).sum(),
        objects: v.objects.len(),
        object_durations: v
            .objects
            .iter()
            .map(|o| o.masks.present_frames() as f64 / v.fps)
            .collect(),
        descriptions_per_object: v
            .objects
            .iter()
            .map(|o| v.expressions.iter().filter(|e| e.object_id == o.id).count())
            .collect(),
        categories: v.objects.iter().map(|o| o.category.clone()).collect(),
        types,
    }
}

fn bin(value: f64, width: f64) -> u64 {
    ((value / width).floor() * width) as u64
}

pub fn compute_statistics(index: &DatasetIndex) -> DatasetStats {
    compute_statistics_with(index, DURATION_BIN_S)
}

/// Per-video partials are computed in parallel and reduced in manifest order;
/// float sums are correctly rounded, so the result does not depend on the
/// number of workers.
pub fn compute_statistics_with(index: &DatasetIndex, bin_s: f64) -> DatasetStats {
    let partials: Vec<VideoPartial> = index.videos.par_iter().map(video_partial).collect();

    let mut video_duration_hist = BTreeMap::new();
    let mut object_duration_hist = BTreeMap::new();
    let mut objects_per_video = BTreeMap::new();
    let mut descriptions_per_object = BTreeMap::new();
    let mut categories = std::collections::BTreeSet::new();
    let mut type_counts: BTreeMap<DescriptionType, usize> =
        DescriptionType::ALL.iter().map(|&t| (t, 0)).collect();
    let mut splits: BTreeMap<String, SplitCounts> = BTreeMap::new();

    for (p, v) in partials.iter().zip(&index.videos) {
        *video_duration_hist.entry(bin(p.duration_s, bin_s)).or_insert(0) += 1;
        for &d in &p.object_durations {
            *object_duration_hist.entry(bin(d, bin_s)).or_insert(0) += 1;
        }
        *objects_per_video.entry(p.objects).or_insert(0) += 1;
        for &d in &p.descriptions_per_object {
            *descriptions_per_object.entry(d).or_insert(0) += 1;
        }
        categories.extend(p.categories.iter().cloned());
        for t in DescriptionType::ALL {
            *type_counts.get_mut(&t).unwrap() += p.types[t as usize];
        }
        let key = v
            .split
            .map(|s| s.as_str().to_string())
            .unwrap_or_else(|| "unassigned".to_string());
        let entry = splits.entry(key).or_default();
        entry.videos += 1;
        entry.expressions += v.expressions.len();
    }

    let num_videos = partials.len();
    let num_objects: usize = partials.iter().map(|p| p.objects).sum();
    let num_expressions: usize = type_counts.values().sum();
    let num_frames: u64 = partials.iter().map(|p| p.frames).sum();
    let total_duration_s = exact_sum(partials.iter().map(|p| p.duration_s));
    let object_durations: Vec<f64> = partials
        .iter()
        .flat_map(|p| p.object_durations.iter().copied())
        .collect();
    let mean = |sum: f64, n: usize| if n == 0 { 0.0 } else { sum / n as f64 };

    DatasetStats {
        num_videos,
        num_objects,
        num_expressions,
        num_frames,
        num_masks: partials.iter().map(|p| p.masks).sum(),
        num_categories: categories.len(),
        total_duration_s,
        mean_duration_s: mean(total_duration_s, num_videos),
        mean_frames: mean(num_frames as f64, num_videos),
        mean_object_duration_s: mean(exact_sum(object_durations.iter().copied()), num_objects),
        video_duration_hist,
        object_duration_hist,
        objects_per_video,
        descriptions_per_object,
        type_percent: type_counts
            .iter()
            .map(|(&t, &c)| (t, mean(100.0 * c as f64, num_expressions)))
            .collect(),
        type_counts,
        splits,
        min_objects_per_video: partials.iter().map(|p| p.objects).min().unwrap_or(0),
        max_objects_per_video: partials.iter().map(|p| p.objects).max().unwrap_or(0),
    }
}

/// Published totals of the full benchmark release.
pub mod reference {
    pub const VIDEOS: usize = 2_193;
    pub const EXPRESSIONS: usize = 24_689;
    pub const TRAIN_VIDEOS: usize = 1_855;
    pub const VALID_VIDEOS: usize = 112;
    pub const TEST_VIDEOS: usize = 226;
    /// Static / dynamic / hybrid shares in percent, two decimals.
    pub const TYPE_PERCENT: [&str; 3] = ["35.03", "32.45", "32.52"];
}

/// Compares statistics of a full-release manifest against the published
/// totals. Returns one message per mismatch; empty means everything agrees.
pub fn reference_discrepancies(stats: &DatasetStats) -> Vec<String> {
    let mut out = Vec::new();
    let mut check = |what: &str, got: String, want: String| {
        if got != want {
            out.push(format!("{what}: got {got}, expected {want}"));
        }
    };
    check("videos", stats.num_videos.to_string(), reference::VIDEOS.to_string());
    check(
        "descriptions",
        stats.num_expressions.to_string(),
        reference::EXPRESSIONS.to_string(),
    );
    let split = |name: &str| stats.splits.get(name).map_or(0, |s| s.videos);
    check("train videos", split("train").to_string(), reference::TRAIN_VIDEOS.to_string());
    check("valid videos", split("valid").to_string(), reference::VALID_VIDEOS.to_string());
    check("test videos", split("test").to_string(), reference::TEST_VIDEOS.to_string());
    for (t, want) in DescriptionType::ALL.iter().zip(reference::TYPE_PERCENT) {
        let got = stats.type_percent.get(t).copied().unwrap_or(0.0);
        check(&format!("{t} share"), format!("{got:.2}"), want.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_manifest;

    #[test]
    fn single_video_mean_duration() {
        let text = r#"{"schema_version":1,"videos":[{"id":"v","fps":4,"num_frames":90,"width":2,"height":2,
            "objects":[{"id":"a","masks":{"0":{"size":[2,2],"counts":[0,4]}}}],
            "expressions":[{"id":"e","object_id":"a","text":"x","type":"hybrid"}]}]}"#;
        let stats = compute_statistics(&parse_manifest(text).unwrap());
        assert_eq!(stats.mean_duration_s, 22.5);
        assert_eq!(stats.video_duration_hist, BTreeMap::from([(20, 1)]));
        assert_eq!(stats.type_percent[&DescriptionType::Hybrid], 100.0);
        assert_eq!(stats.num_masks, 1);
        assert_eq!(stats.splits["unassigned"].videos, 1);
        assert_eq!(stats.mean_object_duration_s, 0.25);
    }

    #[test]
    fn empty_index() {
        let stats = compute_statistics(&DatasetIndex { videos: vec![] });
        assert_eq!(stats.num_videos, 0);
        assert_eq!(stats.mean_duration_s, 0.0);
        assert!(!reference_discrepancies(&stats).is_empty());
    }
}
