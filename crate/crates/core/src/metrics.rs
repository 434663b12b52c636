//! Sequence-level segmentation metrics.
//!
//! * `J` is the per-frame region IoU averaged over every frame of the video.
//! * `F` is the per-frame boundary F-measure averaged the same way.
//! * `tIoU` is the IoU of the frame sets on which the prediction and the
//!   ground truth are non-empty.
//! * `vIoU` sums the per-frame IoU over the frames where both are non-empty
//!   and divides by the size of the union of the two frame sets.
//!
//! When neither sequence is ever present, `tIoU` and `vIoU` are both 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{dilate_square, extract_boundary, region_iou, rle_decode, DenseMask, RleMask};
use crate::numeric::exact_sum;

/// tIoU and vIoU reported when neither sequence has a non-empty frame.
pub const EMPTY_UNION_SCORE: f64 = 1.0;

/// Default boundary tolerance as a fraction of the image diagonal.
pub const DEFAULT_BOUNDARY_FRACTION: f64 = 0.008;

/// Frame-indexed masks for one (video, object or expression) pair.
///
/// Frames without an entry are empty. The sorted set of frames with a
/// non-empty mask is computed once at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSequence {
    video_id: String,
    subject_id: String,
    num_frames: u32,
    height: u32,
    width: u32,
    frames: BTreeMap<u32, RleMask>,
    presence: Vec<u32>,
}

impl MaskSequence {
    pub fn new(
        video_id: impl Into<String>,
        subject_id: impl Into<String>,
        num_frames: u32,
        (height, width): (u32, u32),
        frames: BTreeMap<u32, RleMask>,
    ) -> Result<Self> {
        let video_id = video_id.into();
        if let Some((&t, _)) = frames.range(num_frames..).next() {
            return Err(Error::SequenceMismatch(format!(
                "frame {t} out of range for {num_frames}-frame video {video_id}"
            )));
        }
        for rle in frames.values() {
            if rle.shape() != (height, width) {
                return Err(Error::ShapeMismatch {
                    expected: (height, width),
                    found: rle.shape(),
                });
            }
        }
        let presence = frames
            .iter()
            .filter(|(_, m)| !m.is_empty())
            .map(|(&t, _)| t)
            .collect();
        Ok(MaskSequence {
            video_id,
            subject_id: subject_id.into(),
            num_frames,
            height,
            width,
            frames,
            presence,
        })
    }

    /// A sequence that is empty on every frame.
    pub fn empty(
        video_id: impl Into<String>,
        subject_id: impl Into<String>,
        num_frames: u32,
        shape: (u32, u32),
    ) -> Self {
        MaskSequence::new(video_id, subject_id, num_frames, shape, BTreeMap::new())
            .expect("an empty sequence is always valid")
    }

    /// Builds a sequence from dense masks, dropping empty frames.
    pub fn from_dense<'a>(
        video_id: impl Into<String>,
        subject_id: impl Into<String>,
        num_frames: u32,
        shape: (u32, u32),
        frames: impl IntoIterator<Item = (u32, &'a DenseMask)>,
    ) -> Result<Self> {
        let frames = frames
            .into_iter()
            .filter(|(_, m)| !m.is_empty())
            .map(|(t, m)| (t, crate::mask::rle_encode(m)))
            .collect();
        MaskSequence::new(video_id, subject_id, num_frames, shape, frames)
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn num_frames(&self) -> u32 {
        self.num_frames
    }

    pub fn shape(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    pub fn frames(&self) -> &BTreeMap<u32, RleMask> {
        &self.frames
    }

    pub fn frame(&self, t: u32) -> Option<&RleMask> {
        self.frames.get(&t)
    }

    /// Dense mask at frame `t` (all background when absent).
    pub fn dense(&self, t: u32) -> DenseMask {
        match self.frames.get(&t) {
            Some(rle) => rle_decode(rle),
            None => DenseMask::new(self.height, self.width),
        }
    }

    /// Sorted frame indices with a non-empty mask.
    pub fn presence_set(&self) -> &[u32] {
        &self.presence
    }

    pub fn is_present(&self, t: u32) -> bool {
        self.presence.binary_search(&t).is_ok()
    }

    /// Number of non-empty frames across the sequence.
    pub fn present_frames(&self) -> usize {
        self.presence.len()
    }
}

/// The four frame sets used by tIoU and vIoU.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PresenceSets {
    pub t_pred: Vec<u32>,
    pub t_gt: Vec<u32>,
    pub t_i: Vec<u32>,
    pub t_u: Vec<u32>,
}

impl PresenceSets {
    pub fn new(pred: &MaskSequence, gt: &MaskSequence) -> Self {
        let (t_pred, t_gt) = (pred.presence_set(), gt.presence_set());
        let mut t_i = Vec::new();
        let mut t_u = Vec::with_capacity(t_pred.len().max(t_gt.len()));
        let (mut a, mut b) = (0, 0);
        while a < t_pred.len() || b < t_gt.len() {
            match (t_pred.get(a), t_gt.get(b)) {
                (Some(&x), Some(&y)) if x == y => {
                    t_i.push(x);
                    t_u.push(x);
                    a += 1;
                    b += 1;
                }
                (Some(&x), Some(&y)) if x < y => {
                    t_u.push(x);
                    a += 1;
                }
                (Some(&x), None) => {
                    t_u.push(x);
                    a += 1;
                }
                (_, Some(&y)) => {
                    t_u.push(y);
                    b += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        PresenceSets {
            t_pred: t_pred.to_vec(),
            t_gt: t_gt.to_vec(),
            t_i,
            t_u,
        }
    }

    /// `|T_i| / |T_u|`, or [`EMPTY_UNION_SCORE`] when the union is empty.
    pub fn temporal_iou(&self) -> f64 {
        if self.t_u.is_empty() {
            EMPTY_UNION_SCORE
        } else {
            self.t_i.len() as f64 / self.t_u.len() as f64
        }
    }
}

/// Pixel tolerance rule for contour matching.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTolerance {
    /// `ceil(fraction * sqrt(H^2 + W^2))`.
    DiagonalFraction(f64),
    /// Fixed number of pixels.
    Pixels(u32),
}

impl Default for BoundaryTolerance {
    fn default() -> Self {
        BoundaryTolerance::DiagonalFraction(DEFAULT_BOUNDARY_FRACTION)
    }
}

impl BoundaryTolerance {
    pub fn pixels(&self, (height, width): (u32, u32)) -> u32 {
        match *self {
            BoundaryTolerance::Pixels(px) => px,
            BoundaryTolerance::DiagonalFraction(frac) => {
                let diag = (f64::from(height).powi(2) + f64::from(width).powi(2)).sqrt();
                (frac * diag).ceil().max(0.0) as u32
            }
        }
    }
}

/// Per-expression scores plus the per-frame `J` and `F` traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressionMetrics {
    pub j: f64,
    pub f: f64,
    pub jf: f64,
    pub tiou: f64,
    pub viou: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_frame_j: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_frame_f: Vec<f64>,
}

impl ExpressionMetrics {
    /// Drops the per-frame traces.
    pub fn without_traces(mut self) -> Self {
        self.per_frame_j = Vec::new();
        self.per_frame_f = Vec::new();
        self
    }
}

fn check_aligned(pred: &MaskSequence, gt: &MaskSequence) -> Result<()> {
    if pred.video_id != gt.video_id {
        return Err(Error::SequenceMismatch(format!(
            "video ids differ: {} vs {}",
            pred.video_id, gt.video_id
        )));
    }
    if pred.num_frames != gt.num_frames {
        return Err(Error::SequenceMismatch(format!(
            "frame counts differ: {} vs {}",
            pred.num_frames, gt.num_frames
        )));
    }
    Ok(())
}

fn check_shapes(pred: &MaskSequence, gt: &MaskSequence) -> Result<()> {
    if pred.shape() != gt.shape() {
        return Err(Error::ShapeMismatch {
            expected: gt.shape(),
            found: pred.shape(),
        });
    }
    Ok(())
}

/// Temporal IoU between the presence sets of two sequences.
pub fn temporal_iou(pred: &MaskSequence, gt: &MaskSequence) -> Result<f64> {
    check_aligned(pred, gt)?;
    Ok(PresenceSets::new(pred, gt).temporal_iou())
}

/// Volume IoU: `sum over T_i of J_t`, divided by `|T_u|`.
pub fn volume_iou(pred: &MaskSequence, gt: &MaskSequence) -> Result<f64> {
    check_aligned(pred, gt)?;
    check_shapes(pred, gt)?;
    let sets = PresenceSets::new(pred, gt);
    if sets.t_u.is_empty() {
        return Ok(EMPTY_UNION_SCORE);
    }
    let mut ious = Vec::with_capacity(sets.t_i.len());
    for &t in &sets.t_i {
        ious.push(region_iou(&pred.dense(t), &gt.dense(t))?);
    }
    Ok(exact_sum(ious) / sets.t_u.len() as f64)
}

/// Boundary F-measure between two masks.
///
/// A boundary pixel of one mask counts as matched when the other mask has a
/// boundary pixel within Chebyshev distance `tolerance_px`. Precision is the
/// matched fraction of the predicted boundary, recall the matched fraction of
/// the ground-truth boundary. Two empty boundaries score 1; exactly one empty
/// boundary scores 0.
pub fn contour_f(pred: &DenseMask, gt: &DenseMask, tolerance_px: u32) -> Result<f64> {
    if pred.shape() != gt.shape() {
        return Err(Error::ShapeMismatch {
            expected: gt.shape(),
            found: pred.shape(),
        });
    }
    let pb = extract_boundary(pred);
    let gb = extract_boundary(gt);
    let (n_pred, n_gt) = (pb.count_ones(), gb.count_ones());
    if n_pred == 0 && n_gt == 0 {
        return Ok(1.0);
    }
    if n_pred == 0 || n_gt == 0 {
        return Ok(0.0);
    }
    let gt_zone = dilate_square(gb.as_mask(), tolerance_px);
    let pred_zone = dilate_square(pb.as_mask(), tolerance_px);
    let (pred_hits, _) = pb.as_mask().overlap_counts(&gt_zone)?;
    let (gt_hits, _) = gb.as_mask().overlap_counts(&pred_zone)?;
    let precision = pred_hits as f64 / n_pred as f64;
    let recall = gt_hits as f64 / n_gt as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Mean `J`, mean `F` and their average over all frames of the video.
pub fn sequence_jf(
    pred: &MaskSequence,
    gt: &MaskSequence,
    tolerance: BoundaryTolerance,
) -> Result<(f64, f64, f64)> {
    let m = evaluate_expression_with(pred, gt, tolerance)?;
    Ok((m.j, m.f, m.jf))
}

/// All five scores for one expression with the default boundary tolerance.
pub fn evaluate_expression(pred: &MaskSequence, gt: &MaskSequence) -> Result<ExpressionMetrics> {
    evaluate_expression_with(pred, gt, BoundaryTolerance::default())
}

/// All five scores for one expression.
///
/// Frames are visited in index order; frames where neither mask is present
/// are scored without decoding.
pub fn evaluate_expression_with(
    pred: &MaskSequence,
    gt: &MaskSequence,
    tolerance: BoundaryTolerance,
) -> Result<ExpressionMetrics> {
    check_aligned(pred, gt)?;
    check_shapes(pred, gt)?;
    let sets = PresenceSets::new(pred, gt);
    let tol = tolerance.pixels(gt.shape());
    let n = gt.num_frames as usize;

    // Frames outside T_u score J = F = 1; frames in T_u \ T_i score 0.
    let mut per_frame_j = vec![1.0; n];
    let mut per_frame_f = vec![1.0; n];
    for &t in &sets.t_u {
        per_frame_j[t as usize] = 0.0;
        per_frame_f[t as usize] = 0.0;
    }
    let mut inter_ious = Vec::with_capacity(sets.t_i.len());
    for &t in &sets.t_i {
        let p = pred.dense(t);
        let g = gt.dense(t);
        let j = region_iou(&p, &g)?;
        per_frame_j[t as usize] = j;
        per_frame_f[t as usize] = contour_f(&p, &g, tol)?;
        inter_ious.push(j);
    }

    let (j, f) = if n == 0 {
        (1.0, 1.0)
    } else {
        (
            exact_sum(per_frame_j.iter().copied()) / n as f64,
            exact_sum(per_frame_f.iter().copied()) / n as f64,
        )
    };
    let (tiou, viou) = if sets.t_u.is_empty() {
        (EMPTY_UNION_SCORE, EMPTY_UNION_SCORE)
    } else {
        let union = sets.t_u.len() as f64;
        (
            sets.t_i.len() as f64 / union,
            exact_sum(inter_ious) / union,
        )
    };
    Ok(ExpressionMetrics {
        j,
        f,
        jf: (j + f) / 2.0,
        tiou,
        viou,
        per_frame_j,
        per_frame_f,
    })
}
