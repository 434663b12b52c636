//! Compressed-domain style video decomposition.
//!
//! A video is tiled into clips of at most `gop` frames. The first frame of each
//! clip is its keyframe; every following frame carries a motion field relative
//! to the frame before it, estimated by block matching on 16×16 macroblocks.

mod frames;
mod motion;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use frames::{load_frames, load_image_dir, load_raw_luma, RawLumaDescriptor};
pub use motion::{estimate_motion, MotionParams};

/// Clip length used by MPEG-4 style group-of-pictures: one keyframe and up
/// to eleven motion-described frames.
pub const DEFAULT_GOP: usize = 12;
pub const DEFAULT_BLOCK: usize = 16;
pub const DEFAULT_SEARCH_RADIUS: u32 = 8;

/// 8-bit luma plane.
#[derive(Clone, PartialEq, Eq)]
pub struct LumaFrame {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl std::fmt::Debug for LumaFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LumaFrame {}x{}", self.height, self.width)
    }
}

impl LumaFrame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{width}x{height} frame needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        Ok(LumaFrame {
            width,
            height,
            samples,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                samples.push(f(r, c));
            }
        }
        LumaFrame {
            width,
            height,
            samples,
        }
    }

    /// Converts interleaved 8-bit RGB to luma.
    pub fn from_rgb(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::InvalidArgument(format!(
                "{width}x{height} RGB frame needs {} bytes, got {}",
                width * height * 3,
                rgb.len()
            )));
        }
        let samples = rgb
            .chunks_exact(3)
            .map(|px| to_luma([px[0], px[1], px[2]]))
            .collect();
        LumaFrame::new(width, height, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.samples[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.samples[row * self.width..(row + 1) * self.width]
    }

    /// Edge-replicates the frame up to the next multiple of `block` in each
    /// dimension. Returns a clone when already aligned.
    pub fn padded(&self, block: usize) -> LumaFrame {
        let pw = self.width.div_ceil(block) * block;
        let ph = self.height.div_ceil(block) * block;
        if pw == self.width && ph == self.height {
            return self.clone();
        }
        LumaFrame::from_fn(pw, ph, |r, c| {
            self.at(r.min(self.height - 1), c.min(self.width - 1))
        })
    }
}

/// BT.601 luma with round-half-up: `(299 R + 587 G + 114 B + 500) / 1000`.
pub fn to_luma([r, g, b]: [u8; 3]) -> u8 {
    ((299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b) + 500) / 1000) as u8
}

/// Integer motion vector in pixels: the macroblock at `(p, q)` in the current
/// frame best matches the block at `(p - row, q - col)` in the previous frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct MotionVector {
    pub row: i32,
    pub col: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { row: 0, col: 0 };

    pub fn new(row: i32, col: i32) -> Self {
        MotionVector { row, col }
    }
}

impl From<[i32; 2]> for MotionVector {
    fn from([row, col]: [i32; 2]) -> Self {
        MotionVector { row, col }
    }
}

impl From<MotionVector> for [i32; 2] {
    fn from(v: MotionVector) -> Self {
        [v.row, v.col]
    }
}

/// One vector per macroblock, row-major over the padded block grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MotionVectorField {
    pub rows: usize,
    pub cols: usize,
    /// Frame size before padding.
    pub frame_height: usize,
    pub frame_width: usize,
    pub block: usize,
    pub search_radius: u32,
    pub vectors: Vec<MotionVector>,
}

impl MotionVectorField {
    pub fn get(&self, block_row: usize, block_col: usize) -> MotionVector {
        self.vectors[block_row * self.cols + block_col]
    }
}

/// A keyframe and the motion fields of the frames that follow it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClipDecomposition {
    pub keyframe_index: usize,
    pub motion_fields: Vec<MotionVectorField>,
}

impl ClipDecomposition {
    /// Number of frames covered, keyframe included.
    pub fn len(&self) -> usize {
        1 + self.motion_fields.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Serialized clip: `{"keyframe":k,"fields":[[[i,j],...],...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipJson {
    pub keyframe: usize,
    pub fields: Vec<Vec<MotionVector>>,
}

impl From<&ClipDecomposition> for ClipJson {
    fn from(clip: &ClipDecomposition) -> Self {
        ClipJson {
            keyframe: clip.keyframe_index,
            fields: clip
                .motion_fields
                .iter()
                .map(|f| f.vectors.clone())
                .collect(),
        }
    }
}

/// Renders clips in the JSON wire form (a top-level array of clip objects).
pub fn clips_to_json(clips: &[ClipDecomposition]) -> String {
    let wire: Vec<ClipJson> = clips.iter().map(ClipJson::from).collect();
    serde_json::to_string(&wire).expect("clip JSON serialization is infallible")
}

/// Splits a video into clips of `gop` frames and estimates the motion field of
/// every non-keyframe against its predecessor.
///
/// Frame pairs are matched in parallel on the current rayon pool; output does
/// not depend on the number of workers.
pub fn decompose(
    frames: &[LumaFrame],
    gop: usize,
    params: MotionParams,
) -> Result<Vec<ClipDecomposition>> {
    if frames.is_empty() {
        return Err(Error::EmptyVideo);
    }
    if gop == 0 {
        return Err(Error::InvalidArgument("gop must be at least 1".into()));
    }
    let (w, h) = (frames[0].width, frames[0].height);
    if let Some(bad) = frames.iter().find(|f| f.width != w || f.height != h) {
        return Err(Error::ShapeMismatch {
            expected: (h as u32, w as u32),
            found: (bad.height as u32, bad.width as u32),
        });
    }
    let padded: Vec<LumaFrame> = frames.par_iter().map(|f| f.padded(params.block)).collect();

    let mut clips = Vec::with_capacity(frames.len().div_ceil(gop));
    for start in (0..frames.len()).step_by(gop) {
        let end = (start + gop).min(frames.len());
        let motion_fields = (start + 1..end)
            .into_par_iter()
            .map(|t| {
                motion::estimate_padded(&padded[t], &padded[t - 1], (h, w), params)
            })
            .collect::<Result<Vec<_>>>()?;
        clips.push(ClipDecomposition {
            keyframe_index: start,
            motion_fields,
        });
    }
    Ok(clips)
}
