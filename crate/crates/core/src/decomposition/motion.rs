//! Exhaustive block-matching motion estimation.

use rayon::prelude::*;

use super::{LumaFrame, MotionVector, MotionVectorField, DEFAULT_BLOCK, DEFAULT_SEARCH_RADIUS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MotionParams {
    /// Macroblock edge in pixels.
    pub block: usize,
    /// Maximum absolute offset searched along each axis.
    pub search_radius: u32,
    /// Split the blocks of a frame across the rayon pool.
    pub parallel_blocks: bool,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams {
            block: DEFAULT_BLOCK,
            search_radius: DEFAULT_SEARCH_RADIUS,
            parallel_blocks: false,
        }
    }
}

/// Estimates one motion vector per macroblock of `cur` against `prev`.
///
/// For every block the search visits all integer offsets `(i, j)` with
/// `|i|, |j| <= search_radius` whose reference block `prev(p - i, q - j)` lies
/// entirely inside the padded previous frame, and keeps the one with the
/// smallest sum of absolute differences. Ties go to the smallest `|i| + |j|`,
/// then to the lexicographically smallest `(i, j)`.
pub fn estimate_motion(
    cur: &LumaFrame,
    prev: &LumaFrame,
    params: MotionParams,
) -> Result<MotionVectorField> {
    if (cur.width, cur.height) != (prev.width, prev.height) {
        return Err(Error::ShapeMismatch {
            expected: (prev.height as u32, prev.width as u32),
            found: (cur.height as u32, cur.width as u32),
        });
    }
    if params.block == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    let original = (cur.height, cur.width);
    let aligned = cur.width.is_multiple_of(params.block) && cur.height.is_multiple_of(params.block);
    if aligned {
        estimate_padded(cur, prev, original, params)
    } else {
        estimate_padded(
            &cur.padded(params.block),
            &prev.padded(params.block),
            original,
            params,
        )
    }
}

/// Candidate offsets sorted by the tie-break order.
fn candidate_offsets(radius: i32) -> Vec<MotionVector> {
    let mut out: Vec<MotionVector> = (-radius..=radius)
        .flat_map(|i| (-radius..=radius).map(move |j| MotionVector::new(i, j)))
        .collect();
    out.sort_by_key(|v| (v.row.abs() + v.col.abs(), v.row, v.col));
    out
}

pub(super) fn estimate_padded(
    cur: &LumaFrame,
    prev: &LumaFrame,
    (frame_height, frame_width): (usize, usize),
    params: MotionParams,
) -> Result<MotionVectorField> {
    let block = params.block;
    debug_assert!(cur.width.is_multiple_of(block) && cur.height.is_multiple_of(block));
    let rows = cur.height / block;
    let cols = cur.width / block;
    let radius = i32::try_from(params.search_radius)
        .map_err(|_| Error::InvalidArgument("search radius too large".into()))?;
    let offsets = candidate_offsets(radius);

    let search = |idx: usize| {
        let (br, bc) = (idx / cols, idx % cols);
        best_offset(cur, prev, br * block, bc * block, block, &offsets)
    };
    let vectors: Vec<MotionVector> = if params.parallel_blocks {
        (0..rows * cols).into_par_iter().map(search).collect()
    } else {
        (0..rows * cols).map(search).collect()
    };
    Ok(MotionVectorField {
        rows,
        cols,
        frame_height,
        frame_width,
        block,
        search_radius: params.search_radius,
        vectors,
    })
}

fn best_offset(
    cur: &LumaFrame,
    prev: &LumaFrame,
    top: usize,
    left: usize,
    block: usize,
    offsets: &[MotionVector],
) -> MotionVector {
    #[cfg(target_arch = "x86_64")]
    if block == 16 {
        let rows = sse2::load_block(cur, top, left);
        return search(prev, top, left, block, offsets, |(pt, pl), limit| {
            // SAFETY: `search` only passes reference blocks inside `prev`.
            unsafe { sse2::block_sad16(&rows, prev, pt, pl, limit) }
        });
    }
    search(prev, top, left, block, offsets, |reference, limit| {
        block_sad(cur, prev, (top, left), reference, block, limit)
    })
}

/// Visits the in-bounds candidates in tie-break order, keeping the first one
/// with the smallest cost.
#[inline(always)]
fn search(
    prev: &LumaFrame,
    top: usize,
    left: usize,
    block: usize,
    offsets: &[MotionVector],
    mut sad: impl FnMut((usize, usize), u32) -> Option<u32>,
) -> MotionVector {
    let max_top = (prev.height - block) as i64;
    let max_left = (prev.width - block) as i64;
    let mut best = MotionVector::ZERO;
    let mut best_cost = u32::MAX;
    for &v in offsets {
        let ref_top = top as i64 - i64::from(v.row);
        let ref_left = left as i64 - i64::from(v.col);
        if ref_top < 0 || ref_left < 0 || ref_top > max_top || ref_left > max_left {
            continue;
        }
        // Strictly-better only: earlier candidates win ties.
        if let Some(cost) = sad((ref_top as usize, ref_left as usize), best_cost) {
            best_cost = cost;
            best = v;
            if cost == 0 {
                break;
            }
        }
    }
    best
}

/// SAD between two blocks, or `None` once the running sum reaches `limit`.
#[inline]
fn block_sad(
    cur: &LumaFrame,
    prev: &LumaFrame,
    (ct, cl): (usize, usize),
    (pt, pl): (usize, usize),
    block: usize,
    limit: u32,
) -> Option<u32> {
    let mut sum = 0u32;
    for r in 0..block {
        let a = &cur.samples[(ct + r) * cur.width + cl..][..block];
        let b = &prev.samples[(pt + r) * prev.width + pl..][..block];
        sum += row_sad(a, b);
        if sum >= limit {
            return None;
        }
    }
    Some(sum)
}

#[inline]
fn row_sad(a: &[u8], b: &[u8]) -> u32 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| u32::from(x.abs_diff(y)))
        .sum()
}

/// 16×16 block matching with the current block held in registers.
#[cfg(target_arch = "x86_64")]
mod sse2 {
    use std::arch::x86_64::{
        __m128i, _mm_add_epi64, _mm_cvtsi128_si32, _mm_loadu_si128, _mm_sad_epu8,
        _mm_setzero_si128, _mm_srli_si128,
    };

    use super::LumaFrame;

    pub(super) fn load_block(frame: &LumaFrame, top: usize, left: usize) -> [__m128i; 16] {
        let mut rows = [unsafe { _mm_setzero_si128() }; 16];
        for (r, row) in rows.iter_mut().enumerate() {
            let src = &frame.samples[(top + r) * frame.width + left..][..16];
            // SAFETY: `src` holds 16 bytes; SSE2 is baseline on x86_64.
            *row = unsafe { _mm_loadu_si128(src.as_ptr() as *const __m128i) };
        }
        rows
    }

    /// SAD against the block of `prev` at `(top, left)`, or `None` once a
    /// partial sum (checked after rows 8, 12 and 16) reaches `limit`.
    ///
    /// # Safety
    /// The 16×16 block at `(top, left)` must lie inside `prev`.
    #[inline(always)]
    pub(super) unsafe fn block_sad16(
        cur: &[__m128i; 16],
        prev: &LumaFrame,
        top: usize,
        left: usize,
        limit: u32,
    ) -> Option<u32> {
        debug_assert!(top + 16 <= prev.height && left + 16 <= prev.width);
        let stride = prev.width;
        let base = prev.samples.as_ptr().add(top * stride + left);
        let mut acc = _mm_setzero_si128();
        let mut r = 0;
        for checkpoint in [8, 12, 16] {
            while r < checkpoint {
                let b = _mm_loadu_si128(base.add(r * stride) as *const __m128i);
                acc = _mm_add_epi64(acc, _mm_sad_epu8(cur[r], b));
                r += 1;
            }
            let sum = _mm_cvtsi128_si32(_mm_add_epi64(acc, _mm_srli_si128::<8>(acc))) as u32;
            if sum >= limit {
                return None;
            }
            if checkpoint == 16 {
                return Some(sum);
            }
        }
        unreachable!()
    }
}
