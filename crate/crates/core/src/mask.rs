//! Binary masks: bit-packed dense grids, column-major RLE, and the pixel-level
//! operations every metric is built on.
//!
//! RLE follows the uncompressed COCO layout: pixels are scanned column by
//! column (top to bottom, then left to right) and the counts alternate between
//! background and foreground runs, starting with background. A mask whose first
//! pixel is foreground therefore starts with a zero-length run.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// IoU reported for a frame where both masks are empty.
pub const BOTH_EMPTY_IOU: f64 = 1.0;

const WORD_BITS: usize = 64;

/// Row-major bit-packed binary mask.
///
/// Bit `c % 64` of word `c / 64` in row `r` holds pixel `(r, c)`. Padding bits
/// past `width` in the last word of each row are always zero, which lets set
/// operations run word-at-a-time with `count_ones`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DenseMask {
    height: u32,
    width: u32,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl DenseMask {
    /// An all-background mask.
    pub fn new(height: u32, width: u32) -> Self {
        let words_per_row = (width as usize).div_ceil(WORD_BITS);
        DenseMask {
            height,
            width,
            words_per_row,
            bits: vec![0; words_per_row * height as usize],
        }
    }

    pub fn from_fn(height: u32, width: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut mask = DenseMask::new(height, width);
        for r in 0..height {
            for c in 0..width {
                if f(r, c) {
                    mask.set(r, c, true);
                }
            }
        }
        mask
    }

    /// Builds a mask from a row-major slice of pixels.
    pub fn from_row_major(height: u32, width: u32, pixels: &[bool]) -> Result<Self> {
        if pixels.len() != height as usize * width as usize {
            return Err(Error::InvalidArgument(format!(
                "expected {} pixels for a {height}x{width} mask, got {}",
                height as usize * width as usize,
                pixels.len()
            )));
        }
        Ok(DenseMask::from_fn(height, width, |r, c| {
            pixels[r as usize * width as usize + c as usize]
        }))
    }

    /// Axis-aligned filled rectangle, clipped to the frame.
    pub fn rect(height: u32, width: u32, top: u32, left: u32, rows: u32, cols: u32) -> Self {
        let bottom = top.saturating_add(rows).min(height);
        let right = left.saturating_add(cols).min(width);
        DenseMask::from_fn(height, width, |r, c| {
            r >= top && r < bottom && c >= left && c < right
        })
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> bool {
        debug_assert!(row < self.height && col < self.width);
        let word = self.bits[row as usize * self.words_per_row + col as usize / WORD_BITS];
        (word >> (col as usize % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, value: bool) {
        assert!(
            row < self.height && col < self.width,
            "pixel ({row}, {col}) outside {}x{} mask",
            self.height,
            self.width
        );
        let idx = row as usize * self.words_per_row + col as usize / WORD_BITS;
        let bit = 1u64 << (col as usize % WORD_BITS);
        if value {
            self.bits[idx] |= bit;
        } else {
            self.bits[idx] &= !bit;
        }
    }

    /// Packed words of one row.
    #[inline]
    pub fn row_words(&self, row: u32) -> &[u64] {
        let start = row as usize * self.words_per_row;
        &self.bits[start..start + self.words_per_row]
    }

    /// Number of foreground pixels (the l0 norm of the mask).
    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// `|self ∩ other|` and `|self ∪ other|` in one pass.
    pub fn overlap_counts(&self, other: &DenseMask) -> Result<(u64, u64)> {
        check_shape(self.shape(), other.shape())?;
        let mut inter = 0u64;
        let mut union = 0u64;
        for (a, b) in self.bits.iter().zip(&other.bits) {
            inter += u64::from((a & b).count_ones());
            union += u64::from((a | b).count_ones());
        }
        Ok((inter, union))
    }

    /// True when every foreground pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &DenseMask) -> bool {
        self.shape() == other.shape()
            && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.height).flat_map(move |r| {
            self.row_words(r)
                .iter()
                .enumerate()
                .flat_map(move |(wi, &word)| {
                    BitIter(word).map(move |b| (r, (wi * WORD_BITS + b) as u32))
                })
        })
    }

    fn words_mut(&mut self) -> &mut [u64] {
        &mut self.bits
    }

    /// Copy with pixels moved by `(dr, dc)`; pixels leaving the frame are dropped.
    pub fn translated(&self, dr: i32, dc: i32) -> DenseMask {
        let mut out = DenseMask::new(self.height, self.width);
        for (r, c) in self.ones() {
            let nr = r as i64 + dr as i64;
            let nc = c as i64 + dc as i64;
            if nr >= 0 && nc >= 0 && nr < self.height as i64 && nc < self.width as i64 {
                out.set(nr as u32, nc as u32, true);
            }
        }
        out
    }
}

impl fmt::Debug for DenseMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMask {}x{} [", self.height, self.width)?;
        for r in 0..self.height {
            let line: String = (0..self.width)
                .map(|c| if self.get(r, c) { '#' } else { '.' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        write!(f, "]")
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

/// Inner 4-connected boundary of a mask.
///
/// A pixel is on the boundary when it is foreground and at least one of its
/// four neighbours is background or lies outside the frame.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BoundaryMask(DenseMask);

impl BoundaryMask {
    pub fn as_mask(&self) -> &DenseMask {
        &self.0
    }

    pub fn into_mask(self) -> DenseMask {
        self.0
    }

    pub fn count_ones(&self) -> u64 {
        self.0.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Column-major run-length encoded mask.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "RleJson", into = "RleJson")]
pub struct RleMask {
    height: u32,
    width: u32,
    counts: Vec<u32>,
}

/// Wire form: `{"size":[H,W],"counts":[...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RleJson {
    pub size: [u32; 2],
    pub counts: Vec<i64>,
}

impl TryFrom<RleJson> for RleMask {
    type Error = Error;

    fn try_from(raw: RleJson) -> Result<Self> {
        let mut counts = Vec::with_capacity(raw.counts.len());
        for (i, &c) in raw.counts.iter().enumerate() {
            let c = u32::try_from(c)
                .map_err(|_| Error::MalformedRle(format!("run {i} has illegal length {c}")))?;
            counts.push(c);
        }
        RleMask::new(raw.size[0], raw.size[1], counts)
    }
}

impl From<RleMask> for RleJson {
    fn from(rle: RleMask) -> Self {
        RleJson {
            size: [rle.height, rle.width],
            counts: rle.counts.into_iter().map(i64::from).collect(),
        }
    }
}

impl RleMask {
    /// Validates and wraps run-length counts.
    ///
    /// The counts must cover exactly `height * width` pixels and only the
    /// first run may be empty.
    pub fn new(height: u32, width: u32, counts: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::MalformedRle(format!(
                "mask dimensions must be positive, got {height}x{width}"
            )));
        }
        if counts.is_empty() {
            return Err(Error::MalformedRle("no runs".into()));
        }
        if let Some(pos) = counts.iter().skip(1).position(|&c| c == 0) {
            return Err(Error::MalformedRle(format!(
                "run {} is empty; only the first run may be zero",
                pos + 1
            )));
        }
        let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
        let expected = u64::from(height) * u64::from(width);
        if total != expected {
            return Err(Error::MalformedRle(format!(
                "runs cover {total} pixels, {height}x{width} mask has {expected}"
            )));
        }
        Ok(RleMask {
            height,
            width,
            counts,
        })
    }

    /// An all-background mask (`[H*W]`).
    pub fn empty(height: u32, width: u32) -> Self {
        RleMask {
            height,
            width,
            counts: vec![height * width],
        }
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn shape(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Foreground pixel count, read straight off the odd-indexed runs.
    pub fn area(&self) -> u64 {
        self.counts
            .iter()
            .skip(1)
            .step_by(2)
            .map(|&c| u64::from(c))
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }
}

/// Encodes a dense mask as canonical column-major RLE.
pub fn rle_encode(mask: &DenseMask) -> RleMask {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for c in 0..mask.width {
        let word_idx = c as usize / WORD_BITS;
        let bit = c as usize % WORD_BITS;
        for r in 0..mask.height {
            let v = (mask.bits[r as usize * mask.words_per_row + word_idx] >> bit) & 1 == 1;
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask {
        height: mask.height,
        width: mask.width,
        counts,
    }
}

/// Expands RLE back into a dense mask. Lossless inverse of [`rle_encode`].
pub fn rle_decode(rle: &RleMask) -> DenseMask {
    let mut mask = DenseMask::new(rle.height, rle.width);
    let h = rle.height as usize;
    let wpr = mask.words_per_row;
    let mut pos = 0usize;
    for (i, &run) in rle.counts.iter().enumerate() {
        let run = run as usize;
        if i % 2 == 1 {
            let bits = mask.words_mut();
            for idx in pos..pos + run {
                let (c, r) = (idx / h, idx % h);
                bits[r * wpr + c / WORD_BITS] |= 1u64 << (c % WORD_BITS);
            }
        }
        pos += run;
    }
    mask
}

fn check_shape(expected: (u32, u32), found: (u32, u32)) -> Result<()> {
    if expected != found {
        return Err(Error::ShapeMismatch { expected, found });
    }
    Ok(())
}

/// `|a ∩ b| / |a ∪ b|`.
///
/// Two empty masks score [`BOTH_EMPTY_IOU`]; exactly one empty mask scores 0.
pub fn region_iou(a: &DenseMask, b: &DenseMask) -> Result<f64> {
    let (inter, union) = a.overlap_counts(b)?;
    if union == 0 {
        return Ok(BOTH_EMPTY_IOU);
    }
    Ok(inter as f64 / union as f64)
}

/// Whether the mask has any foreground pixel.
pub fn presence(mask: &DenseMask) -> bool {
    !mask.is_empty()
}

/// Computes the inner 4-connected boundary; the frame border counts as
/// background.
pub fn extract_boundary(mask: &DenseMask) -> BoundaryMask {
    let wpr = mask.words_per_row;
    let h = mask.height as usize;
    let mut out = DenseMask::new(mask.height, mask.width);
    let zero = vec![0u64; wpr];
    for r in 0..h {
        let cur = &mask.bits[r * wpr..(r + 1) * wpr];
        let up = if r == 0 {
            &zero[..]
        } else {
            &mask.bits[(r - 1) * wpr..r * wpr]
        };
        let down = if r + 1 == h {
            &zero[..]
        } else {
            &mask.bits[(r + 1) * wpr..(r + 2) * wpr]
        };
        for w in 0..wpr {
            // Neighbour at column c-1 lands on bit c after a left shift.
            let carry_in_left = if w == 0 { 0 } else { cur[w - 1] >> 63 };
            let left = (cur[w] << 1) | carry_in_left;
            let carry_in_right = if w + 1 == wpr { 0 } else { cur[w + 1] << 63 };
            let right = (cur[w] >> 1) | carry_in_right;
            let interior = cur[w] & up[w] & down[w] & left & right;
            out.bits[r * wpr + w] = cur[w] & !interior;
        }
    }
    BoundaryMask(out)
}

/// Chebyshev dilation by `radius` pixels (square structuring element).
pub(crate) fn dilate_square(mask: &DenseMask, radius: u32) -> DenseMask {
    if radius == 0 {
        return mask.clone();
    }
    let wpr = mask.words_per_row;
    let h = mask.height as usize;
    let radius = radius as usize;

    // Horizontal pass: OR of the row shifted by -radius..=radius columns.
    let mut horiz = DenseMask::new(mask.height, mask.width);
    let mut tmp = vec![0u64; wpr];
    for r in 0..h {
        let src = &mask.bits[r * wpr..(r + 1) * wpr];
        let dst = &mut horiz.bits[r * wpr..(r + 1) * wpr];
        dst.copy_from_slice(src);
        for k in 1..=radius {
            shift_towards_high(src, k, &mut tmp);
            or_into(dst, &tmp);
            shift_towards_low(src, k, &mut tmp);
            or_into(dst, &tmp);
        }
    }
    clear_padding(&mut horiz);

    // Vertical pass.
    let mut out = DenseMask::new(mask.height, mask.width);
    for r in 0..h {
        let lo = r.saturating_sub(radius);
        let hi = (r + radius).min(h - 1);
        for src_row in lo..=hi {
            for w in 0..wpr {
                out.bits[r * wpr + w] |= horiz.bits[src_row * wpr + w];
            }
        }
    }
    out
}

/// Moves every bit `k` positions toward higher column indices.
fn shift_towards_high(src: &[u64], k: usize, dst: &mut [u64]) {
    let (wshift, bshift) = (k / WORD_BITS, k % WORD_BITS);
    for i in 0..src.len() {
        let mut v = 0u64;
        if i >= wshift {
            v = src[i - wshift] << bshift;
            if bshift != 0 && i > wshift {
                v |= src[i - wshift - 1] >> (WORD_BITS - bshift);
            }
        }
        dst[i] = v;
    }
}

/// Moves every bit `k` positions toward lower column indices.
fn shift_towards_low(src: &[u64], k: usize, dst: &mut [u64]) {
    let (wshift, bshift) = (k / WORD_BITS, k % WORD_BITS);
    let n = src.len();
    for i in 0..n {
        let mut v = 0u64;
        if i + wshift < n {
            v = src[i + wshift] >> bshift;
            if bshift != 0 && i + wshift + 1 < n {
                v |= src[i + wshift + 1] << (WORD_BITS - bshift);
            }
        }
        dst[i] = v;
    }
}

fn or_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d |= s;
    }
}

fn clear_padding(mask: &mut DenseMask) {
    let tail = mask.width as usize % WORD_BITS;
    if tail == 0 || mask.words_per_row == 0 {
        return;
    }
    let keep = (1u64 << tail) - 1;
    let wpr = mask.words_per_row;
    for r in 0..mask.height as usize {
        mask.bits[r * wpr + wpr - 1] &= keep;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_boundary(m: &DenseMask) -> DenseMask {
        let (h, w) = (m.height() as i64, m.width() as i64);
        DenseMask::from_fn(m.height(), m.width(), |r, c| {
            if !m.get(r, c) {
                return false;
            }
            [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|&(dr, dc)| {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                nr < 0 || nc < 0 || nr >= h || nc >= w || !m.get(nr as u32, nc as u32)
            })
        })
    }

    fn brute_dilate(m: &DenseMask, radius: u32) -> DenseMask {
        let ones: Vec<_> = m.ones().collect();
        DenseMask::from_fn(m.height(), m.width(), |r, c| {
            ones.iter()
                .any(|&(y, x)| y.abs_diff(r).max(x.abs_diff(c)) <= radius)
        })
    }

    fn mask_strategy(max_h: u32, max_w: u32) -> impl Strategy<Value = DenseMask> {
        (1..=max_h, 1..=max_w, 0.0f64..1.0).prop_flat_map(|(h, w, density)| {
            proptest::collection::vec(proptest::bool::weighted(density), (h * w) as usize)
                .prop_map(move |px| DenseMask::from_row_major(h, w, &px).unwrap())
        })
    }

    #[test]
    fn encodes_diagonal_two_by_two() {
        let m = DenseMask::from_row_major(2, 2, &[true, false, false, true]).unwrap();
        assert_eq!(rle_encode(&m).counts(), &[0, 1, 2, 1]);
    }

    #[test]
    fn encodes_all_zero() {
        let rle = rle_encode(&DenseMask::new(3, 3));
        assert_eq!(rle.counts(), &[9]);
        assert!(rle_decode(&rle).is_empty());
        assert_eq!(rle, RleMask::empty(3, 3));
    }

    #[test]
    fn decodes_diagonal() {
        let rle = RleMask::new(2, 2, vec![0, 1, 2, 1]).unwrap();
        let m = rle_decode(&rle);
        assert!(m.get(0, 0) && m.get(1, 1));
        assert!(!m.get(0, 1) && !m.get(1, 0));
        assert_eq!(rle.area(), 2);
    }

    #[test]
    fn rejects_malformed_counts() {
        assert!(matches!(RleMask::new(2, 2, vec![5]), Err(Error::MalformedRle(_))));
        assert!(matches!(
            RleMask::new(2, 2, vec![1, 0, 3]),
            Err(Error::MalformedRle(_))
        ));
        assert!(matches!(RleMask::new(0, 2, vec![0]), Err(Error::MalformedRle(_))));
        assert!(matches!(RleMask::new(2, 2, vec![]), Err(Error::MalformedRle(_))));
        let neg: Result<RleMask, _> =
            serde_json::from_str(r#"{"size":[2,2],"counts":[-1,5]}"#);
        assert!(neg.is_err());
    }

    #[test]
    fn json_wire_form() {
        let rle: RleMask = serde_json::from_str(r#"{"size":[2,2],"counts":[0,1,2,1]}"#).unwrap();
        assert_eq!(rle.shape(), (2, 2));
        assert_eq!(
            serde_json::to_string(&rle).unwrap(),
            r#"{"size":[2,2],"counts":[0,1,2,1]}"#
        );
    }

    #[test]
    fn iou_examples() {
        let sq = DenseMask::rect(4, 4, 0, 0, 4, 4);
        assert_eq!(region_iou(&sq, &sq).unwrap(), 1.0);
        let top = DenseMask::rect(4, 4, 0, 0, 2, 4);
        assert_eq!(region_iou(&top, &sq).unwrap(), 0.5);
        let a = DenseMask::rect(8, 8, 0, 0, 3, 3);
        let b = DenseMask::rect(8, 8, 5, 5, 3, 3);
        assert_eq!(region_iou(&a, &b).unwrap(), 0.0);
        let empty = DenseMask::new(8, 8);
        assert_eq!(region_iou(&empty, &empty).unwrap(), 1.0);
        assert_eq!(region_iou(&empty, &a).unwrap(), 0.0);
        assert!(matches!(
            region_iou(&a, &DenseMask::new(4, 8)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn presence_examples() {
        assert!(!presence(&DenseMask::new(5, 5)));
        let mut m = DenseMask::new(5, 70);
        m.set(4, 69, true);
        assert!(presence(&m));
        assert_eq!(m.count_ones(), 1);
    }

    #[test]
    fn boundary_examples() {
        let mut px = DenseMask::new(1, 1);
        px.set(0, 0, true);
        assert_eq!(extract_boundary(&px).count_ones(), 1);

        let sq = DenseMask::rect(8, 8, 2, 2, 4, 4);
        let b = extract_boundary(&sq);
        assert_eq!(b.count_ones(), 12);
        assert!(!b.as_mask().get(3, 3) && !b.as_mask().get(4, 4));

        assert!(extract_boundary(&DenseMask::new(6, 6)).is_empty());

        let full = DenseMask::rect(5, 7, 0, 0, 5, 7);
        assert_eq!(extract_boundary(&full).count_ones(), 2 * 7 + 2 * 3);
    }

    #[test]
    fn boundary_crosses_word_edges() {
        let m = DenseMask::rect(3, 130, 0, 60, 3, 10);
        assert_eq!(extract_boundary(&m), BoundaryMask(brute_boundary(&m)));
    }

    #[test]
    fn dilation_crosses_word_edges() {
        let mut m = DenseMask::new(5, 200);
        m.set(2, 63, true);
        m.set(0, 64, true);
        m.set(4, 199, true);
        m.set(3, 0, true);
        for radius in [0, 1, 2, 65, 130] {
            assert_eq!(dilate_square(&m, radius), brute_dilate(&m, radius), "radius {radius}");
        }
    }

    proptest! {
        #[test]
        fn round_trip(m in mask_strategy(24, 80)) {
            let rle = rle_encode(&m);
            prop_assert_eq!(rle.counts().iter().map(|&c| u64::from(c)).sum::<u64>(),
                            u64::from(m.height()) * u64::from(m.width()));
            prop_assert!(rle.counts().iter().skip(1).all(|&c| c > 0));
            prop_assert_eq!(rle.area(), m.count_ones());
            prop_assert_eq!(rle_decode(&rle), m);
        }

        #[test]
        fn boundary_matches_neighbour_scan(m in mask_strategy(16, 16)) {
            let b = extract_boundary(&m);
            prop_assert!(b.as_mask().is_subset_of(&m));
            prop_assert_eq!(b.into_mask(), brute_boundary(&m));
        }

        #[test]
        fn dilation_matches_brute_force(m in mask_strategy(12, 70), radius in 0u32..4) {
            prop_assert_eq!(dilate_square(&m, radius), brute_dilate(&m, radius));
        }

        #[test]
        fn iou_symmetric_and_bounded(a in mask_strategy(10, 10), seed in any::<u64>()) {
            let b = DenseMask::from_fn(a.height(), a.width(), |r, c| {
                (seed >> ((r * 7 + c * 3) % 64)) & 1 == 1
            });
            let ab = region_iou(&a, &b).unwrap();
            prop_assert_eq!(ab, region_iou(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab == 1.0, a == b);
            prop_assert_eq!(region_iou(&a, &a).unwrap(), 1.0);
        }

        #[test]
        fn iou_translation_invariant(dr in -2i32..=2, dc in -2i32..=2,
                                     t1 in 2u32..6, l1 in 2u32..6, t2 in 2u32..6, l2 in 2u32..6) {
            // Shapes sit at least 2 pixels from every edge of a 12x12 frame.
            let a = DenseMask::rect(12, 12, t1, l1, 4, 3);
            let b = DenseMask::rect(12, 12, t2, l2, 3, 4);
            let before = region_iou(&a, &b).unwrap();
            let after = region_iou(&a.translated(dr, dc), &b.translated(dr, dc)).unwrap();
            prop_assert_eq!(before, after);
        }
    }
}
