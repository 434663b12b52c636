//! Brute-force oracles and generators shared by the integration tests.
//!
//! Everything here works on plain `Vec<bool>` pixel grids and `BTreeSet`
//! frame sets so that it shares no code with the library under test.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::Rng;
use rvoseval::decomposition::{LumaFrame, MotionVector};
use rvoseval::mask::DenseMask;
use rvoseval::metrics::MaskSequence;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Row-major pixel grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub h: usize,
    pub w: usize,
    pub px: Vec<bool>,
}

impl Grid {
    pub fn empty(h: usize, w: usize) -> Self {
        Grid {
            h,
            w,
            px: vec![false; h * w],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> bool {
        self.px[r * self.w + c]
    }

    pub fn area(&self) -> usize {
        self.px.iter().filter(|&&p| p).count()
    }

    pub fn to_dense(&self) -> DenseMask {
        DenseMask::from_row_major(self.h as u32, self.w as u32, &self.px).unwrap()
    }
}

pub type Seq = Vec<Grid>;

pub fn to_sequence(seq: &Seq, subject: &str) -> MaskSequence {
    let (h, w) = (seq[0].h as u32, seq[0].w as u32);
    let dense: Vec<DenseMask> = seq.iter().map(Grid::to_dense).collect();
    MaskSequence::from_dense(
        "v",
        subject,
        seq.len() as u32,
        (h, w),
        dense.iter().enumerate().map(|(t, m)| (t as u32, m)),
    )
    .unwrap()
}

/// Random mask: empty, full, a rectangle, or per-pixel noise of random density.
pub fn random_grid(rng: &mut impl Rng, h: usize, w: usize) -> Grid {
    let mut g = Grid::empty(h, w);
    match rng.gen_range(0..6) {
        0 => {}
        1 => g.px.iter_mut().for_each(|p| *p = true),
        2 | 3 => {
            let r0 = rng.gen_range(0..h);
            let c0 = rng.gen_range(0..w);
            let r1 = rng.gen_range(r0..h);
            let c1 = rng.gen_range(c0..w);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    g.px[r * w + c] = true;
                }
            }
        }
        _ => {
            let density: f64 = rng.gen_range(0.05..0.95);
            g.px.iter_mut().for_each(|p| *p = rng.gen_bool(density));
        }
    }
    g
}

pub fn random_pair<R: Rng>(rng: &mut R, max_frames: usize, max_side: usize) -> (Seq, Seq) {
    let t = rng.gen_range(1..=max_frames);
    let h = rng.gen_range(1..=max_side);
    let w = rng.gen_range(1..=max_side);
    let gen = |rng: &mut R| -> Seq {
        let presence: f64 = rng.gen_range(0.0..=1.0);
        (0..t)
            .map(|_| {
                if rng.gen_bool(presence) {
                    random_grid(rng, h, w)
                } else {
                    Grid::empty(h, w)
                }
            })
            .collect()
    };
    let pred = gen(rng);
    let gt = gen(rng);
    (pred, gt)
}

pub fn iou_oracle(a: &Grid, b: &Grid) -> f64 {
    let mut inter = 0usize;
    let mut union = 0usize;
    for (&x, &y) in a.px.iter().zip(&b.px) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn present(seq: &Seq) -> BTreeSet<usize> {
    (0..seq.len()).filter(|&t| seq[t].area() > 0).collect()
}

pub fn tiou_oracle(pred: &Seq, gt: &Seq) -> f64 {
    let (p, g) = (present(pred), present(gt));
    let inter = p.intersection(&g).count();
    let union = p.union(&g).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn viou_oracle(pred: &Seq, gt: &Seq) -> f64 {
    let (p, g) = (present(pred), present(gt));
    let union = p.union(&g).count();
    if union == 0 {
        return 1.0;
    }
    let sum: f64 = p
        .intersection(&g)
        .map(|&t| iou_oracle(&pred[t], &gt[t]))
        .sum();
    sum / union as f64
}

/// Foreground pixels with a background 4-neighbour; outside the frame counts
/// as background.
pub fn boundary_oracle(g: &Grid) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..g.h {
        for c in 0..g.w {
            if !g.at(r, c) {
                continue;
            }
            let edge = r == 0
                || c == 0
                || r + 1 == g.h
                || c + 1 == g.w
                || !g.at(r - 1, c)
                || !g.at(r + 1, c)
                || !g.at(r, c - 1)
                || !g.at(r, c + 1);
            if edge {
                out.push((r, c));
            }
        }
    }
    out
}

/// Contour F by checking every boundary pixel against every boundary pixel of
/// the other mask.
pub fn f_oracle(pred: &Grid, gt: &Grid, tol: usize) -> f64 {
    let pb = boundary_oracle(pred);
    let gb = boundary_oracle(gt);
    if pb.is_empty() && gb.is_empty() {
        return 1.0;
    }
    if pb.is_empty() || gb.is_empty() {
        return 0.0;
    }
    let near = |a: (usize, usize), b: (usize, usize)| {
        a.0.abs_diff(b.0).max(a.1.abs_diff(b.1)) <= tol
    };
    let p_hit = pb.iter().filter(|&&a| gb.iter().any(|&b| near(a, b))).count();
    let g_hit = gb.iter().filter(|&&b| pb.iter().any(|&a| near(a, b))).count();
    let precision = p_hit as f64 / pb.len() as f64;
    let recall = g_hit as f64 / gb.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn diag_tolerance(h: usize, w: usize) -> usize {
    (0.008 * ((h * h + w * w) as f64).sqrt()).ceil() as usize
}

/// (J, F, J&F) averaged over every frame.
pub fn jf_oracle(pred: &Seq, gt: &Seq) -> (f64, f64, f64) {
    let tol = diag_tolerance(gt[0].h, gt[0].w);
    let n = gt.len() as f64;
    let j: f64 = pred.iter().zip(gt).map(|(p, g)| iou_oracle(p, g)).sum::<f64>() / n;
    let f: f64 = pred.iter().zip(gt).map(|(p, g)| f_oracle(p, g, tol)).sum::<f64>() / n;
    (j, f, (j + f) / 2.0)
}

/// Exhaustive SAD search over every offset with the reference block inside
/// the frame. Ties go to the smallest `|i| + |j|`, then smallest `(i, j)`.
pub fn motion_oracle(
    cur: &LumaFrame,
    prev: &LumaFrame,
    block: usize,
    radius: i32,
) -> Vec<MotionVector> {
    let (h, w) = (cur.height() as i64, cur.width() as i64);
    let mut out = Vec::new();
    for br in 0..cur.height() / block {
        for bc in 0..cur.width() / block {
            let (p, q) = ((br * block) as i64, (bc * block) as i64);
            let mut best: Option<((u64, i32, i32, i32), MotionVector)> = None;
            for i in -radius..=radius {
                for j in -radius..=radius {
                    let (rr, rc) = (p - i64::from(i), q - i64::from(j));
                    if rr < 0 || rc < 0 || rr + block as i64 > h || rc + block as i64 > w {
                        continue;
                    }
                    let mut sad = 0u64;
                    for y in 0..block {
                        for x in 0..block {
                            let a = cur.at(p as usize + y, q as usize + x);
                            let b = prev.at(rr as usize + y, rc as usize + x);
                            sad += u64::from(a.abs_diff(b));
                        }
                    }
                    let key = (sad, i.abs() + j.abs(), i, j);
                    if best.as_ref().is_none_or(|(k, _)| key < *k) {
                        best = Some((key, MotionVector::new(i, j)));
                    }
                }
            }
            out.push(best.unwrap().1);
        }
    }
    out
}

pub fn noise_frame(rng: &mut impl Rng, w: usize, h: usize) -> LumaFrame {
    let px: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
    LumaFrame::new(w, h, px).unwrap()
}

/// Smooth but non-periodic texture; block matching has a unique optimum.
pub fn textured_frame(rng: &mut impl Rng, w: usize, h: usize) -> LumaFrame {
    let noise: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
    LumaFrame::from_fn(w, h, |r, c| {
        let base = ((r * 7 + c * 13 + (r * c) / 5) % 256) as u8;
        base.wrapping_add(noise[r * w + c] / 4)
    })
}

/// `frame` moved by `(dr, dc)`: output pixel `(r, c)` is input `(r - dr, c - dc)`,
/// with edge replication.
pub fn shift_frame(frame: &LumaFrame, dr: i32, dc: i32) -> LumaFrame {
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    LumaFrame::from_fn(frame.width(), frame.height(), |r, c| {
        let sr = (r as i64 - i64::from(dr)).clamp(0, h - 1) as usize;
        let sc = (c as i64 - i64::from(dc)).clamp(0, w - 1) as usize;
        frame.at(sr, sc)
    })
}
