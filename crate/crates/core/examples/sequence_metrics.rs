//! Score one predicted mask sequence against its ground truth.

use rvoseval::mask::DenseMask;
use rvoseval::metrics::{evaluate_expression, MaskSequence};

fn main() -> rvoseval::Result<()> {
    let (h, w, frames) = (48, 64, 20u32);
    let target: Vec<(u32, DenseMask)> = (0..frames)
        .filter(|t| !(8..12).contains(t))
        .map(|t| (t, DenseMask::rect(h, w, 10, 5 + 2 * t, 16, 12)))
        .collect();
    // The prediction lags two pixels behind and loses the target early.
    let predicted: Vec<(u32, DenseMask)> = target
        .iter()
        .filter(|(t, _)| *t < 16)
        .map(|(t, m)| (*t, m.translated(0, -2)))
        .collect();

    let gt = MaskSequence::from_dense("video", "target", frames, (h, w), target.iter().map(|(t, m)| (*t, m)))?;
    let pred = MaskSequence::from_dense("video", "pred", frames, (h, w), predicted.iter().map(|(t, m)| (*t, m)))?;

    let m = evaluate_expression(&pred, &gt)?;
    println!("J    {:.4}", m.j);
    println!("F    {:.4}", m.f);
    println!("J&F  {:.4}", m.jf);
    println!("tIoU {:.4}", m.tiou);
    println!("vIoU {:.4}", m.viou);
    let trace: Vec<String> = m.per_frame_j.iter().map(|j| format!("{j:.2}")).collect();
    println!("per-frame J: {}", trace.join(" "));
    Ok(())
}
