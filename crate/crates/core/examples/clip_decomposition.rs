//! Split a frame sequence into keyframe clips and emit the clip JSON.
//!
//! Usage: `cargo run --example clip_decomposition [frames-dir-or-raw-file]`.
//! Without an argument a synthetic 30-frame pan is used.

use std::path::PathBuf;

use rvoseval::decomposition::{
    clips_to_json, decompose, load_frames, LumaFrame, MotionParams, DEFAULT_GOP,
};

fn synthetic(len: usize) -> Vec<LumaFrame> {
    (0..len)
        .map(|t| {
            LumaFrame::from_fn(64, 48, |r, c| {
                let x = c as i64 - t as i64;
                ((x * x + 5 * (r as i64) * x + 11 * r as i64).rem_euclid(253)) as u8
            })
        })
        .collect()
}

fn main() -> rvoseval::Result<()> {
    let frames = match std::env::args_os().nth(1) {
        Some(path) => load_frames(&PathBuf::from(path))?,
        None => synthetic(30),
    };
    let clips = decompose(&frames, DEFAULT_GOP, MotionParams::default())?;
    for clip in &clips {
        println!("keyframe {:>3}: {} frames", clip.keyframe_index, clip.len());
    }
    let json = clips_to_json(&clips);
    println!("{} bytes of clip JSON", json.len());
    Ok(())
}
