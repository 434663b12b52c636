//! Estimate the block motion between two frames of a synthetic pan.

use rvoseval::decomposition::{estimate_motion, LumaFrame, MotionParams};

fn scene(shift_r: i32, shift_c: i32) -> LumaFrame {
    LumaFrame::from_fn(96, 64, |r, c| {
        let (y, x) = (r as i32 - shift_r, c as i32 - shift_c);
        let v = (y * y + 3 * x * x + 7 * x * y).rem_euclid(251);
        v as u8
    })
}

fn main() -> rvoseval::Result<()> {
    let prev = scene(0, 0);
    let cur = scene(2, -3);
    let field = estimate_motion(&cur, &prev, MotionParams::default())?;
    println!("{}x{} macroblocks, search radius {}", field.rows, field.cols, field.search_radius);
    for br in 0..field.rows {
        let row: Vec<String> = (0..field.cols)
            .map(|bc| {
                let v = field.get(br, bc);
                format!("({:>2},{:>2})", v.row, v.col)
            })
            .collect();
        println!("{}", row.join(" "));
    }
    Ok(())
}
