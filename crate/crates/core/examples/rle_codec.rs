//! Encode a mask to COCO-style RLE, print the wire form, and decode it back.

use rvoseval::mask::{rle_decode, rle_encode, DenseMask, RleMask};

fn main() -> rvoseval::Result<()> {
    let mask = DenseMask::from_fn(6, 8, |r, c| (r as i32 - 3).pow(2) + (c as i32 - 4).pow(2) <= 5);
    println!("{mask:?}");

    let rle = rle_encode(&mask);
    let wire = serde_json::to_string(&rle).expect("serializable");
    println!("{wire}");
    println!("area {} of {} pixels", rle.area(), 6 * 8);

    let parsed: RleMask = serde_json::from_str(&wire).expect("valid RLE");
    assert_eq!(rle_decode(&parsed), mask);

    // Runs must cover the frame exactly.
    let err = RleMask::new(2, 2, vec![1, 2]).unwrap_err();
    println!("rejected: {err}");
    Ok(())
}
