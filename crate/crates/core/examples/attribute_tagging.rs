//! Tag every object of a manifest with the rule-based attributes and bucket
//! every expression.

use std::path::PathBuf;

use rvoseval::dataset::{
    length_bucket, load_manifest, occlusion_rate, tag_attributes, EventKeywords, OcclusionBracket,
};

fn flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "yes",
        Some(false) => "no",
        None => "?",
    }
}

fn main() -> rvoseval::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/manifest.json"));
    let index = load_manifest(path)?;
    println!("{:<6}{:<6}{:>6}{:>6}{:>6}{:>6}{:>6}", "video", "obj", "LRA", "OV", "FOC", "ARC", "SV");
    for video in &index.videos {
        for obj in &video.objects {
            let tags = tag_attributes(obj, video, &obj.manual, obj.boxes.is_some())?;
            println!(
                "{:<6}{:<6}{:>6}{:>6}{:>6}{:>6}{:>6}",
                video.id,
                obj.id,
                flag(tags.lra),
                flag(tags.ov),
                flag(tags.foc),
                flag(tags.arc),
                flag(tags.sv)
            );
        }
    }
    println!();
    let keywords = EventKeywords::default();
    for video in &index.videos {
        for expr in &video.expressions {
            let Some(obj) = video.object(&expr.object_id) else { continue };
            let rate = occlusion_rate(obj, video.num_frames);
            println!(
                "{}/{}: occlusion {:.2} {}, {}, {}",
                video.id,
                expr.id,
                rate,
                OcclusionBracket::from_rate(rate).label(),
                length_bucket(&expr.text).label(),
                keywords.classify(&expr.text).label()
            );
        }
    }
    Ok(())
}
