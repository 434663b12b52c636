//! Evaluate a prediction directory against a manifest and print the report
//! tables.
//!
//! Usage: `cargo run --example batch_evaluate [manifest.json preds/]`;
//! defaults to the committed fixture.

use std::path::PathBuf;

use rvoseval::report::{evaluate_run, render_report, BucketSelection, EvalConfig, Format};

fn main() -> rvoseval::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut args = std::env::args_os().skip(1).map(PathBuf::from);
    let gt = args.next().unwrap_or_else(|| fixtures.join("manifest.json"));
    let preds = args.next().unwrap_or_else(|| fixtures.join("preds"));

    let config = EvalConfig {
        buckets: BucketSelection::all(),
        allow_missing: true,
        ..EvalConfig::default()
    };
    let report = evaluate_run(&gt, &preds, &config)?;
    print!("{}", render_report(&report, Format::Table));

    let worst = report
        .per_expression
        .iter()
        .min_by(|a, b| a.metrics.jf.total_cmp(&b.metrics.jf));
    if let Some(r) = worst {
        println!(
            "\nlowest J&F: {}/{} ({:.1})",
            r.video_id,
            r.expression_id,
            100.0 * r.metrics.jf
        );
    }
    Ok(())
}
