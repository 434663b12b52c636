//! Validate a manifest and print its statistics.
//!
//! Usage: `cargo run --example dataset_statistics [manifest.json]`; defaults
//! to the committed test fixture.

use std::path::PathBuf;

use rvoseval::dataset::{check_selection_criteria, compute_statistics, load_manifest};
use rvoseval::report::{render_stats, Format};

fn main() {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/manifest.json"));
    let index = match load_manifest(&path) {
        Ok(index) => index,
        Err(rvoseval::Error::SchemaViolation(violations)) => {
            for v in violations {
                eprintln!("{v}");
            }
            std::process::exit(1);
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    for video in &index.videos {
        for finding in check_selection_criteria(video) {
            println!("{}: {finding}", video.id);
        }
    }
    print!("{}", render_stats(&compute_statistics(&index), Format::Table));
}
