//! `rvoseval` command line.
//!
//! Exit codes: 0 on success, 1 on data errors (invalid manifest, missing
//! prediction, unreadable input), 2 on usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dataset::{
    check_selection_criteria, compute_statistics, load_manifest, reference_discrepancies, Split,
};
use crate::decomposition::{clips_to_json, decompose, load_frames, MotionParams};
use crate::error::Error;
use crate::mask::{rle_decode, rle_encode, DenseMask, RleMask};
use crate::metrics::BoundaryTolerance;
use crate::report::{evaluate_run, render_report, render_stats, BucketSelection, EvalConfig, Format};

#[derive(Debug, Parser)]
#[command(name = "rvoseval", version, about = "Long-term referring video object segmentation evaluation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a prediction directory against a ground-truth manifest.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        split: Option<Split>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "RVOSEVAL_THREADS")]
        threads: Option<usize>,
        /// Comma-separated subset of occlusion,length,events.
        #[arg(long)]
        buckets: Option<BucketSelection>,
        /// Score missing predictions as always-empty.
        #[arg(long)]
        allow_missing: bool,
        /// Abort on the first per-expression error.
        #[arg(long)]
        strict: bool,
        /// Boundary tolerance as a fraction of the image diagonal.
        #[arg(long, default_value_t = crate::metrics::DEFAULT_BOUNDARY_FRACTION)]
        boundary_th: f64,
        /// Record wall time and worker count in the report.
        #[arg(long)]
        timing: bool,
        /// Keep per-frame J/F traces in the JSON report.
        #[arg(long)]
        per_frame: bool,
    },
    /// Dataset statistics for a manifest.
    Stats {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare against the published full-release totals.
        #[arg(long)]
        check_reference: bool,
    },
    /// Validate a manifest's schema and video selection criteria.
    Validate {
        #[arg(long)]
        gt: PathBuf,
        /// Only check the schema.
        #[arg(long)]
        skip_criteria: bool,
    },
    /// Split frames into keyframe clips with block-matching motion fields.
    Decompose {
        /// Directory of numbered images, or a raw luma file with a JSON sidecar.
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, default_value_t = crate::decomposition::DEFAULT_GOP)]
        gop: usize,
        #[arg(long, default_value_t = crate::decomposition::DEFAULT_BLOCK)]
        block: usize,
        #[arg(long, default_value_t = crate::decomposition::DEFAULT_SEARCH_RADIUS)]
        search: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "RVOSEVAL_THREADS")]
        threads: Option<usize>,
    },
    /// Convert between mask images and RLE JSON.
    Rle {
        #[command(subcommand)]
        action: RleAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum RleAction {
    /// Image (non-zero pixels are foreground) to RLE JSON.
    Encode {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// RLE JSON to a PNG (with --out) or a 0/1 text grid.
    Decode {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Data(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SchemaViolation(violations) => Failure::Data(
                violations
                    .iter()
                    .map(|v| format!("schema violation at {v}"))
                    .collect::<Vec<_>>()
                    .join("\n"),
            ),
            other => Failure::Data(other.to_string()),
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| {
                    if text.ends_with('\n') {
                        Ok(())
                    } else {
                        stdout.write_all(b"\n")
                    }
                })
                .map_err(|e| Failure::Data(e.to_string()))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Evaluate {
            gt,
            pred,
            split,
            format,
            out,
            threads,
            buckets,
            allow_missing,
            strict,
            boundary_th,
            timing,
            per_frame,
        } => {
            if !(boundary_th.is_finite() && boundary_th >= 0.0) {
                return Err(Failure::Usage(format!(
                    "--boundary-th must be a non-negative number, got {boundary_th}"
                )));
            }
            if threads == Some(0) {
                return Err(Failure::Usage("--threads must be at least 1".into()));
            }
            let config = EvalConfig {
                split,
                threads,
                buckets: buckets.unwrap_or_default(),
                allow_missing,
                strict,
                boundary: BoundaryTolerance::DiagonalFraction(boundary_th),
                keep_traces: per_frame,
                record_timing: timing,
                ..EvalConfig::default()
            };
            let started = std::time::Instant::now();
            let report = evaluate_run(&gt, &pred, &config)?;
            eprintln!(
                "evaluated {} expression(s), {} error(s) in {:.2}s",
                report.per_expression.len(),
                report.errors.len(),
                started.elapsed().as_secs_f64()
            );
            emit(&render_report(&report, format), out.as_deref())
        }
        Command::Stats {
            gt,
            format,
            out,
            check_reference,
        } => {
            let index = load_manifest(&gt)?;
            let stats = compute_statistics(&index);
            emit(&render_stats(&stats, format), out.as_deref())?;
            if check_reference {
                let issues = reference_discrepancies(&stats);
                if !issues.is_empty() {
                    return Err(Failure::Data(issues.join("\n")));
                }
                eprintln!("statistics match the published totals");
            }
            Ok(())
        }
        Command::Validate { gt, skip_criteria } => {
            let index = load_manifest(&gt)?;
            let mut problems = Vec::new();
            if !skip_criteria {
                for v in &index.videos {
                    for c in check_selection_criteria(v) {
                        problems.push(format!("video {}: {c}", v.id));
                    }
                }
            }
            if problems.is_empty() {
                println!(
                    "ok: {} videos, {} expressions",
                    index.videos.len(),
                    index.num_expressions()
                );
                Ok(())
            } else {
                Err(Failure::Data(problems.join("\n")))
            }
        }
        Command::Decompose {
            frames,
            gop,
            block,
            search,
            out,
            threads,
        } => {
            if gop == 0 || block == 0 {
                return Err(Failure::Usage("--gop and --block must be positive".into()));
            }
            let loaded = load_frames(&frames)?;
            let params = MotionParams {
                block,
                search_radius: search,
                parallel_blocks: false,
            };
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                builder = builder.num_threads(n.max(1));
            }
            let pool = builder
                .build()
                .map_err(|e| Failure::Data(e.to_string()))?;
            let clips = pool.install(|| decompose(&loaded, gop, params))?;
            eprintln!("{} frames -> {} clips", loaded.len(), clips.len());
            emit(&clips_to_json(&clips), out.as_deref())
        }
        Command::Rle { action } => match action {
            RleAction::Encode { file, out } => {
                let img = image::open(&file)
                    .map_err(|e| Failure::Data(format!("{}: {e}", file.display())))?
                    .to_luma8();
                let mask = DenseMask::from_fn(img.height(), img.width(), |r, c| {
                    img.get_pixel(c, r).0[0] != 0
                });
                let json = serde_json::to_string(&rle_encode(&mask))
                    .expect("RLE serialization is infallible");
                emit(&json, out.as_deref())
            }
            RleAction::Decode { file, out } => {
                let text = std::fs::read_to_string(&file)
                    .map_err(|e| Failure::Data(format!("{}: {e}", file.display())))?;
                let rle: RleMask = serde_json::from_str(&text)
                    .map_err(|e| Failure::Data(format!("{}: {e}", file.display())))?;
                let mask = rle_decode(&rle);
                match out {
                    Some(path) => {
                        let img = image::GrayImage::from_fn(mask.width(), mask.height(), |c, r| {
                            image::Luma([if mask.get(r, c) { 255 } else { 0 }])
                        });
                        img.save(&path)
                            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
                    }
                    None => {
                        let mut grid = String::new();
                        for r in 0..mask.height() {
                            for c in 0..mask.width() {
                                grid.push(if mask.get(r, c) { '1' } else { '0' });
                            }
                            grid.push('\n');
                        }
                        emit(&grid, None)
                    }
                }
            }
        },
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
    }
}
