//! Evaluation engine and dataset toolkit for long-term referring video object
//! segmentation.
//!
//! The crate is organised around the data flow of a benchmark run:
//!
//! * [`mask`] holds the binary mask types (bit-packed dense masks and
//!   column-major RLE), pixel set operations and boundary extraction.
//! * [`metrics`] computes the per-expression scores: region similarity `J`,
//!   contour accuracy `F`, their mean `J&F`, temporal IoU and volume IoU.
//! * [`decomposition`] splits a video into keyframe clips and estimates
//!   16×16 macroblock motion fields by exhaustive block matching.
//! * [`dataset`] loads and validates manifests, checks selection criteria,
//!   computes dataset statistics and derives attribute tags and buckets.
//! * [`report`] drives batch evaluation over a prediction directory and
//!   renders the result as a table, CSV or JSON.
//! * [`cli`] is the `rvoseval` command line front end.
//!
//! Runnable walkthroughs for each capability live in the crate's `examples/`
//! directory.

pub mod cli;
pub mod dataset;
pub mod decomposition;
pub mod error;
pub mod mask;
pub mod metrics;
pub mod numeric;
pub mod report;

pub use error::{Error, Result, Violation};
pub use mask::{
    extract_boundary, presence, region_iou, rle_decode, rle_encode, BoundaryMask, DenseMask,
    RleMask,
};
pub use metrics::{
    contour_f, evaluate_expression, sequence_jf, temporal_iou, volume_iou, BoundaryTolerance,
    ExpressionMetrics, MaskSequence, PresenceSets,
};
