//! Batch evaluation reports.
//!
//! Scores are computed per expression first. Type, overall and bucket
//! aggregates are then uniform means over the expressions they contain.

mod render;
mod run;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{DescriptionType, EventComplexity, EventKeywords, LengthBucket, OcclusionBracket, Split};
use crate::metrics::{BoundaryTolerance, ExpressionMetrics};
use crate::numeric::exact_mean;

pub use render::{render_report, render_stats, Format};
pub use run::{
    evaluate_index, evaluate_run, load_predictions, PredictionFile, PredictionSet,
};

/// Which breakdown tables to compute.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketSelection {
    pub occlusion: bool,
    pub length: bool,
    pub events: bool,
}

impl BucketSelection {
    pub fn all() -> Self {
        BucketSelection {
            occlusion: true,
            length: true,
            events: true,
        }
    }

    pub fn any(&self) -> bool {
        self.occlusion || self.length || self.events
    }
}

impl std::str::FromStr for BucketSelection {
    type Err = String;

    /// Comma-separated subset of `occlusion,length,events`.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = BucketSelection::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "occlusion" => out.occlusion = true,
                "length" => out.length = true,
                "events" | "event" => out.events = true,
                "all" => out = BucketSelection::all(),
                other => return Err(format!("unknown bucket family {other:?}")),
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalConfig {
    /// Restrict to one split; `None` evaluates every video.
    pub split: Option<Split>,
    /// Worker cap; `None` uses the available parallelism.
    pub threads: Option<usize>,
    pub buckets: BucketSelection,
    /// Score missing prediction files as always-empty instead of failing.
    pub allow_missing: bool,
    /// Abort on the first per-expression error instead of collecting it.
    pub strict: bool,
    pub boundary: BoundaryTolerance,
    /// Keep per-frame J/F traces in the report.
    pub keep_traces: bool,
    pub event_keywords: EventKeywords,
    /// Record wall time and worker count in `run_meta`. Off by default so that
    /// reports are byte-identical across thread counts.
    pub record_timing: bool,
}

/// Uniform means over a group of expressions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub j: f64,
    pub f: f64,
    pub jf: f64,
    pub tiou: f64,
    pub viou: f64,
}

impl Aggregate {
    /// `None` for an empty group.
    pub fn from_metrics<'a>(items: impl IntoIterator<Item = &'a ExpressionMetrics>) -> Option<Self> {
        let items: Vec<&ExpressionMetrics> = items.into_iter().collect();
        let mean = |f: fn(&ExpressionMetrics) -> f64| {
            exact_mean(&items.iter().map(|m| f(m)).collect::<Vec<_>>())
        };
        Some(Aggregate {
            count: items.len(),
            j: mean(|m| m.j)?,
            f: mean(|m| m.f)?,
            jf: mean(|m| m.jf)?,
            tiou: mean(|m| m.tiou)?,
            viou: mean(|m| m.viou)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketKeys {
    pub occlusion: OcclusionBracket,
    pub length: LengthBucket,
    pub events: EventComplexity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressionResult {
    pub video_id: String,
    pub expression_id: String,
    pub object_id: String,
    #[serde(rename = "type")]
    pub kind: DescriptionType,
    /// Fraction of frames on which the target's ground-truth mask is empty.
    pub occlusion_rate: f64,
    pub buckets: BucketKeys,
    pub metrics: ExpressionMetrics,
}

/// A per-expression failure that was collected instead of aborting the run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpressionError {
    pub video_id: String,
    pub expression_id: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occlusion: Option<BTreeMap<OcclusionBracket, Option<Aggregate>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<BTreeMap<LengthBucket, Option<Aggregate>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<BTreeMap<EventComplexity, Option<Aggregate>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_s: f64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub split: Option<Split>,
    pub boundary: BoundaryTolerance,
    pub allow_missing: bool,
    pub strict: bool,
    pub buckets: BucketSelection,
    pub event_keywords: EventKeywords,
    pub num_expressions: usize,
    pub num_errors: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Sorted by `(video_id, expression_id)`.
    pub per_expression: Vec<ExpressionResult>,
    pub per_type: BTreeMap<DescriptionType, Option<Aggregate>>,
    pub overall: Option<Aggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buckets: Option<BucketReport>,
    #[serde(default)]
    pub errors: Vec<ExpressionError>,
    pub run_meta: RunMeta,
}

impl EvalReport {
    /// Builds every aggregate from the per-expression block.
    pub fn assemble(
        mut per_expression: Vec<ExpressionResult>,
        errors: Vec<ExpressionError>,
        selection: BucketSelection,
        run_meta: RunMeta,
    ) -> Self {
        per_expression.sort_by(|a, b| {
            (&a.video_id, &a.expression_id).cmp(&(&b.video_id, &b.expression_id))
        });
        let per_type = DescriptionType::ALL
            .iter()
            .map(|&t| {
                let agg = Aggregate::from_metrics(
                    per_expression
                        .iter()
                        .filter(|r| r.kind == t)
                        .map(|r| &r.metrics),
                );
                (t, agg)
            })
            .collect();
        let overall = Aggregate::from_metrics(per_expression.iter().map(|r| &r.metrics));
        let buckets = selection
            .any()
            .then(|| bucket_report(&per_expression, selection));
        EvalReport {
            per_expression,
            per_type,
            overall,
            buckets,
            errors,
            run_meta,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

fn bucket_map<K: Ord + Copy>(
    results: &[ExpressionResult],
    keys: &[K],
    key_of: impl Fn(&ExpressionResult) -> K,
) -> BTreeMap<K, Option<Aggregate>> {
    keys.iter()
        .map(|&k| {
            let agg = Aggregate::from_metrics(
                results.iter().filter(|r| key_of(r) == k).map(|r| &r.metrics),
            );
            (k, agg)
        })
        .collect()
}

fn bucket_report(results: &[ExpressionResult], selection: BucketSelection) -> BucketReport {
    BucketReport {
        occlusion: selection
            .occlusion
            .then(|| bucket_map(results, &OcclusionBracket::ALL, |r| r.buckets.occlusion)),
        length: selection
            .length
            .then(|| bucket_map(results, &LengthBucket::ALL, |r| r.buckets.length)),
        events: selection
            .events
            .then(|| bucket_map(results, &EventComplexity::ALL, |r| r.buckets.events)),
    }
}
