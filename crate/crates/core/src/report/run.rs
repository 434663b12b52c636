//! Evaluation driver: prediction loading and the parallel scoring fan-out.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BucketKeys, EvalConfig, EvalReport, ExpressionError, ExpressionResult, RunMeta, Timing};
use crate::dataset::{
    length_bucket, load_manifest, occlusion_rate, DatasetIndex, ExpressionRecord,
    OcclusionBracket, VideoRecord,
};
use crate::error::{Error, Result};
use crate::mask::{RleJson, RleMask};
use crate::metrics::{evaluate_expression_with, MaskSequence};

/// One prediction file:
/// `{"video_id":…, "expression_id":…, "masks": {"<frame>": RLE|null, …}}`.
/// Omitted frames are empty.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PredictionFile {
    pub video_id: String,
    pub expression_id: String,
    #[serde(default)]
    pub masks: BTreeMap<String, Option<RleJson>>,
}

impl PredictionFile {
    pub fn from_sequence(expression_id: impl Into<String>, seq: &MaskSequence) -> Self {
        PredictionFile {
            video_id: seq.video_id().to_string(),
            expression_id: expression_id.into(),
            masks: seq
                .frames()
                .iter()
                .map(|(t, m)| (t.to_string(), Some(RleJson::from(m.clone()))))
                .collect(),
        }
    }

    /// Writes `<dir>/<video_id>_<expression_id>.json`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}_{}.json", self.video_id, self.expression_id));
        let text = serde_json::to_string(self).expect("prediction serialization is infallible");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Validates the masks against the ground-truth video.
    fn to_sequence(&self, video: &VideoRecord) -> Result<MaskSequence> {
        let mut frames = BTreeMap::new();
        for (key, entry) in &self.masks {
            let t: u32 = key.parse().map_err(|_| {
                Error::SequenceMismatch(format!("frame key {key:?} is not an integer"))
            })?;
            if t >= video.num_frames {
                return Err(Error::SequenceMismatch(format!(
                    "frame {t} out of range for {}-frame video {}",
                    video.num_frames, video.id
                )));
            }
            if let Some(raw) = entry {
                let rle = RleMask::try_from(raw.clone())?;
                if rle.shape() != video.shape() {
                    return Err(Error::ShapeMismatch {
                        expected: video.shape(),
                        found: rle.shape(),
                    });
                }
                frames.insert(t, rle);
            }
        }
        MaskSequence::new(
            video.id.clone(),
            self.expression_id.clone(),
            video.num_frames,
            video.shape(),
            frames,
        )
    }
}

/// Predictions keyed by `(video_id, expression_id)`, plus the files that
/// could not be read.
#[derive(Clone, Debug, Default)]
pub struct PredictionSet {
    entries: HashMap<(String, String), PredictionFile>,
    load_errors: Vec<ExpressionError>,
}

impl PredictionSet {
    pub fn insert(&mut self, file: PredictionFile) -> Option<PredictionFile> {
        self.entries
            .insert((file.video_id.clone(), file.expression_id.clone()), file)
    }

    pub fn insert_sequence(&mut self, expression_id: &str, seq: &MaskSequence) {
        self.insert(PredictionFile::from_sequence(expression_id, seq));
    }

    pub fn get(&self, video_id: &str, expression_id: &str) -> Option<&PredictionFile> {
        self.entries
            .get(&(video_id.to_string(), expression_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Files that failed to parse or duplicated another prediction.
    pub fn load_errors(&self) -> &[ExpressionError] {
        &self.load_errors
    }
}

/// Reads every `*.json` file in `dir` as a prediction.
///
/// Unreadable or duplicate files are recorded in
/// [`PredictionSet::load_errors`]; with `strict` the first one is returned as
/// an error instead.
pub fn load_predictions(dir: &Path, strict: bool) -> Result<PredictionSet> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();

    let parsed: Vec<(PathBuf, Result<PredictionFile>)> = paths
        .into_par_iter()
        .map(|path| {
            let parsed = fs::read_to_string(&path)
                .map_err(|e| Error::io(&path, e))
                .and_then(|text| {
                    serde_json::from_str::<PredictionFile>(&text).map_err(|e| Error::Parse {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })
                });
            (path, parsed)
        })
        .collect();

    let mut set = PredictionSet::default();
    for (path, parsed) in parsed {
        match parsed {
            Ok(file) => {
                let key = (file.video_id.clone(), file.expression_id.clone());
                match set.entries.entry(key) {
                    Entry::Occupied(slot) => {
                        let message = format!("duplicate prediction in {}", path.display());
                        if strict {
                            return Err(Error::InvalidArgument(message));
                        }
                        let (video_id, expression_id) = slot.key().clone();
                        set.load_errors.push(ExpressionError {
                            video_id,
                            expression_id,
                            message,
                        });
                    }
                    Entry::Vacant(slot) => {
                        slot.insert(file);
                    }
                }
            }
            Err(e) if strict => return Err(e),
            Err(e) => set.load_errors.push(ExpressionError {
                video_id: String::new(),
                expression_id: String::new(),
                message: e.to_string(),
            }),
        }
    }
    Ok(set)
}

/// Loads a manifest and a prediction directory and evaluates them.
pub fn evaluate_run(
    gt_manifest: impl AsRef<Path>,
    predictions_dir: impl AsRef<Path>,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let index = load_manifest(gt_manifest)?;
    let predictions = load_predictions(predictions_dir.as_ref(), config.strict)?;
    evaluate_index(&index, &predictions, config)
}

struct Task<'a> {
    video: &'a VideoRecord,
    expression: &'a ExpressionRecord,
    prediction: Option<&'a PredictionFile>,
}

/// Scores every expression of the selected split.
///
/// Work runs on a dedicated pool capped at `config.threads`; results are
/// assembled in `(video_id, expression_id)` order, so the report does not
/// depend on scheduling.
pub fn evaluate_index(
    index: &DatasetIndex,
    predictions: &PredictionSet,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let started = Instant::now();
    let mut tasks = Vec::new();
    for video in index.videos_in(config.split) {
        for expression in &video.expressions {
            let prediction = predictions.get(&video.id, &expression.id);
            if prediction.is_none() && !config.allow_missing {
                return Err(Error::MissingPrediction {
                    video_id: video.id.clone(),
                    expression_id: expression.id.clone(),
                });
            }
            tasks.push(Task {
                video,
                expression,
                prediction,
            });
        }
    }
    tasks.sort_by(|a, b| {
        (&a.video.id, &a.expression.id).cmp(&(&b.video.id, &b.expression.id))
    });

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let threads = pool.current_num_threads();

    let outcomes: Vec<Result<ExpressionResult>> =
        pool.install(|| tasks.par_iter().map(|t| score(t, config)).collect());

    let mut results = Vec::with_capacity(outcomes.len());
    let mut errors = predictions.load_errors.clone();
    for (task, outcome) in tasks.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) if config.strict => return Err(e),
            Err(e) => errors.push(ExpressionError {
                video_id: task.video.id.clone(),
                expression_id: task.expression.id.clone(),
                message: e.to_string(),
            }),
        }
    }

    let run_meta = RunMeta {
        split: config.split,
        boundary: config.boundary,
        allow_missing: config.allow_missing,
        strict: config.strict,
        buckets: config.buckets,
        event_keywords: config.event_keywords.clone(),
        num_expressions: results.len(),
        num_errors: errors.len(),
        timing: config.record_timing.then(|| Timing {
            wall_time_s: started.elapsed().as_secs_f64(),
            threads,
        }),
    };
    Ok(EvalReport::assemble(results, errors, config.buckets, run_meta))
}

fn score(task: &Task<'_>, config: &EvalConfig) -> Result<ExpressionResult> {
    let video = task.video;
    let expr = task.expression;
    let object = video.object(&expr.object_id).ok_or_else(|| {
        Error::SequenceMismatch(format!("unknown object {}", expr.object_id))
    })?;
    let pred = match task.prediction {
        Some(p) => p.to_sequence(video)?,
        None => MaskSequence::empty(video.id.clone(), expr.id.clone(), video.num_frames, video.shape()),
    };
    let metrics = evaluate_expression_with(&pred, &object.masks, config.boundary)?;
    let metrics = if config.keep_traces {
        metrics
    } else {
        metrics.without_traces()
    };
    let rate = occlusion_rate(object, video.num_frames);
    Ok(ExpressionResult {
        video_id: video.id.clone(),
        expression_id: expr.id.clone(),
        object_id: object.id.clone(),
        kind: expr.kind,
        occlusion_rate: rate,
        buckets: BucketKeys {
            occlusion: OcclusionBracket::from_rate(rate),
            length: length_bucket(&expr.text),
            events: config.event_keywords.classify(&expr.text),
        },
        metrics,
    })
}
