use std::fmt::Write as _;

use super::{Aggregate, EvalReport};
use crate::dataset::{DatasetStats, DescriptionType};

/// Placeholder for an aggregate over an empty group.
const EMPTY_CELL: &str = "—";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn cell(agg: Option<&Aggregate>, pick: Pick) -> String {
    agg.map_or_else(|| EMPTY_CELL.to_string(), |a| pct(pick(a)))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Right-aligns `s` to `width` display characters.
fn pad(s: &str, width: usize) -> String {
    let len = s.chars().count();
    format!("{}{}", " ".repeat(width.saturating_sub(len)), s)
}

type Pick = fn(&Aggregate) -> f64;

/// A titled breakdown: `(title, [(label, aggregate)])`.
type BucketTable<'a> = (&'static str, Vec<(&'static str, Option<&'a Aggregate>)>);

const METRICS: [(&str, Pick); 3] =
    [("J&F", |a| a.jf), ("tIoU", |a| a.tiou), ("vIoU", |a| a.viou)];

pub fn render_report(report: &EvalReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Table => render_table(report),
        Format::Csv => render_csv(report),
    }
}

fn groups(report: &EvalReport) -> Vec<(String, Option<&Aggregate>)> {
    let mut out: Vec<(String, Option<&Aggregate>)> = DescriptionType::ALL
        .iter()
        .map(|t| (t.title().to_string(), report.per_type.get(t).and_then(Option::as_ref)))
        .collect();
    out.push(("Overall".to_string(), report.overall.as_ref()));
    out
}

fn bucket_tables(report: &EvalReport) -> Vec<BucketTable<'_>> {
    let mut out = Vec::new();
    let Some(b) = &report.buckets else {
        return out;
    };
    if let Some(m) = &b.occlusion {
        out.push((
            "Occlusion rate",
            m.iter().map(|(k, v)| (k.label(), v.as_ref())).collect(),
        ));
    }
    if let Some(m) = &b.length {
        out.push((
            "Description length",
            m.iter().map(|(k, v)| (k.label(), v.as_ref())).collect(),
        ));
    }
    if let Some(m) = &b.events {
        out.push((
            "Event complexity",
            m.iter().map(|(k, v)| (k.label(), v.as_ref())).collect(),
        ));
    }
    out
}

fn render_table(report: &EvalReport) -> String {
    const COL: usize = 7;
    let mut s = String::new();
    let groups = groups(report);
    let group_width = COL * METRICS.len();
    let label_width = 8;

    let _ = write!(s, "{}", " ".repeat(label_width));
    for (name, _) in &groups {
        let _ = write!(s, " |{}", pad(name, group_width));
    }
    s.push('\n');
    let _ = write!(s, "{}", " ".repeat(label_width));
    for _ in &groups {
        s.push_str(" |");
        for (m, _) in METRICS {
            s.push_str(&pad(m, COL));
        }
    }
    s.push('\n');
    let _ = write!(s, "{}", "-".repeat(label_width));
    for _ in &groups {
        let _ = write!(s, "-+{}", "-".repeat(group_width));
    }
    s.push('\n');
    let _ = write!(s, "{:<label_width$}", "score");
    for (_, agg) in &groups {
        s.push_str(" |");
        for (_, pick) in METRICS {
            s.push_str(&pad(&cell(*agg, pick), COL));
        }
    }
    s.push('\n');
    let _ = write!(s, "{:<label_width$}", "count");
    for (_, agg) in &groups {
        let n = agg.map_or(0, |a| a.count);
        let _ = write!(s, " |{}", pad(&n.to_string(), group_width));
    }
    s.push('\n');

    for (title, entries) in bucket_tables(report) {
        s.push('\n');
        let width = entries
            .iter()
            .map(|(l, _)| l.chars().count())
            .max()
            .unwrap_or(0)
            .max(6)
            + 2;
        let label_w = title.chars().count().max(6);
        let _ = write!(s, "{title:<label_w$}");
        for (label, _) in &entries {
            s.push_str(&pad(label, width));
        }
        s.push('\n');
        for (m, pick) in METRICS {
            let _ = write!(s, "{m:<label_w$}");
            for (_, agg) in &entries {
                s.push_str(&pad(&cell(*agg, pick), width));
            }
            s.push('\n');
        }
        let _ = write!(s, "{:<label_w$}", "count");
        for (_, agg) in &entries {
            s.push_str(&pad(&agg.map_or(0, |a| a.count).to_string(), width));
        }
        s.push('\n');
    }

    if !report.errors.is_empty() {
        let _ = writeln!(s, "\n{} error(s):", report.errors.len());
        for e in &report.errors {
            let _ = writeln!(s, "  {}/{}: {}", e.video_id, e.expression_id, e.message);
        }
    }
    s
}

fn render_csv(report: &EvalReport) -> String {
    let mut s = String::from("section,group,count,J,F,J&F,tIoU,vIoU\n");
    let mut row = |section: &str, group: &str, agg: Option<&Aggregate>| {
        let count = agg.map_or(0, |a| a.count);
        let cells: Vec<String> = [
            |a: &Aggregate| a.j,
            |a: &Aggregate| a.f,
            |a: &Aggregate| a.jf,
            |a: &Aggregate| a.tiou,
            |a: &Aggregate| a.viou,
        ]
        .iter()
        .map(|pick| cell(agg, *pick))
        .collect();
        let _ = writeln!(
            s,
            "{},{},{},{}",
            csv_field(section),
            csv_field(group),
            count,
            cells.join(",")
        );
    };
    for (name, agg) in groups(report) {
        row("type", &name, agg);
    }
    for (title, entries) in bucket_tables(report) {
        for (label, agg) in entries {
            row(title, label, agg);
        }
    }
    s
}

pub fn render_stats(stats: &DatasetStats, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(stats).expect("stats serialization is infallible"),
        Format::Csv => {
            let mut s = String::from("statistic,key,value\n");
            for (k, v) in scalar_stats(stats) {
                let _ = writeln!(s, "{},,{}", csv_field(k), v);
            }
            for (name, hist) in histograms(stats) {
                for (k, v) in hist {
                    let _ = writeln!(s, "{},{},{}", csv_field(name), csv_field(&k), v);
                }
            }
            s
        }
        Format::Table => {
            let mut s = String::new();
            for (k, v) in scalar_stats(stats) {
                let _ = writeln!(s, "{k:<26}{v:>12}");
            }
            for (name, hist) in histograms(stats) {
                let _ = writeln!(s, "\n{name}");
                for (k, v) in hist {
                    let _ = writeln!(s, "  {k:<24}{v:>12}");
                }
            }
            s
        }
    }
}

fn scalar_stats(stats: &DatasetStats) -> Vec<(&'static str, String)> {
    vec![
        ("videos", stats.num_videos.to_string()),
        ("objects", stats.num_objects.to_string()),
        ("descriptions", stats.num_expressions.to_string()),
        ("frames", stats.num_frames.to_string()),
        ("masks", stats.num_masks.to_string()),
        ("categories", stats.num_categories.to_string()),
        ("total duration (h)", format!("{:.1}", stats.total_duration_s / 3600.0)),
        ("mean duration (s)", format!("{:.1}", stats.mean_duration_s)),
        ("mean frames", format!("{:.1}", stats.mean_frames)),
        ("mean object duration (s)", format!("{:.1}", stats.mean_object_duration_s)),
        (
            "objects per video",
            format!("{}-{}", stats.min_objects_per_video, stats.max_objects_per_video),
        ),
    ]
}

fn histograms(stats: &DatasetStats) -> Vec<(&'static str, Vec<(String, String)>)> {
    let fmt = |m: &std::collections::BTreeMap<u64, usize>| {
        m.iter().map(|(k, v)| (format!("{k}s"), v.to_string())).collect()
    };
    let fmtu = |m: &std::collections::BTreeMap<usize, usize>| {
        m.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    };
    vec![
        (
            "description types (%)",
            stats
                .type_counts
                .iter()
                .map(|(t, c)| {
                    (
                        t.title().to_string(),
                        format!("{c} ({:.2}%)", stats.type_percent.get(t).copied().unwrap_or(0.0)),
                    )
                })
                .collect(),
        ),
        (
            "splits (videos/descriptions)",
            stats
                .splits
                .iter()
                .map(|(k, v)| (k.clone(), format!("{}/{}", v.videos, v.expressions)))
                .collect(),
        ),
        ("video duration", fmt(&stats.video_duration_hist)),
        ("object duration", fmt(&stats.object_duration_hist)),
        ("objects per video", fmtu(&stats.objects_per_video)),
        ("descriptions per object", fmtu(&stats.descriptions_per_object)),
    ]
}
