//! Report and plot-data serialization.
//!
//! Every writer is deterministic: rows follow input order, floats are
//! rendered with shortest round-trip formatting, and JSON field order is
//! fixed by the structs. Two runs over identical inputs produce identical
//! bytes.

use std::io::{self, Write};

use serde::Serialize;

use crate::pipeline::{
    EntropyRecord, GroupReport, Part1Output, Part3Output, SkipReason, Stream, StreamCorrelation,
    WindowResult,
};
use crate::stats::{self, BoxSummary, EntropyPoint};

/// How outliers shape the part-1 plot data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutlierPolicy {
    /// Drop flagged rows from scatter files.
    On,
    /// Keep every row, no flagging.
    Off,
    /// Keep every row and add an `outlier` column.
    #[default]
    Both,
}

impl OutlierPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            OutlierPolicy::On => "on",
            OutlierPolicy::Off => "off",
            OutlierPolicy::Both => "both",
        }
    }
}

impl std::str::FromStr for OutlierPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on" => Ok(OutlierPolicy::On),
            "off" => Ok(OutlierPolicy::Off),
            "both" => Ok(OutlierPolicy::Both),
            other => Err(format!(
                "unknown outlier policy {other:?} (expected on, off, both)"
            )),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn skip_tags(record: &EntropyRecord) -> String {
    let mut tags = Vec::new();
    match record.added.skip {
        Some(SkipReason::NoLines) => tags.push("no-added-lines"),
        Some(SkipReason::EmptyAfterLexing) => tags.push("added-empty-after-lexing"),
        None => {}
    }
    match record.removed.skip {
        Some(SkipReason::NoLines) => tags.push("no-removed-lines"),
        Some(SkipReason::EmptyAfterLexing) => tags.push("removed-empty-after-lexing"),
        None => {}
    }
    tags.join(";")
}

/// `part1_records.csv`: one row per changeset.
pub fn write_part1_records<W: Write>(records: &[EntropyRecord], w: W) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "revision",
        "added_entropy_bits",
        "removed_entropy_bits",
        "delta_watts",
        "skipped_reason",
    ])?;
    for r in records {
        csv.write_record([
            r.revision.as_str().to_string(),
            fmt_opt(r.added.entropy_bits),
            fmt_opt(r.removed.entropy_bits),
            r.delta_watts.to_string(),
            skip_tags(r),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct StreamSummaryJson {
    pub n_scored: usize,
    pub n_skipped: usize,
    pub correlation_all: Option<f64>,
    pub n_without_outliers: usize,
    pub correlation_without_outliers: Option<f64>,
    pub outliers_flagged: usize,
    pub permutation_mean_abs_r: Option<f64>,
}

impl From<&StreamCorrelation> for StreamSummaryJson {
    fn from(s: &StreamCorrelation) -> Self {
        StreamSummaryJson {
            n_scored: s.n_scored,
            n_skipped: s.n_skipped,
            correlation_all: s.r_all,
            n_without_outliers: s.n_without_outliers,
            correlation_without_outliers: s.r_without_outliers,
            outliers_flagged: s.outliers_flagged,
            permutation_mean_abs_r: s.permutation_mean_abs_r,
        }
    }
}

/// `part1_summary.json`: correlations with and without outliers are always
/// both present; the policy only shapes plot files.
#[derive(Debug, Serialize)]
pub struct Part1Summary {
    pub corpus_revision: String,
    pub order: usize,
    pub seed: u64,
    pub outlier_policy: String,
    pub permutation_trials: usize,
    pub n_records: usize,
    pub added: StreamSummaryJson,
    pub removed: StreamSummaryJson,
}

pub fn part1_summary(
    out: &Part1Output,
    policy: OutlierPolicy,
    permutation_trials: usize,
) -> Part1Summary {
    Part1Summary {
        corpus_revision: out.corpus_revision.as_str().to_string(),
        order: out.order,
        seed: out.seed,
        outlier_policy: policy.as_str().to_string(),
        permutation_trials,
        n_records: out.records.len(),
        added: (&out.added).into(),
        removed: (&out.removed).into(),
    }
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
}

/// Scatter plot data for one stream of part 1 (the entropy-versus-delta
/// figures). Row set and columns follow the outlier policy.
pub fn write_scatter<W: Write>(
    records: &[EntropyRecord],
    stream: Stream,
    policy: OutlierPolicy,
    w: W,
) -> io::Result<()> {
    let points = crate::pipeline::defined_points(records, stream);
    let (kept, flagged) = stats::filter_entropy_outliers(&points);
    let mut csv = csv::Writer::from_writer(w);
    let flagged_set: Vec<&EntropyPoint> = flagged.iter().collect();
    let is_flagged = |p: &EntropyPoint| flagged_set.iter().any(|f| f.revision == p.revision);
    match policy {
        OutlierPolicy::On => {
            csv.write_record(["revision", "cross_entropy_bits", "delta_watts"])?;
            for p in &kept {
                csv.write_record([
                    p.revision.as_str().to_string(),
                    p.cross_entropy_bits.to_string(),
                    p.delta_watts.to_string(),
                ])?;
            }
        }
        OutlierPolicy::Off => {
            csv.write_record(["revision", "cross_entropy_bits", "delta_watts"])?;
            for p in &points {
                csv.write_record([
                    p.revision.as_str().to_string(),
                    p.cross_entropy_bits.to_string(),
                    p.delta_watts.to_string(),
                ])?;
            }
        }
        OutlierPolicy::Both => {
            csv.write_record(["revision", "cross_entropy_bits", "delta_watts", "outlier"])?;
            for p in &points {
                csv.write_record([
                    p.revision.as_str().to_string(),
                    p.cross_entropy_bits.to_string(),
                    p.delta_watts.to_string(),
                    (if is_flagged(p) { "1" } else { "0" }).to_string(),
                ])?;
            }
        }
    }
    csv.flush()?;
    Ok(())
}

/// `part2_windows.csv`: one row per sliding-window job.
pub fn write_part2_windows<W: Write>(windows: &[WindowResult], w: W) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "corpus_index",
        "corpus_revision",
        "window_size",
        "added_correlation",
        "n_added_points",
        "removed_correlation",
        "n_removed_points",
        "note",
    ])?;
    for win in windows {
        csv.write_record([
            win.corpus_index.to_string(),
            win.corpus_revision.as_str().to_string(),
            win.window_size.to_string(),
            fmt_opt(win.added_correlation),
            win.n_added_points.to_string(),
            fmt_opt(win.removed_correlation),
            win.n_removed_points.to_string(),
            win.note.clone().unwrap_or_default(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Plot data for one stream of part 2: correlation per corpus.
pub fn write_window_plot<W: Write>(
    windows: &[WindowResult],
    stream: Stream,
    w: W,
) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["corpus_index", "corpus_revision", "correlation"])?;
    for win in windows {
        let r = match stream {
            Stream::Added => win.added_correlation,
            Stream::Removed => win.removed_correlation,
        };
        csv.write_record([
            win.corpus_index.to_string(),
            win.corpus_revision.as_str().to_string(),
            fmt_opt(r),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Part2Summary {
    pub order: usize,
    pub window: usize,
    pub stride: usize,
    pub seed: u64,
    pub n_windows: usize,
    pub n_failed_windows: usize,
}

#[derive(Debug, Serialize)]
pub struct GroupBoxJson {
    pub count: usize,
    pub median: Option<f64>,
    #[serde(rename = "box")]
    pub box_summary: Option<BoxSummary>,
}

#[derive(Debug, Serialize)]
pub struct GroupJson {
    pub mean_abs_delta: f64,
    pub std_abs_delta: f64,
    pub low: GroupBoxJson,
    pub medium: GroupBoxJson,
    pub high: GroupBoxJson,
}

impl From<&GroupReport> for GroupJson {
    fn from(g: &GroupReport) -> Self {
        let boxed = |count: usize, b: &Option<BoxSummary>| GroupBoxJson {
            count,
            median: b.as_ref().map(|s| s.median),
            box_summary: *b,
        };
        GroupJson {
            mean_abs_delta: g.groups.mean_abs_delta,
            std_abs_delta: g.groups.std_abs_delta,
            low: boxed(g.groups.low.len(), &g.low_box),
            medium: boxed(g.groups.medium.len(), &g.medium_box),
            high: boxed(g.groups.high.len(), &g.high_box),
        }
    }
}

/// `part3_groups.json`: thresholds and box summaries per stream, medians
/// side by side.
#[derive(Debug, Serialize)]
pub struct Part3Json {
    pub corpus_revision: String,
    pub order: usize,
    pub seed: u64,
    pub added: GroupJson,
    pub removed: GroupJson,
}

pub fn part3_json(out: &Part3Output, corpus_revision: &str, order: usize, seed: u64) -> Part3Json {
    Part3Json {
        corpus_revision: corpus_revision.to_string(),
        order,
        seed,
        added: (&out.added).into(),
        removed: (&out.removed).into(),
    }
}

/// Plot data for one stream of part 3: each scored point tagged with its
/// group, in low/medium/high order.
pub fn write_group_points<W: Write>(report: &GroupReport, w: W) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["group", "revision", "cross_entropy_bits", "delta_watts"])?;
    for (name, points) in [
        ("low", &report.groups.low),
        ("medium", &report.groups.medium),
        ("high", &report.groups.high),
    ] {
        for p in points {
            csv.write_record([
                name.to_string(),
                p.revision.as_str().to_string(),
                p.cross_entropy_bits.to_string(),
                p.delta_watts.to_string(),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}
