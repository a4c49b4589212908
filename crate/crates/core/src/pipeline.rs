//! The three analysis designs: static-corpus correlation, sliding-window
//! corpora, and grouping by the size of the energy change.

use rayon::prelude::*;
use thiserror::Error;

use crate::energy::EnergyDelta;
use crate::lexer::{tokenize_lines, CppPathFilter, TokenStream};
use crate::lm::{build_model, LmError, ModelConfig, NGramModel};
use crate::stats::{self, BoxSummary, EntropyPoint, GroupedEntropies, StatsError};
use crate::vcs::{Changeset, Repository, RevisionId, VcsError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("changesets and deltas do not align: {0}")]
    JoinMismatch(String),
    #[error("fewer than 2 scorable records in every stream")]
    TooFewRecords,
    #[error("part 3 ({stream} stream): {source}")]
    Grouping {
        stream: &'static str,
        source: StatsError,
    },
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Vcs(#[from] VcsError),
}

/// Why one side of a changeset was not scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    /// The diff contained no lines for this stream.
    NoLines,
    /// Lines existed but lexed to nothing (comments, blanks).
    EmptyAfterLexing,
}

/// Score of one changeset stream (added or removed lines).
#[derive(Debug, Clone, PartialEq)]
pub struct StreamScore {
    pub entropy_bits: Option<f64>,
    pub token_count: usize,
    pub oov_count: usize,
    pub skip: Option<SkipReason>,
}

impl StreamScore {
    fn skipped(reason: SkipReason) -> Self {
        StreamScore {
            entropy_bits: None,
            token_count: 0,
            oov_count: 0,
            skip: Some(reason),
        }
    }
}

/// One joined (revision, entropy, energy delta) record.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyRecord {
    pub revision: RevisionId,
    pub delta_watts: f64,
    pub added: StreamScore,
    pub removed: StreamScore,
}

fn score_stream(model: &NGramModel, lines: &[String], no_lines: SkipReason) -> StreamScore {
    if lines.is_empty() {
        return StreamScore::skipped(no_lines);
    }
    let stream: TokenStream = tokenize_lines(lines);
    if stream.is_empty() {
        return StreamScore::skipped(SkipReason::EmptyAfterLexing);
    }
    let result = model
        .cross_entropy(&stream)
        .expect("non-empty stream is scorable");
    StreamScore {
        entropy_bits: Some(result.cross_entropy_bits),
        token_count: result.token_count,
        oov_count: result.oov_count,
        skip: None,
    }
}

fn check_join(changesets: &[Changeset], deltas: &[EnergyDelta]) -> Result<(), PipelineError> {
    if changesets.len() != deltas.len() {
        return Err(PipelineError::JoinMismatch(format!(
            "{} changesets vs {} deltas",
            changesets.len(),
            deltas.len()
        )));
    }
    for (c, d) in changesets.iter().zip(deltas) {
        if c.revision != d.revision {
            return Err(PipelineError::JoinMismatch(format!(
                "changeset {} paired with delta {}",
                c.revision, d.revision
            )));
        }
    }
    Ok(())
}

/// Scores every changeset against `model` and joins with the deltas.
/// Changesets and deltas must align one-to-one by revision.
pub fn score_changesets(
    model: &NGramModel,
    changesets: &[Changeset],
    deltas: &[EnergyDelta],
) -> Result<Vec<EntropyRecord>, PipelineError> {
    check_join(changesets, deltas)?;
    Ok(changesets
        .par_iter()
        .zip(deltas.par_iter())
        .map(|(c, d)| EntropyRecord {
            revision: c.revision.clone(),
            delta_watts: d.delta_watts,
            added: score_stream(model, &c.added_lines, SkipReason::NoLines),
            removed: score_stream(model, &c.removed_lines, SkipReason::NoLines),
        })
        .collect())
}

/// Which stream of a record to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Added,
    Removed,
}

impl Stream {
    pub fn name(self) -> &'static str {
        match self {
            Stream::Added => "added",
            Stream::Removed => "removed",
        }
    }

    pub fn of(self, record: &EntropyRecord) -> &StreamScore {
        match self {
            Stream::Added => &record.added,
            Stream::Removed => &record.removed,
        }
    }
}

/// The records of one stream that actually carry an entropy.
pub fn defined_points(records: &[EntropyRecord], stream: Stream) -> Vec<EntropyPoint> {
    records
        .iter()
        .filter_map(|r| {
            stream.of(r).entropy_bits.map(|h| EntropyPoint {
                revision: r.revision.clone(),
                cross_entropy_bits: h,
                delta_watts: r.delta_watts,
            })
        })
        .collect()
}

fn correlation_of(points: &[EntropyPoint]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let x: Vec<f64> = points.iter().map(|p| p.cross_entropy_bits).collect();
    let y: Vec<f64> = points.iter().map(|p| p.delta_watts).collect();
    stats::pearson(&x, &y).ok()
}

/// Correlation summary for one stream of part 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamCorrelation {
    pub n_scored: usize,
    pub n_skipped: usize,
    pub r_all: Option<f64>,
    pub n_without_outliers: usize,
    pub r_without_outliers: Option<f64>,
    pub outliers_flagged: usize,
    pub permutation_mean_abs_r: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Part1Config {
    pub order: usize,
    pub permutation_trials: usize,
    pub seed: u64,
}

impl Default for Part1Config {
    fn default() -> Self {
        Part1Config {
            order: 3,
            permutation_trials: 100,
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct Part1Output {
    pub corpus_revision: RevisionId,
    pub order: usize,
    pub seed: u64,
    pub records: Vec<EntropyRecord>,
    pub added: StreamCorrelation,
    pub removed: StreamCorrelation,
}

fn summarize_stream(
    records: &[EntropyRecord],
    stream: Stream,
    trials: usize,
    seed: u64,
) -> StreamCorrelation {
    let points = defined_points(records, stream);
    let (kept, flagged) = stats::filter_entropy_outliers(&points);
    let x: Vec<f64> = points.iter().map(|p| p.cross_entropy_bits).collect();
    let y: Vec<f64> = points.iter().map(|p| p.delta_watts).collect();
    StreamCorrelation {
        n_scored: points.len(),
        n_skipped: records.len() - points.len(),
        r_all: correlation_of(&points),
        n_without_outliers: kept.len(),
        r_without_outliers: correlation_of(&kept),
        outliers_flagged: flagged.len(),
        permutation_mean_abs_r: stats::permutation_mean_abs_r(&x, &y, trials, seed),
    }
}

/// Part 1: one static corpus model, every changeset scored against it.
pub fn run_part1(
    corpus: &TokenStream,
    corpus_revision: &RevisionId,
    changesets: &[Changeset],
    deltas: &[EnergyDelta],
    config: Part1Config,
) -> Result<Part1Output, PipelineError> {
    let model = build_model(corpus, ModelConfig::with_order(config.order))?;
    let records = score_changesets(&model, changesets, deltas)?;
    let added = summarize_stream(
        &records,
        Stream::Added,
        config.permutation_trials,
        config.seed,
    );
    let removed = summarize_stream(
        &records,
        Stream::Removed,
        config.permutation_trials,
        config.seed,
    );
    if added.n_scored < 2 && removed.n_scored < 2 {
        return Err(PipelineError::TooFewRecords);
    }
    Ok(Part1Output {
        corpus_revision: corpus_revision.clone(),
        order: config.order,
        seed: config.seed,
        records,
        added,
        removed,
    })
}

/// Supplies the corpus stream for a given revision. Implemented by live
/// repositories and by in-memory fixtures.
pub trait CorpusSource: Sync {
    fn corpus_at(&self, revision: &RevisionId) -> Result<TokenStream, VcsError>;
}

/// Live-repository corpus source.
pub struct RepoCorpusSource {
    pub repo: Repository,
    pub filter: CppPathFilter,
}

impl CorpusSource for RepoCorpusSource {
    fn corpus_at(&self, revision: &RevisionId) -> Result<TokenStream, VcsError> {
        self.repo
            .checkout_corpus(revision, |p| self.filter.matches(p))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Part2Config {
    pub order: usize,
    pub window: usize,
    pub stride: usize,
}

impl Default for Part2Config {
    fn default() -> Self {
        Part2Config {
            order: 3,
            window: 35,
            stride: 1,
        }
    }
}

/// Result of one sliding-window job: the model built at `corpus_revision`
/// scored against the following `window_size` changesets.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub corpus_index: usize,
    pub corpus_revision: RevisionId,
    pub window_size: usize,
    pub added_correlation: Option<f64>,
    pub n_added_points: usize,
    pub removed_correlation: Option<f64>,
    pub n_removed_points: usize,
    /// Populated when the corpus checkout or model build failed; the window
    /// is annotated rather than aborting the run.
    pub note: Option<String>,
}

/// Part 2: a model per corpus revision, each scoring its subsequent window
/// of changesets. Revisions lacking a full window are omitted.
pub fn run_part2(
    source: &dyn CorpusSource,
    revisions: &[RevisionId],
    changesets: &[Changeset],
    deltas: &[EnergyDelta],
    config: Part2Config,
) -> Result<Vec<WindowResult>, PipelineError> {
    check_join(changesets, deltas)?;
    if revisions.len() != changesets.len() + 1 {
        return Err(PipelineError::JoinMismatch(format!(
            "{} revisions vs {} changesets",
            revisions.len(),
            changesets.len()
        )));
    }
    let window = config.window;
    let stride = config.stride.max(1);
    let indices: Vec<usize> = (0..revisions.len())
        .step_by(stride)
        .take_while(|i| i + window < revisions.len())
        .collect();
    let results: Vec<WindowResult> = indices
        .par_iter()
        .map(|&i| {
            let corpus_revision = revisions[i].clone();
            let annotate = |note: String| WindowResult {
                corpus_index: i,
                corpus_revision: corpus_revision.clone(),
                window_size: window,
                added_correlation: None,
                n_added_points: 0,
                removed_correlation: None,
                n_removed_points: 0,
                note: Some(note),
            };
            let corpus = match source.corpus_at(&corpus_revision) {
                Ok(c) => c,
                Err(e) => return annotate(e.to_string()),
            };
            let model = match build_model(&corpus, ModelConfig::with_order(config.order)) {
                Ok(m) => m,
                Err(e) => return annotate(e.to_string()),
            };
            // changeset j belongs to revision j+1: the window after corpus
            // revision i covers changeset indices i .. i+window
            let slice = &changesets[i..i + window];
            let delta_slice = &deltas[i..i + window];
            let records =
                score_changesets(&model, slice, delta_slice).expect("alignment already checked");
            let added = defined_points(&records, Stream::Added);
            let removed = defined_points(&records, Stream::Removed);
            WindowResult {
                corpus_index: i,
                corpus_revision,
                window_size: window,
                added_correlation: correlation_of(&added),
                n_added_points: added.len(),
                removed_correlation: correlation_of(&removed),
                n_removed_points: removed.len(),
                note: None,
            }
        })
        .collect();
    Ok(results)
}

/// Box summaries of one stream's groups.
#[derive(Debug, Clone)]
pub struct GroupReport {
    pub groups: GroupedEntropies,
    pub low_box: Option<BoxSummary>,
    pub medium_box: Option<BoxSummary>,
    pub high_box: Option<BoxSummary>,
}

#[derive(Debug)]
pub struct Part3Output {
    pub added: GroupReport,
    pub removed: GroupReport,
}

fn group_stream(records: &[EntropyRecord], stream: Stream) -> Result<GroupReport, PipelineError> {
    let points = defined_points(records, stream);
    let groups = stats::group_by_abs_delta(&points).map_err(|source| PipelineError::Grouping {
        stream: stream.name(),
        source,
    })?;
    let summarize = |points: &[EntropyPoint]| -> Option<BoxSummary> {
        let values: Vec<f64> = points.iter().map(|p| p.cross_entropy_bits).collect();
        stats::box_summary(&values).ok()
    };
    Ok(GroupReport {
        low_box: summarize(&groups.low),
        medium_box: summarize(&groups.medium),
        high_box: summarize(&groups.high),
        groups,
    })
}

/// Part 3: group each stream's scored records by the z-band of |delta|.
pub fn run_part3(records: &[EntropyRecord]) -> Result<Part3Output, PipelineError> {
    Ok(Part3Output {
        added: group_stream(records, Stream::Added)?,
        removed: group_stream(records, Stream::Removed)?,
    })
}
