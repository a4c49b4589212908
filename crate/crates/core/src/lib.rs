//! Mines software repositories, models codebases with n-gram language
//! models, and correlates changeset cross-entropy with per-revision energy
//! deltas.
//!
//! The pieces compose into three analysis designs:
//!
//! 1. score every changeset against one static codebase model and correlate
//!    entropy with the change in mean watts,
//! 2. rebuild the model at each revision and correlate over the following
//!    window of changesets,
//! 3. band changesets by how unusual their energy change is and compare the
//!    groups' entropy distributions.

pub mod energy;
pub mod lexer;
pub mod lm;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod vcs;

pub use energy::{compute_deltas, load_profile, EnergyDelta, EnergyProfile};
pub use lexer::{
    is_cpp_path, read_corpus, tokenize_lines, tokenize_source, write_corpus, CppPathFilter, Token,
    TokenKind, TokenStream,
};
pub use lm::{build_model, EntropyResult, LmError, ModelConfig, NGramModel, Smoothing};
pub use pipeline::{
    run_part1, run_part2, run_part3, score_changesets, CorpusSource, EntropyRecord, Part1Config,
    Part1Output, Part2Config, Part3Output, PipelineError, WindowResult,
};
pub use report::OutlierPolicy;
pub use stats::{box_summary, filter_entropy_outliers, group_by_abs_delta, pearson, BoxSummary};
pub use vcs::{
    changesets_from_diff_dir, parse_unified_diff, Changeset, Repository, RevisionId, VcsError,
    VcsKind,
};
