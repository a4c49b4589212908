//! Command-line front end: changeset extraction, the three analyses, and
//! standalone language-model operations.

mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{
    parse_outliers, parse_vcs, pick, pick_opt, require_exists, FileConfig, InputSource, RunConfig,
};
use wattgram::energy::{compute_deltas, EnergyDelta};
use wattgram::lexer::{read_corpus, tokenize_lines, write_corpus, CppPathFilter, TokenStream};
use wattgram::lm::{build_model, ModelConfig, NGramModel};
use wattgram::pipeline::{
    run_part1, run_part2, run_part3, score_changesets, Part1Config, Part2Config, RepoCorpusSource,
    Stream,
};
use wattgram::report::{self, OutlierPolicy, Part2Summary};
use wattgram::vcs::{changesets_from_diff_dir, Changeset, Repository, RevisionId, VcsKind};

#[derive(Parser)]
#[command(
    name = "wattgram",
    version,
    about = "Correlates source-changeset cross-entropy with per-revision energy deltas"
)]
struct Cli {
    /// TOML config file supplying defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract per-revision diffs and token files from a repository
    Extract(SharedArgs),
    /// Run one of the three analyses over a profile and its changesets
    Analyze {
        #[command(subcommand)]
        part: AnalyzePart,
    },
    /// Build, score with, or re-export n-gram language models
    Lm {
        #[command(subcommand)]
        action: LmAction,
    },
}

#[derive(Subcommand)]
enum AnalyzePart {
    /// Static corpus: score every changeset against one codebase model
    Part1(SharedArgs),
    /// Sliding corpora: a model per revision, correlated over its window
    Part2(SharedArgs),
    /// Group changesets by the z-band of their absolute energy delta
    Part3(SharedArgs),
}

#[derive(Args, Default)]
struct SharedArgs {
    /// Repository to mine (live mode)
    #[arg(long, value_name = "PATH")]
    repo: Option<PathBuf>,
    /// Directory of <index>_<revision>.diff files (offline mode)
    #[arg(long, value_name = "DIR")]
    diff_dir: Option<PathBuf>,
    /// Version control flavour: hg or git (default git)
    #[arg(long, value_name = "KIND")]
    vcs: Option<String>,
    /// Energy profile CSV with header revision,mean_watts
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    /// Corpus revision for part 1/3 (default: first profile revision)
    #[arg(long, value_name = "REV")]
    corpus_rev: Option<String>,
    /// Pre-tokenized corpus file (offline mode)
    #[arg(long, value_name = "FILE")]
    corpus_file: Option<PathBuf>,
    /// Model order n (default 3)
    #[arg(long, value_name = "N")]
    order: Option<usize>,
    /// Window size for part 2 (default 35)
    #[arg(long, value_name = "N")]
    window: Option<usize>,
    /// Corpus stride for part 2 (default 1)
    #[arg(long, value_name = "N")]
    stride: Option<usize>,
    /// Outlier handling for plot data: on, off, or both (default both)
    #[arg(long, value_name = "POLICY")]
    outliers: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores); outputs are identical either way
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Seed for randomized baselines, recorded in every report (default 0)
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Permutation-baseline trials (default 100)
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Source file extensions, comma separated (default C++ set)
    #[arg(long, value_delimiter = ',', value_name = "EXTS")]
    extensions: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum LmAction {
    /// Train a model from a corpus file and write it as ARPA
    Build {
        #[arg(long, value_name = "FILE")]
        corpus: PathBuf,
        #[arg(long, value_name = "N", default_value_t = 3)]
        order: usize,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Score a token file against an ARPA model
    Score {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        text: PathBuf,
    },
    /// Read an ARPA model and re-emit it with normalized formatting
    Export {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(), // clap: --help exits 0, usage errors exit 2
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let file_config = FileConfig::load(cli.config.as_deref()).map_err(CliError::Usage)?;
    match cli.command {
        Command::Extract(args) => {
            let cfg = resolve(args, &file_config).map_err(CliError::Usage)?;
            cmd_extract(&cfg).map_err(CliError::Runtime)
        }
        Command::Analyze { part } => {
            let (args, which) = match part {
                AnalyzePart::Part1(a) => (a, Part::One),
                AnalyzePart::Part2(a) => (a, Part::Two),
                AnalyzePart::Part3(a) => (a, Part::Three),
            };
            let cfg = resolve(args, &file_config).map_err(CliError::Usage)?;
            validate_for_part(&cfg, which).map_err(CliError::Usage)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.jobs.unwrap_or(0))
                .build()
                .map_err(|e| CliError::Runtime(anyhow!(e)))?;
            pool.install(|| cmd_analyze(&cfg, which))
                .map_err(CliError::Runtime)
        }
        Command::Lm { action } => cmd_lm(action),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Part {
    One,
    Two,
    Three,
}

fn resolve(args: SharedArgs, file: &FileConfig) -> Result<RunConfig> {
    let source = match (
        pick_opt(args.repo, file.repo.as_ref()),
        pick_opt(args.diff_dir, file.diff_dir.as_ref()),
    ) {
        (Some(_), Some(_)) => bail!("--repo and --diff-dir are mutually exclusive"),
        (None, None) => bail!("one of --repo or --diff-dir is required"),
        (Some(path), None) => {
            require_exists(&path, "repository")?;
            let vcs = pick_opt(args.vcs, file.vcs.as_ref())
                .map(|v| parse_vcs(&v))
                .transpose()?
                .unwrap_or(VcsKind::Git);
            InputSource::Repo { path, vcs }
        }
        (None, Some(path)) => {
            require_exists(&path, "diff directory")?;
            let corpus_file = pick_opt(args.corpus_file, file.corpus_file.as_ref());
            if let Some(f) = &corpus_file {
                require_exists(f, "corpus file")?;
            }
            InputSource::DiffDir { path, corpus_file }
        }
    };
    let profile = pick_opt(args.profile, file.profile.as_ref())
        .ok_or_else(|| anyhow!("--profile is required"))?;
    require_exists(&profile, "profile")?;
    let outliers = pick_opt(args.outliers, file.outliers.as_ref())
        .map(|p| parse_outliers(&p))
        .transpose()?
        .unwrap_or(OutlierPolicy::Both);
    let order = pick(args.order, file.order.as_ref(), 3);
    if order < 1 {
        bail!("--order must be at least 1");
    }
    let window = pick(args.window, file.window.as_ref(), 35);
    if window < 2 {
        bail!("--window must be at least 2");
    }
    Ok(RunConfig {
        source,
        profile,
        corpus_rev: pick_opt(args.corpus_rev, file.corpus_rev.as_ref()),
        order,
        window,
        stride: pick(args.stride, file.stride.as_ref(), 1).max(1),
        outliers,
        out: pick_opt(args.out, file.out.as_ref()).ok_or_else(|| anyhow!("--out is required"))?,
        jobs: pick_opt(args.jobs, file.jobs.as_ref()),
        seed: pick(args.seed, file.seed.as_ref(), 0),
        trials: pick(args.trials, file.trials.as_ref(), 100),
        extensions: pick_opt(args.extensions, file.extensions.as_ref()).unwrap_or_else(|| {
            wattgram::lexer::DEFAULT_CPP_EXTENSIONS
                .iter()
                .map(|s| s.to_string())
                .collect()
        }),
    })
}

fn validate_for_part(cfg: &RunConfig, part: Part) -> Result<()> {
    match (&cfg.source, part) {
        (InputSource::DiffDir { .. }, Part::Two) => {
            bail!("analyze part2 rebuilds the corpus per revision and needs --repo")
        }
        (
            InputSource::DiffDir {
                corpus_file: None, ..
            },
            Part::One | Part::Three,
        ) => {
            bail!("offline runs need --corpus-file for the codebase model")
        }
        _ => Ok(()),
    }
}

fn path_filter(cfg: &RunConfig) -> CppPathFilter {
    CppPathFilter::new(cfg.extensions.iter().cloned())
}

struct Inputs {
    revisions: Vec<RevisionId>,
    deltas: Vec<EnergyDelta>,
    changesets: Vec<Changeset>,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let profile = wattgram::energy::load_profile(
        File::open(&cfg.profile).with_context(|| format!("opening {}", cfg.profile.display()))?,
    )?;
    let revisions = profile.revisions();
    let deltas = compute_deltas(&profile)?;
    let filter = path_filter(cfg);
    let changesets = match &cfg.source {
        InputSource::Repo { path, vcs } => {
            Repository::new(path, *vcs).extract_changesets(&revisions, |p| filter.matches(p))?
        }
        InputSource::DiffDir { path, .. } => {
            changesets_from_diff_dir(path, &revisions, |p| filter.matches(p))?
        }
    };
    Ok(Inputs {
        revisions,
        deltas,
        changesets,
    })
}

/// The corpus stream for part 1/3 plus the revision label it carries.
fn load_corpus(cfg: &RunConfig, revisions: &[RevisionId]) -> Result<(RevisionId, TokenStream)> {
    match &cfg.source {
        InputSource::Repo { path, vcs } => {
            let rev = cfg
                .corpus_rev
                .clone()
                .map(RevisionId::new)
                .unwrap_or_else(|| revisions[0].clone());
            let filter = path_filter(cfg);
            let corpus =
                Repository::new(path, *vcs).checkout_corpus(&rev, |p| filter.matches(p))?;
            Ok((rev, corpus))
        }
        InputSource::DiffDir { corpus_file, .. } => {
            let file = corpus_file.as_ref().expect("validated earlier");
            let corpus = read_corpus(
                BufReader::new(File::open(file)?),
                file.display().to_string(),
            )?;
            let label = cfg.corpus_rev.clone().unwrap_or_else(|| {
                file.file_stem()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned()
            });
            Ok((RevisionId::new(label), corpus))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn cmd_extract(cfg: &RunConfig) -> Result<()> {
    let InputSource::Repo { path, vcs } = &cfg.source else {
        bail!("extract reads a live repository; pass --repo");
    };
    let repo = Repository::new(path, *vcs);
    let profile = wattgram::energy::load_profile(File::open(&cfg.profile)?)?;
    let revisions = profile.revisions();
    let filter = path_filter(cfg);
    fs::create_dir_all(&cfg.out)?;
    let mut written = 0usize;
    for (i, pair) in revisions.windows(2).enumerate() {
        let text = repo.diff_text(&pair[0], &pair[1])?;
        let stem = format!("{:04}_{}", i, pair[1]);
        fs::write(cfg.out.join(format!("{stem}.diff")), &text)?;
        let content = wattgram::parse_unified_diff(&text, |p| filter.matches(p))?;
        write_corpus(
            &tokenize_lines(&content.added_lines),
            create(&cfg.out.join(format!("{stem}.added.txt")))?,
        )?;
        write_corpus(
            &tokenize_lines(&content.removed_lines),
            create(&cfg.out.join(format!("{stem}.removed.txt")))?,
        )?;
        written += 1;
    }
    if let Some(rev) = &cfg.corpus_rev {
        let rev = RevisionId::new(rev.clone());
        let corpus = repo.checkout_corpus(&rev, |p| filter.matches(p))?;
        write_corpus(&corpus, create(&cfg.out.join(format!("corpus_{rev}.txt")))?)?;
    }
    eprintln!("extracted {written} changesets to {}", cfg.out.display());
    Ok(())
}

fn cmd_analyze(cfg: &RunConfig, part: Part) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    match part {
        Part::One => {
            let (corpus_rev, corpus) = load_corpus(cfg, &inputs.revisions)?;
            let out = run_part1(
                &corpus,
                &corpus_rev,
                &inputs.changesets,
                &inputs.deltas,
                Part1Config {
                    order: cfg.order,
                    permutation_trials: cfg.trials,
                    seed: cfg.seed,
                },
            )?;
            report::write_part1_records(&out.records, create(&cfg.out.join("part1_records.csv"))?)?;
            report::write_json(
                &report::part1_summary(&out, cfg.outliers, cfg.trials),
                create(&cfg.out.join("part1_summary.json"))?,
            )?;
            for stream in [Stream::Added, Stream::Removed] {
                let name = format!("part1_scatter_{}.csv", stream.name());
                report::write_scatter(
                    &out.records,
                    stream,
                    cfg.outliers,
                    create(&cfg.out.join(name))?,
                )?;
            }
            let fmt = |r: Option<f64>| {
                r.map(|v| v.to_string())
                    .unwrap_or_else(|| "undefined".into())
            };
            eprintln!(
                "part1: {} records, added r = {}, removed r = {}",
                out.records.len(),
                fmt(out.added.r_all),
                fmt(out.removed.r_all),
            );
        }
        Part::Two => {
            let InputSource::Repo { path, vcs } = &cfg.source else {
                bail!("part2 needs --repo");
            };
            let source = RepoCorpusSource {
                repo: Repository::new(path, *vcs),
                filter: path_filter(cfg),
            };
            let windows = run_part2(
                &source,
                &inputs.revisions,
                &inputs.changesets,
                &inputs.deltas,
                Part2Config {
                    order: cfg.order,
                    window: cfg.window,
                    stride: cfg.stride,
                },
            )?;
            if windows.is_empty() {
                eprintln!(
                    "warning: no window of {} changesets fits in {} revisions",
                    cfg.window,
                    inputs.revisions.len()
                );
            }
            report::write_part2_windows(&windows, create(&cfg.out.join("part2_windows.csv"))?)?;
            report::write_json(
                &Part2Summary {
                    order: cfg.order,
                    window: cfg.window,
                    stride: cfg.stride,
                    seed: cfg.seed,
                    n_windows: windows.len(),
                    n_failed_windows: windows.iter().filter(|w| w.note.is_some()).count(),
                },
                create(&cfg.out.join("part2_summary.json"))?,
            )?;
            for stream in [Stream::Added, Stream::Removed] {
                let name = format!("part2_corr_{}.csv", stream.name());
                report::write_window_plot(&windows, stream, create(&cfg.out.join(name))?)?;
            }
            eprintln!("part2: {} windows", windows.len());
        }
        Part::Three => {
            let (corpus_rev, corpus) = load_corpus(cfg, &inputs.revisions)?;
            let model = build_model(&corpus, ModelConfig::with_order(cfg.order))?;
            let records = score_changesets(&model, &inputs.changesets, &inputs.deltas)?;
            let out = run_part3(&records)?;
            report::write_json(
                &report::part3_json(&out, corpus_rev.as_str(), cfg.order, cfg.seed),
                create(&cfg.out.join("part3_groups.json"))?,
            )?;
            report::write_group_points(&out.added, create(&cfg.out.join("part3_box_added.csv"))?)?;
            report::write_group_points(
                &out.removed,
                create(&cfg.out.join("part3_box_removed.csv"))?,
            )?;
            eprintln!(
                "part3: added groups {}/{}/{}, removed groups {}/{}/{}",
                out.added.groups.low.len(),
                out.added.groups.medium.len(),
                out.added.groups.high.len(),
                out.removed.groups.low.len(),
                out.removed.groups.medium.len(),
                out.removed.groups.high.len(),
            );
        }
    }
    Ok(())
}

fn cmd_lm(action: LmAction) -> Result<(), CliError> {
    match action {
        LmAction::Build { corpus, order, out } => {
            require_exists(&corpus, "corpus file").map_err(CliError::Usage)?;
            let run = || -> Result<()> {
                let stream = read_corpus(
                    BufReader::new(File::open(&corpus)?),
                    corpus.display().to_string(),
                )?;
                let model = build_model(&stream, ModelConfig::with_order(order))?;
                model.export_arpa(create(&out)?)?;
                println!(
                    "built order-{order} model: {} sentences, {} tokens, vocabulary {}",
                    model.sentence_count(),
                    model.token_count(),
                    model.vocab_size()
                );
                Ok(())
            };
            run().map_err(CliError::Runtime)
        }
        LmAction::Score { model, text } => {
            require_exists(&model, "model file").map_err(CliError::Usage)?;
            require_exists(&text, "text file").map_err(CliError::Usage)?;
            let run = || -> Result<()> {
                let lm = NGramModel::import_arpa(BufReader::new(File::open(&model)?))?;
                let stream = read_corpus(
                    BufReader::new(File::open(&text)?),
                    text.display().to_string(),
                )?;
                let result = lm.cross_entropy(&stream)?;
                println!(
                    "cross_entropy_bits={} perplexity={} tokens={} oov={}",
                    result.cross_entropy_bits,
                    result.perplexity,
                    result.token_count,
                    result.oov_count
                );
                Ok(())
            };
            run().map_err(CliError::Runtime)
        }
        LmAction::Export { model, out } => {
            require_exists(&model, "model file").map_err(CliError::Usage)?;
            let run = || -> Result<()> {
                let lm = NGramModel::import_arpa(BufReader::new(File::open(&model)?))?;
                lm.export_arpa(create(&out)?)?;
                Ok(())
            };
            run().map_err(CliError::Runtime)
        }
    }
}
