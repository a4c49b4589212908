//! Run configuration: built-in defaults, overridden by a TOML config file,
//! overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use wattgram::{OutlierPolicy, VcsKind};

/// Optional config file mirroring the command-line flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub repo: Option<PathBuf>,
    pub diff_dir: Option<PathBuf>,
    pub vcs: Option<String>,
    pub profile: Option<PathBuf>,
    pub corpus_rev: Option<String>,
    pub corpus_file: Option<PathBuf>,
    pub order: Option<usize>,
    pub window: Option<usize>,
    pub stride: Option<usize>,
    pub outliers: Option<String>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub extensions: Option<Vec<String>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))
            }
        }
    }
}

/// Where changesets come from.
#[derive(Debug, Clone)]
pub enum InputSource {
    Repo {
        path: PathBuf,
        vcs: VcsKind,
    },
    DiffDir {
        path: PathBuf,
        corpus_file: Option<PathBuf>,
    },
}

/// Fully resolved configuration for an analysis run.
#[derive(Debug)]
pub struct RunConfig {
    pub source: InputSource,
    pub profile: PathBuf,
    pub corpus_rev: Option<String>,
    pub order: usize,
    pub window: usize,
    pub stride: usize,
    pub outliers: OutlierPolicy,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub seed: u64,
    pub trials: usize,
    pub extensions: Vec<String>,
}

/// Flag beats config file beats default. Flags arrive as `Option`s so
/// absence is distinguishable from an explicit value.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<&T>, default: T) -> T {
    flag.or_else(|| file.cloned()).unwrap_or(default)
}

pub fn pick_opt<T: Clone>(flag: Option<T>, file: Option<&T>) -> Option<T> {
    flag.or_else(|| file.cloned())
}

pub fn parse_vcs(name: &str) -> Result<VcsKind> {
    name.parse::<VcsKind>().map_err(|e| anyhow::anyhow!(e))
}

pub fn parse_outliers(name: &str) -> Result<OutlierPolicy> {
    name.parse::<OutlierPolicy>()
        .map_err(|e| anyhow::anyhow!(e))
}

/// Validates that a required input path exists; missing inputs are usage
/// errors (exit 2), not runtime failures.
pub fn require_exists(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}
