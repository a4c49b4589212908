//! Changeset extraction from version control and from pre-generated diff
//! directories, plus historical corpus checkout.
//!
//! VCS access always goes through the `hg`/`git` executables. The offline
//! mode reads `<index>_<revision>.diff` files instead, so analyses can be
//! reproduced without the repository.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexer::{tokenize_bytes, TokenStream};

/// A version-control revision hash.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RevisionId(String);

impl RevisionId {
    pub fn new(id: impl Into<String>) -> Self {
        RevisionId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RevisionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One revision's added and removed lines, already filtered to source files.
#[derive(Debug, Clone, PartialEq)]
pub struct Changeset {
    pub revision: RevisionId,
    pub parent: RevisionId,
    pub added_lines: Vec<String>,
    pub removed_lines: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VcsKind {
    Hg,
    Git,
}

impl VcsKind {
    pub fn executable(self) -> &'static str {
        match self {
            VcsKind::Hg => "hg",
            VcsKind::Git => "git",
        }
    }
}

impl std::str::FromStr for VcsKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hg" => Ok(VcsKind::Hg),
            "git" => Ok(VcsKind::Git),
            other => Err(format!("unknown vcs kind {other:?} (expected hg or git)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum VcsError {
    #[error("malformed hunk header at line {line}: {content:?}")]
    MalformedHunk { line: usize, content: String },
    #[error("unexpected line {line} inside hunk: {content:?}")]
    UnexpectedHunkLine { line: usize, content: String },
    #[error("unknown revision {revision}")]
    UnknownRevision { revision: String },
    #[error("{command} failed: {detail}")]
    Process { command: String, detail: String },
    #[error("revision {revision} has no files matching the source filter")]
    EmptyCorpus { revision: String },
    #[error("diff directory {dir}: {problem}")]
    DiffDir { dir: PathBuf, problem: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Added and removed line bodies parsed out of one unified diff.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiffContent {
    pub added_lines: Vec<String>,
    pub removed_lines: Vec<String>,
}

/// Decodes git's C-style path quoting: `"a/sp ace\303\251.cpp"`.
fn unquote_c_style(quoted: &str) -> String {
    let inner = quoted
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(quoted);
    let mut bytes: Vec<u8> = Vec::with_capacity(inner.len());
    let mut it = inner.bytes().peekable();
    while let Some(b) = it.next() {
        if b != b'\\' {
            bytes.push(b);
            continue;
        }
        match it.next() {
            Some(b'n') => bytes.push(b'\n'),
            Some(b't') => bytes.push(b'\t'),
            Some(b'"') => bytes.push(b'"'),
            Some(b'\\') => bytes.push(b'\\'),
            Some(d @ b'0'..=b'7') => {
                let mut value = (d - b'0') as u32;
                for _ in 0..2 {
                    match it.peek() {
                        Some(&o @ b'0'..=b'7') => {
                            value = value * 8 + (o - b'0') as u32;
                            it.next();
                        }
                        _ => break,
                    }
                }
                bytes.push(value as u8);
            }
            Some(other) => bytes.push(other),
            None => bytes.push(b'\\'),
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

/// Strips git/hg `a/`-style prefixes, classic-diff timestamp suffixes, and
/// git's quoting of unusual paths.
fn clean_diff_path(raw: &str) -> String {
    let raw = raw.trim();
    let path = if raw.starts_with('"') {
        unquote_c_style(raw)
    } else {
        raw.split('\t').next().unwrap_or(raw).trim().to_string()
    };
    if path == "/dev/null" {
        return path;
    }
    for prefix in ["a/", "b/"] {
        if let Some(rest) = path.strip_prefix(prefix) {
            return rest.to_string();
        }
    }
    path
}

/// Parses `@@ -a[,b] +c[,d] @@`, returning the old and new line counts.
fn parse_hunk_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix("@@ ")?;
    let (ranges, _) = rest.split_once(" @@")?;
    let (old, new) = ranges.split_once(' ')?;
    let old = old.strip_prefix('-')?;
    let new = new.strip_prefix('+')?;
    let count_of = |range: &str| -> Option<usize> {
        match range.split_once(',') {
            Some((start, count)) => {
                start.parse::<usize>().ok()?;
                count.parse::<usize>().ok()
            }
            None => {
                range.parse::<usize>().ok()?;
                Some(1)
            }
        }
    };
    Some((count_of(old)?, count_of(new)?))
}

/// Walks a unified diff (git or hg flavour) and collects the added and
/// removed line bodies of every file whose path passes `path_filter`.
/// Hunk headers, file headers, and context lines are discarded. Lines are
/// attributed to the new path; deletions fall back to the old path.
pub fn parse_unified_diff<F>(text: &str, path_filter: F) -> Result<DiffContent, VcsError>
where
    F: Fn(&str) -> bool,
{
    let mut content = DiffContent::default();
    let mut old_path: Option<String> = None;
    let mut new_path: Option<String> = None;
    let mut include = false;
    let mut old_left = 0usize;
    let mut new_left = 0usize;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if old_left > 0 || new_left > 0 {
            if line.starts_with('\\') {
                continue; // "\ No newline at end of file"
            }
            let mut chars = line.chars();
            let tag = chars.next();
            let body = chars.as_str();
            match tag {
                Some('+') if new_left > 0 => {
                    new_left -= 1;
                    if include {
                        content.added_lines.push(body.to_string());
                    }
                }
                Some('-') if old_left > 0 => {
                    old_left -= 1;
                    if include {
                        content.removed_lines.push(body.to_string());
                    }
                }
                Some(' ') if old_left > 0 && new_left > 0 => {
                    old_left -= 1;
                    new_left -= 1;
                }
                // some tools emit context on blank lines with the space trimmed
                None if old_left > 0 && new_left > 0 => {
                    old_left -= 1;
                    new_left -= 1;
                }
                _ => {
                    return Err(VcsError::UnexpectedHunkLine {
                        line: lineno,
                        content: line.to_string(),
                    })
                }
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("+++ ") {
            new_path = Some(clean_diff_path(rest));
        } else if let Some(rest) = line.strip_prefix("--- ") {
            old_path = Some(clean_diff_path(rest));
        } else if line.starts_with("@@") {
            let (old_count, new_count) =
                parse_hunk_header(line).ok_or_else(|| VcsError::MalformedHunk {
                    line: lineno,
                    content: line.to_string(),
                })?;
            let effective = match new_path.as_deref() {
                Some("/dev/null") | None => old_path.as_deref(),
                other => other,
            };
            include = effective.map(&path_filter).unwrap_or(false);
            old_left = old_count;
            new_left = new_count;
        } else if line.starts_with("diff ") {
            old_path = None;
            new_path = None;
        }
        // anything else outside a hunk is header noise: index lines, mode
        // changes, rename notes, "Binary files ... differ"
    }
    Ok(content)
}

/// A repository reachable through a VCS executable.
#[derive(Debug, Clone)]
pub struct Repository {
    pub path: PathBuf,
    pub kind: VcsKind,
}

impl Repository {
    pub fn new(path: impl Into<PathBuf>, kind: VcsKind) -> Self {
        Repository {
            path: path.into(),
            kind,
        }
    }

    fn command(&self) -> Command {
        let mut cmd = Command::new(self.kind.executable());
        match self.kind {
            VcsKind::Git => {
                cmd.arg("-C").arg(&self.path);
            }
            VcsKind::Hg => {
                cmd.arg("-R").arg(&self.path);
            }
        }
        cmd
    }

    fn run(&self, args: &[&str]) -> Result<Vec<u8>, VcsError> {
        let mut cmd = self.command();
        cmd.args(args);
        let rendered = format!("{} {}", self.kind.executable(), args.join(" "));
        let output = cmd.output().map_err(|e| VcsError::Process {
            command: rendered.clone(),
            detail: e.to_string(),
        })?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            if stderr.contains("unknown revision") {
                for arg in args {
                    if stderr.contains(*arg) {
                        return Err(VcsError::UnknownRevision {
                            revision: arg.to_string(),
                        });
                    }
                }
            }
            return Err(VcsError::Process {
                command: rendered,
                detail: format!("{}: {}", output.status, stderr.trim()),
            });
        }
        Ok(output.stdout)
    }

    /// Raw unified diff text between two revisions.
    pub fn diff_text(&self, from: &RevisionId, to: &RevisionId) -> Result<String, VcsError> {
        let bytes = match self.kind {
            VcsKind::Hg => {
                self.run(&["diff", "-r", &format!("{}:{}", from.as_str(), to.as_str())])?
            }
            VcsKind::Git => self.run(&[
                "diff",
                "--no-color",
                "--no-ext-diff",
                "--no-textconv",
                from.as_str(),
                to.as_str(),
            ])?,
        };
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    /// One changeset per consecutive revision pair, in profile order.
    pub fn extract_changesets<F>(
        &self,
        revisions: &[RevisionId],
        path_filter: F,
    ) -> Result<Vec<Changeset>, VcsError>
    where
        F: Fn(&str) -> bool,
    {
        let mut changesets = Vec::new();
        for pair in revisions.windows(2) {
            let text = self.diff_text(&pair[0], &pair[1])?;
            let content = parse_unified_diff(&text, &path_filter)?;
            changesets.push(Changeset {
                revision: pair[1].clone(),
                parent: pair[0].clone(),
                added_lines: content.added_lines,
                removed_lines: content.removed_lines,
            });
        }
        Ok(changesets)
    }

    fn list_files(&self, revision: &RevisionId) -> Result<Vec<String>, VcsError> {
        let bytes = match self.kind {
            VcsKind::Git => self.run(&["ls-tree", "-r", "--name-only", "-z", revision.as_str()])?,
            VcsKind::Hg => self.run(&["files", "-0", "-r", revision.as_str()])?,
        };
        Ok(bytes
            .split(|&b| b == 0)
            .filter(|chunk| !chunk.is_empty())
            .map(|chunk| String::from_utf8_lossy(chunk).into_owned())
            .collect())
    }

    fn file_bytes(&self, revision: &RevisionId, path: &str) -> Result<Vec<u8>, VcsError> {
        match self.kind {
            VcsKind::Git => self.run(&["show", &format!("{}:{}", revision.as_str(), path)]),
            VcsKind::Hg => self.run(&["cat", "-r", revision.as_str(), path]),
        }
    }

    /// Lexes every file passing `path_filter` at `revision` into one corpus
    /// stream. Files are read straight out of the object store, so no
    /// working-copy checkout is created or cleaned up.
    pub fn checkout_corpus<F>(
        &self,
        revision: &RevisionId,
        path_filter: F,
    ) -> Result<TokenStream, VcsError>
    where
        F: Fn(&str) -> bool,
    {
        let mut files: Vec<String> = self
            .list_files(revision)?
            .into_iter()
            .filter(|p| path_filter(p))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(VcsError::EmptyCorpus {
                revision: revision.as_str().to_string(),
            });
        }
        let mut corpus = TokenStream::new(format!("{}@{}", self.path.display(), revision));
        for path in &files {
            let bytes = self.file_bytes(revision, path)?;
            corpus.extend_from(&tokenize_bytes(&bytes));
        }
        Ok(corpus)
    }
}

/// One entry of an offline diff directory.
#[derive(Debug, Clone)]
pub struct DiffFile {
    pub index: usize,
    pub revision: RevisionId,
    pub path: PathBuf,
}

/// Lists `<index>_<revision>.diff` files sorted by index.
pub fn list_diff_dir(dir: &Path) -> Result<Vec<DiffFile>, VcsError> {
    let problem = |p: String| VcsError::DiffDir {
        dir: dir.to_path_buf(),
        problem: p,
    };
    let mut files = Vec::new();
    let mut seen = HashSet::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(stem) = name.strip_suffix(".diff") else {
            continue;
        };
        let Some((index, revision)) = stem.split_once('_') else {
            return Err(problem(format!("{name:?} is not <index>_<revision>.diff")));
        };
        let index: usize = index
            .parse()
            .map_err(|_| problem(format!("{name:?} has a non-numeric index")))?;
        if !seen.insert(index) {
            return Err(problem(format!("duplicate diff index {index}")));
        }
        files.push(DiffFile {
            index,
            revision: RevisionId::new(revision),
            path: entry.path(),
        });
    }
    if files.is_empty() {
        return Err(problem("no .diff files found".to_string()));
    }
    files.sort_by_key(|f| f.index);
    Ok(files)
}

/// Builds changesets from an offline diff directory, validating the file
/// sequence against the profile's revision order.
pub fn changesets_from_diff_dir<F>(
    dir: &Path,
    revisions: &[RevisionId],
    path_filter: F,
) -> Result<Vec<Changeset>, VcsError>
where
    F: Fn(&str) -> bool,
{
    let problem = |p: String| VcsError::DiffDir {
        dir: dir.to_path_buf(),
        problem: p,
    };
    let files = list_diff_dir(dir)?;
    if files.len() != revisions.len().saturating_sub(1) {
        return Err(problem(format!(
            "profile lists {} revisions ({} changesets) but directory holds {} diffs",
            revisions.len(),
            revisions.len().saturating_sub(1),
            files.len()
        )));
    }
    let mut changesets = Vec::new();
    for (i, file) in files.iter().enumerate() {
        let expected = &revisions[i + 1];
        if &file.revision != expected {
            return Err(problem(format!(
                "diff {} names revision {} but the profile expects {expected}",
                file.path.display(),
                file.revision
            )));
        }
        let text = std::fs::read(&file.path)?;
        let content = parse_unified_diff(&String::from_utf8_lossy(&text), &path_filter)?;
        changesets.push(Changeset {
            revision: expected.clone(),
            parent: revisions[i].clone(),
            added_lines: content.added_lines,
            removed_lines: content.removed_lines,
        });
    }
    Ok(changesets)
}
