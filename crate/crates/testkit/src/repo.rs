//! Git fixture repositories built through the real `git` executable.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;
use wattgram::vcs::RevisionId;

/// One commit: files written (or overwritten) and files removed.
#[derive(Debug, Clone, Default)]
pub struct CommitSpec {
    pub write: Vec<(&'static str, String)>,
    pub remove: Vec<&'static str>,
}

pub struct FixtureRepo {
    /// Keeps the directory alive for the test's duration.
    pub dir: TempDir,
    pub path: PathBuf,
    pub revisions: Vec<RevisionId>,
}

fn git(repo: &Path, args: &[&str]) -> io::Result<String> {
    let output = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_AUTHOR_NAME", "fixture")
        .env("GIT_AUTHOR_EMAIL", "fixture@example.invalid")
        .env("GIT_COMMITTER_NAME", "fixture")
        .env("GIT_COMMITTER_EMAIL", "fixture@example.invalid")
        .env("GIT_AUTHOR_DATE", "2005-04-07T22:13:13 +0000")
        .env("GIT_COMMITTER_DATE", "2005-04-07T22:13:13 +0000")
        .output()?;
    if !output.status.success() {
        return Err(io::Error::other(format!(
            "git {args:?} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        )));
    }
    Ok(String::from_utf8_lossy(&output.stdout).trim().to_string())
}

/// Builds a repository with one commit per spec and returns it with the
/// revision list in history order.
pub fn build_git_repo(commits: &[CommitSpec]) -> io::Result<FixtureRepo> {
    let dir = TempDir::new()?;
    let path = dir.path().join("repo");
    fs::create_dir(&path)?;
    git(&path, &["init", "-q"])?;
    let mut revisions = Vec::new();
    for (i, spec) in commits.iter().enumerate() {
        for (rel, content) in &spec.write {
            let target = path.join(rel);
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(target, content)?;
        }
        for rel in &spec.remove {
            fs::remove_file(path.join(rel))?;
        }
        git(&path, &["add", "-A"])?;
        git(&path, &["commit", "-q", "-m", &format!("commit {i}")])?;
        revisions.push(RevisionId::new(git(&path, &["rev-parse", "HEAD"])?));
    }
    Ok(FixtureRepo {
        dir,
        path,
        revisions,
    })
}

/// Expected added/removed C++ lines for each changeset of the three-commit
/// fixture, in diff order.
#[derive(Debug, Clone)]
pub struct PlantedEdits {
    pub added: Vec<Vec<&'static str>>,
    pub removed: Vec<Vec<&'static str>>,
}

/// A three-commit repository whose C++ edits are known exactly. Markdown
/// edits ride along to exercise path filtering.
pub fn three_commit_fixture() -> io::Result<(FixtureRepo, PlantedEdits)> {
    let commits = vec![
        CommitSpec {
            write: vec![
                ("src/main.cpp", "int main() {\n  return 0;\n}\n".to_string()),
                ("notes.md", "alpha\n".to_string()),
            ],
            ..Default::default()
        },
        CommitSpec {
            write: vec![
                (
                    "src/main.cpp",
                    "int main() {\n  int x = 1;\n  return 0;\n}\n".to_string(),
                ),
                ("notes.md", "alpha\nbeta\n".to_string()),
            ],
            ..Default::default()
        },
        CommitSpec {
            write: vec![
                (
                    "src/main.cpp",
                    "int main() {\n  int x = 2;\n  return x;\n}\n".to_string(),
                ),
                ("include/util.h", "#define UTIL 1\n".to_string()),
            ],
            ..Default::default()
        },
    ];
    let repo = build_git_repo(&commits)?;
    // diff order: files alphabetically, removals before additions in a hunk
    let edits = PlantedEdits {
        added: vec![
            vec!["  int x = 1;"],
            vec!["#define UTIL 1", "  int x = 2;", "  return x;"],
        ],
        removed: vec![vec![], vec!["  int x = 1;", "  return 0;"]],
    };
    Ok((repo, edits))
}
