//! A synthetic revision history whose added-line entropy is constructed to
//! track the planted energy deltas.
//!
//! Each changeset adds a fixed number of lines: some are verbatim corpus
//! statements (cheap under the model), the rest use identifiers the corpus
//! never saw (expensive). The high-cost fraction ramps with the revision
//! index, and the planted deltas ramp with the same index, so added-line
//! entropy and delta correlate almost perfectly while any permutation of the
//! deltas destroys it.

use std::fs;
use std::io;
use std::path::Path;

use wattgram::energy::EnergyDelta;
use wattgram::lexer::tokenize_source;
use wattgram::lexer::TokenStream;
use wattgram::vcs::{Changeset, RevisionId};

/// Line present many times in the corpus: every token is well modeled.
pub const LOW_LINE: &str = "int counter = counter + 1;";
/// Same token count, but every identifier is out of vocabulary.
pub const HIGH_LINE: &str = "zqx19 vbn27 = qwr88 + yuo55;";

pub struct PlantedFixture {
    pub revisions: Vec<RevisionId>,
    pub changesets: Vec<Changeset>,
    pub deltas: Vec<EnergyDelta>,
    /// `(revision, mean_watts)` rows for the profile CSV.
    pub profile_rows: Vec<(String, f64)>,
    pub corpus_text: String,
    pub corpus: TokenStream,
}

fn revision_name(i: usize) -> String {
    // deterministic pseudo-hashes
    format!(
        "{:012x}",
        (i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 16
    )
}

fn corpus_text() -> String {
    let pool = [
        LOW_LINE,
        "int total = total + 1;",
        "float ratio = ratio + 1;",
        "return counter;",
        "if (counter > total) { total = counter; }",
        "char buffer = 0;",
        "total = total - 1;",
        "counter = counter * 2;",
    ];
    let mut lines = Vec::with_capacity(200);
    for i in 0..200 {
        // the low line dominates so its n-grams are deeply familiar
        if i % 2 == 0 {
            lines.push(pool[0]);
        } else {
            lines.push(pool[(i / 2) % pool.len()]);
        }
    }
    lines.join("\n") + "\n"
}

/// Builds the fixture. `n_revisions` includes the base revision, so there
/// are `n_revisions - 1` changesets; each adds `lines_per_changeset` lines.
pub fn planted_fixture(n_revisions: usize, lines_per_changeset: usize) -> PlantedFixture {
    assert!(n_revisions >= 3);
    let n_changesets = n_revisions - 1;
    let revisions: Vec<RevisionId> = (0..n_revisions)
        .map(|i| RevisionId::new(revision_name(i)))
        .collect();

    let mut changesets = Vec::with_capacity(n_changesets);
    let mut deltas = Vec::with_capacity(n_changesets);
    let mut profile_rows = Vec::with_capacity(n_revisions);
    let mut watts = 10.0_f64;
    profile_rows.push((revisions[0].as_str().to_string(), watts));

    for c in 0..n_changesets {
        let high = c * lines_per_changeset / (n_changesets - 1).max(1);
        let high = high.min(lines_per_changeset);
        let mut added = vec![HIGH_LINE.to_string(); high];
        added.extend(std::iter::repeat_n(
            LOW_LINE.to_string(),
            lines_per_changeset - high,
        ));
        // removed lines vary in length but not in step with the deltas
        let removed: Vec<String> = std::iter::repeat_n(LOW_LINE.to_string(), 1 + c % 3)
            .chain(std::iter::once(HIGH_LINE.to_string()))
            .collect();
        let jitter = 0.001 * ((c * 7919 % 13) as f64 - 6.0);
        let delta = 0.05 * high as f64 - 0.3 + jitter;
        watts += delta;
        profile_rows.push((revisions[c + 1].as_str().to_string(), watts));
        deltas.push(EnergyDelta {
            revision: revisions[c + 1].clone(),
            delta_watts: delta,
        });
        changesets.push(Changeset {
            revision: revisions[c + 1].clone(),
            parent: revisions[c].clone(),
            added_lines: added,
            removed_lines: removed,
        });
    }

    let corpus_text = corpus_text();
    let corpus = tokenize_source(&corpus_text);
    PlantedFixture {
        revisions,
        changesets,
        deltas,
        profile_rows,
        corpus_text,
        corpus,
    }
}

/// Renders one changeset as a unified diff against a notional source file.
fn render_diff(changeset: &Changeset) -> String {
    let removed = changeset.removed_lines.len();
    let added = changeset.added_lines.len();
    let mut out = String::new();
    out.push_str("diff --git a/src/main.cpp b/src/main.cpp\n");
    out.push_str("--- a/src/main.cpp\n");
    out.push_str("+++ b/src/main.cpp\n");
    out.push_str(&format!("@@ -1,{removed} +1,{added} @@\n"));
    for line in &changeset.removed_lines {
        out.push_str(&format!("-{line}\n"));
    }
    for line in &changeset.added_lines {
        out.push_str(&format!("+{line}\n"));
    }
    out
}

/// Writes the fixture as an offline analysis input set: a diff directory, a
/// profile CSV, and a corpus file.
pub fn write_offline_inputs(fixture: &PlantedFixture, dir: &Path) -> io::Result<()> {
    let diff_dir = dir.join("diffs");
    fs::create_dir_all(&diff_dir)?;
    for (i, changeset) in fixture.changesets.iter().enumerate() {
        let name = format!("{:04}_{}.diff", i, changeset.revision);
        fs::write(diff_dir.join(name), render_diff(changeset))?;
    }
    let mut profile = String::from("revision,mean_watts\n");
    for (rev, watts) in &fixture.profile_rows {
        profile.push_str(&format!("{rev},{watts}\n"));
    }
    fs::write(dir.join("profile.csv"), profile)?;
    let mut corpus_file = fs::File::create(dir.join("corpus.txt"))?;
    wattgram::lexer::write_corpus(&fixture.corpus, &mut corpus_file)?;
    Ok(())
}
