//! Acceptance suite. Each test is one criterion and prints a PASS line;
//! run with `cargo test -p wattgram-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use tempfile::TempDir;
use wattgram::lexer::is_cpp_path;
use wattgram::lm::{build_model, ModelConfig, NGramModel};
use wattgram::pipeline::{
    defined_points, run_part1, run_part2, run_part3, score_changesets, CorpusSource, Part1Config,
    Part2Config, Stream,
};
use wattgram::stats;
use wattgram::vcs::{Repository, RevisionId, VcsKind};
use wattgram_testkit::corpus::{held_out_texts, random_corpus, to_stream};
use wattgram_testkit::planted::{planted_fixture, write_offline_inputs};
use wattgram_testkit::reference_lm::ReferenceModel;
use wattgram_testkit::repo::three_commit_fixture;

fn pass(criterion: usize, what: &str) {
    println!("ACCEPTANCE {criterion}: PASS - {what}");
}

/// Criterion 1: every sampled conditional distribution sums to one within
/// 1e-9 on a 200-sentence corpus, in under ten seconds.
#[test]
fn criterion_1_lm_normalization() {
    let start = Instant::now();
    let corpus = random_corpus(2001, 200);
    let model = build_model(&to_stream(&corpus, "fixture"), ModelConfig::with_order(3)).unwrap();
    let vocab: Vec<String> = model.prediction_vocabulary().map(str::to_string).collect();
    let mut contexts: Vec<Vec<&str>> = Vec::new();
    'collect: for sentence in &corpus {
        for window in sentence.windows(2) {
            contexts.push(window.iter().map(String::as_str).collect());
            if contexts.len() == 100 {
                break 'collect;
            }
        }
    }
    assert_eq!(
        contexts.len(),
        100,
        "fixture corpus must supply 100 contexts"
    );
    for ctx in &contexts {
        let sum: f64 = vocab.iter().map(|w| model.probability(ctx, w)).sum();
        assert!(
            (sum - 1.0).abs() <= 1e-9,
            "context {ctx:?}: sum(P) = {sum} strays beyond 1e-9"
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 10,
        "normalization check took {elapsed:?}"
    );
    pass(
        1,
        &format!("100 contexts normalized within 1e-9 in {elapsed:?}"),
    );
}

/// Criterion 2: cross-entropy of five held-out texts matches the reference
/// model within 1e-4 bits per token.
#[test]
fn criterion_2_oracle_equivalence() {
    let corpus = random_corpus(2002, 200);
    let reference = ReferenceModel::train(&corpus, 3);
    let model = build_model(&to_stream(&corpus, "fixture"), ModelConfig::with_order(3)).unwrap();
    let texts = held_out_texts(2003, 5, 10);
    assert_eq!(texts.len(), 5);
    let mut worst = 0.0f64;
    for text in &texts {
        let want = reference.cross_entropy(text);
        let got = model
            .cross_entropy(&to_stream(text, "held-out"))
            .unwrap()
            .cross_entropy_bits;
        worst = worst.max((got - want).abs());
        assert!(
            (got - want).abs() <= 1e-4,
            "held-out text: model {got} vs reference {want}"
        );
    }
    pass(
        2,
        &format!("5 held-out texts agree with the reference, worst gap {worst:.3e} bits"),
    );
}

/// Criterion 3: an export-import round trip moves no text's cross-entropy
/// by more than 1e-6 bits.
#[test]
fn criterion_3_arpa_round_trip() {
    let corpus = random_corpus(2004, 150);
    let model = build_model(&to_stream(&corpus, "fixture"), ModelConfig::with_order(3)).unwrap();
    let mut buf = Vec::new();
    model.export_arpa(&mut buf).unwrap();
    let imported = NGramModel::import_arpa(&buf[..]).unwrap();
    let mut worst = 0.0f64;
    for text in held_out_texts(2005, 6, 8) {
        let stream = to_stream(&text, "text");
        let a = model.cross_entropy(&stream).unwrap().cross_entropy_bits;
        let b = imported.cross_entropy(&stream).unwrap().cross_entropy_bits;
        worst = worst.max((a - b).abs());
        assert!((a - b).abs() <= 1e-6, "round trip drift {a} vs {b}");
    }
    pass(3, &format!("round trip drift at most {worst:.3e} bits"));
}

/// Criterion 4: the Pearson closed-form examples, exact to 1e-12.
#[test]
fn criterion_4_pearson_closed_form() {
    let cases: [(&[f64], &[f64], f64); 3] = [
        (&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], 1.0),
        (&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0], -1.0),
        (&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0], 0.8),
    ];
    for (x, y, want) in cases {
        let r = stats::pearson(x, y).unwrap();
        assert!(
            (r - want).abs() <= 1e-12,
            "pearson({x:?}, {y:?}) = {r}, want {want}"
        );
    }
    pass(4, "three closed-form correlations exact to 1e-12");
}

/// Criterion 5: the planted 60-revision history correlates above 0.9 and
/// collapses below 0.2 under 100 seeded permutations, within two minutes.
#[test]
fn criterion_5_planted_correlation_recovery() {
    let start = Instant::now();
    let fixture = planted_fixture(60, 24);
    let out = run_part1(
        &fixture.corpus,
        &fixture.revisions[0],
        &fixture.changesets,
        &fixture.deltas,
        Part1Config {
            order: 3,
            permutation_trials: 100,
            seed: 505,
        },
    )
    .unwrap();
    let r = out.added.r_all.expect("defined correlation");
    assert!(r > 0.9, "planted correlation r = {r}");
    let baseline = out.added.permutation_mean_abs_r.expect("defined baseline");
    assert!(baseline < 0.2, "permutation baseline {baseline}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}");
    pass(
        5,
        &format!("r = {r:.4}, permutation mean |r| = {baseline:.4}, in {elapsed:?}"),
    );
}

struct FixedCorpus(wattgram::lexer::TokenStream);

impl CorpusSource for FixedCorpus {
    fn corpus_at(
        &self,
        _revision: &RevisionId,
    ) -> Result<wattgram::lexer::TokenStream, wattgram::vcs::VcsError> {
        Ok(self.0.clone())
    }
}

/// Criterion 6: 40 revisions at window 35 produce exactly 5 windows, and a
/// window spanning the whole history equals part 1 to 1e-12.
#[test]
fn criterion_6_part2_counting_and_degeneracy() {
    let fixture = planted_fixture(40, 12);
    let source = FixedCorpus(fixture.corpus.clone());
    let windows = run_part2(
        &source,
        &fixture.revisions,
        &fixture.changesets,
        &fixture.deltas,
        Part2Config {
            order: 3,
            window: 35,
            stride: 1,
        },
    )
    .unwrap();
    assert_eq!(windows.len(), 5, "expected exactly 5 windows");
    assert_eq!(
        windows.iter().map(|w| w.corpus_index).collect::<Vec<_>>(),
        vec![0, 1, 2, 3, 4]
    );

    let total = fixture.revisions.len();
    let degenerate = run_part2(
        &source,
        &fixture.revisions,
        &fixture.changesets,
        &fixture.deltas,
        Part2Config {
            order: 3,
            window: total - 1,
            stride: 1,
        },
    )
    .unwrap();
    assert_eq!(degenerate.len(), 1);
    let part1 = run_part1(
        &fixture.corpus,
        &fixture.revisions[0],
        &fixture.changesets,
        &fixture.deltas,
        Part1Config {
            order: 3,
            permutation_trials: 0,
            seed: 0,
        },
    )
    .unwrap();
    let gap = (degenerate[0].added_correlation.unwrap() - part1.added.r_all.unwrap()).abs();
    assert!(
        gap <= 1e-12,
        "degenerate window differs from part 1 by {gap}"
    );
    pass(
        6,
        &format!("5 windows at 35/40; degenerate-window gap {gap:.3e}"),
    );
}

/// Criterion 7: the groups partition every fixture, and the 5-record hand
/// example lands 4 low, 0 medium, 1 high.
#[test]
fn criterion_7_part3_partition() {
    // hand example via the full pipeline
    let corpus = wattgram::lexer::tokenize_source("int a;\nint b;\n");
    let model = build_model(&corpus, ModelConfig::with_order(3)).unwrap();
    let changesets: Vec<wattgram::vcs::Changeset> = (0..5)
        .map(|i| wattgram::vcs::Changeset {
            revision: RevisionId::new(format!("r{i}")),
            parent: RevisionId::new(format!("p{i}")),
            added_lines: vec!["int a;".to_string()],
            removed_lines: vec!["int b;".to_string()],
        })
        .collect();
    let deltas: Vec<wattgram::energy::EnergyDelta> = [0.0, 0.0, 0.0, 0.0, 4.0]
        .iter()
        .enumerate()
        .map(|(i, d)| wattgram::energy::EnergyDelta {
            revision: RevisionId::new(format!("r{i}")),
            delta_watts: *d,
        })
        .collect();
    let records = score_changesets(&model, &changesets, &deltas).unwrap();
    let out = run_part3(&records).unwrap();
    for report in [&out.added, &out.removed] {
        assert_eq!(
            (
                report.groups.low.len(),
                report.groups.medium.len(),
                report.groups.high.len()
            ),
            (4, 0, 1)
        );
    }

    // partition law on the planted fixture
    let fixture = planted_fixture(30, 10);
    let model = build_model(&fixture.corpus, ModelConfig::with_order(3)).unwrap();
    let records = score_changesets(&model, &fixture.changesets, &fixture.deltas).unwrap();
    let grouped = run_part3(&records).unwrap();
    for (report, stream) in [
        (&grouped.added, Stream::Added),
        (&grouped.removed, Stream::Removed),
    ] {
        let defined = defined_points(&records, stream).len();
        assert_eq!(
            report.groups.total(),
            defined,
            "groups must partition scored records"
        );
        let mut seen: Vec<&str> = report
            .groups
            .low
            .iter()
            .chain(&report.groups.medium)
            .chain(&report.groups.high)
            .map(|p| p.revision.as_str())
            .collect();
        let total = seen.len();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), total, "groups must be disjoint");
    }
    pass(
        7,
        "hand example groups 4/0/1; fixture groups partition and stay disjoint",
    );
}

fn write_profile(path: &Path, revisions: &[RevisionId], watts: &[f64]) {
    let mut text = String::from("revision,mean_watts\n");
    for (r, w) in revisions.iter().zip(watts) {
        text.push_str(&format!("{r},{w}\n"));
    }
    fs::write(path, text).unwrap();
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wattgram"))
}

fn run_ok(cmd: &mut Command) {
    let output = cmd.output().expect("spawn wattgram");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stderr)
    );
}

fn assert_same_bytes(a: &Path, b: &Path, names: &[&str]) {
    for name in names {
        let left = fs::read(a.join(name)).unwrap_or_else(|_| panic!("missing {name} in {a:?}"));
        let right = fs::read(b.join(name)).unwrap_or_else(|_| panic!("missing {name} in {b:?}"));
        assert_eq!(left, right, "{name} differs between {a:?} and {b:?}");
    }
}

/// Criterion 8: extraction recovers the planted edits exactly, and an
/// offline rerun from the extracted diffs is byte-identical to the live run.
#[test]
fn criterion_8_diff_fidelity() {
    let (fixture, edits) = three_commit_fixture().unwrap();
    let repo = Repository::new(&fixture.path, VcsKind::Git);
    let changesets = repo
        .extract_changesets(&fixture.revisions, is_cpp_path)
        .unwrap();
    for (i, c) in changesets.iter().enumerate() {
        assert_eq!(c.added_lines, edits.added[i], "changeset {i} added");
        assert_eq!(c.removed_lines, edits.removed[i], "changeset {i} removed");
    }

    let work = TempDir::new().unwrap();
    let profile = work.path().join("profile.csv");
    write_profile(&profile, &fixture.revisions, &[5.0, 5.5, 5.2]);
    let extract_dir = work.path().join("extracted");
    let corpus_rev = fixture.revisions[0].as_str();
    run_ok(cli().args([
        "extract",
        "--repo",
        fixture.path.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
        "--corpus-rev",
        corpus_rev,
        "--out",
        extract_dir.to_str().unwrap(),
    ]));

    let live = work.path().join("live");
    run_ok(cli().args([
        "analyze",
        "part1",
        "--repo",
        fixture.path.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
        "--corpus-rev",
        corpus_rev,
        "--seed",
        "11",
        "--out",
        live.to_str().unwrap(),
    ]));

    let offline = work.path().join("offline");
    let corpus_file = extract_dir.join(format!("corpus_{corpus_rev}.txt"));
    run_ok(cli().args([
        "analyze",
        "part1",
        "--diff-dir",
        extract_dir.to_str().unwrap(),
        "--corpus-file",
        corpus_file.to_str().unwrap(),
        "--corpus-rev",
        corpus_rev,
        "--profile",
        profile.to_str().unwrap(),
        "--seed",
        "11",
        "--out",
        offline.to_str().unwrap(),
    ]));

    assert_same_bytes(
        &live,
        &offline,
        &[
            "part1_records.csv",
            "part1_summary.json",
            "part1_scatter_added.csv",
            "part1_scatter_removed.csv",
        ],
    );
    pass(
        8,
        "planted edits recovered; live and offline part1 runs byte-identical",
    );
}

/// Criterion 9: the same seed with --jobs 1 and --jobs 4 produces
/// byte-identical reports across all three analyses.
#[test]
fn criterion_9_jobs_determinism() {
    let work = TempDir::new().unwrap();
    let fixture = planted_fixture(60, 24);
    write_offline_inputs(&fixture, work.path()).unwrap();
    let diffs = work.path().join("diffs");
    let corpus = work.path().join("corpus.txt");
    let profile = work.path().join("profile.csv");

    let offline_run = |part: &str, jobs: &str, out: &Path| {
        run_ok(cli().args([
            "analyze",
            part,
            "--diff-dir",
            diffs.to_str().unwrap(),
            "--corpus-file",
            corpus.to_str().unwrap(),
            "--profile",
            profile.to_str().unwrap(),
            "--seed",
            "31",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]));
    };
    let p1_a = work.path().join("p1_jobs1");
    let p1_b = work.path().join("p1_jobs4");
    offline_run("part1", "1", &p1_a);
    offline_run("part1", "4", &p1_b);
    assert_same_bytes(
        &p1_a,
        &p1_b,
        &[
            "part1_records.csv",
            "part1_summary.json",
            "part1_scatter_added.csv",
            "part1_scatter_removed.csv",
        ],
    );
    let p3_a = work.path().join("p3_jobs1");
    let p3_b = work.path().join("p3_jobs4");
    offline_run("part3", "1", &p3_a);
    offline_run("part3", "4", &p3_b);
    assert_same_bytes(
        &p3_a,
        &p3_b,
        &[
            "part3_groups.json",
            "part3_box_added.csv",
            "part3_box_removed.csv",
        ],
    );

    // part 2 needs a live repository: reuse the three-commit fixture with a
    // window small enough to fit
    let (repo_fixture, _) = three_commit_fixture().unwrap();
    let repo_profile = work.path().join("repo_profile.csv");
    write_profile(&repo_profile, &repo_fixture.revisions, &[5.0, 5.5, 5.2]);
    let p2_run = |jobs: &str, out: &Path| {
        run_ok(cli().args([
            "analyze",
            "part2",
            "--repo",
            repo_fixture.path.to_str().unwrap(),
            "--profile",
            repo_profile.to_str().unwrap(),
            "--window",
            "2",
            "--seed",
            "31",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]));
    };
    let p2_a = work.path().join("p2_jobs1");
    let p2_b = work.path().join("p2_jobs4");
    p2_run("1", &p2_a);
    p2_run("4", &p2_b);
    assert_same_bytes(
        &p2_a,
        &p2_b,
        &[
            "part2_windows.csv",
            "part2_summary.json",
            "part2_corr_added.csv",
            "part2_corr_removed.csv",
        ],
    );
    pass(
        9,
        "jobs 1 and jobs 4 byte-identical across part1, part2, part3",
    );
}
