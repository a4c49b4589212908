//! Command-line contract: exit codes, flag precedence, and the
//! empty-window warning path.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use wattgram_testkit::planted::{planted_fixture, write_offline_inputs};

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wattgram"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn wattgram")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

#[test]
fn help_exits_zero_and_documents_flags() {
    let out = run(cli().arg("--help"));
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("extract"));
    assert!(text.contains("analyze"));
    assert!(text.contains("lm"));

    let out = run(cli().args(["analyze", "part1", "--help"]));
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in [
        "--repo",
        "--diff-dir",
        "--vcs",
        "--profile",
        "--corpus-rev",
        "--order",
        "--window",
        "--stride",
        "--outliers",
        "--out",
        "--jobs",
        "--seed",
    ] {
        assert!(text.contains(flag), "part1 --help must document {flag}");
    }
}

#[test]
fn unknown_flag_exits_two() {
    let out = run(cli().args(["analyze", "part1", "--frobnicate"]));
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_inputs_exit_two() {
    // no --repo/--diff-dir at all
    let out = run(cli().args([
        "analyze",
        "part1",
        "--profile",
        "/nope.csv",
        "--out",
        "/tmp/x",
    ]));
    assert_eq!(code(&out), 2);
    // nonexistent profile
    let out = run(cli().args([
        "analyze",
        "part1",
        "--repo",
        ".",
        "--profile",
        "/does/not/exist.csv",
        "--out",
        "/tmp/x",
    ]));
    assert_eq!(code(&out), 2);
    // lm score with missing model file
    let out = run(cli().args([
        "lm",
        "score",
        "--model",
        "/no/model.arpa",
        "--text",
        "/no/t.txt",
    ]));
    assert_eq!(code(&out), 2);
    // offline part1 without a corpus file
    let dir = TempDir::new().unwrap();
    let fixture = planted_fixture(6, 4);
    write_offline_inputs(&fixture, dir.path()).unwrap();
    let out = run(cli().args([
        "analyze",
        "part1",
        "--diff-dir",
        dir.path().join("diffs").to_str().unwrap(),
        "--profile",
        dir.path().join("profile.csv").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("corpus"));
}

#[test]
fn runtime_failures_exit_one() {
    let dir = TempDir::new().unwrap();
    let fixture = planted_fixture(6, 4);
    write_offline_inputs(&fixture, dir.path()).unwrap();
    // malformed profile: header is present but a row is bad
    let profile = dir.path().join("bad_profile.csv");
    fs::write(&profile, "revision,mean_watts\nr1,not-a-number\n").unwrap();
    let out = run(cli().args([
        "analyze",
        "part1",
        "--diff-dir",
        dir.path().join("diffs").to_str().unwrap(),
        "--corpus-file",
        dir.path().join("corpus.txt").to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]));
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn part2_without_a_full_window_warns_and_exits_zero() {
    let (repo, _) = wattgram_testkit::repo::three_commit_fixture().unwrap();
    let dir = TempDir::new().unwrap();
    let profile = dir.path().join("profile.csv");
    let rows: String = repo
        .revisions
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{r},{}\n", 5.0 + i as f64 * 0.25))
        .collect();
    fs::write(&profile, format!("revision,mean_watts\n{rows}")).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(cli().args([
        "analyze",
        "part2",
        "--repo",
        repo.path.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
        "--window",
        "35",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let windows = fs::read_to_string(out_dir.join("part2_windows.csv")).unwrap();
    assert_eq!(windows.lines().count(), 1, "header only");
}

fn summary_order(out_dir: &Path) -> u64 {
    let text = fs::read_to_string(out_dir.join("part1_summary.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    json["order"].as_u64().unwrap()
}

#[test]
fn config_file_fills_defaults_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let fixture = planted_fixture(10, 6);
    write_offline_inputs(&fixture, dir.path()).unwrap();
    let config = dir.path().join("wattgram.toml");
    fs::write(
        &config,
        format!(
            "order = 2\nseed = 9\ndiff_dir = {:?}\ncorpus_file = {:?}\nprofile = {:?}\n",
            dir.path().join("diffs"),
            dir.path().join("corpus.txt"),
            dir.path().join("profile.csv"),
        ),
    )
    .unwrap();

    let from_config = dir.path().join("out_config");
    let out = run(cli().args([
        "analyze",
        "part1",
        "--config",
        config.to_str().unwrap(),
        "--out",
        from_config.to_str().unwrap(),
    ]));
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(summary_order(&from_config), 2);

    let overridden = dir.path().join("out_flag");
    let out = run(cli().args([
        "analyze",
        "part1",
        "--config",
        config.to_str().unwrap(),
        "--order",
        "4",
        "--out",
        overridden.to_str().unwrap(),
    ]));
    assert_eq!(code(&out), 0);
    assert_eq!(summary_order(&overridden), 4);
}

#[test]
fn lm_round_trip_through_the_cli() {
    let dir = TempDir::new().unwrap();
    let fixture = planted_fixture(6, 4);
    write_offline_inputs(&fixture, dir.path()).unwrap();
    let model = dir.path().join("model.arpa");
    let out = run(cli().args([
        "lm",
        "build",
        "--corpus",
        dir.path().join("corpus.txt").to_str().unwrap(),
        "--order",
        "3",
        "--out",
        model.to_str().unwrap(),
    ]));
    assert_eq!(code(&out), 0);

    let score = run(cli().args([
        "lm",
        "score",
        "--model",
        model.to_str().unwrap(),
        "--text",
        dir.path().join("corpus.txt").to_str().unwrap(),
    ]));
    assert_eq!(code(&score), 0);
    let text = String::from_utf8_lossy(&score.stdout);
    assert!(text.contains("cross_entropy_bits="), "got: {text}");
    let h: f64 = text
        .split("cross_entropy_bits=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        h.is_finite() && h > 0.0,
        "smoothed self-entropy should be positive, got {h}"
    );

    // export normalizes an imported model without changing scores
    let reexported = dir.path().join("model2.arpa");
    let out = run(cli().args([
        "lm",
        "export",
        "--model",
        model.to_str().unwrap(),
        "--out",
        reexported.to_str().unwrap(),
    ]));
    assert_eq!(code(&out), 0);
    let score2 = run(cli().args([
        "lm",
        "score",
        "--model",
        reexported.to_str().unwrap(),
        "--text",
        dir.path().join("corpus.txt").to_str().unwrap(),
    ]));
    assert_eq!(String::from_utf8_lossy(&score2.stdout), text);
}
