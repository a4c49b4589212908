//! Cross-module property tests.

use proptest::prelude::*;
use wattgram::energy::ProfileEntry;
use wattgram::energy::{compute_deltas, EnergyProfile};
use wattgram::lexer::{read_corpus, tokenize_lines, tokenize_source, write_corpus};
use wattgram::stats::EntropyPoint;
use wattgram::stats::{box_summary, filter_entropy_outliers, group_by_abs_delta, pearson};
use wattgram::vcs::RevisionId;

fn bare_lexemes(stream: &wattgram::lexer::TokenStream) -> Vec<String> {
    stream
        .tokens
        .iter()
        .filter(|t| !t.is_boundary())
        .map(|t| t.text.clone())
        .collect()
}

proptest! {
    /// Joining any sentence's lexemes with single spaces and relexing gives
    /// the sentence back.
    #[test]
    fn retokenization_is_idempotent(input in ".{0,200}") {
        let first = tokenize_source(&input);
        for sentence in first.sentences() {
            let joined: Vec<String> = sentence.tokens.iter().map(|t| t.text.clone()).collect();
            let relexed = tokenize_source(&joined.join(" "));
            prop_assert_eq!(&bare_lexemes(&relexed), &joined);
        }
    }

    /// No boundary marker appears inside any sentence.
    #[test]
    fn boundaries_only_frame_sentences(input in ".{0,200}") {
        let stream = tokenize_source(&input);
        for sentence in stream.sentences() {
            prop_assert!(sentence.tokens.iter().all(|t| !t.is_boundary()));
        }
    }

    /// Diff-line token counts decompose into per-line counts plus framing.
    /// (Diff lines cannot contain line breaks, so the generator matches.)
    #[test]
    fn tokenize_lines_counts_decompose(lines in proptest::collection::vec("[^\r\n]{0,80}", 0..8)) {
        let total = tokenize_lines(&lines).len();
        let expected: usize = lines
            .iter()
            .map(|l| {
                let bare = tokenize_source(l).word_count();
                bare + if bare > 0 { 2 } else { 0 }
            })
            .sum();
        prop_assert_eq!(total, expected);
    }

    /// Corpus files survive the escape/unescape round trip losslessly.
    #[test]
    fn corpus_file_round_trips(input in ".{0,200}") {
        let stream = tokenize_source(&input);
        let mut buf = Vec::new();
        write_corpus(&stream, &mut buf).unwrap();
        let back = read_corpus(&buf[..], "rt").unwrap();
        prop_assert_eq!(bare_lexemes(&stream), bare_lexemes(&back));
    }

    /// Perfect positive and negative fits, exact to 1e-12.
    #[test]
    fn pearson_affine_fit(
        xs in proptest::collection::vec(-1000.0f64..1000.0, 3..40),
        a in prop_oneof![0.1f64..50.0, -50.0f64..-0.1],
        b in -100.0f64..100.0,
    ) {
        let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-6);
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let r = pearson(&xs, &ys).unwrap();
        let expected = if a > 0.0 { 1.0 } else { -1.0 };
        prop_assert!((r - expected).abs() < 1e-12, "r = {}", r);
    }

    /// Correlation is invariant under positive affine transforms.
    #[test]
    fn pearson_affine_invariance(
        pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
        scale in 0.5f64..20.0,
        shift in -50.0f64..50.0,
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let x_spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let y_spread = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - ys.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(x_spread > 1e-3 && y_spread > 1e-3);
        let scaled: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
        let r0 = pearson(&xs, &ys).unwrap();
        let r1 = pearson(&scaled, &ys).unwrap();
        prop_assert!((r0 - r1).abs() < 1e-12);
        // and symmetry
        let r2 = pearson(&ys, &xs).unwrap();
        prop_assert!((r0 - r2).abs() < 1e-12);
    }

    /// Box summaries ignore input order.
    #[test]
    fn box_summary_permutation_invariant(
        mut values in proptest::collection::vec(-1e6f64..1e6, 1..50),
        seed in 0usize..1000,
    ) {
        let original = box_summary(&values).unwrap();
        // deterministic pseudo-shuffle
        let n = values.len();
        for i in 0..n {
            values.swap(i, (i * 7 + seed) % n);
        }
        let shuffled = box_summary(&values).unwrap();
        prop_assert_eq!(original, shuffled);
    }

    /// Grouping partitions its input whenever it is defined.
    #[test]
    fn grouping_partitions(deltas in proptest::collection::vec(-10.0f64..10.0, 2..40)) {
        let records: Vec<EntropyPoint> = deltas
            .iter()
            .enumerate()
            .map(|(i, d)| EntropyPoint {
                revision: RevisionId::new(format!("r{i}")),
                cross_entropy_bits: 1.0,
                delta_watts: *d,
            })
            .collect();
        if let Ok(groups) = group_by_abs_delta(&records) {
            prop_assert_eq!(groups.total(), records.len());
            // z-band membership is honoured
            for p in &groups.low {
                let z = (p.delta_watts.abs() - groups.mean_abs_delta) / groups.std_abs_delta;
                prop_assert!(z <= 0.0);
            }
            for p in &groups.medium {
                let z = (p.delta_watts.abs() - groups.mean_abs_delta) / groups.std_abs_delta;
                prop_assert!(z > 0.0 && z <= 1.0);
            }
            for p in &groups.high {
                let z = (p.delta_watts.abs() - groups.mean_abs_delta) / groups.std_abs_delta;
                prop_assert!(z > 1.0);
            }
        }
    }

    /// Outlier filtering conserves records.
    #[test]
    fn outlier_filter_conserves(entropies in proptest::collection::vec(0.0f64..30.0, 4..40)) {
        let records: Vec<EntropyPoint> = entropies
            .iter()
            .enumerate()
            .map(|(i, h)| EntropyPoint {
                revision: RevisionId::new(format!("r{i}")),
                cross_entropy_bits: *h,
                delta_watts: 0.0,
            })
            .collect();
        let (kept, flagged) = filter_entropy_outliers(&records);
        prop_assert_eq!(kept.len() + flagged.len(), records.len());
    }

    /// Deltas telescope to last minus first.
    #[test]
    fn deltas_telescope(watts in proptest::collection::vec(0.1f64..100.0, 2..50)) {
        let profile = EnergyProfile {
            entries: watts
                .iter()
                .enumerate()
                .map(|(i, w)| ProfileEntry {
                    revision: RevisionId::new(format!("r{i}")),
                    mean_watts: *w,
                })
                .collect(),
        };
        let deltas = compute_deltas(&profile).unwrap();
        let sum: f64 = deltas.iter().map(|d| d.delta_watts).sum();
        let expected = watts.last().unwrap() - watts.first().unwrap();
        prop_assert!((sum - expected).abs() < 1e-9);
    }
}
