//! Statistical primitives: Pearson correlation, z-score banding of absolute
//! deltas, five-number summaries, and Tukey outlier fences.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::vcs::RevisionId;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("correlation is undefined for constant input (zero variance)")]
    ZeroVariance,
    #[error("summary of an empty sequence is undefined")]
    Empty,
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooFew {
            need: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample (n-1) standard deviation.
fn sample_std(values: &[f64], mean: f64) -> f64 {
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// One record entering the grouping analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyPoint {
    pub revision: RevisionId,
    pub cross_entropy_bits: f64,
    pub delta_watts: f64,
}

/// Records banded by the z-score of the absolute energy delta.
/// low: z <= 0, medium: 0 < z <= 1, high: z > 1.
#[derive(Debug, Clone)]
pub struct GroupedEntropies {
    pub low: Vec<EntropyPoint>,
    pub medium: Vec<EntropyPoint>,
    pub high: Vec<EntropyPoint>,
    pub mean_abs_delta: f64,
    pub std_abs_delta: f64,
}

impl GroupedEntropies {
    pub fn total(&self) -> usize {
        self.low.len() + self.medium.len() + self.high.len()
    }
}

/// Partitions records by how unusual their absolute delta is. Anything at or
/// below the mean of |delta| is low, within one standard deviation above it
/// is medium, beyond that is high.
pub fn group_by_abs_delta(records: &[EntropyPoint]) -> Result<GroupedEntropies, StatsError> {
    if records.len() < 2 {
        return Err(StatsError::TooFew {
            need: 2,
            got: records.len(),
        });
    }
    let abs: Vec<f64> = records.iter().map(|r| r.delta_watts.abs()).collect();
    let m = mean(&abs);
    let sd = sample_std(&abs, m);
    if sd == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let mut grouped = GroupedEntropies {
        low: Vec::new(),
        medium: Vec::new(),
        high: Vec::new(),
        mean_abs_delta: m,
        std_abs_delta: sd,
    };
    for (record, a) in records.iter().zip(&abs) {
        let z = (a - m) / sd;
        if z <= 0.0 {
            grouped.low.push(record.clone());
        } else if z <= 1.0 {
            grouped.medium.push(record.clone());
        } else {
            grouped.high.push(record.clone());
        }
    }
    Ok(grouped)
}

/// Five-number summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub count: usize,
}

/// Linear-interpolation quantile of a sorted sample (the common "type 7"
/// rule used by R's default and numpy's `linear`).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = q * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Five-number summary with type-7 quartiles.
pub fn box_summary(values: &[f64]) -> Result<BoxSummary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in box_summary"));
    Ok(BoxSummary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        count: sorted.len(),
    })
}

/// Splits records on Tukey's fences over entropy: values strictly outside
/// `[Q1 - 1.5 IQR, Q3 + 1.5 IQR]` are flagged. Fewer than 4 records keep
/// everything (the fences are meaningless on such small samples).
pub fn filter_entropy_outliers(records: &[EntropyPoint]) -> (Vec<EntropyPoint>, Vec<EntropyPoint>) {
    if records.len() < 4 {
        return (records.to_vec(), Vec::new());
    }
    let entropies: Vec<f64> = records.iter().map(|r| r.cross_entropy_bits).collect();
    let summary = box_summary(&entropies).expect("records non-empty");
    let iqr = summary.q3 - summary.q1;
    let lo = summary.q1 - 1.5 * iqr;
    let hi = summary.q3 + 1.5 * iqr;
    let mut kept = Vec::new();
    let mut flagged = Vec::new();
    for r in records {
        if r.cross_entropy_bits < lo || r.cross_entropy_bits > hi {
            flagged.push(r.clone());
        } else {
            kept.push(r.clone());
        }
    }
    (kept, flagged)
}

/// Mean |r| over `trials` seeded random pairings of `y` against `x`.
/// Permutations that land on a constant pairing are skipped.
pub fn permutation_mean_abs_r(x: &[f64], y: &[f64], trials: usize, seed: u64) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || trials == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = y.to_vec();
    let mut total = 0.0;
    let mut counted = 0usize;
    for _ in 0..trials {
        shuffled.shuffle(&mut rng);
        if let Ok(r) = pearson(x, &shuffled) {
            total += r.abs();
            counted += 1;
        }
    }
    (counted > 0).then(|| total / counted as f64)
}
