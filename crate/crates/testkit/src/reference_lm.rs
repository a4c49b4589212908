//! An independent reference implementation of the interpolated modified
//! Kneser-Ney model, used as the oracle for the main crate's scorer.
//!
//! It deliberately shares no code or data structures with the production
//! path: string-keyed ordered maps, denominators recomputed by scanning on
//! every query, no caching, no interning. Slow and obvious on purpose.

use std::collections::{BTreeMap, BTreeSet};

const UNK: &str = "<unk>";
const BOS: &str = "<s>";
const EOS: &str = "</s>";
const FLOOR: f64 = 1e-9;

pub struct ReferenceModel {
    order: usize,
    /// counts[k-1]: k-gram -> adjusted count (raw at the top order,
    /// continuation below).
    counts: Vec<BTreeMap<Vec<String>, u64>>,
    /// discounts[k-1]: (D1, D2, D3+)
    discounts: Vec<(f64, f64, f64)>,
    vocab: BTreeSet<String>,
}

impl ReferenceModel {
    pub fn train(sentences: &[Vec<String>], order: usize) -> ReferenceModel {
        assert!(order >= 1);
        assert!(!sentences.is_empty());
        let mut counts: Vec<BTreeMap<Vec<String>, u64>> = vec![BTreeMap::new(); order];
        for sentence in sentences {
            let mut padded: Vec<String> = vec![BOS.to_string(); order - 1];
            padded.extend(sentence.iter().cloned());
            padded.push(EOS.to_string());
            for end in (order - 1)..padded.len() {
                let gram: Vec<String> = padded[end + 1 - order..=end].to_vec();
                *counts[order - 1].entry(gram).or_insert(0) += 1;
            }
        }
        for k in (1..order).rev() {
            let mut preds: BTreeMap<Vec<String>, BTreeSet<String>> = BTreeMap::new();
            for gram in counts[k].keys() {
                preds
                    .entry(gram[1..].to_vec())
                    .or_default()
                    .insert(gram[0].clone());
            }
            counts[k - 1] = preds
                .into_iter()
                .map(|(suffix, set)| (suffix, set.len() as u64))
                .collect();
        }
        let mut vocab = BTreeSet::new();
        for sentence in sentences {
            vocab.extend(sentence.iter().cloned());
        }
        vocab.remove(BOS);
        vocab.insert(EOS.to_string());
        vocab.insert(UNK.to_string());

        let discounts = (1..=order)
            .map(|k| {
                let mut n = [0u64; 4];
                for &c in counts[k - 1].values() {
                    if (1..=4).contains(&c) {
                        n[(c - 1) as usize] += 1;
                    }
                }
                let (n1, n2, n3, n4) = (n[0] as f64, n[1] as f64, n[2] as f64, n[3] as f64);
                let y_defined = n1 + 2.0 * n2 > 0.0;
                let y = if y_defined { n1 / (n1 + 2.0 * n2) } else { 0.0 };
                let d1 = if y_defined && n1 > 0.0 {
                    1.0 - 2.0 * y * n2 / n1
                } else {
                    0.5
                };
                let d2 = if y_defined && n2 > 0.0 {
                    2.0 - 3.0 * y * n3 / n2
                } else {
                    0.5
                };
                let d3 = if y_defined && n3 > 0.0 {
                    3.0 - 4.0 * y * n4 / n3
                } else {
                    0.5
                };
                (
                    d1.clamp(FLOOR, 1.0),
                    d2.clamp(FLOOR, 2.0),
                    d3.clamp(FLOOR, 3.0),
                )
            })
            .collect();

        ReferenceModel {
            order,
            counts,
            discounts,
            vocab,
        }
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(|s| s.as_str())
    }

    fn discount(&self, k: usize, count: u64) -> f64 {
        let (d1, d2, d3) = self.discounts[k - 1];
        match count {
            0 => 0.0,
            1 => d1,
            2 => d2,
            _ => d3,
        }
    }

    /// Probability by direct recursive evaluation of the interpolation
    /// formula, with every denominator recomputed by scanning.
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let start = context.len().saturating_sub(self.order - 1);
        let ctx: Vec<String> = context[start..]
            .iter()
            .map(|w| {
                if self.vocab.contains(*w) || *w == BOS {
                    w.to_string()
                } else {
                    UNK.to_string()
                }
            })
            .collect();
        let word = if self.vocab.contains(word) {
            word.to_string()
        } else {
            UNK.to_string()
        };
        self.prob_at(ctx.len() + 1, &ctx, &word)
    }

    fn prob_at(&self, k: usize, ctx: &[String], word: &str) -> f64 {
        if k == 0 {
            return if word == BOS {
                0.0
            } else {
                1.0 / self.vocab.len() as f64
            };
        }
        // scan for the context's continuations
        let mut total = 0u64;
        let mut by_count = [0u64; 3]; // seen once, twice, three or more
        for (gram, &c) in &self.counts[k - 1] {
            if &gram[..k - 1] == ctx {
                total += c;
                match c {
                    1 => by_count[0] += 1,
                    2 => by_count[1] += 1,
                    _ => by_count[2] += 1,
                }
            }
        }
        let lower_ctx = if ctx.is_empty() { ctx } else { &ctx[1..] };
        let lower = self.prob_at(k - 1, lower_ctx, word);
        if total == 0 {
            return lower;
        }
        let mut key: Vec<String> = ctx.to_vec();
        key.push(word.to_string());
        let c = self.counts[k - 1].get(&key).copied().unwrap_or(0);
        let (d1, d2, d3) = self.discounts[k - 1];
        let gamma = (d1 * by_count[0] as f64 + d2 * by_count[1] as f64 + d3 * by_count[2] as f64)
            / total as f64;
        (c as f64 - self.discount(k, c)).max(0.0) / total as f64 + gamma * lower
    }

    /// Cross-entropy in bits per predicted token (each token plus one
    /// end-of-sentence event per sentence).
    pub fn cross_entropy(&self, sentences: &[Vec<String>]) -> f64 {
        let mut log2_sum = 0.0;
        let mut events = 0usize;
        for sentence in sentences {
            let mut history: Vec<String> = vec![BOS.to_string(); self.order - 1];
            for word in sentence.iter().chain(std::iter::once(&EOS.to_string())) {
                let ctx: Vec<&str> = history
                    .iter()
                    .rev()
                    .take(self.order - 1)
                    .rev()
                    .map(|s| s.as_str())
                    .collect();
                log2_sum += self.prob(&ctx, word).log2();
                history.push(word.clone());
                events += 1;
            }
        }
        assert!(events > 0);
        -log2_sum / events as f64
    }
}
