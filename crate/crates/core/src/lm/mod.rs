//! Order-n language models with modified Kneser-Ney smoothing, plus
//! cross-entropy / perplexity evaluation of token streams.
//!
//! The model is built once from a corpus stream and is immutable afterwards.
//! Scoring walks the interpolation chain
//!
//! ```text
//! P(w | ctx) = max(c(ctx w) - D(c), 0) / c(ctx .) + gamma(ctx) P(w | ctx')
//! ```
//!
//! down to a uniform base over the prediction vocabulary, which is where
//! `<unk>` receives its mass. Sentences are padded with n-1 start markers
//! and one end marker; `<s>` is context only and never predicted.

mod arpa;

use std::collections::HashMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::lexer::{TokenStream, END_MARKER, START_MARKER};

pub const UNK_LEXEME: &str = "<unk>";

pub(crate) type TokenId = u32;
pub(crate) const UNK: TokenId = 0;
pub(crate) const BOS: TokenId = 1;
pub(crate) const EOS: TokenId = 2;

/// Discount floor. Keeps every interpolation weight strictly positive so no
/// vocabulary word can score zero.
const DISCOUNT_FLOOR: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("corpus contains no sentences")]
    EmptyCorpus,
    #[error("model order must be at least 1")]
    InvalidOrder,
    #[error("text contains no scorable tokens")]
    EmptyText,
    #[error("ARPA export requires a Kneser-Ney model built from counts")]
    ExportUnsupported,
    #[error("ARPA parse error at line {line}: {problem}")]
    Arpa { line: usize, problem: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Smoothing family. Maximum likelihood exists for oracle-style tests where
/// exact certainty (H = 0) must be representable; it assigns zero probability
/// to unseen events and cannot be exported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    #[default]
    ModifiedKneserNey,
    MaxLikelihood,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelConfig {
    pub order: usize,
    pub smoothing: Smoothing,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            order: 3,
            smoothing: Smoothing::ModifiedKneserNey,
        }
    }
}

impl ModelConfig {
    pub fn with_order(order: usize) -> Self {
        ModelConfig {
            order,
            ..Default::default()
        }
    }
}

/// Cross-entropy of a text under a model, in bits per predicted token.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyResult {
    pub cross_entropy_bits: f64,
    pub perplexity: f64,
    pub token_count: usize,
    pub oov_count: usize,
}

/// Per-order discount triple (counts of 1, 2, and 3+ are discounted by
/// d1, d2, d3plus respectively).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountTriple {
    pub d1: f64,
    pub d2: f64,
    pub d3plus: f64,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Vocabulary {
    lexemes: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    fn with_reserved() -> Self {
        let mut v = Vocabulary::default();
        for s in [UNK_LEXEME, START_MARKER, END_MARKER] {
            v.intern(s);
        }
        v
    }

    pub(crate) fn intern(&mut self, lexeme: &str) -> TokenId {
        if let Some(&id) = self.index.get(lexeme) {
            return id;
        }
        let id = self.lexemes.len() as TokenId;
        self.lexemes.push(lexeme.to_string());
        self.index.insert(lexeme.to_string(), id);
        id
    }

    pub(crate) fn lookup(&self, lexeme: &str) -> Option<TokenId> {
        self.index.get(lexeme).copied()
    }

    pub(crate) fn lexeme(&self, id: TokenId) -> &str {
        &self.lexemes[id as usize]
    }

    fn len(&self) -> usize {
        self.lexemes.len()
    }

    /// Words a model may predict: everything except `<s>`.
    fn prediction_size(&self) -> usize {
        self.len() - 1
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ContextStats {
    total: u64,
    ones: u32,
    twos: u32,
    more: u32,
}

type GramCounts = HashMap<Vec<TokenId>, u64>;
type ContextTable = HashMap<Vec<TokenId>, ContextStats>;

#[derive(Debug)]
struct CountsModel {
    smoothing: Smoothing,
    /// counts[k-1]: k-gram occurrence (top order) or continuation counts.
    counts: Vec<GramCounts>,
    /// contexts[k-1]: aggregates over the continuations of each (k-1)-gram.
    contexts: Vec<ContextTable>,
    /// discounts[k-1]: per-order triple (Kneser-Ney only).
    discounts: Vec<DiscountTriple>,
}

#[derive(Debug)]
struct TableEntry {
    log10_prob: f64,
    log10_bow: Option<f64>,
}

#[derive(Debug)]
struct TableModel {
    /// entries[k-1]: k-gram -> probability and backoff weight, log10.
    entries: Vec<HashMap<Vec<TokenId>, TableEntry>>,
}

#[derive(Debug)]
enum Scorer {
    Counts(CountsModel),
    Table(TableModel),
}

/// Immutable n-gram language model.
#[derive(Debug)]
pub struct NGramModel {
    order: usize,
    vocab: Vocabulary,
    scorer: Scorer,
    sentence_count: usize,
    token_count: usize,
    degenerate_discount_orders: Vec<usize>,
}

/// Builds a model from a corpus stream.
pub fn build_model(corpus: &TokenStream, config: ModelConfig) -> Result<NGramModel, LmError> {
    if config.order < 1 {
        return Err(LmError::InvalidOrder);
    }
    let n = config.order;
    let mut vocab = Vocabulary::with_reserved();
    let mut sentences: Vec<(Vec<TokenId>, bool)> = Vec::new();
    let mut token_count = 0usize;
    for sentence in corpus.sentences() {
        let ids: Vec<TokenId> = sentence
            .tokens
            .iter()
            .map(|t| vocab.intern(&t.text))
            .collect();
        token_count += ids.len();
        sentences.push((ids, sentence.terminated));
    }
    if sentences.is_empty() {
        return Err(LmError::EmptyCorpus);
    }

    // top-order counts over padded sentences
    let mut counts: Vec<GramCounts> = vec![GramCounts::new(); n];
    for (ids, terminated) in &sentences {
        let mut padded: Vec<TokenId> = vec![BOS; n - 1];
        padded.extend_from_slice(ids);
        if *terminated {
            padded.push(EOS);
        }
        for end in (n - 1)..padded.len() {
            let gram = padded[end + 1 - n..=end].to_vec();
            *counts[n - 1].entry(gram).or_insert(0) += 1;
        }
        if matches!(config.smoothing, Smoothing::MaxLikelihood) {
            // ML uses raw text counts at every order
            for k in 1..n {
                for end in (n - 1)..padded.len() {
                    let gram = padded[end + 1 - k..=end].to_vec();
                    *counts[k - 1].entry(gram).or_insert(0) += 1;
                }
            }
        }
    }
    if matches!(config.smoothing, Smoothing::ModifiedKneserNey) {
        // lower orders use continuation counts: how many distinct words
        // precede each suffix. Distinct higher-order keys sharing a suffix
        // differ exactly in their first token, so each key contributes one.
        for k in (1..n).rev() {
            let mut lower = GramCounts::new();
            for gram in counts[k].keys() {
                *lower.entry(gram[1..].to_vec()).or_insert(0) += 1;
            }
            counts[k - 1] = lower;
        }
    }

    let mut contexts: Vec<ContextTable> = Vec::with_capacity(n);
    for k in 1..=n {
        let mut table = ContextTable::new();
        for (gram, &c) in &counts[k - 1] {
            let stats = table.entry(gram[..k - 1].to_vec()).or_default();
            stats.total += c;
            match c {
                1 => stats.ones += 1,
                2 => stats.twos += 1,
                _ => stats.more += 1,
            }
        }
        contexts.push(table);
    }

    let mut discounts = Vec::with_capacity(n);
    let mut degenerate = Vec::new();
    for k in 1..=n {
        let (triple, is_degenerate) = estimate_discounts(counts[k - 1].values().copied());
        if is_degenerate {
            degenerate.push(k);
        }
        discounts.push(triple);
    }

    Ok(NGramModel {
        order: n,
        vocab,
        scorer: Scorer::Counts(CountsModel {
            smoothing: config.smoothing,
            counts,
            contexts,
            discounts,
        }),
        sentence_count: sentences.len(),
        token_count,
        degenerate_discount_orders: degenerate,
    })
}

/// Chen-Goodman closed-form discounts from the count-of-counts. Any discount
/// whose formula divides by zero falls back to 0.5; values are clamped into
/// `[DISCOUNT_FLOOR, k]`. Returns the triple and whether any count-of-counts
/// needed for the formulas was zero.
fn estimate_discounts(counts: impl Iterator<Item = u64>) -> (DiscountTriple, bool) {
    let mut n = [0u64; 4];
    for c in counts {
        if (1..=4).contains(&c) {
            n[(c - 1) as usize] += 1;
        }
    }
    let (n1, n2, n3, n4) = (n[0] as f64, n[1] as f64, n[2] as f64, n[3] as f64);
    let degenerate = n.contains(&0);
    let y_defined = n1 + 2.0 * n2 > 0.0;
    let y = if y_defined { n1 / (n1 + 2.0 * n2) } else { 0.0 };
    let raw = [
        if y_defined && n1 > 0.0 {
            1.0 - 2.0 * y * n2 / n1
        } else {
            0.5
        },
        if y_defined && n2 > 0.0 {
            2.0 - 3.0 * y * n3 / n2
        } else {
            0.5
        },
        if y_defined && n3 > 0.0 {
            3.0 - 4.0 * y * n4 / n3
        } else {
            0.5
        },
    ];
    let clamped: Vec<f64> = raw
        .iter()
        .enumerate()
        .map(|(i, d)| d.clamp(DISCOUNT_FLOOR, (i + 1) as f64))
        .collect();
    (
        DiscountTriple {
            d1: clamped[0],
            d2: clamped[1],
            d3plus: clamped[2],
        },
        degenerate,
    )
}

impl CountsModel {
    fn discount_for(&self, order: usize, count: u64) -> f64 {
        if count == 0 {
            return 0.0;
        }
        let d = &self.discounts[order - 1];
        match count {
            1 => d.d1,
            2 => d.d2,
            _ => d.d3plus,
        }
    }

    /// Interpolated probability at level `k` (context holds k-1 ids).
    fn prob(&self, k: usize, ctx: &[TokenId], word: TokenId, uniform: f64) -> f64 {
        if k == 0 {
            return if word == BOS { 0.0 } else { uniform };
        }
        debug_assert_eq!(ctx.len(), k - 1);
        let lower_ctx = if ctx.is_empty() { ctx } else { &ctx[1..] };
        let stats = self.contexts[k - 1].get(ctx);
        let stats = match stats {
            Some(s) if s.total > 0 => s,
            _ => return self.prob(k - 1, lower_ctx, word, uniform),
        };
        let mut key = Vec::with_capacity(k);
        key.extend_from_slice(ctx);
        key.push(word);
        let c = self.counts[k - 1].get(&key).copied().unwrap_or(0);
        let total = stats.total as f64;
        match self.smoothing {
            Smoothing::MaxLikelihood => c as f64 / total,
            Smoothing::ModifiedKneserNey => {
                let d = &self.discounts[k - 1];
                let reserved = d.d1 * stats.ones as f64
                    + d.d2 * stats.twos as f64
                    + d.d3plus * stats.more as f64;
                let gamma = reserved / total;
                let explicit = (c as f64 - self.discount_for(k, c)).max(0.0) / total;
                explicit + gamma * self.prob(k - 1, lower_ctx, word, uniform)
            }
        }
    }
}

impl TableModel {
    fn log10_prob(&self, ctx: &[TokenId], word: TokenId) -> f64 {
        let k = ctx.len() + 1;
        if k <= self.entries.len() {
            let mut key = Vec::with_capacity(k);
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(entry) = self.entries[k - 1].get(&key) {
                return entry.log10_prob;
            }
        }
        if ctx.is_empty() {
            // closed-vocabulary file scoring a truly unknown word
            return f64::NEG_INFINITY;
        }
        let bow = self.entries[ctx.len() - 1]
            .get(ctx)
            .and_then(|e| e.log10_bow)
            .unwrap_or(0.0);
        bow + self.log10_prob(&ctx[1..], word)
    }
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentence_count
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    /// Orders whose count-of-counts were degenerate (some n_i = 0), meaning
    /// the 0.5 fallback or clamping shaped their discounts.
    pub fn degenerate_discount_orders(&self) -> &[usize] {
        &self.degenerate_discount_orders
    }

    /// The estimated discount triple at `order`, when this model was built
    /// from counts with Kneser-Ney smoothing.
    pub fn discounts(&self, order: usize) -> Option<DiscountTriple> {
        match &self.scorer {
            Scorer::Counts(c) if order >= 1 && order <= self.order => Some(c.discounts[order - 1]),
            _ => None,
        }
    }

    /// Every lexeme the model can predict (everything except `<s>`).
    pub fn prediction_vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocab
            .lexemes
            .iter()
            .map(|s| s.as_str())
            .filter(|s| *s != START_MARKER)
    }

    fn map_word(&self, lexeme: &str) -> TokenId {
        self.vocab.lookup(lexeme).unwrap_or(UNK)
    }

    fn prob_ids(&self, ctx: &[TokenId], word: TokenId) -> f64 {
        match &self.scorer {
            Scorer::Counts(c) => {
                let uniform = 1.0 / self.vocab.prediction_size() as f64;
                c.prob(ctx.len() + 1, ctx, word, uniform)
            }
            Scorer::Table(t) => {
                let lp = t.log10_prob(ctx, word);
                10f64.powf(lp)
            }
        }
    }

    /// Probability of `word` after `context`. The context is truncated to
    /// its rightmost n-1 tokens; out-of-vocabulary words map to `<unk>`.
    pub fn probability(&self, context: &[&str], word: &str) -> f64 {
        let start = context.len().saturating_sub(self.order - 1);
        let ctx: Vec<TokenId> = context[start..].iter().map(|w| self.map_word(w)).collect();
        self.prob_ids(&ctx, self.map_word(word))
    }

    /// Writes the model as an ARPA backoff file.
    pub fn export_arpa<W: Write>(&self, w: W) -> Result<(), LmError> {
        arpa::export(self, w)
    }

    /// Reads an ARPA backoff file into a table-scored model.
    pub fn import_arpa<R: BufRead>(r: R) -> Result<NGramModel, LmError> {
        arpa::import(r)
    }

    /// Cross-entropy of `text`, in bits per predicted token. Every
    /// non-boundary token is predicted, plus `</s>` once per terminated
    /// sentence; `<s>` is context only.
    pub fn cross_entropy(&self, text: &TokenStream) -> Result<EntropyResult, LmError> {
        let mut log2_total = 0.0;
        let mut events = 0usize;
        let mut oov = 0usize;
        let ctx_len = self.order - 1;
        for sentence in text.sentences() {
            let mut ctx: Vec<TokenId> = vec![BOS; ctx_len];
            let mut score = |ctx: &mut Vec<TokenId>, id: TokenId| {
                log2_total += self.prob_ids(ctx, id).log2();
                if ctx_len > 0 {
                    ctx.remove(0);
                    ctx.push(id);
                }
            };
            for token in sentence.tokens {
                let id = match self.vocab.lookup(&token.text) {
                    Some(id) => id,
                    None => {
                        oov += 1;
                        UNK
                    }
                };
                score(&mut ctx, id);
                events += 1;
            }
            if sentence.terminated {
                score(&mut ctx, EOS);
                events += 1;
            }
        }
        if events == 0 {
            return Err(LmError::EmptyText);
        }
        let h = -log2_total / events as f64;
        Ok(EntropyResult {
            cross_entropy_bits: h,
            perplexity: h.exp2(),
            token_count: events,
            oov_count: oov,
        })
    }
}
