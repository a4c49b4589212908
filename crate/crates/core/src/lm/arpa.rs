//! ARPA model file reading and writing.
//!
//! Interpolation is folded into the stored probabilities, so the file is a
//! standard backoff model: P(w|ctx) is the entry when `ctx w` is listed,
//! otherwise bow(ctx) * P(w|ctx'). Log values are base 10 and written with
//! shortest-round-trip precision. Lexemes are whitespace-escaped the same
//! way corpus files are.
//!
//! `<s>`-run grams that exist only as contexts get the conventional `-99`
//! sentinel probability; their backoff weights are what matters.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::lexer::{escape_lexeme, unescape_lexeme};

use super::{
    ContextStats, CountsModel, LmError, NGramModel, Scorer, Smoothing, TableEntry, TableModel,
    TokenId, Vocabulary, BOS,
};

/// Sentinel log10 probability for grams that are contexts only.
const LOG10_NEVER: f64 = -99.0;

impl CountsModel {
    fn gamma(&self, stats: &ContextStats, order: usize) -> f64 {
        let d = &self.discounts[order - 1];
        (d.d1 * stats.ones as f64 + d.d2 * stats.twos as f64 + d.d3plus * stats.more as f64)
            / stats.total as f64
    }
}

pub(super) fn export<W: Write>(model: &NGramModel, w: W) -> Result<(), LmError> {
    match &model.scorer {
        Scorer::Counts(c) if c.smoothing == Smoothing::ModifiedKneserNey => {
            export_counts(model, c, w)
        }
        Scorer::Table(t) => export_table(model, t, w),
        Scorer::Counts(_) => Err(LmError::ExportUnsupported),
    }
}

fn sort_by_lexemes(model: &NGramModel, keys: &mut [Vec<TokenId>]) {
    keys.sort_by(|a, b| {
        let la: Vec<&str> = a.iter().map(|&id| model.vocab.lexeme(id)).collect();
        let lb: Vec<&str> = b.iter().map(|&id| model.vocab.lexeme(id)).collect();
        la.cmp(&lb)
    });
}

fn export_table<W: Write>(model: &NGramModel, table: &TableModel, mut w: W) -> Result<(), LmError> {
    writeln!(w, "\\data\\")?;
    for (k, entries) in table.entries.iter().enumerate() {
        writeln!(w, "ngram {}={}", k + 1, entries.len())?;
    }
    for (idx, entries) in table.entries.iter().enumerate() {
        writeln!(w)?;
        writeln!(w, "\\{}-grams:", idx + 1)?;
        let mut keys: Vec<Vec<TokenId>> = entries.keys().cloned().collect();
        sort_by_lexemes(model, &mut keys);
        for gram in keys {
            let entry = &entries[&gram];
            let text: Vec<String> = gram
                .iter()
                .map(|&id| escape_lexeme(model.vocab.lexeme(id)))
                .collect();
            match entry.log10_bow {
                Some(b) => writeln!(w, "{}\t{}\t{b}", entry.log10_prob, text.join(" "))?,
                None => writeln!(w, "{}\t{}", entry.log10_prob, text.join(" "))?,
            }
        }
    }
    writeln!(w)?;
    writeln!(w, "\\end\\")?;
    Ok(())
}

fn export_counts<W: Write>(
    model: &NGramModel,
    counts_model: &CountsModel,
    mut w: W,
) -> Result<(), LmError> {
    let n = model.order;
    let uniform = 1.0 / model.vocab.prediction_size() as f64;

    // collect entry keys per order: every counted gram, every unigram in the
    // vocabulary, and every gram that serves as a context at the next order
    let mut sections: Vec<Vec<Vec<TokenId>>> = Vec::with_capacity(n);
    for k in 1..=n {
        let mut keys: Vec<Vec<TokenId>> = if k == 1 {
            (0..model.vocab.len() as TokenId)
                .map(|id| vec![id])
                .collect()
        } else {
            let mut keys: Vec<Vec<TokenId>> = counts_model.counts[k - 1].keys().cloned().collect();
            if k < n {
                for ctx in counts_model.contexts[k].keys() {
                    if !counts_model.counts[k - 1].contains_key(ctx) {
                        keys.push(ctx.clone());
                    }
                }
            }
            keys
        };
        sort_by_lexemes(model, &mut keys);
        sections.push(keys);
    }

    writeln!(w, "\\data\\")?;
    for (k, keys) in sections.iter().enumerate() {
        writeln!(w, "ngram {}={}", k + 1, keys.len())?;
    }
    for (idx, keys) in sections.iter().enumerate() {
        let k = idx + 1;
        writeln!(w)?;
        writeln!(w, "\\{k}-grams:")?;
        for gram in keys {
            let word = *gram.last().expect("grams are non-empty");
            let p = if word == BOS {
                0.0
            } else {
                counts_model.prob(k, &gram[..k - 1], word, uniform)
            };
            let lp = if p > 0.0 { p.log10() } else { LOG10_NEVER };
            let text: Vec<String> = gram
                .iter()
                .map(|&id| escape_lexeme(model.vocab.lexeme(id)))
                .collect();
            let bow = if k < n {
                counts_model.contexts[k]
                    .get(gram)
                    .filter(|s| s.total > 0)
                    .map(|s| counts_model.gamma(s, k + 1).log10())
            } else {
                None
            };
            match bow {
                Some(b) => writeln!(w, "{lp}\t{}\t{b}", text.join(" "))?,
                None => writeln!(w, "{lp}\t{}", text.join(" "))?,
            }
        }
    }
    writeln!(w)?;
    writeln!(w, "\\end\\")?;
    Ok(())
}

pub(super) fn import<R: BufRead>(reader: R) -> Result<NGramModel, LmError> {
    let err = |line: usize, problem: &str| LmError::Arpa {
        line,
        problem: problem.to_string(),
    };
    let mut lines = Vec::new();
    for line in reader.lines() {
        lines.push(line?);
    }
    let mut pos = 0usize;

    // anything before \data\ is preamble
    while pos < lines.len() && lines[pos].trim() != "\\data\\" {
        pos += 1;
    }
    if pos == lines.len() {
        return Err(err(lines.len(), "missing \\data\\ section"));
    }
    pos += 1;

    let mut declared: Vec<usize> = Vec::new();
    while pos < lines.len() {
        let line = lines[pos].trim();
        if line.is_empty() {
            pos += 1;
            continue;
        }
        if line.starts_with('\\') {
            break;
        }
        let spec = line
            .strip_prefix("ngram ")
            .and_then(|rest| rest.split_once('='))
            .and_then(|(k, count)| {
                Some((
                    k.trim().parse::<usize>().ok()?,
                    count.trim().parse::<usize>().ok()?,
                ))
            });
        match spec {
            Some((k, count)) if k == declared.len() + 1 => declared.push(count),
            _ => return Err(err(pos + 1, "malformed ngram count line")),
        }
        pos += 1;
    }
    if declared.is_empty() {
        return Err(err(pos + 1, "empty \\data\\ section"));
    }

    let order = declared.len();
    let mut vocab = Vocabulary::with_reserved();
    let mut entries: Vec<HashMap<Vec<TokenId>, TableEntry>> =
        (0..order).map(|_| HashMap::new()).collect();

    for (k, &count) in declared.iter().enumerate().map(|(i, c)| (i + 1, c)) {
        while pos < lines.len() && lines[pos].trim().is_empty() {
            pos += 1;
        }
        let expected = format!("\\{k}-grams:");
        if pos == lines.len() || lines[pos].trim() != expected {
            return Err(err(pos + 1, &format!("expected section header {expected}")));
        }
        pos += 1;
        let mut parsed = 0usize;
        while parsed < count {
            if pos == lines.len() {
                return Err(err(pos, &format!("{expected} section ended early")));
            }
            let line = lines[pos].trim();
            if line.is_empty() {
                pos += 1;
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != k + 1 && fields.len() != k + 2 {
                return Err(err(
                    pos + 1,
                    &format!("expected {} or {} fields", k + 1, k + 2),
                ));
            }
            let log10_prob: f64 = fields[0]
                .parse()
                .map_err(|_| err(pos + 1, "unparseable log probability"))?;
            let gram: Vec<TokenId> = fields[1..=k]
                .iter()
                .map(|lex| vocab.intern(&unescape_lexeme(lex)))
                .collect();
            let log10_bow = if fields.len() == k + 2 {
                Some(
                    fields[k + 1]
                        .parse()
                        .map_err(|_| err(pos + 1, "unparseable backoff"))?,
                )
            } else {
                None
            };
            entries[k - 1].insert(
                gram,
                TableEntry {
                    log10_prob,
                    log10_bow,
                },
            );
            parsed += 1;
            pos += 1;
        }
    }

    while pos < lines.len() && lines[pos].trim().is_empty() {
        pos += 1;
    }
    if pos == lines.len() || lines[pos].trim() != "\\end\\" {
        return Err(err(pos + 1, "missing \\end\\ marker"));
    }

    Ok(NGramModel {
        order,
        vocab,
        scorer: Scorer::Table(TableModel { entries }),
        sentence_count: 0,
        token_count: 0,
        degenerate_discount_orders: Vec::new(),
    })
}
