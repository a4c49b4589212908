//! Seeded generation of code-like corpora for model tests.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use wattgram::lexer::{Token, TokenKind, TokenStream};

const TYPES: &[&str] = &["int", "float", "long", "bool", "char"];
const OPS: &[&str] = &["+", "-", "*", "/"];
const CMPS: &[&str] = &["<", ">", "==", "!="];

fn identifier(rng: &mut ChaCha8Rng, pool: usize) -> String {
    // triangular-ish reuse so count-of-counts stay healthy
    let a = rng.gen_range(0..pool);
    let b = rng.gen_range(0..pool);
    format!("v{}", a.min(b))
}

/// One generated statement as a token list.
fn sentence(rng: &mut ChaCha8Rng, pool: usize) -> Vec<String> {
    let mut t: Vec<String> = Vec::new();
    match rng.gen_range(0..4) {
        0 => {
            t.push(TYPES.choose(rng).unwrap().to_string());
            t.push(identifier(rng, pool));
            t.push("=".into());
            t.push(rng.gen_range(0..50).to_string());
            t.push(";".into());
        }
        1 => {
            t.push(identifier(rng, pool));
            t.push("=".into());
            t.push(identifier(rng, pool));
            t.push(OPS.choose(rng).unwrap().to_string());
            t.push(identifier(rng, pool));
            t.push(";".into());
        }
        2 => {
            t.extend(["if", "("].map(String::from));
            t.push(identifier(rng, pool));
            t.push(CMPS.choose(rng).unwrap().to_string());
            t.push(rng.gen_range(0..10).to_string());
            t.extend([")", "{"].map(String::from));
            t.push(identifier(rng, pool));
            t.extend(["++", ";", "}"].map(String::from));
        }
        _ => {
            t.push("return".into());
            t.push(identifier(rng, pool));
            t.push(";".into());
        }
    }
    t
}

/// Deterministic corpus of `n_sentences` statement-like sentences.
pub fn random_corpus(seed: u64, n_sentences: usize) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_sentences).map(|_| sentence(&mut rng, 25)).collect()
}

/// Held-out texts drawn from the same distribution but a different seed, so
/// they mix seen and unseen n-grams.
pub fn held_out_texts(seed: u64, n_texts: usize, sentences_each: usize) -> Vec<Vec<Vec<String>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_texts)
        .map(|_| {
            (0..sentences_each)
                .map(|_| sentence(&mut rng, 40))
                .collect()
        })
        .collect()
}

/// Token-list sentences as a boundary-marked stream.
pub fn to_stream(sentences: &[Vec<String>], source_id: &str) -> TokenStream {
    let mut stream = TokenStream::new(source_id);
    for s in sentences {
        stream.push_sentence(
            s.iter()
                .map(|w| Token::new(w, TokenKind::Identifier))
                .collect(),
        );
    }
    stream
}

/// Shuffles all non-boundary tokens across the corpus while preserving
/// sentence lengths.
pub fn shuffle_tokens(sentences: &[Vec<String>], seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat: Vec<String> = sentences.iter().flatten().cloned().collect();
    flat.shuffle(&mut rng);
    let mut out = Vec::with_capacity(sentences.len());
    let mut cursor = 0;
    for s in sentences {
        out.push(flat[cursor..cursor + s.len()].to_vec());
        cursor += s.len();
    }
    out
}
