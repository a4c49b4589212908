//! C++ lexer producing token streams for n-gram modeling.
//!
//! The scanner is total: any byte sequence lexes to some token stream.
//! Comments and preprocessor-continuation backslashes are stripped, string
//! and character literal contents are kept as single tokens, and each
//! physical line becomes one sentence wrapped in `<s>` ... `</s>`.

use std::io::{self, BufRead, Write};

/// Sentence start marker.
pub const START_MARKER: &str = "<s>";
/// Sentence end marker.
pub const END_MARKER: &str = "</s>";

/// Lexical class of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    Keyword,
    NumericLiteral,
    StringLiteral,
    CharLiteral,
    Operator,
    Punctuation,
    Boundary,
}

/// One lexical token. The lexeme itself is the unit of text the language
/// model sees; nothing is normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(text: impl Into<String>, kind: TokenKind) -> Self {
        Token {
            text: text.into(),
            kind,
        }
    }

    pub fn start_marker() -> Self {
        Token::new(START_MARKER, TokenKind::Boundary)
    }

    pub fn end_marker() -> Self {
        Token::new(END_MARKER, TokenKind::Boundary)
    }

    pub fn is_boundary(&self) -> bool {
        self.kind == TokenKind::Boundary
    }
}

/// Ordered token sequence with sentence boundaries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub source_id: String,
}

/// One sentence sliced out of a stream: its non-boundary tokens and whether
/// the stream carried a closing `</s>` for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence<'a> {
    pub tokens: &'a [Token],
    pub terminated: bool,
}

impl TokenStream {
    pub fn new(source_id: impl Into<String>) -> Self {
        TokenStream {
            tokens: Vec::new(),
            source_id: source_id.into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Appends `tokens` as one `<s>`-...-`</s>` wrapped sentence. Empty
    /// sentences are dropped.
    pub fn push_sentence(&mut self, tokens: Vec<Token>) {
        if tokens.is_empty() {
            return;
        }
        self.tokens.push(Token::start_marker());
        self.tokens.extend(tokens);
        self.tokens.push(Token::end_marker());
    }

    /// Appends every sentence of `other`.
    pub fn extend_from(&mut self, other: &TokenStream) {
        self.tokens.extend(other.tokens.iter().cloned());
    }

    /// Splits the stream into sentences. A `<s>` opens a sentence and a
    /// `</s>` terminates it; tokens outside any explicit sentence form an
    /// unterminated fragment.
    pub fn sentences(&self) -> Vec<Sentence<'_>> {
        let mut out = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;
        while i < self.tokens.len() {
            let tok = &self.tokens[i];
            if tok.is_boundary() {
                if start < i {
                    out.push(Sentence {
                        tokens: &self.tokens[start..i],
                        terminated: tok.text == END_MARKER,
                    });
                }
                start = i + 1;
            }
            i += 1;
        }
        if start < self.tokens.len() {
            out.push(Sentence {
                tokens: &self.tokens[start..],
                terminated: false,
            });
        }
        out
    }

    /// Count of non-boundary tokens.
    pub fn word_count(&self) -> usize {
        self.tokens.iter().filter(|t| !t.is_boundary()).count()
    }
}

const CPP_KEYWORDS: &[&str] = &[
    "and",
    "and_eq",
    "asm",
    "auto",
    "bitand",
    "bitor",
    "bool",
    "break",
    "case",
    "catch",
    "char",
    "class",
    "compl",
    "const",
    "const_cast",
    "continue",
    "default",
    "delete",
    "do",
    "double",
    "dynamic_cast",
    "else",
    "enum",
    "explicit",
    "export",
    "extern",
    "false",
    "float",
    "for",
    "friend",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "mutable",
    "namespace",
    "new",
    "not",
    "not_eq",
    "operator",
    "or",
    "or_eq",
    "private",
    "protected",
    "public",
    "register",
    "reinterpret_cast",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "static_cast",
    "struct",
    "switch",
    "template",
    "this",
    "throw",
    "true",
    "try",
    "typedef",
    "typeid",
    "typename",
    "union",
    "unsigned",
    "using",
    "virtual",
    "void",
    "volatile",
    "wchar_t",
    "while",
    "xor",
    "xor_eq",
];

const OPS3: &[&str] = &["<<=", ">>=", "->*", "..."];
const OPS2: &[&str] = &[
    "::", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", ".*",
];
const OPS1: &[char] = &[
    '+', '-', '*', '/', '%', '^', '&', '|', '~', '!', '=', '<', '>', '?', ':', '.',
];
const PUNCT1: &[char] = &['(', ')', '[', ']', '{', '}', ',', ';', '#'];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Lexes one physical line. `in_block_comment` carries `/* ... */` state
/// across lines for whole-file lexing.
fn lex_line(line: &str, in_block_comment: &mut bool) -> Vec<Token> {
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    let n = chars.len();

    while i < n {
        if *in_block_comment {
            // scan for the closing */
            while i < n {
                if chars[i] == '*' && i + 1 < n && chars[i + 1] == '/' {
                    i += 2;
                    *in_block_comment = false;
                    break;
                }
                i += 1;
            }
            continue;
        }
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && i + 1 < n {
            if chars[i + 1] == '/' {
                break; // line comment: rest of line is gone
            }
            if chars[i + 1] == '*' {
                *in_block_comment = true;
                i += 2;
                continue;
            }
        }
        // line-splicing backslash (preprocessor continuations); outside a
        // literal it carries no code content, so it never becomes a token
        if c == '\\' {
            i += 1;
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < n && is_ident_continue(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            // wide literal prefix: L"..." and L'...' are single tokens
            if word == "L" && i < n && (chars[i] == '"' || chars[i] == '\'') {
                let (lit, next) = scan_quoted(&chars, i, chars[i]);
                let kind = if chars[i] == '"' {
                    TokenKind::StringLiteral
                } else {
                    TokenKind::CharLiteral
                };
                tokens.push(Token::new(format!("L{lit}"), kind));
                i = next;
                continue;
            }
            let kind = if CPP_KEYWORDS.binary_search(&word.as_str()).is_ok() {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            tokens.push(Token::new(word, kind));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && i + 1 < n && chars[i + 1].is_ascii_digit()) {
            let start = i;
            i += 1;
            while i < n {
                let d = chars[i];
                if d.is_ascii_alphanumeric() || d == '_' || d == '.' {
                    // exponent signs stay inside the literal: 1e-5, 0x1p+3
                    if matches!(d, 'e' | 'E' | 'p' | 'P')
                        && i + 1 < n
                        && matches!(chars[i + 1], '+' | '-')
                    {
                        i += 2;
                    } else {
                        i += 1;
                    }
                } else {
                    break;
                }
            }
            tokens.push(Token::new(
                chars[start..i].iter().collect::<String>(),
                TokenKind::NumericLiteral,
            ));
            continue;
        }
        if c == '"' || c == '\'' {
            let (lit, next) = scan_quoted(&chars, i, c);
            let kind = if c == '"' {
                TokenKind::StringLiteral
            } else {
                TokenKind::CharLiteral
            };
            tokens.push(Token::new(lit, kind));
            i = next;
            continue;
        }
        // operators, longest match first
        if i + 2 < n {
            let three: String = chars[i..i + 3].iter().collect();
            if OPS3.contains(&three.as_str()) {
                tokens.push(Token::new(three, TokenKind::Operator));
                i += 3;
                continue;
            }
        }
        if i + 1 < n {
            let two: String = chars[i..i + 2].iter().collect();
            if OPS2.contains(&two.as_str()) {
                tokens.push(Token::new(two, TokenKind::Operator));
                i += 2;
                continue;
            }
        }
        if OPS1.contains(&c) {
            tokens.push(Token::new(c.to_string(), TokenKind::Operator));
            i += 1;
            continue;
        }
        if PUNCT1.contains(&c) {
            tokens.push(Token::new(c.to_string(), TokenKind::Punctuation));
            i += 1;
            continue;
        }
        // anything unlexable becomes a single-character punctuation token
        tokens.push(Token::new(c.to_string(), TokenKind::Punctuation));
        i += 1;
    }
    tokens
}

/// Scans a quoted literal starting at the opening quote. Returns the lexeme
/// (quotes included) and the index past it. An unterminated literal runs to
/// the end of the line.
fn scan_quoted(chars: &[char], start: usize, quote: char) -> (String, usize) {
    let mut i = start + 1;
    let n = chars.len();
    while i < n {
        if chars[i] == '\\' && i + 1 < n {
            i += 2;
            continue;
        }
        if chars[i] == quote {
            i += 1;
            break;
        }
        i += 1;
    }
    (chars[start..i].iter().collect(), i)
}

/// Both LF and CR terminate a physical line, so CRLF input works and no
/// token can ever carry a stray carriage return.
fn split_physical_lines(text: &str) -> impl Iterator<Item = &str> {
    text.split(['\n', '\r'])
}

/// Lexes full source text. Each physical line becomes one sentence; block
/// comments may span lines; lines that lex to nothing contribute nothing.
pub fn tokenize_source(text: &str) -> TokenStream {
    let mut stream = TokenStream::default();
    let mut in_block = false;
    for line in split_physical_lines(text) {
        stream.push_sentence(lex_line(line, &mut in_block));
    }
    stream
}

/// Lexes raw bytes, replacing invalid UTF-8 sequences.
pub fn tokenize_bytes(bytes: &[u8]) -> TokenStream {
    tokenize_source(&String::from_utf8_lossy(bytes))
}

/// Lexes diff lines (leading `+`/`-` already removed). Every line is lexed
/// independently: comment state never carries between non-contiguous lines.
/// A line-break character inside an element ends it there (CRLF diffs leave
/// a trailing `\r` on every line).
pub fn tokenize_lines<S: AsRef<str>>(lines: &[S]) -> TokenStream {
    let mut stream = TokenStream::default();
    for line in lines {
        let line = line.as_ref();
        let line = match line.find(['\n', '\r']) {
            Some(end) => &line[..end],
            None => line,
        };
        let mut in_block = false;
        stream.push_sentence(lex_line(line, &mut in_block));
    }
    stream
}

/// Default extensions treated as C++ source.
pub const DEFAULT_CPP_EXTENSIONS: &[&str] = &["cpp", "cc", "cxx", "c", "h", "hpp", "hxx"];

/// Path filter selecting source files by extension, case-insensitively.
#[derive(Debug, Clone)]
pub struct CppPathFilter {
    extensions: Vec<String>,
}

impl Default for CppPathFilter {
    fn default() -> Self {
        CppPathFilter::new(DEFAULT_CPP_EXTENSIONS.iter().map(|s| s.to_string()))
    }
}

impl CppPathFilter {
    pub fn new(extensions: impl IntoIterator<Item = String>) -> Self {
        CppPathFilter {
            extensions: extensions
                .into_iter()
                .map(|e| e.to_ascii_lowercase())
                .collect(),
        }
    }

    pub fn matches(&self, path: &str) -> bool {
        let name = path.rsplit(['/', '\\']).next().unwrap_or(path);
        match name.rsplit_once('.') {
            Some((stem, ext)) if !stem.is_empty() => {
                let ext = ext.to_ascii_lowercase();
                self.extensions.contains(&ext)
            }
            _ => false,
        }
    }
}

/// True iff `path` has one of the default C++ extensions.
pub fn is_cpp_path(path: &str) -> bool {
    CppPathFilter::default().matches(path)
}

pub(crate) fn escape_lexeme(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            ' ' => out.push_str("\\s"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape_lexeme(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('s') => out.push(' '),
                Some('t') => out.push('\t'),
                Some('\\') => out.push('\\'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Writes a stream in corpus text format: one sentence per line, tokens
/// separated by single spaces, boundary markers implicit. Whitespace and
/// backslashes inside lexemes are escaped so the format stays space-delimited.
pub fn write_corpus<W: Write>(stream: &TokenStream, mut w: W) -> io::Result<()> {
    for sentence in stream.sentences() {
        let line: Vec<String> = sentence
            .tokens
            .iter()
            .map(|t| escape_lexeme(&t.text))
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Reads a corpus text file back into a stream. Every non-empty line becomes
/// one terminated sentence.
pub fn read_corpus<R: BufRead>(r: R, source_id: impl Into<String>) -> io::Result<TokenStream> {
    let mut stream = TokenStream::new(source_id);
    for line in r.lines() {
        let line = line?;
        let tokens: Vec<Token> = line
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(|t| Token::new(unescape_lexeme(t), TokenKind::Identifier))
            .collect();
        stream.push_sentence(tokens);
    }
    Ok(stream)
}
