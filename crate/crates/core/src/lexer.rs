//! Python lexer used as the tokenization substrate for every similarity metric.
//!
//! The lexer never fails. Whitespace, line continuations and comments are
//! dropped from the code token stream (comments are still reported through
//! [`lex`]). Unterminated strings run to the end of the line (single-quoted)
//! or to the end of input (triple-quoted) and set [`Lexed::unterminated`].
//! Characters outside the Python lexical grammar become one-character tokens,
//! which degrades to splitting on whitespace and punctuation for text that is
//! not Python at all.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Name,
    Number,
    Str,
    Op,
    Comment,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// Byte offset into the lexed text.
    pub start: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Lexed<'a> {
    pub tokens: Vec<Token<'a>>,
    pub unterminated: bool,
}

impl<'a> Lexed<'a> {
    pub fn code(&self) -> impl Iterator<Item = &Token<'a>> {
        self.tokens.iter().filter(|t| t.kind != TokenKind::Comment)
    }

    pub fn comments(&self) -> impl Iterator<Item = &Token<'a>> {
        self.tokens.iter().filter(|t| t.kind == TokenKind::Comment)
    }
}

/// Ordered code tokens of a piece of source text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        Self {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

const OPS3: [&str; 5] = ["**=", "//=", ">>=", "<<=", "..."];
const OPS2: [&str; 20] = [
    "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
    "^=", "@=", ":=", "<>",
];

/// Code tokens of `code`; comments and whitespace excluded.
pub fn tokenize(code: &str) -> TokenSequence {
    TokenSequence {
        tokens: lex(code).code().map(|t| t.text.to_string()).collect(),
    }
}

pub fn lex(text: &str) -> Lexed<'_> {
    let bytes = text.as_bytes();
    let mut out = Lexed::default();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b' ' || c == b'\t' || c == b'\r' || c == b'\n' || c == b'\x0c' {
            i += 1;
            continue;
        }
        if c == b'\\' && matches!(bytes.get(i + 1), Some(b'\n') | Some(b'\r')) {
            i += 1;
            continue;
        }
        let start = i;
        let kind;
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' && bytes[i] != b'\r' {
                i += 1;
            }
            kind = TokenKind::Comment;
        } else if let Some(quote_at) = string_start(bytes, i) {
            let (end, closed) = scan_string(bytes, quote_at);
            if !closed {
                out.unterminated = true;
            }
            i = end;
            kind = TokenKind::Str;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i = scan_number(bytes, i);
            kind = TokenKind::Number;
        } else if c == b'_' || c.is_ascii_alphabetic() || c >= 0x80 {
            let ch = text[i..].chars().next().unwrap_or('\u{fffd}');
            if ch == '_' || ch.is_alphabetic() {
                i += ch.len_utf8();
                while let Some(ch) = text[i..].chars().next() {
                    if ch == '_' || ch.is_alphanumeric() {
                        i += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                kind = TokenKind::Name;
            } else {
                i += ch.len_utf8();
                kind = TokenKind::Other;
            }
        } else if c.is_ascii_punctuation() {
            let rest = &text[i..];
            let len = OPS3
                .iter()
                .find(|op| rest.starts_with(*op))
                .map(|_| 3)
                .or_else(|| OPS2.iter().find(|op| rest.starts_with(*op)).map(|_| 2))
                .unwrap_or(1);
            i += len;
            kind = TokenKind::Op;
        } else {
            i += 1;
            kind = TokenKind::Other;
        }
        out.tokens.push(Token {
            kind,
            text: &text[start..i],
            start,
        });
    }
    out
}

/// If a string literal (with optional prefix) starts at `i`, the index of its
/// opening quote.
fn string_start(bytes: &[u8], i: usize) -> Option<usize> {
    let is_quote = |b: Option<&u8>| matches!(b, Some(b'"') | Some(b'\''));
    if is_quote(bytes.get(i)) {
        return Some(i);
    }
    let prefix_char = |b: u8| matches!(b.to_ascii_lowercase(), b'r' | b'b' | b'u' | b'f');
    if i > 0 && (bytes[i - 1] == b'_' || bytes[i - 1].is_ascii_alphanumeric()) {
        return None;
    }
    if prefix_char(bytes[i]) {
        if is_quote(bytes.get(i + 1)) {
            return Some(i + 1);
        }
        if bytes.get(i + 1).copied().is_some_and(prefix_char) && is_quote(bytes.get(i + 2)) {
            let pair = [bytes[i].to_ascii_lowercase(), bytes[i + 1].to_ascii_lowercase()];
            if matches!(&pair, b"rb" | b"br" | b"rf" | b"fr") {
                return Some(i + 2);
            }
        }
    }
    None
}

/// Returns (end index, closed).
fn scan_string(bytes: &[u8], q: usize) -> (usize, bool) {
    let quote = bytes[q];
    let triple = bytes.get(q + 1) == Some(&quote) && bytes.get(q + 2) == Some(&quote);
    let mut i = if triple { q + 3 } else { q + 1 };
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'\\' {
            i += 2;
            continue;
        }
        if triple {
            if b == quote && bytes.get(i + 1) == Some(&quote) && bytes.get(i + 2) == Some(&quote) {
                return (i + 3, true);
            }
        } else if b == quote {
            return (i + 1, true);
        } else if b == b'\n' || b == b'\r' {
            return (i, false);
        }
        i += 1;
    }
    (bytes.len().min(i), false)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    let hex = bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X'));
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' {
            i += 1;
        } else if (b == b'+' || b == b'-') && !hex && matches!(bytes[i - 1], b'e' | b'E') {
            i += 1;
        } else {
            break;
        }
    }
    i
}
