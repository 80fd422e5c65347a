//! Tokenizer for the supported Verus subset.
//!
//! Tokens keep their byte range and 1-based line so the parser can slice the
//! original text for expression clauses and attach line provenance to
//! statements.

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Punct,
    Str,
    /// A `//` comment; the token text includes the slashes.
    Comment,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
    pub line: usize,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }
}

// Longest match first.
const PUNCTS: &[&str] = &[
    "<==>", "===", "==>", "<==", "&&&", "|||", "..=", "<<=", ">>=", "!==", "==", "!=", "<=", ">=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "^=", "&=", "|=", "<<", ">>", "::", "->", "=>", "..",
    "+", "-", "*", "/", "%", "^", "!", "&", "|", "=", "<", ">", "@", ".", ",", ";", ":", "#", "$",
    "?", "~", "(", ")", "[", "]", "{", "}",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    let mut line = 1;
    while pos < bytes.len() {
        let c = bytes[pos];
        if c == b'\n' {
            line += 1;
            pos += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        if src[pos..].starts_with("//") {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            tokens.push(Token { kind: TokenKind::Comment, start, end: pos, line });
            continue;
        }
        if src[pos..].starts_with("/*") {
            return Err(ParseError::new(line, "block comments are not supported"));
        }
        if c == b'_' || c.is_ascii_alphabetic() {
            while pos < bytes.len() && (bytes[pos] == b'_' || bytes[pos].is_ascii_alphanumeric()) {
                pos += 1;
            }
            tokens.push(Token { kind: TokenKind::Ident, start, end: pos, line });
            continue;
        }
        if c.is_ascii_digit() {
            while pos < bytes.len() && (bytes[pos] == b'_' || bytes[pos].is_ascii_alphanumeric()) {
                pos += 1;
            }
            tokens.push(Token { kind: TokenKind::Number, start, end: pos, line });
            continue;
        }
        if c == b'"' {
            pos += 1;
            loop {
                match bytes.get(pos) {
                    None => return Err(ParseError::new(line, "unterminated string literal")),
                    Some(b'\\') => pos += 2,
                    Some(b'"') => {
                        pos += 1;
                        break;
                    }
                    Some(b'\n') => {
                        return Err(ParseError::new(line, "multi-line string literals are not supported"))
                    }
                    Some(_) => pos += 1,
                }
            }
            tokens.push(Token { kind: TokenKind::Str, start, end: pos, line });
            continue;
        }
        if c == b'\'' {
            return Err(ParseError::new(line, "character literals and lifetimes are not supported"));
        }
        match PUNCTS.iter().find(|p| src[pos..].starts_with(*p)) {
            Some(p) => {
                pos += p.len();
                tokens.push(Token { kind: TokenKind::Punct, start, end: pos, line });
            }
            None => {
                let ch = src[pos..].chars().next().unwrap_or('?');
                return Err(ParseError::new(line, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(tokens)
}
