//! Free-variable extraction over expression token streams.

use std::collections::BTreeSet;

use super::lexer::{tokenize, Token, TokenKind};
use super::ParseError;

const KEYWORDS: &[&str] = &[
    "as", "if", "else", "let", "mut", "ref", "true", "false", "forall", "exists", "choose", "old",
    "int", "nat", "bool", "char", "u8", "u16", "u32", "u64", "u128", "usize", "i8", "i16", "i32",
    "i64", "i128", "isize", "Self", "self", "in", "return",
];

const QUANTIFIERS: &[&str] = &["forall", "exists", "choose"];

fn is_open(t: &str) -> bool {
    matches!(t, "(" | "[" | "{")
}

fn is_close(t: &str) -> bool {
    matches!(t, ")" | "]" | "}")
}

fn matches_pair(open: &str, close: &str) -> bool {
    matches!((open, close), ("(", ")") | ("[", "]") | ("{", "}"))
}

/// Returns the free program variables referenced by a single clause.
///
/// Quantifier-bound names are excluded for the extent of the quantifier body;
/// `old(v)` contributes `v`.
pub fn extract_identifiers(spec_text: &str) -> Result<BTreeSet<String>, ParseError> {
    let tokens = tokenize(spec_text)?;
    identifiers_in(spec_text, &tokens)
}

pub(crate) fn identifiers_in(src: &str, tokens: &[Token]) -> Result<BTreeSet<String>, ParseError> {
    let toks: Vec<&Token> = tokens.iter().filter(|t| t.kind != TokenKind::Comment).collect();
    let text = |i: usize| toks.get(i).map(|t| t.text(src)).unwrap_or("");

    let mut out = BTreeSet::new();
    let mut delims: Vec<(&str, usize)> = Vec::new();
    // (depth at which the quantifier appeared, bound names)
    let mut scopes: Vec<(usize, Vec<String>)> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let tok = toks[i];
        let t = tok.text(src);
        if is_open(t) {
            delims.push((t, tok.line));
            i += 1;
            continue;
        }
        if is_close(t) {
            match delims.pop() {
                Some((open, _)) if matches_pair(open, t) => {}
                _ => return Err(ParseError::new(tok.line, format!("unbalanced `{t}`"))),
            }
            let depth = delims.len();
            scopes.retain(|(d, _)| *d <= depth);
            i += 1;
            continue;
        }
        if t == "," || t == ";" {
            let depth = delims.len();
            scopes.retain(|(d, _)| *d < depth);
            i += 1;
            continue;
        }
        // `#[trigger]`-style attributes
        if t == "#" && text(i + 1) == "[" {
            let mut j = i + 2;
            let mut nest = 1;
            while j < toks.len() && nest > 0 {
                match text(j) {
                    "[" => nest += 1,
                    "]" => nest -= 1,
                    _ => {}
                }
                j += 1;
            }
            if nest != 0 {
                return Err(ParseError::new(tok.line, "unbalanced `#[`"));
            }
            i = j;
            continue;
        }
        if tok.kind != TokenKind::Ident {
            i += 1;
            continue;
        }
        if QUANTIFIERS.contains(&t) && text(i + 1) == "||" {
            i += 2;
            continue;
        }
        if QUANTIFIERS.contains(&t) && text(i + 1) == "|" {
            let mut names = Vec::new();
            let mut j = i + 2;
            let mut expect_name = true;
            let mut nest = 0usize;
            loop {
                let Some(bt) = toks.get(j) else {
                    return Err(ParseError::new(tok.line, format!("unterminated `{t}` binder")));
                };
                let b = bt.text(src);
                match b {
                    "|" if nest == 0 => break,
                    "(" | "[" | "<" => nest += 1,
                    ")" | "]" | ">" => nest = nest.saturating_sub(1),
                    "," if nest == 0 => {
                        expect_name = true;
                        j += 1;
                        continue;
                    }
                    _ => {}
                }
                if expect_name && bt.kind == TokenKind::Ident {
                    names.push(b.to_string());
                }
                expect_name = false;
                j += 1;
            }
            scopes.push((delims.len(), names));
            i = j + 1;
            continue;
        }
        if t == "as" {
            // skip the cast's target type
            i += 2;
            while text(i) == "::" {
                i += 2;
            }
            continue;
        }
        let prev = if i > 0 { text(i - 1) } else { "" };
        let next = text(i + 1);
        let is_member = prev == "." || prev == "::";
        let is_callee_or_path = next == "(" || next == "::" || next == "!";
        let bound = scopes.iter().any(|(_, names)| names.iter().any(|n| n == t));
        if !is_member && !is_callee_or_path && !bound && !KEYWORDS.contains(&t) {
            out.insert(t.to_string());
        }
        i += 1;
    }
    if let Some((open, line)) = delims.pop() {
        return Err(ParseError::new(line, format!("unbalanced `{open}`")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(s: &str) -> Vec<String> {
        extract_identifiers(s).unwrap().into_iter().collect()
    }

    #[test]
    fn quantifier_bound_names_are_excluded() {
        assert_eq!(ids("forall |k:int| 0 <= k < N ==> a[k] <= 2"), ["N", "a"]);
        assert_eq!(ids("forall|i: int, j: int| 0 <= i < j < n ==> v[i] <= v[j]"), ["n", "v"]);
    }

    #[test]
    fn literal_true_has_no_identifiers() {
        assert!(ids("true").is_empty());
    }

    #[test]
    fn old_contributes_its_argument() {
        assert_eq!(ids("v.len() == old(v).len()"), ["v"]);
    }

    #[test]
    fn bound_scope_ends_with_enclosing_group() {
        assert_eq!(ids("(forall|i: int| a[i] > 0) && i > 0"), ["a", "i"]);
    }

    #[test]
    fn cast_targets_and_triggers_are_skipped() {
        assert_eq!(ids("i < N as usize"), ["N", "i"]);
        assert_eq!(ids("forall|i: int| #[trigger] a[i] == b"), ["a", "b"]);
    }

    #[test]
    fn unbalanced_delimiters_error() {
        assert!(extract_identifiers("a[(i]").is_err());
        assert!(extract_identifiers("foo(a").is_err());
        assert!(extract_identifiers("a)").is_err());
    }
}
