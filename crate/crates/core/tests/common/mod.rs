#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use invsynth_core::access::AccessSets;
use invsynth_core::{parse_function, FunctionAst, SourceProgram};
use invsynth_core::generate::ProgramGenerator;
use rand::rngs::StdRng;
use rand::Rng;
use regex::Regex;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_text(rel: &str) -> String {
    std::fs::read_to_string(fixtures_dir().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn fixture_ast(rel: &str) -> FunctionAst {
    parse_function(&SourceProgram::new(fixture_text(rel))).unwrap()
}

pub const PROGRAMS: &[&str] = &["reverse", "sum", "fill", "copy", "min_index", "two_phase"];

const NOT_VARIABLES: &[&str] = &[
    "let", "mut", "while", "if", "else", "proof", "assert", "assume", "invariant", "as", "u32", "u64",
    "usize", "int", "forall", "exists", "old", "len", "set", "helper", "observe", "k", "j",
];

/// Line-oriented enumeration over the generator's canonical layout: every
/// variable occurrence in the loop (outside invariant lists) is a read,
/// except the target of a plain `=`; assignment targets, `.set` receivers
/// and `&mut` operands are writes; names bound by `let` inside are dropped.
pub fn enumerate(program: &str) -> AccessSets {
    let ident = Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").unwrap();
    let plain = Regex::new(r"^(\w+) = ").unwrap();
    let compound = Regex::new(r"^(\w+) [+-]= ").unwrap();
    let setter = Regex::new(r"^(\w+)\.set\(").unwrap();
    let borrow = Regex::new(r"&mut (\w+)").unwrap();
    let binder = Regex::new(r"^let (?:mut )?(\w+)").unwrap();

    let lines: Vec<&str> = program.lines().collect();
    let start = lines.iter().position(|l| l.trim_start().starts_with("while ")).unwrap();
    let depth = lines[start].len() - lines[start].trim_start().len();
    let end = start + lines[start..].iter().position(|l| l.len() - l.trim_start().len() == depth && l.trim() == "}").unwrap();

    let (mut reads, mut writes, mut declared) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    let mut in_invariant = false;
    for raw in &lines[start..=end] {
        let line = raw.trim();
        if line == "invariant" {
            in_invariant = true;
            continue;
        }
        if line == "{" {
            in_invariant = false;
        }
        if in_invariant || line.starts_with("//") {
            continue;
        }
        let mut scan = line;
        if let Some(c) = plain.captures(line) {
            writes.insert(c[1].to_string());
            scan = &line[c[0].len()..];
        }
        for re in [&compound, &setter] {
            if let Some(c) = re.captures(line) {
                writes.insert(c[1].to_string());
            }
        }
        for c in borrow.captures_iter(line) {
            writes.insert(c[1].to_string());
        }
        if let Some(c) = binder.captures(line) {
            declared.insert(c[1].to_string());
            scan = line.split_once('=').map(|(_, r)| r).unwrap_or("");
        }
        for m in ident.find_iter(scan) {
            let w = m.as_str();
            if !NOT_VARIABLES.contains(&w) && !w.starts_with(|c: char| c.is_ascii_digit()) {
                reads.insert(w.to_string());
            }
        }
    }
    reads.retain(|v| !declared.contains(v));
    writes.retain(|v| !declared.contains(v));
    AccessSets { reads, writes }
}

const POOL: &[&str] = &["a", "b", "c", "d", "e", "f", "g", "h"];

pub fn names(mask: u8) -> Vec<&'static str> {
    POOL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| *n).collect()
}

pub fn clause_text(ids: &[&str], k: u8) -> String {
    if ids.is_empty() {
        return format!("{k} < 9");
    }
    format!("{} <= {k}", ids.join(" + "))
}

pub fn brute_force(pre: &[(u8, u8)], reads: u8, writes: u8) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (mask, k) in pre {
        let ids = names(*mask);
        let mut any_read = false;
        let mut any_write = false;
        for id in &ids {
            for (i, n) in POOL.iter().enumerate() {
                if n == id {
                    any_read |= reads & (1 << i) != 0;
                    any_write |= writes & (1 << i) != 0;
                }
            }
        }
        let text = clause_text(&ids, *k);
        if any_read && !any_write && !out.contains(&text) {
            out.push(text);
        }
    }
    out
}

pub fn norm(l: &str) -> String {
    l.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn content(text: &str) -> Vec<String> {
    text.lines().map(norm).filter(|l| !l.is_empty()).collect()
}

/// Additive iff every original line survives, in order: LCS == |original|.
pub fn lcs_additive(original: &str, candidate: &str) -> bool {
    let a = content(original);
    let b = content(candidate);
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            dp[i][j] = if a[i - 1] == b[j - 1] { dp[i - 1][j - 1] + 1 } else { dp[i - 1][j].max(dp[i][j - 1]) };
        }
    }
    dp[a.len()][b.len()] == a.len()
}

pub fn insert_lines(rng: &mut StdRng, lines: &mut Vec<String>, n: usize) {
    for k in 0..n {
        let at = rng.random_range(0..=lines.len());
        let line = match rng.random_range(0..4) {
            0 => format!("            inv_{k} >= 0,"),
            1 => format!("        assert(x{k} == x{k});"),
            2 => String::new(),
            _ => format!("    // note {k}"),
        };
        lines.insert(at, line);
    }
}

pub fn join(lines: &[String]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}

pub fn corpus(seed: u64, n: usize) -> Vec<String> {
    let mut g = ProgramGenerator::new(seed);
    let mut out: Vec<String> = PROGRAMS.iter().map(|p| fixture_text(&format!("programs/{p}.rs"))).collect();
    while out.len() < n {
        out.push(g.program());
    }
    out
}
