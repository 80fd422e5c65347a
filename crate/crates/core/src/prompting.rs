//! Prompt templates, reply extraction and the additive-only contract.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::source_model::{
    normalize_whitespace, split_clauses, FunctionAst, LoopId, ParseError, SpecExpr, StmtKind,
};
use crate::verifier::{format_diagnostics, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Postcondition,
    Proof,
    Repair,
}

impl PromptKind {
    pub const ALL: [PromptKind; 3] = [PromptKind::Postcondition, PromptKind::Proof, PromptKind::Repair];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Postcondition => "postcondition",
            PromptKind::Proof => "proof",
            PromptKind::Repair => "repair",
        }
    }

    /// Reply fields: `thoughts` first, the payload field second.
    pub fn response_schema(self) -> [&'static str; 2] {
        match self {
            PromptKind::Postcondition => ["thoughts", "postcondition"],
            PromptKind::Proof | PromptKind::Repair => ["thoughts", "verifiable program"],
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown prompt kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotExample {
    pub source_code: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub kind: PromptKind,
    pub preamble: String,
    pub fewshot_examples: Vec<FewShotExample>,
    pub notes: Vec<String>,
    /// Longest prompt, in characters, `render_prompt` will produce.
    pub max_prompt_chars: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("repair prompt needs the previous program and at least one diagnostic")]
    MissingExtras,
    #[error("rendered prompt has {len} characters, limit is {max}")]
    PromptTooLong { len: usize, max: usize },
    #[error("cannot read few-shot examples from {path}: {message}")]
    Examples { path: String, message: String },
}

const POSTCONDITION_PREAMBLE: &str = "\
Given a program in Verus (a Rust-like language)
with its precondition, returns its postcondition.
Some examples and their postconditions are given
below:";

const PROOF_PREAMBLE: &str = "\
Given a program in Verus (a Rust-like language),
add invariants and proofs to make it verifiable.
Some example programs and their verifiable
versions are given below:";

const REPAIR_PREAMBLE: &str = "\
Given a program in Verus (a Rust-like language),
an earlier attempt to add invariants and proofs to it,
and the errors the verifier reported for that attempt,
add invariants and proofs to the program so that it verifies.
Some example repairs are given below:";

const NO_PRIMITIVES: &str = "Do not use Rust primitives such as clone, filter, iter, sum, or count.";
const NO_TERNARY: &str = "Do not use the conditional operator  \"a ? b : c\".";
const ONE_PER_LINE: &str = "Each postcondition takes a separate line.";
const ONLY_ADD: &str = "Do not modify or remove any line in the given program. Only add lines.";

impl PromptTemplate {
    /// Built-in wording with no few-shot examples.
    pub fn builtin(kind: PromptKind) -> Self {
        let (preamble, notes) = match kind {
            PromptKind::Postcondition => (POSTCONDITION_PREAMBLE, vec![NO_PRIMITIVES, NO_TERNARY, ONE_PER_LINE]),
            PromptKind::Proof => (PROOF_PREAMBLE, vec![ONLY_ADD, NO_PRIMITIVES, NO_TERNARY]),
            PromptKind::Repair => (
                REPAIR_PREAMBLE,
                vec![
                    ONLY_ADD,
                    "The earlier attempt may contain wrong invariants; you may leave them out.",
                    NO_PRIMITIVES,
                    NO_TERNARY,
                ],
            ),
        };
        PromptTemplate {
            kind,
            preamble: preamble.to_string(),
            fewshot_examples: Vec::new(),
            notes: notes.into_iter().map(str::to_string).collect(),
            max_prompt_chars: None,
        }
    }

    /// Built-in wording plus the `<name>.input` / `<name>.answer` pairs found
    /// in `dir/<kind>/`, in file-name order. A missing directory gives no
    /// examples.
    pub fn load(kind: PromptKind, dir: &Path) -> Result<Self, PromptError> {
        let mut t = Self::builtin(kind);
        let sub = dir.join(kind.as_str());
        if !sub.is_dir() {
            return Ok(t);
        }
        let err = |message: String| PromptError::Examples { path: sub.display().to_string(), message };
        let mut inputs: Vec<_> = std::fs::read_dir(&sub)
            .map_err(|e| err(e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "input"))
            .collect();
        inputs.sort();
        for input in inputs {
            let answer = input.with_extension("answer");
            let source_code = std::fs::read_to_string(&input).map_err(|e| err(format!("{}: {e}", input.display())))?;
            let answer = std::fs::read_to_string(&answer).map_err(|e| err(format!("{}: {e}", answer.display())))?;
            t.fewshot_examples.push(FewShotExample { source_code, answer });
        }
        Ok(t)
    }

    pub fn response_schema(&self) -> [&'static str; 2] {
        self.kind.response_schema()
    }
}

/// The three templates a run uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub postcondition: PromptTemplate,
    pub proof: PromptTemplate,
    pub repair: PromptTemplate,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        TemplateSet {
            postcondition: PromptTemplate::builtin(PromptKind::Postcondition),
            proof: PromptTemplate::builtin(PromptKind::Proof),
            repair: PromptTemplate::builtin(PromptKind::Repair),
        }
    }

    pub fn load(dir: &Path, max_prompt_chars: Option<usize>) -> Result<Self, PromptError> {
        let mut set = TemplateSet {
            postcondition: PromptTemplate::load(PromptKind::Postcondition, dir)?,
            proof: PromptTemplate::load(PromptKind::Proof, dir)?,
            repair: PromptTemplate::load(PromptKind::Repair, dir)?,
        };
        for t in [&mut set.postcondition, &mut set.proof, &mut set.repair] {
            t.max_prompt_chars = max_prompt_chars;
        }
        Ok(set)
    }

    pub fn get(&self, kind: PromptKind) -> &PromptTemplate {
        match kind {
            PromptKind::Postcondition => &self.postcondition,
            PromptKind::Proof => &self.proof,
            PromptKind::Repair => &self.repair,
        }
    }
}

/// Context a repair prompt quotes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairExtras {
    pub previous_program: String,
    pub diagnostics: Vec<Diagnostic>,
}

fn payload_hint(kind: PromptKind) -> (&'static str, &'static str) {
    match kind {
        PromptKind::Postcondition => (
            "<explain the program and its precondition, then analyze how to write the postcondition>",
            "<postcondition>",
        ),
        PromptKind::Proof => ("<explain the pre and post conditions, and how to write invariants and proofs>", "<program>"),
        PromptKind::Repair => ("<explain the errors, and how to fix the invariants and proofs>", "<program>"),
    }
}

pub fn render_prompt(
    template: &PromptTemplate,
    subprogram: &str,
    extras: Option<&RepairExtras>,
) -> Result<String, PromptError> {
    let kind = template.kind;
    let mut out = String::new();
    out.push_str(&template.preamble);
    out.push('\n');
    for (i, ex) in template.fewshot_examples.iter().enumerate() {
        out.push_str(&format!("\nExample {}:\n", i + 1));
        out.push_str("Program:\n```\n");
        push_block(&mut out, &ex.source_code);
        out.push_str("```\nAnswer:\n```\n");
        push_block(&mut out, &ex.answer);
        out.push_str("```\n");
    }
    out.push_str("\nNotes:\n");
    for (i, n) in template.notes.iter().enumerate() {
        out.push_str(&format!("{}. {n}\n", i + 1));
    }
    if kind == PromptKind::Repair {
        let extras = extras.filter(|e| !e.diagnostics.is_empty()).ok_or(PromptError::MissingExtras)?;
        out.push_str("\nEarlier attempt:\n");
        push_block(&mut out, &extras.previous_program);
        out.push_str("\nVerifier errors:\n");
        push_block(&mut out, format_diagnostics(&extras.diagnostics).trim_end());
    }
    out.push_str("Begin!\nNew Verus program:\n");
    push_block(&mut out, subprogram);
    let [f1, f2] = kind.response_schema();
    let (h1, h2) = payload_hint(kind);
    out.push_str("\nResponse requirements:\n");
    out.push_str("You must respond using the following format and\n");
    out.push_str("ensure the response could be parsed by json.loads:\n");
    out.push_str(&format!("{{\n    \"{f1}\": \"{h1}\",\n    \"{f2}\": \"{h2}\"\n}}\n"));
    if let Some(max) = template.max_prompt_chars {
        let len = out.chars().count();
        if len > max {
            return Err(PromptError::PromptTooLong { len, max });
        }
    }
    Ok(out)
}

fn push_block(out: &mut String, text: &str) {
    out.push_str(text);
    if !text.ends_with('\n') {
        out.push('\n');
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmReply {
    pub thoughts: String,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed reply: {reason}")]
pub struct FormatError {
    pub reason: String,
}

fn format_error(reason: impl Into<String>) -> FormatError {
    FormatError { reason: reason.into() }
}

/// First balanced `{...}` in `raw`, skipping braces inside JSON strings.
pub fn first_object(raw: &str) -> Option<&str> {
    let start = raw.find('{')?;
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in raw[start..].char_indices() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&raw[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

pub fn parse_reply(raw: &str, schema: [&str; 2]) -> Result<LlmReply, FormatError> {
    let obj = first_object(raw).ok_or_else(|| format_error("no complete JSON object in reply"))?;
    let value: serde_json::Value =
        serde_json::from_str(obj).map_err(|e| format_error(format!("invalid JSON: {e}")))?;
    let map = value.as_object().ok_or_else(|| format_error("reply is not a JSON object"))?;
    let mut fields = Vec::with_capacity(2);
    for name in schema {
        let v = map.get(name).ok_or_else(|| format_error(format!("missing field \"{name}\"")))?;
        let s = v.as_str().ok_or_else(|| format_error(format!("field \"{name}\" is not a string")))?;
        fields.push(s.to_string());
    }
    let payload = fields.pop().unwrap_or_default();
    let thoughts = fields.pop().unwrap_or_default();
    if payload.trim().is_empty() {
        return Err(format_error(format!("field \"{}\" is empty", schema[1])));
    }
    Ok(LlmReply { thoughts, payload })
}

/// Serializes a reply in the shape `parse_reply` expects.
pub fn reply_json(reply: &LlmReply, schema: [&str; 2]) -> String {
    let mut map = serde_json::Map::new();
    map.insert(schema[0].to_string(), serde_json::Value::String(reply.thoughts.clone()));
    map.insert(schema[1].to_string(), serde_json::Value::String(reply.payload.clone()));
    serde_json::Value::Object(map).to_string()
}

/// Program text from a proof payload, without a surrounding Markdown fence.
pub fn program_from_payload(payload: &str) -> String {
    let t = payload.trim();
    let Some(rest) = t.strip_prefix("```") else { return ensure_newline(t) };
    let body = rest.split_once('\n').map(|(_, b)| b).unwrap_or("");
    let body = body.trim_end().strip_suffix("```").unwrap_or(body);
    ensure_newline(body.trim_end())
}

fn ensure_newline(s: &str) -> String {
    let mut s = s.to_string();
    s.push('\n');
    s
}

/// Clauses of a postcondition payload: comma-separated, or one per line.
pub fn postcondition_clauses(payload: &str) -> Result<Vec<SpecExpr>, ParseError> {
    let clauses = split_clauses(payload)?;
    if clauses.is_empty() {
        return Err(ParseError::new(1, "no clauses"));
    }
    Ok(clauses)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdditiveCheck {
    Ok,
    /// First original line (1-based) with no match, in order, in the candidate.
    Violation { line: usize, text: String },
}

impl AdditiveCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, AdditiveCheck::Ok)
    }
}

/// Checks that `candidate` only inserts lines into `original`. Lines are
/// compared after whitespace normalization; blank lines are ignored.
pub fn validate_additive(original: &str, candidate: &str) -> AdditiveCheck {
    let mut cand = candidate.lines().map(normalize_whitespace).filter(|l| !l.is_empty());
    for (i, line) in original.lines().enumerate() {
        let norm = normalize_whitespace(line);
        if norm.is_empty() {
            continue;
        }
        if !cand.any(|c| c == norm) {
            return AdditiveCheck::Violation { line: i + 1, text: line.trim().to_string() };
        }
    }
    AdditiveCheck::Ok
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MergeError {
    #[error("no loop with id {0}")]
    UnknownLoop(usize),
}

/// Sets the invariants of one loop to `gpt` followed by `propagated`, with
/// textual duplicates removed.
pub fn merge_invariants(
    program: &FunctionAst,
    loop_id: LoopId,
    gpt: &[SpecExpr],
    propagated: &[SpecExpr],
) -> Result<FunctionAst, MergeError> {
    let mut out = program.clone();
    let stmt = out.loop_mut(loop_id).ok_or(MergeError::UnknownLoop(loop_id.0))?;
    let StmtKind::While { invariants, .. } = &mut stmt.kind else {
        return Err(MergeError::UnknownLoop(loop_id.0));
    };
    let mut seen = HashSet::new();
    *invariants = gpt
        .iter()
        .chain(propagated)
        .filter(|c| seen.insert(c.normalized().to_string()))
        .cloned()
        .collect();
    Ok(out)
}
