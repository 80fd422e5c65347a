//! Running the external verifier and classifying its diagnostics.
//!
//! Two implementations sit behind [`Verifier`]: a subprocess driver for a
//! real Verus installation and a scripted stub that maps normalized program
//! hashes to canned outputs, so the whole pipeline can be tested without one.

use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::source_model::normalize_whitespace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    InvariantNotSatisfiedAtEnd,
    InvariantNotSatisfiedBeforeLoop,
    PostconditionFailed,
    AssertFailed,
    ArithmeticOverflow,
    SyntaxOrType,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
    pub line: Option<usize>,
    pub snippet: Option<String>,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Diagnostic { kind, message: message.into(), line: None, snippet: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyResult {
    Verified,
    Failed(Vec<Diagnostic>),
    Crashed { exit_info: String, raw_output: String },
}

impl VerifyResult {
    pub fn is_verified(&self) -> bool {
        matches!(self, VerifyResult::Verified)
    }

    /// Diagnostics to feed back into a repair prompt. A crash becomes a single
    /// `Other` diagnostic carrying the exit information.
    pub fn feedback(&self) -> Vec<Diagnostic> {
        match self {
            VerifyResult::Verified => Vec::new(),
            VerifyResult::Failed(d) => d.clone(),
            VerifyResult::Crashed { exit_info, raw_output } => {
                let mut msg = format!("verifier crashed ({exit_info})");
                let tail = raw_output.trim();
                if !tail.is_empty() {
                    msg.push_str(": ");
                    msg.push_str(tail.lines().next().unwrap_or_default());
                }
                vec![Diagnostic::new(DiagnosticKind::Other, msg)]
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerifierError {
    #[error("verifier executable not found: {0}")]
    ExecutableNotFound(String),
    #[error("no stub case for program hash {hash} and no default in the script")]
    StubNoMatch { hash: String },
    #[error("invalid stub script {path}: {message}")]
    StubScript { path: PathBuf, message: String },
    #[error("i/o error running verifier: {0}")]
    Io(#[from] std::io::Error),
}

pub trait Verifier: Send + Sync {
    fn verify(&self, program: &str) -> Result<VerifyResult, VerifierError>;
}

// Keyword table, checked in order against the lowercased header message.
const KEYWORDS: &[(&str, DiagnosticKind)] = &[
    ("invariant not satisfied at end of loop body", DiagnosticKind::InvariantNotSatisfiedAtEnd),
    ("invariant not satisfied before loop", DiagnosticKind::InvariantNotSatisfiedBeforeLoop),
    ("postcondition not satisfied", DiagnosticKind::PostconditionFailed),
    ("assertion failed", DiagnosticKind::AssertFailed),
    ("arithmetic underflow/overflow", DiagnosticKind::ArithmeticOverflow),
    ("arithmetic overflow", DiagnosticKind::ArithmeticOverflow),
    ("arithmetic underflow", DiagnosticKind::ArithmeticOverflow),
    ("expected ", DiagnosticKind::SyntaxOrType),
    ("mismatched types", DiagnosticKind::SyntaxOrType),
    ("cannot find", DiagnosticKind::SyntaxOrType),
    ("unresolved", DiagnosticKind::SyntaxOrType),
    ("type annotations needed", DiagnosticKind::SyntaxOrType),
    ("cannot apply", DiagnosticKind::SyntaxOrType),
    ("no method named", DiagnosticKind::SyntaxOrType),
    ("unexpected", DiagnosticKind::SyntaxOrType),
    ("syntax", DiagnosticKind::SyntaxOrType),
    ("type mismatch", DiagnosticKind::SyntaxOrType),
];

pub fn classify(message: &str) -> DiagnosticKind {
    let lower = message.to_lowercase();
    KEYWORDS
        .iter()
        .find(|(k, _)| lower.contains(k))
        .map(|(_, kind)| *kind)
        .unwrap_or(DiagnosticKind::Other)
}

/// Extracts `error: ...` blocks from verifier output, in order. Summary lines
/// such as `error: aborting due to ...` are skipped.
pub fn parse_diagnostics(raw_output: &str) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    let mut current: Option<Diagnostic> = None;
    for line in raw_output.lines() {
        if let Some(msg) = error_header(line) {
            if let Some(d) = current.take() {
                out.push(d);
            }
            if msg.starts_with("aborting due to") || msg.starts_with("could not compile") {
                continue;
            }
            current = Some(Diagnostic::new(classify(msg), msg));
            continue;
        }
        if line.starts_with("warning") || line.starts_with("verification results") {
            if let Some(d) = current.take() {
                out.push(d);
            }
            continue;
        }
        let Some(d) = current.as_mut() else { continue };
        let t = line.trim_start();
        if let Some(loc) = t.strip_prefix("--> ") {
            if d.line.is_none() {
                d.line = location_line(loc);
            }
        } else if let Some((num, code)) = t.split_once(" |") {
            if d.snippet.is_none() && num.trim().parse::<usize>().ok() == d.line && d.line.is_some() {
                let code = code.strip_prefix(' ').unwrap_or(code);
                d.snippet = Some(code.trim_end().to_string());
            }
        }
    }
    out.extend(current);
    out
}

fn error_header(line: &str) -> Option<&str> {
    let rest = line.strip_prefix("error")?;
    let rest = match rest.strip_prefix('[') {
        Some(r) => &r[r.find(']')? + 1..],
        None => rest,
    };
    let msg = rest.strip_prefix(':')?.trim();
    (!msg.is_empty()).then_some(msg)
}

// `path:line:col`; the path itself may contain colons.
fn location_line(loc: &str) -> Option<usize> {
    let mut parts = loc.trim().rsplitn(3, ':');
    let _col = parts.next()?;
    parts.next()?.parse().ok()
}

/// Renders diagnostics in the same shape the parser reads.
pub fn format_diagnostics(diags: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str("error: ");
        out.push_str(&d.message);
        out.push('\n');
        if let Some(line) = d.line {
            out.push_str(&format!("  --> candidate.rs:{line}:1\n"));
            if let Some(s) = &d.snippet {
                out.push_str(&format!("{line:>4} | {s}\n"));
            }
        }
        out.push('\n');
    }
    out
}

/// Maps an exit status and combined output to a result.
pub fn interpret(success: bool, exit_info: &str, output: &str, program: &str) -> VerifyResult {
    interpret_shifted(success, exit_info, output, program, 0)
}

// `offset` lines of boilerplate preceded the program in the checked file.
fn interpret_shifted(success: bool, exit_info: &str, output: &str, program: &str, offset: usize) -> VerifyResult {
    let mut diags = parse_diagnostics(output);
    let lines = program.lines().count();
    for d in &mut diags {
        d.line = d.line.and_then(|l| l.checked_sub(offset));
        if d.line.is_none_or(|l| l == 0 || l > lines) {
            d.line = None;
            d.snippet = None;
        }
    }
    match (success, diags.is_empty()) {
        (true, true) => VerifyResult::Verified,
        (false, false) => VerifyResult::Failed(diags),
        _ => VerifyResult::Crashed { exit_info: exit_info.to_string(), raw_output: output.to_string() },
    }
}

/// Hash of a program with each line whitespace-normalized and blank lines
/// dropped, so layout differences do not matter.
pub fn program_hash(program: &str) -> String {
    let mut h = Sha256::new();
    for line in program.lines().map(normalize_whitespace).filter(|l| !l.is_empty()) {
        h.update(line.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

const VERUS_PRELUDE: &str = "use vstd::prelude::*;\nverus! {\n";
const VERUS_EPILOGUE: &str = "} // verus!\nfn main() {}\n";

/// Runs `<cmd> [args..] <file>` on a temporary copy of the program. A bare
/// function is wrapped in the `verus!` macro with a `main`; diagnostic lines
/// are reported relative to the program itself.
#[derive(Debug, Clone)]
pub struct ProcessVerifier {
    command: Vec<String>,
    timeout: Duration,
}

impl ProcessVerifier {
    /// `command` is split on whitespace; the candidate file is appended.
    pub fn new(command: &str, timeout: Duration) -> Self {
        ProcessVerifier { command: command.split_whitespace().map(str::to_string).collect(), timeout }
    }
}

impl Verifier for ProcessVerifier {
    fn verify(&self, program: &str) -> Result<VerifyResult, VerifierError> {
        let Some((exe, args)) = self.command.split_first() else {
            return Err(VerifierError::ExecutableNotFound(String::new()));
        };
        let dir = tempfile::tempdir()?;
        let file = dir.path().join("candidate.rs");
        let offset = if program.contains("verus!") {
            std::fs::write(&file, program)?;
            0
        } else {
            let mut text = format!("{VERUS_PRELUDE}{program}");
            if !program.ends_with('\n') {
                text.push('\n');
            }
            text.push_str(VERUS_EPILOGUE);
            std::fs::write(&file, text)?;
            VERUS_PRELUDE.lines().count()
        };

        let mut child = match Command::new(exe)
            .args(args)
            .arg(&file)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
        {
            Ok(c) => c,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(VerifierError::ExecutableNotFound(exe.clone()))
            }
            Err(e) => return Err(e.into()),
        };
        let stdout = drain(child.stdout.take());
        let stderr = drain(child.stderr.take());

        let start = Instant::now();
        let status = loop {
            if let Some(s) = child.try_wait()? {
                break Some(s);
            }
            if start.elapsed() >= self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            std::thread::sleep(Duration::from_millis(20));
        };
        let mut output = stderr.join().unwrap_or_default();
        let out = stdout.join().unwrap_or_default();
        if !out.is_empty() {
            if !output.is_empty() && !output.ends_with('\n') {
                output.push('\n');
            }
            output.push_str(&out);
        }
        Ok(match status {
            None => VerifyResult::Crashed {
                exit_info: format!("timeout after {}s", self.timeout.as_secs_f64()),
                raw_output: output,
            },
            Some(s) => interpret_shifted(s.success(), &s.to_string(), &output, program, offset),
        })
    }
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct StubCase {
    hash: Option<String>,
    program: Option<String>,
    #[serde(default)]
    #[allow(dead_code)]
    note: Option<String>,
    exit_code: i32,
    #[serde(default)]
    output: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StubFile {
    #[serde(default)]
    case: Vec<StubCase>,
    default: Option<StubCase>,
}

/// Scripted verifier: each case gives the exit code and raw output for one
/// program, identified by [`program_hash`] or by its full text.
#[derive(Debug, Clone, Default)]
pub struct StubVerifier {
    cases: HashMap<String, (i32, String)>,
    default: Option<(i32, String)>,
}

impl StubVerifier {
    pub fn load(path: &Path) -> Result<Self, VerifierError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VerifierError::StubScript { path: path.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text).map_err(|message| VerifierError::StubScript { path: path.to_path_buf(), message })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let file: StubFile = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut stub = StubVerifier::default();
        for (i, c) in file.case.into_iter().enumerate() {
            let hash = match (c.hash, c.program) {
                (Some(h), None) => h.to_lowercase(),
                (None, Some(p)) => program_hash(&p),
                _ => return Err(format!("case {i}: give exactly one of `hash` or `program`")),
            };
            if let Some(prev) = stub.cases.insert(hash.clone(), (c.exit_code, c.output.clone())) {
                if prev != (c.exit_code, c.output) {
                    return Err(format!("case {i}: conflicting entries for hash {hash}"));
                }
            }
        }
        stub.default = file.default.map(|d| (d.exit_code, d.output));
        Ok(stub)
    }

    pub fn with_case(mut self, program: &str, exit_code: i32, output: &str) -> Self {
        self.cases.insert(program_hash(program), (exit_code, output.to_string()));
        self
    }

    pub fn with_default(mut self, exit_code: i32, output: &str) -> Self {
        self.default = Some((exit_code, output.to_string()));
        self
    }
}

impl Verifier for StubVerifier {
    fn verify(&self, program: &str) -> Result<VerifyResult, VerifierError> {
        let hash = program_hash(program);
        log::debug!("stub verify {hash}");
        let (code, output) = self
            .cases
            .get(&hash)
            .or(self.default.as_ref())
            .ok_or(VerifierError::StubNoMatch { hash })?;
        Ok(interpret(*code == 0, &format!("exit status: {code}"), output, program))
    }
}
