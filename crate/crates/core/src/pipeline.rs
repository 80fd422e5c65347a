//! Per-segment proof search.
//!
//! For each segment: verify the bare sub-program, ask for a proof, add
//! propagated invariants, feed diagnostics back for a bounded number of
//! repair rounds, then hand off to a human. Interfaces between segments are
//! obtained first, one postcondition query per internal boundary.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::access::{loop_access_sets, loop_preconditions, propagate_invariants};
use crate::backend::{Backend, BackendError, CompletionRequest};
use crate::human::{CorrectionClass, HumanError, HumanIo};
use crate::prompting::{
    merge_invariants, parse_reply, postcondition_clauses, program_from_payload, render_prompt, validate_additive,
    AdditiveCheck, LlmReply, PromptError, PromptKind, RepairExtras, TemplateSet,
};
use crate::segmenter::{
    build_prefix_program, build_subprogram, segment_function, BuildError, Granularity, Segment, SegmentError,
    SegmentKind, SegmentPlan,
};
use crate::source_model::{
    parse_function, print_function, walk_stmts, FunctionAst, LoopId, ParseError, SourceProgram, SpecExpr, Stmt,
    StmtKind,
};
use crate::verifier::{Diagnostic, DiagnosticKind, Verifier, VerifierError, VerifyResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttemptPolicy {
    pub max_repair_attempts: usize,
    pub base_temperature: f64,
    pub escalated_temperature: f64,
    pub max_format_retries: usize,
}

impl Default for AttemptPolicy {
    fn default() -> Self {
        AttemptPolicy { max_repair_attempts: 1, base_temperature: 0.0, escalated_temperature: 0.5, max_format_retries: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OutcomeCategory {
    NoProofNeeded,
    DirectVerified,
    AfterPropagation,
    AfterFeedback,
    AfterBoth,
    AfterHuman,
    Unverified,
}

impl OutcomeCategory {
    pub const ALL: [OutcomeCategory; 7] = [
        OutcomeCategory::NoProofNeeded,
        OutcomeCategory::DirectVerified,
        OutcomeCategory::AfterPropagation,
        OutcomeCategory::AfterFeedback,
        OutcomeCategory::AfterBoth,
        OutcomeCategory::AfterHuman,
        OutcomeCategory::Unverified,
    ];

    pub fn label(self) -> &'static str {
        match self {
            OutcomeCategory::NoProofNeeded => "No proof needed",
            OutcomeCategory::DirectVerified => "GPT response verified directly",
            OutcomeCategory::AfterPropagation => "Verified after invariant propagation",
            OutcomeCategory::AfterFeedback => "Verified after error feedback",
            OutcomeCategory::AfterBoth => "Verified after both propagation and feedback",
            OutcomeCategory::AfterHuman => "Verified after human correction",
            OutcomeCategory::Unverified => "Unverified",
        }
    }
}

impl fmt::Display for OutcomeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentOutcome {
    pub category: OutcomeCategory,
    /// Proof and repair calls for this segment, format retries included.
    pub llm_calls: usize,
    pub human_lines_changed: usize,
    pub correction_class: Option<CorrectionClass>,
    /// Calls made at the escalated temperature after a malformed reply.
    pub format_retries: usize,
    pub repair_attempts: usize,
}

impl SegmentOutcome {
    fn new(category: OutcomeCategory, calls: &Calls) -> Self {
        SegmentOutcome {
            category,
            llm_calls: calls.exchanges.len(),
            human_lines_changed: 0,
            correction_class: None,
            format_retries: calls.format_retries,
            repair_attempts: calls.repairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub kind: PromptKind,
    pub segment: usize,
    pub attempt: usize,
    pub temperature: f64,
    pub prompt: String,
    pub reply: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRun {
    pub outcome: SegmentOutcome,
    pub final_program: String,
    pub exchanges: Vec<Exchange>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProveError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Human(#[from] HumanError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("internal error: candidate for segment {segment} is not additive at line {line}")]
    NotAdditive { segment: usize, line: usize },
}

/// Errors that end one program's run without aborting a bench.
#[derive(Debug, thiserror::Error)]
pub enum ProgramError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("cannot segment: {0}")]
    Segment(#[from] SegmentError),
    #[error("no interface for boundary {boundary}: {reason}")]
    InterfaceUnavailable { boundary: usize, reason: String },
}

/// Everything a run needs besides the human.
pub struct Prover<'a> {
    pub backend: &'a dyn Backend,
    pub verifier: &'a dyn Verifier,
    pub templates: &'a TemplateSet,
    pub policy: AttemptPolicy,
    pub propagate_eagerly: bool,
}

// Model calls made on behalf of one segment or boundary.
struct Calls {
    counters: [usize; 3],
    format_budget: usize,
    format_retries: usize,
    repairs: usize,
    exchanges: Vec<Exchange>,
}

impl Calls {
    fn new(policy: &AttemptPolicy) -> Self {
        Calls { counters: [0; 3], format_budget: policy.max_format_retries, format_retries: 0, repairs: 0, exchanges: Vec::new() }
    }
}

enum Evaluated {
    Verified { program: String, needed_propagation: bool },
    Failed { program: String, diagnostics: Vec<Diagnostic> },
}

impl<'a> Prover<'a> {
    /// Sends a prompt, retrying at the escalated temperature while the reply
    /// is malformed and the format budget lasts. `accept` is the final shape
    /// check; its error counts as a malformed reply.
    fn ask<T>(
        &self,
        calls: &mut Calls,
        kind: PromptKind,
        segment: usize,
        subprogram: &str,
        extras: Option<&RepairExtras>,
        accept: impl Fn(&LlmReply) -> Result<T, String>,
    ) -> Result<Option<T>, ProveError> {
        let base = render_prompt(self.templates.get(kind), subprogram, extras)?;
        let mut prompt = base.clone();
        let mut temperature = self.policy.base_temperature;
        loop {
            let idx = kind as usize;
            let attempt = calls.counters[idx];
            calls.counters[idx] += 1;
            let req = CompletionRequest { prompt: prompt.clone(), kind, segment, attempt, temperature };
            let reply = self.backend.complete(&req)?;
            calls.exchanges.push(Exchange {
                kind,
                segment,
                attempt,
                temperature,
                prompt: req.prompt,
                reply: reply.clone(),
            });
            let reason = match parse_reply(&reply, kind.response_schema()) {
                Ok(r) => match accept(&r) {
                    Ok(v) => return Ok(Some(v)),
                    Err(e) => e,
                },
                Err(e) => e.reason,
            };
            log::info!("{kind} reply for {segment} is malformed: {reason}");
            if calls.format_budget == 0 {
                return Ok(None);
            }
            calls.format_budget -= 1;
            calls.format_retries += 1;
            temperature = self.policy.escalated_temperature;
            prompt = format!(
                "{base}\nYour previous response (attempt {}) could not be used: {reason}. Respond again using exactly the required format.\n",
                attempt + 1
            );
        }
    }

    fn verify_candidate(&self, segment: usize, subprogram: &str, candidate: &str) -> Result<VerifyResult, ProveError> {
        if let AdditiveCheck::Violation { line, .. } = validate_additive(subprogram, candidate) {
            return Err(ProveError::NotAdditive { segment, line });
        }
        Ok(self.verifier.verify(candidate)?)
    }

    fn evaluate(
        &self,
        seg: &Segment,
        sub_text: &str,
        propagated: &[Vec<SpecExpr>],
        originals: &[&Stmt],
        payload: &str,
    ) -> Result<Evaluated, ProveError> {
        let candidate = program_from_payload(payload);
        if let AdditiveCheck::Violation { line, text } = validate_additive(sub_text, &candidate) {
            let msg = format!("modified existing line {line}: `{text}`; only adding lines is allowed");
            let mut d = Diagnostic::new(DiagnosticKind::Other, msg);
            d.line = Some(line);
            d.snippet = Some(text);
            return Ok(Evaluated::Failed { program: candidate, diagnostics: vec![d] });
        }
        let ast = match parse_function(&SourceProgram::new(candidate.clone())) {
            Ok(a) => a,
            Err(e) => {
                let mut d = Diagnostic::new(DiagnosticKind::SyntaxOrType, format!("candidate does not parse: {}", e.message));
                d.line = Some(e.line);
                return Ok(Evaluated::Failed { program: candidate, diagnostics: vec![d] });
            }
        };
        let merged = apply_propagation(&ast, originals, propagated)
            .map(|m| print_function(&m))
            .filter(|m| validate_additive(sub_text, m).is_ok() && *m != print_function(&ast));

        if self.propagate_eagerly {
            let program = merged.unwrap_or(candidate);
            let r = self.verify_candidate(seg.id, sub_text, &program)?;
            return Ok(match r {
                VerifyResult::Verified => Evaluated::Verified { program, needed_propagation: false },
                other => Evaluated::Failed { program, diagnostics: other.feedback() },
            });
        }

        let r = self.verify_candidate(seg.id, sub_text, &candidate)?;
        if r.is_verified() {
            // keep propagated clauses in the final proof when they still verify
            if let Some(m) = merged {
                if self.verify_candidate(seg.id, sub_text, &m)?.is_verified() {
                    return Ok(Evaluated::Verified { program: m, needed_propagation: false });
                }
                log::warn!("segment {}: verified proof rejects propagated invariants; keeping it without them", seg.id);
            }
            return Ok(Evaluated::Verified { program: candidate, needed_propagation: false });
        }
        let Some(m) = merged else {
            return Ok(Evaluated::Failed { program: candidate, diagnostics: r.feedback() });
        };
        let r2 = self.verify_candidate(seg.id, sub_text, &m)?;
        Ok(match r2 {
            VerifyResult::Verified => Evaluated::Verified { program: m, needed_propagation: true },
            other => Evaluated::Failed { program: m, diagnostics: other.feedback() },
        })
    }

    /// Runs the state machine for one segment whose interfaces are resolved.
    pub fn prove_segment(
        &self,
        seg: &Segment,
        plan: &SegmentPlan,
        human: &mut dyn HumanIo,
    ) -> Result<SegmentRun, ProveError> {
        let sub = build_subprogram(seg, plan)?;
        let sub_text = print_function(&sub);
        let mut calls = Calls::new(&self.policy);

        let first = self.verifier.verify(&sub_text)?;
        if first.is_verified() {
            return Ok(SegmentRun {
                outcome: SegmentOutcome::new(OutcomeCategory::NoProofNeeded, &calls),
                final_program: sub_text,
                exchanges: Vec::new(),
            });
        }

        let originals: Vec<&Stmt> = seg.stmts.iter().filter(|s| s.is_while()).collect();
        let propagated = segment_propagation(seg, &sub);
        let mut best = sub_text.clone();
        let mut diagnostics = first.feedback();

        let reply = self.ask_payload(&mut calls, PromptKind::Proof, seg.id, &sub_text, None)?;
        let mut verified: Option<(String, OutcomeCategory)> = None;
        if let Some(payload) = reply {
            match self.evaluate(seg, &sub_text, &propagated, &originals, &payload)? {
                Evaluated::Verified { program, needed_propagation } => {
                    let c = if needed_propagation { OutcomeCategory::AfterPropagation } else { OutcomeCategory::DirectVerified };
                    verified = Some((program, c));
                }
                Evaluated::Failed { program, diagnostics: d } => {
                    best = program;
                    diagnostics = d;
                }
            }
            while verified.is_none() && calls.repairs < self.policy.max_repair_attempts {
                calls.repairs += 1;
                let extras = RepairExtras { previous_program: best.clone(), diagnostics: diagnostics.clone() };
                let Some(payload) = self.ask_payload(&mut calls, PromptKind::Repair, seg.id, &sub_text, Some(&extras))? else {
                    break;
                };
                match self.evaluate(seg, &sub_text, &propagated, &originals, &payload)? {
                    Evaluated::Verified { program, needed_propagation } => {
                        let c = if needed_propagation { OutcomeCategory::AfterBoth } else { OutcomeCategory::AfterFeedback };
                        verified = Some((program, c));
                    }
                    Evaluated::Failed { program, diagnostics: d } => {
                        best = program;
                        diagnostics = d;
                    }
                }
            }
        }

        if let Some((program, category)) = verified {
            return Ok(SegmentRun {
                outcome: SegmentOutcome::new(category, &calls),
                final_program: program,
                exchanges: calls.exchanges,
            });
        }

        // hand-off
        let mut outcome = SegmentOutcome::new(OutcomeCategory::Unverified, &calls);
        let mut final_program = best.clone();
        if let Some(edit) = human.fix_segment(seg.id, &best, &diagnostics)? {
            let changed = changed_lines(&best, &edit.text);
            match validate_additive(&sub_text, &edit.text) {
                AdditiveCheck::Violation { line, text } => {
                    log::warn!("segment {}: human edit changes original line {line} (`{text}`); not verified", seg.id);
                }
                AdditiveCheck::Ok if changed == 0 => {}
                AdditiveCheck::Ok => {
                    if self.verify_candidate(seg.id, &sub_text, &edit.text)?.is_verified() {
                        outcome.category = OutcomeCategory::AfterHuman;
                        outcome.human_lines_changed = changed;
                        outcome.correction_class = Some(edit.class.unwrap_or(CorrectionClass::Semantics));
                        final_program = edit.text;
                    }
                }
            }
        }
        Ok(SegmentRun { outcome, final_program, exchanges: calls.exchanges })
    }

    fn ask_payload(
        &self,
        calls: &mut Calls,
        kind: PromptKind,
        segment: usize,
        sub_text: &str,
        extras: Option<&RepairExtras>,
    ) -> Result<Option<String>, ProveError> {
        self.ask(calls, kind, segment, sub_text, extras, |r| Ok(r.payload.clone()))
    }

    /// Fills every internal boundary of `plan`: one postcondition query on the
    /// prefix program, then an optional human edit.
    pub fn resolve_interfaces(
        &self,
        plan: &mut SegmentPlan,
        human: &mut dyn HumanIo,
    ) -> Result<Result<InterfaceLog, ProgramError>, ProveError> {
        let mut log = InterfaceLog::default();
        for k in plan.internal_boundaries() {
            let prefix = print_function(&build_prefix_program(plan, k));
            let mut calls = Calls::new(&self.policy);
            let proposed = self.ask(&mut calls, PromptKind::Postcondition, k, &prefix, None, |r| {
                postcondition_clauses(&r.payload).map_err(|e| format!("postcondition does not parse: {e}"))
            })?;
            log.postcondition_calls += calls.exchanges.len();
            log.format_retries += calls.format_retries;
            log.exchanges.extend(calls.exchanges);
            let proposed_text = proposed.as_ref().map(|cs| clause_listing(cs));
            let clauses = match human.review_interface(k, proposed_text.as_deref())? {
                Some(edited) => {
                    log.interface_lines_edited += changed_lines(proposed_text.as_deref().unwrap_or(""), &edited);
                    match postcondition_clauses(&edited) {
                        Ok(c) => c,
                        Err(e) => {
                            return Ok(Err(ProgramError::InterfaceUnavailable {
                                boundary: k,
                                reason: format!("edited interface does not parse: {e}"),
                            }))
                        }
                    }
                }
                None => match proposed {
                    Some(c) => c,
                    None => {
                        return Ok(Err(ProgramError::InterfaceUnavailable {
                            boundary: k,
                            reason: "no usable reply and no human edit".into(),
                        }))
                    }
                },
            };
            plan.set_boundary(k, clauses);
        }
        Ok(Ok(log))
    }

    /// Segments, resolves interfaces and proves every segment of one program.
    pub fn prove_program(
        &self,
        name: &str,
        source: &str,
        granularity: Granularity,
        human: &mut dyn HumanIo,
    ) -> Result<ProgramRun, ProveError> {
        let start = Instant::now();
        let mut run = ProgramRun::empty(name);
        let ast = match parse_function(&SourceProgram::new(source)) {
            Ok(a) => a,
            Err(e) => return Ok(run.failed(ProgramError::Parse(e), start)),
        };
        let mut plan = match segment_function(&ast, granularity) {
            Ok(p) => p,
            Err(e) => return Ok(run.failed(ProgramError::Segment(e), start)),
        };
        let iface = self.resolve_interfaces(&mut plan, human)?;
        let iface = match iface {
            Ok(l) => l,
            Err(e) => {
                // segments cannot be built without their interfaces
                let calls = Calls::new(&self.policy);
                run.segments = plan
                    .segments()
                    .iter()
                    .map(|s| SegmentEntry {
                        id: s.id,
                        kind: s.kind,
                        outcome: SegmentOutcome::new(OutcomeCategory::Unverified, &calls),
                    })
                    .collect();
                return Ok(run.failed(e, start));
            }
        };
        run.postcondition_calls = iface.postcondition_calls;
        run.interface_format_retries = iface.format_retries;
        run.interface_lines_edited = iface.interface_lines_edited;
        run.exchanges = iface.exchanges;

        let mut finals = Vec::new();
        for seg in plan.segments() {
            let r = self.prove_segment(seg, &plan, human)?;
            log::info!("{name} segment {}: {}", seg.id, r.outcome.category);
            run.segments.push(SegmentEntry { id: seg.id, kind: seg.kind, outcome: r.outcome.clone() });
            run.exchanges.extend(r.exchanges);
            finals.push((r.outcome.category, r.final_program));
        }
        run.final_program = Some(print_function(&assemble(&plan, &finals)));
        run.wall_time_ms = start.elapsed().as_millis() as u64;
        Ok(run)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InterfaceLog {
    pub postcondition_calls: usize,
    pub format_retries: usize,
    pub interface_lines_edited: usize,
    pub exchanges: Vec<Exchange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentEntry {
    pub id: usize,
    pub kind: SegmentKind,
    pub outcome: SegmentOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramRun {
    pub name: String,
    pub segments: Vec<SegmentEntry>,
    pub postcondition_calls: usize,
    pub interface_format_retries: usize,
    pub interface_lines_edited: usize,
    pub wall_time_ms: u64,
    pub error: Option<String>,
    /// Original function with every proven loop's invariants and body taken
    /// from its verified segment.
    pub final_program: Option<String>,
    pub exchanges: Vec<Exchange>,
}

impl ProgramRun {
    fn empty(name: &str) -> Self {
        ProgramRun {
            name: name.to_string(),
            segments: Vec::new(),
            postcondition_calls: 0,
            interface_format_retries: 0,
            interface_lines_edited: 0,
            wall_time_ms: 0,
            error: None,
            final_program: None,
            exchanges: Vec::new(),
        }
    }

    /// A run that stopped on a backend or verifier fault.
    pub fn aborted(name: &str, error: String) -> Self {
        let mut r = Self::empty(name);
        r.error = Some(error);
        r
    }

    fn failed(mut self, e: ProgramError, start: Instant) -> Self {
        log::warn!("{}: {e}", self.name);
        self.error = Some(e.to_string());
        self.wall_time_ms = start.elapsed().as_millis() as u64;
        self
    }

    pub fn llm_calls(&self) -> usize {
        self.exchanges.len()
    }

    pub fn all_verified(&self) -> bool {
        self.error.is_none() && self.segments.iter().all(|s| s.outcome.category != OutcomeCategory::Unverified)
    }
}

fn clause_listing(clauses: &[SpecExpr]) -> String {
    clauses.iter().map(|c| format!("{},\n", c.raw_text())).collect()
}

/// Lines a human touched: per changed hunk, the larger of lines removed and
/// lines added. Whitespace-only changes are ignored.
pub fn changed_lines(before: &str, after: &str) -> usize {
    let norm = |t: &str| -> String {
        t.lines()
            .map(crate::source_model::normalize_whitespace)
            .filter(|l| !l.is_empty())
            .map(|l| l + "\n")
            .collect()
    };
    let (a, b) = (norm(before), norm(after));
    let diff = similar::TextDiff::from_lines(&a, &b);
    diff.ops()
        .iter()
        .map(|op| match *op {
            similar::DiffOp::Equal { .. } => 0,
            similar::DiffOp::Delete { old_len, .. } => old_len,
            similar::DiffOp::Insert { new_len, .. } => new_len,
            similar::DiffOp::Replace { old_len, new_len, .. } => old_len.max(new_len),
        })
        .sum()
}

fn loop_count(stmt: &Stmt) -> usize {
    let mut n = 0;
    walk_stmts(std::slice::from_ref(stmt), &mut |s| {
        if s.is_while() {
            n += 1;
        }
    });
    n
}

/// Pre-order ids of the top-level loops of `f`, with their statements.
fn top_level_loops(f: &FunctionAst) -> Vec<(LoopId, &Stmt)> {
    let mut next = 0;
    let mut out = Vec::new();
    for s in &f.body.stmts {
        if s.is_while() {
            out.push((LoopId(next), s));
        }
        next += loop_count(s);
    }
    out
}

fn loop_condition(s: &Stmt) -> Option<&str> {
    match &s.kind {
        StmtKind::While { condition, .. } => Some(condition.text()),
        _ => None,
    }
}

/// Pairs each original loop with the next candidate loop having the same
/// condition, in order.
fn match_loops<'c>(candidate: &'c FunctionAst, originals: &[&Stmt]) -> Vec<Option<(LoopId, &'c Stmt)>> {
    let loops = top_level_loops(candidate);
    let mut pos = 0;
    originals
        .iter()
        .map(|o| {
            let found = loops[pos..].iter().position(|(_, c)| loop_condition(c) == loop_condition(o))?;
            let hit = loops[pos + found];
            pos += found + 1;
            Some(hit)
        })
        .collect()
}

/// Clauses to add to each of the segment's top-level loops.
fn segment_propagation(seg: &Segment, sub: &FunctionAst) -> Vec<Vec<SpecExpr>> {
    let mut facts: Vec<SpecExpr> = sub.requires.clone();
    facts.extend(seg.entry_interface.iter().cloned());
    seg.stmts
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_while())
        .map(|(i, s)| {
            let pre = loop_preconditions(&facts, &seg.stmts[..i]);
            let acc = loop_access_sets(s).expect("statement is a loop");
            propagate_invariants(&pre, &acc)
                .into_iter()
                .map(|mut c| {
                    c.leading_comments.clear();
                    c.trailing_comment = None;
                    c
                })
                .collect()
        })
        .collect()
}

fn apply_propagation(candidate: &FunctionAst, originals: &[&Stmt], propagated: &[Vec<SpecExpr>]) -> Option<FunctionAst> {
    let mut out = candidate.clone();
    for (hit, extra) in match_loops(candidate, originals).into_iter().zip(propagated) {
        let Some((id, stmt)) = hit else { continue };
        if extra.is_empty() {
            continue;
        }
        let StmtKind::While { invariants, .. } = &stmt.kind else { continue };
        out = merge_invariants(&out, id, invariants, extra).ok()?;
    }
    Some(out)
}

/// The original function with each verified segment's loops replaced by the
/// loops of its final program.
fn assemble(plan: &SegmentPlan, finals: &[(OutcomeCategory, String)]) -> FunctionAst {
    let mut out = plan.function().clone();
    let mut offset = 0;
    for (seg, (category, program)) in plan.segments().iter().zip(finals) {
        let range = offset..offset + seg.stmts.len();
        offset = range.end;
        if *category == OutcomeCategory::Unverified || *category == OutcomeCategory::NoProofNeeded {
            continue;
        }
        let Ok(candidate) = parse_function(&SourceProgram::new(program.clone())) else { continue };
        let originals: Vec<&Stmt> = seg.stmts.iter().filter(|s| s.is_while()).collect();
        let hits = match_loops(&candidate, &originals);
        let mut hits = hits.into_iter();
        for i in range {
            if out.body.stmts[i].is_while() {
                if let Some(Some((_, stmt))) = hits.next() {
                    let mut s = stmt.clone();
                    s.span = out.body.stmts[i].span;
                    out.body.stmts[i] = s;
                }
            }
        }
    }
    out
}
