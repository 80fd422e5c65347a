mod common;

use common::fixture_text;
use invsynth_core::backend::{Backend, BackendError, CompletionRequest, MockBackend};
use invsynth_core::human::{CorrectionClass, NoHuman, ScriptedHuman};
use invsynth_core::pipeline::{AttemptPolicy, OutcomeCategory, Prover};
use invsynth_core::prompting::{reply_json, LlmReply, PromptKind, TemplateSet};
use invsynth_core::segmenter::{build_subprogram, segment_function, Granularity};
use invsynth_core::verifier::{StubVerifier, Verifier};
use invsynth_core::{parse_function, print_function, SourceProgram, StmtKind};
use proptest::prelude::*;

const THREE_ERRORS: &str = "error: invariant not satisfied at end of loop body\nerror: invariant not satisfied at end of loop body\nerror: postcondition not satisfied\n";
const FAIL: &str = "error: assertion failed\n";

fn proof_reply(program: &str) -> String {
    let r = LlmReply { thoughts: "add loop invariants".into(), payload: program.into() };
    reply_json(&r, PromptKind::Proof.response_schema())
}

fn post_reply(clauses: &str) -> String {
    let r = LlmReply { thoughts: "".into(), payload: clauses.into() };
    reply_json(&r, PromptKind::Postcondition.response_schema())
}

fn insert_after(text: &str, anchor: &str, lines: &[&str]) -> String {
    let mut out = String::new();
    let mut done = false;
    for l in text.lines() {
        out.push_str(l);
        out.push('\n');
        if !done && l == anchor {
            for x in lines {
                out.push_str(x);
                out.push('\n');
            }
            done = true;
        }
    }
    assert!(done, "anchor {anchor:?} not found");
    out
}

fn prover<'a>(b: &'a dyn Backend, v: &'a dyn Verifier, t: &'a TemplateSet, policy: AttemptPolicy) -> Prover<'a> {
    Prover { backend: b, verifier: v, templates: t, policy, propagate_eagerly: false }
}

const REVERSE_INV: [&str; 5] = [
    "            0 <= n <= length / 2,",
    "            v.len() == length,",
    "            forall|i: int| 0 <= i < n ==> v[i] == old(v)[length - i - 1],",
    "            forall|i: int| length - n <= i < length ==> v[i] == old(v)[length - i - 1],",
    "            forall|i: int| n <= i < length - n ==> v[i] == old(v)[i],",
];

fn reverse_sub() -> String {
    let f = parse_function(&SourceProgram::new(fixture_text("programs/reverse.rs"))).unwrap();
    let plan = segment_function(&f, Granularity::Coarse).unwrap();
    print_function(&build_subprogram(&plan.segments()[0], &plan).unwrap())
}

fn reverse_with(n: usize) -> String {
    let mut lines = vec!["        invariant"];
    lines.extend_from_slice(&REVERSE_INV[..n]);
    insert_after(&reverse_sub(), "    while n < length / 2", &lines)
}

#[test]
fn reverse_feedback_walkthrough() {
    let four = reverse_with(4);
    let five = reverse_with(5);
    let backend = MockBackend::new()
        .with_reply(PromptKind::Proof, 0, 0, proof_reply(&four))
        .with_reply(PromptKind::Repair, 0, 0, proof_reply(&five));
    let stub = StubVerifier::default().with_case(&four, 1, THREE_ERRORS).with_case(&five, 0, "").with_default(1, FAIL);
    let t = TemplateSet::builtin();
    let p = prover(&backend, &stub, &t, AttemptPolicy::default());
    let run = p.prove_program("reverse", &fixture_text("programs/reverse.rs"), Granularity::Coarse, &mut NoHuman).unwrap();
    assert_eq!(run.segments.len(), 1);
    assert_eq!(run.segments[0].outcome.category, OutcomeCategory::AfterFeedback);
    assert_eq!(run.llm_calls(), 2);
    // the repair prompt quotes the earlier attempt and its errors
    assert!(run.exchanges[1].prompt.contains("invariant not satisfied at end of loop body"));
    let fin = parse_function(&SourceProgram::new(run.final_program.unwrap())).unwrap();
    let StmtKind::While { invariants, .. } = &fin.loops()[0].kind else { unreachable!() };
    let got: Vec<&str> = invariants.iter().map(|c| c.normalized()).collect();
    let want: Vec<String> = REVERSE_INV.iter().map(|l| l.trim().trim_end_matches(',').to_string()).collect();
    assert_eq!(got, want);
}

#[test]
fn loop_free_segment_needs_no_proof() {
    let backend = MockBackend::new();
    let stub = StubVerifier::default().with_default(0, "");
    let t = TemplateSet::builtin();
    let p = prover(&backend, &stub, &t, AttemptPolicy::default());
    let src = "fn f(x: u64)\n    requires\n        x > 0,\n{\n    assert(x > 0);\n}\n";
    let run = p.prove_program("f", src, Granularity::Fine, &mut NoHuman).unwrap();
    assert_eq!(run.segments[0].outcome.category, OutcomeCategory::NoProofNeeded);
    assert_eq!(run.segments[0].outcome.llm_calls, 0);
    let empty = p.prove_program("e", "fn e()\n{\n}\n", Granularity::Fine, &mut NoHuman).unwrap();
    assert_eq!(empty.segments.len(), 1);
    assert_eq!(empty.segments[0].outcome.category, OutcomeCategory::NoProofNeeded);
}

fn sum_plan_fine() -> (invsynth_core::segmenter::SegmentPlan, String) {
    let f = parse_function(&SourceProgram::new(fixture_text("programs/sum.rs"))).unwrap();
    let mut plan = segment_function(&f, Granularity::Fine).unwrap();
    let c = |t: &str| invsynth_core::SpecExpr::parse(t).unwrap();
    plan.set_boundary(1, vec![c("i == 0")]);
    plan.set_boundary(2, vec![c("i == N"), c("a.len() == N"), c("forall |k:int| 0 <= k < a.len() ==> a[k] <= 2")]);
    plan.set_boundary(3, vec![c("true")]);
    plan.set_boundary(4, vec![c("true")]);
    let sub = print_function(&build_subprogram(&plan.segments()[1], &plan).unwrap());
    (plan, sub)
}

const SUM_GPT: [&str; 4] = [
    "        invariant",
    "            0 <= i <= N,",
    "            a.len() == N,",
    "            forall |k:int| 0 <= k < i ==> a[k] <= 2,",
];

#[test]
fn capped_sum_first_loop_after_propagation() {
    let (plan, sub) = sum_plan_fine();
    let gpt = insert_after(&sub, "    while (i < N as usize)", &SUM_GPT);
    let mut with_bound = SUM_GPT.to_vec();
    with_bound.push("            N <= 0x7FFF_FFFF,");
    let merged = insert_after(&sub, "    while (i < N as usize)", &with_bound);
    let backend = MockBackend::new().with_reply(PromptKind::Proof, 1, 0, proof_reply(&gpt));
    let stub = StubVerifier::default()
        .with_case(&gpt, 1, "error: possible arithmetic underflow/overflow\n")
        .with_case(&merged, 0, "")
        .with_default(1, FAIL);
    let t = TemplateSet::builtin();
    let p = prover(&backend, &stub, &t, AttemptPolicy::default());
    let run = p.prove_segment(&plan.segments()[1], &plan, &mut NoHuman).unwrap();
    assert_eq!(run.outcome.category, OutcomeCategory::AfterPropagation);
    assert_eq!(run.outcome.llm_calls, 1);
    assert_eq!(run.final_program, merged);
}

#[test]
fn direct_verification_keeps_propagated_clause_when_it_verifies() {
    let (plan, sub) = sum_plan_fine();
    let gpt = insert_after(&sub, "    while (i < N as usize)", &SUM_GPT);
    let mut with_bound = SUM_GPT.to_vec();
    with_bound.push("            N <= 0x7FFF_FFFF,");
    let merged = insert_after(&sub, "    while (i < N as usize)", &with_bound);
    let backend = MockBackend::new().with_reply(PromptKind::Proof, 1, 0, proof_reply(&gpt));
    let stub = StubVerifier::default().with_case(&gpt, 0, "").with_case(&merged, 0, "").with_default(1, FAIL);
    let t = TemplateSet::builtin();
    let run = prover(&backend, &stub, &t, AttemptPolicy::default()).prove_segment(&plan.segments()[1], &plan, &mut NoHuman).unwrap();
    assert_eq!(run.outcome.category, OutcomeCategory::DirectVerified);
    assert_eq!(run.final_program, merged);

    let mut eager = prover(&backend, &stub, &t, AttemptPolicy::default());
    eager.propagate_eagerly = true;
    let stub2 = StubVerifier::default().with_case(&merged, 0, "").with_default(1, FAIL);
    eager.verifier = &stub2;
    let run = eager.prove_segment(&plan.segments()[1], &plan, &mut NoHuman).unwrap();
    assert_eq!(run.outcome.category, OutcomeCategory::DirectVerified);
}

#[test]
fn malformed_reply_escalates_temperature_once() {
    let (plan, sub) = sum_plan_fine();
    let gpt = insert_after(&sub, "    while (i < N as usize)", &SUM_GPT);
    let backend = MockBackend::new()
        .with_reply(PromptKind::Proof, 1, 0, "Here you go: {\"thoughts\": \"x\", \"verifiable program\": ")
        .with_reply(PromptKind::Proof, 1, 1, proof_reply(&gpt));
    let stub = StubVerifier::default().with_case(&gpt, 0, "").with_default(1, FAIL);
    let t = TemplateSet::builtin();
    let run = prover(&backend, &stub, &t, AttemptPolicy::default()).prove_segment(&plan.segments()[1], &plan, &mut NoHuman).unwrap();
    assert_eq!(run.outcome.category, OutcomeCategory::DirectVerified);
    assert_eq!(run.outcome.format_retries, 1);
    let temps: Vec<f64> = run.exchanges.iter().map(|e| e.temperature).collect();
    assert_eq!(temps, vec![0.0, 0.5]);
    assert_ne!(run.exchanges[0].prompt, run.exchanges[1].prompt);
}

#[test]
fn format_exhaustion_goes_to_human() {
    let (plan, sub) = sum_plan_fine();
    let fixed = insert_after(&sub, "    while (i < N as usize)", &SUM_GPT);
    let backend = MockBackend::new().with_reply(PromptKind::Proof, 1, 0, "no json").with_reply(PromptKind::Proof, 1, 1, "{}");
    let stub = StubVerifier::default().with_case(&fixed, 0, "").with_default(1, FAIL);
    let t = TemplateSet::builtin();
    let p = prover(&backend, &stub, &t, AttemptPolicy::default());
    let mut human = ScriptedHuman::default().with_segment_edit(1, &fixed, CorrectionClass::Semantics);
    let run = p.prove_segment(&plan.segments()[1], &plan, &mut human).unwrap();
    assert_eq!(run.outcome.category, OutcomeCategory::AfterHuman);
    assert_eq!(run.outcome.llm_calls, 2);
    assert_eq!(run.outcome.human_lines_changed, 4);
    assert_eq!(run.outcome.correction_class, Some(CorrectionClass::Semantics));
    let run = p.prove_segment(&plan.segments()[1], &plan, &mut NoHuman).unwrap();
    assert_eq!(run.outcome.category, OutcomeCategory::Unverified);
}

#[test]
fn non_additive_candidate_is_a_repairable_failure() {
    let (plan, sub) = sum_plan_fine();
    let good = insert_after(&sub, "    while (i < N as usize)", &SUM_GPT);
    let rewritten = good.replace("i = i + 1;", "i += 1;");
    let backend = MockBackend::new()
        .with_reply(PromptKind::Proof, 1, 0, proof_reply(&rewritten))
        .with_reply(PromptKind::Repair, 1, 0, proof_reply(&good));
    let stub = StubVerifier::default().with_case(&good, 0, "").with_default(1, FAIL);
    let t = TemplateSet::builtin();
    let run = prover(&backend, &stub, &t, AttemptPolicy::default()).prove_segment(&plan.segments()[1], &plan, &mut NoHuman).unwrap();
    assert_eq!(run.outcome.category, OutcomeCategory::AfterFeedback);
    assert!(run.exchanges[1].prompt.contains("modified existing line"));
}

#[test]
fn human_fix_of_two_lines() {
    let (plan, sub) = sum_plan_fine();
    let attempt = insert_after(&sub, "    while (i < N as usize)", &SUM_GPT[..2]);
    let fixed = insert_after(&sub, "    while (i < N as usize)", &SUM_GPT);
    let backend = MockBackend::new()
        .with_reply(PromptKind::Proof, 1, 0, proof_reply(&attempt))
        .with_reply(PromptKind::Repair, 1, 0, proof_reply(&attempt));
    let stub = StubVerifier::default().with_case(&fixed, 0, "").with_default(1, FAIL);
    let t = TemplateSet::builtin();
    let mut human = ScriptedHuman::default().with_segment_edit(1, &fixed, CorrectionClass::Syntax);
    let run = prover(&backend, &stub, &t, AttemptPolicy::default()).prove_segment(&plan.segments()[1], &plan, &mut human).unwrap();
    assert_eq!(run.outcome.category, OutcomeCategory::AfterHuman);
    assert_eq!(run.outcome.human_lines_changed, 2);
    assert_eq!(run.outcome.llm_calls, 2);
    assert_eq!(run.outcome.repair_attempts, 1);
}

#[test]
fn interfaces_from_replies_and_human_edits() {
    let f = parse_function(&SourceProgram::new(fixture_text("programs/sum.rs"))).unwrap();
    let backend = MockBackend::new().with_reply(
        PromptKind::Postcondition,
        1,
        0,
        post_reply("i == N,\na.len() == N,\nforall |k:int| 0 <= k < a.len() ==> a[k] <= 2"),
    );
    let stub = StubVerifier::default().with_default(1, FAIL);
    let t = TemplateSet::builtin();
    let p = prover(&backend, &stub, &t, AttemptPolicy::default());

    let mut plan = segment_function(&f, Granularity::Coarse).unwrap();
    let log = p.resolve_interfaces(&mut plan, &mut NoHuman).unwrap().unwrap();
    assert_eq!(log.postcondition_calls, 1);
    let got: Vec<&str> = plan.boundary(1).iter().map(|c| c.raw_text()).collect();
    assert_eq!(got, ["i == N", "a.len() == N", "forall |k:int| 0 <= k < a.len() ==> a[k] <= 2"]);
    assert!(log.exchanges[0].prompt.contains("New Verus program:"));

    let mut plan = segment_function(&f, Granularity::Coarse).unwrap();
    let mut human = ScriptedHuman::default().with_interface_edit(1, "i  ==  N,\nsum == 0");
    p.resolve_interfaces(&mut plan, &mut human).unwrap().unwrap();
    let got: Vec<&str> = plan.boundary(1).iter().map(|c| c.raw_text()).collect();
    // clause text is stored as given, up to whitespace normalization
    assert_eq!(got, ["i == N", "sum == 0"]);

    let single = parse_function(&SourceProgram::new(fixture_text("programs/fill.rs"))).unwrap();
    let mut plan = segment_function(&single, Granularity::Coarse).unwrap();
    let log = p.resolve_interfaces(&mut plan, &mut NoHuman).unwrap().unwrap();
    assert_eq!(log.postcondition_calls, 0);
}

#[test]
fn unusable_interface_marks_program_unverified() {
    let backend = MockBackend::new()
        .with_reply(PromptKind::Postcondition, 1, 0, "?")
        .with_reply(PromptKind::Postcondition, 1, 1, post_reply("a.len( == N"));
    let stub = StubVerifier::default().with_default(1, FAIL);
    let t = TemplateSet::builtin();
    let p = prover(&backend, &stub, &t, AttemptPolicy::default());
    let run = p.prove_program("sum", &fixture_text("programs/sum.rs"), Granularity::Coarse, &mut NoHuman).unwrap();
    assert!(run.error.as_deref().unwrap().contains("boundary 1"));
    assert_eq!(run.segments.len(), 2);
    assert!(run.segments.iter().all(|s| s.outcome.category == OutcomeCategory::Unverified));
}

#[test]
fn backend_faults_are_errors() {
    let backend = MockBackend::new();
    let stub = StubVerifier::default().with_default(1, FAIL);
    let t = TemplateSet::builtin();
    let p = prover(&backend, &stub, &t, AttemptPolicy::default());
    let r = p.prove_program("fill", &fixture_text("programs/fill.rs"), Granularity::Coarse, &mut NoHuman);
    assert!(matches!(r, Err(invsynth_core::pipeline::ProveError::Backend(BackendError::ScriptExhausted { .. }))));
}

#[test]
fn parse_errors_end_the_program_only() {
    let backend = MockBackend::new();
    let stub = StubVerifier::default().with_default(0, "");
    let t = TemplateSet::builtin();
    let p = prover(&backend, &stub, &t, AttemptPolicy::default());
    let run = p.prove_program("bad", "fn f() { for x in y {} }", Granularity::Fine, &mut NoHuman).unwrap();
    assert!(run.error.is_some());
    assert!(run.segments.is_empty());
}

/// Answers every prompt with a fixed text.
struct Constant(String);

impl Backend for Constant {
    fn complete(&self, _: &CompletionRequest) -> Result<String, BackendError> {
        Ok(self.0.clone())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn attempt_bound_holds(repairs in 0usize..4, retries in 0usize..3, garbage in any::<bool>()) {
        let (plan, sub) = sum_plan_fine();
        let failing = insert_after(&sub, "    while (i < N as usize)", &SUM_GPT[..2]);
        let reply = if garbage { "not json".to_string() } else { proof_reply(&failing) };
        let backend = Constant(reply);
        let stub = StubVerifier::default().with_default(1, FAIL);
        let t = TemplateSet::builtin();
        let policy = AttemptPolicy { max_repair_attempts: repairs, max_format_retries: retries, ..AttemptPolicy::default() };
        let run = prover(&backend, &stub, &t, policy).prove_segment(&plan.segments()[1], &plan, &mut NoHuman).unwrap();
        prop_assert_eq!(run.outcome.category, OutcomeCategory::Unverified);
        prop_assert!(run.outcome.llm_calls <= 1 + retries + repairs);
        prop_assert!(run.outcome.repair_attempts <= repairs);
        prop_assert!(run.outcome.format_retries <= retries);
        prop_assert_eq!(run.outcome.llm_calls, run.exchanges.len());
        if !garbage {
            prop_assert_eq!(run.outcome.llm_calls, 1 + repairs);
        }
    }
}
