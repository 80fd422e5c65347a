mod common;

use std::time::Duration;

use common::fixtures_dir;
use invsynth_core::verifier::{
    format_diagnostics, interpret, parse_diagnostics, program_hash, Diagnostic, DiagnosticKind, ProcessVerifier,
    StubVerifier, Verifier, VerifierError, VerifyResult,
};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Labels {
    sample: Vec<Sample>,
}

#[derive(Deserialize)]
struct Sample {
    file: String,
    kinds: Vec<DiagnosticKind>,
    lines: Vec<usize>,
}

fn thirty_lines() -> String {
    (1..=30).map(|i| format!("// line {i}\n")).collect()
}

#[test]
fn labeled_samples() {
    let dir = fixtures_dir().join("diagnostics");
    let labels: Labels = toml::from_str(&std::fs::read_to_string(dir.join("labels.toml")).unwrap()).unwrap();
    assert_eq!(labels.sample.len(), 12);
    let program = thirty_lines();
    for s in &labels.sample {
        let out = std::fs::read_to_string(dir.join(&s.file)).unwrap();
        let VerifyResult::Failed(diags) = interpret(false, "exit status: 1", &out, &program) else {
            panic!("{}: not a failure", s.file);
        };
        let kinds: Vec<DiagnosticKind> = diags.iter().map(|d| d.kind).collect();
        let lines: Vec<usize> = diags.iter().map(|d| d.line.unwrap_or(0)).collect();
        assert_eq!(kinds, s.kinds, "{}", s.file);
        assert_eq!(lines, s.lines, "{}", s.file);
    }
    let out = std::fs::read_to_string(dir.join("05_overflow.txt")).unwrap();
    let d = &parse_diagnostics(&out)[0];
    assert_eq!(d.snippet.as_deref(), Some("        sum = sum + a[i];"));
    assert_eq!(d.message, "possible arithmetic underflow/overflow");
}

#[test]
fn outcome_mapping() {
    let p = thirty_lines();
    assert_eq!(interpret(true, "exit status: 0", "verification results:: 1 verified, 0 errors\n", &p), VerifyResult::Verified);
    assert!(matches!(interpret(false, "exit status: 101", "thread 'main' panicked\n", &p), VerifyResult::Crashed { .. }));
    assert!(matches!(interpret(true, "exit status: 0", "error: assertion failed\n", &p), VerifyResult::Crashed { .. }));
}

fn diag_strategy() -> impl Strategy<Value = Diagnostic> {
    let kinds = vec![
        ("invariant not satisfied at end of loop body", DiagnosticKind::InvariantNotSatisfiedAtEnd),
        ("invariant not satisfied before loop", DiagnosticKind::InvariantNotSatisfiedBeforeLoop),
        ("postcondition not satisfied", DiagnosticKind::PostconditionFailed),
        ("assertion failed", DiagnosticKind::AssertFailed),
        ("possible arithmetic underflow/overflow", DiagnosticKind::ArithmeticOverflow),
        ("mismatched types", DiagnosticKind::SyntaxOrType),
        ("something else went wrong", DiagnosticKind::Other),
    ];
    (prop::sample::select(kinds), prop::option::of(1usize..500), "[a-z][a-z0-9 ()<=+;.]{0,30}[a-z;)]", any::<bool>())
        .prop_map(|((msg, kind), line, snippet, with_snippet)| Diagnostic {
            kind,
            message: msg.to_string(),
            line,
            snippet: (line.is_some() && with_snippet).then(|| format!("    {snippet}")),
        })
}

proptest! {
    #[test]
    fn format_then_parse_is_identity(diags in prop::collection::vec(diag_strategy(), 0..6)) {
        prop_assert_eq!(parse_diagnostics(&format_diagnostics(&diags)), diags);
    }

    #[test]
    fn hash_ignores_layout(lines in prop::collection::vec("[a-z{};=]{1,8}", 1..10), pad in 0usize..4) {
        let a = lines.join("\n");
        let b = lines.iter().map(|l| format!("{}{l}  \n\n", " ".repeat(pad))).collect::<String>();
        prop_assert_eq!(program_hash(&a), program_hash(&b));
    }
}

#[test]
fn stub_is_deterministic_and_strict() {
    let script = format!(
        "[[case]]\nprogram = \"fn f() {{}}\\n\"\nexit_code = 0\n\n[[case]]\nhash = \"{}\"\nexit_code = 1\nnote = \"bad\"\noutput = \"error: assertion failed\\n\"\n",
        program_hash("fn g() {\n    assert(false);\n}\n")
    );
    let stub = StubVerifier::parse(&script).unwrap();
    for _ in 0..3 {
        assert_eq!(stub.verify("fn  f()  {}").unwrap(), VerifyResult::Verified);
        let r = stub.verify("fn g() {\n\n    assert(false);\n}").unwrap();
        assert_eq!(r.feedback()[0].kind, DiagnosticKind::AssertFailed);
    }
    assert!(matches!(stub.verify("fn h() {}"), Err(VerifierError::StubNoMatch { .. })));
    assert!(StubVerifier::parse("[[case]]\nexit_code = 0\n").is_err());
    let with_default = StubVerifier::parse(&format!("{script}\n[default]\nexit_code = 1\noutput = \"error: postcondition not satisfied\\n\"\n")).unwrap();
    assert!(!with_default.verify("fn h() {}").unwrap().is_verified());
}

#[cfg(unix)]
#[test]
fn process_verifier_reads_exit_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let sample = fixtures_dir().join("diagnostics/09_two_kinds.txt");
    let fake = dir.path().join("fake.sh");
    std::fs::write(&fake, format!("#!/bin/sh\ngrep -q 'verus! {{' \"$1\" || exit 3\ngrep -q VERIFY_OK \"$1\" && exit 0\ncat {} >&2\nexit 1\n", sample.display())).unwrap();
    let v = ProcessVerifier::new(&format!("sh {}", fake.display()), Duration::from_secs(10));
    let program = thirty_lines();
    let VerifyResult::Failed(d) = v.verify(&program).unwrap() else { panic!("expected failure") };
    // the sample points into the wrapped file, two lines below the program's own numbering
    let lines: Vec<Option<usize>> = d.iter().map(|x| x.line).collect();
    assert_eq!(lines, [Some(10), Some(13)]);
    assert_eq!(v.verify("// VERIFY_OK\n").unwrap(), VerifyResult::Verified);
    let missing = ProcessVerifier::new("/nonexistent/verus", Duration::from_secs(1));
    assert!(matches!(missing.verify("x"), Err(VerifierError::ExecutableNotFound(_))));
}
