//! Read/write sets of loops and precondition-to-invariant propagation.
//!
//! A precondition becomes a loop invariant when none of the variables it
//! references is written in the loop and at least one of them is read.

use std::collections::{BTreeSet, HashSet};

use crate::source_model::{walk_stmts, AssignOp, SpecExpr, Stmt, StmtKind};

/// Methods treated as mutating their receiver.
pub const MUTATING_METHODS: &[&str] = &[
    "set", "push", "pop", "insert", "remove", "clear", "swap", "truncate", "append", "extend",
    "reverse", "sort", "resize", "retain", "dedup", "drain", "fill", "set_len", "swap_remove",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessSets {
    pub reads: BTreeSet<String>,
    pub writes: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AccessError {
    #[error("statement at line {line} is not a while loop")]
    NotALoop { line: usize },
}

/// Raw accesses of a statement list, plus the names it binds with `let`.
#[derive(Debug, Clone, Default)]
pub struct StmtAccess {
    pub sets: AccessSets,
    pub declared: BTreeSet<String>,
}

pub fn stmts_access(stmts: &[Stmt]) -> StmtAccess {
    let mut acc = StmtAccess::default();
    walk_stmts(stmts, &mut |s| record(s, &mut acc));
    acc
}

fn record(s: &Stmt, acc: &mut StmtAccess) {
    let reads = &mut acc.sets.reads;
    let writes = &mut acc.sets.writes;
    match &s.kind {
        StmtKind::Let { name, init, .. } => {
            acc.declared.insert(name.clone());
            if let Some(e) = init {
                reads.extend(e.identifiers().iter().cloned());
                writes.extend(e.mut_borrows().iter().cloned());
            }
        }
        StmtKind::Assign { target, op, value } => {
            let root = target.root_identifier().map(str::to_string);
            for id in target.identifiers() {
                if Some(id) != root.as_ref() || *op != AssignOp::Assign {
                    reads.insert(id.clone());
                }
            }
            match root {
                Some(r) => {
                    writes.insert(r);
                }
                // `*p = ..` and similar: everything in the place is written through
                None => writes.extend(target.identifiers().iter().cloned()),
            }
            reads.extend(value.identifiers().iter().cloned());
            writes.extend(value.mut_borrows().iter().cloned());
        }
        StmtKind::MethodCall { receiver, method, args } => {
            reads.extend(receiver.identifiers().iter().cloned());
            if MUTATING_METHODS.contains(&method.as_str()) {
                if let Some(r) = receiver.root_identifier() {
                    writes.insert(r.to_string());
                }
            }
            writes.extend(receiver.mut_borrows().iter().cloned());
            for a in args {
                reads.extend(a.identifiers().iter().cloned());
                writes.extend(a.mut_borrows().iter().cloned());
            }
        }
        StmtKind::While { condition, .. } | StmtKind::If { condition, .. } => {
            reads.extend(condition.identifiers().iter().cloned());
            writes.extend(condition.mut_borrows().iter().cloned());
        }
        StmtKind::Assert(c) | StmtKind::Assume(c) => reads.extend(c.identifiers().iter().cloned()),
        StmtKind::ExprStmt(e) => {
            reads.extend(e.identifiers().iter().cloned());
            writes.extend(e.mut_borrows().iter().cloned());
        }
        StmtKind::ProofBlock(_) => {}
    }
}

/// Variables read and written by a loop (condition and body, transitively),
/// excluding names bound by `let` inside the loop.
pub fn loop_access_sets(stmt: &Stmt) -> Result<AccessSets, AccessError> {
    let StmtKind::While { condition, body, .. } = &stmt.kind else {
        return Err(AccessError::NotALoop { line: stmt.span.start });
    };
    let inner = stmts_access(&body.stmts);
    let mut reads = inner.sets.reads;
    let mut writes = inner.sets.writes;
    reads.extend(condition.identifiers().iter().cloned());
    writes.extend(condition.mut_borrows().iter().cloned());
    reads.retain(|v| !inner.declared.contains(v));
    writes.retain(|v| !inner.declared.contains(v));
    Ok(AccessSets { reads, writes })
}

/// Preconditions to copy into the loop invariant, in input order with
/// textual duplicates removed.
pub fn propagate_invariants(preconditions: &[SpecExpr], acc: &AccessSets) -> Vec<SpecExpr> {
    let mut seen = HashSet::new();
    preconditions
        .iter()
        .filter(|p| {
            let ids = p.identifiers();
            ids.is_disjoint(&acc.writes) && !ids.is_disjoint(&acc.reads)
        })
        .filter(|p| seen.insert(p.normalized().to_string()))
        .cloned()
        .collect()
}

/// Facts known on entry to a segment that still hold when control reaches a
/// loop after `preceding` statements: clauses mentioning anything those
/// statements write or rebind are dropped.
pub fn loop_preconditions(entry_facts: &[SpecExpr], preceding: &[Stmt]) -> Vec<SpecExpr> {
    let acc = stmts_access(preceding);
    entry_facts
        .iter()
        .filter(|f| {
            f.identifiers().is_disjoint(&acc.sets.writes) && f.identifiers().is_disjoint(&acc.declared)
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source_model::{parse_function, SourceProgram};

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn clauses(texts: &[&str]) -> Vec<SpecExpr> {
        texts.iter().map(|t| SpecExpr::parse(t).unwrap()).collect()
    }

    fn first_loop(src: &str) -> Stmt {
        let f = parse_function(&SourceProgram::new(src)).unwrap();
        f.loops()[0].clone()
    }

    #[test]
    fn empty_body_reads_condition_only() {
        let l = first_loop("fn f(c: bool) {\n    while c\n    {\n    }\n}");
        let acc = loop_access_sets(&l).unwrap();
        assert_eq!(acc.reads, set(&["c"]));
        assert!(acc.writes.is_empty());
    }

    #[test]
    fn compound_assignment_reads_its_target() {
        let l = first_loop("fn f(n: u64) {\n    let mut s: u64 = 0;\n    while s < n\n    {\n        s += 1;\n    }\n}");
        let acc = loop_access_sets(&l).unwrap();
        assert_eq!(acc.writes, set(&["s"]));
        assert_eq!(acc.reads, set(&["n", "s"]));
    }

    #[test]
    fn mut_borrow_arguments_are_writes() {
        let l = first_loop("fn f(n: u64, w: &mut Vec<u64>) {\n    while n > 0\n    {\n        helper(&mut w, n);\n    }\n}");
        let acc = loop_access_sets(&l).unwrap();
        assert_eq!(acc.writes, set(&["w"]));
    }

    #[test]
    fn non_loop_is_rejected() {
        let f = parse_function(&SourceProgram::new("fn f() {\n    foo();\n}")).unwrap();
        assert!(loop_access_sets(&f.body.stmts[0]).is_err());
    }

    #[test]
    fn propagation_follows_read_write_rule() {
        let acc = AccessSets { reads: set(&["a", "i", "N"]), writes: set(&["a", "i"]) };
        let out = propagate_invariants(&clauses(&["old(a).len() == N", "N <= 0x7FFF_FFFF"]), &acc);
        assert_eq!(out, clauses(&["N <= 0x7FFF_FFFF"]));
        assert!(propagate_invariants(&[], &acc).is_empty());
    }

    #[test]
    fn propagation_drops_unread_and_duplicate_clauses() {
        let acc = AccessSets { reads: set(&["x"]), writes: set(&[]) };
        let out = propagate_invariants(&clauses(&["x > 0", "y > 0", "x  >  0", "true"]), &acc);
        assert_eq!(out, clauses(&["x > 0"]));
    }

    #[test]
    fn facts_invalidated_by_preceding_statements() {
        let f = parse_function(&SourceProgram::new(
            "fn f(N: u32) {\n    i = 0;\n    let mut sum: u32 = 0;\n}",
        ))
        .unwrap();
        let facts = clauses(&["i == N", "N <= 10", "sum == 3"]);
        assert_eq!(loop_preconditions(&facts, &f.body.stmts), clauses(&["N <= 10"]));
    }
}
