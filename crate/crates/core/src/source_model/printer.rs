//! Canonical pretty-printer. Output reparses to a structurally equal AST.

use std::fmt::Write;

use super::{Block, FunctionAst, SpecExpr, Stmt, StmtKind};

const INDENT: &str = "    ";

pub fn print_function(ast: &FunctionAst) -> String {
    let mut out = String::new();
    for c in &ast.leading_comments {
        writeln!(out, "{c}").unwrap();
    }
    if ast.is_pub {
        out.push_str("pub ");
    }
    let params: Vec<String> = ast.params.iter().map(|p| p.to_string()).collect();
    write!(out, "fn {}({})", ast.name, params.join(", ")).unwrap();
    if let Some(ret) = &ast.return_type {
        write!(out, " -> {ret}").unwrap();
    }
    out.push('\n');
    clause_section(&mut out, 1, "requires", &ast.requires);
    clause_section(&mut out, 1, "ensures", &ast.ensures);
    out.push_str("{\n");
    block_body(&mut out, 1, &ast.body);
    out.push('}');
    for c in &ast.trailing_comments {
        write!(out, "\n{c}").unwrap();
    }
    out.push('\n');
    out
}

/// Prints one statement (and any nested blocks) at the given depth.
pub fn print_stmt(stmt: &Stmt, depth: usize) -> String {
    let mut out = String::new();
    stmt_into(&mut out, depth, stmt);
    out
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn clause_section(out: &mut String, depth: usize, keyword: &str, clauses: &[SpecExpr]) {
    if clauses.is_empty() {
        return;
    }
    pad(out, depth);
    out.push_str(keyword);
    out.push('\n');
    for c in clauses {
        for lc in &c.leading_comments {
            pad(out, depth + 1);
            out.push_str(lc);
            out.push('\n');
        }
        pad(out, depth + 1);
        out.push_str(c.raw_text());
        out.push(',');
        if let Some(tc) = &c.trailing_comment {
            out.push(' ');
            out.push_str(tc);
        }
        out.push('\n');
    }
}

fn block_body(out: &mut String, depth: usize, block: &Block) {
    for s in &block.stmts {
        stmt_into(out, depth, s);
    }
    for c in &block.trailing_comments {
        pad(out, depth);
        out.push_str(c);
        out.push('\n');
    }
}

fn stmt_into(out: &mut String, depth: usize, stmt: &Stmt) {
    for c in &stmt.comments {
        pad(out, depth);
        out.push_str(c);
        out.push('\n');
    }
    pad(out, depth);
    match &stmt.kind {
        StmtKind::Let { name, mutable, type_text, init } => {
            out.push_str("let ");
            if *mutable {
                out.push_str("mut ");
            }
            out.push_str(name);
            if let Some(t) = type_text {
                write!(out, ": {t}").unwrap();
            }
            if let Some(e) = init {
                write!(out, " = {e}").unwrap();
            }
            out.push_str(";\n");
        }
        StmtKind::Assign { target, op, value } => {
            writeln!(out, "{target} {} {value};", op.as_str()).unwrap();
        }
        StmtKind::MethodCall { receiver, method, args } => {
            let args: Vec<&str> = args.iter().map(|a| a.text()).collect();
            writeln!(out, "{receiver}.{method}({});", args.join(", ")).unwrap();
        }
        StmtKind::ExprStmt(e) => writeln!(out, "{e};").unwrap(),
        StmtKind::Assert(s) => writeln!(out, "assert({s});").unwrap(),
        StmtKind::Assume(s) => writeln!(out, "assume({s});").unwrap(),
        StmtKind::ProofBlock(b) => {
            out.push_str("proof {\n");
            block_body(out, depth + 1, b);
            pad(out, depth);
            out.push_str("}\n");
        }
        StmtKind::While { condition, invariants, body } => {
            writeln!(out, "while {condition}").unwrap();
            clause_section(out, depth + 1, "invariant", invariants);
            pad(out, depth);
            out.push_str("{\n");
            block_body(out, depth + 1, body);
            pad(out, depth);
            out.push_str("}\n");
        }
        StmtKind::If { .. } => {
            if_chain(out, depth, stmt);
            out.push('\n');
        }
    }
}

// Prints `if c { .. } [else ..]` without the final newline; the caller has
// already written the indentation for the first line.
fn if_chain(out: &mut String, depth: usize, stmt: &Stmt) {
    let StmtKind::If { condition, then_body, else_body } = &stmt.kind else {
        unreachable!("if_chain called on a non-if statement")
    };
    writeln!(out, "if {condition} {{").unwrap();
    block_body(out, depth + 1, then_body);
    pad(out, depth);
    out.push('}');
    let Some(else_body) = else_body else { return };
    let chained = match else_body.stmts.as_slice() {
        [only] => {
            matches!(only.kind, StmtKind::If { .. })
                && only.comments.is_empty()
                && else_body.trailing_comments.is_empty()
        }
        _ => false,
    };
    if chained {
        out.push_str(" else ");
        if_chain(out, depth, &else_body.stmts[0]);
    } else {
        out.push_str(" else {\n");
        block_body(out, depth + 1, else_body);
        pad(out, depth);
        out.push('}');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source_model::{parse_function, SourceProgram};

    #[test]
    fn empty_body_canonical_form() {
        let f = parse_function(&SourceProgram::new("fn f() { }")).unwrap();
        assert_eq!(print_function(&f), "fn f()\n{\n}\n");
    }

    #[test]
    fn prints_clauses_one_per_line() {
        let src = "pub fn foo(a: &mut Vec<u32>, N: u32) requires old(a).len() == N, N <= 0x7FFF_FFFF { }";
        let f = parse_function(&SourceProgram::new(src)).unwrap();
        assert_eq!(
            print_function(&f),
            "pub fn foo(a: &mut Vec<u32>, N: u32)\n    requires\n        old(a).len() == N,\n        N <= 0x7FFF_FFFF,\n{\n}\n"
        );
    }

    #[test]
    fn reparse_is_structurally_equal() {
        let src = "fn g(x: u8) {\n    // lead\n    if x > 1 {\n        foo();\n    } else if x > 0 {\n        bar();\n    } else {\n        // tail\n    }\n    proof {\n        assert(x == x);\n    }\n}\n// end";
        let f = parse_function(&SourceProgram::new(src)).unwrap();
        let printed = print_function(&f);
        let g = parse_function(&SourceProgram::new(printed.clone())).unwrap();
        assert_eq!(f, g);
        assert_eq!(print_function(&g), printed);
    }
}
