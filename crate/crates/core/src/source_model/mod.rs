//! Representation of the Verus subset the pipeline manipulates.
//!
//! Specification clauses and program expressions are kept as
//! whitespace-normalized source text plus the set of free variables they
//! reference. The verifier does the real type checking and expression
//! parsing; this crate only needs textual insertion and variable queries.

mod ident;
mod lexer;
mod parser;
mod printer;

use std::collections::BTreeSet;
use std::fmt;

pub use ident::extract_identifiers;
pub use parser::{parse_function, split_clauses};
pub use printer::{print_function, print_stmt};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}

/// Source text split into numbered lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceProgram {
    raw_text: String,
    lines: Vec<SourceLine>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceLine {
    pub number: usize,
    pub content: String,
}

impl SourceProgram {
    pub fn new(raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        let lines = raw_text
            .split('\n')
            .enumerate()
            .map(|(i, content)| SourceLine { number: i + 1, content: content.to_string() })
            .collect();
        SourceProgram { raw_text, lines }
    }

    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn lines(&self) -> &[SourceLine] {
        &self.lines
    }

    /// Text of lines `span.start..=span.end`, joined with newlines.
    pub fn span_text(&self, span: LineSpan) -> String {
        self.lines
            .iter()
            .filter(|l| l.number >= span.start && l.number <= span.end)
            .map(|l| l.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Inclusive 1-based line range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

impl LineSpan {
    pub fn new(start: usize, end: usize) -> Self {
        LineSpan { start, end }
    }
}

/// Collapse every whitespace run to a single space and trim the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    /// Type as written, without the `&mut` prefix.
    pub type_text: String,
    pub mutable_ref: bool,
}

impl Param {
    pub fn new(name: impl Into<String>, type_text: impl Into<String>, mutable_ref: bool) -> Self {
        Param { name: name.into(), type_text: type_text.into(), mutable_ref }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mutable_ref {
            write!(f, "{}: &mut {}", self.name, self.type_text)
        } else {
            write!(f, "{}: {}", self.name, self.type_text)
        }
    }
}

/// A specification clause (`requires`, `ensures`, `invariant`, `assert`).
#[derive(Debug, Clone)]
pub struct SpecExpr {
    raw_text: String,
    identifiers: BTreeSet<String>,
    pub leading_comments: Vec<String>,
    pub trailing_comment: Option<String>,
}

impl SpecExpr {
    /// Parses a single clause. Trailing commas are not part of a clause.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let raw_text = normalize_whitespace(text);
        if raw_text.is_empty() {
            return Err(ParseError::new(1, "empty clause"));
        }
        let identifiers = extract_identifiers(&raw_text)?;
        Ok(SpecExpr { raw_text, identifiers, leading_comments: Vec::new(), trailing_comment: None })
    }

    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn identifiers(&self) -> &BTreeSet<String> {
        &self.identifiers
    }

    /// Key used for duplicate suppression.
    pub fn normalized(&self) -> &str {
        &self.raw_text
    }

    pub fn with_trailing_comment(mut self, comment: impl Into<String>) -> Self {
        self.trailing_comment = Some(comment.into());
        self
    }
}

impl PartialEq for SpecExpr {
    fn eq(&self, other: &Self) -> bool {
        self.raw_text == other.raw_text
            && self.leading_comments == other.leading_comments
            && self.trailing_comment == other.trailing_comment
    }
}

impl Eq for SpecExpr {}

impl fmt::Display for SpecExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw_text)
    }
}

/// A program (executable) expression.
#[derive(Debug, Clone)]
pub struct Expr {
    text: String,
    identifiers: BTreeSet<String>,
    mut_borrows: BTreeSet<String>,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let tokens = lexer::tokenize(text)?;
        parser::expr_from_tokens(text, &tokens)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn identifiers(&self) -> &BTreeSet<String> {
        &self.identifiers
    }

    /// Variables passed as `&mut x` somewhere inside the expression.
    pub fn mut_borrows(&self) -> &BTreeSet<String> {
        &self.mut_borrows
    }

    /// Leading identifier of a place expression (`a` for `a[i]`, `s.f`).
    pub fn root_identifier(&self) -> Option<&str> {
        let end = self.text.find(|c: char| !(c == '_' || c.is_ascii_alphanumeric())).unwrap_or(self.text.len());
        let head = &self.text[..end];
        let starts_ok = head.chars().next().is_some_and(|c| c == '_' || c.is_ascii_alphabetic());
        starts_ok.then_some(head)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for Expr {}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
}

impl AssignOp {
    pub fn from_token(tok: &str) -> Option<Self> {
        Some(match tok {
            "=" => AssignOp::Assign,
            "+=" => AssignOp::Add,
            "-=" => AssignOp::Sub,
            "*=" => AssignOp::Mul,
            "/=" => AssignOp::Div,
            "%=" => AssignOp::Rem,
            "&=" => AssignOp::BitAnd,
            "|=" => AssignOp::BitOr,
            "^=" => AssignOp::BitXor,
            "<<=" => AssignOp::Shl,
            ">>=" => AssignOp::Shr,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Rem => "%=",
            AssignOp::BitAnd => "&=",
            AssignOp::BitOr => "|=",
            AssignOp::BitXor => "^=",
            AssignOp::Shl => "<<=",
            AssignOp::Shr => ">>=",
        }
    }
}

/// A braced statement list. Comments after the last statement are kept here.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub trailing_comments: Vec<String>,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Block { stmts, trailing_comments: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Let { name: String, mutable: bool, type_text: Option<String>, init: Option<Expr> },
    Assign { target: Expr, op: AssignOp, value: Expr },
    MethodCall { receiver: Expr, method: String, args: Vec<Expr> },
    While { condition: Expr, invariants: Vec<SpecExpr>, body: Block },
    Assert(SpecExpr),
    Assume(SpecExpr),
    /// `proof { ... }`; holds only `Assert` statements.
    ProofBlock(Block),
    ExprStmt(Expr),
    If { condition: Expr, then_body: Block, else_body: Option<Block> },
}

/// A statement with its source provenance.
///
/// Equality is structural: `span` is provenance only and is ignored.
#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: LineSpan,
    /// Comments preceding the statement, verbatim including `//`.
    pub comments: Vec<String>,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { kind, span: LineSpan::default(), comments: Vec::new() }
    }

    pub fn is_while(&self) -> bool {
        matches!(self.kind, StmtKind::While { .. })
    }

    /// True when this statement is or contains a `while`.
    pub fn contains_loop(&self) -> bool {
        match &self.kind {
            StmtKind::While { .. } => true,
            StmtKind::If { then_body, else_body, .. } => {
                then_body.stmts.iter().any(Stmt::contains_loop)
                    || else_body.iter().flat_map(|b| &b.stmts).any(Stmt::contains_loop)
            }
            _ => false,
        }
    }

    /// Every free variable referenced anywhere in the statement, including
    /// assignment targets, loop invariants and nested blocks. Names bound by
    /// `let` are not references.
    pub fn referenced_identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        walk_stmts(std::slice::from_ref(self), &mut |s| {
            let mut add = |set: &BTreeSet<String>| out.extend(set.iter().cloned());
            match &s.kind {
                StmtKind::Let { init, .. } => init.iter().for_each(|e| add(e.identifiers())),
                StmtKind::Assign { target, value, .. } => {
                    add(target.identifiers());
                    add(value.identifiers());
                }
                StmtKind::MethodCall { receiver, args, .. } => {
                    add(receiver.identifiers());
                    args.iter().for_each(|a| add(a.identifiers()));
                }
                StmtKind::While { condition, invariants, .. } => {
                    add(condition.identifiers());
                    invariants.iter().for_each(|c| add(c.identifiers()));
                }
                StmtKind::Assert(c) | StmtKind::Assume(c) => add(c.identifiers()),
                StmtKind::ExprStmt(e) => add(e.identifiers()),
                StmtKind::If { condition, .. } => add(condition.identifiers()),
                StmtKind::ProofBlock(_) => {}
            }
        });
        out
    }

    /// Direct child blocks in source order.
    pub fn child_blocks(&self) -> Vec<&Block> {
        match &self.kind {
            StmtKind::While { body, .. } => vec![body],
            StmtKind::ProofBlock(b) => vec![b],
            StmtKind::If { then_body, else_body, .. } => {
                let mut v = vec![then_body];
                v.extend(else_body.iter());
                v
            }
            _ => Vec::new(),
        }
    }

    fn child_blocks_mut(&mut self) -> Vec<&mut Block> {
        match &mut self.kind {
            StmtKind::While { body, .. } => vec![body],
            StmtKind::ProofBlock(b) => vec![b],
            StmtKind::If { then_body, else_body, .. } => {
                let mut v = vec![then_body];
                v.extend(else_body.iter_mut());
                v
            }
            _ => Vec::new(),
        }
    }
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.comments == other.comments
    }
}

impl Eq for Stmt {}

/// Pre-order visit of every statement in `stmts`, including nested ones.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        for b in s.child_blocks() {
            walk_stmts(&b.stmts, f);
        }
    }
}

/// Index of a `while` in pre-order over the whole function body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LoopId(pub usize);

impl fmt::Display for LoopId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A parsed single-function program.
///
/// Equality is structural: `origin_span` and statement spans are ignored.
#[derive(Debug, Clone)]
pub struct FunctionAst {
    pub is_pub: bool,
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: Option<String>,
    pub requires: Vec<SpecExpr>,
    pub ensures: Vec<SpecExpr>,
    pub body: Block,
    pub origin_span: LineSpan,
    pub leading_comments: Vec<String>,
    pub trailing_comments: Vec<String>,
}

impl PartialEq for FunctionAst {
    fn eq(&self, other: &Self) -> bool {
        self.is_pub == other.is_pub
            && self.name == other.name
            && self.params == other.params
            && self.return_type == other.return_type
            && self.requires == other.requires
            && self.ensures == other.ensures
            && self.body == other.body
            && self.leading_comments == other.leading_comments
            && self.trailing_comments == other.trailing_comments
    }
}

impl Eq for FunctionAst {}

impl FunctionAst {
    pub fn new(name: impl Into<String>) -> Self {
        FunctionAst {
            is_pub: false,
            name: name.into(),
            params: Vec::new(),
            return_type: None,
            requires: Vec::new(),
            ensures: Vec::new(),
            body: Block::default(),
            origin_span: LineSpan::default(),
            leading_comments: Vec::new(),
            trailing_comments: Vec::new(),
        }
    }

    /// All `while` statements in pre-order; position is the [`LoopId`].
    pub fn loops(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        walk_stmts(&self.body.stmts, &mut |s| {
            if s.is_while() {
                out.push(s);
            }
        });
        out
    }

    pub fn loop_mut(&mut self, id: LoopId) -> Option<&mut Stmt> {
        fn find<'a>(stmts: &'a mut [Stmt], target: usize, seen: &mut usize) -> Option<&'a mut Stmt> {
            for s in stmts {
                if s.is_while() {
                    if *seen == target {
                        return Some(s);
                    }
                    *seen += 1;
                }
                for b in s.child_blocks_mut() {
                    if let Some(found) = find(&mut b.stmts, target, seen) {
                        return Some(found);
                    }
                }
            }
            None
        }
        let mut seen = 0;
        find(&mut self.body.stmts, id.0, &mut seen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_program_lines_rejoin_to_raw_text() {
        for raw in ["", "a", "a\nb", "a\n\nb\n", "x\r\ny"] {
            let p = SourceProgram::new(raw);
            let joined: Vec<&str> = p.lines().iter().map(|l| l.content.as_str()).collect();
            assert_eq!(joined.join("\n"), raw);
            for (i, l) in p.lines().iter().enumerate() {
                assert_eq!(l.number, i + 1);
            }
        }
    }

    #[test]
    fn root_identifier_of_places() {
        assert_eq!(Expr::parse("a[i]").unwrap().root_identifier(), Some("a"));
        assert_eq!(Expr::parse("sum").unwrap().root_identifier(), Some("sum"));
        assert_eq!(Expr::parse("*x").unwrap().root_identifier(), None);
    }

    #[test]
    fn mut_borrows_are_collected() {
        let e = Expr::parse("swap(&mut v, i, &mut w[0])").unwrap();
        assert_eq!(e.mut_borrows().iter().collect::<Vec<_>>(), ["v", "w"]);
    }
}
