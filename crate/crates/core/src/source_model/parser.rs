//! Recursive-descent parser for single-function Verus programs.

use std::collections::BTreeSet;

use super::ident::identifiers_in;
use super::lexer::{tokenize, Token, TokenKind};
use super::{
    normalize_whitespace, AssignOp, Block, Expr, FunctionAst, LineSpan, Param, ParseError,
    SourceProgram, SpecExpr, Stmt, StmtKind,
};

const UNSUPPORTED_STMTS: &[(&str, &str)] = &[
    ("for", "`for` loops"),
    ("loop", "`loop` loops"),
    ("return", "`return` statements"),
    ("match", "`match` expressions"),
    ("break", "`break`"),
    ("continue", "`continue`"),
    ("fn", "nested functions"),
    ("unsafe", "`unsafe` blocks"),
    ("use", "`use` declarations"),
    ("const", "`const` items"),
    ("static", "`static` items"),
];

const UNSUPPORTED_CLAUSES: &[&str] = &["decreases", "recommends", "opens_invariants", "returns"];

/// Parses a program containing exactly one function.
pub fn parse_function(program: &SourceProgram) -> Result<FunctionAst, ParseError> {
    let src = program.raw_text();
    let toks = tokenize(src)?;
    let mut p = Parser { src, toks, pos: 0, pending: Vec::new() };
    p.function()
}

/// Splits a clause list such as an LLM postcondition reply.
///
/// Clauses are separated by top-level commas; text without any top-level
/// comma is split one clause per line.
pub fn split_clauses(text: &str) -> Result<Vec<SpecExpr>, ParseError> {
    let toks = tokenize(text)?;
    let in_binder = binder_mask(text, &toks);
    let mut depth = 0i32;
    let mut has_comma = false;
    for (t, masked) in toks.iter().zip(&in_binder) {
        match t.text(text) {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 && !masked => has_comma = true,
            _ => {}
        }
    }
    if has_comma {
        let (clauses, _) = clauses_from_tokens(text, &toks, Vec::new())?;
        return Ok(clauses);
    }
    let mut clauses = Vec::new();
    let mut leading = Vec::new();
    let mut line_toks: Vec<Token> = Vec::new();
    let flush = |line_toks: &mut Vec<Token>, leading: &mut Vec<String>, clauses: &mut Vec<SpecExpr>| {
        if line_toks.is_empty() {
            return Ok::<(), ParseError>(());
        }
        let mut spec = spec_from_tokens(text, line_toks)?;
        spec.leading_comments = std::mem::take(leading);
        clauses.push(spec);
        line_toks.clear();
        Ok(())
    };
    for t in toks {
        if line_toks.last().is_some_and(|l| l.line != t.line) {
            flush(&mut line_toks, &mut leading, &mut clauses)?;
        }
        if t.kind == TokenKind::Comment {
            if line_toks.is_empty() {
                leading.push(t.text(text).to_string());
            } else {
                flush(&mut line_toks, &mut leading, &mut clauses)?;
                if let Some(last) = clauses.last_mut() {
                    last.trailing_comment = Some(t.text(text).to_string());
                }
            }
            continue;
        }
        line_toks.push(t);
    }
    flush(&mut line_toks, &mut leading, &mut clauses)?;
    Ok(clauses)
}

/// Marks tokens inside a quantifier binder (`forall|i: int, j: int|`),
/// whose commas do not separate clauses.
fn binder_mask(src: &str, toks: &[Token]) -> Vec<bool> {
    let mut mask = vec![false; toks.len()];
    let mut i = 0;
    while i < toks.len() {
        let is_quant = matches!(toks[i].text(src), "forall" | "exists" | "choose");
        if is_quant && toks.get(i + 1).is_some_and(|t| t.text(src) == "|") {
            let mut j = i + 2;
            while j < toks.len() && toks[j].text(src) != "|" {
                mask[j] = true;
                j += 1;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    mask
}

pub(crate) fn expr_from_tokens(src: &str, toks: &[Token]) -> Result<Expr, ParseError> {
    let (first, last) = match (toks.first(), toks.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(ParseError::new(1, "expected an expression")),
    };
    if let Some(c) = toks.iter().find(|t| t.kind == TokenKind::Comment) {
        return Err(ParseError::new(c.line, "comments inside expressions are not supported"));
    }
    let text = normalize_whitespace(&src[first.start..last.end]);
    let identifiers = identifiers_in(src, toks)?;
    let mut mut_borrows = BTreeSet::new();
    for w in toks.windows(3) {
        if w[0].text(src) == "&" && w[1].text(src) == "mut" && w[2].kind == TokenKind::Ident {
            mut_borrows.insert(w[2].text(src).to_string());
        }
    }
    Ok(Expr { text, identifiers, mut_borrows })
}

fn spec_from_tokens(src: &str, toks: &[Token]) -> Result<SpecExpr, ParseError> {
    let (first, last) = match (toks.first(), toks.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(ParseError::new(1, "empty clause")),
    };
    if let Some(c) = toks.iter().find(|t| t.kind == TokenKind::Comment) {
        return Err(ParseError::new(c.line, "comments inside a clause are not supported"));
    }
    let raw_text = normalize_whitespace(&src[first.start..last.end]);
    let identifiers = identifiers_in(src, toks)?;
    Ok(SpecExpr { raw_text, identifiers, leading_comments: Vec::new(), trailing_comment: None })
}

/// Splits a comma-separated clause list; returns comments left over after
/// the last clause so the caller can attach them to what follows.
fn clauses_from_tokens(
    src: &str,
    toks: &[Token],
    mut leading: Vec<String>,
) -> Result<(Vec<SpecExpr>, Vec<String>), ParseError> {
    let mut clauses: Vec<SpecExpr> = Vec::new();
    let mut cur: Vec<Token> = Vec::new();
    let mut tail: Vec<&Token> = Vec::new();
    let mut depth = 0i32;
    let mut comma_line: Option<usize> = None;
    let in_binder = binder_mask(src, toks);

    fn finish(
        src: &str,
        cur: &mut Vec<Token>,
        tail: &mut Vec<&Token>,
        leading: &mut Vec<String>,
        clauses: &mut Vec<SpecExpr>,
        line: usize,
    ) -> Result<Vec<String>, ParseError> {
        if cur.is_empty() {
            return Err(ParseError::new(line, "empty clause"));
        }
        let mut spec = spec_from_tokens(src, cur)?;
        spec.leading_comments = std::mem::take(leading);
        let last_line = cur.last().map(|t| t.line).unwrap_or(line);
        let mut rest = Vec::new();
        for c in tail.drain(..) {
            if c.line == last_line && spec.trailing_comment.is_none() {
                spec.trailing_comment = Some(c.text(src).to_string());
            } else {
                rest.push(c.text(src).to_string());
            }
        }
        clauses.push(spec);
        cur.clear();
        Ok(rest)
    }

    for (tok, masked) in toks.iter().zip(in_binder) {
        let text = tok.text(src);
        if tok.kind == TokenKind::Comment {
            if cur.is_empty() {
                let attach_to_prev = comma_line == Some(tok.line)
                    && clauses.last().is_some_and(|c| c.trailing_comment.is_none());
                if attach_to_prev {
                    if let Some(prev) = clauses.last_mut() {
                        prev.trailing_comment = Some(text.to_string());
                    }
                } else {
                    leading.push(text.to_string());
                }
            } else {
                tail.push(tok);
            }
            continue;
        }
        if depth == 0 && text == "," && !masked {
            let rest = finish(src, &mut cur, &mut tail, &mut leading, &mut clauses, tok.line)?;
            leading.extend(rest);
            comma_line = Some(tok.line);
            continue;
        }
        if let Some(c) = tail.first() {
            return Err(ParseError::new(c.line, "comments inside a clause are not supported"));
        }
        match text {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            _ => {}
        }
        if depth < 0 {
            return Err(ParseError::new(tok.line, format!("unbalanced `{text}`")));
        }
        cur.push(tok.clone());
    }
    if !cur.is_empty() {
        let line = cur.last().map(|t| t.line).unwrap_or(1);
        let rest = finish(src, &mut cur, &mut tail, &mut leading, &mut clauses, line)?;
        leading.extend(rest);
    }
    Ok((clauses, leading))
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    pending: Vec<String>,
}

impl<'a> Parser<'a> {
    fn absorb_comments(&mut self) {
        while let Some(t) = self.toks.get(self.pos) {
            if t.kind != TokenKind::Comment {
                break;
            }
            self.pending.push(t.text(self.src).to_string());
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<&Token> {
        self.absorb_comments();
        self.toks.get(self.pos)
    }

    fn peek_text(&mut self) -> &'a str {
        let src = self.src;
        self.peek().map(|t| t.text(src)).unwrap_or("")
    }

    fn line(&mut self) -> usize {
        let fallback = self.toks.last().map(|t| t.line).unwrap_or(1);
        self.peek().map(|t| t.line).unwrap_or(fallback)
    }

    fn bump(&mut self) -> Option<Token> {
        self.absorb_comments();
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, text: &str) -> Result<Token, ParseError> {
        let line = self.line();
        match self.bump() {
            Some(t) if t.text(self.src) == text => Ok(t),
            Some(t) => Err(ParseError::new(
                t.line,
                format!("expected `{text}`, found `{}`", t.text(self.src)),
            )),
            None => Err(ParseError::new(line, format!("expected `{text}`, found end of input"))),
        }
    }

    fn ident(&mut self) -> Result<Token, ParseError> {
        let line = self.line();
        match self.bump() {
            Some(t) if t.kind == TokenKind::Ident => Ok(t),
            Some(t) => Err(ParseError::new(
                t.line,
                format!("expected identifier, found `{}`", t.text(self.src)),
            )),
            None => Err(ParseError::new(line, "expected identifier, found end of input")),
        }
    }

    /// Collects raw tokens (comments included) from the current position
    /// until `stop(text, depth)` holds at bracket depth zero. The stop token
    /// is not consumed. Closing brackets at depth zero also stop.
    fn collect_until(
        &mut self,
        what: &str,
        stop: impl Fn(&str, &Token) -> bool,
    ) -> Result<Vec<Token>, ParseError> {
        let start_line = self.line();
        let mut out = Vec::new();
        let mut depth = 0i32;
        loop {
            let Some(tok) = self.toks.get(self.pos) else {
                return Err(ParseError::new(start_line, format!("unterminated {what}")));
            };
            let text = tok.text(self.src);
            if tok.kind != TokenKind::Comment {
                if depth == 0 && (stop(text, tok) || matches!(text, ")" | "]" | "}")) {
                    return Ok(out);
                }
                match text {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    _ => {}
                }
            }
            out.push(tok.clone());
            self.pos += 1;
        }
    }

    fn take_pending(&mut self) -> Vec<String> {
        std::mem::take(&mut self.pending)
    }

    fn function(&mut self) -> Result<FunctionAst, ParseError> {
        self.absorb_comments();
        let leading_comments = self.take_pending();
        let start_line = self.line();
        if self.peek_text() == "#" {
            return Err(ParseError::new(start_line, "attributes are not supported"));
        }
        let is_pub = self.peek_text() == "pub";
        if is_pub {
            self.bump();
        }
        if self.peek_text() != "fn" {
            let found = self.peek_text();
            let line = self.line();
            return Err(ParseError::new(line, format!("expected `fn`, found `{found}`")));
        }
        self.bump();
        let name = self.ident()?.text(self.src).to_string();
        if self.peek_text() == "<" {
            let line = self.line();
            return Err(ParseError::new(line, "generic functions are not supported"));
        }
        self.expect("(")?;
        let params = self.params()?;
        self.expect(")")?;

        let mut return_type = None;
        if self.peek_text() == "->" {
            self.bump();
            let toks = self.collect_until("return type", |t, tok| {
                t == "{" || (tok.kind == TokenKind::Ident && matches!(t, "requires" | "ensures"))
            })?;
            return_type = Some(self.plain_text(&toks)?);
        }

        let mut requires = Vec::new();
        let mut ensures = Vec::new();
        loop {
            let kw = self.peek_text();
            match kw {
                "requires" | "ensures" => {
                    self.bump();
                    let toks = self.collect_until("clause list", |t, tok| {
                        t == "{"
                            || (tok.kind == TokenKind::Ident
                                && (matches!(t, "requires" | "ensures")
                                    || UNSUPPORTED_CLAUSES.contains(&t)))
                    })?;
                    let leading = self.take_pending();
                    let (clauses, rest) = clauses_from_tokens(self.src, &toks, leading)?;
                    self.pending = rest;
                    if kw == "requires" {
                        requires.extend(clauses);
                    } else {
                        ensures.extend(clauses);
                    }
                }
                t if UNSUPPORTED_CLAUSES.contains(&t) => {
                    let line = self.line();
                    return Err(ParseError::new(line, format!("`{t}` clauses are not supported")));
                }
                _ => break,
            }
        }
        let body = self.block()?;
        let end_line = self.toks.get(self.pos.saturating_sub(1)).map(|t| t.line).unwrap_or(start_line);
        self.absorb_comments();
        if let Some(t) = self.toks.get(self.pos) {
            let msg = if t.text(self.src) == "fn" || t.text(self.src) == "pub" {
                "multiple functions per file are not supported".to_string()
            } else {
                format!("unexpected `{}` after function body", t.text(self.src))
            };
            return Err(ParseError::new(t.line, msg));
        }
        let trailing_comments = self.take_pending();
        Ok(FunctionAst {
            is_pub,
            name,
            params,
            return_type,
            requires,
            ensures,
            body,
            origin_span: LineSpan::new(start_line, end_line),
            leading_comments,
            trailing_comments,
        })
    }

    fn params(&mut self) -> Result<Vec<Param>, ParseError> {
        let mut params = Vec::new();
        loop {
            if self.peek_text() == ")" {
                return Ok(params);
            }
            if self.peek_text() == "mut" {
                let line = self.line();
                return Err(ParseError::new(line, "`mut` parameter bindings are not supported"));
            }
            let name = self.ident()?.text(self.src).to_string();
            self.expect(":")?;
            let mut mutable_ref = false;
            let next_is_mut = self.toks.get(self.pos + 1).is_some_and(|t| t.text(self.src) == "mut");
            if self.peek_text() == "&" && next_is_mut {
                self.pos += 2;
                mutable_ref = true;
            }
            let line = self.line();
            let mut angle = 0i32;
            let mut paren = 0i32;
            let mut toks = Vec::new();
            loop {
                let Some(t) = self.peek().cloned() else {
                    return Err(ParseError::new(line, "unterminated parameter list"));
                };
                let text = t.text(self.src);
                if angle == 0 && paren == 0 && (text == "," || text == ")") {
                    break;
                }
                match text {
                    "<" => angle += 1,
                    ">" => angle -= 1,
                    ">>" => angle -= 2,
                    "(" | "[" => paren += 1,
                    ")" | "]" => paren -= 1,
                    _ => {}
                }
                toks.push(t);
                self.pos += 1;
            }
            if toks.is_empty() {
                return Err(ParseError::new(line, format!("parameter `{name}` has no type")));
            }
            let type_text = self.plain_text(&toks)?;
            params.push(Param { name, type_text, mutable_ref });
            if self.peek_text() == "," {
                self.bump();
            }
        }
    }

    fn plain_text(&self, toks: &[Token]) -> Result<String, ParseError> {
        if let Some(c) = toks.iter().find(|t| t.kind == TokenKind::Comment) {
            return Err(ParseError::new(c.line, "comments are not supported here"));
        }
        match (toks.first(), toks.last()) {
            (Some(f), Some(l)) => Ok(normalize_whitespace(&self.src[f.start..l.end])),
            _ => Ok(String::new()),
        }
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        loop {
            let line = self.line();
            match self.peek_text() {
                "}" => {
                    self.bump();
                    let trailing_comments = self.take_pending();
                    return Ok(Block { stmts, trailing_comments });
                }
                "" => return Err(ParseError::new(line, "unterminated block")),
                _ => stmts.push(self.stmt()?),
            }
        }
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        self.absorb_comments();
        let comments = self.take_pending();
        let start = self.line();
        let head = self.peek_text();
        if let Some((_, what)) = UNSUPPORTED_STMTS.iter().find(|(kw, _)| *kw == head) {
            return Err(ParseError::new(start, format!("unsupported construct: {what}")));
        }
        let kind = match head {
            "let" => self.let_stmt()?,
            "while" => self.while_stmt()?,
            "if" => self.if_stmt()?,
            "assert" | "assume" => {
                self.bump();
                self.expect("(")?;
                let toks = self.collect_until(head, |t, _| t == ")")?;
                self.expect(")")?;
                if self.peek_text() == "by" {
                    let line = self.line();
                    return Err(ParseError::new(line, "unsupported construct: `assert ... by`"));
                }
                self.expect(";")?;
                let spec = spec_from_tokens(self.src, &toks)
                    .map_err(|e| ParseError::new(start, format!("{head}: {}", e.message)))?;
                if head == "assert" {
                    StmtKind::Assert(spec)
                } else {
                    StmtKind::Assume(spec)
                }
            }
            "proof" => {
                self.bump();
                let block = self.block()?;
                if let Some(s) = block.stmts.iter().find(|s| !matches!(s.kind, StmtKind::Assert(_))) {
                    return Err(ParseError::new(
                        s.span.start,
                        "only assert statements are supported inside proof blocks",
                    ));
                }
                StmtKind::ProofBlock(block)
            }
            "{" => return Err(ParseError::new(start, "unsupported construct: bare blocks")),
            _ => self.simple_stmt()?,
        };
        let end = self.toks.get(self.pos.saturating_sub(1)).map(|t| t.line).unwrap_or(start);
        Ok(Stmt { kind, span: LineSpan::new(start, end), comments })
    }

    fn let_stmt(&mut self) -> Result<StmtKind, ParseError> {
        self.bump();
        let mutable = self.peek_text() == "mut";
        if mutable {
            self.bump();
        }
        let name = self.ident()?.text(self.src).to_string();
        let mut type_text = None;
        if self.peek_text() == ":" {
            self.bump();
            let toks = self.collect_until("let type", |t, _| t == "=" || t == ";")?;
            if toks.is_empty() {
                let line = self.line();
                return Err(ParseError::new(line, "missing type after `:`"));
            }
            type_text = Some(self.plain_text(&toks)?);
        }
        let mut init = None;
        if self.peek_text() == "=" {
            self.bump();
            let toks = self.collect_until("let initializer", |t, _| t == ";")?;
            init = Some(expr_from_tokens(self.src, &toks)?);
        }
        self.expect(";")?;
        Ok(StmtKind::Let { name, mutable, type_text, init })
    }

    fn while_stmt(&mut self) -> Result<StmtKind, ParseError> {
        self.bump();
        let line = self.line();
        let cond = self.collect_until("loop condition", |t, tok| {
            t == "{"
                || (tok.kind == TokenKind::Ident
                    && (t == "invariant" || t == "ensures" || UNSUPPORTED_CLAUSES.contains(&t)))
        })?;
        if cond.iter().all(|t| t.kind == TokenKind::Comment) {
            return Err(ParseError::new(line, "missing loop condition"));
        }
        let condition = expr_from_tokens(self.src, &cond)?;
        let mut invariants = Vec::new();
        if self.peek_text() == "invariant" {
            self.bump();
            let toks = self.collect_until("invariant list", |t, tok| {
                t == "{"
                    || (tok.kind == TokenKind::Ident
                        && (t == "ensures" || t == "invariant" || UNSUPPORTED_CLAUSES.contains(&t)))
            })?;
            let leading = self.take_pending();
            let (clauses, rest) = clauses_from_tokens(self.src, &toks, leading)?;
            invariants = clauses;
            self.pending = rest;
        }
        let kw = self.peek_text();
        if kw != "{" {
            let line = self.line();
            return Err(ParseError::new(line, format!("unsupported loop clause `{kw}`")));
        }
        let pending = self.take_pending();
        let mut body = self.block()?;
        if !pending.is_empty() {
            // comments between the clauses and `{` lead the first statement
            match body.stmts.first_mut() {
                Some(first) => {
                    let mut c = pending;
                    c.append(&mut first.comments);
                    first.comments = c;
                }
                None => {
                    let mut c = pending;
                    c.append(&mut body.trailing_comments);
                    body.trailing_comments = c;
                }
            }
        }
        Ok(StmtKind::While { condition, invariants, body })
    }

    fn if_stmt(&mut self) -> Result<StmtKind, ParseError> {
        self.bump();
        let line = self.line();
        let cond = self.collect_until("if condition", |t, _| t == "{")?;
        if cond.is_empty() {
            return Err(ParseError::new(line, "missing if condition"));
        }
        let condition = expr_from_tokens(self.src, &cond)?;
        let then_body = self.block()?;
        let mut else_body = None;
        // comments between `}` and `else` are not supported; leave them pending
        if self.toks.get(self.pos).is_some_and(|t| t.text(self.src) == "else") {
            self.bump();
            if self.peek_text() == "if" {
                let start = self.line();
                let kind = self.if_stmt()?;
                let end = self.toks.get(self.pos.saturating_sub(1)).map(|t| t.line).unwrap_or(start);
                else_body = Some(Block::new(vec![Stmt {
                    kind,
                    span: LineSpan::new(start, end),
                    comments: Vec::new(),
                }]));
            } else {
                else_body = Some(self.block()?);
            }
        }
        Ok(StmtKind::If { condition, then_body, else_body })
    }

    fn simple_stmt(&mut self) -> Result<StmtKind, ParseError> {
        let line = self.line();
        let toks = self.collect_until("statement", |t, _| t == ";")?;
        if self.toks.get(self.pos).map(|t| t.text(self.src)) != Some(";") {
            return Err(ParseError::new(line, "expected `;` after statement"));
        }
        self.pos += 1;
        if toks.is_empty() {
            return Err(ParseError::new(line, "empty statement"));
        }
        if let Some(c) = toks.iter().find(|t| t.kind == TokenKind::Comment) {
            return Err(ParseError::new(c.line, "comments inside statements are not supported"));
        }

        let mut depth = 0i32;
        for (i, t) in toks.iter().enumerate() {
            let text = t.text(self.src);
            match text {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                _ => {}
            }
            if depth == 0 {
                if let Some(op) = AssignOp::from_token(text) {
                    if i == 0 || i + 1 == toks.len() {
                        return Err(ParseError::new(t.line, "malformed assignment"));
                    }
                    let target = expr_from_tokens(self.src, &toks[..i])?;
                    let value = expr_from_tokens(self.src, &toks[i + 1..])?;
                    return Ok(StmtKind::Assign { target, op, value });
                }
            }
        }

        // receiver.method(args)
        let n = toks.len();
        if n >= 4 && toks[n - 1].text(self.src) == ")" {
            let mut depth = 0i32;
            let mut open = None;
            for i in (0..n).rev() {
                match toks[i].text(self.src) {
                    ")" | "]" | "}" => depth += 1,
                    "(" | "[" | "{" => {
                        depth -= 1;
                        if depth == 0 {
                            open = Some(i);
                            break;
                        }
                    }
                    _ => {}
                }
            }
            if let Some(m) = open {
                if m >= 3
                    && toks[m - 1].kind == TokenKind::Ident
                    && toks[m - 2].text(self.src) == "."
                {
                    let receiver = expr_from_tokens(self.src, &toks[..m - 2])?;
                    let method = toks[m - 1].text(self.src).to_string();
                    let args = self.call_args(&toks[m + 1..n - 1])?;
                    return Ok(StmtKind::MethodCall { receiver, method, args });
                }
            }
        }
        Ok(StmtKind::ExprStmt(expr_from_tokens(self.src, &toks)?))
    }

    fn call_args(&self, toks: &[Token]) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        let mut depth = 0i32;
        let mut cur = Vec::new();
        for t in toks {
            let text = t.text(self.src);
            match text {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                "," if depth == 0 => {
                    args.push(expr_from_tokens(self.src, &cur)?);
                    cur.clear();
                    continue;
                }
                _ => {}
            }
            cur.push(t.clone());
        }
        if !cur.is_empty() {
            args.push(expr_from_tokens(self.src, &cur)?);
        }
        Ok(args)
    }
}
