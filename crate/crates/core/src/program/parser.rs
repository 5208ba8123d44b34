//! Operator-precedence reader for the fixed operator table.

use std::collections::HashMap;

use super::lexer::{tokenize, Tok, TokKind};
use super::{Clause, Directive, IndexSpec, Item, Program, Query, TableMode};
use crate::error::{Error, Result};
use crate::term::{PredKey, Sym, Term, VarId};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum OpType {
    Xfx,
    Xfy,
    Yfx,
    Fx,
    Fy,
}

pub(crate) fn infix_op(name: &str) -> Option<(u32, OpType)> {
    Some(match name {
        ":-" | "<-" | "-->" => (1200, OpType::Xfx),
        ";" => (1100, OpType::Xfy),
        "as" => (1110, OpType::Xfx),
        "->" => (1050, OpType::Xfy),
        "," => (1000, OpType::Xfy),
        "=" | "==" | "\\=" | "\\==" => (700, OpType::Xfx),
        "+" | "-" => (500, OpType::Yfx),
        "*" | "/" => (400, OpType::Yfx),
        _ => return None,
    })
}

pub(crate) fn prefix_op(name: &str) -> Option<(u32, OpType)> {
    Some(match name {
        ":-" | "?-" => (1200, OpType::Fx),
        "table" => (1150, OpType::Fx),
        "\\+" => (900, OpType::Fy),
        "-" => (200, OpType::Fy),
        _ => return None,
    })
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    vars: Vec<(String, VarId)>,
    next_var: u64,
}

/// Variable-name table produced for a parsed clause or query.
fn names_of(vars: &[(String, VarId)], count: u64) -> Vec<String> {
    let mut names = vec!["_".to_string(); count as usize];
    for (name, v) in vars {
        names[v.0 as usize] = name.clone();
    }
    names
}

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, vars: Vec::new(), next_var: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos]
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(tok: &Tok, message: impl Into<String>) -> Error {
        Error::Syntax { line: tok.line, col: tok.col, message: message.into() }
    }

    fn expect_punct(&mut self, c: char) -> Result<()> {
        let t = self.advance();
        if t.kind == TokKind::Punct(c) {
            Ok(())
        } else {
            Err(Self::error_at(&t, format!("expected '{c}', found {}", describe(&t.kind))))
        }
    }

    fn reset_vars(&mut self) {
        self.vars.clear();
        self.next_var = 0;
    }

    fn var(&mut self, name: &str) -> Term {
        if name != "_" {
            if let Some((_, v)) = self.vars.iter().find(|(n, _)| n == name) {
                return Term::Var(*v);
            }
        }
        let v = VarId(self.next_var);
        self.next_var += 1;
        if name != "_" {
            self.vars.push((name.to_string(), v));
        }
        Term::Var(v)
    }

    /// Parses a term whose priority is at most `max`; returns it with its priority.
    fn parse(&mut self, max: u32) -> Result<(Term, u32)> {
        let (mut left, mut left_prec) = self.primary(max)?;
        loop {
            let tok = self.peek().clone();
            let name = match &tok.kind {
                TokKind::Name(n) => n.clone(),
                TokKind::Punct(',') => ",".to_string(),
                _ => break,
            };
            let Some((prec, ty)) = infix_op(&name) else { break };
            let (left_max, right_max) = match ty {
                OpType::Xfx => (prec - 1, prec - 1),
                OpType::Xfy => (prec - 1, prec),
                _ => (prec, prec - 1),
            };
            if prec > max || left_prec > left_max {
                break;
            }
            self.advance();
            let (right, _) = self.parse(right_max)?;
            left = Term::app(Sym::intern(&name), vec![left, right]);
            left_prec = prec;
        }
        Ok((left, left_prec))
    }

    /// Can the token start a term (used to decide whether a prefix operator applies)?
    fn starts_term(kind: &TokKind) -> bool {
        match kind {
            TokKind::Int(_) | TokKind::Var(_) | TokKind::Quoted(_) => true,
            TokKind::Punct(c) => *c == '(' || *c == '[',
            TokKind::Name(n) => infix_op(n).is_none() || prefix_op(n).is_some(),
            _ => false,
        }
    }

    fn primary(&mut self, max: u32) -> Result<(Term, u32)> {
        let tok = self.advance();
        match tok.kind.clone() {
            TokKind::Int(digits) => Ok((int_literal(&digits, false, &tok)?, 0)),
            TokKind::Var(name) => Ok((self.var(&name), 0)),
            TokKind::Punct('(') => {
                let (t, _) = self.parse(1200)?;
                self.expect_punct(')')?;
                Ok((t, 0))
            }
            TokKind::Punct('[') => {
                if self.peek().kind == TokKind::Punct(']') {
                    self.advance();
                    return self.after_name(Sym::NIL, max);
                }
                let mut items = vec![self.parse(999)?.0];
                while self.peek().kind == TokKind::Punct(',') {
                    self.advance();
                    items.push(self.parse(999)?.0);
                }
                let tail = if self.peek().kind == TokKind::Punct('|') {
                    self.advance();
                    self.parse(999)?.0
                } else {
                    Term::Atom(Sym::NIL)
                };
                self.expect_punct(']')?;
                Ok((Term::list_with_tail(items, tail), 0))
            }
            TokKind::Quoted(name) => self.after_name(Sym::intern(&name), max),
            TokKind::Name(name) => {
                let next = self.peek().clone();
                if next.kind == TokKind::Punct('(') && !next.layout_before {
                    return self.after_name(Sym::intern(&name), max);
                }
                if name == "-" && !next.layout_before {
                    if let TokKind::Int(digits) = &next.kind {
                        self.advance();
                        return Ok((int_literal(digits, true, &next)?, 0));
                    }
                }
                if let Some((prec, ty)) = prefix_op(&name) {
                    if Self::starts_term(&next.kind) {
                        let prec = prec.min(max);
                        let arg_max = if ty == OpType::Fy { prec } else { prec - 1 };
                        let (arg, _) = self.parse(arg_max)?;
                        return Ok((Term::app(Sym::intern(&name), vec![arg]), prec));
                    }
                }
                Ok((Term::Atom(Sym::intern(&name)), 0))
            }
            TokKind::Punct(c) => Err(Self::error_at(&tok, format!("unexpected '{c}'"))),
            TokKind::End => Err(Self::error_at(&tok, "unexpected end of clause")),
            TokKind::Eof => Err(Self::error_at(&tok, "unexpected end of input")),
        }
    }

    /// Handles an optional argument list after a name.
    fn after_name(&mut self, functor: Sym, _max: u32) -> Result<(Term, u32)> {
        let next = self.peek();
        if next.kind == TokKind::Punct('(') && !next.layout_before {
            self.advance();
            let mut args = vec![self.parse(999)?.0];
            while self.peek().kind == TokKind::Punct(',') {
                self.advance();
                args.push(self.parse(999)?.0);
            }
            self.expect_punct(')')?;
            return Ok((Term::app(functor, args), 0));
        }
        Ok((Term::Atom(functor), 0))
    }

    /// Reads one `.`-terminated term; `None` at end of input.
    fn read_clause_term(&mut self) -> Result<Option<(Term, Tok)>> {
        self.reset_vars();
        let start = self.peek().clone();
        if start.kind == TokKind::Eof {
            return Ok(None);
        }
        let (t, _) = self.parse(1200)?;
        let end = self.advance();
        if end.kind != TokKind::End {
            return Err(Self::error_at(&end, format!("expected end of clause, found {}", describe(&end.kind))));
        }
        Ok(Some((t, start)))
    }
}

fn describe(kind: &TokKind) -> String {
    match kind {
        TokKind::Name(n) => format!("'{n}'"),
        TokKind::Quoted(n) => format!("'{n}'"),
        TokKind::Var(n) => format!("variable {n}"),
        TokKind::Int(d) => format!("integer {d}"),
        TokKind::Punct(c) => format!("'{c}'"),
        TokKind::End => "end of clause".into(),
        TokKind::Eof => "end of input".into(),
    }
}

fn int_literal(digits: &str, negative: bool, tok: &Tok) -> Result<Term> {
    let text = if negative { format!("-{digits}") } else { digits.to_string() };
    text.parse::<i64>()
        .map(Term::Int)
        .map_err(|_| Parser::error_at(tok, format!("integer {text} out of range")))
}

/// Parses program text into clauses and directives.
pub fn parse_program(src: &str) -> Result<Program> {
    let mut p = Parser::new(src)?;
    let mut program = Program::default();
    let mut tabling: HashMap<PredKey, (Directive, usize, usize)> = HashMap::new();
    while let Some((term, start)) = p.read_clause_term()? {
        let names = names_of(&p.vars, p.next_var);
        match &term {
            Term::Compound(c) if c.functor() == Sym::NECK && c.args().len() == 1 => {
                for d in directives_of(&c.args()[0], &start)? {
                    if let Some(pred) = d.tabled_pred() {
                        if let Some((prev, line, col)) = tabling.get(&pred) {
                            if *prev != d {
                                return Err(Error::Syntax {
                                    line: start.line,
                                    col: start.col,
                                    message: format!(
                                        "conflicting tabling directives for {pred} (first at line {line}, column {col})"
                                    ),
                                });
                            }
                        } else {
                            tabling.insert(pred, (d.clone(), start.line, start.col));
                        }
                    }
                    program.items.push(Item::Directive(d));
                }
            }
            Term::Compound(c) if c.functor() == Sym::NECK && c.args().len() == 2 => {
                let head = c.args()[0].clone();
                check_head(&head, &start)?;
                let body = c.args()[1].conjuncts();
                program.items.push(Item::Clause(Clause { head, body, var_names: names }));
            }
            Term::Compound(c) if c.functor() == Sym::intern("?-") && c.args().len() == 1 => {
                return Err(Parser::error_at(&start, "queries are not allowed in program text"));
            }
            _ => {
                check_head(&term, &start)?;
                program.items.push(Item::Clause(Clause { head: term, body: Vec::new(), var_names: names }));
            }
        }
    }
    Ok(program)
}

fn check_head(head: &Term, at: &Tok) -> Result<()> {
    match head {
        Term::Var(_) => Err(Parser::error_at(at, "clause head is a variable")),
        Term::Int(_) => Err(Parser::error_at(at, "clause head is a number")),
        _ if head.pred_key() == Some(PredKey { name: Sym::COMMA, arity: 2 }) => {
            Err(Parser::error_at(at, "clause head is a conjunction"))
        }
        _ => Ok(()),
    }
}

fn pred_indicator(t: &Term, at: &Tok) -> Result<PredKey> {
    if let Term::Compound(c) = t {
        if c.functor() == Sym::SLASH && c.args().len() == 2 {
            if let (Term::Atom(name), Term::Int(arity)) = (&c.args()[0], &c.args()[1]) {
                if *arity >= 0 {
                    return Ok(PredKey { name: *name, arity: *arity as usize });
                }
            }
        }
    }
    Err(Parser::error_at(at, format!("expected a predicate indicator name/arity, found {t}")))
}

fn directives_of(body: &Term, at: &Tok) -> Result<Vec<Directive>> {
    let Some(key) = body.pred_key() else {
        return Err(Parser::error_at(at, "directive is not callable"));
    };
    match (key.name.as_str(), key.arity) {
        ("table", 1) => {
            let spec = &body.args()[0];
            let (preds, mode) = match spec {
                Term::Compound(c) if c.functor() == Sym::intern("as") && c.args().len() == 2 => {
                    let mode = match c.args()[1].as_atom().map(Sym::as_str) {
                        Some("subsumptive") => TableMode::Subsumptive,
                        Some("variant") => TableMode::Variant,
                        _ => {
                            return Err(Parser::error_at(
                                at,
                                format!("unknown tabling mode {}", c.args()[1]),
                            ))
                        }
                    };
                    (&c.args()[0], mode)
                }
                _ => (spec, TableMode::Variant),
            };
            preds
                .conjuncts()
                .iter()
                .map(|p| Ok(Directive::Table { pred: pred_indicator(p, at)?, mode }))
                .collect()
        }
        ("table_index", 2) => {
            let pred = pred_indicator(&body.args()[0], at)?;
            let Some(items) = body.args()[1].list_items() else {
                return Err(Parser::error_at(at, "table_index expects a list of index specifications"));
            };
            if items.is_empty() {
                return Err(Parser::error_at(at, "table_index needs at least one index specification"));
            }
            let mut specs = Vec::new();
            for (i, item) in items.iter().enumerate() {
                let spec = index_spec(item, at)?;
                if spec == IndexSpec::Unindexed && i + 1 != items.len() {
                    return Err(Parser::error_at(at, "index 0 may only appear last in a table_index list"));
                }
                if specs.contains(&spec) {
                    return Err(Parser::error_at(at, format!("duplicate index specification {item}")));
                }
                specs.push(spec);
            }
            Ok(vec![Directive::TableIndex { pred, specs }])
        }
        ("op", 3) => Ok(vec![Directive::Op(body.clone())]),
        _ => Ok(vec![Directive::Other(body.clone())]),
    }
}

fn index_spec(t: &Term, at: &Tok) -> Result<IndexSpec> {
    fn positions(t: &Term, out: &mut Vec<usize>, at: &Tok) -> Result<()> {
        match t {
            Term::Int(i) if *i >= 1 => {
                let p = *i as usize;
                if out.contains(&p) {
                    return Err(Parser::error_at(at, format!("position {p} repeated in an index specification")));
                }
                out.push(p);
                Ok(())
            }
            Term::Compound(c) if c.functor() == Sym::PLUS && c.args().len() == 2 => {
                positions(&c.args()[0], out, at)?;
                positions(&c.args()[1], out, at)
            }
            _ => Err(Parser::error_at(at, format!("bad index specification {t}"))),
        }
    }
    if *t == Term::Int(0) {
        return Ok(IndexSpec::Unindexed);
    }
    let mut out = Vec::new();
    positions(t, &mut out, at)?;
    Ok(IndexSpec::Positions(out))
}

/// Parses a query such as `p(a,X), q(X)`; a trailing `.` is optional.
pub fn parse_query(src: &str) -> Result<Query> {
    let trimmed = src.trim_end();
    let text = if trimmed.ends_with('.') { trimmed.to_string() } else { format!("{trimmed} .") };
    let mut p = Parser::new(&text)?;
    let Some((term, start)) = p.read_clause_term()? else {
        return Err(Error::Syntax { line: 1, col: 1, message: "empty query".into() });
    };
    if let Term::Var(_) | Term::Int(_) = term {
        return Err(Parser::error_at(&start, "query must be callable"));
    }
    let var_names = names_of(&p.vars, p.next_var);
    let rest = p.peek().clone();
    if rest.kind != TokKind::Eof {
        return Err(Parser::error_at(&rest, "trailing input after query"));
    }
    Ok(Query { goals: term.conjuncts(), var_names })
}

/// Reads a sequence of `.`-terminated terms, each with its own variable scope.
/// Returns each term with the number of distinct variables it uses (numbered from 0).
pub fn parse_terms(src: &str) -> Result<Vec<(Term, u64)>> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while let Some((t, _)) = p.read_clause_term()? {
        out.push((t, p.next_var));
    }
    Ok(out)
}
