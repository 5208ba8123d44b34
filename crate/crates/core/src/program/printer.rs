//! Canonical printing of terms, clauses and programs.
//!
//! The output re-reads to the same structure: operators print infix with
//! parentheses where priorities require them, atoms are quoted unless they
//! are plain identifiers, and lists print with bracket syntax.

use super::lexer::is_symbol_char;
use super::parser::{infix_op, OpType};
use super::{Clause, Directive, IndexSpec, Item, Program, TableMode};
use crate::term::{Sym, Term, VarId};

/// Spacing used around each infix operator when printing.
fn infix_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "," => ",",
        "<-" => " <- ",
        ":-" => " :- ",
        "-->" => " --> ",
        ";" => " ; ",
        "->" => " -> ",
        "as" => " as ",
        "=" => " = ",
        "==" => " == ",
        "\\=" => " \\= ",
        "\\==" => " \\== ",
        "+" => "+",
        "-" => "-",
        "*" => "*",
        "/" => "/",
        _ => return None,
    })
}

fn prefix_text(name: &str) -> Option<(u32, OpType, &'static str)> {
    Some(match name {
        ":-" => (1200, OpType::Fx, ":- "),
        "table" => (1150, OpType::Fx, "table "),
        "\\+" => (900, OpType::Fy, "\\+ "),
        _ => return None,
    })
}

pub(crate) fn atom_text(name: &str) -> String {
    let mut chars = name.chars();
    let plain = match chars.next() {
        Some(c) if c.is_lowercase() => chars.all(|c| c.is_alphanumeric() || c == '_'),
        _ => false,
    };
    if plain || name == "!" || name == "[]" {
        return name.to_string();
    }
    let mut out = String::from("'");
    for c in name.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// Term printer with a pluggable variable-naming function.
pub struct TermPrinter<'a> {
    names: &'a dyn Fn(VarId) -> Option<String>,
}

impl<'a> TermPrinter<'a> {
    pub fn new(names: &'a dyn Fn(VarId) -> Option<String>) -> Self {
        TermPrinter { names }
    }

    pub fn print(&self, t: &Term) -> String {
        let mut out = String::new();
        self.write(t, 1200, &mut out);
        out
    }

    /// Prints `t` as an operand whose priority may not exceed `max`.
    pub fn print_at(&self, t: &Term, max: u32) -> String {
        let mut out = String::new();
        self.write(t, max, &mut out);
        out
    }

    fn var_name(&self, v: VarId) -> String {
        (self.names)(v).unwrap_or_else(|| format!("_G{}", v.0))
    }

    fn write(&self, t: &Term, max: u32, out: &mut String) {
        match t {
            Term::Var(v) => out.push_str(&self.var_name(*v)),
            Term::Int(i) => {
                if *i < 0 && max < 999 {
                    out.push_str(&format!("({i})"));
                } else {
                    out.push_str(&i.to_string());
                }
            }
            Term::Atom(s) => {
                if *s == Sym::NIL {
                    out.push_str("[]");
                } else {
                    out.push_str(&atom_text(s.as_str()));
                }
            }
            Term::Compound(c) => {
                let name = c.functor().as_str();
                let args = c.args();
                if c.functor() == Sym::CONS && args.len() == 2 {
                    return self.write_list(t, out);
                }
                if args.len() == 2 {
                    if let (Some((prec, ty)), Some(text)) = (infix_op(name), infix_text(name)) {
                        let (lmax, rmax) = match ty {
                            OpType::Xfx => (prec - 1, prec - 1),
                            OpType::Xfy => (prec - 1, prec),
                            _ => (prec, prec - 1),
                        };
                        let paren = prec > max;
                        if paren {
                            out.push('(');
                        }
                        self.write(&args[0], lmax, out);
                        out.push_str(text);
                        let mut right = String::new();
                        self.write(&args[1], rmax, &mut right);
                        // Keep adjacent symbolic characters from lexing as one token.
                        if text.ends_with(is_symbol_char) && right.starts_with(is_symbol_char) {
                            out.push(' ');
                        }
                        out.push_str(&right);
                        if paren {
                            out.push(')');
                        }
                        return;
                    }
                }
                if args.len() == 1 {
                    if let Some((prec, ty, text)) = prefix_text(name) {
                        let amax = if ty == OpType::Fy { prec } else { prec - 1 };
                        let paren = prec > max;
                        if paren {
                            out.push('(');
                        }
                        out.push_str(text);
                        self.write(&args[0], amax, out);
                        if paren {
                            out.push(')');
                        }
                        return;
                    }
                }
                out.push_str(&atom_text(name));
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.write(a, 999, out);
                }
                out.push(')');
            }
        }
    }

    fn write_list(&self, t: &Term, out: &mut String) {
        out.push('[');
        let mut cur = t;
        let mut first = true;
        loop {
            match cur {
                Term::Compound(c) if c.functor() == Sym::CONS && c.args().len() == 2 => {
                    if !first {
                        out.push(',');
                    }
                    first = false;
                    self.write(&c.args()[0], 999, out);
                    cur = &c.args()[1];
                }
                Term::Atom(s) if *s == Sym::NIL => break,
                other => {
                    out.push('|');
                    self.write(other, 999, out);
                    break;
                }
            }
        }
        out.push(']');
    }
}

/// Canonical text of a term; variables print as `_G<n>`.
pub fn print_term(t: &Term) -> String {
    TermPrinter::new(&|_| None).print(t)
}

/// Prints `t` naming variables with `names` where it has an entry.
pub fn print_term_named(t: &Term, names: &dyn Fn(VarId) -> Option<String>) -> String {
    TermPrinter::new(names).print(t)
}

fn clause_namer(c: &Clause) -> impl Fn(VarId) -> Option<String> + '_ {
    move |v: VarId| c.var_names.get(v.0 as usize).cloned()
}

/// Splits `a -> b ; c -> d ; e` into its branches when `t` is an if-then-else chain.
fn ite_chain(t: &Term) -> Option<Vec<(Option<Term>, Term)>> {
    let is = |t: &Term, s: Sym| matches!(t, Term::Compound(c) if c.functor() == s && c.args().len() == 2);
    if !is(t, Sym::SEMICOLON) || !is(&t.args()[0], Sym::IF_THEN) {
        return None;
    }
    let mut branches = Vec::new();
    let mut cur = t.clone();
    loop {
        if is(&cur, Sym::SEMICOLON) && is(&cur.args()[0], Sym::IF_THEN) {
            let ite = cur.args()[0].clone();
            branches.push((Some(ite.args()[0].clone()), ite.args()[1].clone()));
            cur = cur.args()[1].clone();
        } else {
            branches.push((None, cur));
            return Some(branches);
        }
    }
}

pub fn print_clause(c: &Clause) -> String {
    let namer = clause_namer(c);
    let p = TermPrinter::new(&namer);
    if c.body.is_empty() {
        return format!("{}.", p.print_at(&c.head, 1200));
    }
    let mut out = format!("{} :-\n", p.print_at(&c.head, 1199));
    if c.body.len() == 1 {
        if let Some(branches) = ite_chain(&c.body[0]) {
            for (i, (cond, then)) in branches.iter().enumerate() {
                out.push_str(if i == 0 { "    " } else { "\n    ; " });
                match cond {
                    Some(cond) => {
                        out.push_str(&p.print_at(cond, 1049));
                        out.push_str(" -> ");
                        out.push_str(&p.print_at(then, 1050));
                    }
                    None => out.push_str(&p.print_at(then, 1100)),
                }
            }
            out.push('.');
            return out;
        }
    }
    let goals: Vec<String> = c.body.iter().map(|g| format!("    {}", p.print_at(g, 999))).collect();
    out.push_str(&goals.join(",\n"));
    out.push('.');
    out
}

pub fn print_index_spec(spec: &IndexSpec) -> String {
    match spec {
        IndexSpec::Unindexed => "0".to_string(),
        IndexSpec::Positions(ps) => ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("+"),
    }
}

pub fn print_directive(d: &Directive) -> String {
    match d {
        Directive::Table { pred, mode: TableMode::Variant } => {
            format!(":- table {}/{}.", atom_text(pred.name.as_str()), pred.arity)
        }
        Directive::Table { pred, mode: TableMode::Subsumptive } => {
            format!(":- table {}/{} as subsumptive.", atom_text(pred.name.as_str()), pred.arity)
        }
        Directive::TableIndex { pred, specs } => {
            let specs: Vec<String> = specs.iter().map(print_index_spec).collect();
            format!(":- table_index({}/{},[{}]).", atom_text(pred.name.as_str()), pred.arity, specs.join(","))
        }
        Directive::Op(t) | Directive::Other(t) => format!(":- {}.", print_term_at(t, 1199)),
    }
}

fn print_term_at(t: &Term, max: u32) -> String {
    TermPrinter::new(&|_| None).print_at(t, max)
}

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for item in &p.items {
        match item {
            Item::Clause(c) => out.push_str(&print_clause(c)),
            Item::Directive(d) => out.push_str(&print_directive(d)),
        }
        out.push('\n');
    }
    out
}
