//! Program representation, reader, printer and static checks.

mod lexer;
mod parser;
mod printer;

use std::collections::{HashMap, HashSet};
use std::fmt;

pub use parser::{parse_program, parse_query, parse_terms};
pub use printer::{
    print_clause, print_directive, print_index_spec, print_program, print_term, print_term_named, TermPrinter,
};

use crate::term::{PredKey, Sym, Term};

/// A definite clause. Variables are numbered `0..var_names.len()` within the clause.
#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Term>,
    /// Source names indexed by variable number; `_` for anonymous variables.
    pub var_names: Vec<String>,
}

impl Clause {
    pub fn fact(head: Term) -> Self {
        let n = head.vars().iter().map(|v| v.0 + 1).max().unwrap_or(0);
        Clause { head, body: Vec::new(), var_names: vec!["_".into(); n as usize] }
    }

    pub fn pred(&self) -> PredKey {
        self.head.pred_key().expect("clause heads are callable")
    }

    pub fn var_count(&self) -> u64 {
        self.var_names.len() as u64
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableMode {
    Variant,
    Subsumptive,
}

/// One entry of a `table_index` list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IndexSpec {
    /// Argument positions (1-based) that must be bound for this index.
    Positions(Vec<usize>),
    /// The `0` entry: calls with no index bound are legal.
    Unindexed,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Directive {
    Table { pred: PredKey, mode: TableMode },
    TableIndex { pred: PredKey, specs: Vec<IndexSpec> },
    /// `op/3` directives are read and otherwise ignored; the operator table is fixed.
    Op(Term),
    Other(Term),
}

impl Directive {
    pub fn tabled_pred(&self) -> Option<PredKey> {
        match self {
            Directive::Table { pred, .. } | Directive::TableIndex { pred, .. } => Some(*pred),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Clause(Clause),
    Directive(Directive),
}

/// How a predicate is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum Tabling {
    Variant,
    /// Call subsumption with the call itself as the table goal.
    Subsumptive,
    /// Subsumptive tabling with abstraction driven by a `table_index` declaration.
    Indexed(Vec<IndexSpec>),
}

/// Clauses and directives in source order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub items: Vec<Item>,
}

impl Program {
    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.items.iter().filter_map(|i| match i {
            Item::Clause(c) => Some(c),
            _ => None,
        })
    }

    pub fn directives(&self) -> impl Iterator<Item = &Directive> {
        self.items.iter().filter_map(|i| match i {
            Item::Directive(d) => Some(d),
            _ => None,
        })
    }

    pub fn push_clause(&mut self, c: Clause) {
        self.items.push(Item::Clause(c));
    }

    pub fn push_directive(&mut self, d: Directive) {
        self.items.push(Item::Directive(d));
    }

    pub fn extend(&mut self, other: Program) {
        self.items.extend(other.items);
    }

    /// Defined predicates in order of their first clause.
    pub fn predicates(&self) -> Vec<PredKey> {
        let mut seen = HashSet::new();
        self.clauses().map(Clause::pred).filter(|p| seen.insert(*p)).collect()
    }

    pub fn clauses_of(&self, pred: PredKey) -> Vec<&Clause> {
        self.clauses().filter(|c| c.pred() == pred).collect()
    }

    /// Tabling declaration of each tabled predicate.
    pub fn tabling(&self) -> HashMap<PredKey, Tabling> {
        let mut out = HashMap::new();
        for d in self.directives() {
            match d {
                Directive::Table { pred, mode: TableMode::Variant } => {
                    out.insert(*pred, Tabling::Variant);
                }
                Directive::Table { pred, mode: TableMode::Subsumptive } => {
                    out.insert(*pred, Tabling::Subsumptive);
                }
                Directive::TableIndex { pred, specs } => {
                    out.insert(*pred, Tabling::Indexed(specs.clone()));
                }
                _ => {}
            }
        }
        out
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_program(self))
    }
}

/// A parsed query: a conjunction of goals with its variable names.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub goals: Vec<Term>,
    pub var_names: Vec<String>,
}

/// Predicates implemented by the engine itself.
pub const BUILTINS: &[(&str, usize)] = &[
    ("true", 0),
    ("fail", 0),
    ("false", 0),
    ("!", 0),
    (",", 2),
    (";", 2),
    ("->", 2),
    ("=", 2),
    ("var", 1),
    ("nonvar", 1),
    ("scan", 2),
    ("data_records", 3),
    ("table_error", 1),
];

pub fn is_builtin(pred: PredKey) -> bool {
    BUILTINS.iter().any(|(n, a)| *a == pred.arity && pred.name.as_str() == *n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

fn contains_cut(t: &Term) -> bool {
    match t {
        Term::Atom(s) => *s == Sym::CUT,
        Term::Compound(c) => {
            let control = [Sym::COMMA, Sym::SEMICOLON, Sym::IF_THEN];
            control.contains(&c.functor()) && c.args().len() == 2 && c.args().iter().any(contains_cut)
        }
        _ => false,
    }
}

/// Static checks: cut in tabled predicates, index positions, builtin redefinition,
/// and directives naming undefined predicates.
pub fn validate(program: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let error = |m: String| Diagnostic { severity: Severity::Error, message: m };
    let warning = |m: String| Diagnostic { severity: Severity::Warning, message: m };
    let defined: HashSet<PredKey> = program.predicates().into_iter().collect();
    let tabling = program.tabling();

    for pred in program.predicates() {
        if is_builtin(pred) {
            out.push(error(format!("cannot redefine builtin {pred}")));
        }
        if tabling.contains_key(&pred) && program.clauses_of(pred).iter().any(|c| c.body.iter().any(contains_cut)) {
            out.push(error(format!("cut in tabled predicate {pred}")));
        }
    }
    for d in program.directives() {
        match d {
            Directive::TableIndex { pred, specs } => {
                for spec in specs {
                    if let IndexSpec::Positions(ps) = spec {
                        for p in ps {
                            if *p > pred.arity {
                                out.push(error(format!(
                                    "index position {p} out of range for {pred} in table_index"
                                )));
                            }
                        }
                    }
                }
                if !defined.contains(pred) {
                    out.push(warning(format!("table_index directive for undefined predicate {pred}")));
                }
            }
            Directive::Table { pred, .. } => {
                if !defined.contains(pred) {
                    out.push(warning(format!("table directive for undefined predicate {pred}")));
                }
            }
            Directive::Op(_) => {}
            Directive::Other(t) => out.push(warning(format!("ignoring unsupported directive {t}"))),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::is_variant;

    fn roundtrip(src: &str) -> Program {
        let p = parse_program(src).unwrap();
        let printed = print_program(&p);
        let q = parse_program(&printed).unwrap_or_else(|e| panic!("reparse of\n{printed}\nfailed: {e}"));
        assert_eq!(p, q, "round trip changed the program:\n{printed}");
        p
    }

    #[test]
    fn reads_rules_facts_and_directives() {
        let p = roundtrip(
            ":- table p/2.\np(X,Y) :- e(X,Y).\np(X,Y) :- p(X,Z), e(Z,Y).\ne(a,b). % trailing comment\n",
        );
        assert_eq!(p.items.len(), 4);
        assert_eq!(p.predicates(), vec![PredKey::new("p", 2), PredKey::new("e", 2)]);
        assert_eq!(p.tabling()[&PredKey::new("p", 2)], Tabling::Variant);
        let c = p.clauses().nth(1).unwrap();
        assert_eq!(c.body.len(), 2);
        assert_eq!(c.var_names, vec!["X", "Y", "Z"]);
    }

    #[test]
    fn reads_implication_facts_and_op_directive() {
        let p = roundtrip(":- op(1200,xfx,('<-')).\np <- q,v,r,s.\ns <- true.\n");
        let c = p.clauses().next().unwrap();
        assert_eq!(c.pred(), PredKey::new("<-", 2));
        assert_eq!(print_term(&c.head.args()[1]), "q,v,r,s");
        assert!(matches!(p.items[0], Item::Directive(Directive::Op(_))));
    }

    #[test]
    fn reads_table_index_and_subsumptive_lists() {
        let p = roundtrip(":- table_index(p/4,[1+2,1,2+3+4,4]).\n:- table p1234/4, p4231/4 as subsumptive.\n");
        assert_eq!(
            p.items[0],
            Item::Directive(Directive::TableIndex {
                pred: PredKey::new("p", 4),
                specs: vec![
                    IndexSpec::Positions(vec![1, 2]),
                    IndexSpec::Positions(vec![1]),
                    IndexSpec::Positions(vec![2, 3, 4]),
                    IndexSpec::Positions(vec![4]),
                ],
            })
        );
        assert_eq!(p.tabling()[&PredKey::new("p4231", 4)], Tabling::Subsumptive);
        assert_eq!(p.directives().count(), 3);
    }

    #[test]
    fn rejects_misplaced_zero_and_conflicts() {
        assert!(parse_program(":- table_index(p/2,[0,1]).").is_err());
        assert!(parse_program(":- table_index(p/2,[1,0]).").is_ok());
        assert!(parse_program(":- table p/2.\n:- table_index(p/2,[1]).").is_err());
        assert!(parse_program(":- table p/2.\n:- table p/2 as subsumptive.").is_err());
        assert!(parse_program(":- table p/2.\n:- table p/2.").is_ok());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_program("p(a).\nq(b :- c.") {
            Err(crate::Error::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(parse_program("p(a)").is_err());
        assert!(parse_program("X.").is_err());
    }

    #[test]
    fn prints_lists_and_operators() {
        let q = parse_query("X = [a,b|T], Y = 'hello world', Z = (a,b), W = f(-3), V = 1+2+3").unwrap();
        let printed: Vec<String> = q.goals.iter().map(print_term).collect();
        assert_eq!(printed[0], "_G0 = [a,b|_G1]");
        assert_eq!(printed[1], "_G2 = 'hello world'");
        assert_eq!(printed[2], "_G3 = (a,b)");
        assert_eq!(printed[3], "_G4 = f(-3)");
        assert_eq!(printed[4], "_G5 = 1+2+3");
        let conj = Term::conjunction(vec![Term::atom("q"), Term::atom("t"), Term::atom("v")]);
        assert_eq!(print_term(&conj), "q,t,v");
        let list = Term::list(vec![Term::atom("a"), Term::atom("b")]);
        assert_eq!(print_term(&list), "[a,b]");
    }

    #[test]
    fn if_then_else_chains_print_one_branch_per_line() {
        let src = "p(A,B) :- nonvar(A) -> p12(A,B) ; table_error('Illegal Mode in call to p/2').\n";
        let p = roundtrip(src);
        let printed = print_program(&p);
        assert_eq!(
            printed,
            "p(A,B) :-\n    nonvar(A) -> p12(A,B)\n    ; table_error('Illegal Mode in call to p/2').\n"
        );
    }

    #[test]
    fn queries_keep_variable_names() {
        let q = parse_query("p(a,A), q(A, _, B)").unwrap();
        assert_eq!(q.goals.len(), 2);
        assert_eq!(q.var_names, vec!["A", "_", "B"]);
        let again = parse_query("p(a,B), q(B, C, D).").unwrap();
        let lhs = Term::conjunction(q.goals.clone());
        let rhs = Term::conjunction(again.goals.clone());
        assert!(is_variant(&lhs, &rhs));
    }

    #[test]
    fn validation_reports_cut_ranges_and_undefined() {
        let p = parse_program(":- table p/1.\np(X) :- q(X), !.\nq(a).\n:- table_index(s/1,[2]).\n").unwrap();
        let diags = validate(&p);
        let errors: Vec<_> = diags.iter().filter(|d| d.severity == Severity::Error).collect();
        let warnings: Vec<_> = diags.iter().filter(|d| d.severity == Severity::Warning).collect();
        assert_eq!(errors.len(), 2, "{diags:?}");
        assert!(errors[0].message.contains("cut in tabled predicate p/1"));
        assert!(errors[1].message.contains("out of range"));
        assert_eq!(warnings.len(), 1);
    }
}
