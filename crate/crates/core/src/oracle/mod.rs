//! Bottom-up least-model evaluation, independent of the engine.
//!
//! Rules are grounded by nested joins over the current fact set. Naive
//! iteration derives everything derivable from the facts of earlier
//! iterations; semi-naive iteration only considers rule instances that use at
//! least one fact from the previous iteration. Both tag each fact with the
//! first iteration that derives it.

mod diff;
pub mod random;
mod theorem;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::engine::Answer;
use crate::error::{Error, Result};
use crate::program::{is_builtin, print_clause, print_term, Clause, Program, Query};
use crate::term::{PredKey, Substitution, Term};

pub use diff::{diff_with_engine, fully_abstracted, DiffReport, ModelDiff};
pub use theorem::{check_theorem1_conditions, Theorem1Report};

/// Iterations allowed before evaluation is declared divergent.
pub const DEFAULT_ITERATION_CAP: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    Naive,
    #[default]
    SemiNaive,
}

/// A range-restricted rule; variables are numbered as in the source clause.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub head: Term,
    pub body: Vec<Term>,
}

/// A program split into ground facts and proper rules.
#[derive(Clone, Debug, Default)]
pub struct RuleSet {
    pub facts: Vec<Term>,
    pub rules: Vec<Rule>,
}

impl RuleSet {
    /// Checks that the program is within the evaluator's fragment: no builtins,
    /// no variable body goals, ground facts and range-restricted rules.
    /// Directives are ignored.
    pub fn from_program(program: &Program) -> Result<RuleSet> {
        let mut out = RuleSet::default();
        for c in program.clauses() {
            for g in &c.body {
                match g.pred_key() {
                    None => return Err(Error::Unsupported(format!("non-atomic body goal in {}", print_clause(c)))),
                    Some(k) if is_builtin(k) => {
                        return Err(Error::Unsupported(format!("builtin {k} in {}", print_clause(c))))
                    }
                    Some(_) => {}
                }
            }
            let body_vars: HashSet<_> = c.body.iter().flat_map(Term::vars).collect();
            if let Some(v) = c.head.vars().into_iter().find(|v| !body_vars.contains(v)) {
                let name = c.var_names.get(v.0 as usize).cloned().unwrap_or_default();
                return Err(Error::Unsupported(format!(
                    "rule is not range-restricted ({name} occurs only in the head): {}",
                    print_clause(c)
                )));
            }
            if c.is_fact() {
                out.facts.push(c.head.clone());
            } else {
                out.rules.push(Rule { head: c.head.clone(), body: c.body.clone() });
            }
        }
        Ok(out)
    }
}

/// Reads every `H <- B` fact of a program as the clause `H :- B`, dropping
/// `true` from bodies. Everything else in the program is ignored.
pub fn implication_program(program: &Program) -> Program {
    let arrow = PredKey::new("<-", 2);
    let mut out = Program::default();
    for c in program.clauses().filter(|c| c.is_fact() && c.pred() == arrow) {
        let [head, body] = c.head.args() else { unreachable!("<-/2 has two arguments") };
        let body: Vec<Term> = body.conjuncts().into_iter().filter(|g| g.as_atom().map(|s| s.as_str()) != Some("true")).collect();
        out.push_clause(Clause { head: head.clone(), body, var_names: c.var_names.clone() });
    }
    out
}

/// How a fact was first derived: the rule (index into [`RuleSet::rules`]) and
/// the body instance. Program facts have no derivation.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivation {
    pub rule: usize,
    pub premises: Vec<Term>,
}

/// The least model with iteration tags, in derivation order.
#[derive(Clone, Debug, Default)]
pub struct FactSet {
    facts: Vec<Term>,
    tags: Vec<usize>,
    derivations: Vec<Option<Derivation>>,
    position: HashMap<Term, usize>,
    /// Index of the final iteration, which derived nothing.
    fixpoint: usize,
}

impl FactSet {
    fn insert(&mut self, fact: Term, tag: usize, derivation: Option<Derivation>) -> bool {
        if self.position.contains_key(&fact) {
            return false;
        }
        self.position.insert(fact.clone(), self.facts.len());
        self.tags.push(tag);
        self.facts.push(fact);
        self.derivations.push(derivation);
        true
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, fact: &Term) -> bool {
        self.position.contains_key(fact)
    }

    /// The iteration at which `fact` was first derived.
    pub fn tag(&self, fact: &Term) -> Option<usize> {
        self.position.get(fact).map(|&i| self.tags[i])
    }

    pub fn facts(&self) -> &[Term] {
        &self.facts
    }

    /// The iteration that found nothing new.
    pub fn fixpoint(&self) -> usize {
        self.fixpoint
    }

    /// Facts first derived at iteration `i`, in derivation order.
    pub fn iteration(&self, i: usize) -> Vec<&Term> {
        self.facts.iter().zip(&self.tags).filter(|(_, t)| **t == i).map(|(f, _)| f).collect()
    }

    /// Facts grouped by iteration, from 0 up to the fixpoint (which is empty).
    pub fn iterations(&self) -> Vec<Vec<&Term>> {
        (0..=self.fixpoint).map(|i| self.iteration(i)).collect()
    }

    pub fn facts_of(&self, pred: PredKey) -> Vec<&Term> {
        self.facts.iter().filter(|f| f.pred_key() == Some(pred)).collect()
    }

    pub fn derivation(&self, fact: &Term) -> Option<&Derivation> {
        self.derivations[*self.position.get(fact)?].as_ref()
    }

    /// One block per iteration listing its new facts and, for derived facts,
    /// the body instance that produced them.
    pub fn render_iterations(&self) -> String {
        let mut out = String::new();
        for (i, facts) in self.iterations().into_iter().enumerate() {
            if facts.is_empty() {
                let _ = writeln!(out, "Iteration {i}: nothing new");
                continue;
            }
            let _ = writeln!(out, "Iteration {i}:");
            for f in facts {
                match self.derivation(f) {
                    Some(d) => {
                        let from = d.premises.iter().map(print_term).collect::<Vec<_>>().join(" and ");
                        let _ = writeln!(out, "  {} from {from}", print_term(f));
                    }
                    None => {
                        let _ = writeln!(out, "  {}", print_term(f));
                    }
                }
            }
        }
        out
    }
}

/// Facts grouped by predicate for joins.
#[derive(Default)]
struct Relations<'a> {
    by_pred: HashMap<PredKey, Vec<&'a Term>>,
}

impl<'a> Relations<'a> {
    fn new(facts: impl IntoIterator<Item = &'a Term>) -> Self {
        let mut r = Relations::default();
        for f in facts {
            r.by_pred.entry(f.pred_key().expect("facts are callable")).or_default().push(f);
        }
        r
    }

    fn of(&self, goal: &Term) -> &[&'a Term] {
        goal.pred_key().and_then(|k| self.by_pred.get(&k)).map_or(&[], Vec::as_slice)
    }
}

/// Calls `found` for every instance of `body` whose atom `i` comes from
/// `source(i)`, passing the substitution and the matched facts.
fn join<'r, 'a>(
    body: &[Term],
    source: &dyn Fn(usize) -> &'r Relations<'a>,
    found: &mut dyn FnMut(&Substitution, &[&'a Term]),
) {
    fn go<'r, 'a>(
        body: &[Term],
        i: usize,
        s: &Substitution,
        matched: &mut Vec<&'a Term>,
        source: &dyn Fn(usize) -> &'r Relations<'a>,
        found: &mut dyn FnMut(&Substitution, &[&'a Term]),
    ) {
        if i == body.len() {
            found(s, matched);
            return;
        }
        for f in source(i).of(&body[i]) {
            let mut s2 = s.clone();
            if s2.unify_in(&body[i], f) {
                matched.push(f);
                go(body, i + 1, &s2, matched, source, found);
                matched.pop();
            }
        }
    }
    go(body, 0, &Substitution::new(), &mut Vec::new(), source, found);
}

fn derive_all<'a>(rules: &[Rule], all: &Relations<'a>, delta: Option<&Relations<'a>>) -> Vec<(Term, Derivation)> {
    let mut out = Vec::new();
    for (r, rule) in rules.iter().enumerate() {
        let positions: Vec<Option<usize>> = match delta {
            None => vec![None],
            Some(_) => (0..rule.body.len()).map(Some).collect(),
        };
        for at in positions {
            let source = |i: usize| match (at, delta) {
                (Some(j), Some(d)) if i == j => d,
                _ => all,
            };
            join(&rule.body, &source, &mut |s, matched| {
                out.push((
                    s.apply(&rule.head),
                    Derivation { rule: r, premises: matched.iter().map(|t| (*t).clone()).collect() },
                ));
            });
        }
    }
    out
}

/// The facts derivable by rule instances that use at least one `delta` fact
/// and every other body atom from `total`, minus `total`. `delta` must be a
/// subset of `total`.
pub fn seminaive_step(rules: &RuleSet, total: &FactSet, delta: &[Term]) -> Vec<Term> {
    let all = Relations::new(total.facts());
    let d = Relations::new(delta);
    let mut seen = HashSet::new();
    derive_all(&rules.rules, &all, Some(&d))
        .into_iter()
        .map(|(f, _)| f)
        .filter(|f| !total.contains(f) && seen.insert(f.clone()))
        .collect()
}

pub fn least_model(program: &Program) -> Result<FactSet> {
    least_model_with(program, Strategy::SemiNaive, DEFAULT_ITERATION_CAP)
}

pub fn least_model_with(program: &Program, strategy: Strategy, cap: usize) -> Result<FactSet> {
    evaluate(&RuleSet::from_program(program)?, strategy, cap)
}

pub fn evaluate(rules: &RuleSet, strategy: Strategy, cap: usize) -> Result<FactSet> {
    let mut model = FactSet::default();
    for f in &rules.facts {
        model.insert(f.clone(), 0, None);
    }
    let mut delta_start = 0;
    for i in 1.. {
        if i > cap {
            return Err(Error::IterationCap(cap));
        }
        let derived = {
            let all = Relations::new(model.facts());
            match strategy {
                Strategy::Naive => derive_all(&rules.rules, &all, None),
                Strategy::SemiNaive => {
                    let delta = Relations::new(&model.facts[delta_start..]);
                    derive_all(&rules.rules, &all, Some(&delta))
                }
            }
        };
        let before = model.len();
        for (f, d) in derived {
            model.insert(f, i, Some(d));
        }
        if model.len() == before {
            model.fixpoint = i;
            return Ok(model);
        }
        delta_start = before;
    }
    unreachable!("the loop returns at the fixpoint or the cap")
}

/// Every body instance of `goals` true in `model`, as answers over the query's
/// named variables, without duplicates and in model order.
pub fn query_answers(model: &FactSet, query: &Query) -> Vec<Answer> {
    let all = Relations::new(model.facts());
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let named: Vec<(String, Term)> = query
        .var_names
        .iter()
        .enumerate()
        .filter(|(_, n)| n.as_str() != "_")
        .map(|(i, n)| (n.clone(), Term::var(i as u64)))
        .collect();
    join(&query.goals, &|_| &all, &mut |s, _| {
        let bindings: Vec<(String, Term)> = named.iter().map(|(n, v)| (n.clone(), s.apply(v))).collect();
        if seen.insert(bindings.clone()) {
            out.push(Answer { bindings });
        }
    });
    out
}

/// Whether some instance of `body` holds in `model`.
pub(crate) fn satisfiable(model: &FactSet, body: &[Term]) -> bool {
    let all = Relations::new(model.facts());
    let mut any = false;
    join(body, &|_| &all, &mut |_, _| any = true);
    any
}
