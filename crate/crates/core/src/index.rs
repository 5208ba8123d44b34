//! Compiles `table_index` declarations into permutations, dispatch and call abstraction.
//!
//! Each declared position set must be a prefix of some permutation of the
//! arguments so that a trie built in that order can answer the lookup. Sets
//! that form a chain under inclusion can share a permutation, so the fewest
//! permutations is a minimum chain cover of the declared sets, found here by
//! bipartite matching (Dilworth).

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::program::{print_clause, print_index_spec, Clause, Directive, IndexSpec, Item, Program};
use crate::term::{PredKey, Substitution, Sym, Term, VarId, VarSource};

/// An argument order: `order[i]` is the 1-based original position stored at slot `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(arity: usize) -> Self {
        Permutation((1..=arity).collect())
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, p)| *p == i + 1)
    }

    /// Arguments of `args` rearranged into this order.
    pub fn apply<'a>(&self, args: &'a [Term]) -> Vec<&'a Term> {
        self.0.iter().map(|p| &args[p - 1]).collect()
    }

    /// Suffix used to name the permuted predicate, e.g. `4231`.
    pub fn suffix(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        if self.0.len() > 9 {
            parts.join("_")
        } else {
            parts.concat()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    pub permutations: Vec<Permutation>,
    /// Permutation serving each declared spec; `None` for the `0` entry.
    pub assignment: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DispatchEntry {
    /// The index set that introduced this permutation into the dispatch.
    pub positions: Vec<usize>,
    pub permutation: usize,
}

/// Everything derived from one `table_index` declaration.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexPlan {
    pub pred: PredKey,
    pub specs: Vec<IndexSpec>,
    /// Positions bound in every legal call; kept in the abstracted call.
    pub bound: Vec<usize>,
    pub cover: Cover,
    pub dispatch: Vec<DispatchEntry>,
    /// A `0` entry was declared, so calls binding no index are legal.
    pub unindexed_ok: bool,
}

/// Positions shared by every declared index (empty when `0` is declared).
pub fn bound_positions(specs: &[IndexSpec]) -> Vec<usize> {
    let mut acc: Option<BTreeSet<usize>> = None;
    for spec in specs {
        match spec {
            IndexSpec::Unindexed => return Vec::new(),
            IndexSpec::Positions(ps) => {
                let set: BTreeSet<usize> = ps.iter().copied().collect();
                acc = Some(match acc {
                    None => set,
                    Some(a) => a.intersection(&set).copied().collect(),
                });
            }
        }
    }
    acc.map(|s| s.into_iter().collect()).unwrap_or_default()
}

fn spec_set(spec: &IndexSpec) -> Option<BTreeSet<usize>> {
    match spec {
        IndexSpec::Positions(ps) => Some(ps.iter().copied().collect()),
        IndexSpec::Unindexed => None,
    }
}

/// Maximum bipartite matching over strict inclusion; `next[i] = Some(j)` puts `j` after `i` in a chain.
fn chain_successors(sets: &[BTreeSet<usize>]) -> Vec<Option<usize>> {
    let n = sets.len();
    let below = |i: usize, j: usize| sets[i].len() < sets[j].len() && sets[i].is_subset(&sets[j]);
    let mut owner: Vec<Option<usize>> = vec![None; n];

    fn augment(
        i: usize,
        n: usize,
        below: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..n {
            if below(i, j) && !seen[j] {
                seen[j] = true;
                if owner[j].is_none() || augment(owner[j].unwrap(), n, below, seen, owner) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }

    for i in 0..n {
        let mut seen = vec![false; n];
        augment(i, n, &below, &mut seen, &mut owner);
    }
    let mut next = vec![None; n];
    for (j, o) in owner.iter().enumerate() {
        if let Some(i) = o {
            next[*i] = Some(j);
        }
    }
    next
}

/// Smallest set of argument permutations such that every declared position set is a prefix of one.
pub fn permutation_cover(specs: &[IndexSpec], arity: usize) -> Cover {
    // Distinct sets in declaration order, and the distinct set each spec maps to.
    let mut sets: Vec<BTreeSet<usize>> = Vec::new();
    let mut spec_to_set = Vec::new();
    for spec in specs {
        spec_to_set.push(spec_set(spec).map(|s| match sets.iter().position(|t| *t == s) {
            Some(i) => i,
            None => {
                sets.push(s);
                sets.len() - 1
            }
        }));
    }
    if sets.is_empty() {
        return Cover { permutations: vec![Permutation::identity(arity)], assignment: vec![None; specs.len()] };
    }

    let next = chain_successors(&sets);
    let mut has_pred = vec![false; sets.len()];
    for j in next.iter().flatten() {
        has_pred[*j] = true;
    }
    let mut chain_of = vec![0usize; sets.len()];
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for start in (0..sets.len()).filter(|i| !has_pred[*i]) {
        let mut chain = vec![start];
        while let Some(j) = next[*chain.last().unwrap()] {
            chain.push(j);
        }
        for &i in &chain {
            chain_of[i] = chains.len();
        }
        chains.push(chain);
    }
    // Order permutations by the earliest declared set they serve.
    let mut order: Vec<usize> = (0..chains.len()).collect();
    order.sort_by_key(|c| chains[*c].iter().min().copied());
    let rank: Vec<usize> = {
        let mut r = vec![0; chains.len()];
        for (pos, c) in order.iter().enumerate() {
            r[*c] = pos;
        }
        r
    };

    let permutations = order
        .iter()
        .map(|&c| {
            let mut perm: Vec<usize> = Vec::with_capacity(arity);
            for &i in &chains[c] {
                perm.extend(sets[i].iter().filter(|p| !perm.contains(p)).copied().collect::<Vec<_>>());
            }
            perm.extend((1..=arity).filter(|p| !perm.contains(p)).collect::<Vec<_>>());
            Permutation(perm)
        })
        .collect();
    let assignment = spec_to_set.iter().map(|s| s.map(|i| rank[chain_of[i]])).collect();
    Cover { permutations, assignment }
}

/// Dispatch table: one entry per permutation, in the declaration order of the specs.
pub fn build_dispatch(specs: &[IndexSpec], cover: &Cover) -> Vec<DispatchEntry> {
    let mut out: Vec<DispatchEntry> = Vec::new();
    for (spec, perm) in specs.iter().zip(&cover.assignment) {
        if let (IndexSpec::Positions(ps), Some(perm)) = (spec, perm) {
            if !out.iter().any(|e| e.permutation == *perm) {
                out.push(DispatchEntry { positions: ps.clone(), permutation: *perm });
            }
        }
    }
    out
}

impl IndexPlan {
    pub fn compile(pred: PredKey, specs: &[IndexSpec]) -> Result<Self> {
        for spec in specs {
            if let IndexSpec::Positions(ps) = spec {
                if let Some(p) = ps.iter().find(|p| **p == 0 || **p > pred.arity) {
                    return Err(Error::Invalid(format!("index position {p} out of range for {pred}")));
                }
            }
        }
        let cover = permutation_cover(specs, pred.arity);
        let dispatch = build_dispatch(specs, &cover);
        Ok(IndexPlan {
            pred,
            specs: specs.to_vec(),
            bound: bound_positions(specs),
            dispatch,
            cover,
            unindexed_ok: specs.contains(&IndexSpec::Unindexed),
        })
    }

    pub fn permutations(&self) -> &[Permutation] {
        &self.cover.permutations
    }

    /// Permutation chosen for a call with arguments `args` (already instantiated).
    pub fn route(&self, args: &[Term]) -> Option<usize> {
        for entry in &self.dispatch {
            let first = self.cover.permutations[entry.permutation].first()?;
            if !args[first - 1].is_var() {
                return Some(entry.permutation);
            }
        }
        self.unindexed_ok.then_some(0)
    }

    fn illegal(&self, goal: &Term) -> Error {
        Error::IllegalMode { pred: self.pred.to_string(), goal: goal.to_string() }
    }

    /// Replaces every argument outside the bound positions with a fresh variable.
    /// Returns the abstracted call, the residual substitution mapping the fresh
    /// variables back to the original arguments, and the routed permutation.
    pub fn abstract_call(&self, goal: &Term, vars: &mut VarSource) -> Result<(Term, Substitution, usize)> {
        let args = goal.args();
        if self.bound.iter().any(|p| args[p - 1].is_var()) {
            return Err(self.illegal(goal));
        }
        let perm = self.route(args).ok_or_else(|| self.illegal(goal))?;
        let mut residual = Substitution::new();
        let new_args = args
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if self.bound.contains(&(i + 1)) {
                    a.clone()
                } else {
                    let v = vars.fresh();
                    residual.bind(v, a.clone());
                    Term::Var(v)
                }
            })
            .collect();
        Ok((Term::app(self.pred.name, new_args), residual, perm))
    }
}

/// Variable names `A`..`Z`, then `A1`..`Z1`, and so on.
fn letter(i: usize) -> String {
    let c = (b'A' + (i % 26) as u8) as char;
    if i < 26 {
        c.to_string()
    } else {
        format!("{c}{}", i / 26)
    }
}

fn var(i: usize) -> Term {
    Term::Var(VarId(i as u64))
}

fn named_clause(head: Term, body: Vec<Term>, nvars: usize) -> Clause {
    Clause { head, body, var_names: (0..nvars).map(letter).collect() }
}

fn ite(cond: Vec<Term>, then: Term, otherwise: Term) -> Term {
    Term::app(Sym::SEMICOLON, vec![Term::app(Sym::IF_THEN, vec![Term::conjunction(cond), then]), otherwise])
}

pub fn permuted_name(pred: PredKey, perm: &Permutation) -> Sym {
    Sym::intern(&format!("{}{}", pred.name, perm.suffix()))
}

pub fn base_name(pred: PredKey) -> Sym {
    Sym::intern(&format!("{}_base", pred.name))
}

/// Directive and clauses implementing `plan` with plain subsumptive tables.
/// The original clauses of the predicate are expected to be renamed to `<name>_base`.
pub fn emit_transformed(plan: &IndexPlan) -> (String, Vec<Clause>) {
    let pred = plan.pred;
    let n = pred.arity;
    let perms = plan.permutations();
    let names: Vec<String> =
        perms.iter().map(|p| format!("{}/{}", crate::program::print_term(&Term::Atom(permuted_name(pred, p))), n)).collect();
    let directive = format!(":- table {} as subsumptive.", names.join(", "));
    let head_vars: Vec<Term> = (0..n).map(var).collect();
    let call_perm = |perm: &Permutation, slot_of: &dyn Fn(usize) -> usize| {
        Term::app(permuted_name(pred, perm), perm.0.iter().map(|p| var(slot_of(*p))).collect())
    };

    let mut clauses = Vec::new();
    // Dispatch clause.
    let fallback = if plan.unindexed_ok {
        call_perm(&perms[0], &|p| p - 1)
    } else {
        Term::compound("table_error", vec![Term::atom(&format!("Illegal Mode in call to {pred}"))])
    };
    let body = plan.dispatch.iter().rev().fold(fallback, |acc, entry| {
        let perm = &perms[entry.permutation];
        let test = Term::compound("nonvar", vec![var(perm.0[0] - 1)]);
        ite(vec![test], call_perm(perm, &|p| p - 1), acc)
    });
    clauses.push(named_clause(Term::app(pred.name, head_vars.clone()), vec![body], n));

    for (i, perm) in perms.iter().enumerate() {
        let slot_of = |pos: usize| perm.0.iter().position(|p| *p == pos).expect("permutation covers every position");
        let head = Term::app(permuted_name(pred, perm), head_vars.clone());
        let open: Vec<usize> = (1..=n).filter(|p| !plan.bound.contains(p)).collect();
        let inner = if i == 0 {
            Term::app(base_name(pred), (1..=n).map(|p| var(slot_of(p))).collect())
        } else {
            call_perm(&perms[0], &slot_of)
        };
        if open.is_empty() {
            clauses.push(named_clause(head, vec![inner], n));
            continue;
        }
        let tests: Vec<Term> = open.iter().map(|p| Term::compound("var", vec![var(slot_of(*p))])).collect();
        // Fresh variables for the open slots, in slot order.
        let open_slots: Vec<usize> = (0..n).filter(|k| !plan.bound.contains(&perm.0[*k])).collect();
        let mut fresh = n;
        let mut self_args = Vec::with_capacity(n);
        let mut unifications = Vec::new();
        for k in 0..n {
            if open_slots.contains(&k) {
                self_args.push(var(fresh));
                unifications.push(Term::app(Sym::EQUALS, vec![var(fresh), var(k)]));
                fresh += 1;
            } else {
                self_args.push(var(k));
            }
        }
        let mut otherwise = vec![Term::app(permuted_name(pred, perm), self_args)];
        otherwise.extend(unifications);
        let body = ite(tests, inner, Term::conjunction(otherwise));
        clauses.push(named_clause(head, vec![body], fresh));
    }
    (directive, clauses)
}

fn rename_head(c: &Clause, name: Sym) -> Clause {
    let head = Term::app(name, c.head.args().to_vec());
    Clause { head, ..c.clone() }
}

/// Rewrites every `table_index` declaration into plain subsumptive tabling and
/// returns the resulting program text.
pub fn transform_program(program: &Program) -> Result<String> {
    let tabling = program.tabling();
    let mut plans = Vec::new();
    for d in program.directives() {
        if let Directive::TableIndex { pred, specs } = d {
            plans.push(IndexPlan::compile(*pred, specs)?);
        }
    }
    if plans.is_empty() {
        return Err(Error::Invalid("program has no table_index declarations to transform".into()));
    }
    let indexed = |p: PredKey| matches!(tabling.get(&p), Some(crate::program::Tabling::Indexed(_)));
    let mut out = String::new();
    for item in &program.items {
        match item {
            Item::Directive(Directive::TableIndex { pred, specs }) => {
                let plan = plans.iter().find(|p| p.pred == *pred).expect("compiled above");
                let specs: Vec<String> = specs.iter().map(print_index_spec).collect();
                out.push_str(&format!("% table_index({pred},[{}])\n", specs.join(",")));
                let (directive, clauses) = emit_transformed(plan);
                out.push_str(&directive);
                out.push('\n');
                for c in clauses {
                    out.push_str(&print_clause(&c));
                    out.push('\n');
                }
            }
            Item::Directive(d) => {
                out.push_str(&crate::program::print_directive(d));
                out.push('\n');
            }
            Item::Clause(c) => {
                let c = if indexed(c.pred()) { rename_head(c, base_name(c.pred())) } else { c.clone() };
                out.push_str(&print_clause(&c));
                out.push('\n');
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;

    fn specs(src: &str) -> (PredKey, Vec<IndexSpec>) {
        let p = parse_program(src).unwrap();
        let d = p.directives().next().unwrap().clone();
        match d {
            Directive::TableIndex { pred, specs } => (pred, specs),
            _ => unreachable!(),
        }
    }

    #[test]
    fn four_argument_example_needs_two_permutations() {
        let (pred, s) = specs(":- table_index(p/4,[1+2,1,2+3+4,4]).");
        let plan = IndexPlan::compile(pred, &s).unwrap();
        assert_eq!(plan.permutations(), &[Permutation(vec![1, 2, 3, 4]), Permutation(vec![4, 2, 3, 1])]);
        assert_eq!(plan.cover.assignment, vec![Some(0), Some(0), Some(1), Some(1)]);
        assert!(plan.bound.is_empty());
        assert_eq!(plan.dispatch.len(), 2);
    }

    #[test]
    fn bound_positions_are_the_common_core() {
        let (_, s) = specs(":- table_index(c/3,[1+3,1]).");
        assert_eq!(bound_positions(&s), vec![1]);
        let (_, s) = specs(":- table_index(e/4,[1+2,1]).");
        assert_eq!(bound_positions(&s), vec![1]);
        let (_, s) = specs(":- table_index(w/2,[2,0]).");
        assert!(bound_positions(&s).is_empty());
    }

    #[test]
    fn routing_follows_first_positions() {
        let (pred, s) = specs(":- table_index(p/4,[1+2,1,2+3+4,4]).");
        let plan = IndexPlan::compile(pred, &s).unwrap();
        let a = Term::atom("a");
        let v = |i| Term::var(i);
        assert_eq!(plan.route(&[a.clone(), v(1), v(2), v(3)]), Some(0));
        assert_eq!(plan.route(&[v(0), v(1), v(2), a.clone()]), Some(1));
        assert_eq!(plan.route(&[v(0), a.clone(), v(2), v(3)]), None);
    }

    #[test]
    fn abstraction_keeps_bound_positions() {
        let (pred, s) = specs(":- table_index(c/3,[1+3,1]).");
        let plan = IndexPlan::compile(pred, &s).unwrap();
        let mut vars = VarSource::starting_at(100);
        let goal = Term::compound("c", vec![Term::atom("b1"), Term::atom("s"), Term::atom("w")]);
        let (abs, residual, perm) = plan.abstract_call(&goal, &mut vars).unwrap();
        assert_eq!(perm, 0);
        assert_eq!(abs.args()[0], Term::atom("b1"));
        assert!(abs.args()[1].is_var() && abs.args()[2].is_var());
        assert_eq!(residual.apply(&abs), goal);
        let bad = Term::compound("c", vec![Term::var(1), Term::atom("s"), Term::atom("w")]);
        assert!(matches!(plan.abstract_call(&bad, &mut vars), Err(Error::IllegalMode { .. })));
    }

    #[test]
    fn emitted_code_for_four_argument_example() {
        let program = parse_program(":- table_index(p/4,[1+2,1,2+3+4,4]).\np(a,b,c,d).\n").unwrap();
        let text = transform_program(&program).unwrap();
        let expected = "\
% table_index(p/4,[1+2,1,2+3+4,4])
:- table p1234/4, p4231/4 as subsumptive.
p(A,B,C,D) :-
    nonvar(A) -> p1234(A,B,C,D)
    ; nonvar(D) -> p4231(D,B,C,A)
    ; table_error('Illegal Mode in call to p/4').
p1234(A,B,C,D) :-
    var(A),var(B),var(C),var(D) -> p_base(A,B,C,D)
    ; p1234(E,F,G,H),E = A,F = B,G = C,H = D.
p4231(A,B,C,D) :-
    var(D),var(B),var(C),var(A) -> p1234(D,B,C,A)
    ; p4231(E,F,G,H),E = A,F = B,G = C,H = D.
p_base(a,b,c,d).
";
        assert_eq!(text, expected);
        parse_program(&text).unwrap();
    }
}
