//! Terms, substitutions and the unification family.
//!
//! Terms are immutable and share structure through `Arc`. Every compound
//! carries a groundness flag so that substitution and renaming can skip
//! ground subterms without walking them.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use once_cell::sync::Lazy;

/// An interned symbol (atom name or functor name).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(u32);

struct Interner {
    names: Vec<&'static str>,
    ids: HashMap<&'static str, u32>,
}

// Order must match the associated constants on `Sym`.
const PRESEEDED: &[&str] = &[
    ",", "<-", ":-", ".", "[]", "true", "!", ";", "->", "=", "$query", "+", "/", "fail",
];

static INTERNER: Lazy<RwLock<Interner>> = Lazy::new(|| {
    let mut interner = Interner { names: Vec::new(), ids: HashMap::new() };
    for name in PRESEEDED {
        interner.ids.insert(name, interner.names.len() as u32);
        interner.names.push(name);
    }
    RwLock::new(interner)
});

impl Sym {
    pub const COMMA: Sym = Sym(0);
    pub const IMPLIED_BY: Sym = Sym(1);
    pub const NECK: Sym = Sym(2);
    pub const CONS: Sym = Sym(3);
    pub const NIL: Sym = Sym(4);
    pub const TRUE: Sym = Sym(5);
    pub const CUT: Sym = Sym(6);
    pub const SEMICOLON: Sym = Sym(7);
    pub const IF_THEN: Sym = Sym(8);
    pub const EQUALS: Sym = Sym(9);
    pub const QUERY: Sym = Sym(10);
    pub const PLUS: Sym = Sym(11);
    pub const SLASH: Sym = Sym(12);
    pub const FAIL: Sym = Sym(13);

    pub fn intern(name: &str) -> Sym {
        if let Some(&id) = INTERNER.read().expect("interner poisoned").ids.get(name) {
            return Sym(id);
        }
        let mut interner = INTERNER.write().expect("interner poisoned");
        if let Some(&id) = interner.ids.get(name) {
            return Sym(id);
        }
        // Symbols live for the whole process; leaking keeps lookups lock-free for callers.
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = interner.names.len() as u32;
        interner.names.push(leaked);
        interner.ids.insert(leaked, id);
        Sym(id)
    }

    pub fn as_str(self) -> &'static str {
        INTERNER.read().expect("interner poisoned").names[self.0 as usize]
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VarId(pub u64);

/// Hands out fresh variable identifiers.
#[derive(Debug, Clone)]
pub struct VarSource {
    next: u64,
}

impl Default for VarSource {
    fn default() -> Self {
        Self::new()
    }
}

impl VarSource {
    pub fn new() -> Self {
        VarSource { next: 0 }
    }

    /// Starts numbering at `first`; used to keep fresh variables clear of clause-local ones.
    pub fn starting_at(first: u64) -> Self {
        VarSource { next: first }
    }

    pub fn fresh(&mut self) -> VarId {
        let v = VarId(self.next);
        self.next += 1;
        v
    }

    /// Reserves `n` consecutive identifiers and returns the first.
    pub fn fresh_block(&mut self, n: u64) -> u64 {
        let base = self.next;
        self.next += n;
        base
    }
}

/// Name and arity of a predicate or functor.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PredKey {
    pub name: Sym,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: &str, arity: usize) -> Self {
        PredKey { name: Sym::intern(name), arity }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(VarId),
    Atom(Sym),
    Int(i64),
    Compound(Arc<Compound>),
}

#[derive(PartialEq, Eq, Hash)]
pub struct Compound {
    functor: Sym,
    args: Box<[Term]>,
    ground: bool,
}

impl Compound {
    pub fn functor(&self) -> Sym {
        self.functor
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Sym::intern(name))
    }

    pub fn var(id: u64) -> Term {
        Term::Var(VarId(id))
    }

    /// Builds `name(args...)`; a zero-argument application is an atom.
    pub fn app(functor: Sym, args: Vec<Term>) -> Term {
        if args.is_empty() {
            return Term::Atom(functor);
        }
        let ground = args.iter().all(Term::is_ground);
        Term::Compound(Arc::new(Compound { functor, args: args.into_boxed_slice(), ground }))
    }

    pub fn compound(name: &str, args: Vec<Term>) -> Term {
        Term::app(Sym::intern(name), args)
    }

    /// Builds a proper list from `items`, ending in `tail`.
    pub fn list_with_tail(items: Vec<Term>, tail: Term) -> Term {
        items.into_iter().rev().fold(tail, |acc, item| Term::app(Sym::CONS, vec![item, acc]))
    }

    pub fn list(items: Vec<Term>) -> Term {
        Term::list_with_tail(items, Term::Atom(Sym::NIL))
    }

    /// Right-nested conjunction of `goals`; `true` when empty.
    pub fn conjunction(mut goals: Vec<Term>) -> Term {
        let Some(mut acc) = goals.pop() else {
            return Term::Atom(Sym::TRUE);
        };
        while let Some(g) = goals.pop() {
            acc = Term::app(Sym::COMMA, vec![g, acc]);
        }
        acc
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Atom(_) | Term::Int(_) => true,
            Term::Compound(c) => c.ground,
        }
    }

    pub fn is_callable(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Compound(_))
    }

    /// Functor name and arity; atoms have arity 0, integers and variables have none.
    pub fn pred_key(&self) -> Option<PredKey> {
        match self {
            Term::Atom(s) => Some(PredKey { name: *s, arity: 0 }),
            Term::Compound(c) => Some(PredKey { name: c.functor, arity: c.args.len() }),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(c) => &c.args,
            _ => &[],
        }
    }

    pub fn as_atom(&self) -> Option<Sym> {
        match self {
            Term::Atom(s) => Some(*s),
            _ => None,
        }
    }

    /// Splits a right-nested `','/2` chain into its conjuncts.
    pub fn conjuncts(&self) -> Vec<Term> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Compound(c) if c.functor == Sym::COMMA && c.args.len() == 2 => {
                    out.push(c.args[0].clone());
                    cur = &c.args[1];
                }
                _ => {
                    out.push(cur.clone());
                    return out;
                }
            }
        }
    }

    /// Items of a proper list, or `None` for partial or improper lists.
    pub fn list_items(&self) -> Option<Vec<Term>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Atom(s) if *s == Sym::NIL => return Some(out),
                Term::Compound(c) if c.functor == Sym::CONS && c.args.len() == 2 => {
                    out.push(c.args[0].clone());
                    cur = &c.args[1];
                }
                _ => return None,
            }
        }
    }

    /// Variables in order of first occurrence (depth-first, left to right).
    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::Compound(c) if !c.ground => c.args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    /// Adds `base` to every variable identifier; used to instantiate stored clauses.
    pub fn offset_vars(&self, base: u64) -> Term {
        match self {
            Term::Var(v) => Term::Var(VarId(v.0 + base)),
            Term::Compound(c) if !c.ground => {
                let args: Vec<Term> = c.args.iter().map(|a| a.offset_vars(base)).collect();
                Term::Compound(Arc::new(Compound { functor: c.functor, args: args.into(), ground: false }))
            }
            _ => self.clone(),
        }
    }

    /// Renames variables through `map`, creating fresh ones from `source` for unseen variables.
    pub fn rename_with(&self, map: &mut HashMap<VarId, VarId>, source: &mut VarSource) -> Term {
        match self {
            Term::Var(v) => Term::Var(*map.entry(*v).or_insert_with(|| source.fresh())),
            Term::Compound(c) if !c.ground => {
                let args: Vec<Term> = c.args.iter().map(|a| a.rename_with(map, source)).collect();
                Term::Compound(Arc::new(Compound { functor: c.functor, args: args.into(), ground: false }))
            }
            _ => self.clone(),
        }
    }

    /// Number of symbols in the term.
    pub fn size(&self) -> usize {
        match self {
            Term::Compound(c) => 1 + c.args.iter().map(Term::size).sum::<usize>(),
            _ => 1,
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::program::print_term(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::program::print_term(self))
    }
}

/// A triangular substitution: bindings may mention variables bound later.
#[derive(Clone, Default, PartialEq)]
pub struct Substitution {
    bindings: Vec<(VarId, Term)>,
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.bindings.iter().map(|(v, t)| (format!("_G{}", v.0), t))).finish()
    }
}

impl Substitution {
    pub fn new() -> Self {
        Substitution { bindings: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn get(&self, v: VarId) -> Option<&Term> {
        self.bindings.iter().rev().find(|(w, _)| *w == v).map(|(_, t)| t)
    }

    /// Records `v ↦ t` without any check; `v` must be unbound.
    pub fn bind(&mut self, v: VarId, t: Term) {
        self.bindings.push((v, t));
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Term)> {
        self.bindings.iter().map(|(v, t)| (*v, t))
    }

    /// Follows variable bindings until reaching a non-variable or an unbound variable.
    pub fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.get(*v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    /// Applies the substitution exhaustively.
    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() || t.is_ground() {
            return t.clone();
        }
        match t {
            Term::Var(_) => {
                let w = self.walk(t);
                if w.is_var() {
                    w.clone()
                } else {
                    self.apply(w)
                }
            }
            Term::Compound(c) => {
                let args: Vec<Term> = c.args.iter().map(|a| self.apply(a)).collect();
                Term::app(c.functor, args)
            }
            _ => t.clone(),
        }
    }

    /// The idempotent form: every binding fully applied.
    pub fn resolved(&self) -> Substitution {
        let mut seen = Vec::new();
        let mut out = Substitution::new();
        for (v, _) in self.bindings.iter() {
            if !seen.contains(v) {
                seen.push(*v);
                out.bind(*v, self.apply(&Term::Var(*v)));
            }
        }
        out
    }

    fn occurs(&self, v: VarId, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => *w == v,
            Term::Compound(c) if !c.ground => c.args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }

    /// Extends `self` with a most general unifier of `a` and `b` (with occurs check).
    /// On failure `self` is left unchanged.
    pub fn unify_in(&mut self, a: &Term, b: &Term) -> bool {
        let mark = self.bindings.len();
        if self.unify_rec(a, b) {
            true
        } else {
            self.bindings.truncate(mark);
            false
        }
    }

    fn unify_rec(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), _) => {
                if self.occurs(*x, &b) {
                    return false;
                }
                self.bind(*x, b);
                true
            }
            (_, Term::Var(y)) => {
                if self.occurs(*y, &a) {
                    return false;
                }
                self.bind(*y, a);
                true
            }
            (Term::Atom(x), Term::Atom(y)) => x == y,
            (Term::Int(x), Term::Int(y)) => x == y,
            (Term::Compound(x), Term::Compound(y)) => {
                if Arc::ptr_eq(x, y) && x.ground {
                    return true;
                }
                if x.functor != y.functor || x.args.len() != y.args.len() {
                    return false;
                }
                if x.ground && y.ground {
                    return x == y;
                }
                x.args.iter().zip(y.args.iter()).all(|(p, q)| self.unify_rec(p, q))
            }
            _ => false,
        }
    }
}

/// Most general unifier of `t1` and `t2` extending `s`, if one exists.
pub fn unify(t1: &Term, t2: &Term, s: &Substitution) -> Option<Substitution> {
    let mut out = s.clone();
    out.unify_in(t1, t2).then_some(out)
}

/// True when the terms are equal up to a consistent bijective renaming of variables.
pub fn is_variant(t1: &Term, t2: &Term) -> bool {
    fn go(a: &Term, b: &Term, fwd: &mut HashMap<VarId, VarId>, back: &mut HashMap<VarId, VarId>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                let f = *fwd.entry(*x).or_insert(*y);
                let g = *back.entry(*y).or_insert(*x);
                f == *y && g == *x
            }
            (Term::Atom(x), Term::Atom(y)) => x == y,
            (Term::Int(x), Term::Int(y)) => x == y,
            (Term::Compound(x), Term::Compound(y)) => {
                x.functor == y.functor
                    && x.args.len() == y.args.len()
                    && x.args.iter().zip(y.args.iter()).all(|(p, q)| go(p, q, fwd, back))
            }
            _ => false,
        }
    }
    go(t1, t2, &mut HashMap::new(), &mut HashMap::new())
}

/// One-sided matching: a substitution `θ` over the variables of `general` with
/// `general·θ` syntactically equal to `specific`. Variables of `specific` are treated
/// as constants, and the two terms are assumed to share no variables.
pub fn subsumes(general: &Term, specific: &Term) -> Option<Substitution> {
    let mut s = Substitution::new();
    match_in(general, specific, &mut s).then_some(s)
}

/// Extends `s` so that `general·s == specific`; `s` binds only variables of `general`.
pub fn match_in(general: &Term, specific: &Term, s: &mut Substitution) -> bool {
    match general {
        Term::Var(v) => match s.get(*v) {
            Some(bound) => bound == specific,
            None => {
                s.bind(*v, specific.clone());
                true
            }
        },
        Term::Atom(x) => matches!(specific, Term::Atom(y) if x == y),
        Term::Int(x) => matches!(specific, Term::Int(y) if x == y),
        Term::Compound(g) => match specific {
            Term::Compound(c) => {
                if g.ground {
                    return g == c;
                }
                g.functor == c.functor
                    && g.args.len() == c.args.len()
                    && g.args.iter().zip(c.args.iter()).all(|(p, q)| match_in(p, q, s))
            }
            _ => false,
        },
    }
}

/// Renames every variable of `terms` apart using fresh identifiers from `source`.
pub fn rename_apart(terms: &[Term], source: &mut VarSource) -> Vec<Term> {
    let mut map = HashMap::new();
    terms.iter().map(|t| t.rename_with(&mut map, source)).collect()
}

/// A flat token of a term in prefix order, with variables numbered by first occurrence.
/// Two terms are variants exactly when their token sequences are equal.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Token {
    Functor(Sym, u32),
    Atom(Sym),
    Int(i64),
    Var(u32),
}

/// Appends the canonical tokens of `t` to `out`, numbering variables through `numbering`.
pub fn push_tokens(t: &Term, numbering: &mut Vec<VarId>, out: &mut Vec<Token>) {
    match t {
        Term::Var(v) => {
            let idx = match numbering.iter().position(|w| w == v) {
                Some(i) => i,
                None => {
                    numbering.push(*v);
                    numbering.len() - 1
                }
            };
            out.push(Token::Var(idx as u32));
        }
        Term::Atom(s) => out.push(Token::Atom(*s)),
        Term::Int(i) => out.push(Token::Int(*i)),
        Term::Compound(c) => {
            out.push(Token::Functor(c.functor, c.args.len() as u32));
            for a in c.args.iter() {
                push_tokens(a, numbering, out);
            }
        }
    }
}

/// Canonical token sequence of a whole term.
pub fn variant_key(t: &Term) -> Vec<Token> {
    let mut out = Vec::new();
    push_tokens(t, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(args: Vec<Term>) -> Term {
        Term::compound("f", args)
    }

    #[test]
    fn interning_is_stable() {
        assert_eq!(Sym::intern(","), Sym::COMMA);
        assert_eq!(Sym::intern("<-"), Sym::IMPLIED_BY);
        assert_eq!(Sym::intern("fail"), Sym::FAIL);
        assert_eq!(Sym::intern("zebra"), Sym::intern("zebra"));
        assert_eq!(Sym::intern("zebra").as_str(), "zebra");
    }

    #[test]
    fn unify_binds_and_applies() {
        let x = Term::var(0);
        let y = Term::var(1);
        let s = unify(&f(vec![x.clone(), Term::atom("b")]), &f(vec![Term::atom("a"), y.clone()]), &Substitution::new())
            .unwrap();
        assert_eq!(s.apply(&x), Term::atom("a"));
        assert_eq!(s.apply(&y), Term::atom("b"));
    }

    #[test]
    fn occurs_check_rejects_cycles() {
        let x = Term::var(0);
        assert!(unify(&x, &f(vec![x.clone()]), &Substitution::new()).is_none());
    }

    #[test]
    fn failed_unification_leaves_substitution_untouched() {
        let mut s = Substitution::new();
        let t1 = f(vec![Term::var(0), Term::atom("a")]);
        let t2 = f(vec![Term::atom("b"), Term::atom("c")]);
        assert!(!s.unify_in(&t1, &t2));
        assert!(s.is_empty());
    }

    #[test]
    fn variant_requires_bijection() {
        let a = f(vec![Term::var(0), Term::var(0)]);
        let b = f(vec![Term::var(5), Term::var(6)]);
        assert!(!is_variant(&a, &b));
        assert!(!is_variant(&b, &a));
        assert!(is_variant(&a, &f(vec![Term::var(9), Term::var(9)])));
    }

    #[test]
    fn subsumption_is_one_sided() {
        let general = f(vec![Term::var(0), Term::var(1)]);
        let specific = f(vec![Term::atom("a"), Term::var(7)]);
        assert!(subsumes(&general, &specific).is_some());
        assert!(subsumes(&specific, &general).is_none());
        let rep = f(vec![Term::var(0), Term::var(0)]);
        assert!(subsumes(&rep, &f(vec![Term::atom("a"), Term::atom("b")])).is_none());
        assert!(subsumes(&rep, &f(vec![Term::atom("a"), Term::atom("a")])).is_some());
    }

    #[test]
    fn variant_keys_number_by_first_occurrence() {
        let a = f(vec![Term::var(3), Term::var(1), Term::var(3)]);
        let b = f(vec![Term::var(8), Term::var(2), Term::var(8)]);
        assert_eq!(variant_key(&a), variant_key(&b));
    }
}
