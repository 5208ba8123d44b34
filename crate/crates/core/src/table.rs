//! Answer tables: entries, answer sets, suspensions and pending-answer cursors.
//!
//! The store is generic over the continuation type so that the scheduler owns
//! the representation of suspended computations.

use std::collections::HashMap;

use crate::index::Permutation;
use crate::term::{push_tokens, subsumes, variant_key, PredKey, Substitution, Term, Token, VarId};
use crate::trie::Trie;

pub type EntryId = usize;

/// Variables inside stored answers are renamed into this range so that they can
/// never clash with variables of a consumer.
const ANSWER_VAR_BASE: u64 = 1 << 62;

/// Above this many unseen answers, pending-answer scans use a trie prefix lookup.
const INDEXED_SCAN_THRESHOLD: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    Variant,
    Subsumptive,
}

#[derive(Debug, Clone)]
pub struct Suspension<K> {
    /// The call as the consumer made it (before abstraction).
    pub consumer: Term,
    pub continuation: K,
    /// Ordinal of the next answer this consumer has not yet seen.
    pub cursor: usize,
    /// Global registration number.
    pub seq: u64,
    /// Held back until the evaluation quiesces (top-level query consumers in batch mode).
    pub deferred: bool,
}

#[derive(Debug, Clone)]
pub struct TableEntry<K> {
    pub id: EntryId,
    pub goal: Term,
    pub pred: PredKey,
    pub policy: Policy,
    answers: Vec<Term>,
    /// Identity-order trie; also the index for the identity permutation.
    dedup: Trie,
    perms: Vec<Permutation>,
    /// One trie per permutation; `None` where the permutation is the identity.
    tries: Vec<Option<Trie>>,
    pub suspensions: Vec<Suspension<K>>,
}

impl<K> TableEntry<K> {
    pub fn answers(&self) -> &[Term] {
        &self.answers
    }

    pub fn permutations(&self) -> &[Permutation] {
        &self.perms
    }

    /// Any non-deferred suspension has unseen answers.
    pub fn has_pending(&self) -> bool {
        let n = self.answers.len();
        self.suspensions.iter().any(|s| !s.deferred && s.cursor < n)
    }
}

/// Tokens of `args` taken in `order` (1-based positions), with canonical variable numbering.
fn arg_tokens(args: &[Term], order: Option<&Permutation>) -> Vec<Token> {
    let mut out = Vec::new();
    let mut numbering = Vec::new();
    match order {
        Some(p) => p.0.iter().for_each(|i| push_tokens(&args[i - 1], &mut numbering, &mut out)),
        None => args.iter().for_each(|a| push_tokens(a, &mut numbering, &mut out)),
    }
    out
}

fn standardize(answer: &Term) -> Term {
    if answer.is_ground() {
        return answer.clone();
    }
    let mut s = Substitution::new();
    for (i, v) in answer.vars().into_iter().enumerate() {
        s.bind(v, Term::Var(VarId(ANSWER_VAR_BASE + i as u64)));
    }
    s.apply(answer)
}

#[derive(Debug, Clone)]
pub struct TableStore<K> {
    entries: Vec<TableEntry<K>>,
    variants: HashMap<Vec<Token>, EntryId>,
    by_pred: HashMap<PredKey, Vec<EntryId>>,
    next_seq: u64,
}

impl<K> Default for TableStore<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> TableStore<K> {
    pub fn new() -> Self {
        TableStore { entries: Vec::new(), variants: HashMap::new(), by_pred: HashMap::new(), next_seq: 0 }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TableEntry<K>] {
        &self.entries
    }

    pub fn entry(&self, id: EntryId) -> &TableEntry<K> {
        &self.entries[id]
    }

    pub fn entry_mut(&mut self, id: EntryId) -> &mut TableEntry<K> {
        &mut self.entries[id]
    }

    /// Existing entry answering `goal`: a variant under the variant policy, or the
    /// oldest subsuming entry under the subsumptive policy.
    pub fn lookup(&self, goal: &Term, policy: Policy) -> Option<EntryId> {
        match policy {
            Policy::Variant => self.variants.get(&variant_key(goal)).copied(),
            Policy::Subsumptive => {
                let pred = goal.pred_key()?;
                self.by_pred.get(&pred)?.iter().copied().find(|id| {
                    let e = &self.entries[*id];
                    e.policy == Policy::Subsumptive && subsumes(&e.goal, goal).is_some()
                })
            }
        }
    }

    /// Finds the entry for `goal` or creates one; the flag tells whether it is new.
    /// `perms` lists the argument orders the new entry should index answers by.
    pub fn lookup_or_insert(&mut self, goal: &Term, policy: Policy, perms: &[Permutation]) -> (EntryId, bool) {
        if let Some(id) = self.lookup(goal, policy) {
            return (id, false);
        }
        let id = self.entries.len();
        let pred = goal.pred_key().expect("tabled goals are callable");
        let tries = perms.iter().map(|p| if p.is_identity() { None } else { Some(Trie::new()) }).collect();
        self.entries.push(TableEntry {
            id,
            goal: goal.clone(),
            pred,
            policy,
            answers: Vec::new(),
            dedup: Trie::new(),
            perms: perms.to_vec(),
            tries,
            suspensions: Vec::new(),
        });
        if policy == Policy::Variant {
            self.variants.insert(variant_key(goal), id);
        }
        self.by_pred.entry(pred).or_default().push(id);
        (id, true)
    }

    /// Adds `answer` unless a variant is already present; returns the new ordinal.
    pub fn insert_answer(&mut self, id: EntryId, answer: &Term) -> Option<usize> {
        let e = &mut self.entries[id];
        let answer = standardize(answer);
        let ordinal = e.answers.len();
        e.dedup.insert(&arg_tokens(answer.args(), None), ordinal).ok()?;
        for (perm, trie) in e.perms.iter().zip(e.tries.iter_mut()) {
            if let Some(trie) = trie {
                let _ = trie.insert(&arg_tokens(answer.args(), Some(perm)), ordinal);
            }
        }
        e.answers.push(answer);
        Some(ordinal)
    }

    /// Attaches a consumer to an entry with its cursor at the first answer.
    pub fn register_suspension(&mut self, id: EntryId, consumer: Term, continuation: K, deferred: bool) -> usize {
        let seq = self.next_seq;
        self.next_seq += 1;
        let e = &mut self.entries[id];
        e.suspensions.push(Suspension { consumer, continuation, cursor: 0, seq, deferred });
        e.suspensions.len() - 1
    }

    /// Ordinals of the answers past the suspension's cursor that unify with its
    /// consumer, in insertion order. The cursor moves past every answer examined.
    pub fn pending_answers(&mut self, id: EntryId, susp: usize) -> Vec<usize> {
        let upto = self.entries[id].answers.len();
        self.pending_answers_upto(id, susp, upto)
    }

    /// As [`Self::pending_answers`], but looks no further than ordinal `upto`.
    pub fn pending_answers_upto(&mut self, id: EntryId, susp: usize, upto: usize) -> Vec<usize> {
        let e = &self.entries[id];
        let s = &e.suspensions[susp];
        let from = s.cursor;
        if from >= upto {
            return Vec::new();
        }
        let candidates: Vec<usize> = match self.index_candidates(id, &s.consumer, from, upto) {
            Some(c) => c,
            None => (from..upto).collect(),
        };
        let out = candidates
            .into_iter()
            .filter(|o| Substitution::new().unify_in(&s.consumer, &e.answers[*o]))
            .collect();
        self.entries[id].suspensions[susp].cursor = upto;
        out
    }

    /// Candidate ordinals from a permutation trie whose leading arguments the consumer binds.
    fn index_candidates(&self, id: EntryId, consumer: &Term, from: usize, upto: usize) -> Option<Vec<usize>> {
        if upto - from <= INDEXED_SCAN_THRESHOLD {
            return None;
        }
        let e = &self.entries[id];
        let args = consumer.args();
        let (pi, prefix_len) = e
            .perms
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.0.iter().take_while(|pos| args[*pos - 1].is_ground()).count()))
            .max_by_key(|(i, n)| (*n, std::cmp::Reverse(*i)))?;
        if prefix_len == 0 {
            return None;
        }
        let prefix: Vec<Term> = e.perms[pi].0[..prefix_len].iter().map(|pos| args[pos - 1].clone()).collect();
        let hits = self.indexed_lookup(id, pi, &prefix);
        Some(hits.into_iter().filter(|o| *o >= from && *o < upto).collect())
    }

    /// Ordinals of answers whose arguments, taken in the order of permutation
    /// `perm`, begin with the ground terms `prefix`.
    pub fn indexed_lookup(&self, id: EntryId, perm: usize, prefix: &[Term]) -> Vec<usize> {
        let e = &self.entries[id];
        let mut tokens = Vec::new();
        let mut numbering = Vec::new();
        prefix.iter().for_each(|t| push_tokens(t, &mut numbering, &mut tokens));
        match &e.tries[perm] {
            Some(trie) => trie.with_prefix(&tokens),
            None => e.dedup.with_prefix(&tokens),
        }
    }

    /// Structured view of an entry for state dumps.
    pub fn dump_entry(&self, id: EntryId, goal: &dyn Fn(&Term) -> String, susp: &dyn Fn(&Suspension<K>) -> String) -> EntryDump {
        let e = &self.entries[id];
        EntryDump {
            goal: goal(&e.goal),
            answers: e.answers.iter().map(goal).collect(),
            suspensions: e.suspensions.iter().map(|s| (susp(s), s.cursor)).collect(),
        }
    }
}

/// Printable snapshot of one table entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryDump {
    pub goal: String,
    pub answers: Vec<String>,
    pub suspensions: Vec<(String, usize)>,
}

impl std::fmt::Display for EntryDump {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let susp: Vec<String> = self.suspensions.iter().map(|(s, c)| format!("{s}:{c}")).collect();
        write!(f, "{}:[{}],[{}]", self.goal, self.answers.join(","), susp.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: &str, b: &str) -> Term {
        Term::compound("p", vec![Term::atom(a), Term::atom(b)])
    }

    #[test]
    fn variant_and_subsumptive_lookup() {
        let mut store: TableStore<()> = TableStore::new();
        let open = Term::compound("p", vec![Term::var(0), Term::var(1)]);
        let (id, new) = store.lookup_or_insert(&open, Policy::Subsumptive, &[]);
        assert!(new);
        let bound = Term::compound("p", vec![Term::atom("a"), Term::var(5)]);
        assert_eq!(store.lookup_or_insert(&bound, Policy::Subsumptive, &[]), (id, false));
        let (vid, vnew) = store.lookup_or_insert(&bound, Policy::Variant, &[]);
        assert!(vnew && vid != id);
        let renamed = Term::compound("p", vec![Term::atom("a"), Term::var(9)]);
        assert_eq!(store.lookup(&renamed, Policy::Variant), Some(vid));
    }

    #[test]
    fn answers_are_deduplicated_in_order() {
        let mut store: TableStore<()> = TableStore::new();
        let (id, _) = store.lookup_or_insert(&Term::compound("p", vec![Term::var(0), Term::var(1)]), Policy::Variant, &[]);
        assert_eq!(store.insert_answer(id, &p("a", "b")), Some(0));
        assert_eq!(store.insert_answer(id, &p("a", "c")), Some(1));
        assert_eq!(store.insert_answer(id, &p("a", "b")), None);
        let with_var = Term::compound("p", vec![Term::atom("a"), Term::var(3)]);
        assert_eq!(store.insert_answer(id, &with_var), Some(2));
        assert_eq!(store.insert_answer(id, &Term::compound("p", vec![Term::atom("a"), Term::var(8)])), None);
        assert_eq!(store.entry(id).answers().len(), 3);
    }

    #[test]
    fn cursors_advance_past_non_unifying_answers() {
        let mut store: TableStore<&str> = TableStore::new();
        let (id, _) = store.lookup_or_insert(&Term::compound("p", vec![Term::var(0), Term::var(1)]), Policy::Subsumptive, &[]);
        let consumer = Term::compound("p", vec![Term::atom("b"), Term::var(7)]);
        let s = store.register_suspension(id, consumer, "k", false);
        store.insert_answer(id, &p("a", "b"));
        store.insert_answer(id, &p("b", "c"));
        assert_eq!(store.pending_answers(id, s), vec![1]);
        assert_eq!(store.entry(id).suspensions[s].cursor, 2);
        assert!(store.pending_answers(id, s).is_empty());
        store.insert_answer(id, &p("b", "d"));
        assert!(store.entry(id).has_pending());
        assert_eq!(store.pending_answers(id, s), vec![2]);
    }

    #[test]
    fn permutation_tries_answer_prefix_lookups() {
        let mut store: TableStore<()> = TableStore::new();
        let perms = [Permutation(vec![1, 2]), Permutation(vec![2, 1])];
        let (id, _) = store.lookup_or_insert(&Term::compound("p", vec![Term::var(0), Term::var(1)]), Policy::Subsumptive, &perms);
        for (a, b) in [("a", "x"), ("b", "y"), ("c", "x"), ("a", "y")] {
            store.insert_answer(id, &p(a, b));
        }
        assert_eq!(store.indexed_lookup(id, 0, &[Term::atom("a")]), vec![0, 3]);
        assert_eq!(store.indexed_lookup(id, 1, &[Term::atom("x")]), vec![0, 2]);
        assert_eq!(store.indexed_lookup(id, 1, &[Term::atom("y"), Term::atom("b")]), vec![1]);
    }
}
