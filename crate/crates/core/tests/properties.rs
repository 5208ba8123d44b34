//! Property tests of the core data structures against brute-force oracles.

use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;

use tablog_core::engine::{Engine, EngineConfig};
use tablog_core::index::{permutation_cover, Permutation};
use tablog_core::oracle::random::{random_program, GenConfig};
use tablog_core::oracle::{diff_with_engine, least_model_with, Strategy as Eval, DEFAULT_ITERATION_CAP};
use tablog_core::program::{parse_terms, print_term, IndexSpec};
use tablog_core::table::{Policy, TableStore};
use tablog_core::term::{is_variant, subsumes, unify, Substitution, Term};

fn small_term(depth: u32, vars: u64) -> BoxedStrategy<Term> {
    let leaf = prop_oneof![
        (0..vars).prop_map(Term::var),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Term::atom),
    ];
    leaf.prop_recursive(depth, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::compound("f", vec![t])),
            (inner.clone(), inner).prop_map(|(x, y)| Term::compound("g", vec![x, y])),
        ]
    })
    .boxed()
}

/// Ground terms of depth at most one over the same signature.
fn ground_values() -> Vec<Term> {
    let consts: Vec<Term> = ["a", "b", "c"].iter().map(|c| Term::atom(c)).collect();
    let mut out = consts.clone();
    for x in &consts {
        out.push(Term::compound("f", vec![x.clone()]));
        for y in &consts {
            out.push(Term::compound("g", vec![x.clone(), y.clone()]));
        }
    }
    out
}

fn ground_with(t: &Term, values: &[Term]) -> Term {
    let mut s = Substitution::new();
    for (i, v) in t.vars().into_iter().enumerate() {
        s.bind(v, values[i].clone());
    }
    s.apply(t)
}

/// Every assignment of `values` to the variables of `terms` (at most two variables).
fn assignments(nvars: usize, values: &[Term]) -> Vec<Vec<Term>> {
    let mut out = vec![Vec::new()];
    for _ in 0..nvars {
        out = out.into_iter().flat_map(|a| values.iter().map(move |v| [a.clone(), vec![v.clone()]].concat())).collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// A unifier exists over a small ground domain only if `unify` succeeds, and
    /// every such ground unifier is an instance of the computed one.
    #[test]
    fn unify_agrees_with_ground_search(a in small_term(2, 2), b in small_term(2, 2)) {
        let pair = Term::compound("pair", vec![a.clone(), b.clone()]);
        let values = ground_values();
        let mgu = unify(&a, &b, &Substitution::new());
        if let Some(s) = &mgu {
            prop_assert_eq!(s.apply(&a), s.apply(&b));
        }
        let vars = pair.vars();
        for vals in assignments(vars.len(), &values) {
            let mut g = Substitution::new();
            for (v, t) in vars.iter().zip(&vals) {
                g.bind(*v, t.clone());
            }
            if g.apply(&a) == g.apply(&b) {
                let s = mgu.as_ref().expect("a ground unifier exists");
                let general = s.apply(&pair);
                prop_assert!(subsumes(&general, &g.apply(&pair)).is_some());
            }
        }
    }

    #[test]
    fn instances_are_subsumed(t in small_term(3, 3), pick in prop::collection::vec(0usize..12, 3)) {
        let values = ground_values();
        let chosen: Vec<Term> = pick.iter().map(|i| values[*i].clone()).collect();
        let instance = ground_with(&t, &chosen);
        let theta = subsumes(&t, &instance).expect("instance is subsumed");
        prop_assert_eq!(theta.apply(&t), instance.clone());
        if instance != t {
            prop_assert!(subsumes(&instance, &t).is_none() || is_variant(&instance, &t));
        }
    }

    #[test]
    fn variants_are_renamings(t in small_term(3, 3), shift in 10u64..1000) {
        let renamed = t.offset_vars(shift);
        prop_assert!(is_variant(&t, &renamed));
        prop_assert_eq!(is_variant(&t, &renamed), subsumes(&t, &renamed).is_some() && subsumes(&renamed, &t).is_some());
    }

    #[test]
    fn print_then_parse_is_a_variant(t in printable_term()) {
        let text = format!("{}.", print_term(&t));
        let parsed = parse_terms(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(parsed.len(), 1);
        prop_assert!(is_variant(&parsed[0].0, &t), "{} read back as {}: {} vs {}", text, print_term(&parsed[0].0), shape(&t), shape(&parsed[0].0));
    }

    #[test]
    fn naive_and_seminaive_agree(seed in any::<u64>()) {
        let g = random_program(seed, &GenConfig::default());
        let naive = least_model_with(&g.program, Eval::Naive, DEFAULT_ITERATION_CAP).unwrap();
        let semi = least_model_with(&g.program, Eval::SemiNaive, DEFAULT_ITERATION_CAP).unwrap();
        let a: HashSet<_> = naive.facts().iter().map(|f| (print_term(f), naive.tag(f))).collect();
        let b: HashSet<_> = semi.facts().iter().map(|f| (print_term(f), semi.tag(f))).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cover_is_minimal(sets in prop::collection::vec(prop::collection::btree_set(1usize..=4, 1..=4), 1..=5), zero in any::<bool>()) {
        let mut specs: Vec<IndexSpec> = sets.iter().map(|s| IndexSpec::Positions(s.iter().copied().collect())).collect();
        if zero {
            specs.push(IndexSpec::Unindexed);
        }
        let cover = permutation_cover(&specs, 4);
        for (spec, assigned) in specs.iter().zip(&cover.assignment) {
            match (spec, assigned) {
                (IndexSpec::Positions(ps), Some(i)) => {
                    let perm: &Permutation = &cover.permutations[*i];
                    let prefix: BTreeSet<usize> = perm.0[..ps.len()].iter().copied().collect();
                    prop_assert_eq!(prefix, ps.iter().copied().collect::<BTreeSet<_>>());
                }
                (IndexSpec::Unindexed, None) => {}
                other => prop_assert!(false, "bad assignment {:?}", other),
            }
        }
        for p in &cover.permutations {
            let mut sorted = p.0.clone();
            sorted.sort();
            prop_assert_eq!(sorted, vec![1, 2, 3, 4]);
        }
        let distinct: Vec<BTreeSet<usize>> = sets.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        prop_assert_eq!(cover.permutations.len(), min_chain_cover(&distinct));
    }
}

/// Fewest chains (under inclusion) that partition `sets`, by exhaustive search.
fn min_chain_cover(sets: &[BTreeSet<usize>]) -> usize {
    let comparable = |a: &BTreeSet<usize>, b: &BTreeSet<usize>| a.is_subset(b) || b.is_subset(a);
    for k in 1..=sets.len() {
        let mut labels = vec![0usize; sets.len()];
        loop {
            let ok = (0..sets.len()).all(|i| (0..i).all(|j| labels[i] != labels[j] || comparable(&sets[i], &sets[j])));
            if ok {
                return k;
            }
            let mut i = 0;
            while i < labels.len() && labels[i] == k - 1 {
                labels[i] = 0;
                i += 1;
            }
            if i == labels.len() {
                break;
            }
            labels[i] += 1;
        }
    }
    sets.len()
}

fn shape(t: &Term) -> String {
    match t {
        Term::Compound(c) => {
            format!("{}/{}({})", c.functor().as_str(), c.args().len(), c.args().iter().map(shape).collect::<Vec<_>>().join(","))
        }
        Term::Atom(a) => format!("atom:{}", a.as_str()),
        other => format!("{other:?}"),
    }
}

fn printable_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0u64..3).prop_map(Term::var),
        prop::sample::select(vec!["a", "[]", "hello world", "Upper", "it's", "+", "-", "f"]).prop_map(Term::atom),
        (-50i64..50).prop_map(Term::Int),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["f", "g", "+", "-", "=", ",", "*", "-", "<-"]), inner.clone(), inner.clone())
                .prop_map(|(f, x, y)| Term::compound(f, vec![x, y])),
            (prop::sample::select(vec!["f", "-", "\\+"]), inner.clone()).prop_map(|(f, x)| Term::compound(f, vec![x])),
            prop::collection::vec(inner, 0..3).prop_map(Term::list),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Prefix lookups through a permutation trie return exactly the answers a
    /// linear scan finds, in insertion order.
    #[test]
    fn trie_lookup_matches_scan(
        rows in prop::collection::vec((0u8..20, 0u8..20, 0u8..5), 1..10_000),
        probe in (0u8..20, 0u8..20),
        perm_index in 0usize..2,
    ) {
        let perms = vec![Permutation(vec![1, 2, 3]), Permutation(vec![2, 3, 1])];
        let mut store: TableStore<()> = TableStore::new();
        let goal = Term::compound("t", vec![Term::var(0), Term::var(1), Term::var(2)]);
        let (id, _) = store.lookup_or_insert(&goal, Policy::Subsumptive, &perms);
        let c = |n: u8| Term::atom(&format!("c{n}"));
        for (x, y, z) in &rows {
            store.insert_answer(id, &Term::compound("t", vec![c(*x), c(*y), c(*z)]));
        }
        let answers = store.entry(id).answers().to_vec();
        for len in 1..=2 {
            let prefix: Vec<Term> = [c(probe.0), c(probe.1)][..len].to_vec();
            let positions = &perms[perm_index].0;
            let expected: Vec<usize> = (0..answers.len())
                .filter(|o| positions.iter().zip(&prefix).all(|(p, t)| answers[*o].args()[p - 1] == *t))
                .collect();
            prop_assert_eq!(store.indexed_lookup(id, perm_index, &prefix), expected);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Engine answers equal least-model answers on larger random programs.
    #[test]
    fn engine_matches_oracle_on_large_programs(seed in any::<u64>()) {
        let config = GenConfig { max_preds: 12, max_rules: 100, max_consts: 30, ..GenConfig::default() };
        let g = random_program(seed, &config);
        for q in &g.queries {
            let d = diff_with_engine(&g.program, q).unwrap();
            prop_assert!(d.agrees(), "{}\n{}: engine {:?}, oracle {:?}", g.source, q, d.engine, d.oracle);
        }
        // The engine also runs the program untouched by the diff's abstraction.
        Engine::new(&g.program, EngineConfig::default()).unwrap();
    }
}
