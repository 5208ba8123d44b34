//! The two conditions under which fully abstracted subsumptive evaluation of
//! one predicate computes the whole least model: every predicate is reachable
//! from it, and every rule body has an instance true in the least model.

use std::collections::{BTreeSet, HashMap};

use super::{evaluate, satisfiable, RuleSet, Strategy, DEFAULT_ITERATION_CAP};
use crate::error::Result;
use crate::program::{print_term, Program};
use crate::term::{PredKey, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theorem1Report {
    pub reachable_ok: bool,
    pub bodies_ok: bool,
    /// The first unreachable predicate or unsatisfiable rule, when a check fails.
    pub witness: Option<String>,
}

impl Theorem1Report {
    pub fn holds(&self) -> bool {
        self.reachable_ok && self.bodies_ok
    }
}

pub fn check_theorem1_conditions(program: &Program, query_pred: PredKey) -> Result<Theorem1Report> {
    let rules = RuleSet::from_program(program)?;
    let model = evaluate(&rules, Strategy::SemiNaive, DEFAULT_ITERATION_CAP)?;

    let mut preds: BTreeSet<PredKey> = BTreeSet::new();
    let mut calls: HashMap<PredKey, Vec<PredKey>> = HashMap::new();
    let key = |t: &Term| t.pred_key().expect("rule atoms are callable");
    for f in &rules.facts {
        preds.insert(key(f));
    }
    for r in &rules.rules {
        preds.insert(key(&r.head));
        for g in &r.body {
            preds.insert(key(g));
            calls.entry(key(&r.head)).or_default().push(key(g));
        }
    }

    let mut reached = BTreeSet::from([query_pred]);
    let mut stack = vec![query_pred];
    while let Some(p) = stack.pop() {
        for &q in calls.get(&p).into_iter().flatten() {
            if reached.insert(q) {
                stack.push(q);
            }
        }
    }
    let unreachable = preds.iter().find(|p| !reached.contains(p));
    let unsatisfiable = rules.rules.iter().find(|r| !satisfiable(&model, &r.body));

    let witness = match (unreachable, unsatisfiable) {
        (Some(p), _) => Some(format!("{p} is not reachable from {query_pred}")),
        (None, Some(r)) => {
            let body = r.body.iter().map(print_term).collect::<Vec<_>>().join(",");
            Some(format!("no instance of the body of {} :- {body} is true", print_term(&r.head)))
        }
        (None, None) => None,
    };
    Ok(Theorem1Report { reachable_ok: unreachable.is_none(), bodies_ok: unsatisfiable.is_none(), witness })
}
