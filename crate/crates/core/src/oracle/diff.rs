//! Differential check of engine answers and tables against the least model.

use std::collections::{BTreeSet, HashSet};

use super::{check_theorem1_conditions, least_model, query_answers, Theorem1Report};
use crate::engine::{Engine, EngineConfig};
use crate::error::Result;
use crate::program::{parse_query, Directive, IndexSpec, Item, Program};
use crate::term::{PredKey, Term};

/// Facts on one side only; both lists are in the order their side produced them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelDiff {
    pub missing: Vec<Term>,
    pub extra: Vec<Term>,
}

impl ModelDiff {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }

    /// The first differing fact, preferring one missing from the engine.
    pub fn witness(&self) -> Option<&Term> {
        self.missing.first().or(self.extra.first())
    }
}

#[derive(Clone, Debug)]
pub struct DiffReport {
    /// Distinct answer texts, sorted.
    pub engine: Vec<String>,
    pub oracle: Vec<String>,
    /// Condition check for the query's predicate; `None` for conjunctive queries.
    pub conditions: Option<Theorem1Report>,
    /// Union of the engine's tables under full abstraction against the least
    /// model; run only when the conditions hold.
    pub model: Option<ModelDiff>,
}

impl DiffReport {
    pub fn answers_agree(&self) -> bool {
        self.engine == self.oracle
    }

    pub fn agrees(&self) -> bool {
        self.answers_agree() && self.model.as_ref().map_or(true, ModelDiff::is_empty)
    }
}

/// The program with every predicate declared `table_index(P,[0])` in place of
/// its own tabling declaration.
pub fn fully_abstracted(program: &Program) -> Program {
    let mut preds: BTreeSet<PredKey> = BTreeSet::new();
    for c in program.clauses() {
        preds.insert(c.pred());
        preds.extend(c.body.iter().filter_map(Term::pred_key));
    }
    let mut out = Program::default();
    for pred in preds {
        out.push_directive(Directive::TableIndex { pred, specs: vec![IndexSpec::Unindexed] });
    }
    for item in &program.items {
        match item {
            Item::Directive(d) if d.tabled_pred().is_some() => {}
            Item::Directive(d) => out.push_directive(d.clone()),
            Item::Clause(c) => out.push_clause(c.clone()),
        }
    }
    out
}

pub fn diff_with_engine(program: &Program, query: &str) -> Result<DiffReport> {
    let q = parse_query(query)?;
    let model = least_model(program)?;

    let mut oracle: Vec<String> = query_answers(&model, &q).iter().map(|a| a.to_text()).collect();
    oracle.sort();
    let mut engine = Engine::new(program, EngineConfig::default())?;
    let mut answers: Vec<String> = engine.solve(&q)?.answers.iter().map(|a| a.to_text()).collect();
    // Untabled predicates may repeat answers; the comparison is on sets.
    answers.sort();
    answers.dedup();

    let pred = match q.goals.as_slice() {
        [g] => g.pred_key(),
        _ => None,
    };
    let conditions = pred.map(|p| check_theorem1_conditions(program, p)).transpose()?;
    let model_diff = match &conditions {
        Some(c) if c.holds() => {
            let mut abstracted = Engine::new(&fully_abstracted(program), EngineConfig::default())?;
            abstracted.solve(&q)?;
            let mut seen = HashSet::new();
            let tables: Vec<Term> = abstracted
                .table_contents()
                .into_iter()
                .flat_map(|(_, answers)| answers)
                .filter(|a| seen.insert(a.clone()))
                .collect();
            Some(ModelDiff {
                missing: model.facts().iter().filter(|f| !seen.contains(*f)).cloned().collect(),
                extra: tables.into_iter().filter(|t| !model.contains(t)).collect(),
            })
        }
        _ => None,
    };
    Ok(DiffReport { engine: answers, oracle, conditions, model: model_diff })
}
