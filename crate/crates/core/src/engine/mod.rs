//! The multiple-machine evaluator.
//!
//! A machine is a rule form `H <- B1,...,Bk`: an answer template and the goals
//! still to run. Non-tabled goals are resolved depth-first inside one machine.
//! A tabled goal suspends the machine on a table entry (creating the entry and
//! forking one producer per clause if it is new), and every new answer in the
//! entry forks a copy of each suspended machine it unifies with.
//!
//! Two deterministic schedules are provided. [`Schedule::Model`] orders work by
//! table level and reproduces the appendix-style machine trace; [`Schedule::Eager`]
//! runs a single depth-first search that consumes existing answers immediately
//! and completes suspended consumers in rounds, like a conventional tabling
//! engine.

mod data;
mod eager;
mod exec;
mod machine;
mod model;
pub mod trace;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::index::IndexPlan;
use crate::program::{parse_query, validate, Clause, Program, Query, Severity, Tabling, TermPrinter};
use crate::table::{EntryDump, TableStore};
use crate::term::{PredKey, Sym, Term, Token, VarId, VarSource};

use machine::{Head, Machine};
pub use trace::{tokenize_counts, Resolvent, StateDump, TraceEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Level-ordered phases; the appendix machine model.
    #[default]
    Model,
    /// Depth-first with immediate answer consumption and completion rounds.
    Eager,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TraceMode {
    #[default]
    Off,
    /// Resolution events, rendered as a numbered log.
    Log,
    /// Snapshots of the machine set and the table.
    Machines,
}

/// How often machine snapshots are taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Granularity {
    /// After each run of same-kind actions at the same table level.
    #[default]
    Phase,
    /// After every scheduler action.
    Step,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub schedule: Schedule,
    pub trace: TraceMode,
    pub granularity: Granularity,
    pub step_limit: u64,
    /// Deliver query answers as they are derived instead of at quiescence.
    pub stream: bool,
    /// Directory against which relative `data_records/3` file names resolve.
    pub data_root: PathBuf,
}

pub const DEFAULT_STEP_LIMIT: u64 = 100_000_000;

/// Environment variable naming the default data directory.
pub const DATA_DIR_ENV: &str = "TABLOG_DATA_DIR";

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            schedule: Schedule::Model,
            trace: TraceMode::Off,
            granularity: Granularity::Phase,
            step_limit: DEFAULT_STEP_LIMIT,
            stream: false,
            data_root: std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        }
    }
}

/// One answer to a query: the bindings of its named variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Answer {
    pub bindings: Vec<(String, Term)>,
}

impl Answer {
    /// `X = a, Y = f(b)`, or `true` for a query without named variables.
    pub fn to_text(&self) -> String {
        if self.bindings.is_empty() {
            return "true".into();
        }
        let p = TermPrinter::new(&|_| None);
        self.bindings.iter().map(|(n, t)| format!("{n} = {}", p.print_at(t, 699))).collect::<Vec<_>>().join(", ")
    }
}

#[derive(Clone, Debug, Default)]
pub struct Solution {
    pub answers: Vec<Answer>,
    /// Scheduler steps spent on this query.
    pub steps: u64,
}

// ---------------------------------------------------------------------------
// Loaded program

#[derive(Debug)]
pub(crate) enum BodyGoal {
    Call(Term),
    Cut,
    /// A control construct with a cut inside; the cut is bound to the clause at instantiation.
    NestedCut(Term),
}

#[derive(Debug)]
pub(crate) struct StoredClause {
    pub head: Term,
    pub body: Vec<BodyGoal>,
    pub nvars: u64,
    /// 1-based position among the predicate's clauses.
    pub index: usize,
    pub var_names: Vec<String>,
}

#[derive(Debug)]
pub(crate) enum Mode {
    Plain,
    Variant,
    Subsumptive,
    Indexed(IndexPlan),
}

#[derive(Debug)]
pub(crate) struct PredDef {
    pub mode: Mode,
    pub clauses: Vec<StoredClause>,
    all: Vec<u32>,
    by_first: HashMap<Token, Vec<u32>>,
    var_first: Vec<u32>,
}

fn first_key(t: &Term) -> Option<Token> {
    match t {
        Term::Var(_) => None,
        Term::Atom(s) => Some(Token::Atom(*s)),
        Term::Int(i) => Some(Token::Int(*i)),
        Term::Compound(c) => Some(Token::Functor(c.functor(), c.args().len() as u32)),
    }
}

fn has_nested_cut(t: &Term) -> bool {
    match t {
        Term::Atom(s) => *s == Sym::CUT,
        Term::Compound(c) => {
            [Sym::COMMA, Sym::SEMICOLON, Sym::IF_THEN].contains(&c.functor())
                && c.args().len() == 2
                && c.args().iter().any(has_nested_cut)
        }
        _ => false,
    }
}

impl PredDef {
    fn new(mode: Mode, source: &[&Clause]) -> PredDef {
        let clauses: Vec<StoredClause> = source
            .iter()
            .enumerate()
            .map(|(i, c)| StoredClause {
                head: c.head.clone(),
                body: c
                    .body
                    .iter()
                    .map(|g| match g {
                        Term::Atom(s) if *s == Sym::CUT => BodyGoal::Cut,
                        g if has_nested_cut(g) => BodyGoal::NestedCut(g.clone()),
                        g => BodyGoal::Call(g.clone()),
                    })
                    .collect(),
                nvars: c.var_count(),
                index: i + 1,
                var_names: c.var_names.clone(),
            })
            .collect();
        let mut var_first: Vec<u32> = Vec::new();
        let mut by_first: HashMap<Token, Vec<u32>> = HashMap::new();
        for (i, c) in clauses.iter().enumerate() {
            let i = i as u32;
            match c.head.args().first().and_then(first_key) {
                Some(k) => by_first.entry(k).or_insert_with(|| var_first.clone()).push(i),
                None => {
                    var_first.push(i);
                    by_first.values_mut().for_each(|list| list.push(i));
                }
            }
        }
        PredDef { mode, all: (0..clauses.len() as u32).collect(), by_first, var_first, clauses }
    }

    /// Clauses whose head might unify with `goal`, in source order.
    pub fn candidates(&self, goal: &Term) -> &[u32] {
        match goal.args().first().and_then(first_key) {
            None => &self.all,
            Some(k) => self.by_first.get(&k).unwrap_or(&self.var_first),
        }
    }

    pub fn is_tabled(&self) -> bool {
        !matches!(self.mode, Mode::Plain)
    }
}

#[derive(Debug, Default)]
pub(crate) struct Database {
    pub preds: HashMap<PredKey, PredDef>,
}

impl Database {
    fn load(program: &Program) -> Result<Database> {
        let errors: Vec<String> = validate(program)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.message)
            .collect();
        if !errors.is_empty() {
            return Err(Error::Invalid(errors.join("; ")));
        }
        let tabling = program.tabling();
        let mut preds = HashMap::new();
        let mut keys = program.predicates();
        keys.extend(tabling.keys().filter(|k| !keys.contains(k)).copied().collect::<Vec<_>>());
        for pred in keys {
            let mode = match tabling.get(&pred) {
                None => Mode::Plain,
                Some(Tabling::Variant) => Mode::Variant,
                Some(Tabling::Subsumptive) => Mode::Subsumptive,
                Some(Tabling::Indexed(specs)) => Mode::Indexed(IndexPlan::compile(pred, specs)?),
            };
            let clauses = program.clauses_of(pred);
            preds.insert(pred, PredDef::new(mode, &clauses));
        }
        Ok(Database { preds })
    }
}

// ---------------------------------------------------------------------------
// Engine

/// Scheduler label of an action, used to group actions into trace phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ActionKind {
    Run,
    NewCall,
    Call,
    Return,
    Wake,
}

pub struct Engine {
    pub(crate) db: Arc<Database>,
    pub(crate) store: TableStore<Machine>,
    pub(crate) vars: VarSource,
    pub(crate) config: EngineConfig,
    pub(crate) steps: u64,
    pub(crate) epoch: u64,
    pub(crate) next_line: u32,
    pub(crate) events: Vec<TraceEvent>,
    pub(crate) states: Vec<StateDump>,
    /// Display names of variables: the query's, and in log mode the clauses'.
    pub(crate) names: HashMap<VarId, String>,
    pub(crate) query_answers: Vec<Term>,
    pub(crate) file_opens: usize,
    pub(crate) model: model::ModelState,
    pub(crate) phase: Option<(ActionKind, Option<usize>)>,
}

impl Engine {
    pub fn new(program: &Program, config: EngineConfig) -> Result<Engine> {
        Ok(Engine {
            db: Arc::new(Database::load(program)?),
            store: TableStore::new(),
            vars: VarSource::new(),
            config,
            steps: 0,
            epoch: 0,
            next_line: 0,
            events: Vec::new(),
            states: Vec::new(),
            names: HashMap::new(),
            query_answers: Vec::new(),
            file_opens: 0,
            model: model::ModelState::default(),
            phase: None,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut EngineConfig {
        &mut self.config
    }

    /// Parses and solves a query such as `p(a,X)`.
    pub fn solve_text(&mut self, query: &str) -> Result<Solution> {
        let q = parse_query(query)?;
        self.solve(&q)
    }

    /// Runs `query` to quiescence. Tables persist across calls; after an error
    /// they are discarded, since incomplete tables would give wrong answers later.
    pub fn solve(&mut self, query: &Query) -> Result<Solution> {
        let result = self.solve_inner(query);
        if result.is_err() {
            self.store = TableStore::new();
            self.model = model::ModelState::default();
        }
        result
    }

    fn solve_inner(&mut self, query: &Query) -> Result<Solution> {
        self.events.clear();
        self.states.clear();
        self.query_answers.clear();
        self.names.clear();
        self.next_line = 0;
        self.phase = None;
        self.steps = 0;

        let base = self.vars.fresh_block(query.var_names.len() as u64);
        let mut named = Vec::new();
        for (i, name) in query.var_names.iter().enumerate() {
            let v = VarId(base + i as u64);
            if name != "_" {
                self.names.insert(v, name.clone());
                named.push((name.clone(), Term::Var(v)));
            }
        }
        let tuple = Term::app(Sym::QUERY, named.iter().map(|(_, t)| t.clone()).collect());
        let goals = query.goals.iter().rev().map(|g| machine::Goal::Call(g.offset_vars(base))).collect();
        let root = Machine { head: Head::Query(tuple), goals, line: None, origin: machine::Origin::Query };

        match self.config.schedule {
            Schedule::Model => self.run_model(root)?,
            Schedule::Eager => self.run_eager(root)?,
        }
        self.drop_query_suspensions();

        let answers = self
            .query_answers
            .iter()
            .map(|t| Answer { bindings: named.iter().map(|(n, _)| n.clone()).zip(t.args().iter().cloned()).collect() })
            .collect();
        Ok(Solution { answers, steps: self.steps })
    }

    fn drop_query_suspensions(&mut self) {
        for id in 0..self.store.len() {
            self.store.entry_mut(id).suspensions.retain(|s| !matches!(s.continuation.head, Head::Query(_)));
        }
    }

    pub fn trace_events(&self) -> &[TraceEvent] {
        &self.events
    }

    /// Machine snapshots of the last query (machine trace mode only).
    pub fn states(&self) -> &[StateDump] {
        &self.states
    }

    /// The last query's events as a numbered resolution log.
    pub fn render_log(&self) -> String {
        trace::render_log(&self.events, &|v| self.names.get(&v).cloned())
    }

    pub fn render_states(&self) -> String {
        trace::render_states(&self.states)
    }

    /// Number of data files opened by `data_records/3` since the engine was created.
    pub fn file_opens(&self) -> usize {
        self.file_opens
    }

    /// Every table entry in creation order.
    pub fn dump_tables(&self) -> Vec<EntryDump> {
        let names = |v: VarId| self.names.get(&v).cloned();
        let p = TermPrinter::new(&names);
        let goal = |t: &Term| p.print(t);
        let susp = |s: &crate::table::Suspension<Machine>| s.continuation.display(&names, Some(&s.consumer));
        (0..self.store.len()).map(|id| self.store.dump_entry(id, &goal, &susp)).collect()
    }

    /// Goal and answers of every table entry, in creation order.
    pub fn table_contents(&self) -> Vec<(Term, Vec<Term>)> {
        self.store.entries().iter().map(|e| (e.goal.clone(), e.answers().to_vec())).collect()
    }

    /// Drops all tables.
    pub fn reset_tables(&mut self) {
        self.store = TableStore::new();
    }
}
