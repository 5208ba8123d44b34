//! Depth-first execution inside machines: clause resolution, builtins, and the
//! table operations shared by both schedules.

use std::collections::HashMap;
use std::sync::Arc;

use super::data;
use super::machine::{Barrier, Goal, Head, Machine, Origin};
use super::trace::{Resolvent, TraceEvent};
use super::{Engine, Mode, Schedule, StoredClause, TraceMode};
use crate::error::{Error, Result};
use crate::program::{is_builtin, print_term};
use crate::table::{EntryId, Policy};
use crate::term::{Substitution, Sym, Term, VarId};

pub(crate) enum GoalKind {
    Builtin,
    Tabled,
    User,
}

fn cut_term(b: Barrier) -> Term {
    Term::compound("$cut", vec![Term::Int(b.epoch as i64), Term::Int(b.height as i64)])
}

/// Replaces cuts inside control constructs with cuts bound to `b`.
fn bind_cuts(t: &Term, b: Barrier) -> Term {
    match t {
        Term::Atom(s) if *s == Sym::CUT => cut_term(b),
        Term::Compound(c)
            if [Sym::COMMA, Sym::SEMICOLON, Sym::IF_THEN].contains(&c.functor()) && c.args().len() == 2 =>
        {
            Term::app(c.functor(), c.args().iter().map(|a| bind_cuts(a, b)).collect())
        }
        other => other.clone(),
    }
}

fn if_then(t: &Term) -> Option<(Term, Term)> {
    match t {
        Term::Compound(c) if c.functor() == Sym::IF_THEN && c.args().len() == 2 => {
            Some((c.args()[0].clone(), c.args()[1].clone()))
        }
        _ => None,
    }
}

impl Engine {
    pub(crate) fn tick(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > self.config.step_limit {
            return Err(Error::StepLimit(self.config.step_limit));
        }
        Ok(())
    }

    fn tracing(&self) -> bool {
        self.config.trace != TraceMode::Off
    }

    pub(crate) fn emit(&mut self, e: TraceEvent) {
        if self.tracing() {
            self.events.push(e);
        }
    }

    /// Assigns a trace line to a machine the first time it runs.
    pub(crate) fn start(&mut self, m: &mut Machine) {
        if m.line.is_some() {
            return;
        }
        self.next_line += 1;
        let line = self.next_line;
        m.line = Some(line);
        if !self.tracing() {
            return;
        }
        let (head, entry) = match &m.head {
            Head::Query(t) => (t.clone(), None),
            Head::Answer { entry, term } => (term.clone(), Some(*entry)),
        };
        let resolvent = Resolvent { head, entry, goals: m.goal_terms() };
        let event = match &m.origin {
            Origin::Query => TraceEvent::Query { line, goals: resolvent.goals, tuple: resolvent.head },
            Origin::Clause { parent, pred, index, fact } => TraceEvent::ForkClause {
                line,
                parent: *parent,
                pred: *pred,
                clause: *index,
                fact: fact.clone(),
                resolvent,
            },
            Origin::Answer { parent, entry, ordinal, answer } => TraceEvent::ForkAnswer {
                line,
                parent: *parent,
                entry: *entry,
                ordinal: *ordinal,
                answer: answer.clone(),
                resolvent,
            },
        };
        self.events.push(event);
    }

    pub(crate) fn classify_goal(&self, t: &Term) -> Result<GoalKind> {
        let key = match t {
            Term::Var(_) => return Err(Error::Instantiation("call/1".into())),
            Term::Int(i) => return Err(Error::Type(format!("callable expected, found {i}"))),
            _ => t.pred_key().expect("atoms and compounds have a predicate key"),
        };
        if is_builtin(key) || (key.name.as_str() == "$cut" && key.arity == 2) {
            return Ok(GoalKind::Builtin);
        }
        match self.db.preds.get(&key) {
            Some(def) if def.is_tabled() => Ok(GoalKind::Tabled),
            Some(_) => Ok(GoalKind::User),
            None => Err(Error::Existence(key.to_string())),
        }
    }

    /// Whether the machine's next goal is a call to a tabled predicate.
    pub(crate) fn next_is_tabled(&self, m: &Machine) -> Result<bool> {
        match m.next_goal() {
            Some(Goal::Call(t)) => Ok(matches!(self.classify_goal(t)?, GoalKind::Tabled)),
            _ => Ok(false),
        }
    }

    /// Runs machines depth-first until each one fails, suspends on a table, or returns.
    pub(crate) fn dfs(&mut self, roots: Vec<Machine>) -> Result<()> {
        self.epoch += 1;
        let epoch = self.epoch;
        let mut stack: Vec<Machine> = roots.into_iter().rev().collect();
        while let Some(mut m) = stack.pop() {
            self.start(&mut m);
            self.run_machine(m, &mut stack, epoch)?;
        }
        Ok(())
    }

    fn run_machine(&mut self, mut m: Machine, stack: &mut Vec<Machine>, epoch: u64) -> Result<()> {
        loop {
            self.tick()?;
            let goal = match m.goals.last() {
                None => return self.on_success(m),
                Some(g) => g.clone(),
            };
            match goal {
                Goal::Cut(b) | Goal::IteCut(b) => {
                    m.goals.pop();
                    if b.epoch == epoch {
                        stack.truncate(b.height);
                    }
                }
                Goal::Call(t) => match self.classify_goal(&t)? {
                    GoalKind::Tabled => return self.on_tabled(m, stack, epoch),
                    GoalKind::User => {
                        m.goals.pop();
                        return self.resolve(m, &t, stack, epoch);
                    }
                    GoalKind::Builtin => {
                        m.goals.pop();
                        match self.builtin(&t, m, stack, epoch)? {
                            Some(next) => m = next,
                            None => return Ok(()),
                        }
                    }
                },
            }
        }
    }

    fn on_success(&mut self, m: Machine) -> Result<()> {
        if let Head::Query(t) = &m.head {
            self.record_query_answer(t.clone());
            return Ok(());
        }
        match self.config.schedule {
            Schedule::Model => self.park(m),
            Schedule::Eager => {
                self.return_answer(m);
                Ok(())
            }
        }
    }

    fn on_tabled(&mut self, m: Machine, stack: &mut Vec<Machine>, epoch: u64) -> Result<()> {
        if m.goals.iter().any(|g| matches!(g, Goal::IteCut(b) if b.epoch == epoch)) {
            let goal = m.next_goal().map(|g| print_term(&g.as_term())).unwrap_or_default();
            return Err(Error::Invalid(format!("if-then-else condition calls tabled goal {goal}")));
        }
        match self.config.schedule {
            Schedule::Model => self.park(m),
            Schedule::Eager => self.eager_call(m, stack),
        }
    }

    pub(crate) fn record_query_answer(&mut self, t: Term) {
        self.emit(TraceEvent::QueryAnswer { answer: t.clone() });
        self.query_answers.push(t);
    }

    fn name_clause_vars(&mut self, c: &StoredClause, base: u64) {
        if self.config.trace != TraceMode::Log {
            return;
        }
        for (i, n) in c.var_names.iter().enumerate() {
            if n != "_" {
                self.names.insert(VarId(base + i as u64), n.clone());
            }
        }
    }

    /// Renames clause `c` apart and unifies its head with `goal`.
    fn rename_and_unify(&mut self, c: &StoredClause, goal: &Term) -> Option<(u64, Substitution)> {
        let base = self.vars.fresh_block(c.nvars);
        let head = c.head.offset_vars(base);
        let mut s = Substitution::new();
        if !s.unify_in(&head, goal) {
            return None;
        }
        self.name_clause_vars(c, base);
        Some((base, s))
    }

    fn body_goals(c: &StoredClause, base: u64, s: &Substitution, barrier: Barrier, out: &mut Vec<Goal>) {
        for b in c.body.iter().rev() {
            out.push(match b {
                super::BodyGoal::Call(t) => Goal::Call(s.apply(&t.offset_vars(base))),
                super::BodyGoal::Cut => Goal::Cut(barrier),
                super::BodyGoal::NestedCut(t) => Goal::Call(s.apply(&bind_cuts(&t.offset_vars(base), barrier))),
            });
        }
    }

    /// SLD step on a non-tabled goal: one child machine per matching clause.
    fn resolve(&mut self, m: Machine, goal: &Term, stack: &mut Vec<Machine>, epoch: u64) -> Result<()> {
        let db = Arc::clone(&self.db);
        let pred = goal.pred_key().expect("callable");
        let def = &db.preds[&pred];
        let barrier = Barrier { epoch, height: stack.len() };
        let mut children = Vec::new();
        for &ci in def.candidates(goal) {
            let c = &def.clauses[ci as usize];
            let Some((base, s)) = self.rename_and_unify(c, goal) else { continue };
            let mut child = m.apply(&s);
            Self::body_goals(c, base, &s, barrier, &mut child.goals);
            child.line = None;
            child.origin = Origin::Clause {
                parent: m.line,
                pred,
                index: c.index,
                fact: c.body.is_empty().then(|| s.apply(goal)),
            };
            children.push(child);
        }
        stack.extend(children.into_iter().rev());
        Ok(())
    }

    /// The table goal, policy and answer permutations for a call to a tabled predicate.
    fn with_table_target<R>(
        &mut self,
        goal: &Term,
        f: impl FnOnce(&mut Self, &Term, Policy, &[crate::index::Permutation]) -> R,
    ) -> Result<R> {
        let db = Arc::clone(&self.db);
        let pred = goal.pred_key().expect("callable");
        match &db.preds[&pred].mode {
            Mode::Variant => Ok(f(self, goal, Policy::Variant, &[])),
            Mode::Subsumptive => Ok(f(self, goal, Policy::Subsumptive, &[])),
            Mode::Indexed(plan) => match plan.abstract_call(goal, &mut self.vars) {
                Ok((abs, _, _)) => Ok(f(self, &abs, Policy::Subsumptive, plan.permutations())),
                Err(e) => {
                    self.emit(TraceEvent::IllegalMode { goal: print_term(goal) });
                    Err(e)
                }
            },
            Mode::Plain => unreachable!("only tabled goals have table targets"),
        }
    }

    /// The existing entry a tabled call would suspend on, if any.
    pub(crate) fn existing_target(&mut self, goal: &Term) -> Result<Option<EntryId>> {
        self.with_table_target(goal, |eng, tg, policy, _| eng.store.lookup(tg, policy))
    }

    /// Suspends `m` on the table for its next goal, creating the entry if needed.
    /// Returns the entry, whether it is new, and the suspension index.
    pub(crate) fn tabled_call(&mut self, m: Machine) -> Result<(EntryId, bool, usize)> {
        let Some(Goal::Call(goal)) = m.next_goal().cloned() else {
            unreachable!("tabled_call on a machine without a pending call")
        };
        let (id, new) = self.with_table_target(&goal, |eng, tg, policy, perms| eng.store.lookup_or_insert(tg, policy, perms))?;
        if new {
            let g = self.store.entry(id).goal.clone();
            self.emit(TraceEvent::NewTable { line: m.line, entry: id, goal: g, call: goal.clone() });
        }
        let mut cont = m;
        cont.goals.pop();
        let deferred = matches!(cont.head, Head::Query(_)) && !self.config.stream;
        let line = cont.line;
        let si = self.store.register_suspension(id, goal.clone(), cont, deferred);
        self.emit(TraceEvent::Suspend { line, entry: id, consumer: goal });
        Ok((id, new, si))
    }

    /// One producer machine per clause matching the entry's goal, in source order.
    pub(crate) fn producers(&mut self, id: EntryId, parent: Option<u32>) -> Vec<Machine> {
        let db = Arc::clone(&self.db);
        let goal = self.store.entry(id).goal.clone();
        let pred = self.store.entry(id).pred;
        let def = &db.preds[&pred];
        let no_cut = Barrier { epoch: 0, height: 0 };
        let mut out = Vec::new();
        for &ci in def.candidates(&goal) {
            let c = &def.clauses[ci as usize];
            let Some((base, s)) = self.rename_and_unify(c, &goal) else { continue };
            let answer = s.apply(&goal);
            let mut goals = Vec::with_capacity(c.body.len());
            Self::body_goals(c, base, &s, no_cut, &mut goals);
            out.push(Machine {
                head: Head::Answer { entry: id, term: answer.clone() },
                goals,
                line: None,
                origin: Origin::Clause { parent, pred, index: c.index, fact: c.body.is_empty().then_some(answer) },
            });
        }
        out
    }

    /// Adds a returning machine's answer to its entry; true if it was new.
    pub(crate) fn return_answer(&mut self, m: Machine) -> bool {
        let Head::Answer { entry, term } = m.head else {
            unreachable!("query machines do not return to tables")
        };
        match self.store.insert_answer(entry, &term) {
            Some(ordinal) => {
                let answer = self.store.entry(entry).answers()[ordinal].clone();
                self.emit(TraceEvent::NewAnswer { line: m.line, entry, ordinal, answer });
                true
            }
            None => {
                self.emit(TraceEvent::DuplicateAnswer { line: m.line, entry, answer: term });
                false
            }
        }
    }

    /// A copy of suspension `si`'s continuation, continued with answer `ordinal`.
    pub(crate) fn fork_answer(&mut self, id: EntryId, si: usize, ordinal: usize) -> Machine {
        let stored = &self.store.entry(id).answers()[ordinal];
        let answer = if stored.is_ground() {
            stored.clone()
        } else {
            stored.rename_with(&mut HashMap::new(), &mut self.vars)
        };
        let susp = &self.store.entry(id).suspensions[si];
        let mut s = Substitution::new();
        let ok = s.unify_in(&susp.consumer, &answer);
        debug_assert!(ok, "pending answers unify with their consumer");
        let mut m = susp.continuation.apply(&s);
        m.origin = Origin::Answer { parent: susp.continuation.line, entry: id, ordinal, answer };
        m.line = None;
        m
    }

    fn builtin(&mut self, goal: &Term, mut m: Machine, stack: &mut Vec<Machine>, epoch: u64) -> Result<Option<Machine>> {
        let key = goal.pred_key().expect("callable");
        let args = goal.args();
        let unify_continue = |m: Machine, a: &Term, b: &Term| {
            let mut s = Substitution::new();
            s.unify_in(a, b).then(|| m.apply(&s))
        };
        Ok(match (key.name.as_str(), key.arity) {
            ("true", 0) | ("!", 0) => Some(m),
            ("fail", 0) | ("false", 0) => None,
            ("$cut", 2) => {
                if let (Term::Int(e), Term::Int(h)) = (&args[0], &args[1]) {
                    if *e as u64 == epoch {
                        stack.truncate(*h as usize);
                    }
                }
                Some(m)
            }
            (",", 2) => {
                m.goals.push(Goal::Call(args[1].clone()));
                m.goals.push(Goal::Call(args[0].clone()));
                Some(m)
            }
            (";", 2) => {
                let barrier = Barrier { epoch, height: stack.len() };
                let mut alt = m.clone();
                alt.goals.push(Goal::Call(args[1].clone()));
                stack.push(alt);
                match if_then(&args[0]) {
                    Some((cond, then)) => {
                        m.goals.push(Goal::Call(then));
                        m.goals.push(Goal::IteCut(barrier));
                        m.goals.push(Goal::Call(cond));
                    }
                    None => m.goals.push(Goal::Call(args[0].clone())),
                }
                Some(m)
            }
            ("->", 2) => {
                let barrier = Barrier { epoch, height: stack.len() };
                m.goals.push(Goal::Call(args[1].clone()));
                m.goals.push(Goal::IteCut(barrier));
                m.goals.push(Goal::Call(args[0].clone()));
                Some(m)
            }
            ("=", 2) => unify_continue(m, &args[0], &args[1]),
            ("var", 1) => args[0].is_var().then_some(m),
            ("nonvar", 1) => (!args[0].is_var()).then_some(m),
            ("scan", 2) => {
                let text = match &args[0] {
                    Term::Var(_) => return Err(Error::Instantiation("scan/2".into())),
                    Term::Atom(s) => s.as_str(),
                    other => return Err(Error::Type(format!("scan/2 expects an atom, found {other}"))),
                };
                let words = Term::list(text.split_whitespace().map(Term::atom).collect());
                if self.tracing() {
                    self.emit(TraceEvent::Tokenize { text: text.to_string() });
                }
                unify_continue(m, &args[1], &words)
            }
            ("data_records", 3) => {
                let (path, records) = data::load_records(&self.config.data_root, &args[0], &args[1])?;
                self.file_opens += 1;
                self.emit(TraceEvent::FileOpen { path: path.display().to_string() });
                let mut forks = Vec::new();
                for (rec, nvars) in records {
                    let base = self.vars.fresh_block(nvars);
                    if let Some(child) = unify_continue(m.clone(), &args[2], &rec.offset_vars(base)) {
                        forks.push(child);
                    }
                }
                stack.extend(forks.into_iter().rev());
                None
            }
            ("table_error", 1) => return Err(Error::TableError(print_term(&args[0]))),
            _ => return Err(Error::Existence(format!("{key}"))),
        })
    }
}
