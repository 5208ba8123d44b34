//! The level-ordered schedule of the machine model.
//!
//! Machines whose next goal is not tabled, or whose tabled call would create a
//! new entry, wait in a top tier served first-in first-out. All other work is
//! keyed by the creation index ("level") of the table it touches: the highest
//! level goes first, and within a level answer returns precede calls, which
//! precede propagation of new answers to suspended consumers.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::machine::{Goal, Head, Machine};
use super::trace::StateDump;
use super::{ActionKind, Engine, Granularity, TraceMode};
use crate::error::Result;
use crate::program::TermPrinter;
use crate::table::EntryId;

const CALL: u8 = 1;
const RETURN: u8 = 2;

#[derive(Default)]
pub(crate) struct ModelState {
    top: VecDeque<Machine>,
    buckets: BTreeMap<(EntryId, u8), VecDeque<Machine>>,
    dirty: BTreeSet<EntryId>,
    /// Answers per entry already offered to every consumer that was not deferred.
    notified: HashMap<EntryId, usize>,
    /// Consumers registered or released since then that may have answers to take.
    fresh: HashMap<EntryId, Vec<usize>>,
}

enum Action {
    Run(Machine),
    NewCall(Machine),
    Call(EntryId, Machine),
    Return(EntryId, Machine),
    Wake(EntryId, Vec<usize>),
}

impl Action {
    fn kind(&self) -> ActionKind {
        match self {
            Action::Run(_) => ActionKind::Run,
            Action::NewCall(_) => ActionKind::NewCall,
            Action::Call(..) => ActionKind::Call,
            Action::Return(..) => ActionKind::Return,
            Action::Wake(..) => ActionKind::Wake,
        }
    }

    fn machine(&self) -> Option<&Machine> {
        match self {
            Action::Run(m) | Action::NewCall(m) | Action::Call(_, m) | Action::Return(_, m) => Some(m),
            Action::Wake(..) => None,
        }
    }

    fn level(&self) -> Option<EntryId> {
        match self {
            Action::Run(_) | Action::NewCall(_) => None,
            Action::Call(id, _) | Action::Return(id, _) | Action::Wake(id, _) => Some(*id),
        }
    }
}

impl Engine {
    pub(crate) fn run_model(&mut self, root: Machine) -> Result<()> {
        self.park(root)?;
        self.snapshot("initial".into(), None);
        let snapshots = self.config.trace == TraceMode::Machines;
        let mut phase_len = 0usize;
        loop {
            let action = match self.pick()? {
                Some(a) => a,
                None if self.release_deferred() => continue,
                None => break,
            };
            let kind = action.kind();
            if snapshots && self.config.granularity == Granularity::Phase {
                if let Some(cur) = self.phase {
                    if kind == ActionKind::NewCall || cur != (kind, action.level()) {
                        // The picked machine has left its queue but still belongs to this state.
                        self.snapshot(self.describe_phase(cur, phase_len), action.machine());
                        phase_len = 0;
                    }
                }
            }
            let label = self.perform(action)?;
            phase_len += 1;
            self.phase = Some(label);
            if snapshots && self.config.granularity == Granularity::Step {
                self.snapshot(self.describe_phase(label, 1), None);
            }
        }
        if snapshots && self.config.granularity == Granularity::Phase {
            if let Some(cur) = self.phase.take() {
                self.snapshot(self.describe_phase(cur, phase_len), None);
            }
        }
        Ok(())
    }

    /// Files a machine under the action it is waiting for.
    pub(crate) fn park(&mut self, m: Machine) -> Result<()> {
        if m.goals.is_empty() {
            match &m.head {
                Head::Query(t) => {
                    let t = t.clone();
                    self.record_query_answer(t);
                }
                Head::Answer { entry, .. } => {
                    self.model.buckets.entry((*entry, RETURN)).or_default().push_back(m);
                }
            }
            return Ok(());
        }
        if let Some(id) = self.call_target(&m)? {
            self.model.buckets.entry((id, CALL)).or_default().push_back(m);
        } else {
            self.model.top.push_back(m);
        }
        Ok(())
    }

    /// The existing entry the machine's next goal would suspend on.
    fn call_target(&mut self, m: &Machine) -> Result<Option<EntryId>> {
        if !self.next_is_tabled(m)? {
            return Ok(None);
        }
        let Some(Goal::Call(goal)) = m.next_goal().cloned() else { return Ok(None) };
        self.existing_target(&goal)
    }

    fn pick(&mut self) -> Result<Option<Action>> {
        while let Some(m) = self.model.top.pop_front() {
            if !self.next_is_tabled(&m)? {
                return Ok(Some(Action::Run(m)));
            }
            match self.call_target(&m)? {
                Some(id) => self.model.buckets.entry((id, CALL)).or_default().push_back(m),
                None => return Ok(Some(Action::NewCall(m))),
            }
        }
        loop {
            let bucket = self.model.buckets.keys().next_back().copied();
            let dirty = self.model.dirty.iter().next_back().copied();
            match (bucket, dirty) {
                (None, None) => return Ok(None),
                (Some((level, kind)), d) if d.map_or(true, |d| level >= d) => {
                    // Returns and calls at a level precede propagation at that level.
                    let queue = self.model.buckets.get_mut(&(level, kind)).expect("key just seen");
                    let m = queue.pop_front().expect("buckets are never left empty");
                    if queue.is_empty() {
                        self.model.buckets.remove(&(level, kind));
                    }
                    return Ok(Some(if kind == RETURN { Action::Return(level, m) } else { Action::Call(level, m) }));
                }
                (_, d) => {
                    let d = d.expect("guard covers buckets without dirty entries");
                    self.model.dirty.remove(&d);
                    let woken = self.take_woken(d);
                    if !woken.is_empty() {
                        return Ok(Some(Action::Wake(d, woken)));
                    }
                }
            }
        }
    }

    fn perform(&mut self, action: Action) -> Result<(ActionKind, Option<EntryId>)> {
        let kind = action.kind();
        match action {
            Action::Run(m) => {
                self.dfs(vec![m])?;
                Ok((kind, None))
            }
            Action::NewCall(m) | Action::Call(_, m) => {
                let mut m = m;
                self.start(&mut m);
                self.tick()?;
                let parent = m.line;
                let (id, new, si) = self.tabled_call(m)?;
                if new {
                    for p in self.producers(id, parent) {
                        self.park(p)?;
                    }
                }
                let e = self.store.entry(id);
                let s = &e.suspensions[si];
                if !s.deferred && s.cursor < e.answers().len() {
                    self.model.fresh.entry(id).or_default().push(si);
                    self.model.dirty.insert(id);
                }
                Ok((kind, Some(id)))
            }
            Action::Return(id, m) => {
                let mut m = m;
                self.start(&mut m);
                self.tick()?;
                if self.return_answer(m) {
                    self.model.dirty.insert(id);
                }
                Ok((kind, Some(id)))
            }
            Action::Wake(id, woken) => {
                self.tick()?;
                for si in woken {
                    for ordinal in self.store.pending_answers(id, si) {
                        self.tick()?;
                        let m = self.fork_answer(id, si, ordinal);
                        self.park(m)?;
                    }
                }
                Ok((kind, Some(id)))
            }
        }
    }

    /// Releases deferred consumers at quiescence; returns whether any has answers to take.
    pub(crate) fn release_deferred(&mut self) -> bool {
        let mut any = false;
        for id in 0..self.store.len() {
            let e = self.store.entry_mut(id);
            let n = e.answers().len();
            let mut pending = false;
            let mut released = Vec::new();
            for (si, s) in e.suspensions.iter_mut().enumerate().filter(|(_, s)| s.deferred) {
                s.deferred = false;
                if s.cursor < n {
                    released.push(si);
                    pending = true;
                }
            }
            if pending {
                self.model.fresh.entry(id).or_default().extend(released);
                self.model.dirty.insert(id);
                any = true;
            }
        }
        if !any {
            self.model.dirty.clear();
        }
        any
    }

    /// Consumers of `id` with answers to take, in registration order. Only new
    /// answers call for a pass over every consumer.
    fn take_woken(&mut self, id: EntryId) -> Vec<usize> {
        let e = self.store.entry(id);
        let n = e.answers().len();
        let notified = self.model.notified.entry(id).or_default();
        let mut candidates = self.model.fresh.remove(&id).unwrap_or_default();
        if *notified < n {
            *notified = n;
            candidates = (0..e.suspensions.len()).collect();
        } else {
            candidates.sort_unstable();
            candidates.dedup();
        }
        candidates.retain(|&si| {
            let s = &e.suspensions[si];
            !s.deferred && s.cursor < n
        });
        candidates
    }

    fn describe_phase(&self, (kind, level): (ActionKind, Option<EntryId>), n: usize) -> String {
        let goal = |id: EntryId| self.dump_goal(id);
        let steps = if n == 1 { "1 step".to_string() } else { format!("{n} steps") };
        match (kind, level) {
            (ActionKind::NewCall, Some(id)) => format!("new table entry {}", goal(id)),
            (ActionKind::Call, Some(id)) => format!("{steps} calling {} and suspending", goal(id)),
            (ActionKind::Return, Some(id)) => format!("{steps} returning answers to {}", goal(id)),
            (ActionKind::Wake, Some(id)) => format!("consumers of {} fork on new answers", goal(id)),
            _ => format!("{steps} running non-tabled goals"),
        }
    }

    fn dump_goal(&self, id: EntryId) -> String {
        let names = |v| self.names.get(&v).cloned();
        TermPrinter::new(&names).print(&self.store.entry(id).goal)
    }

    /// Records the machine set, in scheduling order, and the table. `next` is a
    /// machine already picked for the coming action; it is listed first.
    pub(crate) fn snapshot(&mut self, label: String, next: Option<&Machine>) {
        if self.config.trace != TraceMode::Machines {
            return;
        }
        let mut keyed: Vec<((u8, EntryId, u8), usize, Machine)> = Vec::new();
        let top: Vec<Machine> = self.model.top.iter().cloned().collect();
        for (i, m) in top.into_iter().enumerate() {
            let key = match self.call_target(&m) {
                Ok(Some(id)) => ((1, id, CALL), usize::MAX / 2 + i),
                _ => ((2, 0, 0), i),
            };
            keyed.push((key.0, key.1, m));
        }
        for (&(level, kind), q) in &self.model.buckets {
            keyed.extend(q.iter().enumerate().map(|(i, m)| ((1, level, kind), i, m.clone())));
        }
        keyed.sort_by_key(|(k, i, _)| (Reverse(*k), *i));
        let names = |v| self.names.get(&v).cloned();
        let machines = next.into_iter().chain(keyed.iter().map(|(_, _, m)| m)).map(|m| m.display(&names, None)).collect();
        let tables = self.dump_tables();
        self.states.push(StateDump { label, machines, tables });
    }
}
