//! The eager schedule: one depth-first search in which a call to an existing
//! table consumes the answers already there, followed by completion rounds.
//!
//! A round fixes the answer count of every entry, then visits suspended
//! consumers newest first; each consumer takes its unseen answers up to that
//! count and the resulting machines run depth-first before the next consumer.

use std::cmp::Reverse;

use super::machine::Machine;
use super::Engine;
use crate::error::Result;

impl Engine {
    pub(crate) fn run_eager(&mut self, root: Machine) -> Result<()> {
        self.dfs(vec![root])?;
        loop {
            if self.eager_round()? {
                continue;
            }
            if !self.release_deferred() {
                break;
            }
        }
        Ok(())
    }

    /// Called from the depth-first search when the next goal is tabled.
    pub(crate) fn eager_call(&mut self, m: Machine, stack: &mut Vec<Machine>) -> Result<()> {
        let parent = m.line;
        let (id, new, si) = self.tabled_call(m)?;
        if new {
            let producers = self.producers(id, parent);
            stack.extend(producers.into_iter().rev());
        } else if !self.store.entry(id).suspensions[si].deferred {
            let forks: Vec<Machine> =
                self.store.pending_answers(id, si).into_iter().map(|o| self.fork_answer(id, si, o)).collect();
            stack.extend(forks.into_iter().rev());
        }
        Ok(())
    }

    fn eager_round(&mut self) -> Result<bool> {
        let counts: Vec<usize> = self.store.entries().iter().map(|e| e.answers().len()).collect();
        let mut work: Vec<(u64, usize, usize)> = Vec::new();
        for e in self.store.entries() {
            for (si, s) in e.suspensions.iter().enumerate() {
                if !s.deferred && s.cursor < counts[e.id] {
                    work.push((s.seq, e.id, si));
                }
            }
        }
        if work.is_empty() {
            return Ok(false);
        }
        work.sort_by_key(|w| Reverse(w.0));
        for (_, id, si) in work {
            self.tick()?;
            let ordinals = self.store.pending_answers_upto(id, si, counts[id]);
            if ordinals.is_empty() {
                continue;
            }
            let forks = ordinals.into_iter().map(|o| self.fork_answer(id, si, o)).collect();
            self.dfs(forks)?;
        }
        Ok(true)
    }
}
