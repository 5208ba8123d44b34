use crate::program::TermPrinter;
use crate::table::EntryId;
use crate::term::{PredKey, Substitution, Sym, Term, VarId};

/// Position on the DFS stack that a cut truncates to, valid only within one DFS run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Barrier {
    pub epoch: u64,
    pub height: usize,
}

#[derive(Clone, Debug)]
pub(crate) enum Goal {
    Call(Term),
    Cut(Barrier),
    /// The commit point of an if-then-else.
    IteCut(Barrier),
}

impl Goal {
    pub fn apply(&self, s: &Substitution) -> Goal {
        match self {
            Goal::Call(t) => Goal::Call(s.apply(t)),
            other => other.clone(),
        }
    }

    pub fn as_term(&self) -> Term {
        match self {
            Goal::Call(t) => t.clone(),
            Goal::Cut(_) | Goal::IteCut(_) => Term::Atom(Sym::CUT),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Head {
    /// The top-level query; the term collects the query variables.
    Query(Term),
    /// A producer for a table entry; the term is the answer being built.
    Answer { entry: EntryId, term: Term },
}

/// How a machine came to exist; used for traces.
#[derive(Clone, Debug)]
pub(crate) enum Origin {
    Query,
    Clause { parent: Option<u32>, pred: PredKey, index: usize, fact: Option<Term> },
    Answer { parent: Option<u32>, entry: EntryId, ordinal: usize, answer: Term },
}

#[derive(Clone, Debug)]
pub(crate) struct Machine {
    pub head: Head,
    /// Remaining goals, next goal last.
    pub goals: Vec<Goal>,
    /// Trace line, assigned when the machine first runs.
    pub line: Option<u32>,
    pub origin: Origin,
}

impl Machine {
    pub fn next_goal(&self) -> Option<&Goal> {
        self.goals.last()
    }

    pub fn apply(&self, s: &Substitution) -> Machine {
        Machine {
            head: match &self.head {
                Head::Query(t) => Head::Query(s.apply(t)),
                Head::Answer { entry, term } => Head::Answer { entry: *entry, term: s.apply(term) },
            },
            goals: self.goals.iter().map(|g| g.apply(s)).collect(),
            line: self.line,
            origin: self.origin.clone(),
        }
    }

    pub fn goal_terms(&self) -> Vec<Term> {
        self.goals.iter().rev().map(Goal::as_term).collect()
    }

    pub fn head_term(&self) -> Option<&Term> {
        match &self.head {
            Head::Query(_) => None,
            Head::Answer { term, .. } => Some(term),
        }
    }

    /// `H<-B1,...,Bn`, with an empty head for the query; `call` is prepended to the goals.
    pub fn display(&self, names: &dyn Fn(VarId) -> Option<String>, call: Option<&Term>) -> String {
        let p = TermPrinter::new(names);
        let mut out = self.head_term().map(|h| p.print_at(h, 1199)).unwrap_or_default();
        out.push_str("<-");
        let mut goals: Vec<String> = call.iter().map(|c| p.print_at(c, 999)).collect();
        goals.extend(self.goals.iter().rev().map(|g| p.print_at(&g.as_term(), 999)));
        out.push_str(&goals.join(","));
        out
    }
}
