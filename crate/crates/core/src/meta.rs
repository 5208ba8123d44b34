//! Propositional Horn programs run through tabled meta-interpreters.
//!
//! A propositional clause `h :- b1,...,bn` is stored as the fact `h <- b1,...,bn`
//! (facts as `h <- true`). Under a fully abstracted subsumptive table on the
//! interpreter's atom predicate, evaluation is bottom-up unit resolution; the
//! derived clauses it goes through can be read off the engine's trace.

use std::fmt::Write as _;

use crate::engine::TraceEvent;
use crate::program::print_term;
use crate::term::{PredKey, Term};

/// Unit-resolution interpreter: each answer to `interpAtom/1` is a proved
/// proposition, and `interp(Body,H)` works through the body of a clause for `H`.
pub const UNIT_RESOLUTION: &str = "\
:- op(1200,xfx,('<-')).
:- table_index(interpAtom/1,[0]).
interpAtom(G) :- (G <- Body), interp(Body,G).

interp(true,_H) :- !.
interp((A,B),H) :- !, interpAtom(A), interp(B,H).
interp(G,_H) :- interpAtom(G).
";

/// Interpreter used for timing: a variant table in front of a fully
/// abstracted subsumptive one.
pub const BOTTOM_UP: &str = "\
:- op(1200,xfx,('<-')).
interp_goal(true) :- !.
interp_goal((G1,G2)) :- !, interp_atom(G1), interp_goal(G2).
interp_goal(G) :- interp_atom(G).

:- table interp_atom/1.
interp_atom(G) :- interp_atoms(G).

:- table_index(interp_atoms/1,[0]).
interp_atoms(G) :- (G <- Gs), interp_goal(Gs).
";

/// Nine clauses over six propositions (`v` is never proved).
pub const PROPOSITIONS: &str = "\
p <- q,v,r,s.
p <- q,s,t.
q <- u,r.
q <- q,t,v.
r <- s.
s <- true.
u <- s,p,v,r.
u <- r,t.
t <- true.
";

/// Proposition occurrences in the triangular program of size `n`: rule `i`
/// mentions `n - i + 1` propositions.
pub fn occurrences(n: u64) -> u64 {
    n * (n + 1) / 2
}

/// The largest size whose program has at most `limit` occurrences.
pub fn largest_within(limit: u64) -> u64 {
    // Start from the real root and correct for rounding.
    let mut n = (((8.0 * limit as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    while occurrences(n + 1) <= limit {
        n += 1;
    }
    while n > 0 && occurrences(n) > limit {
        n -= 1;
    }
    n
}

/// `p1 <- p2,...,pn.` down to `pn <- true.`
pub fn triangular(n: u64) -> String {
    let mut out = String::new();
    for i in 1..=n {
        let _ = write!(out, "p{i} <- ");
        if i == n {
            out.push_str("true");
        }
        for j in i + 1..=n {
            let _ = write!(out, "p{j}{}", if j < n { "," } else { "" });
        }
        out.push_str(".\n");
    }
    out
}

/// How a derived clause came about.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// A program clause, read when the open call first ran.
    Initial,
    /// Unit resolution of `clause` with the proved proposition `proved`
    /// (or with `true`).
    Resolved { proved: String, clause: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derived {
    /// `h <- b1,...,bn`, or `h` once the body is empty.
    pub clause: String,
    pub step: Step,
}

fn clause_text(head: &Term, body: &Term) -> String {
    format!("{} <- {}", print_term(head), print_term(body))
}

/// The derived clauses of a [`UNIT_RESOLUTION`] run, in the order the engine
/// created them, recovered from its trace events.
pub fn derived_clauses(events: &[TraceEvent]) -> Vec<Derived> {
    let arrow = PredKey::new("<-", 2);
    let interp = PredKey::new("interp", 2);
    let interp_atom = PredKey::new("interpAtom", 1);
    let proved = |head: &Term| head.args().first().map(print_term).unwrap_or_default();
    let mut out = Vec::new();
    for e in events {
        match e {
            TraceEvent::ForkClause { pred, resolvent, .. } if *pred == arrow => {
                // The resolvent is `interp(Body,G)`.
                if let Some([body, head]) = resolvent.goals.first().map(Term::args) {
                    out.push(Derived { clause: clause_text(head, body), step: Step::Initial });
                }
            }
            TraceEvent::ForkClause { pred, clause: 1, resolvent, .. } if *pred == interp => {
                let h = proved(&resolvent.head);
                let clause = format!("{h} <- true");
                out.push(Derived { clause: h, step: Step::Resolved { proved: "true".into(), clause } });
            }
            // Answers forked to the top-level query derive nothing.
            TraceEvent::ForkAnswer { answer, resolvent, .. }
                if answer.pred_key() == Some(interp_atom) && resolvent.entry.is_some() =>
            {
                let a = proved(answer);
                match resolvent.goals.as_slice() {
                    [] => {
                        let h = proved(&resolvent.head);
                        let clause = format!("{h} <- {a}");
                        out.push(Derived { clause: h, step: Step::Resolved { proved: a, clause } });
                    }
                    [rest] if rest.pred_key() == Some(interp) => {
                        let [body, head] = rest.args() else { continue };
                        let clause = format!("{} <- {a},{}", print_term(head), print_term(body));
                        out.push(Derived { clause: clause_text(head, body), step: Step::Resolved { proved: a, clause } });
                    }
                    _ => {}
                }
            }
            _ => {}
        }
    }
    out
}

/// Numbered listing of derived clauses with their justification.
pub fn render_derivation(steps: &[Derived]) -> String {
    let mut out = String::new();
    for (i, d) in steps.iter().enumerate() {
        let why = match &d.step {
            Step::Initial => "initial clause".to_string(),
            Step::Resolved { proved, clause } => format!("from {proved} and {clause}"),
        };
        let _ = writeln!(out, "{:<4}{:<15}{why}", format!("{}.", i + 1), d.clause);
    }
    out
}
