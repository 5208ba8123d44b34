//! Seeded random Datalog programs for differential testing.
//!
//! Predicate `p0` is the query predicate; every other predicate is called from
//! a rule of an earlier one so that all are reachable from `p0`. Each
//! predicate gets a random tabling declaration, except pure fact predicates,
//! which are sometimes left untabled.

use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::program::{parse_program, Program};

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_preds: usize,
    /// Upper bound on clauses, facts included.
    pub max_rules: usize,
    pub max_consts: usize,
    pub max_arity: usize,
    pub max_body: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_preds: 8, max_rules: 30, max_consts: 20, max_arity: 2, max_body: 3 }
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub source: String,
    pub program: Program,
    pub queries: Vec<String>,
}

const VARS: [&str; 4] = ["X", "Y", "Z", "W"];

struct Builder<'a> {
    rng: &'a mut StdRng,
    arity: Vec<usize>,
    consts: usize,
}

impl Builder<'_> {
    fn constant(&mut self) -> String {
        format!("c{}", self.rng.gen_range(0..self.consts))
    }

    fn atom(&self, pred: usize, args: &[String]) -> String {
        if args.is_empty() {
            format!("p{pred}")
        } else {
            format!("p{pred}({})", args.join(","))
        }
    }

    fn fact(&mut self, pred: usize) -> String {
        let args: Vec<String> = (0..self.arity[pred]).map(|_| self.constant()).collect();
        format!("{}.", self.atom(pred, &args))
    }

    /// A range-restricted rule for `head` whose first body atom calls `first`.
    fn rule(&mut self, head: usize, first: usize, max_body: usize) -> String {
        let n = self.rng.gen_range(1..=max_body);
        let npreds = self.arity.len();
        let mut body = Vec::new();
        let mut bound: Vec<&str> = Vec::new();
        for i in 0..n {
            let pred = if i == 0 { first } else { self.rng.gen_range(0..npreds) };
            let args: Vec<String> = (0..self.arity[pred])
                .map(|_| {
                    if self.rng.gen_bool(0.2) {
                        self.constant()
                    } else {
                        let v = VARS[self.rng.gen_range(0..VARS.len())];
                        bound.push(v);
                        v.to_string()
                    }
                })
                .collect();
            body.push(self.atom(pred, &args));
        }
        let args: Vec<String> = (0..self.arity[head])
            .map(|_| {
                if bound.is_empty() || self.rng.gen_bool(0.1) {
                    self.constant()
                } else {
                    bound[self.rng.gen_range(0..bound.len())].to_string()
                }
            })
            .collect();
        format!("{} :- {}.", self.atom(head, &args), body.join(", "))
    }

    fn query(&mut self) -> String {
        let args: Vec<String> = (0..self.arity[0])
            .map(|i| if self.rng.gen_bool(0.3) { self.constant() } else { VARS[i].to_string() })
            .collect();
        self.atom(0, &args)
    }
}

pub fn random_program(seed: u64, config: &GenConfig) -> Generated {
    let mut rng = StdRng::seed_from_u64(seed);
    let npreds = rng.gen_range(1..=config.max_preds);
    let arity: Vec<usize> = (0..npreds).map(|_| rng.gen_range(1..=config.max_arity)).collect();
    let consts = rng.gen_range(1..=config.max_consts);
    let total = rng.gen_range(npreds.max(2)..=config.max_rules.max(npreds + 1));
    let mut b = Builder { rng: &mut rng, arity, consts };

    let mut clauses = Vec::new();
    let mut has_rules = vec![false; npreds];
    let mut defined = vec![false; npreds];
    // Reachability: each later predicate is called by some earlier one.
    for p in 1..npreds {
        let caller = b.rng.gen_range(0..p);
        clauses.push(b.rule(caller, p, config.max_body));
        has_rules[caller] = true;
        defined[caller] = true;
    }
    // Leave room for one fact per still undefined predicate.
    while clauses.len() + defined.iter().filter(|d| !**d).count() < total {
        let pred = b.rng.gen_range(0..npreds);
        if b.rng.gen_bool(0.55) {
            clauses.push(b.fact(pred));
        } else {
            let first = b.rng.gen_range(0..npreds);
            clauses.push(b.rule(pred, first, config.max_body));
            has_rules[pred] = true;
        }
        defined[pred] = true;
    }
    for pred in (0..npreds).filter(|p| !defined[*p]) {
        clauses.push(b.fact(pred));
    }
    // Clause order matters to the engine, so interleave facts and rules.
    for i in (1..clauses.len()).rev() {
        let j = b.rng.gen_range(0..=i);
        clauses.swap(i, j);
    }

    let mut source = String::new();
    for (p, &n) in b.arity.clone().iter().enumerate() {
        let choice = b.rng.gen_range(0..5);
        let decl = match choice {
            0 => format!(":- table p{p}/{n}."),
            1 => format!(":- table p{p}/{n} as subsumptive."),
            2 => format!(":- table_index(p{p}/{n},[0])."),
            3 if n > 1 => format!(":- table_index(p{p}/{n},[1,2,0])."),
            _ if !has_rules[p] => String::new(),
            _ => format!(":- table_index(p{p}/{n},[1,0])."),
        };
        if !decl.is_empty() {
            let _ = writeln!(source, "{decl}");
        }
    }
    for c in &clauses {
        let _ = writeln!(source, "{c}");
    }
    let queries = (0..3).map(|_| b.query()).collect();
    let program = parse_program(&source).expect("generated programs parse");
    Generated { source, program, queries }
}
