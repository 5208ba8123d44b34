//! The machine-model trace of `p(a,X)` over the q/r join program, compared
//! state by state with the recorded fixture.

use tablog_core::engine::trace::parse_states;
use tablog_core::engine::{Engine, EngineConfig, TraceMode};
use tablog_core::program::parse_program;

const PROGRAM: &str = include_str!("../programs/join.pl");
const STATES: &str = include_str!("../programs/join.states");

fn run() -> Engine {
    let config = EngineConfig { trace: TraceMode::Machines, ..Default::default() };
    let mut e = Engine::new(&parse_program(PROGRAM).unwrap(), config).unwrap();
    let sol = e.solve_text("p(a,X)").unwrap();
    let got: Vec<String> = sol.answers.iter().map(|a| a.to_text()).collect();
    assert_eq!(got, ["X = b", "X = c"]);
    e
}

#[test]
fn states_match_fixture() {
    let expected = parse_states(STATES);
    assert_eq!(expected.len(), 30);
    let e = run();
    let got = e.states();
    // The engine also records the final release of the query's suspension.
    assert_eq!(got.len(), expected.len() + 1);
    for (i, (g, x)) in got.iter().zip(&expected).enumerate() {
        assert_eq!(g.normalized(), x.normalized(), "state {i} ({})", g.label);
    }
}

#[test]
fn final_p_table() {
    let e = run();
    let (_, answers) = e.table_contents().into_iter().find(|(g, _)| g.to_string().starts_with("p(")).unwrap();
    let got: Vec<String> = answers.iter().map(|a| a.to_string()).collect();
    let expected = "p(a,b) p(e,a) p(d,e) p(b,c) p(c,b) p(a,c) p(e,b) p(d,a) p(b,b) p(c,c) p(e,c) p(d,b) p(d,c)";
    assert_eq!(got, expected.split(' ').collect::<Vec<_>>());
}

#[test]
fn trace_is_deterministic() {
    let a = tablog_core::engine::trace::render_states(run().states());
    let b = tablog_core::engine::trace::render_states(run().states());
    assert_eq!(a, b);
}
