//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use tablog_core::bench::{run_bench, BenchSpec};
use tablog_core::engine::trace::parse_states;
use tablog_core::engine::{tokenize_counts, Engine, EngineConfig, Schedule, TraceMode};
use tablog_core::index::transform_program;
use tablog_core::meta::{derived_clauses, render_derivation};
use tablog_core::oracle::random::{random_program, GenConfig};
use tablog_core::oracle::{diff_with_engine, least_model};
use tablog_core::program::{parse_program, parse_terms, print_term, Program};
use tablog_core::workload::{self, sentences};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn program(src: &str) -> Program {
    parse_program(src).expect("shipped program parses")
}

fn engine(src: &str, config: EngineConfig) -> Engine {
    Engine::new(&program(src), config).expect("engine loads")
}

fn answer_texts(e: &mut Engine, query: &str) -> Result<Vec<String>, String> {
    let sol = e.solve_text(query).map_err(|err| format!("{query}: {err}"))?;
    Ok(sol.answers.iter().map(|a| a.to_text()).collect())
}

fn appendix_trace() -> Outcome {
    let config = EngineConfig { trace: TraceMode::Machines, ..Default::default() };
    let mut e = engine(workload::JOIN, config);
    let answers = answer_texts(&mut e, "p(a,X)")?;
    ensure(answers == ["X = b", "X = c"], || format!("query answers {answers:?}"))?;
    let expected = parse_states(include_str!("../programs/join.states"));
    let got = e.states();
    ensure(got.len() >= expected.len(), || format!("{} states, expected {}", got.len(), expected.len()))?;
    for (i, (g, x)) in got.iter().zip(&expected).enumerate() {
        ensure(g.normalized() == x.normalized(), || format!("state {i} ({}) differs", g.label))?;
    }
    let p_table = e
        .table_contents()
        .into_iter()
        .find(|(g, _)| g.to_string().starts_with("p("))
        .map(|(_, a)| a.iter().map(print_term).collect::<Vec<_>>().join(" "))
        .unwrap_or_default();
    let order = "p(a,b) p(e,a) p(d,e) p(b,c) p(c,b) p(a,c) p(e,b) p(d,a) p(b,b) p(c,c) p(e,c) p(d,b) p(d,c)";
    ensure(p_table == order, || format!("p/2 table {p_table}"))?;
    Ok(format!("{} states match, 13 p/2 answers in order", expected.len()))
}

fn section_two_logs() -> Outcome {
    let mut e = engine(workload::GRAPH, EngineConfig { trace: TraceMode::Log, ..Default::default() });
    answer_texts(&mut e, "p(a,A)")?;
    let log = e.render_log();
    let expected = [
        "1 p(a,A)            add query p(a,?) to table",
        "2   e(a,A)          resolve 1 with 1st rule",
        "3     () A=b        resolve 2 with fact e(a,b), add answer p(a,b) to table",
        "4   p(a,Z),e(Z,A)   resolve 1 with 2nd rule",
        "5     e(b,A)        resolve 4 with answer p(a,b) from table",
        "6       () A=c      resolve 5 with fact e(b,c), add answer p(a,c) to table",
        "7     e(c,A)        resolve 4 with answer p(a,c) from table",
        "8       () A=b      resolve 7 with fact e(c,b), p(a,b) in table, don't add",
    ];
    let got: Vec<&str> = log.lines().take(8).collect();
    ensure(got == expected, || format!("engine log:\n{log}"))?;

    let model = least_model(&program(workload::GRAPH)).map_err(|e| e.to_string())?;
    let set = |s: &str| s.split(' ').map(String::from).collect::<BTreeSet<_>>();
    let expected = [
        set("e(a,b) e(b,c) e(e,a) e(c,b) e(d,e)"),
        set("p(a,b) p(e,a) p(d,e) p(b,c) p(c,b)"),
        set("p(a,c) p(e,b) p(d,a) p(b,b) p(c,c)"),
        set("p(e,c) p(d,b)"),
        set("p(d,c)"),
        BTreeSet::new(),
    ];
    let got: Vec<BTreeSet<String>> = model.iterations().iter().map(|i| i.iter().map(|f| print_term(f)).collect()).collect();
    ensure(got == expected, || format!("oracle iterations {got:?}"))?;
    Ok("8 log lines, iterations 0-5".into())
}

fn derivation_order() -> Outcome {
    let order = ["s", "t", "r", "u", "q", "p"];
    let mut derivation = String::new();
    for schedule in [Schedule::Model, Schedule::Eager] {
        let mut e = engine(workload::PROPOSITIONS, EngineConfig { schedule, trace: TraceMode::Log, ..Default::default() });
        let answers = answer_texts(&mut e, "interpAtom(p)")?;
        ensure(answers == ["true"], || format!("{schedule:?}: answers {answers:?}"))?;
        let (_, table) = e.table_contents().into_iter().next().ok_or("no table")?;
        let got: Vec<String> = table.iter().map(|a| print_term(&a.args()[0])).collect();
        ensure(got == order, || format!("{schedule:?}: proposition order {got:?}"))?;
        if schedule == Schedule::Eager {
            derivation = render_derivation(&derived_clauses(e.trace_events()));
        }
    }
    let expected = include_str!("../programs/propositions.derivation");
    ensure(derivation == expected, || format!("derived clauses:\n{derivation}"))?;
    Ok(format!("order s,t,r,u,q,p; {} derived clauses match", expected.lines().count()))
}

fn theorem_suite() -> Outcome {
    let config = GenConfig::default();
    let (mut queries, mut full) = (0, 0);
    for seed in 0..1000 {
        let g = random_program(seed, &config);
        for q in &g.queries {
            let d = diff_with_engine(&g.program, q).map_err(|e| format!("seed {seed}, {q}: {e}"))?;
            ensure(d.answers_agree(), || {
                format!("seed {seed}, {q}: engine {:?}, oracle {:?}\n{}", d.engine, d.oracle, g.source)
            })?;
            if let Some(m) = &d.model {
                ensure(m.is_empty(), || format!("seed {seed}, {q}: table union differs at {:?}\n{}", m.witness(), g.source))?;
                full += 1;
            }
            queries += 1;
        }
    }
    Ok(format!("1000 programs, {queries} queries agree; {full} full-model checks agree"))
}

/// Sentences of `corpus` sharing a word with `input`, computed directly.
fn sharing(input: &str, corpus: &[(usize, &String)]) -> BTreeSet<usize> {
    let words: BTreeSet<&str> = input.split_whitespace().collect();
    corpus.iter().filter(|(_, s)| s.split_whitespace().any(|w| words.contains(w))).map(|(i, _)| *i).collect()
}

fn single_entry() -> Outcome {
    let corpus = sentences(100, 11);
    let inputs: Vec<String> = sentences(40, 12).into_iter().filter(|s| !corpus.contains(s)).take(20).collect();
    ensure(inputs.len() == 20, || "not enough distinct inputs".into())?;
    let index: HashMap<&String, usize> = corpus.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let config = EngineConfig { trace: TraceMode::Log, ..Default::default() };

    // One table over the whole corpus.
    let mut e = engine(&format!("{}{}", workload::SHARE, workload::corpus_facts(&corpus)), config.clone());
    let mut counts: HashMap<String, usize> = HashMap::new();
    let all: Vec<(usize, &String)> = corpus.iter().enumerate().collect();
    for input in &inputs {
        let sol = e.solve_text(&format!("share('{input}',S,W)")).map_err(|e| e.to_string())?;
        let got: BTreeSet<usize> = sol
            .answers
            .iter()
            .map(|a| index[&print_term(&a.bindings[0].1).trim_matches('\'').to_string()])
            .collect();
        ensure(got == sharing(input, &all), || format!("share answers for '{input}'"))?;
        for (text, n) in tokenize_counts(e.trace_events()) {
            *counts.entry(text).or_default() += n;
        }
    }
    let bad = corpus.iter().find(|s| counts.get(*s) != Some(&1));
    ensure(bad.is_none(), || format!("'{}' tokenized {:?} times", bad.unwrap(), counts.get(bad.unwrap())))?;

    // One table per book; two of the five books are never queried.
    let books = 5;
    let mut e = engine(&format!("{}{}", workload::SHARE_BY_BOOK, workload::book_corpus_facts(&corpus, books)), config);
    let mut counts: HashMap<String, usize> = HashMap::new();
    for (q, input) in inputs.iter().enumerate() {
        let book = q % 3;
        let sol = e.solve_text(&format!("share('{input}',isbn{book},S)")).map_err(|e| e.to_string())?;
        let got: BTreeSet<usize> = sol
            .answers
            .iter()
            .map(|a| index[&print_term(&a.bindings[0].1).trim_matches('\'').to_string()])
            .collect();
        let in_book: Vec<(usize, &String)> = all.iter().copied().filter(|(i, _)| i % books == book).collect();
        ensure(got == sharing(input, &in_book), || format!("share answers for '{input}' in isbn{book}"))?;
        for (text, n) in tokenize_counts(e.trace_events()) {
            *counts.entry(text).or_default() += n;
        }
    }
    for (i, s) in corpus.iter().enumerate() {
        let expected = usize::from(i % books < 3);
        let got = counts.get(s).copied().unwrap_or(0);
        ensure(got == expected, || format!("'{s}' in isbn{} tokenized {got} times, expected {expected}", i % books))?;
    }
    Ok("100 sentences, 20 queries: each sentence tokenized once (books: once per queried book)".into())
}

fn linearity() -> Outcome {
    let report = run_bench(&BenchSpec::default()).map_err(|e| e.to_string())?;
    print!("{}", report.render());
    let ratios = report.ratios();
    let exponent = report.exponent().ok_or("no exponent")?;
    let sizes: Vec<u64> = report.points.iter().map(|p| p.target).collect();
    let mut doublings = Vec::new();
    for (i, w) in sizes.windows(2).enumerate() {
        if w[1] == 2 * w[0] {
            doublings.push(ratios[i]);
        }
    }
    let summary = format!("doubling ratios {doublings:.2?}, exponent {exponent:.3}");
    ensure(doublings.len() == 2 && doublings.iter().all(|r| (1.5..=3.0).contains(r)), || summary.clone())?;
    ensure((0.8..=1.3).contains(&exponent), || summary.clone())?;
    Ok(summary)
}

fn answer_set(e: &mut Engine, query: &str) -> Result<BTreeSet<String>, String> {
    Ok(answer_texts(e, query)?.into_iter().collect())
}

fn transform_fidelity() -> Outcome {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("programs/data");
    let corpus = sentences(30, 5);
    let share = format!("{}{}", workload::SHARE, workload::corpus_facts(&corpus));
    let books = format!("{}{}", workload::SHARE_BY_BOOK, workload::book_corpus_facts(&corpus, 3));
    let cases: Vec<(&str, String, Vec<&str>)> = vec![
        ("p/4", workload::P4.into(), vec!["p(a,B,C,D)", "p(A,B,C,1)", "p(a,c,C,D)", "p(A,c,z,1)", "p(b,B,x,D)"]),
        ("corpus_word/2", share, vec!["corpus_word(S,river)", "share('river stone',S,W)", "corpus_word(S,nothing)"]),
        ("corpus_word/3", books, vec!["corpus_word(isbn1,S,light)", "share('north winter',isbn2,S)", "corpus_word(isbn0,S,W)"]),
        ("emp_data/4", workload::EMP_DATA.into(), vec!["emp_data('emp.txt',I,N,A)", "emp_data('emp.txt',2,N,A)", "emp_data('emp_north.txt',1,N,A)"]),
        ("p/2 [1,0]", workload::GRAPH_INDEXED.into(), vec!["p(a,X)", "p(d,X)", "p(X,Y)"]),
        ("p/2 [0]", workload::JOIN.into(), vec!["p(a,X)", "p(X,c)"]),
        ("interpAtoms/1", workload::PROPOSITIONS.into(), vec!["interpAtom(p)", "interpAtom(v)", "interpAtom(X)"]),
        ("interp_atoms/1", workload::TRIANGULAR5.into(), vec!["interp_atom(p1)", "interp_atoms(X)"]),
    ];
    let mut total = 0;
    for (name, src, queries) in &cases {
        let original = program(src);
        let text = transform_program(&original).map_err(|e| format!("{name}: {e}"))?;
        let transformed = parse_program(&text).map_err(|e| format!("{name}: transformed program: {e}\n{text}"))?;
        let config = EngineConfig { data_root: data.clone(), ..Default::default() };
        let mut internal = Engine::new(&original, config.clone()).map_err(|e| e.to_string())?;
        let mut external = Engine::new(&transformed, config).map_err(|e| e.to_string())?;
        for q in queries {
            let a = answer_set(&mut internal, q)?;
            let b = answer_set(&mut external, q)?;
            ensure(a == b, || format!("{name} {q}: internal {a:?}, transformed {b:?}"))?;
            total += 1;
        }
    }
    Ok(format!("{} programs, {total} queries, equal answer sets", cases.len()))
}

fn ingestion() -> Outcome {
    let dir = std::env::temp_dir().join(format!("tablog-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let staff = workload::emp_records(1000);
    std::fs::write(dir.join("staff.txt"), &staff).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("contractors.txt"), workload::emp_records(40)).map_err(|e| e.to_string())?;
    let result = (|| {
        let config = EngineConfig { data_root: dir.clone(), trace: TraceMode::Log, ..Default::default() };
        let mut e = engine(workload::EMP_DATA, config);
        let opens = |e: &Engine| e.trace_events().iter().filter(|ev| matches!(ev, tablog_core::engine::TraceEvent::FileOpen { .. })).count();
        let mut events = 0;
        let a = answer_texts(&mut e, "emp_data('staff.txt',17,N,A)")?;
        events += opens(&e);
        let b = answer_texts(&mut e, "emp_data('staff.txt',900,N,A)")?;
        events += opens(&e);
        let record = staff.lines().find(|l| l.starts_with("emp(17,")).ok_or("no record 17")?;
        let record = parse_terms(record).map_err(|e| e.to_string())?.remove(0).0;
        let expected = format!("N = {}, A = {}", print_term(&record.args()[1]), print_term(&record.args()[2]));
        ensure(a == [expected], || format!("first answer {a:?}"))?;
        ensure(b.len() == 1 && b[0].starts_with("N = emp900,"), || format!("second answer {b:?}"))?;
        ensure(events == 1 && e.file_opens() == 1, || format!("{events} open events, {} opens", e.file_opens()))?;

        let c = answer_texts(&mut e, "emp_data('contractors.txt',17,N,A)")?;
        events += opens(&e);
        let d = answer_texts(&mut e, "emp_data('contractors.txt',900,N,A)")?;
        events += opens(&e);
        ensure(c.len() == 1 && d.is_empty(), || format!("second file answers {c:?} {d:?}"))?;
        ensure(events == 2 && e.file_opens() == 2, || format!("{events} open events after two files"))?;
        let sizes: Vec<(String, usize)> = e.table_contents().into_iter().map(|(g, a)| (print_term(&g), a.len())).collect();
        let expected = [("emp_data('staff.txt',_,_,_)", 1000), ("emp_data('contractors.txt',_,_,_)", 40)];
        let shapes: Vec<(String, usize)> = sizes.iter().map(|(g, n)| (strip_vars(g), *n)).collect();
        ensure(shapes == expected.map(|(g, n)| (g.to_string(), n)), || format!("tables {sizes:?}"))?;
        Ok("1 open for two queries on a 1000-record file; 2 independent file tables".to_string())
    })();
    let _ = std::fs::remove_dir_all(&dir);
    result
}

/// Replaces printed variables by `_`.
fn strip_vars(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        if c == '\'' {
            quoted = !quoted;
        }
        if !quoted && (c == '_' || c.is_ascii_uppercase()) && !out.ends_with(|p: char| p.is_alphanumeric()) {
            while chars.peek().is_some_and(|n| n.is_alphanumeric() || *n == '_') {
                chars.next();
            }
            out.push('_');
        } else {
            out.push(c);
        }
    }
    out
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("join program machine trace", Duration::from_secs(1), appendix_trace),
        ("tabled log and iteration log", Duration::from_secs(1), section_two_logs),
        ("unit-resolution derivation order", Duration::from_secs(1), derivation_order),
        ("random programs against the least model", Duration::from_secs(120), theorem_suite),
        ("producer single entry", Duration::from_secs(5), single_entry),
        ("linearity on triangular programs", Duration::from_secs(300), linearity),
        ("transform fidelity", Duration::from_secs(10), transform_fidelity),
        ("file ingestion", Duration::from_secs(2), ingestion),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed <= *budget => Ok(detail),
            Ok(detail) => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            Err(e) => Err(e),
        };
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {} {name} ({elapsed:.2?}): {reason}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
