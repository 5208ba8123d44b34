//! Trace events and their two text renderings: a numbered resolution log and
//! machine/table snapshots.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::program::TermPrinter;
use crate::table::{EntryDump, EntryId};
use crate::term::{unify, PredKey, Substitution, Term, VarId};

/// A machine's state right after it was created: answer template and goals.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolvent {
    /// The answer template, or the tuple of query variables for query machines.
    pub head: Term,
    /// The entry the machine returns to; `None` for the top-level query.
    pub entry: Option<EntryId>,
    pub goals: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceEvent {
    Query { line: u32, goals: Vec<Term>, tuple: Term },
    /// A machine created by resolving its parent's goal with a clause.
    ForkClause { line: u32, parent: Option<u32>, pred: PredKey, clause: usize, fact: Option<Term>, resolvent: Resolvent },
    /// A machine created by returning a table answer to a suspended consumer.
    ForkAnswer { line: u32, parent: Option<u32>, entry: EntryId, ordinal: usize, answer: Term, resolvent: Resolvent },
    NewTable { line: Option<u32>, entry: EntryId, goal: Term, call: Term },
    Suspend { line: Option<u32>, entry: EntryId, consumer: Term },
    NewAnswer { line: Option<u32>, entry: EntryId, ordinal: usize, answer: Term },
    DuplicateAnswer { line: Option<u32>, entry: EntryId, answer: Term },
    IllegalMode { goal: String },
    FileOpen { path: String },
    /// `scan/2` tokenized this text.
    Tokenize { text: String },
    QueryAnswer { answer: Term },
}

/// How many times `scan/2` tokenized each text.
pub fn tokenize_counts(events: &[TraceEvent]) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for e in events {
        if let TraceEvent::Tokenize { text } = e {
            *counts.entry(text.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// The machine set (in scheduling order) and the table at one point of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateDump {
    pub label: String,
    pub machines: Vec<String>,
    pub tables: Vec<EntryDump>,
}

fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

#[derive(Default)]
struct LogLine {
    depth: usize,
    text: String,
    notes: Vec<String>,
}

/// Numbered resolution log: one line per machine, indented by derivation depth,
/// showing the machine's goals and how it was created and what it did.
pub fn render_log(events: &[TraceEvent], names: &dyn Fn(VarId) -> Option<String>) -> String {
    let p = TermPrinter::new(names);
    let unknown = |_: VarId| Some("?".to_string());
    let query_form = TermPrinter::new(&unknown);
    let mut lines: Vec<(u32, LogLine)> = Vec::new();
    let mut index: HashMap<u32, usize> = HashMap::new();
    let mut goals: HashMap<EntryId, Term> = HashMap::new();

    let mut query_tuple: Option<Term> = None;
    let resolvent_text = |r: &Resolvent, goals: &HashMap<EntryId, Term>, query: &Option<Term>| -> String {
        if !r.goals.is_empty() {
            return r.goals.iter().map(|g| p.print_at(g, 999)).collect::<Vec<_>>().join(",");
        }
        let template = match r.entry {
            Some(e) => goals.get(&e),
            None => query.as_ref(),
        };
        let mut bindings = Vec::new();
        if let Some(s) = template.and_then(|g| unify(g, &r.head, &Substitution::new())) {
            for v in template.map(Term::vars).unwrap_or_default() {
                if let Some(n) = names(v) {
                    bindings.push(format!("{n}={}", p.print_at(&s.apply(&Term::Var(v)), 699)));
                }
            }
        }
        match (bindings.is_empty(), r.entry) {
            (false, _) => format!("() {}", bindings.join(",")),
            (true, Some(_)) => format!("() {}", p.print(&r.head)),
            (true, None) => "()".to_string(),
        }
    };

    fn open(
        (index, lines): (&mut HashMap<u32, usize>, &mut Vec<(u32, LogLine)>),
        line: u32,
        parent: Option<u32>,
        text: String,
        note: Option<String>,
    ) {
        let depth = parent.and_then(|p| index.get(&p)).map_or(0, |i| lines[*i].1.depth + 1);
        index.insert(line, lines.len());
        lines.push((line, LogLine { depth, text, notes: note.into_iter().collect() }));
    }

    for e in events {
        match e {
            TraceEvent::Query { line, goals: gs, tuple } => {
                query_tuple = Some(tuple.clone());
                let text = gs.iter().map(|g| p.print_at(g, 999)).collect::<Vec<_>>().join(",");
                open((&mut index, &mut lines), *line, None, text, None);
            }
            TraceEvent::NewTable { line, entry, goal, call } => {
                goals.insert(*entry, goal.clone());
                if let Some(i) = line.and_then(|l| index.get(&l)) {
                    lines[*i].1.notes.push(format!("add query {} to table", query_form.print(call)));
                }
            }
            TraceEvent::ForkClause { line, parent, clause, fact, resolvent, .. } => {
                let text = resolvent_text(resolvent, &goals, &query_tuple);
                let from = parent.map_or("query".to_string(), |p| p.to_string());
                let note = match fact {
                    Some(f) => format!("resolve {from} with fact {}", p.print(f)),
                    None => format!("resolve {from} with {} rule", ordinal(*clause)),
                };
                open((&mut index, &mut lines), *line, *parent, text, Some(note));
            }
            TraceEvent::ForkAnswer { line, parent, answer, resolvent, .. } => {
                let text = resolvent_text(resolvent, &goals, &query_tuple);
                let from = parent.map_or("query".to_string(), |p| p.to_string());
                let note = format!("resolve {from} with answer {} from table", p.print(answer));
                open((&mut index, &mut lines), *line, *parent, text, Some(note));
            }
            TraceEvent::NewAnswer { line, answer, .. } => {
                if let Some(i) = line.and_then(|l| index.get(&l)) {
                    lines[*i].1.notes.push(format!("add answer {} to table", p.print(answer)));
                }
            }
            TraceEvent::DuplicateAnswer { line, answer, .. } => {
                if let Some(i) = line.and_then(|l| index.get(&l)) {
                    lines[*i].1.notes.push(format!("{} in table, don't add", p.print(answer)));
                }
            }
            TraceEvent::IllegalMode { goal } => {
                if let Some((_, last)) = lines.last_mut() {
                    last.notes.push(format!("illegal mode {goal}"));
                }
            }
            TraceEvent::Suspend { .. }
            | TraceEvent::FileOpen { .. }
            | TraceEvent::Tokenize { .. }
            | TraceEvent::QueryAnswer { .. } => {}
        }
    }

    let mut out = String::new();
    for (n, l) in &lines {
        let body = format!("{}{}", "  ".repeat(l.depth), l.text);
        let gap = if body.len() >= 18 { " " } else { "" };
        let _ = writeln!(out, "{n} {body:<18}{gap}{}", l.notes.join(", "));
    }
    out.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n"
}

/// Appendix-style text for a list of snapshots.
pub fn render_states(states: &[StateDump]) -> String {
    let mut out = String::new();
    for s in states {
        let _ = writeln!(out, "# {}", s.label);
        let _ = writeln!(out, "S: {}", s.machines.join("; ").trim_end());
        if s.tables.is_empty() {
            out.push_str("T:\n");
        }
        for (i, t) in s.tables.iter().enumerate() {
            let _ = writeln!(out, "{}{t}", if i == 0 { "T: " } else { "   " });
        }
        out.push('\n');
    }
    out
}

/// Splits at commas outside brackets and parentheses.
fn split_top(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut quoted = false;
    for ch in s.chars() {
        match ch {
            '\'' => quoted = !quoted,
            '(' | '[' if !quoted => depth += 1,
            ')' | ']' if !quoted => depth -= 1,
            ',' if depth == 0 && !quoted => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out.into_iter().map(|x| x.trim().to_string()).collect()
}

/// Index of the `]` matching the `[` at `open`.
fn closing(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0;
    for (i, ch) in s.char_indices().skip_while(|(i, _)| *i < open) {
        match ch {
            '[' | '(' => depth += 1,
            ']' | ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses one `goal:[answers],[form:N,...]` entry line.
pub fn parse_entry(line: &str) -> Option<EntryDump> {
    let line = line.trim();
    let mut depth = 0;
    let mut split = None;
    for (i, ch) in line.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ':' if depth == 0 && line[i + 1..].starts_with('[') => {
                split = Some(i);
                break;
            }
            _ => {}
        }
    }
    let split = split?;
    let goal = line[..split].trim().to_string();
    let a_open = split + 1;
    let a_close = closing(line, a_open)?;
    let answers = split_top(&line[a_open + 1..a_close]);
    let rest = line[a_close + 1..].trim_start_matches(',').trim();
    let s_close = closing(rest, 0)?;
    let mut suspensions = Vec::new();
    let mut acc = String::new();
    for piece in split_top(&rest[1..s_close]) {
        if !acc.is_empty() {
            acc.push(',');
        }
        acc.push_str(&piece);
        if let Some((form, n)) = acc.rsplit_once(':') {
            if let Ok(n) = n.trim().parse::<usize>() {
                suspensions.push((form.trim().to_string(), n));
                acc.clear();
            }
        }
    }
    Some(EntryDump { goal, answers, suspensions })
}

/// Reads snapshots in the format produced by [`render_states`]. Entry lines may
/// wrap: a line that does not start a new entry continues the previous one.
pub fn parse_states(text: &str) -> Vec<StateDump> {
    let mut out: Vec<StateDump> = Vec::new();
    let mut entry_lines: Vec<String> = Vec::new();
    let mut in_machines = false;
    let flush = |out: &mut Vec<StateDump>, entry_lines: &mut Vec<String>| {
        if let Some(s) = out.last_mut() {
            s.tables.extend(entry_lines.drain(..).filter_map(|l| parse_entry(&l)));
        }
    };
    for raw in text.lines() {
        let line = raw.trim_end();
        if let Some(label) = line.strip_prefix("# ") {
            flush(&mut out, &mut entry_lines);
            out.push(StateDump { label: label.to_string(), machines: Vec::new(), tables: Vec::new() });
            in_machines = false;
        } else if let Some(rest) = line.strip_prefix("S:") {
            in_machines = true;
            push_machines(out.last_mut(), rest);
        } else if let Some(rest) = line.strip_prefix("T:") {
            in_machines = false;
            if !rest.trim().is_empty() {
                entry_lines.push(rest.trim().to_string());
            }
        } else if line.trim().is_empty() {
            in_machines = false;
        } else if in_machines {
            push_machines(out.last_mut(), line);
        } else if starts_entry(line.trim()) || entry_lines.is_empty() {
            entry_lines.push(line.trim().to_string());
        } else if let Some(last) = entry_lines.last_mut() {
            last.push_str(line.trim());
        }
    }
    flush(&mut out, &mut entry_lines);
    out
}

fn push_machines(state: Option<&mut StateDump>, text: &str) {
    if let Some(s) = state {
        s.machines.extend(text.split(';').map(str::trim).filter(|m| !m.is_empty()).map(String::from));
    }
}

/// A table line starts with `goal:[`.
fn starts_entry(line: &str) -> bool {
    let Some(i) = line.find(":[") else { return false };
    let head = &line[..i];
    !head.contains("<-") && !head.contains(':') && !head.starts_with('[')
}

/// Renames variables in printed text to `_G0`, `_G1`, ... by first occurrence.
pub fn normalize_vars(text: &str) -> String {
    let mut out = String::new();
    let mut map: HashMap<String, usize> = HashMap::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\'' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != '\'' {
                i += if chars[i] == '\\' { 2 } else { 1 };
            }
            i = (i + 1).min(chars.len());
            out.extend(&chars[start..i]);
            continue;
        }
        let prev_word = i > 0 && (chars[i - 1].is_alphanumeric() || chars[i - 1] == '_');
        if (c.is_ascii_uppercase() || c == '_') && !prev_word {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            let next = map.len();
            let n = *map.entry(name).or_insert(next);
            let _ = write!(out, "_G{n}");
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

impl StateDump {
    /// The same snapshot with each machine, goal, answer and suspension
    /// variable-normalized on its own; the label is dropped.
    pub fn normalized(&self) -> StateDump {
        StateDump {
            label: String::new(),
            machines: self.machines.iter().map(|m| normalize_vars(m)).collect(),
            tables: self
                .tables
                .iter()
                .map(|t| EntryDump {
                    goal: normalize_vars(&t.goal),
                    answers: t.answers.iter().map(|a| normalize_vars(a)).collect(),
                    suspensions: t.suspensions.iter().map(|(s, n)| (normalize_vars(s), *n)).collect(),
                })
                .collect(),
        }
    }
}
