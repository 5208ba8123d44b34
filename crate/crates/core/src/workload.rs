//! Shipped example programs and generators for their data.

use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub const SHARE: &str = include_str!("../programs/share.pl");
pub const SHARE_BY_BOOK: &str = include_str!("../programs/share_books.pl");
pub const EMP_DATA: &str = include_str!("../programs/emp_data.pl");
pub const P4: &str = include_str!("../programs/p4.pl");
pub const GRAPH: &str = include_str!("../programs/graph.pl");
pub const GRAPH_INDEXED: &str = include_str!("../programs/graph_indexed.pl");
pub const JOIN: &str = include_str!("../programs/join.pl");
pub const PROPOSITIONS: &str = include_str!("../programs/propositions.pl");
pub const TRIANGULAR5: &str = include_str!("../programs/triangular5.pl");

const WORDS: [&str; 32] = [
    "river", "stone", "light", "north", "garden", "winter", "silver", "harbor", "forest", "candle", "mirror",
    "thunder", "meadow", "copper", "lantern", "orchard", "shadow", "bridge", "valley", "ember", "island", "canyon",
    "feather", "glacier", "willow", "compass", "marble", "tide", "falcon", "ivory", "summit", "cellar",
];

fn sentence(rng: &mut StdRng) -> String {
    let len = rng.gen_range(3..=8);
    (0..len).map(|_| *WORDS.choose(rng).expect("nonempty")).collect::<Vec<_>>().join(" ")
}

/// `count` distinct sentences over a fixed vocabulary.
pub fn sentences(count: usize, seed: u64) -> Vec<String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out: Vec<String> = Vec::with_capacity(count);
    while out.len() < count {
        let s = sentence(&mut rng);
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// `corpus/1` facts, one per sentence.
pub fn corpus_facts(sentences: &[String]) -> String {
    let mut out = String::new();
    for s in sentences {
        let _ = writeln!(out, "corpus('{s}').");
    }
    out
}

/// Book of the `i`th sentence when the corpus is split across `books` books.
pub fn book_of(i: usize, books: usize) -> String {
    format!("isbn{}", i % books)
}

/// `corpus/2` facts dealing the sentences round-robin across `books` books.
pub fn book_corpus_facts(sentences: &[String], books: usize) -> String {
    let mut out = String::new();
    for (i, s) in sentences.iter().enumerate() {
        let _ = writeln!(out, "corpus({},'{s}').", book_of(i, books));
    }
    out
}

/// `emp/3` records, one per line, as read by `data_records(F,read,R)`.
pub fn emp_records(count: usize) -> String {
    let mut out = String::new();
    for i in 1..=count {
        let _ = writeln!(out, "emp({i},emp{i},'{} {} St').", i * 7 % 1000, WORDS[i % WORDS.len()]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;

    #[test]
    fn shipped_programs_parse() {
        for src in [SHARE, SHARE_BY_BOOK, EMP_DATA, P4, GRAPH, GRAPH_INDEXED, JOIN, PROPOSITIONS, TRIANGULAR5] {
            parse_program(src).unwrap();
        }
    }

    #[test]
    fn generated_data_parses() {
        let s = sentences(50, 1);
        assert_eq!(s.len(), 50);
        assert_eq!(s, sentences(50, 1));
        parse_program(&corpus_facts(&s)).unwrap();
        parse_program(&book_corpus_facts(&s, 4)).unwrap();
        assert_eq!(crate::program::parse_terms(&emp_records(10)).unwrap().len(), 10);
    }

    #[test]
    fn triangular_listing_matches_generator() {
        assert!(TRIANGULAR5.ends_with(&crate::meta::triangular(5)));
    }
}
