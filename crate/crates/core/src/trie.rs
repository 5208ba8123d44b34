//! Token tries over answer argument sequences.
//!
//! A trie stores canonical token sequences (see [`crate::term::Token`]) and
//! maps each complete sequence to the ordinal of the answer it came from. The
//! same structure serves duplicate detection and prefix lookups for a given
//! argument permutation.

use std::collections::HashMap;

use crate::term::Token;

/// Children are kept in a small vector until a node gets wide.
const WIDE: usize = 8;

#[derive(Debug, Clone)]
enum Children {
    Few(Vec<(Token, u32)>),
    Many(HashMap<Token, u32>),
}

impl Children {
    fn get(&self, t: &Token) -> Option<u32> {
        match self {
            Children::Few(v) => v.iter().find(|(k, _)| k == t).map(|(_, n)| *n),
            Children::Many(m) => m.get(t).copied(),
        }
    }

    fn insert(&mut self, t: Token, node: u32) {
        match self {
            Children::Few(v) if v.len() < WIDE => v.push((t, node)),
            Children::Few(v) => {
                let mut m: HashMap<Token, u32> = v.drain(..).collect();
                m.insert(t, node);
                *self = Children::Many(m);
            }
            Children::Many(m) => {
                m.insert(t, node);
            }
        }
    }

    fn nodes(&self) -> Vec<u32> {
        match self {
            Children::Few(v) => v.iter().map(|(_, n)| *n).collect(),
            Children::Many(m) => m.values().copied().collect(),
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    children: Children,
    leaf: Option<usize>,
}

impl Node {
    fn new() -> Self {
        Node { children: Children::Few(Vec::new()), leaf: None }
    }
}

#[derive(Debug, Clone)]
pub struct Trie {
    nodes: Vec<Node>,
    len: usize,
}

impl Default for Trie {
    fn default() -> Self {
        Self::new()
    }
}

impl Trie {
    pub fn new() -> Self {
        Trie { nodes: vec![Node::new()], len: 0 }
    }

    /// Number of stored sequences.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Stores `tokens` with `ordinal`; if already present, returns the existing ordinal.
    pub fn insert(&mut self, tokens: &[Token], ordinal: usize) -> Result<(), usize> {
        let mut node = 0u32;
        for t in tokens {
            node = match self.nodes[node as usize].children.get(t) {
                Some(n) => n,
                None => {
                    let n = self.nodes.len() as u32;
                    self.nodes.push(Node::new());
                    self.nodes[node as usize].children.insert(*t, n);
                    n
                }
            };
        }
        let slot = &mut self.nodes[node as usize].leaf;
        match slot {
            Some(existing) => Err(*existing),
            None => {
                *slot = Some(ordinal);
                self.len += 1;
                Ok(())
            }
        }
    }

    fn descend(&self, tokens: &[Token]) -> Option<u32> {
        let mut node = 0u32;
        for t in tokens {
            node = self.nodes[node as usize].children.get(t)?;
        }
        Some(node)
    }

    pub fn get(&self, tokens: &[Token]) -> Option<usize> {
        self.descend(tokens).and_then(|n| self.nodes[n as usize].leaf)
    }

    /// Ordinals of all sequences starting with `prefix`, in ascending order.
    pub fn with_prefix(&self, prefix: &[Token]) -> Vec<usize> {
        let Some(start) = self.descend(prefix) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            if let Some(o) = node.leaf {
                out.push(o);
            }
            stack.extend(node.children.nodes());
        }
        out.sort_unstable();
        out
    }
}
