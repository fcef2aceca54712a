use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::split::{SubId, SubPattern};
use crate::rulespec::{RuleSet, WildByte};

pub const ROOT: usize = 0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrieState {
    pub depth: usize,
    pub parent: usize,
    pub in_char: u8,
    pub children: BTreeMap<u8, usize>,
    /// Sub-pattern that ends exactly here (empty suffix).
    pub terminal: Option<SubId>,
    /// Sub-patterns continuing into Phase-2 from here, in id order.
    pub suffixes: Vec<SubId>,
}

/// Forward-only prefix tree over sub-pattern prefixes. State 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trie {
    pub states: Vec<TrieState>,
    pub max_depth: usize,
}

impl Trie {
    pub fn child(&self, state: usize, c: u8) -> Option<usize> {
        self.states[state].children.get(&c).copied()
    }

    /// Non-root states at `depth`, in id order.
    pub fn states_at(&self, depth: usize) -> impl Iterator<Item = usize> + '_ {
        (1..self.states.len()).filter(move |&s| self.states[s].depth == depth)
    }

    pub fn transitions(&self) -> usize {
        self.states.len() - 1
    }
}

/// Transition statistics of an automaton.
///
/// `n_states` excludes the root. For the conventional automaton,
/// `n_backward` counts distinct DFA edges that are not trie edges and do not
/// lead back to the root; the pipelined trie has none by construction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcStats {
    pub n_states: usize,
    pub n_forward: usize,
    pub n_backward: usize,
    /// Index `d` holds the number of states (equivalently, incoming
    /// transitions) at depth `d`; index 0 is always 0.
    pub per_depth: Vec<usize>,
    /// Patterns left out of the baseline because they contain wildcards.
    pub skipped_wildcard: usize,
}

fn empty_state() -> TrieState {
    TrieState { depth: 0, parent: ROOT, in_char: 0, children: BTreeMap::new(), terminal: None, suffixes: Vec::new() }
}

fn insert(states: &mut Vec<TrieState>, key: &[u8]) -> usize {
    let mut cur = ROOT;
    for &c in key {
        cur = match states[cur].children.get(&c) {
            Some(&next) => next,
            None => {
                let id = states.len();
                states.push(TrieState { depth: states[cur].depth + 1, parent: cur, in_char: c, ..empty_state() });
                states[cur].children.insert(c, id);
                id
            }
        };
    }
    cur
}

fn depth_histogram(states: &[TrieState]) -> Vec<usize> {
    let max = states.iter().map(|s| s.depth).max().unwrap_or(0);
    let mut h = vec![0; max + 1];
    for s in &states[1..] {
        h[s.depth] += 1;
    }
    h
}

/// Builds the pipelined trie. Prefixes are at most `depth` bytes.
pub fn build_trie(subs: &[SubPattern], depth: usize) -> (Trie, AcStats) {
    let mut states = vec![empty_state()];
    for sp in subs {
        debug_assert!(sp.prefix.len() <= depth);
        let s = insert(&mut states, &sp.prefix);
        if sp.suffix.is_empty() {
            states[s].terminal = Some(sp.id);
        } else {
            states[s].suffixes.push(sp.id);
        }
    }
    for s in &mut states {
        s.suffixes.sort_unstable();
    }
    let trie = Trie { max_depth: depth, states };
    let n = trie.transitions();
    let stats = AcStats {
        n_states: n,
        n_forward: n,
        n_backward: 0,
        per_depth: depth_histogram(&trie.states),
        skipped_wildcard: 0,
    };
    (trie, stats)
}

/// Conventional single automaton over whole literal patterns, with failure
/// links expanded into a full DFA so its backward edges can be counted.
pub fn build_conventional_ac(rs: &RuleSet) -> AcStats {
    let mut states = vec![empty_state()];
    let mut skipped = 0;
    for p in rs.patterns.values() {
        match literal_bytes(&p.bytes) {
            Some(key) => {
                insert(&mut states, &key);
            }
            None => skipped += 1,
        }
    }

    let n = states.len();
    let mut fail = vec![ROOT; n];
    let mut delta = vec![[ROOT as u32; 256]; n];
    let mut queue = VecDeque::new();
    for c in 0..=255u8 {
        if let Some(&child) = states[ROOT].children.get(&c) {
            delta[ROOT][c as usize] = child as u32;
            queue.push_back(child);
        }
    }
    while let Some(s) = queue.pop_front() {
        for c in 0..=255u8 {
            match states[s].children.get(&c) {
                Some(&child) => {
                    fail[child] = delta[fail[s]][c as usize] as usize;
                    delta[s][c as usize] = child as u32;
                    queue.push_back(child);
                }
                None => delta[s][c as usize] = delta[fail[s]][c as usize],
            }
        }
    }

    let mut backward = 0;
    for (s, row) in delta.iter().enumerate().skip(1) {
        for (c, &to) in row.iter().enumerate() {
            let forward = states[s].children.contains_key(&(c as u8));
            if !forward && to as usize != ROOT {
                backward += 1;
            }
        }
    }
    AcStats {
        n_states: n - 1,
        n_forward: n - 1,
        n_backward: backward,
        per_depth: depth_histogram(&states),
        skipped_wildcard: skipped,
    }
}

/// Bytes of a literal-only pattern, for callers that filter wildcards.
pub fn literal_bytes(bytes: &[WildByte]) -> Option<Vec<u8>> {
    bytes.iter().map(|b| b.literal()).collect()
}
