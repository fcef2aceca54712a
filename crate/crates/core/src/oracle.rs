//! Brute-force reference matchers.
//!
//! Nothing here touches tries, tables or CAM words: every answer comes from
//! direct wildcard-aware comparison against the stream, so these functions can
//! stand as ground truth for the compiler, engine and rule stage.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::rulespec::{Pattern, PatternId, RuleId, RuleSet, WildByte};

/// One occurrence of a pattern (or sub-pattern), offsets inclusive.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Occurrence {
    pub pattern_id: PatternId,
    pub start: usize,
    pub end: usize,
}

#[inline]
pub fn occurs_at(bytes: &[WildByte], stream: &[u8], start: usize) -> bool {
    start + bytes.len() <= stream.len()
        && bytes.iter().zip(&stream[start..]).all(|(p, &b)| p.matches(b))
}

/// All occurrences whose start lies in `starts`, unsorted.
pub fn oracle_match_starts(patterns: &[Pattern], stream: &[u8], starts: Range<usize>) -> Vec<Occurrence> {
    let mut out = Vec::new();
    for start in starts {
        for p in patterns {
            if !p.bytes.is_empty() && occurs_at(&p.bytes, stream, start) {
                out.push(Occurrence { pattern_id: p.id, start, end: start + p.len() - 1 });
            }
        }
    }
    out
}

/// Every occurrence of every pattern, sorted by `(end, pattern_id)`.
pub fn oracle_match(patterns: &[Pattern], stream: &[u8]) -> Vec<Occurrence> {
    let mut out = oracle_match_starts(patterns, stream, 0..stream.len());
    out.sort_by_key(|o| (o.end, o.pattern_id, o.start));
    out
}

/// Timing parameters the clock-gating decision depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SkipModel {
    pub depth: usize,
    pub width: usize,
    pub phase2_latency: usize,
    pub queue_depth: usize,
}

/// Executable definition of the clock-gated event set for a single lane under
/// back-pressure. See [`oracle_skip_lanes`].
pub fn oracle_skip(patterns: &[Pattern], stream: &[u8], m: &SkipModel) -> Vec<Occurrence> {
    oracle_skip_lanes(patterns, &[stream], m).pop().unwrap_or_default()
}

struct LaneReplay<'a> {
    stream: &'a [u8],
    short_by_end: Vec<Vec<(PatternId, usize)>>,
    pos: usize,
    floor: usize,
    skip_until: usize,
    fifo: VecDeque<(usize, usize)>,
    found: Vec<Occurrence>,
}

/// Clock-gated event sets for lanes sharing one suffix unit.
///
/// `patterns` are the sub-patterns the hardware sees (each at most
/// `depth + width` long). The replay works cycle by cycle on offsets:
///
/// * at the start of a cycle an idle suffix unit takes the oldest request of
///   the lowest-numbered lane with one pending, and resolves it at the end of
///   cycle `start + phase2_latency - 1` against every pattern sharing that
///   prefix;
/// * each lane consumes one byte per cycle unless it is stalled (its request
///   FIFO is full) or skipping;
/// * a pattern no longer than `depth` is reported when its last byte is
///   consumed;
/// * a longer pattern's `depth`-byte prefix raises one request per offset;
/// * a resolved match starting at `s` discards every unreported candidate of
///   that lane starting before `s + max L` and skips that lane's input up to
///   that offset. Other lanes are untouched.
pub fn oracle_skip_lanes(patterns: &[Pattern], streams: &[&[u8]], m: &SkipModel) -> Vec<Vec<Occurrence>> {
    let d = m.depth;
    let mut groups: Vec<(Vec<u8>, Vec<&Pattern>)> = Vec::new();
    let mut short = Vec::new();
    for p in patterns {
        if p.len() <= d {
            short.push(p.clone());
        } else {
            let prefix: Vec<u8> = p.bytes[..d]
                .iter()
                .map(|b| b.literal().expect("prefix bytes are literal"))
                .collect();
            match groups.iter_mut().find(|(pre, _)| *pre == prefix) {
                Some((_, members)) => members.push(p),
                None => groups.push((prefix, vec![p])),
            }
        }
    }
    let index: HashMap<&[u8], usize> = groups.iter().enumerate().map(|(i, (pre, _))| (pre.as_slice(), i)).collect();
    let mut lanes: Vec<LaneReplay> = streams
        .iter()
        .map(|&stream| {
            let mut short_by_end = vec![Vec::new(); stream.len()];
            for o in oracle_match(&short, stream) {
                short_by_end[o.end].push((o.pattern_id, o.start));
            }
            LaneReplay { stream, short_by_end, pos: 0, floor: 0, skip_until: 0, fifo: VecDeque::new(), found: Vec::new() }
        })
        .collect();

    let mut cycle = 0usize;
    // (done cycle, lane, start, group)
    let mut busy: Option<(usize, usize, usize, usize)> = None;
    loop {
        if busy.is_none() {
            if let Some(l) = lanes.iter().position(|ln| !ln.fifo.is_empty()) {
                let (s, g) = lanes[l].fifo.pop_front().expect("non-empty");
                busy = Some((cycle + m.phase2_latency - 1, l, s, g));
            }
        }
        for ln in &mut lanes {
            if ln.pos >= ln.stream.len() {
                continue;
            }
            if ln.pos < ln.skip_until {
                ln.pos += 1;
            } else if ln.fifo.len() < m.queue_depth {
                let t = ln.pos;
                for &(id, s) in &ln.short_by_end[t] {
                    if s >= ln.floor {
                        ln.found.push(Occurrence { pattern_id: id, start: s, end: t });
                    }
                }
                if t + 1 >= d {
                    if let Some(&g) = index.get(&ln.stream[t + 1 - d..=t]) {
                        let s = t + 1 - d;
                        if s >= ln.floor {
                            ln.fifo.push_back((s, g));
                        }
                    }
                }
                ln.pos += 1;
            }
        }
        if let Some((done, l, s, g)) = busy {
            if done == cycle {
                busy = None;
                let ln = &mut lanes[l];
                let mut longest = 0;
                for p in &groups[g].1 {
                    if occurs_at(&p.bytes, ln.stream, s) {
                        ln.found.push(Occurrence { pattern_id: p.id, start: s, end: s + p.len() - 1 });
                        longest = longest.max(p.len());
                    }
                }
                if longest > 0 {
                    let resume = s + longest;
                    ln.floor = ln.floor.max(resume);
                    ln.skip_until = ln.skip_until.max(resume);
                    ln.fifo.retain(|&(s2, _)| s2 >= resume);
                }
            }
        }
        let drained = lanes.iter().all(|ln| ln.pos >= ln.stream.len() && ln.fifo.is_empty());
        if drained && busy.is_none() {
            break;
        }
        cycle += 1;
    }
    lanes
        .into_iter()
        .map(|ln| {
            let mut f = ln.found;
            f.sort_by_key(|o| (o.end, o.pattern_id, o.start));
            f
        })
        .collect()
}

/// Rule completions `(rule_id, end)` by dynamic programming over full-pattern
/// occurrences, honoring each step's gap exactly. Sorted by `(end, rule_id)`.
pub fn oracle_rules(rs: &RuleSet, stream: &[u8]) -> Vec<(RuleId, usize)> {
    let occs = oracle_match(&rs.pattern_list(), stream);
    let mut by_pattern: HashMap<PatternId, Vec<Occurrence>> = HashMap::new();
    for o in occs {
        by_pattern.entry(o.pattern_id).or_default().push(o);
    }
    let mut hits = BTreeSet::new();
    for rule in &rs.rules {
        let empty = Vec::new();
        // ends reachable after completing step i
        let mut reach: BTreeSet<usize> = by_pattern
            .get(&rule.steps[0].pattern)
            .unwrap_or(&empty)
            .iter()
            .map(|o| o.end)
            .collect();
        for step in &rule.steps[1..] {
            let mut next = BTreeSet::new();
            for o in by_pattern.get(&step.pattern).unwrap_or(&empty) {
                let ok = reach
                    .iter()
                    .any(|&e| step.gap.admits(o.start as i64 - e as i64 - 1));
                if ok {
                    next.insert(o.end);
                }
            }
            reach = next;
            if reach.is_empty() {
                break;
            }
        }
        for e in reach {
            hits.insert((e, rule.id));
        }
    }
    hits.into_iter().map(|(e, r)| (r, e)).collect()
}
