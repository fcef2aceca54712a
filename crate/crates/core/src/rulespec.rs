//! Rulesets: the text grammar, canonical printing, normalization, and the
//! seeded ruleset/traffic generators used by tests and sweeps.
//!
//! Grammar, one rule per line (`#` comments, blank lines ignored):
//!
//! ```text
//! rule <id> = "<pattern>" ( -> [<min>,<max>|*] "<pattern>" )*
//! ```
//!
//! Pattern escapes: `\xHH` byte, `\?` wildcard byte, `\\`, `\"`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{self, HwConfig};
use crate::oracle::{self, Occurrence};

pub type PatternId = u32;
pub type RuleId = u32;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum WildByte {
    Literal(u8),
    Any,
}

impl WildByte {
    #[inline]
    pub fn matches(self, b: u8) -> bool {
        match self {
            WildByte::Literal(v) => v == b,
            WildByte::Any => true,
        }
    }

    pub fn literal(self) -> Option<u8> {
        match self {
            WildByte::Literal(v) => Some(v),
            WildByte::Any => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pattern {
    pub id: PatternId,
    pub bytes: Vec<WildByte>,
}

impl Pattern {
    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn is_literal(&self) -> bool {
        self.bytes.iter().all(|b| matches!(b, WildByte::Literal(_)))
    }
}

/// Distance between consecutive rule steps, `start(next) - end(prev) - 1`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct GapConstraint {
    pub min: u32,
    /// `None` is unbounded.
    pub max: Option<u32>,
}

impl GapConstraint {
    pub const ADJACENT: GapConstraint = GapConstraint { min: 0, max: Some(0) };

    pub fn admits(&self, gap: i64) -> bool {
        gap >= self.min as i64 && self.max.is_none_or(|m| gap <= m as i64)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RuleStep {
    pub pattern: PatternId,
    /// Ignored on the first step.
    pub gap: GapConstraint,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub id: RuleId,
    pub steps: Vec<RuleStep>,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct RuleSet {
    pub patterns: BTreeMap<PatternId, Pattern>,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("line {line}, column {column}: unterminated pattern string")]
    Unterminated { line: usize, column: usize },
    #[error("line {line}, column {column}: empty pattern")]
    EmptyPattern { line: usize, column: usize },
    #[error("line {line}: duplicate rule id {id}")]
    DuplicateRule { line: usize, id: RuleId },
    #[error("rule {rule}: gap minimum {min} exceeds maximum {max}")]
    GapOrder { rule: RuleId, min: u32, max: u32 },
    #[error("rule {rule} references unknown pattern {pattern}")]
    DanglingPattern { rule: RuleId, pattern: PatternId },
    #[error("rule {0} has no steps")]
    EmptyRule(RuleId),
    #[error("patterns {0} and {1} have identical bytes")]
    DuplicatePattern(PatternId, PatternId),
    #[error("pattern {0} is empty")]
    EmptyPatternId(PatternId),
}

impl RuleSet {
    pub fn pattern(&self, id: PatternId) -> Option<&Pattern> {
        self.patterns.get(&id)
    }

    pub fn pattern_list(&self) -> Vec<Pattern> {
        self.patterns.values().cloned().collect()
    }

    /// Sum of pattern lengths, the "Char" denominator of the efficiency metrics.
    pub fn pattern_bytes(&self) -> usize {
        self.patterns.values().map(Pattern::len).sum()
    }

    pub fn max_pattern_len(&self) -> usize {
        self.patterns.values().map(Pattern::len).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        let mut seen: HashMap<&[WildByte], PatternId> = HashMap::new();
        for (id, p) in &self.patterns {
            if p.bytes.is_empty() {
                return Err(RuleError::EmptyPatternId(*id));
            }
            if let Some(prev) = seen.insert(&p.bytes, *id) {
                return Err(RuleError::DuplicatePattern(prev, *id));
            }
        }
        let mut rule_ids = HashSet::new();
        for r in &self.rules {
            if !rule_ids.insert(r.id) {
                return Err(RuleError::DuplicateRule { line: 0, id: r.id });
            }
            if r.steps.is_empty() {
                return Err(RuleError::EmptyRule(r.id));
            }
            for s in &r.steps {
                if !self.patterns.contains_key(&s.pattern) {
                    return Err(RuleError::DanglingPattern { rule: r.id, pattern: s.pattern });
                }
                if let Some(max) = s.gap.max {
                    if s.gap.min > max {
                        return Err(RuleError::GapOrder { rule: r.id, min: s.gap.min, max });
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse_rules(rs.to_text())` reproduces a
    /// normalized set exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            let _ = write!(out, "rule {} =", r.id);
            for (i, s) in r.steps.iter().enumerate() {
                if i > 0 {
                    let max = s.gap.max.map_or("*".to_string(), |m| m.to_string());
                    let _ = write!(out, " -> [{},{}]", s.gap.min, max);
                }
                out.push(' ');
                out.push_str(&quote_pattern(&self.patterns[&s.pattern].bytes));
            }
            out.push('\n');
        }
        out
    }
}

pub fn quote_pattern(bytes: &[WildByte]) -> String {
    let mut s = String::with_capacity(bytes.len() + 2);
    s.push('"');
    for b in bytes {
        match *b {
            WildByte::Any => s.push_str("\\?"),
            WildByte::Literal(b'"') => s.push_str("\\\""),
            WildByte::Literal(b'\\') => s.push_str("\\\\"),
            WildByte::Literal(v) if (0x20..0x7f).contains(&v) => s.push(v as char),
            WildByte::Literal(v) => {
                let _ = write!(s, "\\x{:02X}", v);
            }
        }
    }
    s.push('"');
    s
}

struct LineCursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> LineCursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        LineCursor { chars: src.chars().collect(), pos: 0, line, _src: src }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn err(&self, msg: impl Into<String>) -> RuleError {
        RuleError::Syntax { line: self.line, column: self.col(), msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        matches!(self.peek(), None | Some('#'))
    }

    fn expect(&mut self, token: &str) -> Result<(), RuleError> {
        self.skip_ws();
        for (i, want) in token.chars().enumerate() {
            if self.chars.get(self.pos + i) != Some(&want) {
                return Err(self.err(format!("expected `{token}`")));
            }
        }
        self.pos += token.chars().count();
        Ok(())
    }

    fn number(&mut self) -> Result<u32, RuleError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a decimal number"));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse().map_err(|_| RuleError::Syntax {
            line: self.line,
            column: start + 1,
            msg: format!("number `{text}` out of range"),
        })
    }

    fn pattern(&mut self) -> Result<Vec<WildByte>, RuleError> {
        self.skip_ws();
        let open_col = self.col();
        if self.peek() != Some('"') {
            return Err(self.err("expected a double-quoted pattern"));
        }
        self.pos += 1;
        let mut bytes = Vec::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(RuleError::Unterminated { line: self.line, column: open_col });
            };
            self.pos += 1;
            match c {
                '"' => break,
                '\\' => {
                    let Some(e) = self.peek() else {
                        return Err(RuleError::Unterminated { line: self.line, column: open_col });
                    };
                    self.pos += 1;
                    match e {
                        '?' => bytes.push(WildByte::Any),
                        '\\' => bytes.push(WildByte::Literal(b'\\')),
                        '"' => bytes.push(WildByte::Literal(b'"')),
                        'x' => {
                            let hex: String = self.chars.iter().skip(self.pos).take(2).collect();
                            let v = (hex.len() == 2)
                                .then(|| u8::from_str_radix(&hex, 16).ok())
                                .flatten()
                                .ok_or_else(|| self.err("`\\x` needs two hex digits"))?;
                            self.pos += 2;
                            bytes.push(WildByte::Literal(v));
                        }
                        other => {
                            self.pos -= 1;
                            return Err(self.err(format!("unknown escape `\\{other}`")));
                        }
                    }
                }
                c if c.is_ascii() => bytes.push(WildByte::Literal(c as u8)),
                _ => {
                    self.pos -= 1;
                    return Err(self.err("non-ASCII character in pattern; use \\xHH"));
                }
            }
        }
        if bytes.is_empty() {
            return Err(RuleError::EmptyPattern { line: self.line, column: open_col });
        }
        Ok(bytes)
    }
}

/// Parses a rule file. Pattern ids are assigned densely in order of first
/// appearance; identical byte sequences share one id.
pub fn parse_rules(text: &str) -> Result<RuleSet, RuleError> {
    let mut rs = RuleSet::default();
    let mut by_bytes: HashMap<Vec<WildByte>, PatternId> = HashMap::new();
    let mut rule_ids = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut cur = LineCursor::new(raw, line_no);
        if cur.at_end() {
            continue;
        }
        cur.expect("rule")?;
        if !cur.peek().is_some_and(char::is_whitespace) {
            return Err(cur.err("expected whitespace after `rule`"));
        }
        let id = cur.number()?;
        cur.expect("=")?;
        let mut steps = Vec::new();
        let mut gap = GapConstraint::default();
        loop {
            let bytes = cur.pattern()?;
            let next_id = by_bytes.len() as PatternId;
            let pid = *by_bytes.entry(bytes.clone()).or_insert_with(|| {
                rs.patterns.insert(next_id, Pattern { id: next_id, bytes });
                next_id
            });
            steps.push(RuleStep { pattern: pid, gap });
            if cur.at_end() {
                break;
            }
            cur.expect("->")?;
            cur.expect("[")?;
            let min = cur.number()?;
            cur.expect(",")?;
            cur.skip_ws();
            let max = if cur.peek() == Some('*') {
                cur.pos += 1;
                None
            } else {
                Some(cur.number()?)
            };
            cur.expect("]")?;
            if let Some(m) = max {
                if min > m {
                    return Err(RuleError::GapOrder { rule: id, min, max: m });
                }
            }
            gap = GapConstraint { min, max };
        }
        if !rule_ids.insert(id) {
            return Err(RuleError::DuplicateRule { line: line_no, id });
        }
        rs.rules.push(Rule { id, steps });
    }
    Ok(rs)
}

/// Merges identical byte sequences and renumbers patterns densely in order of
/// first appearance across the rules; unreferenced patterns follow in their
/// previous id order. Idempotent.
pub fn normalize_ruleset(rs: &RuleSet) -> RuleSet {
    let mut out = RuleSet::default();
    let mut by_bytes: HashMap<&[WildByte], PatternId> = HashMap::new();
    let mut remap: HashMap<PatternId, PatternId> = HashMap::new();

    let mut visit = |old: PatternId, out: &mut RuleSet| -> PatternId {
        if let Some(&n) = remap.get(&old) {
            return n;
        }
        let bytes = &rs.patterns[&old].bytes;
        let next_id = out.patterns.len() as PatternId;
        let n = *by_bytes.entry(bytes.as_slice()).or_insert_with(|| {
            out.patterns.insert(next_id, Pattern { id: next_id, bytes: bytes.clone() });
            next_id
        });
        remap.insert(old, n);
        n
    };

    for r in &rs.rules {
        let steps = r
            .steps
            .iter()
            .map(|s| RuleStep { pattern: visit(s.pattern, &mut out), gap: s.gap })
            .collect();
        out.rules.push(Rule { id: r.id, steps });
    }
    for &old in rs.patterns.keys() {
        visit(old, &mut out);
    }
    out
}

/// Knobs for [`gen_ruleset`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleGenParams {
    pub seed: u64,
    pub n_patterns: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub wildcard_frac: f64,
    pub multi_rule_frac: f64,
}

impl RuleGenParams {
    pub fn new(seed: u64, n_patterns: usize, len: (usize, usize)) -> Self {
        RuleGenParams {
            seed,
            n_patterns,
            min_len: len.0,
            max_len: len.1,
            wildcard_frac: 0.1,
            multi_rule_frac: 0.2,
        }
    }

    /// The 240-pattern ruleset the energy and memory figures are reported on.
    pub fn desk() -> Self {
        RuleGenParams::new(7, 240, (4, 24))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("invalid generator parameter: {0}")]
    Param(String),
    #[error("no ruleset of this shape fits the table capacity: {0}")]
    Infeasible(String),
    #[error("hit rate {hit_rate} unreachable for a {length}-byte stream")]
    Unreachable { hit_rate: f64, length: usize },
    #[error("could not repair accidental occurrence of pattern {pattern} at {start} after {attempts} attempts")]
    RepairFailed { pattern: PatternId, start: usize, attempts: usize },
}

const RETRIES_PER_SIZE: u64 = 8;

/// Seeded ruleset generator. Wildcards only land outside every chain
/// element's literal prefix region. The result always compiles under `cfg`:
/// failed attempts are re-drawn with heavier prefix sharing and, failing
/// that, the pattern count is trimmed.
pub fn gen_ruleset(p: &RuleGenParams, cfg: &HwConfig) -> Result<RuleSet, GenError> {
    if p.n_patterns == 0 || p.min_len == 0 || p.min_len > p.max_len {
        return Err(GenError::Param(format!(
            "need n_patterns > 0 and 1 <= min_len <= max_len, got n={} len={}..{}",
            p.n_patterns, p.min_len, p.max_len
        )));
    }
    if !(0.0..=1.0).contains(&p.wildcard_frac) || !(0.0..=1.0).contains(&p.multi_rule_frac) {
        return Err(GenError::Param("fractions must lie in [0,1]".into()));
    }
    let mut n = p.n_patterns;
    let mut last_err = String::new();
    while n > 0 {
        for attempt in 0..RETRIES_PER_SIZE {
            let share = 0.7 + 0.035 * attempt as f64;
            let seed = p.seed ^ (attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)) ^ ((p.n_patterns - n) as u64) << 32;
            let rs = draw_ruleset(p, n, share, seed, cfg);
            match compiler::compile(&rs, cfg) {
                Ok(_) => return Ok(rs),
                Err(e) => last_err = e.to_string(),
            }
        }
        n = n * 9 / 10;
    }
    Err(GenError::Infeasible(last_err))
}

fn draw_byte(rng: &mut ChaCha8Rng) -> u8 {
    // mostly printable text with some binary content
    if rng.gen_bool(0.85) {
        rng.gen_range(0x20..0x7f)
    } else {
        rng.gen()
    }
}

fn draw_ruleset(p: &RuleGenParams, n: usize, share: f64, seed: u64, cfg: &HwConfig) -> RuleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = cfg.depth;
    let element = cfg.depth + cfg.width;
    let mut seen: HashSet<Vec<WildByte>> = HashSet::new();
    let mut pats: Vec<Vec<WildByte>> = Vec::with_capacity(n);

    while pats.len() < n {
        let mut drawn = None;
        for _ in 0..100 {
            let len = rng.gen_range(p.min_len..=p.max_len);
            let mut bytes = Vec::with_capacity(len);
            if !pats.is_empty() && rng.gen_bool(share) {
                let donor = &pats[rng.gen_range(0..pats.len())];
                let k = rng.gen_range(1..=d.min(len).min(donor.len()));
                bytes.extend_from_slice(&donor[..k]);
            }
            while bytes.len() < len {
                let pos = bytes.len();
                if pos % element >= d && rng.gen_bool(p.wildcard_frac) {
                    bytes.push(WildByte::Any);
                } else {
                    bytes.push(WildByte::Literal(draw_byte(&mut rng)));
                }
            }
            if !seen.contains(&bytes) {
                drawn = Some(bytes);
                break;
            }
        }
        let Some(bytes) = drawn else { break };
        seen.insert(bytes.clone());
        pats.push(bytes);
    }

    let mut rs = RuleSet::default();
    for (i, b) in pats.into_iter().enumerate() {
        rs.patterns.insert(i as PatternId, Pattern { id: i as PatternId, bytes: b });
    }
    let ids: Vec<PatternId> = rs.patterns.keys().copied().collect();
    let mut i = 0;
    let mut rule_id: RuleId = 1;
    while i < ids.len() {
        let n_steps = if rng.gen_bool(p.multi_rule_frac) { rng.gen_range(2..=3) } else { 1 };
        let mut steps = Vec::new();
        for j in 0..n_steps.min(ids.len() - i) {
            let gap = if j == 0 {
                GapConstraint::default()
            } else {
                let min = rng.gen_range(0..8);
                let max = (!rng.gen_bool(0.25)).then(|| min + rng.gen_range(0..48));
                GapConstraint { min, max }
            };
            steps.push(RuleStep { pattern: ids[i + j], gap });
        }
        i += steps.len();
        rs.rules.push(Rule { id: rule_id, steps });
        rule_id += 1;
    }
    normalize_ruleset(&rs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    pub length: usize,
    pub hit_rate: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Traffic {
    pub stream: Vec<u8>,
    /// Every pattern occurrence in `stream`, sorted by `(end, pattern_id)`.
    pub truth: Vec<Occurrence>,
    /// Bytes covered by deliberately inserted occurrences.
    pub inserted_bytes: usize,
}

impl Traffic {
    pub fn covered_fraction(&self) -> f64 {
        if self.stream.is_empty() {
            0.0
        } else {
            self.inserted_bytes as f64 / self.stream.len() as f64
        }
    }

    pub fn truth_csv(&self) -> String {
        let mut out = String::from("pattern_id,start,end\n");
        for o in &self.truth {
            let _ = writeln!(out, "{},{},{}", o.pattern_id, o.start, o.end);
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ByteKind {
    Filler,
    Inserted,
    WildFill,
}

const REPAIR_ATTEMPTS: usize = 1000;

/// Random traffic with a controlled fraction of bytes inside inserted pattern
/// occurrences. Filler is uniform and repaired until every occurrence in the
/// stream is listed in `truth`; occurrences made purely of inserted literal
/// bytes cannot be repaired and are recorded as found.
pub fn gen_traffic(spec: &TrafficSpec, rs: &RuleSet) -> Result<Traffic, GenError> {
    if !(0.0..=1.0).contains(&spec.hit_rate) {
        return Err(GenError::Param(format!("hit rate {} outside [0,1]", spec.hit_rate)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let patterns = rs.pattern_list();
    let target = (spec.hit_rate * spec.length as f64).round() as usize;
    if target > 0 {
        let shortest = patterns.iter().map(Pattern::len).min();
        if shortest.is_none_or(|s| s > spec.length) {
            return Err(GenError::Unreachable { hit_rate: spec.hit_rate, length: spec.length });
        }
    }

    let mut chosen: Vec<usize> = Vec::new();
    let mut covered = 0usize;
    let mut misses = 0;
    while covered < target && misses < 256 {
        let idx = rng.gen_range(0..patterns.len());
        let len = patterns[idx].len();
        let remaining = target - covered;
        if covered + len > spec.length {
            misses += 1;
            continue;
        }
        if len <= remaining || len - remaining < remaining {
            chosen.push(idx);
            covered += len;
        } else {
            misses += 1;
        }
    }

    // split the filler into len(chosen)+1 gaps
    let filler = spec.length - covered;
    let mut cuts: Vec<usize> = (0..chosen.len()).map(|_| rng.gen_range(0..=filler)).collect();
    cuts.sort_unstable();
    chosen.shuffle(&mut rng);

    let mut stream = Vec::with_capacity(spec.length);
    let mut kind = Vec::with_capacity(spec.length);
    let mut inserted: Vec<Occurrence> = Vec::with_capacity(chosen.len());
    let mut prev_cut = 0;
    for (k, &idx) in chosen.iter().enumerate() {
        for _ in prev_cut..cuts[k] {
            stream.push(rng.gen());
            kind.push(ByteKind::Filler);
        }
        prev_cut = cuts[k];
        let start = stream.len();
        for b in &patterns[idx].bytes {
            match b {
                WildByte::Literal(v) => {
                    stream.push(*v);
                    kind.push(ByteKind::Inserted);
                }
                WildByte::Any => {
                    stream.push(rng.gen());
                    kind.push(ByteKind::WildFill);
                }
            }
        }
        inserted.push(Occurrence {
            pattern_id: patterns[idx].id,
            start,
            end: stream.len() - 1,
        });
    }
    while stream.len() < spec.length {
        stream.push(rng.gen());
        kind.push(ByteKind::Filler);
    }

    let mut truth: HashSet<Occurrence> = inserted.iter().copied().collect();
    let mut attempts: HashMap<(PatternId, usize), usize> = HashMap::new();
    let max_len = rs.max_pattern_len().max(1);
    let mut pending = oracle::oracle_match(&patterns, &stream);
    loop {
        let accidental: Vec<Occurrence> =
            pending.into_iter().filter(|o| !truth.contains(o)).collect();
        if accidental.is_empty() {
            break;
        }
        let mut touched = Vec::new();
        for occ in accidental {
            // only bytes under a literal of this pattern can break the occurrence
            let bytes = &patterns.iter().find(|p| p.id == occ.pattern_id).expect("known pattern").bytes;
            let span = occ.start..=occ.end;
            let pick = |want: ByteKind| -> Vec<usize> {
                span.clone()
                    .filter(|&i| kind[i] == want && matches!(bytes[i - occ.start], WildByte::Literal(_)))
                    .collect()
            };
            let mut candidates = pick(ByteKind::Filler);
            if candidates.is_empty() {
                candidates = pick(ByteKind::WildFill);
            }
            if candidates.is_empty() {
                truth.insert(occ);
                continue;
            }
            let n = attempts.entry((occ.pattern_id, occ.start)).or_default();
            *n += 1;
            if *n > REPAIR_ATTEMPTS {
                return Err(GenError::RepairFailed {
                    pattern: occ.pattern_id,
                    start: occ.start,
                    attempts: REPAIR_ATTEMPTS,
                });
            }
            let pos = candidates[rng.gen_range(0..candidates.len())];
            let old = stream[pos];
            let mut fresh = rng.gen::<u8>();
            while fresh == old {
                fresh = rng.gen();
            }
            stream[pos] = fresh;
            touched.push(pos);
        }
        // the changed bytes can only create or destroy occurrences that
        // overlap them
        touched.sort_unstable();
        touched.dedup();
        truth.retain(|o| stream_has(&patterns, &stream, o));
        let mut rescan: Vec<Occurrence> = Vec::new();
        let mut lo_done = 0usize;
        for &pos in &touched {
            let lo = pos.saturating_sub(max_len - 1).max(lo_done);
            let hi = (pos + 1).min(stream.len());
            if lo < hi {
                rescan.extend(oracle::oracle_match_starts(&patterns, &stream, lo..hi));
            }
            lo_done = lo_done.max(hi);
        }
        pending = rescan;
    }

    let mut truth: Vec<Occurrence> = truth.into_iter().collect();
    truth.sort_by_key(|o| (o.end, o.pattern_id, o.start));
    Ok(Traffic { stream, truth, inserted_bytes: covered })
}

fn stream_has(patterns: &[Pattern], stream: &[u8], o: &Occurrence) -> bool {
    patterns
        .iter()
        .find(|p| p.id == o.pattern_id)
        .is_some_and(|p| oracle::occurs_at(&p.bytes, stream, o.start))
}
