//! Rule completion over match events: a rule table plus a partial-hit table.
//!
//! Each rule expands into a flat list of sub-pattern steps. A long pattern
//! contributes its chain elements joined by zero gaps. A partial hit records
//! the window of start offsets the next step may begin at.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{ChainPlan, SubId, SubPattern};
use crate::engine::MatchEvent;
use crate::rulespec::{GapConstraint, RuleId, RuleSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Phase3Error {
    #[error("rule {rule} references pattern {pattern} with no sub-patterns")]
    Dangling { rule: RuleId, pattern: u32 },
    #[error("sub-pattern {0} unknown")]
    UnknownSub(SubId),
    #[error("event ending at {got} arrived after one ending at {seen}")]
    OutOfOrder { seen: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableStep {
    pub sub: SubId,
    /// Distance from the previous step's end; unused on step 0.
    pub gap: GapConstraint,
    pub len: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleTable {
    pub rules: Vec<(RuleId, Vec<TableStep>)>,
    /// Sub-pattern to every `(rule index, step)` it serves.
    pub by_sub: HashMap<SubId, Vec<(usize, usize)>>,
}

impl RuleTable {
    pub fn serving(&self, sub: SubId) -> &[(usize, usize)] {
        self.by_sub.get(&sub).map_or(&[], Vec::as_slice)
    }
}

pub fn build_rule_table(rs: &RuleSet, plan: &ChainPlan, subs: &[SubPattern]) -> Result<RuleTable, Phase3Error> {
    let mut table = RuleTable::default();
    for rule in &rs.rules {
        let mut steps = Vec::new();
        for st in &rule.steps {
            let chain = plan
                .chains
                .get(&st.pattern)
                .filter(|c| !c.is_empty())
                .ok_or(Phase3Error::Dangling { rule: rule.id, pattern: st.pattern })?;
            for (k, &sub) in chain.iter().enumerate() {
                let sp = subs.get(sub as usize).ok_or(Phase3Error::UnknownSub(sub))?;
                let gap = if k == 0 { st.gap } else { GapConstraint::ADJACENT };
                steps.push(TableStep { sub, gap, len: sp.total_len() });
            }
        }
        let idx = table.rules.len();
        for (k, s) in steps.iter().enumerate() {
            table.by_sub.entry(s.sub).or_default().push((idx, k));
        }
        table.rules.push((rule.id, steps));
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialHit {
    pub rule: usize,
    pub next_step: usize,
    pub min_start: usize,
    /// `None` is unbounded.
    pub max_start: Option<usize>,
    pub created_at: usize,
    /// `(sub, start, end)` of the events matched so far.
    pub trail: Vec<(SubId, usize, usize)>,
}

impl PartialHit {
    fn admits(&self, start: usize) -> bool {
        start >= self.min_start && self.max_start.is_none_or(|m| start <= m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleHit {
    pub rule_id: RuleId,
    pub end: usize,
    pub events: Vec<(SubId, usize, usize)>,
}

/// Partial-hit table of one flow.
#[derive(Clone, Debug)]
pub struct Phase3<'t> {
    table: &'t RuleTable,
    bounded: HashMap<(usize, usize), Vec<PartialHit>>,
    /// One entry per `(rule, step)`: the one with the smallest `min_start`
    /// admits everything the others would.
    unbounded: HashMap<(usize, usize), PartialHit>,
    last_end: Option<usize>,
    reported: HashSet<usize>,
}

impl<'t> Phase3<'t> {
    pub fn new(table: &'t RuleTable) -> Self {
        Phase3 { table, bounded: HashMap::new(), unbounded: HashMap::new(), last_end: None, reported: HashSet::new() }
    }

    pub fn reset_flow(&mut self) {
        self.bounded.clear();
        self.unbounded.clear();
        self.last_end = None;
        self.reported.clear();
    }

    /// Live partial hits.
    pub fn pending(&self) -> usize {
        self.bounded.values().map(Vec::len).sum::<usize>() + self.unbounded.len()
    }

    /// A bounded window is dead once no later event for that step could
    /// start inside it. Later events end no earlier than `end`, and the step's
    /// length is fixed.
    fn prune(list: &mut Vec<PartialHit>, len: usize, end: usize) {
        list.retain(|p| p.max_start.is_none_or(|m| m + len > end));
    }

    fn insert(&mut self, p: PartialHit, end: usize) {
        let key = (p.rule, p.next_step);
        if p.max_start.is_none() {
            match self.unbounded.get(&key) {
                Some(old) if old.min_start <= p.min_start => {}
                _ => {
                    self.unbounded.insert(key, p);
                }
            }
            return;
        }
        let len = self.table.rules[p.rule].1[p.next_step].len;
        let list = self.bounded.entry(key).or_default();
        Self::prune(list, len, end);
        if !list.iter().any(|q| q.min_start == p.min_start && q.max_start == p.max_start) {
            list.push(p);
        }
    }

    pub fn on_match(&mut self, ev: &MatchEvent) -> Result<Vec<RuleHit>, Phase3Error> {
        if let Some(seen) = self.last_end {
            if ev.end < seen {
                return Err(Phase3Error::OutOfOrder { seen, got: ev.end });
            }
            if ev.end > seen {
                self.reported.clear();
            }
        }
        self.last_end = Some(ev.end);
        let table = self.table;
        let me = (ev.sub_pattern_id, ev.start, ev.end);
        let mut hits = Vec::new();
        for &(r, k) in table.serving(ev.sub_pattern_id) {
            let steps = &table.rules[r].1;
            let trail = if k == 0 {
                Some(vec![me])
            } else {
                let key = (r, k);
                let from_unbounded = self.unbounded.get(&key).filter(|p| p.admits(ev.start)).map(|p| p.trail.clone());
                from_unbounded.or_else(|| {
                    let list = self.bounded.get_mut(&key)?;
                    Self::prune(list, steps[k].len, ev.end);
                    list.iter().find(|p| p.admits(ev.start)).map(|p| p.trail.clone())
                })
                .map(|mut t| {
                    t.push(me);
                    t
                })
            };
            let Some(trail) = trail else { continue };
            if k + 1 == steps.len() {
                if self.reported.insert(r) {
                    hits.push(RuleHit { rule_id: table.rules[r].0, end: ev.end, events: trail });
                }
                continue;
            }
            let g = steps[k + 1].gap;
            let base = ev.end + 1;
            self.insert(
                PartialHit {
                    rule: r,
                    next_step: k + 1,
                    min_start: base + g.min as usize,
                    max_start: g.max.map(|m| base + m as usize),
                    created_at: ev.end,
                    trail,
                },
                ev.end,
            );
        }
        Ok(hits)
    }

    /// Sorts one lane's events by `(end, sub_pattern_id, start)` and feeds them.
    pub fn process(&mut self, events: &[MatchEvent]) -> Result<Vec<RuleHit>, Phase3Error> {
        let mut evs: Vec<&MatchEvent> = events.iter().collect();
        evs.sort_by_key(|e| (e.end, e.sub_pattern_id, e.start));
        let mut out = Vec::new();
        for e in evs {
            out.extend(self.on_match(e)?);
        }
        Ok(out)
    }
}

/// `(rule_id, end)` pairs sorted like the reference output.
pub fn hit_pairs(hits: &[RuleHit]) -> Vec<(RuleId, usize)> {
    let set: BTreeMap<(usize, RuleId), ()> = hits.iter().map(|h| ((h.end, h.rule_id), ())).collect();
    set.into_keys().map(|(e, r)| (r, e)).collect()
}

/// `rule_id,end_offset`
pub fn rule_hits_csv(hits: &[RuleHit]) -> String {
    let mut s = String::from("rule_id,end_offset\n");
    for h in hits {
        s.push_str(&format!("{},{}\n", h.rule_id, h.end));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, HwConfig};
    use crate::engine::Lane;
    use crate::rulespec::parse_rules;

    fn setup(text: &str) -> (RuleSet, crate::compiler::Compiled) {
        let rs = parse_rules(text).unwrap();
        let c = compile(&rs, &HwConfig::default()).unwrap();
        (rs, c)
    }

    fn ev(sub: SubId, start: usize, end: usize) -> MatchEvent {
        MatchEvent { lane: Lane::A, sub_pattern_id: sub, start, end, cycle_reported: 0 }
    }

    #[test]
    fn table_shapes() {
        let (rs, c) = setup("rule 1 = \"ab\"\nrule 2 = \"ab\" -> [2,10] \"cd\"");
        let t = build_rule_table(&rs, &c.plan, &c.subs).unwrap();
        assert_eq!(t.rules[0].1.len(), 1);
        assert_eq!(t.rules[1].1[1].gap, GapConstraint { min: 2, max: Some(10) });
        let long = "x".repeat(50);
        let (rs, c) = setup(&format!("rule 1 = \"{long}\""));
        let t = build_rule_table(&rs, &c.plan, &c.subs).unwrap();
        let steps = &t.rules[0].1;
        assert_eq!(steps.len(), 3);
        assert!(steps[1..].iter().all(|s| s.gap == GapConstraint::ADJACENT));
        assert_eq!(steps.iter().map(|s| s.len).collect::<Vec<_>>(), vec![24, 24, 2]);
    }

    #[test]
    fn gap_windows() {
        let (rs, c) = setup("rule 1 = \"ab\" -> [0,*] \"cd\"");
        let t = build_rule_table(&rs, &c.plan, &c.subs).unwrap();
        let mut p = Phase3::new(&t);
        assert!(p.on_match(&ev(0, 1, 2)).unwrap().is_empty());
        let hits = p.on_match(&ev(1, 5, 6)).unwrap();
        assert_eq!(hit_pairs(&hits), vec![(1, 6)]);

        let (rs, c) = setup("rule 1 = \"ab\" -> [3,3] \"cd\"");
        let t = build_rule_table(&rs, &c.plan, &c.subs).unwrap();
        let mut p = Phase3::new(&t);
        p.on_match(&ev(0, 1, 2)).unwrap();
        assert!(p.on_match(&ev(1, 5, 6)).unwrap().is_empty());
    }

    #[test]
    fn single_step_is_immediate() {
        let (rs, c) = setup("rule 9 = \"ab\"");
        let t = build_rule_table(&rs, &c.plan, &c.subs).unwrap();
        let mut p = Phase3::new(&t);
        let h = p.on_match(&ev(0, 4, 5)).unwrap();
        assert_eq!(h, vec![RuleHit { rule_id: 9, end: 5, events: vec![(0, 4, 5)] }]);
    }

    #[test]
    fn out_of_order_rejected() {
        let (rs, c) = setup("rule 9 = \"ab\"");
        let t = build_rule_table(&rs, &c.plan, &c.subs).unwrap();
        let mut p = Phase3::new(&t);
        p.on_match(&ev(0, 4, 5)).unwrap();
        assert_eq!(p.on_match(&ev(0, 0, 1)), Err(Phase3Error::OutOfOrder { seen: 5, got: 1 }));
    }

    #[test]
    fn reset_forgets_progress() {
        let (rs, c) = setup("rule 1 = \"ab\" -> [0,*] \"cd\"");
        let t = build_rule_table(&rs, &c.plan, &c.subs).unwrap();
        let mut p = Phase3::new(&t);
        p.reset_flow();
        assert_eq!(p.pending(), 0);
        p.on_match(&ev(0, 1, 2)).unwrap();
        assert_eq!(p.pending(), 1);
        p.reset_flow();
        assert!(p.on_match(&ev(1, 5, 6)).unwrap().is_empty());
    }

    #[test]
    fn bounded_windows_pruned() {
        let (rs, c) = setup("rule 1 = \"ab\" -> [0,2] \"cd\"");
        let t = build_rule_table(&rs, &c.plan, &c.subs).unwrap();
        let mut p = Phase3::new(&t);
        for i in 0..100 {
            p.on_match(&ev(0, 10 * i, 10 * i + 1)).unwrap();
        }
        assert!(p.pending() <= 2);
    }

    #[test]
    fn csv() {
        let h = [RuleHit { rule_id: 3, end: 7, events: vec![] }];
        assert_eq!(rule_hits_csv(&h), "rule_id,end_offset\n3,7\n");
    }
}
