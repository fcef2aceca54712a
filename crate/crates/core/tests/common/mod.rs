#![allow(dead_code)]

use camdpi::compiler::{compile, Compiled, HwConfig};
use camdpi::engine::{lane_occurrences, Engine, EngineConfig, Lane};
use camdpi::oracle::{oracle_match, oracle_rules, oracle_skip_lanes, Occurrence, SkipModel};
use camdpi::phase3::{build_rule_table, hit_pairs, Phase3};
use camdpi::rulespec::{Pattern, RuleSet};

/// Engine settings one equivalence check runs under.
#[derive(Clone, Copy, Debug)]
pub struct Knobs {
    pub queue_depth: usize,
    pub phase2_latency: usize,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs { queue_depth: 4, phase2_latency: 2 }
    }
}

pub fn sub_patterns(c: &Compiled) -> Vec<Pattern> {
    c.subs.iter().map(|s| s.as_pattern()).collect()
}

fn first_diff(got: &[Occurrence], want: &[Occurrence]) -> String {
    let i = got.iter().zip(want).position(|(a, b)| a != b).unwrap_or(got.len().min(want.len()));
    format!(
        "{} events vs {} expected; first difference at #{i}: got {:?}, expected {:?}",
        got.len(),
        want.len(),
        got.get(i),
        want.get(i)
    )
}

/// Runs both gating modes over one or two lanes and compares every output
/// against the brute-force references. Returns a description of the first
/// mismatch.
pub fn check_case(rs: &RuleSet, cfg: &HwConfig, a: &[u8], b: Option<&[u8]>, k: Knobs) -> Result<(), String> {
    let c = compile(rs, cfg).map_err(|e| format!("compile: {e}"))?;
    let subs = sub_patterns(&c);
    let table = build_rule_table(rs, &c.plan, &c.subs).map_err(|e| e.to_string())?;
    let streams: Vec<&[u8]> = std::iter::once(a).chain(b).collect();
    let lanes = [Lane::A, Lane::B];
    let base = EngineConfig {
        dual_port: b.is_some(),
        queue_depth: k.queue_depth,
        phase2_latency: k.phase2_latency,
        ..EngineConfig::new(c.image.clone())
    };

    // gating off
    let mut eng = Engine::load(EngineConfig { clock_gating: false, ..base.clone() }).map_err(|e| e.to_string())?;
    let (events, stats) = eng.run_stream(a, b).map_err(|e| e.to_string())?;
    if stats.dropped_requests != 0 {
        return Err("requests dropped under back-pressure".into());
    }
    let d = cfg.depth as u64;
    let searches = stats.pe_searches_port_a + stats.pe_searches_port_b;
    if searches > (d - 1) * stats.cycles * streams.len() as u64 {
        return Err("more than one search per stage per lane per cycle".into());
    }
    for w in eng.issue_log().windows(2) {
        if w[1].0 < w[0].0 + k.phase2_latency as u64 {
            return Err(format!("Phase-2 searches overlap at cycles {} and {}", w[0].0, w[1].0));
        }
    }
    if events.windows(2).any(|w| w[1].cycle_reported < w[0].cycle_reported) {
        return Err("events out of cycle order".into());
    }
    for (i, s) in streams.iter().enumerate() {
        let got = lane_occurrences(&events, lanes[i]);
        let want = oracle_match(&subs, s);
        if got != want {
            return Err(format!("lane {:?} gating off: {}", lanes[i], first_diff(&got, &want)));
        }
        let mut p3 = Phase3::new(&table);
        let lane_events: Vec<_> = events.iter().filter(|e| e.lane == lanes[i]).copied().collect();
        let hits = hit_pairs(&p3.process(&lane_events).map_err(|e| e.to_string())?);
        let want_rules = oracle_rules(rs, s);
        if hits != want_rules {
            return Err(format!("lane {:?} rule hits: got {} expected {}; {:?} vs {:?}", lanes[i], hits.len(), want_rules.len(), hits.iter().take(5).collect::<Vec<_>>(), want_rules.iter().take(5).collect::<Vec<_>>()));
        }
    }

    // gating on
    let mut eng = Engine::load(EngineConfig { clock_gating: true, ..base }).map_err(|e| e.to_string())?;
    let (events, _) = eng.run_stream(a, b).map_err(|e| e.to_string())?;
    let model = SkipModel { depth: cfg.depth, width: cfg.width, phase2_latency: k.phase2_latency, queue_depth: k.queue_depth };
    let want = oracle_skip_lanes(&subs, &streams, &model);
    for (i, w) in want.iter().enumerate() {
        let got = lane_occurrences(&events, lanes[i]);
        if &got != w {
            return Err(format!("lane {:?} gating on: {}", lanes[i], first_diff(&got, w)));
        }
    }
    Ok(())
}
