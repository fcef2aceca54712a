mod common;

use camdpi::compiler::HwConfig;
use camdpi::rulespec::{gen_ruleset, gen_traffic, parse_rules, quote_pattern, RuleGenParams, TrafficSpec, WildByte};
use common::{check_case, Knobs};
use proptest::prelude::*;

/// Patterns over a tiny alphabet so occurrences overlap constantly.
fn small_rules(depth: usize, width: usize) -> impl Strategy<Value = String> {
    let pattern = prop::collection::vec((0u8..3, prop::bool::weighted(0.2)), 1..=30);
    let gap = (0u32..4, prop::option::weighted(0.7, 0u32..6));
    (prop::collection::vec(pattern, 1..12), prop::collection::vec((0usize..12, 0usize..12, gap), 0..4)).prop_map(
        move |(pats, multi)| {
            let elem = depth + width;
            let quoted: Vec<String> = pats
                .iter()
                .map(|p| {
                    let bytes: Vec<WildByte> = p
                        .iter()
                        .enumerate()
                        .map(|(i, &(c, wild))| {
                            if wild && i % elem >= depth {
                                WildByte::Any
                            } else {
                                WildByte::Literal(b'a' + c)
                            }
                        })
                        .collect();
                    quote_pattern(&bytes)
                })
                .collect();
            let mut text = String::new();
            for (i, q) in quoted.iter().enumerate() {
                text.push_str(&format!("rule {} = {q}\n", i + 1));
            }
            for (j, (x, y, (min, extra))) in multi.iter().enumerate() {
                let a = &quoted[x % quoted.len()];
                let b = &quoted[y % quoted.len()];
                let max = extra.map_or("*".to_string(), |e| (min + e).to_string());
                text.push_str(&format!("rule {} = {a} -> [{min},{max}] {b}\n", 100 + j));
            }
            text
        },
    )
}

fn stream() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop_oneof![8 => (0u8..3).prop_map(|c| b'a' + c), 1 => Just(b'x')], 1..300)
}

fn knobs() -> impl Strategy<Value = Knobs> {
    (1usize..=4, 1usize..=3).prop_map(|(queue_depth, phase2_latency)| Knobs { queue_depth, phase2_latency })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 192, ..ProptestConfig::default() })]

    #[test]
    fn engine_matches_references(
        (depth, rules) in (2usize..=4).prop_flat_map(|d| (Just(d), small_rules(d, 6))),
        a in stream(),
        b in prop::option::of(stream()),
        k in knobs(),
    ) {
        let rs = parse_rules(&rules).unwrap();
        let cfg = HwConfig { width: 6, ..HwConfig::default().with_depth(depth) };
        prop_assume!(camdpi::compiler::compile(&rs, &cfg).is_ok());
        if let Err(e) = check_case(&rs, &cfg, &a, b.as_deref(), k) {
            return Err(TestCaseError::fail(format!("{e}\nrules:\n{rules}")));
        }
    }
}

#[test]
fn generated_traffic_dual_lane() {
    let cfg = HwConfig::default();
    for seed in 0..4u64 {
        let p = RuleGenParams { wildcard_frac: 0.2, ..RuleGenParams::new(seed, 60, (2, 40)) };
        let rs = gen_ruleset(&p, &cfg).unwrap();
        let a = gen_traffic(&TrafficSpec { length: 8192, hit_rate: 0.5, seed }, &rs).unwrap();
        let b = gen_traffic(&TrafficSpec { length: 6000, hit_rate: 0.9, seed: seed + 100 }, &rs).unwrap();
        check_case(&rs, &cfg, &a.stream, Some(&b.stream), Knobs { queue_depth: 1 + seed as usize % 3, phase2_latency: 2 })
            .unwrap();
    }
}
