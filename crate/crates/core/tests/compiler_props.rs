use camdpi::camcore::{decode_range, EnableMask, EnableRange, Port, SearchKey};
use camdpi::compiler::{build_conventional_ac, compile, HwConfig, Route, TableImage};
use camdpi::rulespec::{gen_ruleset, parse_rules, RuleGenParams};
use proptest::prelude::*;

fn literal_rules() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::collection::vec(b'a'..=b'h', 1..30), 1..40).prop_map(|ps| {
        ps.iter()
            .enumerate()
            .map(|(i, p)| format!("rule {} = \"{}\"\n", i + 1, String::from_utf8(p.clone()).unwrap()))
            .collect()
    })
}

proptest! {
    #[test]
    fn image_invariants(text in literal_rules(), depth in 2usize..=5) {
        let rs = parse_rules(&text).unwrap();
        let cfg = HwConfig::default().with_depth(depth);
        let Ok(c) = compile(&rs, &cfg) else { return Ok(()) };
        prop_assert_eq!(c.stats.n_backward, 0);
        prop_assert_eq!(c.stats.n_forward, c.stats.n_states);
        let img = &c.image;
        img.validate().unwrap();
        // ranges of different parents never overlap
        let mut claimed: Vec<(usize, usize, usize)> = Vec::new();
        let routes = img.stage1.iter().flatten().chain(img.pes.iter().flatten().map(|r| &r.next)).filter_map(|n| n.route);
        for r in routes {
            if let Route::Pe { pe, dn, up } = r {
                for &(p, d, u) in &claimed {
                    prop_assert!(p != pe || up < d || u < dn);
                }
                claimed.push((pe, dn, up));
            }
        }
        let again = compile(&rs, &cfg).unwrap().image;
        prop_assert_eq!(img.to_json(), again.to_json());
        prop_assert_eq!(&TableImage::from_json(&img.to_json()).unwrap(), img);
    }

    #[test]
    fn monotone_gating(dn1 in 0usize..64, len1 in 1usize..64, widen in 0usize..64, c in any::<u8>()) {
        let cb = camdpi::fixed1s::Codebook::canonical();
        let rows: Vec<_> = (0..64u8).map(|i| cb.code(i.wrapping_mul(7))).collect();
        let arr = camdpi::camcore::CamArray::narrow(rows, 64);
        let up1 = (dn1 + len1 - 1).min(63);
        let (m1, _) = decode_range(EnableRange { dn: dn1, up: up1 }, 64).unwrap();
        let m2 = EnableMask { dn: dn1.saturating_sub(widen), up: (up1 + widen).min(63) };
        prop_assert!(m1.is_subset_of(&m2));
        let (h1, a1) = arr.cam_search(&m1, SearchKey::Char(cb.code(c)), Port::A).unwrap();
        let (h2, a2) = arr.cam_search(&m2, SearchKey::Char(cb.code(c)), Port::B).unwrap();
        prop_assert!(h1.iter().all(|r| h2.contains(r)));
        prop_assert!(a1.searched_bits <= a2.searched_bits);
        prop_assert!(h2.len() <= 1);
    }
}

#[test]
fn desk_ruleset_compiles_and_counts() {
    let cfg = HwConfig::default();
    let rs = gen_ruleset(&RuleGenParams::desk(), &cfg).unwrap();
    assert_eq!(rs.patterns.len(), 240);
    let c = compile(&rs, &cfg).unwrap();
    assert_eq!(c.stats.n_backward, 0);
    let conv = build_conventional_ac(&rs);
    assert!(conv.n_backward > conv.n_forward);
}

#[test]
fn fifty_byte_chain() {
    let long = "q".repeat(50);
    let rs = parse_rules(&format!("rule 1 = \"{long}\"")).unwrap();
    let c = compile(&rs, &HwConfig::default()).unwrap();
    let chain = &c.plan.chains[&0];
    let lens: Vec<usize> = chain.iter().map(|&s| c.subs[s as usize].total_len()).collect();
    assert_eq!(lens, vec![24, 24, 2]);
}

#[test]
fn stage_spec_honored() {
    let rs = parse_rules("rule 1 = \"abcdefg\"\nrule 2 = \"abcz\"").unwrap();
    let stages = camdpi::compiler::parse_stage_spec("2:0-2,3:3-5,4:6-7").unwrap();
    let cfg = HwConfig { stages: Some(stages.clone()), ..HwConfig::default() };
    let img = compile(&rs, &cfg).unwrap().image;
    assert_eq!(img.config.stages, Some(stages));
}
