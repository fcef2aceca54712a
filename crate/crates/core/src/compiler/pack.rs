use serde::{Deserialize, Serialize};

use super::config::StageAssignment;
use super::split::{SubId, SubPattern};
use super::trie::{Trie, ROOT};
use super::{CompileError, HwConfig};
use crate::fixed1s::{Code11, Codebook, WideRow};

/// Where the next search happens: a row range in one PE of the next stage,
/// or a row range in one Phase-2 bank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Route {
    Pe { pe: usize, dn: usize, up: usize },
    Phase2 { bank: usize, dn: usize, up: usize },
}

impl Route {
    pub fn rows(&self) -> (usize, usize) {
        match *self {
            Route::Pe { dn, up, .. } | Route::Phase2 { dn, up, .. } => (dn, up),
        }
    }
}

/// SRAM payload of a transition: an optional continuation plus an optional
/// immediate report. A state that both ends a sub-pattern and has deeper
/// children or suffixes carries both in one entry.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextRange {
    pub route: Option<Route>,
    pub terminal: Option<SubId>,
}

impl NextRange {
    pub fn is_empty(&self) -> bool {
        self.route.is_none() && self.terminal.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeRow {
    pub code: Code11,
    pub next: NextRange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase2Payload {
    pub sub_pattern_id: SubId,
    pub suffix_len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankRow {
    pub row: WideRow,
    #[serde(flatten)]
    pub payload: Phase2Payload,
}

/// Compiled array contents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableImage {
    /// Always carries a resolved stage assignment.
    pub config: HwConfig,
    pub codebook: Codebook,
    /// Direct byte-indexed first stage.
    pub stage1: Vec<Option<NextRange>>,
    pub pes: Vec<Vec<PeRow>>,
    pub phase2: Vec<Vec<BankRow>>,
}

impl TableImage {
    pub fn used_pe_rows(&self) -> usize {
        self.pes.iter().map(Vec::len).sum()
    }

    pub fn used_bank_rows(&self) -> usize {
        self.phase2.iter().map(Vec::len).sum()
    }

    /// CAM bits over used rows: 11 per PE row, `11 * width` per bank row.
    pub fn cam_bits_used(&self) -> usize {
        self.used_pe_rows() * 11 + self.used_bank_rows() * 11 * self.config.width
    }

    pub fn cam_bits_provisioned(&self) -> usize {
        let c = &self.config;
        c.n_pes * c.pe_rows * 11 + c.n_banks * c.bank_rows * 11 * c.width
    }

    /// SRAM bits over used entries, including the populated stage-1 entries.
    pub fn sram_bits_used(&self) -> usize {
        let c = &self.config;
        let stage1 = self.stage1.iter().filter(|e| e.is_some()).count();
        (stage1 + self.used_pe_rows()) * c.next_range_bits() as usize
            + self.used_bank_rows() * c.phase2_payload_bits() as usize
    }

    pub fn sram_bits_provisioned(&self) -> usize {
        let c = &self.config;
        (256 + c.n_pes * c.pe_rows) * c.next_range_bits() as usize
            + c.n_banks * c.bank_rows * c.phase2_payload_bits() as usize
    }
}

/// Bin-packs groups (by size, largest first, ties in input order) into
/// arrays of `capacity` rows. Returns `(array index, first row)` per group.
fn first_fit_decreasing(
    sizes: &[usize],
    arrays: usize,
    capacity: usize,
) -> Result<Vec<(usize, usize)>, usize> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&g| (std::cmp::Reverse(sizes[g]), g));
    let mut fill = vec![0usize; arrays];
    let mut place = vec![(0, 0); sizes.len()];
    for g in order {
        match fill.iter().position(|&f| f + sizes[g] <= capacity) {
            Some(a) => {
                place[g] = (a, fill[a]);
                fill[a] += sizes[g];
            }
            None => return Err(g),
        }
    }
    Ok(place)
}

/// Sibling groups feeding `stage`: children of each depth `stage-1` state.
fn sibling_groups(trie: &Trie, stage: usize) -> Vec<(usize, Vec<usize>)> {
    trie.states_at(stage - 1)
        .filter(|&s| !trie.states[s].children.is_empty())
        .map(|s| (s, trie.states[s].children.values().copied().collect()))
        .collect()
}

fn min_pes_for(sizes: &[usize], cfg: &HwConfig) -> usize {
    let mut k = 1;
    while first_fit_decreasing(sizes, k, cfg.pe_rows).is_err() && k <= cfg.n_pes {
        k += 1;
    }
    k
}

/// Gives each stage the fewest PEs its groups pack into, then spreads the
/// spare PEs in proportion to per-stage row counts with the rounding
/// remainder going to the shallowest stages first.
pub fn default_stage_assignment(trie: &Trie, cfg: &HwConfig) -> Result<Vec<StageAssignment>, CompileError> {
    let stages: Vec<usize> = (2..=cfg.depth).collect();
    let mut counts = Vec::new();
    let mut need = Vec::new();
    for &d in &stages {
        let sizes: Vec<usize> = sibling_groups(trie, d).iter().map(|(_, g)| g.len()).collect();
        if let Some(&big) = sizes.iter().max() {
            if big > cfg.pe_rows {
                return Err(CompileError::GroupTooLarge { stage: d, size: big, rows: cfg.pe_rows });
            }
        }
        counts.push(sizes.iter().sum::<usize>());
        need.push(min_pes_for(&sizes, cfg));
    }
    let needed: usize = need.iter().sum();
    if needed > cfg.n_pes {
        return Err(CompileError::NotEnoughPes { needed, available: cfg.n_pes });
    }
    let spare = cfg.n_pes - needed;
    let total: usize = counts.iter().sum();
    let mut alloc = need.clone();
    let mut given = 0;
    for (a, &c) in alloc.iter_mut().zip(&counts) {
        let extra = (spare * c).checked_div(total).unwrap_or(0);
        *a += extra;
        given += extra;
    }
    let mut i = 0;
    while given < spare {
        let n = alloc.len();
        alloc[i % n] += 1;
        given += 1;
        i += 1;
    }
    let mut next = 0;
    Ok(stages
        .iter()
        .zip(alloc)
        .map(|(&stage, k)| {
            let pes = (next..next + k).collect();
            next += k;
            StageAssignment { stage, pes }
        })
        .collect())
}

/// Lays the trie out into the arrays. Each sibling group lands contiguously
/// (characters ascending) in one PE of its stage; each depth-`D` state's
/// suffix group lands contiguously in one bank.
pub fn pack_tables(trie: &Trie, subs: &[SubPattern], cfg: &HwConfig) -> Result<TableImage, CompileError> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if cfg.stages.is_none() {
        cfg.stages = Some(default_stage_assignment(trie, &cfg)?);
        cfg.validate()?;
    }
    let codebook = Codebook::canonical();
    let n = trie.states.len();
    let mut route: Vec<Option<Route>> = vec![None; n];
    let mut pe_fill: Vec<Vec<usize>> = vec![Vec::new(); cfg.n_pes];

    for d in 2..=cfg.depth {
        let groups = sibling_groups(trie, d);
        let sizes: Vec<usize> = groups.iter().map(|(_, g)| g.len()).collect();
        if let Some(&big) = sizes.iter().max() {
            if big > cfg.pe_rows {
                return Err(CompileError::GroupTooLarge { stage: d, size: big, rows: cfg.pe_rows });
            }
        }
        let pes = cfg.stage_pes(d).to_vec();
        let place = first_fit_decreasing(&sizes, pes.len(), cfg.pe_rows).map_err(|g| CompileError::StageFull {
            stage: d,
            group: sizes[g],
            pes: pes.len(),
            rows: cfg.pe_rows,
        })?;
        for ((parent, children), (slot, first)) in groups.iter().zip(place) {
            let pe = pes[slot];
            route[*parent] = Some(Route::Pe { pe, dn: first, up: first + children.len() - 1 });
            let end = first + children.len();
            if pe_fill[pe].len() < end {
                pe_fill[pe].resize(end, usize::MAX);
            }
            pe_fill[pe][first..end].copy_from_slice(children);
        }
    }

    let suffix_groups: Vec<usize> = trie.states_at(cfg.depth).filter(|&s| !trie.states[s].suffixes.is_empty()).collect();
    let sizes: Vec<usize> = suffix_groups.iter().map(|&s| trie.states[s].suffixes.len()).collect();
    if let Some(&big) = sizes.iter().max() {
        if big > cfg.bank_rows {
            return Err(CompileError::SuffixGroupTooLarge { size: big, rows: cfg.bank_rows });
        }
    }
    let place = first_fit_decreasing(&sizes, cfg.n_banks, cfg.bank_rows)
        .map_err(|g| CompileError::Phase2Full { group: sizes[g], banks: cfg.n_banks, rows: cfg.bank_rows })?;
    let mut phase2: Vec<Vec<BankRow>> = vec![Vec::new(); cfg.n_banks];
    let mut bank_slots: Vec<Vec<Option<BankRow>>> = vec![Vec::new(); cfg.n_banks];
    for (&state, (bank, first)) in suffix_groups.iter().zip(place) {
        let ids = &trie.states[state].suffixes;
        route[state] = Some(Route::Phase2 { bank, dn: first, up: first + ids.len() - 1 });
        let slots = &mut bank_slots[bank];
        if slots.len() < first + ids.len() {
            slots.resize(first + ids.len(), None);
        }
        for (k, &id) in ids.iter().enumerate() {
            let sp = &subs[id as usize];
            let row = codebook.encode_suffix(&sp.suffix, cfg.width)?;
            slots[first + k] = Some(BankRow { row, payload: Phase2Payload { sub_pattern_id: id, suffix_len: sp.suffix.len() } });
        }
    }
    for (bank, slots) in bank_slots.into_iter().enumerate() {
        phase2[bank] = slots.into_iter().map(|r| r.expect("packing leaves no holes")).collect();
    }

    let next_of = |s: usize| NextRange { route: route[s], terminal: trie.states[s].terminal };
    let mut stage1 = vec![None; 256];
    for (&c, &s) in &trie.states[ROOT].children {
        stage1[c as usize] = Some(next_of(s));
    }
    let pes = pe_fill
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|&s| PeRow { code: codebook.code(trie.states[s].in_char), next: next_of(s) })
                .collect()
        })
        .collect();

    Ok(TableImage { config: cfg, codebook, stage1, pes, phase2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, split_patterns};
    use crate::compiler::trie::build_trie;
    use crate::rulespec::parse_rules;

    fn cfg2() -> HwConfig {
        HwConfig::default().with_depth(2)
    }

    #[test]
    fn minimal_image_by_hand() {
        let rs = parse_rules("rule 1 = \"abcd\"").unwrap();
        let img = compile(&rs, &cfg2()).unwrap().image;
        let stage2_pe = img.config.stage_pes(2)[0];
        let e = img.stage1[b'a' as usize].unwrap();
        assert_eq!(e.route, Some(Route::Pe { pe: stage2_pe, dn: 0, up: 0 }));
        assert_eq!(e.terminal, None);
        let row = &img.pes[stage2_pe][0];
        assert_eq!(row.code, img.codebook.code(b'b'));
        assert_eq!(row.next.route, Some(Route::Phase2 { bank: 0, dn: 0, up: 0 }));
        let b = &img.phase2[0][0];
        assert_eq!(b.payload, Phase2Payload { sub_pattern_id: 0, suffix_len: 2 });
        assert_eq!(b.row, img.codebook.encode_suffix(&rs.patterns[&0].bytes[2..], 20).unwrap());
        assert_eq!(img.used_pe_rows(), 1);
        assert_eq!(img.used_bank_rows(), 1);
        assert_eq!(img.stage1.iter().filter(|e| e.is_some()).count(), 1);
    }

    #[test]
    fn sibling_group_is_contiguous() {
        let rs = parse_rules("rule 1 = \"ax\"\nrule 2 = \"ay\"\nrule 3 = \"az\"").unwrap();
        let img = compile(&rs, &cfg2()).unwrap().image;
        let Some(Route::Pe { pe, dn, up }) = img.stage1[b'a' as usize].unwrap().route else {
            panic!("expected a PE route");
        };
        assert_eq!(up - dn, 2);
        let chars: Vec<Code11> = img.pes[pe][dn..=up].iter().map(|r| r.code).collect();
        let cb = &img.codebook;
        assert_eq!(chars, vec![cb.code(b'x'), cb.code(b'y'), cb.code(b'z')]);
        assert!(img.pes[pe][dn..=up].iter().all(|r| r.next.terminal.is_some()));
    }

    #[test]
    fn oversized_group_rejected() {
        let text: String = (0..65u8).map(|i| format!("rule {} = \"a\\x{:02X}\"\n", i + 1, i)).collect();
        let rs = parse_rules(&text).unwrap();
        assert!(matches!(
            compile(&rs, &cfg2()),
            Err(CompileError::GroupTooLarge { size: 65, rows: 64, .. })
        ));
    }

    #[test]
    fn prefix_of_prefix_gets_both_actions() {
        let rs = parse_rules("rule 1 = \"ab\"\nrule 2 = \"abcd\"\nrule 3 = \"abcdefgh\"").unwrap();
        let img = compile(&rs, &HwConfig::default()).unwrap().image;
        let Some(Route::Pe { pe, dn, .. }) = img.stage1[b'a' as usize].unwrap().route else { panic!() };
        let ab = img.pes[pe][dn].next;
        assert!(ab.terminal.is_some() && matches!(ab.route, Some(Route::Pe { .. })));
        // "abcd" is depth 4: terminal plus a Phase-2 group for "efgh"
        let Some(Route::Pe { pe, dn, .. }) = ab.route else { panic!() };
        let Some(Route::Pe { pe, dn, .. }) = img.pes[pe][dn].next.route else { panic!() };
        let abcd = img.pes[pe][dn].next;
        assert!(abcd.terminal.is_some() && matches!(abcd.route, Some(Route::Phase2 { .. })));
    }

    #[test]
    fn explicit_stages_honored() {
        let rs = parse_rules("rule 1 = \"abcdef\"").unwrap();
        let stages = crate::compiler::parse_stage_spec("2:0-2,3:3-5,4:6-7").unwrap();
        let cfg = HwConfig { stages: Some(stages.clone()), ..HwConfig::default() };
        let img = compile(&rs, &cfg).unwrap().image;
        assert_eq!(img.config.stages, Some(stages));
        assert!(!img.pes[0].is_empty() && !img.pes[3].is_empty() && !img.pes[6].is_empty());
    }

    #[test]
    fn default_assignment_covers_all_pes() {
        let rs = parse_rules("rule 1 = \"abcdef\"\nrule 2 = \"abzz\"").unwrap();
        let (subs, _) = split_patterns(&rs, &HwConfig::default()).unwrap();
        let (trie, _) = build_trie(&subs, 4);
        let a = default_stage_assignment(&trie, &HwConfig::default()).unwrap();
        let all: Vec<usize> = a.iter().flat_map(|s| s.pes.clone()).collect();
        assert_eq!(all, (0..8).collect::<Vec<_>>());
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn ffd_places_largest_first() {
        let place = first_fit_decreasing(&[10, 60, 5], 2, 64).unwrap();
        assert_eq!(place[1], (0, 0));
        assert_eq!(place[0], (1, 0));
        assert_eq!(place[2], (1, 10));
        assert!(first_fit_decreasing(&[40, 40, 40], 1, 64).is_err());
    }
}
