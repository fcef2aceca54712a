//! Activation-count energy model, baseline models and sweep studies.
//!
//! Energy is a linear combination of the engine's activity counters with a
//! coefficient table in relative units. Nothing here claims silicon numbers;
//! only orderings and trends between designs are meaningful.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{bits_for, build_conventional_ac, compile, AcStats, CompileError, HwConfig, TableImage};
use crate::engine::{CycleStats, Engine, EngineConfig, EngineError};
use crate::exec::Exec;
use crate::fixed1s::CODE_BITS;
use crate::rulespec::{gen_ruleset, gen_traffic, GenError, RuleGenParams, RuleSet, TrafficSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientTable {
    pub e_ml_per_bit: f64,
    pub e_sl_per_bit: f64,
    pub e_sram_per_bit: f64,
    pub e_decoder_per_segment: f64,
    pub e_router_per_route: f64,
    pub e_clock_per_active_block_cycle: f64,
    pub e_retention_per_gated_row_cycle: f64,
}

impl Default for CoefficientTable {
    fn default() -> Self {
        CoefficientTable {
            e_ml_per_bit: 1.0,
            e_sl_per_bit: 0.5,
            e_sram_per_bit: 0.8,
            e_decoder_per_segment: 2.0,
            e_router_per_route: 1.0,
            e_clock_per_active_block_cycle: 0.2,
            e_retention_per_gated_row_cycle: 0.001,
        }
    }
}

impl CoefficientTable {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.e_ml_per_bit,
            self.e_sl_per_bit,
            self.e_sram_per_bit,
            self.e_decoder_per_segment,
            self.e_router_per_route,
            self.e_clock_per_active_block_cycle,
            self.e_retention_per_gated_row_cycle,
        ];
        if all.iter().all(|c| c.is_finite() && *c >= 0.0) {
            Ok(())
        } else {
            Err("coefficients must be finite and non-negative".into())
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        CoefficientTable {
            e_ml_per_bit: self.e_ml_per_bit * k,
            e_sl_per_bit: self.e_sl_per_bit * k,
            e_sram_per_bit: self.e_sram_per_bit * k,
            e_decoder_per_segment: self.e_decoder_per_segment * k,
            e_router_per_route: self.e_router_per_route * k,
            e_clock_per_active_block_cycle: self.e_clock_per_active_block_cycle * k,
            e_retention_per_gated_row_cycle: self.e_retention_per_gated_row_cycle * k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub coeffs: CoefficientTable,
    // per block
    pub stage1: f64,
    pub pe: Vec<f64>,
    pub phase2: f64,
    pub decoder: f64,
    pub router: f64,
    pub clock: f64,
    pub retention: f64,
    // per component, across blocks
    pub ml: f64,
    pub sl: f64,
    pub sram: f64,
    pub total: f64,
    /// Input bytes, skipped ones included.
    pub input_bytes: u64,
    pub pattern_bytes: usize,
    /// Energy per input byte; each byte is one search of the ruleset.
    pub energy_per_search: f64,
    /// `energy_per_search` over the ruleset's pattern bytes.
    pub energy_per_char_per_search: Option<f64>,
}

impl EnergyReport {
    pub fn energy_per_byte(&self) -> f64 {
        self.energy_per_search
    }

    pub fn pe_total(&self) -> f64 {
        self.pe.iter().sum()
    }
}

fn per(total: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

/// Prices a run's counters.
pub fn accumulate(stats: &CycleStats, coeffs: &CoefficientTable, pattern_bytes: usize) -> EnergyReport {
    let c = coeffs;
    let array = |a: &crate::camcore::Activity| {
        a.searched_bits as f64 * c.e_ml_per_bit + a.sl_bits as f64 * c.e_sl_per_bit + a.sram_bits_read as f64 * c.e_sram_per_bit
    };
    let stage1 = array(&stats.stage1);
    let pe: Vec<f64> = stats.pe.iter().map(array).collect();
    let phase2 = array(&stats.phase2);
    let mut all = stats.pe_total();
    all += stats.phase2;
    all += stats.stage1;
    let decoder = all.l1_segments as f64 * c.e_decoder_per_segment;
    let router = stats.router_routes as f64 * c.e_router_per_route;
    let clock = stats.active_block_cycles as f64 * c.e_clock_per_active_block_cycle;
    let retention = stats.gated_row_cycles as f64 * c.e_retention_per_gated_row_cycle;
    let total = stage1 + pe.iter().sum::<f64>() + phase2 + decoder + router + clock + retention;
    let input_bytes = stats.bytes_total() + stats.gated_bytes;
    let eps = per(total, input_bytes);
    EnergyReport {
        coeffs: *c,
        stage1,
        pe,
        phase2,
        decoder,
        router,
        clock,
        retention,
        ml: all.searched_bits as f64 * c.e_ml_per_bit,
        sl: all.sl_bits as f64 * c.e_sl_per_bit,
        sram: all.sram_bits_read as f64 * c.e_sram_per_bit,
        total,
        input_bytes,
        pattern_bytes,
        energy_per_search: eps,
        energy_per_char_per_search: (pattern_bytes > 0).then(|| eps / pattern_bytes as f64),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionalPoint {
    /// Transition rows searched per byte.
    pub rows: usize,
    /// State-index bits plus one character code.
    pub width: u32,
    pub ml_per_byte: f64,
    pub energy_per_byte: f64,
    pub total: f64,
}

/// One CAM holding every transition, searched in full for each input byte
/// (current state plus character), with one next-state read per byte.
pub fn model_conventional(stats: &AcStats, stream_len: usize, coeffs: &CoefficientTable) -> ConventionalPoint {
    let rows = stats.n_forward + stats.n_backward;
    let state_bits = bits_for(stats.n_states + 1);
    let width = state_bits + CODE_BITS;
    let ml = rows as f64 * width as f64 * coeffs.e_ml_per_bit;
    let per_byte = ml
        + width as f64 * coeffs.e_sl_per_bit
        + state_bits as f64 * coeffs.e_sram_per_bit
        + coeffs.e_clock_per_active_block_cycle;
    ConventionalPoint { rows, width, ml_per_byte: ml, energy_per_byte: per_byte, total: per_byte * stream_len as f64 }
}

/// Flags for one modeled run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunFlags {
    pub clock_gating: bool,
    pub row_enable: bool,
    pub dual_port: bool,
}

impl Default for RunFlags {
    fn default() -> Self {
        RunFlags { clock_gating: true, row_enable: true, dual_port: false }
    }
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("{0}")]
    Param(String),
}

/// Runs the engine over one stream and prices it.
pub fn model_run(
    image: &TableImage,
    stream: &[u8],
    flags: RunFlags,
    coeffs: &CoefficientTable,
    pattern_bytes: usize,
) -> Result<(EnergyReport, CycleStats), MetricsError> {
    let cfg = EngineConfig {
        clock_gating: flags.clock_gating,
        row_enable: flags.row_enable,
        dual_port: flags.dual_port,
        ..EngineConfig::new(image.clone())
    };
    let mut eng = Engine::load(cfg)?;
    let (_, stats) = eng.run_stream(stream, None)?;
    Ok((accumulate(&stats, coeffs, pattern_bytes), stats))
}

/// The design without row enabling: same search results, but each search
/// charges every provisioned row of its array.
pub fn model_no_row_enable(
    image: &TableImage,
    stream: &[u8],
    coeffs: &CoefficientTable,
    pattern_bytes: usize,
) -> Result<EnergyReport, MetricsError> {
    let flags = RunFlags { row_enable: false, ..RunFlags::default() };
    Ok(model_run(image, stream, flags, coeffs, pattern_bytes)?.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub pattern_bytes: usize,
    pub cam_bytes_used: f64,
    pub sram_bytes_used: f64,
    pub cam_bytes_provisioned: f64,
    pub sram_bytes_provisioned: f64,
    /// `None` for an empty ruleset.
    pub cam_bytes_per_char: Option<f64>,
    pub sram_bytes_per_char: Option<f64>,
    pub cam_bytes_per_char_provisioned: Option<f64>,
    pub sram_bytes_per_char_provisioned: Option<f64>,
}

/// Storage over the ruleset's pattern bytes. Used rows cost 11 bits per PE
/// row and `11 * W` per bank row.
pub fn memory_report(image: &TableImage, pattern_bytes: usize) -> MemoryReport {
    let cam_used = image.cam_bits_used() as f64 / 8.0;
    let sram_used = image.sram_bits_used() as f64 / 8.0;
    let cam_prov = image.cam_bits_provisioned() as f64 / 8.0;
    let sram_prov = image.sram_bits_provisioned() as f64 / 8.0;
    let over = |b: f64| (pattern_bytes > 0).then(|| b / pattern_bytes as f64);
    MemoryReport {
        pattern_bytes,
        cam_bytes_used: cam_used,
        sram_bytes_used: sram_used,
        cam_bytes_provisioned: cam_prov,
        sram_bytes_provisioned: sram_prov,
        cam_bytes_per_char: over(cam_used),
        sram_bytes_per_char: over(sram_used),
        cam_bytes_per_char_provisioned: over(cam_prov),
        sram_bytes_per_char_provisioned: over(sram_prov),
    }
}

pub fn pattern_bytes(rs: &RuleSet) -> usize {
    rs.patterns.values().map(|p| p.bytes.len()).sum()
}

/// Traffic shape shared by the sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Workload {
    pub length: usize,
    pub hit_rate: f64,
    pub seed: u64,
}

impl Default for Workload {
    fn default() -> Self {
        Workload { length: 65536, hit_rate: 0.1, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub size: usize,
    pub design: String,
    pub energy_per_byte: f64,
    pub energy_per_char_per_search: f64,
}

pub const DESIGNS: [&str; 3] = ["conventional", "no_row_enable", "full"];

/// Energy per byte for the three designs at each ruleset size.
pub fn sweep_rulesize(
    seed: u64,
    sizes: &[usize],
    cfg: &HwConfig,
    coeffs: &CoefficientTable,
    work: Workload,
    exec: Exec,
) -> Result<Vec<SizeRow>, MetricsError> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MetricsError::Param("sizes must ascend".into()));
    }
    let points = exec.map(sizes, |&n| -> Result<Vec<SizeRow>, MetricsError> {
        let params = RuleGenParams { n_patterns: n, seed, ..RuleGenParams::desk() };
        let rs = gen_ruleset(&params, cfg)?;
        let image = compile(&rs, cfg)?.image;
        let traffic = gen_traffic(&TrafficSpec { length: work.length, hit_rate: work.hit_rate, seed: work.seed }, &rs)?;
        let pb = pattern_bytes(&rs);
        let conv = model_conventional(&build_conventional_ac(&rs), traffic.stream.len(), coeffs);
        let nre = model_no_row_enable(&image, &traffic.stream, coeffs, pb)?;
        let (full, _) = model_run(&image, &traffic.stream, RunFlags::default(), coeffs, pb)?;
        let row = |design: &str, e: f64| SizeRow {
            size: n,
            design: design.into(),
            energy_per_byte: e,
            energy_per_char_per_search: e / pb as f64,
        };
        Ok(vec![
            row(DESIGNS[0], conv.energy_per_byte),
            row(DESIGNS[1], nre.energy_per_search),
            row(DESIGNS[2], full.energy_per_search),
        ])
    });
    let mut out = Vec::new();
    for p in points {
        out.extend(p?);
    }
    Ok(out)
}

pub fn sizes_csv(rows: &[SizeRow]) -> String {
    let mut s = String::from("size,design,energy_per_byte,energy_per_char_per_search\n");
    for r in rows {
        s.push_str(&format!("{},{},{:.6},{:.9}\n", r.size, r.design, r.energy_per_byte, r.energy_per_char_per_search));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitRow {
    pub hit_rate: f64,
    pub gating: bool,
    pub energy_per_byte: f64,
    pub gated_bytes: u64,
}

/// Energy per byte with gating on and off across hit rates.
pub fn sweep_hitrate(
    rs: &RuleSet,
    cfg: &HwConfig,
    rates: &[f64],
    length: usize,
    seed: u64,
    coeffs: &CoefficientTable,
    exec: Exec,
) -> Result<Vec<HitRow>, MetricsError> {
    let image = compile(rs, cfg)?.image;
    let pb = pattern_bytes(rs);
    let points = exec.map(rates, |&rate| -> Result<Vec<HitRow>, MetricsError> {
        let traffic = gen_traffic(&TrafficSpec { length, hit_rate: rate, seed }, rs)?;
        let mut rows = Vec::new();
        for gating in [true, false] {
            let flags = RunFlags { clock_gating: gating, ..RunFlags::default() };
            let (rep, st) = model_run(&image, &traffic.stream, flags, coeffs, pb)?;
            rows.push(HitRow { hit_rate: rate, gating, energy_per_byte: rep.energy_per_search, gated_bytes: st.gated_bytes });
        }
        Ok(rows)
    });
    let mut out = Vec::new();
    for p in points {
        out.extend(p?);
    }
    Ok(out)
}

/// `1 - on/off` per hit rate, in sweep order.
pub fn gating_savings(rows: &[HitRow]) -> Vec<(f64, f64)> {
    rows.chunks(2)
        .filter_map(|c| {
            let on = c.iter().find(|r| r.gating)?;
            let off = c.iter().find(|r| !r.gating)?;
            Some((on.hit_rate, 1.0 - on.energy_per_byte / off.energy_per_byte))
        })
        .collect()
}

pub fn hitrate_csv(rows: &[HitRow]) -> String {
    let mut s = String::from("hit_rate,gating,energy_per_byte,gated_bytes\n");
    for r in rows {
        s.push_str(&format!("{},{},{:.6},{}\n", r.hit_rate, if r.gating { "on" } else { "off" }, r.energy_per_byte, r.gated_bytes));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub depth: usize,
    pub hit_rate: f64,
    pub energy_per_byte: f64,
}

/// Energy per byte for each Phase-1 depth and hit rate. The ruleset is
/// generated without wildcards so the same patterns compile at every depth.
pub fn sweep_stages(
    params: &RuleGenParams,
    base: &HwConfig,
    depths: &[usize],
    rates: &[f64],
    length: usize,
    coeffs: &CoefficientTable,
    exec: Exec,
) -> Result<Vec<StageRow>, MetricsError> {
    let deepest = depths.iter().copied().max().ok_or_else(|| MetricsError::Param("no depths".into()))?;
    let params = RuleGenParams { wildcard_frac: 0.0, ..params.clone() };
    let rs = gen_ruleset(&params, &base.clone().with_depth(deepest))?;
    let pb = pattern_bytes(&rs);
    let mut images = Vec::new();
    for &d in depths {
        images.push((d, compile(&rs, &base.clone().with_depth(d))?.image));
    }
    let streams = exec.map(rates, |&rate| gen_traffic(&TrafficSpec { length, hit_rate: rate, seed: params.seed }, &rs));
    let mut jobs = Vec::new();
    for (i, s) in streams.into_iter().enumerate() {
        let s = s?;
        for (d, img) in &images {
            jobs.push((*d, rates[i], img, s.stream.clone()));
        }
    }
    let rows = exec.map(&jobs, |(d, rate, img, stream)| -> Result<StageRow, MetricsError> {
        let (rep, _) = model_run(img, stream, RunFlags::default(), coeffs, pb)?;
        Ok(StageRow { depth: *d, hit_rate: *rate, energy_per_byte: rep.energy_per_search })
    });
    let mut out: Vec<StageRow> = rows.into_iter().collect::<Result<_, _>>()?;
    out.sort_by(|a, b| a.hit_rate.total_cmp(&b.hit_rate).then(a.depth.cmp(&b.depth)));
    Ok(out)
}

/// Cheapest depth at each hit rate.
pub fn best_depths(rows: &[StageRow]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize, f64)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(h, _, _)| *h == r.hit_rate) {
            Some(b) if r.energy_per_byte < b.2 => *b = (r.hit_rate, r.depth, r.energy_per_byte),
            Some(_) => {}
            None => out.push((r.hit_rate, r.depth, r.energy_per_byte)),
        }
    }
    out.into_iter().map(|(h, d, _)| (h, d)).collect()
}

pub fn stages_csv(rows: &[StageRow]) -> String {
    let mut s = String::from("depth,hit_rate,energy_per_byte\n");
    for r in rows {
        s.push_str(&format!("{},{},{:.6}\n", r.depth, r.hit_rate, r.energy_per_byte));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camcore::Activity;
    use crate::rulespec::parse_rules;

    fn one_search() -> CycleStats {
        let a = Activity { searches: 1, enabled_rows: 8, searched_bits: 88, sl_bits: 11, l1_segments: 1, sram_bits_read: 28 };
        CycleStats { pe: vec![a], ..CycleStats::default() }
    }

    #[test]
    fn ml_of_one_search() {
        let r = accumulate(&one_search(), &CoefficientTable::default(), 10);
        assert_eq!(r.ml, 88.0);
        assert_eq!(r.sl, 5.5);
    }

    #[test]
    fn zero_activity() {
        let r = accumulate(&CycleStats::default(), &CoefficientTable::default(), 10);
        assert_eq!(r.total, 0.0);
        assert_eq!(r.energy_per_search, 0.0);
    }

    #[test]
    fn sram_linearity() {
        let c = CoefficientTable::default();
        let base = accumulate(&one_search(), &c, 10);
        let c2 = CoefficientTable { e_sram_per_bit: c.e_sram_per_bit * 2.0, ..c };
        let dbl = accumulate(&one_search(), &c2, 10);
        assert_eq!(dbl.sram, 2.0 * base.sram);
        assert_eq!(dbl.ml, base.ml);
        assert!((dbl.total - base.total - base.sram).abs() < 1e-9);
        let k = accumulate(&one_search(), &c.scaled(3.0), 10);
        assert!((k.total - 3.0 * base.total).abs() < 1e-9);
    }

    #[test]
    fn conventional_is_linear() {
        let st = AcStats { n_states: 50, n_forward: 50, n_backward: 50, ..AcStats::default() };
        let p = model_conventional(&st, 10, &CoefficientTable::default());
        assert_eq!(p.ml_per_byte, 100.0 * p.width as f64);
        let st2 = AcStats { n_forward: 100, n_backward: 100, ..st };
        assert_eq!(model_conventional(&st2, 10, &CoefficientTable::default()).ml_per_byte, 2.0 * p.ml_per_byte);
    }

    #[test]
    fn memory_tiny_case() {
        let rs = parse_rules("rule 1 = \"abcd\"").unwrap();
        let img = compile(&rs, &HwConfig::default().with_depth(2)).unwrap().image;
        let m = memory_report(&img, pattern_bytes(&rs));
        assert_eq!(m.cam_bytes_used * 8.0, 231.0);
        assert!((m.cam_bytes_per_char.unwrap() - 7.22).abs() < 0.01);
        let empty = memory_report(&img, 0);
        assert!(empty.cam_bytes_per_char.is_none());
    }

    #[test]
    fn no_row_enable_charges_whole_pe() {
        // four siblings in a 64-row PE
        let rs = parse_rules("rule 1 = \"ab\"\nrule 2 = \"ac\"\nrule 3 = \"ad\"\nrule 4 = \"ae\"").unwrap();
        let img = compile(&rs, &HwConfig::default().with_depth(2)).unwrap().image;
        let c = CoefficientTable::default();
        let (on, _) = model_run(&img, b"ab", RunFlags::default(), &c, 8).unwrap();
        let off = model_no_row_enable(&img, b"ab", &c, 8).unwrap();
        assert_eq!(off.ml, 16.0 * on.ml);
    }
}
