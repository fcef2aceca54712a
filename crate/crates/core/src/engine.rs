//! Cycle-level simulator of the Phase-1 pipeline and the Phase-2 unit.
//!
//! One call to [`Engine::step`] is one clock. Within a cycle:
//!
//! 1. an idle Phase-2 unit takes the oldest queued request, lane A first;
//! 2. each lane consumes one byte (unless stalled or skipping): stage 1 is a
//!    direct lookup, stages `2..=D` search the row range held in their
//!    register, and hits route to the next stage, queue a Phase-2 request or
//!    report immediately;
//! 3. a Phase-2 search issued `phase2_latency - 1` cycles earlier completes
//!    against the look-ahead window and reports every matching row. With
//!    clock gating on, the matched lane drops candidates that start inside
//!    the matched span and skips its input to the end of the longest match.
//!
//! The engine holds both input streams because Phase-2 reads up to `W`
//! bytes past the current offset.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camcore::{Activity, CamArray, EnableMask, Port, SearchKey};
use crate::compiler::{NextRange, Phase2Payload, Route, SubId, TableImage};
use crate::fixed1s::WideRow;

/// Prototype clock, used for the latency and throughput identities.
pub const CLOCK_MHZ: f64 = 144.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lane {
    A,
    B,
}

impl Lane {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn port(self) -> Port {
        match self {
            Lane::A => Port::A,
            Lane::B => Port::B,
        }
    }
}

impl fmt::Display for Lane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lane::A => "A",
            Lane::B => "B",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Congestion {
    /// A full request FIFO halts that lane's input.
    #[default]
    Stall,
    /// Input keeps flowing; requests that find the FIFO full are dropped.
    DropCount,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub image: TableImage,
    /// Lane B active.
    pub dual_port: bool,
    pub clock_gating: bool,
    pub congestion: Congestion,
    pub queue_depth: usize,
    pub phase2_latency: usize,
    /// When false, every search charges the whole array (baseline model).
    pub row_enable: bool,
}

impl EngineConfig {
    pub fn new(image: TableImage) -> Self {
        EngineConfig {
            image,
            dual_port: false,
            clock_gating: true,
            congestion: Congestion::Stall,
            queue_depth: 4,
            phase2_latency: 2,
            row_enable: true,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("queue depth must be at least 1")]
    QueueDepth,
    #[error("Phase-2 latency must be at least 1")]
    Latency,
    #[error("image: {0}")]
    Image(String),
    #[error("lane B stream given but dual_port is off")]
    LaneBDisabled,
}

/// A live candidate waiting for its next byte.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageReg {
    pub pe: usize,
    pub dn: usize,
    pub up: usize,
    pub start: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase2Request {
    pub lane: Lane,
    pub bank: usize,
    pub dn: usize,
    pub up: usize,
    /// First byte of the candidate (window_start - D).
    pub start: usize,
    pub window_start: usize,
    /// Cycle the request was queued.
    pub issue_cycle: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchEvent {
    pub lane: Lane,
    pub sub_pattern_id: SubId,
    pub start: usize,
    pub end: usize,
    pub cycle_reported: u64,
}

/// Counters for one run. Activity is kept per block so the energy model can
/// price each one.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleStats {
    pub cycles: u64,
    /// Cycles in which at least one lane still had input.
    pub input_cycles: u64,
    pub bytes_consumed: [u64; 2],
    pub stage1: Activity,
    pub pe: Vec<Activity>,
    pub phase2: Activity,
    pub router_routes: u64,
    pub pe_searches_port_a: u64,
    pub pe_searches_port_b: u64,
    pub phase2_searches: u64,
    pub phase2_busy_cycles: u64,
    /// Cycles in which at least one lane was skipping.
    pub gated_cycles: u64,
    pub gated_bytes: u64,
    pub dropped_requests: u64,
    pub stall_cycles: u64,
    /// Blocks (stage 1, each PE, Phase-2, router) clocked, summed over cycles.
    pub active_block_cycles: u64,
    /// Provisioned CAM rows left unenabled, summed over cycles.
    pub gated_row_cycles: u64,
    pub events: u64,
}

impl CycleStats {
    pub fn pe_total(&self) -> Activity {
        let mut a = Activity::default();
        for p in &self.pe {
            a += *p;
        }
        a
    }

    pub fn bytes_total(&self) -> u64 {
        self.bytes_consumed.iter().sum()
    }

    /// Input bytes (searched or gated) per cycle while input was available.
    pub fn throughput(&self) -> f64 {
        if self.input_cycles == 0 {
            return 0.0;
        }
        (self.bytes_total() + self.gated_bytes) as f64 / self.input_cycles as f64
    }

    /// Adds another run's counters, e.g. the next packet of a framed stream.
    pub fn absorb(&mut self, o: &CycleStats) {
        self.cycles += o.cycles;
        self.input_cycles += o.input_cycles;
        for i in 0..2 {
            self.bytes_consumed[i] += o.bytes_consumed[i];
        }
        self.stage1 += o.stage1;
        if self.pe.len() < o.pe.len() {
            self.pe.resize(o.pe.len(), Activity::default());
        }
        for (a, b) in self.pe.iter_mut().zip(&o.pe) {
            *a += *b;
        }
        self.phase2 += o.phase2;
        self.router_routes += o.router_routes;
        self.pe_searches_port_a += o.pe_searches_port_a;
        self.pe_searches_port_b += o.pe_searches_port_b;
        self.phase2_searches += o.phase2_searches;
        self.phase2_busy_cycles += o.phase2_busy_cycles;
        self.gated_cycles += o.gated_cycles;
        self.gated_bytes += o.gated_bytes;
        self.dropped_requests += o.dropped_requests;
        self.stall_cycles += o.stall_cycles;
        self.active_block_cycles += o.active_block_cycles;
        self.gated_row_cycles += o.gated_row_cycles;
        self.events += o.events;
    }

    /// Pretty JSON with every counter.
    pub fn to_report(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepOutput {
    pub events: Vec<MatchEvent>,
    pub activity: Activity,
}

#[derive(Clone, Debug, Default)]
struct LaneState {
    stream: Vec<u8>,
    pos: usize,
    skip_until: usize,
    /// Indexed by stage; slots 0 and 1 unused.
    regs: Vec<Option<StageReg>>,
    fifo: VecDeque<Phase2Request>,
}

#[derive(Clone, Copy, Debug)]
struct Busy {
    req: Phase2Request,
    done: u64,
}

#[derive(Clone, Debug)]
pub struct Engine {
    cfg: EngineConfig,
    depth: usize,
    width: usize,
    pes: Vec<CamArray>,
    pe_next: Vec<Vec<NextRange>>,
    banks: Vec<CamArray>,
    bank_payloads: Vec<Vec<Phase2Payload>>,
    lanes: [LaneState; 2],
    busy: Option<Busy>,
    cycle: u64,
    stats: CycleStats,
    issue_log: Vec<(u64, Lane)>,
    provisioned_rows: u64,
    next_bits: u32,
    payload_bits: u32,
}

impl Engine {
    pub fn load(cfg: EngineConfig) -> Result<Engine, EngineError> {
        if cfg.queue_depth == 0 {
            return Err(EngineError::QueueDepth);
        }
        if cfg.phase2_latency == 0 {
            return Err(EngineError::Latency);
        }
        cfg.image.validate().map_err(|e| EngineError::Image(e.to_string()))?;
        let img = &cfg.image;
        let hw = &img.config;
        let pes = img.pes.iter().map(|rows| CamArray::narrow(rows.iter().map(|r| r.code).collect(), hw.pe_rows)).collect();
        let pe_next = img.pes.iter().map(|rows| rows.iter().map(|r| r.next).collect()).collect();
        let banks = img
            .phase2
            .iter()
            .map(|rows| CamArray::wide(rows.iter().map(|r| r.row.clone()).collect::<Vec<WideRow>>(), hw.bank_rows, hw.width))
            .collect();
        let bank_payloads = img.phase2.iter().map(|rows| rows.iter().map(|r| r.payload).collect()).collect();
        let depth = hw.depth;
        let lane = LaneState { regs: vec![None; depth + 1], ..LaneState::default() };
        Ok(Engine {
            depth,
            width: hw.width,
            pes,
            pe_next,
            banks,
            bank_payloads,
            lanes: [lane.clone(), lane],
            busy: None,
            cycle: 0,
            stats: CycleStats { pe: vec![Activity::default(); hw.n_pes], ..CycleStats::default() },
            issue_log: Vec::new(),
            provisioned_rows: (hw.n_pes * hw.pe_rows + hw.n_banks * hw.bank_rows) as u64,
            next_bits: hw.next_range_bits(),
            payload_bits: hw.phase2_payload_bits(),
            cfg,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &CycleStats {
        &self.stats
    }

    /// `(cycle, lane)` of every Phase-2 issue, in order.
    pub fn issue_log(&self) -> &[(u64, Lane)] {
        &self.issue_log
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Clears pipeline state and counters and installs new input streams.
    pub fn feed(&mut self, a: &[u8], b: Option<&[u8]>) -> Result<(), EngineError> {
        if b.is_some() && !self.cfg.dual_port {
            return Err(EngineError::LaneBDisabled);
        }
        for (lane, s) in self.lanes.iter_mut().zip([Some(a), b]) {
            *lane = LaneState { stream: s.unwrap_or_default().to_vec(), regs: vec![None; self.depth + 1], ..LaneState::default() };
        }
        self.busy = None;
        self.cycle = 0;
        self.issue_log.clear();
        self.stats = CycleStats { pe: vec![Activity::default(); self.pes.len()], ..CycleStats::default() };
        Ok(())
    }

    /// True once both lanes are exhausted and no request is pending.
    pub fn drained(&self) -> bool {
        self.busy.is_none() && self.lanes.iter().all(|l| l.pos >= l.stream.len() && l.fifo.is_empty())
    }

    fn active_lanes(&self) -> usize {
        if self.cfg.dual_port {
            2
        } else {
            1
        }
    }

    /// One clock.
    pub fn step(&mut self) -> StepOutput {
        let mut out = StepOutput::default();
        let mut enabled_rows = 0u64;
        let mut pes_clocked: Vec<usize> = Vec::new();
        let mut routed = false;
        let mut stage1_used = false;
        let mut skipping = false;

        if self.lanes.iter().take(self.active_lanes()).any(|l| l.pos < l.stream.len()) {
            self.stats.input_cycles += 1;
        }

        // arbiter
        if self.busy.is_none() {
            if let Some(l) = (0..self.active_lanes()).find(|&l| !self.lanes[l].fifo.is_empty()) {
                let req = self.lanes[l].fifo.pop_front().expect("non-empty");
                self.busy = Some(Busy { req, done: self.cycle + self.cfg.phase2_latency as u64 - 1 });
                self.issue_log.push((self.cycle, req.lane));
                routed = true;
                self.stats.router_routes += 1;
            }
        }

        let p2_clocked = self.busy.is_some();

        for li in 0..self.active_lanes() {
            let lane = if li == 0 { Lane::A } else { Lane::B };
            let st = &mut self.lanes[li];
            if st.pos >= st.stream.len() {
                st.regs.iter_mut().for_each(|r| *r = None);
                continue;
            }
            if st.pos < st.skip_until {
                st.pos += 1;
                self.stats.gated_bytes += 1;
                skipping = true;
                continue;
            }
            let full = st.fifo.len() >= self.cfg.queue_depth;
            if full && self.cfg.congestion == Congestion::Stall {
                self.stats.stall_cycles += 1;
                continue;
            }

            let t = st.pos;
            let byte = st.stream[t];
            let code = self.cfg.image.codebook.code(byte);
            let mut next_regs: Vec<Option<StageReg>> = vec![None; self.depth + 1];
            let mut actions: Vec<(NextRange, usize)> = Vec::new();

            for d in 2..=self.depth {
                let Some(reg) = st.regs[d] else { continue };
                let arr = &self.pes[reg.pe];
                let mask = EnableMask { dn: reg.dn, up: reg.up };
                let mut act = if self.cfg.row_enable { arr.search_activity(&mask) } else { arr.full_array_activity() };
                enabled_rows += act.enabled_rows;
                match lane {
                    Lane::A => self.stats.pe_searches_port_a += 1,
                    Lane::B => self.stats.pe_searches_port_b += 1,
                }
                if !pes_clocked.contains(&reg.pe) {
                    pes_clocked.push(reg.pe);
                }
                if let Some(row) = arr.search_char(&mask, code, lane.port()) {
                    act.sram_bits_read += self.next_bits as u64;
                    actions.push((self.pe_next[reg.pe][row], reg.start));
                }
                self.stats.pe[reg.pe] += act;
                out.activity += act;
            }

            if let Some(e) = self.cfg.image.stage1[byte as usize] {
                actions.push((e, t));
            }
            let s1 = Activity { sram_bits_read: self.next_bits as u64, ..Activity::default() };
            self.stats.stage1 += s1;
            out.activity += s1;
            stage1_used = true;

            for (next, start) in actions {
                if let Some(id) = next.terminal {
                    out.events.push(MatchEvent { lane, sub_pattern_id: id, start, end: t, cycle_reported: self.cycle });
                }
                match next.route {
                    None => {}
                    Some(Route::Pe { pe, dn, up }) => {
                        let stage = t + 2 - start;
                        next_regs[stage] = Some(StageReg { pe, dn, up, start });
                        routed = true;
                        self.stats.router_routes += 1;
                    }
                    Some(Route::Phase2 { bank, dn, up }) => {
                        let req = Phase2Request { lane, bank, dn, up, start, window_start: t + 1, issue_cycle: self.cycle };
                        if st.fifo.len() < self.cfg.queue_depth {
                            st.fifo.push_back(req);
                        } else {
                            self.stats.dropped_requests += 1;
                        }
                    }
                }
            }
            st.regs = next_regs;
            st.pos += 1;
            self.stats.bytes_consumed[li] += 1;
        }

        if let Some(busy) = self.busy {
            self.stats.phase2_busy_cycles += 1;
            if busy.done == self.cycle {
                self.busy = None;
                self.complete(busy.req, &mut out, &mut enabled_rows);
            }
        }
        if skipping {
            self.stats.gated_cycles += 1;
        }

        let blocks = stage1_used as u64 + pes_clocked.len() as u64 + p2_clocked as u64 + routed as u64;
        self.stats.active_block_cycles += blocks;
        self.stats.gated_row_cycles += self.provisioned_rows.saturating_sub(enabled_rows);
        self.stats.events += out.events.len() as u64;
        self.stats.cycles += 1;
        self.cycle += 1;
        out
    }

    fn complete(&mut self, req: Phase2Request, out: &mut StepOutput, enabled_rows: &mut u64) {
        let li = req.lane.index();
        let stream = &self.lanes[li].stream;
        let window = self.cfg.image.codebook.window(stream, req.window_start, self.width);
        let arr = &self.banks[req.bank];
        let mask = EnableMask { dn: req.dn, up: req.up };
        let (rows, searched) = arr.cam_search(&mask, SearchKey::Window(&window), Port::A).expect("validated range");
        let mut act = if self.cfg.row_enable { searched } else { arr.full_array_activity() };
        *enabled_rows += act.enabled_rows;
        self.stats.phase2_searches += 1;
        let mut longest = 0;
        for r in rows {
            act.sram_bits_read += self.payload_bits as u64;
            let p = self.bank_payloads[req.bank][r];
            let end = req.window_start + p.suffix_len - 1;
            // trailing wildcards can match the pad past the end
            if end >= stream.len() {
                continue;
            }
            longest = longest.max(p.suffix_len);
            out.events.push(MatchEvent { lane: req.lane, sub_pattern_id: p.sub_pattern_id, start: req.start, end, cycle_reported: self.cycle });
        }
        self.stats.phase2 += act;
        out.activity += act;
        if self.cfg.clock_gating && longest > 0 {
            let resume = req.window_start + longest;
            let st = &mut self.lanes[li];
            for r in st.regs.iter_mut() {
                if r.is_some_and(|g| g.start < resume) {
                    *r = None;
                }
            }
            st.fifo.retain(|q| q.start >= resume);
            st.skip_until = st.skip_until.max(resume);
        }
    }

    /// Feeds the streams and steps until drained.
    pub fn run_stream(&mut self, a: &[u8], b: Option<&[u8]>) -> Result<(Vec<MatchEvent>, CycleStats), EngineError> {
        self.feed(a, b)?;
        let mut events = Vec::new();
        while !self.drained() {
            events.extend(self.step().events);
        }
        Ok((events, self.stats.clone()))
    }
}

/// Input-to-report delay of a full-depth match, in cycles.
pub fn latency_cycles(cfg: &EngineConfig) -> usize {
    cfg.image.config.depth + cfg.phase2_latency
}

pub fn cycles_to_ns(cycles: usize, mhz: f64) -> f64 {
    cycles as f64 * 1000.0 / mhz
}

/// `cycle,lane,sub_pattern_id,start,end`
pub fn events_csv(events: &[MatchEvent]) -> String {
    let mut s = String::from("cycle,lane,sub_pattern_id,start,end\n");
    for e in events {
        s.push_str(&format!("{},{},{},{},{}\n", e.cycle_reported, e.lane, e.sub_pattern_id, e.start, e.end));
    }
    s
}

/// Events of one lane as `(sub_pattern_id, start, end)`, sorted by end.
pub fn lane_occurrences(events: &[MatchEvent], lane: Lane) -> Vec<crate::oracle::Occurrence> {
    let mut v: Vec<_> = events
        .iter()
        .filter(|e| e.lane == lane)
        .map(|e| crate::oracle::Occurrence { pattern_id: e.sub_pattern_id, start: e.start, end: e.end })
        .collect();
    v.sort_by_key(|o| (o.end, o.pattern_id, o.start));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, HwConfig};
    use crate::rulespec::parse_rules;

    fn engine(rules: &str, depth: usize) -> Engine {
        let rs = parse_rules(rules).unwrap();
        let img = compile(&rs, &HwConfig::default().with_depth(depth)).unwrap().image;
        Engine::load(EngineConfig::new(img)).unwrap()
    }

    #[test]
    fn terminal_reported_on_last_byte() {
        let mut e = engine("rule 1 = \"ab\"", 2);
        let (ev, _) = e.run_stream(b"xab", None).unwrap();
        assert_eq!(ev, vec![MatchEvent { lane: Lane::A, sub_pattern_id: 0, start: 1, end: 2, cycle_reported: 2 }]);
    }

    #[test]
    fn phase2_reported_after_latency() {
        let mut e = engine("rule 1 = \"abcd\"", 2);
        e.feed(b"zabcdz", None).unwrap();
        let mut queued = None;
        let mut events = Vec::new();
        while !e.drained() {
            let c = e.cycle();
            events.extend(e.step().events);
            if queued.is_none() && e.lanes[0].fifo.front().is_some() {
                queued = Some((c, e.lanes[0].fifo[0].window_start));
            }
        }
        assert_eq!(queued, Some((2, 3)));
        assert_eq!(events, vec![MatchEvent { lane: Lane::A, sub_pattern_id: 0, start: 1, end: 4, cycle_reported: 4 }]);
    }

    #[test]
    fn idle_pipeline_searches_nothing() {
        let mut e = engine("rule 1 = \"abcd\"", 4);
        let (ev, st) = e.run_stream(b"zzzzzzzz", None).unwrap();
        assert!(ev.is_empty());
        assert_eq!(st.pe_searches_port_a, 0);
        assert_eq!(st.stage1.sram_bits_read, 8 * 28);
    }

    #[test]
    fn queue_depth_zero_rejected() {
        let rs = parse_rules("rule 1 = \"abcd\"").unwrap();
        let img = compile(&rs, &HwConfig::default()).unwrap().image;
        let cfg = EngineConfig { queue_depth: 0, ..EngineConfig::new(img) };
        assert_eq!(Engine::load(cfg).unwrap_err(), EngineError::QueueDepth);
    }

    #[test]
    fn lane_b_idle_when_single_port() {
        let mut e = engine("rule 1 = \"ab\"", 2);
        assert_eq!(e.run_stream(b"ab", Some(b"ab")).unwrap_err(), EngineError::LaneBDisabled);
        let (_, st) = e.run_stream(b"abababab", None).unwrap();
        assert_eq!(st.pe_searches_port_b, 0);
        assert_eq!(st.bytes_consumed[1], 0);
    }

    #[test]
    fn gating_skips_suffix() {
        let mut e = engine("rule 1 = \"abcdefgh\"\nrule 2 = \"efgh\"", 2);
        let (ev, st) = e.run_stream(b"abcdefghxx", None).unwrap();
        let ids: Vec<_> = ev.iter().map(|e| e.sub_pattern_id).collect();
        assert_eq!(ids, vec![0]);
        assert!(st.gated_bytes > 0);
        e.cfg.clock_gating = false;
        let (ev, st) = e.run_stream(b"abcdefghxx", None).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(st.gated_bytes, 0);
    }

    #[test]
    fn dual_lane_throughput_and_symmetry() {
        let rs = parse_rules("rule 1 = \"ab\"\nrule 2 = \"abcdef\"").unwrap();
        let img = compile(&rs, &HwConfig::default()).unwrap().image;
        let mut e = Engine::load(EngineConfig { dual_port: true, clock_gating: false, ..EngineConfig::new(img) }).unwrap();
        let s = b"..ab..abcdef..";
        let (ev, st) = e.run_stream(s, Some(s)).unwrap();
        assert_eq!(lane_occurrences(&ev, Lane::A), lane_occurrences(&ev, Lane::B));
        assert_eq!(st.throughput(), 2.0);
        assert_eq!(st.pe_searches_port_a, st.pe_searches_port_b);
    }

    #[test]
    fn latency_identity() {
        let rs = parse_rules("rule 1 = \"abcdef\"").unwrap();
        let img = compile(&rs, &HwConfig::default()).unwrap().image;
        let cfg = EngineConfig::new(img);
        assert_eq!(latency_cycles(&cfg), 6);
        assert!((cycles_to_ns(6, CLOCK_MHZ) - 41.7).abs() < 0.1);
    }

    #[test]
    fn lane_a_issued_first() {
        let rs = parse_rules("rule 1 = \"abcdef\"").unwrap();
        let img = compile(&rs, &HwConfig::default().with_depth(2)).unwrap().image;
        let mut e = Engine::load(EngineConfig { dual_port: true, ..EngineConfig::new(img) }).unwrap();
        let s = b"abcdef";
        e.run_stream(s, Some(s)).unwrap();
        let lanes: Vec<Lane> = e.issue_log().iter().map(|&(_, l)| l).collect();
        assert_eq!(lanes, vec![Lane::A, Lane::B]);
        assert_eq!(e.issue_log()[1].0, e.issue_log()[0].0 + 2);
    }

    #[test]
    fn drop_policy_counts() {
        let rs = parse_rules("rule 1 = \"aaaaaa\"").unwrap();
        let img = compile(&rs, &HwConfig::default().with_depth(2)).unwrap().image;
        let cfg = EngineConfig { queue_depth: 1, clock_gating: false, congestion: Congestion::DropCount, ..EngineConfig::new(img) };
        let mut e = Engine::load(cfg.clone()).unwrap();
        let (ev, st) = e.run_stream(&[b'a'; 40], None).unwrap();
        assert!(st.dropped_requests > 0);
        assert_eq!(st.stall_cycles, 0);
        assert!(ev.len() < 35);
        let mut e = Engine::load(EngineConfig { congestion: Congestion::Stall, ..cfg }).unwrap();
        let (ev, st) = e.run_stream(&[b'a'; 40], None).unwrap();
        assert_eq!(st.dropped_requests, 0);
        assert!(st.stall_cycles > 0);
        assert_eq!(ev.len(), 35);
    }

    #[test]
    fn csv_header() {
        let ev = [MatchEvent { lane: Lane::B, sub_pattern_id: 3, start: 1, end: 2, cycle_reported: 9 }];
        assert_eq!(events_csv(&ev), "cycle,lane,sub_pattern_id,start,end\n9,B,3,1,2\n");
    }
}
