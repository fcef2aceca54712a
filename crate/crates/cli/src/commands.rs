use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use camdpi::compiler::{build_conventional_ac, compile, parse_stage_spec, read_image, write_image, HwConfig, Route, TableImage};
use camdpi::engine::{lane_occurrences, Congestion, Engine, EngineConfig, Lane, MatchEvent};
use camdpi::exec::Exec;
use camdpi::fixed1s::Code11;
use camdpi::metrics::{
    accumulate, best_depths, gating_savings, hitrate_csv, memory_report, pattern_bytes, sizes_csv, stages_csv, sweep_hitrate,
    sweep_rulesize, sweep_stages, CoefficientTable, Workload,
};
use camdpi::oracle::{oracle_match, oracle_rules, oracle_skip_lanes, Occurrence, SkipModel};
use camdpi::phase3::{build_rule_table, hit_pairs, Phase3};
use camdpi::rulespec::{gen_ruleset, gen_traffic, parse_rules, RuleGenParams, RuleSet, TrafficSpec};
use serde_json::json;

use crate::{framing, Cli, Cmd, Common, CongestionArg, Failure, GenCmd, RunArgs, SweepArgs, SweepKind};

type Res<T> = Result<T, Failure>;

pub fn dispatch(cli: Cli) -> Res<()> {
    let c = &cli.common;
    match cli.cmd {
        Cmd::Compile { ref rules } => cmd_compile(c, rules),
        Cmd::Run(ref a) => cmd_run(c, a),
        Cmd::Sweep(ref a) => cmd_sweep(c, a),
        Cmd::Gen(ref g) => cmd_gen(c, g),
        Cmd::Dump { ref image } => cmd_dump(image),
    }
}

fn out_dir(c: &Common) -> Res<PathBuf> {
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// Stdout that tolerates a closed pipe (`camdpi dump img.json | head`).
fn emit(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> Res<()> {
    fs::write(path, data).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn hw_config(c: &Common) -> Res<HwConfig> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => HwConfig::default(),
    };
    if let Some(d) = c.depth {
        cfg = cfg.with_depth(d);
    }
    if let Some(s) = &c.stages {
        cfg.stages = Some(parse_stage_spec(s).map_err(|e| Failure::Usage(e.to_string()))?);
    }
    Ok(cfg)
}

fn coefficients(c: &Common) -> Res<CoefficientTable> {
    let Some(p) = &c.coeffs else { return Ok(CoefficientTable::default()) };
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let t: CoefficientTable = toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
    t.validate().map_err(|e| anyhow!("{}: {e}", p.display()))?;
    Ok(t)
}

fn load_rules(p: &Path) -> Res<RuleSet> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    Ok(parse_rules(&text).with_context(|| format!("parsing {}", p.display()))?)
}

fn cmd_compile(c: &Common, rules: &Path) -> Res<()> {
    let rs = load_rules(rules)?;
    let cfg = hw_config(c)?;
    let compiled = compile(&rs, &cfg).with_context(|| format!("compiling {}", rules.display()))?;
    let path = out_dir(c)?.join("image.json");
    write_image(&compiled.image, &path).with_context(|| format!("writing {}", path.display()))?;
    let report = json!({
        "image": path,
        "patterns": rs.patterns.len(),
        "sub_patterns": compiled.subs.len(),
        "pe_rows_used": compiled.image.used_pe_rows(),
        "bank_rows_used": compiled.image.used_bank_rows(),
        "stages": compiled.image.config.stages,
        "memory": memory_report(&compiled.image, pattern_bytes(&rs)),
        "pipelined": compiled.stats,
        "conventional": build_conventional_ac(&rs),
    });
    emit(&format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes")));
    Ok(())
}

fn first_diff(got: &[Occurrence], want: &[Occurrence]) -> String {
    let i = got.iter().zip(want).position(|(a, b)| a != b).unwrap_or(got.len().min(want.len()));
    format!("{} events vs {} expected; first difference at #{i}: got {:?}, expected {:?}", got.len(), want.len(), got.get(i), want.get(i))
}

fn cmd_run(c: &Common, a: &RunArgs) -> Res<()> {
    if a.streams.len() != c.lanes as usize {
        return Err(Failure::Usage(format!("--lanes {} needs {} stream file(s), got {}", c.lanes, c.lanes, a.streams.len())));
    }
    let rs = load_rules(&a.rules)?;
    let coeffs = coefficients(c)?;
    let cfg = match &a.image {
        Some(p) => read_image(p).with_context(|| format!("reading {}", p.display()))?.config,
        None => hw_config(c)?,
    };
    let compiled = compile(&rs, &cfg).with_context(|| format!("compiling {}", a.rules.display()))?;
    if let Some(p) = &a.image {
        let img = read_image(p).with_context(|| format!("reading {}", p.display()))?;
        if img != compiled.image {
            return Err(anyhow!("{} was not compiled from {}", p.display(), a.rules.display()).into());
        }
    }
    let table = build_rule_table(&rs, &compiled.plan, &compiled.subs).context("building the rule table")?;
    let subs: Vec<_> = compiled.subs.iter().map(|s| s.as_pattern()).collect();

    let raw: Vec<Vec<u8>> = a
        .streams
        .iter()
        .map(|p| fs::read(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<_, _>>()?;
    let mut lanes_packets: Vec<Vec<&[u8]>> = Vec::new();
    for (p, data) in a.streams.iter().zip(&raw) {
        if data.is_empty() {
            return Err(anyhow!("{} is empty", p.display()).into());
        }
        let packets = if a.framed { framing::split(data).with_context(|| format!("reading {}", p.display()))? } else { vec![&data[..]] };
        lanes_packets.push(packets);
    }
    let n_packets = lanes_packets.iter().map(Vec::len).max().unwrap_or(0);

    let ecfg = EngineConfig {
        dual_port: c.lanes == 2,
        clock_gating: !c.no_gating,
        congestion: match c.congestion {
            CongestionArg::Stall => Congestion::Stall,
            CongestionArg::Drop => Congestion::DropCount,
        },
        queue_depth: a.queue_depth,
        phase2_latency: a.latency,
        row_enable: !a.no_row_enable,
        ..EngineConfig::new(compiled.image.clone())
    };
    let model = SkipModel { depth: cfg.depth, width: cfg.width, phase2_latency: a.latency, queue_depth: a.queue_depth };
    let mut engine = Engine::load(ecfg).map_err(|e| Failure::Usage(e.to_string()))?;
    let lane_ids = [Lane::A, Lane::B];
    let mut flows: Vec<Phase3> = (0..c.lanes).map(|_| Phase3::new(&table)).collect();

    let mut events_out = String::from("packet,cycle,lane,sub_pattern_id,start,end\n");
    let mut hits_out = String::from("packet,lane,rule_id,end_offset\n");
    let mut total = None;
    let (mut n_events, mut n_hits) = (0usize, 0usize);
    for k in 0..n_packets {
        let streams: Vec<&[u8]> = lanes_packets.iter().map(|p| p.get(k).copied().unwrap_or_default()).collect();
        let (events, stats) = engine.run_stream(streams[0], streams.get(1).copied()).map_err(|e| anyhow!("packet {k}: {e}"))?;
        match &mut total {
            None => total = Some(stats),
            Some(t) => t.absorb(&stats),
        }
        for e in &events {
            let _ = writeln!(events_out, "{k},{},{},{},{},{}", e.cycle_reported, e.lane, e.sub_pattern_id, e.start, e.end);
        }
        n_events += events.len();
        let skip_ref = (c.oracle_check && !c.no_gating).then(|| oracle_skip_lanes(&subs, &streams, &model));
        for (i, flow) in flows.iter_mut().enumerate() {
            let lane = lane_ids[i];
            flow.reset_flow();
            let mine: Vec<MatchEvent> = events.iter().filter(|e| e.lane == lane).copied().collect();
            let hits = flow.process(&mine).map_err(|e| anyhow!("packet {k} lane {lane}: {e}"))?;
            for h in &hits {
                let _ = writeln!(hits_out, "{k},{lane},{},{}", h.rule_id, h.end);
            }
            n_hits += hits.len();
            if !c.oracle_check {
                continue;
            }
            let got = lane_occurrences(&events, lane);
            if let Some(r) = &skip_ref {
                if got != r[i] {
                    return Err(Failure::Mismatch(format!("packet {k} lane {lane}: {}", first_diff(&got, &r[i]))));
                }
            } else {
                let want = oracle_match(&subs, streams[i]);
                if got != want {
                    return Err(Failure::Mismatch(format!("packet {k} lane {lane}: {}", first_diff(&got, &want))));
                }
                let (got, want) = (hit_pairs(&hits), oracle_rules(&rs, streams[i]));
                if got != want {
                    return Err(Failure::Mismatch(format!(
                        "packet {k} lane {lane}: {} rule hits vs {} expected; first few {:?} vs {:?}",
                        got.len(),
                        want.len(),
                        &got[..got.len().min(4)],
                        &want[..want.len().min(4)]
                    )));
                }
            }
        }
    }
    let stats = total.expect("at least one packet");
    let energy = accumulate(&stats, &coeffs, pattern_bytes(&rs));

    let dir = out_dir(c)?;
    write(&dir.join("events.csv"), events_out)?;
    write(&dir.join("rule_hits.csv"), hits_out)?;
    write(&dir.join("stats.json"), stats.to_report())?;
    write(&dir.join("energy.json"), serde_json::to_string_pretty(&energy).expect("energy serializes"))?;
    emit(&format!(
        "packets {n_packets}  bytes {}  cycles {}  throughput {:.3} B/cycle  events {n_events}  rule hits {n_hits}  dropped {}  energy/byte {:.4}{}",
        stats.bytes_total() + stats.gated_bytes,
        stats.cycles,
        stats.throughput(),
        stats.dropped_requests,
        energy.energy_per_search,
        if c.oracle_check { "  oracle ok" } else { "" }
    ));
    Ok(())
}

fn desk_params(c: &Common) -> RuleGenParams {
    RuleGenParams { seed: c.seed.unwrap_or(RuleGenParams::desk().seed), ..RuleGenParams::desk() }
}

fn cmd_sweep(c: &Common, a: &SweepArgs) -> Res<()> {
    let exec = if a.sequential { Exec::Sequential } else { Exec::default() };
    let cfg = hw_config(c)?;
    let coeffs = coefficients(c)?;
    let bad = |e: camdpi::metrics::MetricsError| Failure::Data(anyhow!(e));
    let (csv, note) = match a.kind {
        SweepKind::Rulesize => {
            let work = Workload { length: a.len, ..Workload::default() };
            let rows = sweep_rulesize(desk_params(c).seed, &a.sizes, &cfg, &coeffs, work, exec).map_err(bad)?;
            (sizes_csv(&rows), String::new())
        }
        SweepKind::Hitrate => {
            let rs = match &a.rules {
                Some(p) => load_rules(p)?,
                None => gen_ruleset(&desk_params(c), &cfg).context("generating the desk ruleset")?,
            };
            let rows = sweep_hitrate(&rs, &cfg, &a.rates, a.len, 1, &coeffs, exec).map_err(bad)?;
            let s: Vec<String> = gating_savings(&rows).iter().map(|(h, s)| format!("{h}: {:.1}%", s * 100.0)).collect();
            (hitrate_csv(&rows), format!("gating saving by hit rate  {}", s.join("  ")))
        }
        SweepKind::Stages => {
            let rows = sweep_stages(&desk_params(c), &cfg, &a.depths, &a.rates, a.len, &coeffs, exec).map_err(bad)?;
            let best = best_depths(&rows);
            let s: Vec<String> = best.iter().map(|(h, d)| format!("{h}: D={d}")).collect();
            let crossover = best.windows(2).find(|w| w[1].1 < w[0].1).map(|w| w[1].0);
            let tail = match crossover {
                Some(h) => format!("shallower Phase 1 wins from hit rate {h}"),
                None => "no crossover to a shallower Phase 1".into(),
            };
            (stages_csv(&rows), format!("cheapest depth  {}  ({tail})", s.join("  ")))
        }
    };
    emit(&csv);
    if !note.is_empty() {
        eprintln!("{note}");
    }
    if c.out.is_some() {
        let name = match a.kind {
            SweepKind::Rulesize => "rulesize.csv",
            SweepKind::Hitrate => "hitrate.csv",
            SweepKind::Stages => "stages.csv",
        };
        write(&out_dir(c)?.join(name), csv)?;
    }
    Ok(())
}

fn cmd_gen(c: &Common, g: &GenCmd) -> Res<()> {
    let dir = out_dir(c)?;
    match *g {
        GenCmd::Rules { n, min_len, max_len, wildcard_frac, multi_frac } => {
            let cfg = hw_config(c)?;
            let p = RuleGenParams {
                seed: c.seed.unwrap_or(7),
                n_patterns: n,
                min_len,
                max_len,
                wildcard_frac,
                multi_rule_frac: multi_frac,
            };
            let rs = gen_ruleset(&p, &cfg).context("generating rules")?;
            let path = dir.join("rules.txt");
            write(&path, rs.to_text())?;
            emit(&format!("{} patterns in {} rules -> {}\n", rs.patterns.len(), rs.rules.len(), path.display()));
        }
        GenCmd::Traffic { ref rules, hit_rate, len, packets } => {
            let rs = load_rules(rules)?;
            let seed = c.seed.unwrap_or(1);
            let spec = |i: u64| TrafficSpec { length: len, hit_rate, seed: seed + i };
            let (stream, truth) = match packets {
                None => {
                    let t = gen_traffic(&spec(0), &rs).context("generating traffic")?;
                    (t.stream.clone(), t.truth_csv())
                }
                Some(k) => {
                    let mut all = Vec::with_capacity(k);
                    let mut truth = String::from("packet,pattern_id,start,end\n");
                    for i in 0..k {
                        let t = gen_traffic(&spec(i as u64), &rs).with_context(|| format!("generating packet {i}"))?;
                        for o in &t.truth {
                            let _ = writeln!(truth, "{i},{},{},{}", o.pattern_id, o.start, o.end);
                        }
                        all.push(t.stream);
                    }
                    (framing::join(all.iter().map(Vec::as_slice)), truth)
                }
            };
            write(&dir.join("stream.bin"), &stream)?;
            write(&dir.join("truth.csv"), truth)?;
            emit(&format!("{} bytes -> {}\n", stream.len(), dir.join("stream.bin").display()));
        }
    }
    Ok(())
}

fn show_byte(b: u8) -> String {
    match b {
        b'\\' => "\\\\".into(),
        0x20..=0x7e => (b as char).to_string(),
        _ => format!("\\x{b:02x}"),
    }
}

fn show_route(r: &Option<Route>) -> String {
    match r {
        Some(Route::Pe { pe, dn, up }) => format!("pe {pe} rows {dn}-{up}"),
        Some(Route::Phase2 { bank, dn, up }) => format!("bank {bank} rows {dn}-{up}"),
        None => "-".into(),
    }
}

fn dump_text(img: &TableImage) -> String {
    let decode: HashMap<Code11, u8> = img.codebook.codes().iter().enumerate().map(|(b, &c)| (c, b as u8)).collect();
    let ch = |c: Code11| if c.is_zero() { "?".to_string() } else { decode.get(&c).map_or_else(|| format!("<{}>", c.to_hex()), |&b| show_byte(b)) };
    let cfg = &img.config;
    let mut s = String::new();
    let _ = writeln!(s, "depth {}  pes {}x{}  banks {}x{}  width {}", cfg.depth, cfg.n_pes, cfg.pe_rows, cfg.n_banks, cfg.bank_rows, cfg.width);
    for st in cfg.stages.iter().flatten() {
        let _ = writeln!(s, "stage {}: pes {:?}", st.stage, st.pes);
    }
    let _ = writeln!(s, "\nstage 1");
    for (b, e) in img.stage1.iter().enumerate() {
        if let Some(e) = e {
            let t = e.terminal.map_or(String::new(), |t| format!("  reports {t}"));
            let _ = writeln!(s, "  {:<6} -> {}{t}", show_byte(b as u8), show_route(&e.route));
        }
    }
    for (p, rows) in img.pes.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let _ = writeln!(s, "\npe {p} ({} rows)", rows.len());
        for (i, r) in rows.iter().enumerate() {
            let t = r.next.terminal.map_or(String::new(), |t| format!("  reports {t}"));
            let _ = writeln!(s, "  {i:>3} {:<6} -> {}{t}", ch(r.code), show_route(&r.next.route));
        }
    }
    for (b, rows) in img.phase2.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let _ = writeln!(s, "\nbank {b} ({} rows)", rows.len());
        for (i, r) in rows.iter().enumerate() {
            let text: String = r.row.slots.iter().take(r.payload.suffix_len).map(|&c| ch(c)).collect();
            let _ = writeln!(s, "  {i:>3} \"{text}\"  sub {}  len {}", r.payload.sub_pattern_id, r.payload.suffix_len);
        }
    }
    s
}

fn cmd_dump(image: &Path) -> Res<()> {
    let img = read_image(image).with_context(|| format!("reading {}", image.display()))?;
    emit(&dump_text(&img));
    Ok(())
}
