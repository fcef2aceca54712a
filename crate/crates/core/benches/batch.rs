//! Parallel vs sequential batch execution over the desk ruleset.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use camdpi::compiler::{compile, HwConfig};
use camdpi::engine::{Engine, EngineConfig};
use camdpi::exec::Exec;
use camdpi::metrics::{sweep_hitrate, CoefficientTable};
use camdpi::rulespec::{gen_ruleset, gen_traffic, RuleGenParams, TrafficSpec};

const PACKETS: usize = 16;
const PACKET_LEN: usize = 8192;

fn packets(c: &mut Criterion) {
    let cfg = HwConfig::default();
    let rs = gen_ruleset(&RuleGenParams::desk(), &cfg).unwrap();
    let image = compile(&rs, &cfg).unwrap().image;
    let streams: Vec<Vec<u8>> = (0..PACKETS)
        .map(|i| gen_traffic(&TrafficSpec { length: PACKET_LEN, hit_rate: 0.1, seed: i as u64 }, &rs).unwrap().stream)
        .collect();

    let mut g = c.benchmark_group("engine_batch");
    g.sample_size(10);
    g.throughput(Throughput::Bytes((PACKETS * PACKET_LEN) as u64));
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| {
                exec.map(&streams, |s| {
                    let mut eng = Engine::load(EngineConfig::new(image.clone())).unwrap();
                    eng.run_stream(s, None).unwrap().0.len()
                })
            })
        });
    }
    g.finish();
}

fn hitrate_sweep(c: &mut Criterion) {
    let cfg = HwConfig::default();
    let rs = gen_ruleset(&RuleGenParams::desk(), &cfg).unwrap();
    let coeffs = CoefficientTable::default();
    let rates = [0.0, 0.1, 0.5, 0.9];

    let mut g = c.benchmark_group("hitrate_sweep");
    g.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| sweep_hitrate(&rs, &cfg, &rates, 16384, 1, &coeffs, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, packets, hitrate_sweep);
criterion_main!(benches);
