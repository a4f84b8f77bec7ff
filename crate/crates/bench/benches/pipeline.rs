use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use swingcast_core::trace::{generate_trace, GeneratorParams, PulseSpec};
use swingcast_core::{
    analyze_trace, detect_swings, paired_t, student_t_sf, DetectorConfig, NormalizerState, PhysicalConfig, Pipeline,
    TraceFile,
};

/// Five minutes at 100 Hz with a swing every 2 s.
fn session_trace() -> TraceFile {
    let pulses: Vec<_> = (0..150)
        .map(|i| PulseSpec::new(1000 + i * 2000, 300, 200.0 + (i % 7) as f64 * 80.0))
        .collect();
    let params = GeneratorParams {
        noise_dps: 3.0,
        seed: 1,
        ..GeneratorParams::default()
    };
    generate_trace(&pulses, &params).expect("valid pulses")
}

fn detection(c: &mut Criterion) {
    let trace = session_trace();
    let samples: Vec<_> = trace.samples().copied().collect();
    let det = DetectorConfig::default();
    let cfg = PhysicalConfig::default();
    let mut g = c.benchmark_group("detect");
    g.throughput(Throughput::Elements(samples.len() as u64));
    g.bench_function("detect_swings/5min", |b| {
        b.iter(|| detect_swings(black_box(&samples), &det, &cfg, &mut NormalizerState::new()))
    });
    g.bench_function("pipeline_ungated/5min", |b| {
        b.iter_batched(
            || Pipeline::ungated(det, cfg),
            |mut p| analyze_trace(black_box(&trace), &mut p).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

fn codec(c: &mut Criterion) {
    let trace = session_trace();
    let text = trace.encode().unwrap();
    let mut g = c.benchmark_group("trace");
    g.throughput(Throughput::Bytes(text.len() as u64));
    g.bench_function("encode/5min", |b| b.iter(|| black_box(&trace).encode().unwrap()));
    g.bench_function("decode/5min", |b| {
        b.iter(|| TraceFile::decode(black_box(&text)).unwrap())
    });
    g.finish();
}

fn stats(c: &mut Criterion) {
    let b = [6.0, 5.0, 2.0, 1.0, 2.0, 1.0, 2.0, 0.0, 4.0, 6.0];
    let v = [11.0, 4.0, 4.0, 1.0, 6.0, 1.0, 3.0, 1.0, 6.0, 3.0];
    c.bench_function("paired_t/n10", |bch| {
        bch.iter(|| paired_t(black_box(&b), black_box(&v)).unwrap())
    });
    c.bench_function("student_t_sf/df9", |bch| {
        bch.iter(|| student_t_sf(black_box(1.4923), black_box(9.0)))
    });
    c.bench_function("student_t_sf/df1000", |bch| {
        bch.iter(|| student_t_sf(black_box(2.5), black_box(1000.0)))
    });
}

criterion_group!(benches, detection, codec, stats);
criterion_main!(benches);
