//! Build, simulate, and classify timings for both network forms.
//!
//! Grid sizes cover the published instances: the 10x10 walk-through, a
//! mid-size 64x64, and the 260x346 event-camera frame.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snn_dbscan::codec::{encode_flat, encode_systolic};
use snn_dbscan::netfmt::{deserialize, serialize};
use snn_dbscan::{
    build_flat, build_systolic, classify, run_pipelined_flat, run_systolic_stream,
    systolic_solution_steps, DbscanParams, EventFrame, Orientation, Simulator,
    FLAT_SOLUTION_STEPS,
};

fn frame(rows: u32, cols: u32, density: f64, seed: u64) -> EventFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = EventFrame::new(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            f.set(r, c, rng.gen_bool(density));
        }
    }
    f
}

fn bench_builders(c: &mut Criterion) {
    let mut g = c.benchmark_group("build");
    for &(rows, cols, eps) in &[(10u32, 10u32, 2u32), (64, 64, 4)] {
        let params = DbscanParams::new(rows, cols, eps, 4).unwrap();
        g.bench_function(format!("flat/{rows}x{cols}/eps{eps}"), |b| {
            b.iter(|| build_flat(black_box(&params), Orientation::Columns))
        });
    }
    // Row count is all that matters for the streaming form.
    let params = DbscanParams::new(260, 1, 4, 8).unwrap();
    g.bench_function("systolic/260rows/eps4", |b| {
        b.iter(|| build_systolic(black_box(&params), Orientation::Columns))
    });
    g.finish();

    let mut g = c.benchmark_group("build-large");
    g.sample_size(10);
    let params = DbscanParams::new(260, 346, 4, 8).unwrap();
    g.bench_function("flat/260x346/eps4", |b| {
        b.iter(|| build_flat(black_box(&params), Orientation::Columns))
    });
    g.finish();
}

fn bench_simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");

    for &(rows, cols, eps, min_pts) in &[(10u32, 10u32, 2u32, 4u32), (64, 64, 4, 8)] {
        let params = DbscanParams::new(rows, cols, eps, min_pts).unwrap();
        let f = frame(rows, cols, 0.3, 7);

        let net = build_flat(&params, Orientation::Columns);
        let sim = Simulator::new(&net).unwrap();
        let sched = encode_flat(&net, &f, 0).unwrap();
        g.bench_function(format!("flat/{rows}x{cols}/one-frame"), |b| {
            b.iter(|| sim.run(black_box(&sched), FLAT_SOLUTION_STEPS).unwrap())
        });

        let net = build_systolic(&params, Orientation::Columns);
        let sim = Simulator::new(&net).unwrap();
        let sched = encode_systolic(&net, &f, 0).unwrap();
        let horizon = systolic_solution_steps(cols, eps);
        g.bench_function(format!("systolic/{rows}x{cols}/one-frame"), |b| {
            b.iter(|| sim.run(black_box(&sched), horizon).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("throughput");
    g.sample_size(20);
    let params = DbscanParams::new(10, 10, 2, 4).unwrap();
    let frames: Vec<EventFrame> = (0..32).map(|k| frame(10, 10, 0.3, 100 + k)).collect();
    g.bench_function("flat/10x10/32-frames-pipelined", |b| {
        b.iter(|| run_pipelined_flat(black_box(&frames), &params).unwrap())
    });
    g.bench_function("systolic/10x10/32-frames-streamed", |b| {
        b.iter(|| run_systolic_stream(black_box(&frames), &params).unwrap())
    });
    g.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("classify");
    for &(rows, cols, eps, min_pts) in &[(64u32, 64u32, 4u32, 8u32), (260, 346, 4, 8)] {
        let params = DbscanParams::new(rows, cols, eps, min_pts).unwrap();
        let f = frame(rows, cols, 0.3, 11);
        g.bench_function(format!("{rows}x{cols}/eps{eps}"), |b| {
            b.iter(|| classify(black_box(&f), &params).unwrap())
        });
    }
    g.finish();
}

fn bench_text_format(c: &mut Criterion) {
    let mut g = c.benchmark_group("netfmt");
    let params = DbscanParams::new(10, 10, 2, 4).unwrap();
    let net = build_flat(&params, Orientation::Columns);
    g.bench_function("serialize/flat-10x10", |b| {
        b.iter(|| serialize(black_box(&net)))
    });
    let text = serialize(&net);
    g.bench_function("deserialize/flat-10x10", |b| {
        b.iter(|| deserialize(black_box(&text)).unwrap())
    });
    g.finish();
}

criterion_group!(
    benches,
    bench_builders,
    bench_simulation,
    bench_oracle,
    bench_text_format
);
criterion_main!(benches);
