use allelo_core::coupling::{run_ladder, CouplingAxis};
use allelo_core::meanfield::{basin_map, fixed_points, MeanFieldParams};
use allelo_core::percolation::{percolate, PercSpec};
use allelo_core::{sample_initial, simulate, Lattice, ModelParams, Purpose, SampleSpec, StreamKey};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};

fn engine(c: &mut Criterion) {
    let p = ModelParams::new(4.0, 3.0, 1.0, 1.0, 2, 100);
    let lat = Lattice::for_params(&p).unwrap();
    let init = sample_initial(100, 2, 0.25, 0.25, 1).unwrap();
    let horizon = 2.0;
    let events = p.expected_events(horizon);
    let mut g = c.benchmark_group("simulate");
    g.throughput(Throughput::Elements(events as u64));
    g.bench_function("100x100_t2", |b| {
        b.iter(|| simulate(&init, &lat, &p, horizon, 1, &SampleSpec::endpoints(horizon)).unwrap())
    });
    g.finish();

    c.bench_function("ladder_gamma_3_levels", |b| {
        let key = StreamKey::replicate(0, Purpose::Events);
        b.iter(|| {
            run_ladder(&init, &lat, &p, CouplingAxis::Gamma, &[0.5, 1.0, 2.0], horizon, 1, &[horizon], key).unwrap()
        })
    });
}

fn meanfield(c: &mut Criterion) {
    let p = MeanFieldParams::new(2.0, 2.5, 4.0);
    c.bench_function("fixed_points", |b| b.iter(|| fixed_points(&p)));
    c.bench_function("basin_map_50", |b| b.iter(|| basin_map(&p, 50, 500.0).unwrap()));
}

fn percolation(c: &mut Criterion) {
    c.bench_function("percolate_d1_n200", |b| {
        b.iter_batched(|| PercSpec::new(0.7, 1, 200, 3), |s| percolate(&s).unwrap(), BatchSize::SmallInput)
    });
    c.bench_function("percolate_d2_n40", |b| b.iter(|| percolate(&PercSpec::new(0.5, 2, 40, 3)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = engine, meanfield, percolation
}
criterion_main!(benches);
