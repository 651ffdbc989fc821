use bipoisson::trajectory::{simulate_by_representation, simulate_forward};
use bipoisson::SimRng;
use bipoisson_bench::{params, simulation, THETAS};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn paths(c: &mut Criterion) {
    let mut g = c.benchmark_group("path");
    let sim = simulation(0.2);
    for theta in THETAS {
        let p = params(theta);
        let mut rng = SimRng::new(1);
        g.bench_function(BenchmarkId::new("forward", theta), |b| {
            b.iter(|| simulate_forward(&p, &sim, &mut rng).unwrap())
        });
        let mut rng = SimRng::new(1);
        g.bench_function(BenchmarkId::new("representation", theta), |b| {
            b.iter(|| simulate_by_representation(&p, &sim, &mut rng).unwrap())
        });
    }
    g.finish();
}

// At the CLI default window both phases run to K_max, so one path costs
// about 2e6 events.
fn tight_window(c: &mut Criterion) {
    let mut g = c.benchmark_group("path_tight_window");
    g.sample_size(10);
    let sim = simulation(1e-6);
    let p = params(1.0);
    let mut rng = SimRng::new(1);
    g.bench_function("forward", |b| {
        b.iter(|| simulate_forward(&p, &sim, &mut rng).unwrap())
    });
    g.finish();
}

criterion_group!(benches, paths, tight_window);
criterion_main!(benches);
