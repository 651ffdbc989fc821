use std::hint::black_box;

use bipoisson::bridge::{bridge_log_mass, BridgeQuery};
use bipoisson::verify::{joint_log_mgf, JointMgfQuery};
use bipoisson::{forward_kernel, KernelQuery, State};
use bipoisson_bench::{params, THETAS};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn kernel_log_mass(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel_log_mass");
    let queries = [
        ("birth", 0.25, 0.75, State::Count(3), State::Count(10)),
        ("gamma", 0.5, 1.0, State::Count(2), State::Level(4.0)),
        ("entrance", 1.0, 2.0, State::Level(4.0), State::Count(3)),
        ("death", 2.0, 5.0, State::Count(40), State::Count(12)),
    ];
    for theta in THETAS {
        let p = params(theta);
        for (name, s, t, from, to) in queries {
            let q = KernelQuery::new(s, t, from).unwrap();
            g.bench_with_input(BenchmarkId::new(name, theta), &q, |b, q| {
                b.iter(|| {
                    forward_kernel(&p, black_box(q))
                        .unwrap()
                        .log_mass(to)
                        .unwrap()
                })
            });
        }
    }
    g.finish();
}

fn bridge(c: &mut Criterion) {
    let mut g = c.benchmark_group("bridge_log_mass");
    let p = params(1.0);
    let queries = [
        (
            "birth_birth",
            BridgeQuery::new(0.2, 0.5, 0.8, State::Count(1), State::Count(6)).unwrap(),
        ),
        (
            "cross_death",
            BridgeQuery::new(0.5, 2.0, 4.0, State::Count(2), State::Count(1)).unwrap(),
        ),
    ];
    for (name, q) in queries {
        g.bench_function(name, |b| {
            b.iter(|| bridge_log_mass(&p, black_box(&q), 2).unwrap())
        });
    }
    g.finish();
}

fn joint_mgf(c: &mut Criterion) {
    let mut g = c.benchmark_group("joint_log_mgf");
    for n in [1usize, 2, 4] {
        let times: Vec<f64> = [0.25, 0.75, 1.5, 3.0][..n].to_vec();
        let args: Vec<f64> = [0.1, -0.2, 0.1, -0.1][..n].to_vec();
        let q = JointMgfQuery::new(1.0, times, args).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &q, |b, q| {
            b.iter(|| joint_log_mgf(black_box(q)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, kernel_log_mass, bridge, joint_mgf);
criterion_main!(benches);
