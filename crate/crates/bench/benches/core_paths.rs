//! Hot paths of a training iteration: the forward Gram stack, the full
//! weight gradient, the SMO solve, and the span workspace plus gradient.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use deepmkl_core::arch::{self, ArchConfig};
use deepmkl_core::kernels::KernelSpec;
use deepmkl_core::span::{self, SpanConfig};
use deepmkl_core::stats;
use deepmkl_core::svm::{self, SvmParams};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labelled_points(n: usize, d: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, d));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for c in 0..d {
            let center = if c == 0 { sign } else { 0.0 };
            x[[i, c]] = center + rng.gen_range(-1.0..1.0);
        }
        y[i] = sign;
    }
    (x, y)
}

fn bench_forward_and_grad(c: &mut Criterion) {
    let cfg = ArchConfig::new(3, 2, KernelSpec::default_roster()).unwrap();
    let (x, _) = labelled_points(64, 6, 1);
    c.bench_function("forward l=3 h=2 n=64", |b| {
        b.iter(|| arch::forward(black_box(&cfg), black_box(&x)).unwrap())
    });
    let stack = arch::forward(&cfg, &x).unwrap();
    c.bench_function("grad_theta l=3 h=2 n=64", |b| {
        b.iter(|| arch::grad_theta(black_box(&cfg), black_box(&stack)).unwrap())
    });
}

fn bench_smo(c: &mut Criterion) {
    let cfg = ArchConfig::new(2, 1, KernelSpec::default_roster()).unwrap();
    let (x, y) = labelled_points(128, 6, 2);
    let k = arch::forward(&cfg, &x).unwrap().final_gram().clone();
    c.bench_function("smo solve n=128", |b| {
        b.iter(|| {
            svm::solve_with(black_box(&k), black_box(&y), SvmParams::new(10.0), None).unwrap()
        })
    });
}

fn bench_span(c: &mut Criterion) {
    let cfg = ArchConfig::new(2, 1, KernelSpec::default_roster()).unwrap();
    let (x, y) = labelled_points(96, 6, 3);
    let stack = arch::forward(&cfg, &x).unwrap();
    let k = stack.final_gram().clone();
    let model = svm::solve(&k, &y, 10.0).unwrap();
    let span_cfg = SpanConfig::default();
    c.bench_function("span workspace n=96", |b| {
        b.iter(|| span::build_workspace(black_box(&model), black_box(&k), &span_cfg).unwrap())
    });
    let ws = span::build_workspace(&model, &k, &span_cfg).unwrap();
    let dks = arch::grad_theta(&cfg, &stack).unwrap();
    c.bench_function("span gradient batch (8 directions)", |b| {
        b.iter(|| {
            span::span_grad_batch(black_box(&ws), black_box(&dks), &model, &span_cfg).unwrap()
        })
    });
}

fn bench_wilcoxon(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a: Vec<f64> = (0..18).map(|_| rng.gen_range(0.0..1.0)).collect();
    let b: Vec<f64> = (0..18).map(|_| rng.gen_range(0.0..1.0)).collect();
    c.bench_function("wilcoxon exact n=18", |bch| {
        bch.iter(|| stats::wilcoxon_signed_rank(black_box(&a), black_box(&b)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_forward_and_grad,
    bench_smo,
    bench_span,
    bench_wilcoxon
);
criterion_main!(benches);
