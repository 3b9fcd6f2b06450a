use criterion::{criterion_group, criterion_main, Criterion};

use excomp::completion::{complete, CompleteOptions, Tower, DEFAULT_BUDGET};
use excomp::exactcomp::{compose, verify_category, Exact, PerObject};
use excomp::fincat::projection_class;
use excomp::fixtures;
use excomp::syntactic::{check_cq_pairs, sample_pairs, SampleBounds, Signature};

fn completion(c: &mut Criterion) {
    let (p, _, _) = fixtures::f2();
    let lambda = projection_class(p.base());
    c.bench_function("complete F2", |b| b.iter(|| complete(&p, &lambda, CompleteOptions::default()).unwrap()));
    let (q, _, _) = fixtures::f1();
    let l1 = projection_class(q.base());
    c.bench_function("complete F1 twice", |b| b.iter(|| Tower::build(&q, &l1, 2, DEFAULT_BUDGET).unwrap()));
}

fn containment(c: &mut Criterion) {
    let sig = Signature::new(&[("E", 2), ("R", 1)]);
    let bounds = SampleBounds { max_context: 2, max_vars: 4, max_atoms: 3 };
    let pairs = sample_pairs(&sig, 7, 50, &bounds);
    c.bench_function("cq 50 pairs, models up to 3", |b| b.iter(|| check_cq_pairs(&sig, &pairs, 3).unwrap()));
}

fn exact(c: &mut Criterion) {
    let (p, _, el) = fixtures::powerset(5);
    let lambda = projection_class(p.base());
    let x = Exact::new(&p, &el, &lambda);
    let t = p.base().terminal();
    let objs = vec![
        PerObject { name: "1".into(), a: t, c: t, rho: p.fiber(t).top() },
        x.diagonal_object("X", p.base().object_by_name("X").unwrap()).unwrap(),
    ];
    c.bench_function("exact completion laws", |b| b.iter(|| verify_category(&x, &objs, &[t], 100_000, &compose).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = completion, containment, exact
}
criterion_main!(benches);
