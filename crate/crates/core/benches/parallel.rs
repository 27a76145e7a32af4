use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use laakso::analysis::nondiff_height_census;
use laakso::constructions::build_lemma31_function;
use laakso::oracle::regularity_scan;
use laakso::rational::rat;
use laakso::{Exec, LaaksoPoint};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn census(c: &mut Criterion) {
    let p = LaaksoPoint::parse("47/243:0110").unwrap();
    let mut g = c.benchmark_group("census");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 4), &exec, |b, &e| {
            b.iter(|| nondiff_height_census(&p, 4, e).unwrap())
        });
    }
    g.finish();
}

fn regularity(c: &mut Criterion) {
    let radii = [rat(1, 9), rat(1, 27), rat(1, 81)];
    let mut g = c.benchmark_group("regularity_scan");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 6), &exec, |b, &e| {
            b.iter(|| regularity_scan(6, 20, &radii, 7, e).unwrap())
        });
    }
    g.finish();
}

fn pairwise(c: &mut Criterion) {
    let f = build_lemma31_function(&LaaksoPoint::parse("1/5:01").unwrap(), 1, 10)
        .unwrap()
        .function;
    let mut g = c.benchmark_group("pairwise_lipschitz");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, f.samples().len()), &exec, |b, &e| {
            b.iter(|| f.pairwise_lipschitz(e))
        });
    }
    g.finish();
}

criterion_group!(benches, census, regularity, pairwise);
criterion_main!(benches);
