use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hfz2::gf2kernel::F2Matrix;
use hfz2::oracle::{homfly_series, jones_kauffman};
use hfz2::{BraidWord, Computation, Config};

fn word(s: &str) -> BraidWord {
    s.parse().unwrap()
}

fn homfly(c: &mut Criterion) {
    let mut g = c.benchmark_group("homfly");
    g.sample_size(10);
    for (name, s, t) in [("unknot_t10", "1;", 10), ("trefoil_t6", "2;1,1,1", 6), ("figure_eight_t4", "3;1,-2,1,-2", 4)] {
        let w = word(s);
        g.bench_function(name, |b| {
            b.iter(|| {
                let comp = Computation::new(&w, &Config::default()).unwrap();
                black_box(comp.homfly_tables(t).unwrap())
            })
        });
    }
    g.finish();
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    g.sample_size(10);
    let trefoil = word("2;1,1,1");
    g.bench_function("e2_trefoil", |b| {
        b.iter(|| black_box(Computation::new(&trefoil, &Config::default()).unwrap().e2_table(4).unwrap()))
    });
    let fig8 = word("3;1,-2,1,-2");
    g.bench_function("khovanov_figure_eight", |b| {
        b.iter(|| black_box(Computation::new(&fig8, &Config::default()).unwrap().khovanov_table(None).unwrap()))
    });
    g.finish();
}

fn oracles(c: &mut Criterion) {
    let w = word("3;1,-2,1,-2");
    c.bench_function("jones_figure_eight", |b| b.iter(|| black_box(jones_kauffman(&w).unwrap())));
    c.bench_function("skein_figure_eight_x16", |b| b.iter(|| black_box(homfly_series(&w, 16).unwrap())));
}

fn rank(c: &mut Criterion) {
    let n = 512;
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut m = F2Matrix::zeros(n, n);
    for r in 0..n {
        for col in 0..n {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            if state & 1 == 1 {
                m.set(r, col, true);
            }
        }
    }
    c.bench_function("gf2_rank_512", |b| b.iter(|| black_box(m.rank())));
}

criterion_group!(benches, homfly, spectral, oracles, rank);
criterion_main!(benches);
