use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use scatterkit::{HyperExpState, SegmentTermState};
use scatterkit_bench::paths;

fn segment_term_vs_hyperexp(c: &mut Criterion) {
    let mut group = c.benchmark_group("exit_probability");
    for k in [4usize, 8, 16] {
        let ps = paths(k, 256, 0.5, 41);
        group.throughput(Throughput::Elements(ps.len() as u64));
        group.bench_with_input(BenchmarkId::new("segment_term", k), &ps, |b, ps| {
            let mut st = SegmentTermState::with_capacity(0.0, k);
            b.iter(|| {
                let mut acc = 0.0;
                for l in ps {
                    let (&lo, path) = l.split_last().unwrap();
                    st.reset(lo);
                    for &x in path {
                        st.add_bounce(x).unwrap();
                    }
                    acc += st.value();
                }
                black_box(acc)
            })
        });
        group.bench_with_input(BenchmarkId::new("hyperexp", k), &ps, |b, ps| {
            b.iter(|| {
                let mut acc = 0.0;
                for l in ps {
                    let (&lo, path) = l.split_last().unwrap();
                    let mut h = HyperExpState::new();
                    for &x in path {
                        h.add_bounce(x).unwrap();
                    }
                    acc += h.p_exit(lo);
                }
                black_box(acc)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, segment_term_vs_hyperexp);
criterion_main!(benches);
