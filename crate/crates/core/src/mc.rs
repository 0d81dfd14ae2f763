//! Deterministic parallel Monte Carlo.
//!
//! Work is split into fixed-size chunks. Chunk `c` draws from the ChaCha8
//! stream `c` of the run seed, so the numbers a sample sees do not depend on
//! which thread runs it. Per-chunk results are merged by a pairwise tree in
//! chunk order, which makes the floating-point sum independent of the
//! thread count as well.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::math::Rgb;

pub type McRng = ChaCha8Rng;

/// Samples per chunk. Part of the reproducibility contract: changing it
/// changes every seeded result.
pub const CHUNK: u64 = 4096;

/// RNG for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> McRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform in `[0, 1)`.
#[inline]
pub fn uniform(rng: &mut McRng) -> f64 {
    rng.gen::<f64>()
}

/// Runs `samples` evaluations of `body` and merges the per-chunk
/// accumulators deterministically.
pub fn run<A, I, F, M>(samples: u64, seed: u64, init: I, body: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &mut McRng, u64) + Sync,
    M: Fn(A, A) -> A + Sync,
{
    let chunks = samples.div_ceil(CHUNK).max(1);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let mut acc = init();
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            for i in lo..hi {
                body(&mut acc, &mut rng, i);
            }
            acc
        })
        .collect();
    tree_reduce(parts, &merge).unwrap_or_else(init)
}

/// Pairwise reduction in index order.
pub fn tree_reduce<A, M: Fn(A, A) -> A>(mut v: Vec<A>, merge: &M) -> Option<A> {
    while v.len() > 1 {
        let mut next = Vec::with_capacity(v.len().div_ceil(2));
        let mut it = v.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge(a, b)),
                None => next.push(a),
            }
        }
        v = next;
    }
    v.pop()
}

/// Running first and second moments of an RGB estimator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RgbStats {
    pub n: u64,
    pub sum: Rgb,
    pub sum_sq: Rgb,
}

impl RgbStats {
    pub fn push(&mut self, v: Rgb) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(self, o: RgbStats) -> RgbStats {
        RgbStats {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }

    pub fn mean(&self) -> Rgb {
        if self.n == 0 {
            Rgb::ZERO
        } else {
            self.sum / self.n as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> Rgb {
        if self.n < 2 {
            return Rgb::ZERO;
        }
        let n = self.n as f64;
        let m = self.mean();
        let var = (self.sum_sq / n - m * m).map(|v| v.max(0.0)) * (n / (n - 1.0));
        (var / n).map(f64::sqrt)
    }
}

/// Scalar mean with standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Stats {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(self, o: Stats) -> Stats {
        Stats {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.mean();
        ((self.sum_sq / n - m * m).max(0.0) / (n - 1.0)).sqrt()
    }
}

/// Mean of `f(rng)` over `samples` draws.
pub fn estimate<F>(samples: u64, seed: u64, f: F) -> Stats
where
    F: Fn(&mut McRng) -> f64 + Sync,
{
    run(
        samples,
        seed,
        Stats::default,
        |acc, rng, _| acc.push(f(rng)),
        Stats::merge,
    )
}

/// Channel-wise mean of `f(rng)` over `samples` draws.
pub fn estimate_rgb<F>(samples: u64, seed: u64, f: F) -> RgbStats
where
    F: Fn(&mut McRng) -> Rgb + Sync,
{
    run(
        samples,
        seed,
        RgbStats::default,
        |acc, rng, _| acc.push(f(rng)),
        RgbStats::merge,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_count_does_not_change_result() {
        let f = |rng: &mut McRng| uniform(rng).powi(3);
        let a = estimate(50_000, 7, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate(50_000, 7, f));
        assert_eq!(a.sum.to_bits(), b.sum.to_bits());
        assert!((a.mean() - 0.25).abs() < 4.0 * a.std_err());
    }

    #[test]
    fn streams_differ() {
        let mut a = stream_rng(1, 0);
        let mut b = stream_rng(1, 1);
        assert_ne!(uniform(&mut a), uniform(&mut b));
    }

    #[test]
    fn tree_reduce_keeps_order() {
        let v: Vec<String> = (0..7).map(|i| i.to_string()).collect();
        let s = tree_reduce(v, &|a, b| format!("{a}{b}")).unwrap();
        assert_eq!(s, "0123456");
    }
}
