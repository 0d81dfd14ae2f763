//! Workloads for the criterion benchmarks.

use std::f64::consts::PI;

use scatterkit::mc::{stream_rng, uniform, McRng};
use scatterkit::segment::EPS_SINGULAR;
use scatterkit::smith::lambda;
use scatterkit::{RoughnessParams, Vec3};

fn direction(rng: &mut McRng, lo: f64, hi: f64) -> Vec3 {
    let z = lo + (hi - lo) * uniform(rng);
    Vec3::from_cos_theta(z, 2.0 * PI * uniform(rng))
}

/// `n` random `k`-bounce paths as signed Λ lists, skipping configurations the
/// hyperexponential update cannot handle.
pub fn paths(k: usize, n: usize, alpha: f64, seed: u64) -> Vec<Vec<f64>> {
    let r = RoughnessParams::isotropic(alpha).expect("valid roughness");
    let mut rng = stream_rng(seed, k as u64);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut l = vec![lambda(direction(&mut rng, -1.0, -1e-3), &r)];
        for _ in 1..k {
            l.push(lambda(direction(&mut rng, -1.0, 1.0), &r));
        }
        l.push(lambda(direction(&mut rng, 1e-3, 1.0), &r));
        let down: Vec<f64> = l[..k].iter().filter(|x| **x < 0.0).map(|x| -x).collect();
        let singular = down
            .iter()
            .enumerate()
            .any(|(i, a)| down[..i].iter().any(|b| (a - b).abs() < 10.0 * EPS_SINGULAR));
        if !singular && l[1..k].iter().all(|x| *x != 0.0) {
            out.push(l);
        }
    }
    out
}
