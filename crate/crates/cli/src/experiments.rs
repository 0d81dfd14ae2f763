//! Computations shared by the subcommands and the acceptance suite.

use std::f64::consts::PI;
use std::hint::black_box;
use std::time::Instant;

use scatterkit::brdf;
use scatterkit::mc::{self, uniform, McRng};
use scatterkit::segment::{self, EPS_SINGULAR};
use scatterkit::smith::lambda;
use scatterkit::{BrdfEvalConfig, FresnelSpec, HyperExpState, Result, RoughnessParams, SegmentTermState, Vec3};

/// Hemisphere bins, uniform in `cos θ` and in `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HemiGrid {
    pub n_cos: usize,
    pub n_phi: usize,
}

impl HemiGrid {
    pub fn square(n: usize) -> Self {
        Self { n_cos: n, n_phi: n }
    }

    pub fn len(&self) -> usize {
        self.n_cos * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, d: Vec3) -> Option<usize> {
        if d.z <= 0.0 {
            return None;
        }
        let i = ((d.z * self.n_cos as f64) as usize).min(self.n_cos - 1);
        let phi = d.y.atan2(d.x).rem_euclid(2.0 * PI);
        let j = ((phi / (2.0 * PI) * self.n_phi as f64) as usize).min(self.n_phi - 1);
        Some(i * self.n_phi + j)
    }

    /// `(cos_lo, cos_hi, phi_lo, phi_hi)` of bin `b`.
    pub fn bounds(&self, b: usize) -> (f64, f64, f64, f64) {
        let (i, j) = (b / self.n_phi, b % self.n_phi);
        let dc = 1.0 / self.n_cos as f64;
        let dp = 2.0 * PI / self.n_phi as f64;
        (i as f64 * dc, (i + 1) as f64 * dc, j as f64 * dp, (j + 1) as f64 * dp)
    }

    pub fn solid_angle(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    /// Direction at fractional position `(u, v)` inside bin `b`.
    pub fn point(&self, b: usize, u: f64, v: f64) -> Vec3 {
        let (c0, c1, p0, p1) = self.bounds(b);
        Vec3::from_cos_theta(c0 + u * (c1 - c0), p0 + v * (p1 - p0))
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn add_vecs(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Exit energy of the BRDF sampler per bin, `≈ ∫_bin f cos θ_o dω` (first
/// channel).
pub fn sampler_histogram(
    wi: Vec3,
    r: &RoughnessParams,
    f: &FresnelSpec,
    cfg: &BrdfEvalConfig,
    grid: HemiGrid,
) -> Vec<f64> {
    exit_histogram(wi, r, f, cfg, grid, |_| 1.0)
}

/// `≈ ∫_bin f dω` from the same sampler exits, each divided by its `cos θ_o`.
pub fn sampler_brdf_histogram(
    wi: Vec3,
    r: &RoughnessParams,
    f: &FresnelSpec,
    cfg: &BrdfEvalConfig,
    grid: HemiGrid,
) -> Vec<f64> {
    exit_histogram(wi, r, f, cfg, grid, |d| 1.0 / d.z)
}

fn exit_histogram(
    wi: Vec3,
    r: &RoughnessParams,
    f: &FresnelSpec,
    cfg: &BrdfEvalConfig,
    grid: HemiGrid,
    scale: impl Fn(Vec3) -> f64 + Sync,
) -> Vec<f64> {
    let n = cfg.sample_count;
    let sum = mc::run(
        n,
        cfg.seed,
        || vec![0.0; grid.len()],
        |acc, rng, _| {
            let s = brdf::sample(wi, r, f, cfg, rng);
            if let Some(b) = grid.index(s.direction) {
                acc[b] += s.weight[0] * scale(s.direction);
            }
        },
        add_vecs,
    );
    sum.into_iter().map(|x| x / n as f64).collect()
}

/// `∫_bin f cos θ_o dω` from `per_bin` stochastic BRDF evaluations at
/// uniformly placed directions inside each bin (first channel).
pub fn eval_histogram(
    wi: Vec3,
    r: &RoughnessParams,
    f: &FresnelSpec,
    cfg: &BrdfEvalConfig,
    grid: HemiGrid,
    per_bin: u64,
) -> Vec<f64> {
    let one = BrdfEvalConfig {
        sample_count: 1,
        ..*cfg
    };
    let sum = mc::run(
        grid.len() as u64 * per_bin,
        cfg.seed,
        || vec![0.0; grid.len()],
        |acc, rng, i| {
            let b = (i / per_bin) as usize;
            let wo = grid.point(b, uniform(rng), uniform(rng));
            acc[b] += brdf::eval_sample(wi, wo, r, f, &one, rng)[0] * wo.z;
        },
        add_vecs,
    );
    let scale = grid.solid_angle() / per_bin as f64;
    sum.into_iter().map(|x| x * scale).collect()
}

#[derive(Debug, Clone)]
pub struct SamplerConsistency {
    pub grid: HemiGrid,
    pub sampled: Vec<f64>,
    pub evaluated: Vec<f64>,
    /// L1 distance of the two histograms, each normalized to unit mass.
    pub l1: f64,
    /// Total sampled mass over total evaluated mass.
    pub mass_ratio: f64,
}

pub fn sampler_consistency(
    wi: Vec3,
    r: &RoughnessParams,
    f: &FresnelSpec,
    cfg: &BrdfEvalConfig,
    grid: HemiGrid,
    eval_per_bin: u64,
) -> SamplerConsistency {
    let sampled = sampler_histogram(wi, r, f, cfg, grid);
    let eval_cfg = BrdfEvalConfig {
        seed: cfg.seed ^ 0x005e_ed0f_e7a1,
        ..*cfg
    };
    let evaluated = eval_histogram(wi, r, f, &eval_cfg, grid, eval_per_bin);
    let l1 = l1(&normalized(&sampled), &normalized(&evaluated));
    let mass_ratio = sampled.iter().sum::<f64>() / evaluated.iter().sum::<f64>();
    SamplerConsistency {
        grid,
        sampled,
        evaluated,
        l1,
        mass_ratio,
    }
}

/// Mass of `pdf` per bin by a `sub × sub` midpoint rule.
pub fn pdf_mass(grid: HemiGrid, sub: usize, pdf: impl Fn(Vec3) -> f64) -> Vec<f64> {
    (0..grid.len())
        .map(|b| {
            let mut s = 0.0;
            for i in 0..sub {
                for j in 0..sub {
                    let wo = grid.point(b, (i as f64 + 0.5) / sub as f64, (j as f64 + 0.5) / sub as f64);
                    s += pdf(wo);
                }
            }
            s * grid.solid_angle() / (sub * sub) as f64
        })
        .collect()
}

/// The proxy pdf and the single-bounce + Lambert baseline against the
/// measured multiple-bounce BRDF `f(wi, ·)` over the outgoing hemisphere, all
/// three normalized to unit mass per grid.
#[derive(Debug, Clone)]
pub struct PdfComparison {
    pub grid: HemiGrid,
    pub reference: Vec<f64>,
    pub proxy: Vec<f64>,
    pub baseline: Vec<f64>,
    pub l1_proxy: f64,
    pub l1_baseline: f64,
}

pub fn pdf_comparison(wi: Vec3, r: &RoughnessParams, cfg: &BrdfEvalConfig, grid: HemiGrid) -> PdfComparison {
    let reference = normalized(&sampler_brdf_histogram(wi, r, &FresnelSpec::ONE, cfg, grid));
    let proxy = normalized(&pdf_mass(grid, 4, |wo| brdf::pdf(wi, wo, r)));
    let baseline = normalized(&pdf_mass(grid, 4, |wo| brdf::lambert_baseline_pdf(wi, wo, r)));
    PdfComparison {
        grid,
        l1_proxy: l1(&proxy, &reference),
        l1_baseline: l1(&baseline, &reference),
        reference,
        proxy,
        baseline,
    }
}

fn uniform_sphere(rng: &mut McRng) -> Vec3 {
    let z = 1.0 - 2.0 * uniform(rng);
    Vec3::from_cos_theta(z, 2.0 * PI * uniform(rng))
}

fn hemisphere(rng: &mut McRng, up: bool) -> Vec3 {
    // (0, 1] keeps the direction off the horizon.
    let z = 1.0 - uniform(rng);
    Vec3::from_cos_theta(if up { z } else { -z }, 2.0 * PI * uniform(rng))
}

/// Random `k`-bounce path as signed Λ values `[Λ(d_0), ..., Λ(d_{k-1}), Λ_out]`:
/// `d_0` downward, interior directions uniform on the sphere, exit upward.
pub fn random_path_lambdas(k: usize, r: &RoughnessParams, rng: &mut McRng) -> Vec<f64> {
    let mut l = Vec::with_capacity(k + 1);
    l.push(lambda(hemisphere(rng, false), r));
    for _ in 1..k {
        l.push(lambda(uniform_sphere(rng), r));
    }
    l.push(lambda(hemisphere(rng, true), r));
    l
}

/// True when two downward |Λ| are closer than the hyperexponential update
/// tolerates.
pub fn is_singular(lambdas: &[f64]) -> bool {
    let (_, path) = lambdas.split_last().expect("nonempty");
    let down: Vec<f64> = path.iter().filter(|l| **l < 0.0).map(|l| -l).collect();
    down.iter()
        .enumerate()
        .any(|(i, a)| down[..i].iter().any(|b| (a - b).abs() < 10.0 * EPS_SINGULAR))
}

/// Double-double number `hi + lo`, about 32 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let e = (self.hi - (s - bb)) + (o.hi - bb);
        Dd::renorm(s, e + self.lo + o.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::renorm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd::new(q1)).neg());
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd::new(q2)).neg());
        let q3 = r.hi / o.hi;
        Dd::renorm(q1, q2).add(Dd::new(q3))
    }
}

/// Hyperexponential exit probability evaluated in double-double arithmetic,
/// for checking paths where the `f64` recurrence cancels badly.
pub fn p_exit_extended(lambdas: &[f64]) -> f64 {
    let (&lo, path) = lambdas.split_last().expect("nonempty");
    let (mut a, mut b): (Vec<Dd>, Vec<Dd>) = (Vec::new(), Vec::new());
    for &lk in path {
        if a.is_empty() {
            a.push(Dd::new(-lk));
            b.push(Dd::new(-lk));
        } else if lk < 0.0 {
            let lam = Dd::new(-lk);
            let mut sum = Dd::new(0.0);
            for (ai, bi) in a.iter_mut().zip(&b) {
                *ai = ai.mul(lam).div(lam.add(bi.neg()));
                sum = sum.add(*ai);
            }
            a.push(sum.neg());
            b.push(lam);
        } else {
            let lam = Dd::new(lk);
            for (ai, bi) in a.iter_mut().zip(&b) {
                *ai = ai.mul(lam).div(lam.add(*bi));
            }
        }
    }
    let lo = Dd::new(lo);
    a.iter()
        .zip(&b)
        .fold(Dd::new(0.0), |acc, (ai, bi)| acc.add(ai.div(bi.add(lo))))
        .hi
}

/// Agreement of the two exit formulations on one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitAgreement {
    /// `|p_exit - ∏|Λ| S| / p_exit` with `p_exit` in `f64`.
    pub rel_f64: f64,
    /// The same with `p_exit` in double-double arithmetic.
    pub rel_extended: f64,
}

pub fn exit_agreement(lambdas: &[f64]) -> Result<ExitAgreement> {
    let rep = segment::equivalence_check_lambdas(lambdas)?;
    let ext = p_exit_extended(lambdas);
    Ok(ExitAgreement {
        rel_f64: rep.rel_err,
        rel_extended: (ext - rep.product_form).abs() / ext.abs(),
    })
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub k: usize,
    pub paths: usize,
    pub segterm_ns: f64,
    pub hyperexp_ns: f64,
    pub segterm_ops: f64,
    pub hyperexp_ops: f64,
    /// Largest `|p_exit - ∏|Λ| S| / p_exit` over the paths, `p_exit` in `f64`.
    pub max_rel_diff: f64,
    /// The same with `p_exit` in double-double arithmetic.
    pub max_rel_diff_extended: f64,
    /// Paths where the `f64` difference exceeds 1e-9.
    pub ill_conditioned: usize,
}

/// Times both exit formulations over the same random non-singular paths.
pub fn bench_segterm(k: usize, paths: usize, alpha: f64, seed: u64) -> Result<BenchRow> {
    let r = RoughnessParams::isotropic(alpha)?;
    let mut rng = mc::stream_rng(seed, k as u64);
    let mut all = Vec::with_capacity(paths);
    while all.len() < paths {
        let l = random_path_lambdas(k, &r, &mut rng);
        if !is_singular(&l) {
            all.push(l);
        }
    }
    let (mut max_rel_diff, mut max_rel_diff_extended): (f64, f64) = (0.0, 0.0);
    let mut ill_conditioned = 0;
    let (mut st_ops, mut he_ops) = (0usize, 0usize);
    for l in &all {
        let agr = exit_agreement(l)?;
        max_rel_diff = max_rel_diff.max(agr.rel_f64);
        max_rel_diff_extended = max_rel_diff_extended.max(agr.rel_extended);
        if agr.rel_f64 > 1e-9 {
            ill_conditioned += 1;
        }
        let (a, b) = segment::op_counts(l);
        st_ops += a;
        he_ops += b;
    }
    let reps = (200_000 / (paths * k)).max(1);
    let mut st = SegmentTermState::with_capacity(0.0, k);
    let t0 = Instant::now();
    for _ in 0..reps {
        for l in &all {
            let (&lo, path) = l.split_last().expect("nonempty");
            st.reset(lo);
            for &lk in path {
                st.add_bounce(lk)?;
            }
            black_box(st.value());
        }
    }
    let st_t = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    for _ in 0..reps {
        for l in &all {
            let (&lo, path) = l.split_last().expect("nonempty");
            let mut he = HyperExpState::new();
            for &lk in path {
                he.add_bounce(lk)?;
            }
            black_box(he.p_exit(lo));
        }
    }
    let he_t = t0.elapsed().as_secs_f64();
    let calls = (reps * paths) as f64;
    Ok(BenchRow {
        k,
        paths,
        segterm_ns: st_t * 1e9 / calls,
        hyperexp_ns: he_t * 1e9 / calls,
        segterm_ops: st_ops as f64 / paths as f64,
        hyperexp_ops: he_ops as f64 / paths as f64,
        max_rel_diff,
        max_rel_diff_extended,
        ill_conditioned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_index_round_trips() {
        let g = HemiGrid::square(8);
        for b in 0..g.len() {
            assert_eq!(g.index(g.point(b, 0.3, 0.7)), Some(b));
        }
        assert_eq!(g.index(Vec3::new(0.0, 0.0, -1.0)), None);
    }

    #[test]
    fn pdf_mass_of_cosine_is_one() {
        let m = pdf_mass(HemiGrid::square(16), 4, |w| w.z / PI);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn extended_matches_f64_when_well_conditioned() {
        let l = [-1.5, -4.0, 0.3, 0.7];
        let p = segment::p_exit_lambdas(&l).unwrap();
        assert!((p_exit_extended(&l) - p).abs() < 1e-15 * p);
    }

    #[test]
    fn double_double_division() {
        let q = Dd::new(1.0).div(Dd::new(3.0));
        let back = q.mul(Dd::new(3.0)).add(Dd::new(-1.0));
        assert!(back.hi.abs() < 1e-30);
    }

    #[test]
    fn random_paths_have_valid_ends() {
        let r = RoughnessParams::isotropic(0.5).unwrap();
        let mut rng = mc::stream_rng(1, 0);
        for k in 1..6 {
            let l = random_path_lambdas(k, &r, &mut rng);
            assert_eq!(l.len(), k + 1);
            assert!(l[0] <= -1.0 && *l.last().unwrap() >= 0.0);
        }
    }
}
