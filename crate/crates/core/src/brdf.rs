//! Multiple-bounce Smith BRDF.
//!
//! A path `d_0 = -wi, d_1, ..., d_k, wo` contributes
//! `∏ v(d_j, d_{j+1}) · S(d_0..d_k, wo)` to `f_r · cos θ_o`, with `v` the
//! vertex term of [`crate::smith::vertex_term`] and `S` the segment term.
//! Paths are generated by reflecting off visible micronormals, which makes
//! the per-bounce throughput `F · |Λ(d_j)|`.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::math::{sample_cosine_hemisphere, Rgb, Vec3};
use crate::mc::{self, uniform, McRng, RgbStats, Stats};
use crate::segment::{segterm_dp_lambdas, SegmentTermState};
use crate::smith::{
    lambda, ndf, reflection_pdf, sample_reflection, vertex_term, vndf, FresnelSpec,
    RoughnessParams,
};

/// Controls for the stochastic estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrdfEvalConfig {
    pub max_bounce: usize,
    /// Bounces past this depth are subject to Russian roulette.
    pub rr_depth: usize,
    /// Continuation probability under Russian roulette.
    pub rr_q: f64,
    pub sample_count: u64,
    pub seed: u64,
}

impl Default for BrdfEvalConfig {
    fn default() -> Self {
        Self {
            max_bounce: 16,
            rr_depth: 4,
            rr_q: 0.9,
            sample_count: 1 << 16,
            seed: 0,
        }
    }
}

impl BrdfEvalConfig {
    pub fn new(max_bounce: usize, sample_count: u64, seed: u64) -> Result<Self> {
        Self {
            max_bounce,
            rr_depth: 4.min(max_bounce.max(1)),
            sample_count,
            seed,
            ..Self::default()
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.max_bounce == 0 {
            return Err(invalid("max_bounce must be at least 1"));
        }
        if self.rr_depth == 0 || self.rr_depth > self.max_bounce {
            return Err(invalid(format!(
                "rr_depth = {} must lie in [1, max_bounce = {}]",
                self.rr_depth, self.max_bounce
            )));
        }
        if !(self.rr_q > 0.0 && self.rr_q <= 1.0) {
            return Err(invalid(format!("rr_q = {} outside (0, 1]", self.rr_q)));
        }
        Ok(self)
    }
}

/// Result of [`sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsdfSample {
    pub direction: Vec3,
    /// `f · |cos θ_o| / pdf` estimate; zero when the walk did not exit.
    pub weight: Rgb,
    /// Proxy density of `direction` (see [`pdf`]), 1/sr.
    pub pdf_proxy: f64,
}

impl BsdfSample {
    fn absorbed(wi: Vec3) -> Self {
        Self {
            direction: wi,
            weight: Rgb::ZERO,
            pdf_proxy: 0.0,
        }
    }
}

/// Parameters of the isotropic-medium multiple-bounce term of the proxy pdf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HapkePdfParams {
    /// Single-scattering albedo of the stand-in medium.
    pub albedo: f64,
    pub geometric_normal: Vec3,
}

impl HapkePdfParams {
    /// Albedo set to the mean roughness, capped at 1.
    pub fn from_roughness(r: &RoughnessParams) -> Self {
        Self {
            albedo: (0.5 * (r.alpha_x + r.alpha_y)).min(1.0),
            geometric_normal: Vec3::Z,
        }
    }
}

fn signed_lambda(d: Vec3, r: &RoughnessParams) -> f64 {
    let l = lambda(d, r);
    if d.z >= 0.0 {
        // A perfectly vertical upward ray has Λ = 0; keep it on the upward side.
        l.max(f64::MIN_POSITIVE)
    } else {
        l
    }
}

/// One-sample estimate of the BRDF.
pub fn eval_sample(
    wi: Vec3,
    wo: Vec3,
    r: &RoughnessParams,
    f: &FresnelSpec,
    cfg: &BrdfEvalConfig,
    rng: &mut McRng,
) -> Rgb {
    if wi.z <= 0.0 || wo.z <= 0.0 {
        return Rgb::ZERO;
    }
    let mut st = SegmentTermState::with_capacity(lambda(wo, r), cfg.max_bounce);
    let mut d = -wi;
    let mut w = Rgb::ONE;
    let mut acc = Rgb::ZERO;
    for k in 1..=cfg.max_bounce {
        let ld = signed_lambda(d, r);
        st.add_bounce(ld).expect("nonzero signed lambda");
        if k > cfg.rr_depth {
            if uniform(rng) >= cfg.rr_q {
                break;
            }
            w /= cfg.rr_q;
        }
        acc += w * vertex_term(d, wo, r, f) * st.value();
        if k == cfg.max_bounce {
            break;
        }
        let (next, fr) = sample_reflection(d, r, f, uniform(rng), uniform(rng));
        w *= fr * ld.abs();
        if w.is_black() {
            break;
        }
        d = next;
    }
    acc / wo.z
}

/// BRDF estimate averaged over `cfg.sample_count` paths, with standard error.
pub fn eval_stats(
    wi: Vec3,
    wo: Vec3,
    r: &RoughnessParams,
    f: &FresnelSpec,
    cfg: &BrdfEvalConfig,
) -> RgbStats {
    mc::estimate_rgb(cfg.sample_count, cfg.seed, |rng| {
        eval_sample(wi, wo, r, f, cfg, rng)
    })
}

/// BRDF estimate averaged over `cfg.sample_count` paths.
pub fn eval(wi: Vec3, wo: Vec3, r: &RoughnessParams, f: &FresnelSpec, cfg: &BrdfEvalConfig) -> Rgb {
    eval_stats(wi, wo, r, f, cfg).mean()
}

/// Closed-form single-scattering GGX BRDF with height-correlated masking.
pub fn single_bounce(wi: Vec3, wo: Vec3, r: &RoughnessParams, f: &FresnelSpec) -> Rgb {
    if wi.z <= 0.0 || wo.z <= 0.0 {
        return Rgb::ZERO;
    }
    let h = (wi + wo).normalized();
    let g2 = 1.0 / (1.0 + lambda(wi, r) + lambda(wo, r));
    f.eval(wi.dot(h)) * (ndf(h, r) * g2 / (4.0 * wi.z * wo.z))
}

/// Samples an outgoing direction by walking visible-normal reflections.
///
/// An upward direction leaves the surface with probability `G1`; the path
/// weight divides by that choice. Walks still inside after `max_bounce`
/// reflections return a zero weight.
pub fn sample(
    wi: Vec3,
    r: &RoughnessParams,
    f: &FresnelSpec,
    cfg: &BrdfEvalConfig,
    rng: &mut McRng,
) -> BsdfSample {
    if wi.z <= 0.0 {
        return BsdfSample::absorbed(wi);
    }
    let mut lambdas = Vec::with_capacity(cfg.max_bounce + 1);
    let mut d = -wi;
    let mut ld = lambda(d, r);
    lambdas.push(ld);
    let mut weight = Rgb::ONE;
    for _ in 0..cfg.max_bounce {
        let (next, fr) = sample_reflection(d, r, f, uniform(rng), uniform(rng));
        weight *= fr * ld.abs();
        d = next;
        ld = signed_lambda(d, r);
        if d.z > 0.0 {
            let p_exit = 1.0 / (1.0 + ld);
            if uniform(rng) < p_exit {
                lambdas.push(ld);
                let s = segterm_dp_lambdas(&lambdas).expect("valid path");
                return BsdfSample {
                    direction: d,
                    weight: weight * (s / p_exit),
                    pdf_proxy: pdf(wi, d, r),
                };
            }
            weight /= 1.0 - p_exit;
        }
        lambdas.push(ld);
    }
    BsdfSample::absorbed(wi)
}

/// Hapke H-function for isotropic scatterers with albedo `a`.
pub fn hapke_h(mu: f64, a: f64) -> f64 {
    (1.0 + 2.0 * mu) / (1.0 + 2.0 * (1.0 - a).max(0.0).sqrt() * mu)
}

/// Isotropic-medium multiple-bounce term of the proxy pdf.
pub fn f_mul(wi: Vec3, wo: Vec3, p: &HapkePdfParams) -> f64 {
    let mi = p.geometric_normal.dot(wi).abs();
    let mo = p.geometric_normal.dot(wo).abs();
    if mi + mo == 0.0 {
        return 0.0;
    }
    let a = p.albedo;
    a / (4.0 * PI) * (hapke_h(mi, a) * hapke_h(mo, a) - 1.0) / (mi + mo)
}

/// Density of a single visible-normal reflection from `wi` into `wo`.
pub fn single_bounce_pdf(wi: Vec3, wo: Vec3, r: &RoughnessParams) -> f64 {
    if wi.z <= 0.0 || wo.z <= 0.0 {
        return 0.0;
    }
    let h = (wi + wo).normalized();
    vndf(wi, h, r) / (4.0 * wi.dot(h).abs())
}

/// Proxy density: single-bounce visible-normal pdf plus [`f_mul`].
pub fn pdf(wi: Vec3, wo: Vec3, r: &RoughnessParams) -> f64 {
    if wi.z <= 0.0 || wo.z <= 0.0 {
        return 0.0;
    }
    single_bounce_pdf(wi, wo, r) + f_mul(wi, wo, &HapkePdfParams::from_roughness(r))
}

/// Single-bounce pdf plus a cosine lobe, the usual baseline proxy.
pub fn lambert_baseline_pdf(wi: Vec3, wo: Vec3, r: &RoughnessParams) -> f64 {
    if wi.z <= 0.0 || wo.z <= 0.0 {
        return 0.0;
    }
    single_bounce_pdf(wi, wo, r) + wo.z / PI
}

/// Uniform-height microsurface: `C1(h) = (h + 1) / 2` on `[-1, 1]`.
fn c1(h: f64) -> f64 {
    ((h + 1.0) * 0.5).clamp(0.0, 1.0)
}

fn inv_c1(u: f64) -> f64 {
    (2.0 * u - 1.0).clamp(-1.0, 1.0)
}

/// Masking of `d` from height `h`.
fn g1_height(d: Vec3, h: f64, r: &RoughnessParams) -> f64 {
    if d.z <= 0.0 {
        return 0.0;
    }
    c1(h).powf(lambda(d, r))
}

/// Next intersection height along `d` from `h`, or `None` when the ray leaves.
fn sample_height(d: Vec3, h: f64, r: &RoughnessParams, u: f64) -> Option<f64> {
    if d.z > 0.9999 {
        return None;
    }
    if d.z < -0.9999 {
        return Some(inv_c1(u * c1(h)));
    }
    if d.z.abs() < 1e-4 {
        return Some(h);
    }
    let l = lambda(d, r);
    if d.z > 0.0 && u > 1.0 - c1(h).powf(l) {
        return None;
    }
    Some(inv_c1(c1(h) / (1.0 - u).powf(1.0 / l)))
}

/// One-sample estimate of the BRDF from an explicit-height random walk.
///
/// Independent of the segment term: heights are tracked along the path and
/// each collision connects to `wo` through the height-dependent masking.
pub fn random_walk_sample(
    wi: Vec3,
    wo: Vec3,
    r: &RoughnessParams,
    f: &FresnelSpec,
    cfg: &BrdfEvalConfig,
    rng: &mut McRng,
) -> Rgb {
    if wi.z <= 0.0 || wo.z <= 0.0 {
        return Rgb::ZERO;
    }
    let mut d = -wi;
    let mut h = 1.0;
    let mut energy = Rgb::ONE;
    let mut acc = Rgb::ZERO;
    for _ in 0..cfg.max_bounce {
        match sample_height(d, h, r, uniform(rng)) {
            None => break,
            Some(hn) => h = hn,
        }
        let phase = crate::smith::smith_phase(-d, wo, r, f);
        acc += energy * phase * g1_height(wo, h, r);
        let (next, fr) = sample_reflection(d, r, f, uniform(rng), uniform(rng));
        energy *= fr;
        d = next;
    }
    acc / wo.z
}

/// Random-walk reference averaged over `cfg.sample_count` walks.
pub fn random_walk_reference(
    wi: Vec3,
    wo: Vec3,
    r: &RoughnessParams,
    f: &FresnelSpec,
    cfg: &BrdfEvalConfig,
) -> RgbStats {
    mc::estimate_rgb(cfg.sample_count, cfg.seed, |rng| {
        random_walk_sample(wi, wo, r, f, cfg, rng)
    })
}

/// White-furnace directional albedo `∫ f cos θ_o dω_o` with `F ≡ 1`.
///
/// Outgoing directions come from a one-sample mixture of single-bounce
/// visible-normal reflection and cosine sampling, weighted by the mixture
/// density.
pub fn furnace_albedo(theta_i: f64, r: &RoughnessParams, cfg: &BrdfEvalConfig) -> Stats {
    let wi = Vec3::from_spherical(theta_i, 0.0);
    let f = FresnelSpec::ONE;
    mc::estimate(cfg.sample_count, cfg.seed, |rng| {
        let (u0, u1, u2) = (uniform(rng), uniform(rng), uniform(rng));
        let wo = if u0 < 0.5 {
            sample_reflection(-wi, r, &f, u1, u2).0
        } else {
            sample_cosine_hemisphere(u1, u2)
        };
        if wo.z <= 0.0 {
            return 0.0;
        }
        let p = 0.5 * reflection_pdf(-wi, wo, r) + 0.5 * wo.z / PI;
        if p <= 0.0 {
            return 0.0;
        }
        eval_sample(wi, wo, r, &f, cfg, rng)[0] * wo.z / p
    })
}
