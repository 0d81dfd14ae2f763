//! Layered wet-powder BSDF: analytic single scattering, random-walk
//! multiple scattering and delta transmission over a [`MediumSpec`] slab.
//!
//! Directions point away from the surface point; `wi.z > 0`. Transmission
//! queries have `wo.z < 0`. The phase function is the normalized blend with
//! the particle albedo carried by `λ`.

use crate::brdf::BsdfSample;
use crate::error::{invalid, Result};
use crate::math::{Rgb, Vec3};
use crate::mc::{self, McRng};
use crate::medium::{MediumSpec, OracleEstimate, OracleOptions, Walk};
use crate::phase::BlendedPhase;

/// Below this `|cos θ_i - |cos θ_o||` transmission uses the series branch.
pub const SINGULAR_GAP: f64 = 1e-4;
pub const DEFAULT_MAX_COLLISIONS: usize = 8;

#[derive(Debug, Clone)]
pub struct WetBsdfParams {
    pub medium: MediumSpec,
    pub phase: BlendedPhase,
    /// Optical depth `T σ_eff` per channel.
    pub tau: Rgb,
    /// `K² σ_t α / σ_eff` per channel.
    pub lambda: Rgb,
    /// Collision cap of the multiple-scattering walk.
    pub max_collisions: usize,
}

impl WetBsdfParams {
    pub fn new(medium: MediumSpec, phase: BlendedPhase) -> Result<Self> {
        medium.validate()?;
        let k = medium.hapke_k();
        let se = medium.sigma_eff();
        let tau = se.map(|s| if medium.thickness.is_infinite() { f64::INFINITY } else { medium.thickness * s });
        let lambda = medium.albedo().zip(se, |a, s| k * k * medium.sigma_t() * a / s);
        if medium.thickness.is_finite() && medium.thickness < 2.0 / se.min_component() {
            log::warn!(
                "slab thickness {} is below two mean free paths ({}); the thin-slab approximation is rough here",
                medium.thickness,
                2.0 / se.min_component()
            );
        }
        Ok(Self {
            medium,
            phase,
            tau,
            lambda,
            max_collisions: DEFAULT_MAX_COLLISIONS,
        })
    }

    fn phase_at(&self, wi: Vec3, wo: Vec3) -> f64 {
        self.phase.eval_dirs(-wi, wo)
    }
}

fn check_dirs(wi: Vec3, wo: Vec3) -> Result<()> {
    if !wi.is_unit(1e-9) || !wo.is_unit(1e-9) || !(wi.z > 0.0) {
        return Err(invalid("directions must be unit vectors with wi above the surface"));
    }
    Ok(())
}

/// Single-scattering reflection.
pub fn eval_single_r(wi: Vec3, wo: Vec3, p: &WetBsdfParams) -> Result<Rgb> {
    check_dirs(wi, wo)?;
    if !(wo.z > 0.0) {
        return Err(invalid("reflection needs wo above the surface"));
    }
    let (ci, co) = (wi.z, wo.z);
    let f = p.phase_at(wi, wo);
    let s = 1.0 / ci + 1.0 / co;
    Ok(p.lambda.zip(p.tau, |l, t| l * f * -(-t * s).exp_m1() / (ci + co)))
}

/// `e^{-τ(a+b)/2} sinh(τ(a-b)/2) / (τ(a-b)/2)`, stable for all gaps.
fn transmission_kernel(tau: f64, a: f64, b: f64, series: bool) -> f64 {
    let x = 0.5 * tau * (a - b);
    if series {
        let x2 = x * x;
        (-0.5 * tau * (a + b)).exp() * (1.0 + x2 / 6.0 * (1.0 + x2 / 20.0))
    } else {
        ((-tau * b).exp() - (-tau * a).exp()) / (2.0 * x)
    }
}

/// Single-scattering transmission,
/// `λ f (e^{-τ/|cos θ_o|} - e^{-τ/cos θ_i}) / (|cos θ_o| - cos θ_i)`.
pub fn eval_single_t(wi: Vec3, wo: Vec3, p: &WetBsdfParams) -> Result<Rgb> {
    check_dirs(wi, wo)?;
    if !(wo.z < 0.0) {
        return Err(invalid("transmission needs wo below the surface"));
    }
    let (ci, co) = (wi.z, -wo.z);
    let f = p.phase_at(wi, wo);
    let (a, b) = (1.0 / ci, 1.0 / co);
    let series = (ci - co).abs() < SINGULAR_GAP;
    Ok(p.lambda.zip(p.tau, |l, t| {
        if t == 0.0 || t.is_infinite() {
            0.0
        } else {
            l * f * a * b * t * transmission_kernel(t, a, b, series)
        }
    }))
}

/// Analytic single scattering on whichever side `wo` lies.
pub fn eval_single(wi: Vec3, wo: Vec3, p: &WetBsdfParams) -> Result<Rgb> {
    if wo.z > 0.0 {
        eval_single_r(wi, wo, p)
    } else {
        eval_single_t(wi, wo, p)
    }
}

/// Random-walk estimate of the contribution of two or more collisions.
pub fn eval_multi(wi: Vec3, wo: Vec3, p: &WetBsdfParams, spp: u64, seed: u64) -> Result<Rgb> {
    Ok(eval_multi_stats(wi, wo, p, spp, seed)?.value)
}

/// [`eval_multi`] with its standard error.
pub fn eval_multi_stats(wi: Vec3, wo: Vec3, p: &WetBsdfParams, spp: u64, seed: u64) -> Result<OracleEstimate> {
    check_dirs(wi, wo)?;
    if wo.z == 0.0 || p.max_collisions < 2 {
        return Ok(OracleEstimate {
            value: Rgb::ZERO,
            std_err: Rgb::ZERO,
        });
    }
    let walk = Walk::new(&p.medium, &p.phase);
    let opts = OracleOptions {
        min_collisions: 2,
        max_collisions: p.max_collisions,
    };
    Ok(mc::estimate_rgb(spp, seed, |rng| walk.bsdf_sample(wi, wo, opts, rng)).into())
}

/// Single plus multiple scattering.
pub fn eval(wi: Vec3, wo: Vec3, p: &WetBsdfParams, spp: u64, seed: u64) -> Result<Rgb> {
    Ok(eval_single(wi, wo, p)? + eval_multi(wi, wo, p, spp, seed)?)
}

/// Unscattered energy straight through the slab, `K e^{-σ_eff T/cos θ_i}`.
pub fn delta_transmission(wi: Vec3, p: &WetBsdfParams) -> Result<Rgb> {
    if !(wi.z > 0.0) {
        return Err(invalid("delta transmission needs wi above the surface"));
    }
    if p.medium.thickness.is_infinite() {
        return Ok(Rgb::ZERO);
    }
    let k = p.medium.hapke_k();
    Ok(p.tau.map(|t| k * (-t / wi.z).exp()))
}

/// Draws `wo` from the normalized phase function about `-wi`. The weight is
/// the analytic single-scattering value times `|cos θ_o|` over the pdf.
pub fn sample(wi: Vec3, p: &WetBsdfParams, rng: &mut McRng) -> BsdfSample {
    let wo = p.phase.sample_dir(-wi, mc::uniform(rng), mc::uniform(rng));
    let pdf = p.phase_at(wi, wo);
    let weight = match eval_single(wi, wo, p) {
        Ok(f) if pdf > 0.0 && wo.z != 0.0 => f * (wo.z.abs() / pdf),
        _ => Rgb::ZERO,
    };
    BsdfSample {
        direction: wo,
        weight,
        pdf_proxy: pdf,
    }
}

/// Continuity of transmission around the removable singularity
/// `cos θ_o = -cos θ_i`.
///
/// `switch_jump` is the largest relative gap between the series and the closed
/// form at the point where evaluation switches between them, on either side.
/// `two_sided` is the mean of the neighbours at `|cos θ_o| = cos θ_i (1 ± h)`,
/// which differs from the limit by `O(h²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityProbe {
    pub at_limit: Rgb,
    pub two_sided: Rgb,
    pub switch_jump: f64,
    pub max_rel_err: f64,
}

fn max_rel(a: Rgb, b: Rgb) -> f64 {
    (0..3)
        .filter(|&c| b[c] != 0.0)
        .map(|c| ((a[c] - b[c]) / b[c]).abs())
        .fold(0.0, f64::max)
}

pub fn singularity_probe(cos_i: f64, p: &WetBsdfParams, h: f64) -> Result<SingularityProbe> {
    if !(cos_i > 0.0 && cos_i < 1.0) || !(h > 0.0) {
        return Err(invalid("probe needs cos_i in (0, 1) and h > 0"));
    }
    let wi = Vec3::from_cos_theta(cos_i, 0.0);
    // Same deflection angle everywhere so only the slab factor varies.
    let f0 = p.phase_at(wi, Vec3::from_cos_theta(-cos_i, 0.0));
    let at = |c: f64, series: bool| -> Rgb {
        let (a, b) = (1.0 / cos_i, 1.0 / c);
        p.lambda.zip(p.tau, |l, t| {
            if t == 0.0 || t.is_infinite() {
                0.0
            } else {
                l * f0 * a * b * t * transmission_kernel(t, a, b, series)
            }
        })
    };
    let at_limit = at(cos_i, true);
    let mut switch_jump: f64 = 0.0;
    for side in [-1.0, 1.0] {
        let c = cos_i + side * SINGULAR_GAP;
        if c > 0.0 && c <= 1.0 {
            switch_jump = switch_jump.max(max_rel(at(c, true), at(c, false)));
        }
    }
    let near = |c: f64| at(c, (cos_i - c).abs() < SINGULAR_GAP);
    let two_sided = (near(cos_i * (1.0 + h)) + near(cos_i * (1.0 - h))) * 0.5;
    let max_rel_err = switch_jump.max(max_rel(two_sided, at_limit));
    Ok(SingularityProbe {
        at_limit,
        two_sided,
        switch_jump,
        max_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{ParticleSpec, PhaseFit};

    fn params(thickness: f64) -> WetBsdfParams {
        let part = ParticleSpec::new(0.8, 0.3, 1.5, Rgb([0.9, 0.7, 0.5]), 1.0).unwrap();
        let m = MediumSpec::new(thickness, 0.6, 0.4, 8.0, Rgb([0.1, 0.3, 0.6]), 1.33, vec![part]).unwrap();
        let ph = BlendedPhase::single(PhaseFit {
            w1: 0.3,
            mu1: 0.2,
            sigma1: 0.5,
            w2: 0.1,
            mu2: 2.9,
            sigma2: 0.6,
        })
        .unwrap();
        WetBsdfParams::new(m, ph).unwrap()
    }

    #[test]
    fn reflection_is_reciprocal() {
        let p = params(1.5);
        let a = Vec3::from_spherical(0.4, 0.3);
        let b = Vec3::from_spherical(1.1, 2.2);
        let (x, y) = (eval_single_r(a, b, &p).unwrap(), eval_single_r(b, a, &p).unwrap());
        for c in 0..3 {
            assert!((x[c] - y[c]).abs() <= 1e-15 * x[c]);
        }
    }

    #[test]
    fn transmission_matches_closed_form_off_singularity() {
        let p = params(1.5);
        let wi = Vec3::from_cos_theta(0.8, 0.0);
        let wo = Vec3::from_cos_theta(-0.5, 1.0);
        let f = p.phase.eval_dirs(-wi, wo);
        let got = eval_single_t(wi, wo, &p).unwrap();
        for c in 0..3 {
            let t = p.tau[c];
            let want = p.lambda[c] * f * ((-t / 0.5).exp() - (-t / 0.8).exp()) / (0.5 - 0.8);
            assert!(((got[c] - want) / want).abs() < 1e-13);
        }
    }

    #[test]
    fn series_branch_is_continuous() {
        let p = params(1.5);
        let probe = singularity_probe(0.7, &p, 1e-5).unwrap();
        assert!(probe.max_rel_err < 1e-6, "{probe:?}");
        assert!(probe.switch_jump < 1e-9, "{probe:?}");
        let wi = Vec3::from_cos_theta(0.7, 0.0);
        let inside = eval_single_t(wi, Vec3::from_cos_theta(-0.7 * (1.0 + 0.99 * SINGULAR_GAP / 0.7), 0.0), &p).unwrap();
        let outside = eval_single_t(wi, Vec3::from_cos_theta(-0.7 * (1.0 + 1.01 * SINGULAR_GAP / 0.7), 0.0), &p).unwrap();
        assert!(((inside[0] - outside[0]) / inside[0]).abs() < 1e-5);
    }

    #[test]
    fn half_space_limits() {
        let p = params(f64::INFINITY);
        let wi = Vec3::from_cos_theta(0.6, 0.0);
        let wo = Vec3::from_cos_theta(0.9, 2.0);
        let f = p.phase.eval_dirs(-wi, wo);
        let r = eval_single_r(wi, wo, &p).unwrap();
        assert!(((r[1] - p.lambda[1] * f / 1.5) / r[1]).abs() < 1e-15);
        assert!(eval_single_t(wi, Vec3::from_cos_theta(-0.9, 0.0), &p).unwrap().is_black());
        assert!(delta_transmission(wi, &p).unwrap().is_black());
    }

    #[test]
    fn empty_slab_is_transparent_up_to_k() {
        let p = params(0.0);
        let wi = Vec3::from_cos_theta(0.6, 0.0);
        assert!(eval_single_r(wi, Vec3::from_cos_theta(0.9, 2.0), &p).unwrap().is_black());
        assert!(eval_single_t(wi, Vec3::from_cos_theta(-0.9, 2.0), &p).unwrap().is_black());
        assert_eq!(delta_transmission(wi, &p).unwrap(), Rgb::splat(p.medium.hapke_k()));
    }

    #[test]
    fn lambda_bounded_by_k_squared_albedo() {
        let p = params(1.0);
        let k = p.medium.hapke_k();
        for c in 0..3 {
            assert!(p.lambda[c] <= k * k * p.medium.albedo()[c] + 1e-15);
        }
    }
}
