use std::f64::consts::PI;

use super::fit::PhaseFit;
use crate::error::{invalid, Result};
use crate::math::{Frame, Vec3};
use crate::special::quadrature::integrate;

/// Knots of the tabulated inverse CDF in θ.
pub const CDF_KNOTS: usize = 2048;

/// Weighted sum of two-Gaussian fits with a normalized copy for sampling.
///
/// `eval` returns the raw blend `Σ wᵢ fᵢ(θ)`; `eval_normalized` divides by
/// its integral over the sphere, so it is a probability density per
/// steradian in the deflection angle θ.
#[derive(Debug, Clone)]
pub struct BlendedPhase {
    fits: Vec<PhaseFit>,
    weights: Vec<f64>,
    norm: f64,
    /// `cdf[k]` is the normalized mass in `[0, θ_k]`, `θ_k = kπ/(CDF_KNOTS−1)`.
    cdf: Vec<f64>,
}

impl BlendedPhase {
    pub fn new(fits: Vec<PhaseFit>, weights: Vec<f64>) -> Result<Self> {
        if fits.is_empty() || fits.len() != weights.len() {
            return Err(invalid("need one blend weight per phase fit"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("blend weights {weights:?} must be >= 0 and sum to 1")));
        }
        for f in &fits {
            f.validate()?;
        }
        let mut phase = Self {
            fits,
            weights,
            norm: 1.0,
            cdf: Vec::new(),
        };
        let step = PI / (CDF_KNOTS - 1) as f64;
        let mut cdf = Vec::with_capacity(CDF_KNOTS);
        cdf.push(0.0);
        let mut acc = 0.0;
        for k in 0..CDF_KNOTS - 1 {
            let (a, b) = (k as f64 * step, (k + 1) as f64 * step);
            acc += integrate(|t| phase.eval(t) * 2.0 * PI * t.sin(), a, b, 1e-12, 0.0, 8).value;
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(invalid(format!("blended phase integrates to {acc}")));
        }
        for c in &mut cdf {
            *c /= acc;
        }
        phase.norm = acc;
        phase.cdf = cdf;
        Ok(phase)
    }

    pub fn single(fit: PhaseFit) -> Result<Self> {
        Self::new(vec![fit], vec![1.0])
    }

    pub fn fits(&self) -> &[PhaseFit] {
        &self.fits
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ eval dω` over the sphere.
    pub fn integral(&self) -> f64 {
        self.norm
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.fits.iter().zip(&self.weights).map(|(f, w)| w * f.eval(theta)).sum()
    }

    pub fn eval_normalized(&self, theta: f64) -> f64 {
        self.eval(theta) / self.norm
    }

    /// Normalized density for a photon travelling along `d_in` and leaving
    /// along `d_out`.
    pub fn eval_dirs(&self, d_in: Vec3, d_out: Vec3) -> f64 {
        self.eval_normalized(d_in.dot(d_out).clamp(-1.0, 1.0).acos())
    }

    /// Deflection angle with CDF `u`, by linear interpolation in the table.
    pub fn sample_theta(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, CDF_KNOTS - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let step = PI / (CDF_KNOTS - 1) as f64;
        let frac = if c1 > c0 { ((u - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.5 };
        ((k - 1) as f64 + frac) * step
    }

    /// New travel direction after scattering a photon moving along `d_in`.
    pub fn sample_dir(&self, d_in: Vec3, u1: f64, u2: f64) -> Vec3 {
        let theta = self.sample_theta(u1);
        Frame::from_normal(d_in).to_world(Vec3::from_spherical(theta, 2.0 * PI * u2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lobe() -> PhaseFit {
        PhaseFit {
            w1: 0.3,
            mu1: 0.5,
            sigma1: 0.35,
            w2: 0.1,
            mu2: 2.8,
            sigma2: 0.4,
        }
    }

    #[test]
    fn normalized_integrates_to_one() {
        let p = BlendedPhase::single(lobe()).unwrap();
        let r = integrate(|t| p.eval_normalized(t) * 2.0 * PI * t.sin(), 0.0, PI, 1e-12, 0.0, 200);
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(p.eval(0.0).is_finite() && p.eval(PI).is_finite());
    }

    #[test]
    fn sampled_theta_follows_density() {
        let p = BlendedPhase::single(lobe()).unwrap();
        let bins = 64;
        let n = 200_000;
        let mut h = vec![0.0; bins];
        for i in 0..n {
            let t = p.sample_theta((i as f64 + 0.5) / n as f64);
            h[((t / PI * bins as f64) as usize).min(bins - 1)] += 1.0 / n as f64;
        }
        let mut l1 = 0.0;
        for (j, m) in h.iter().enumerate() {
            let (a, b) = (PI * j as f64 / bins as f64, PI * (j + 1) as f64 / bins as f64);
            let want = integrate(|t| p.eval_normalized(t) * 2.0 * PI * t.sin(), a, b, 1e-10, 0.0, 50).value;
            l1 += (m - want).abs();
        }
        assert!(l1 < 1e-3, "{l1}");
    }

    #[test]
    fn blend_is_weighted_sum() {
        let a = lobe();
        let b = PhaseFit::single(0.2, 1.5, 0.3);
        let p = BlendedPhase::new(vec![a, b], vec![0.25, 0.75]).unwrap();
        let t = 1.1;
        assert!((p.eval(t) - (0.25 * a.eval(t) + 0.75 * b.eval(t))).abs() < 1e-15);
        assert!(BlendedPhase::new(vec![a, b], vec![0.5, 0.6]).is_err());
    }
}
