//! Porous, partially liquid-filled particle media.
//!
//! The medium is a lattice of particles with spacing `l = n^{-1/3}`.
//! Porosity sets the particle extinction `σ_t` and Hapke's correction
//! factor `K`; saturation adds the liquid extinction `σ_t^l S`. The free-path
//! transmittance is `T_W(t) = e^{-σ_t^l S t} K e^{-K σ_t t}`, prefactor
//! `K` included.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::math::{Rgb, Vec3};
use crate::mc::{self, uniform, McRng, RgbStats};
use crate::phase::{BlendedPhase, ParticleSpec};

/// Particle set, liquid and slab geometry of a wet medium.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumSpec {
    /// Slab thickness; `f64::INFINITY` for a half-space.
    pub thickness: f64,
    pub porosity: f64,
    pub saturation: f64,
    /// Particle count per unit volume.
    pub density: f64,
    pub sigma_l: Rgb,
    pub eta_l: f64,
    pub particles: Vec<ParticleSpec>,
}

/// `(3√π/4)^{2/3}`.
fn packing_constant() -> f64 {
    (0.75 * PI.sqrt()).powf(2.0 / 3.0)
}

/// Hapke's `K = -ln(1 - x)/x` for `x = σ_t l ∈ [0, 1)`.
pub fn hapke_k_of(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).ln_1p() / x
    }
}

/// Smallest porosity with `σ_t l < 1`.
pub fn min_porosity() -> f64 {
    1.0 - packing_constant().powf(-1.5)
}

impl MediumSpec {
    pub fn new(
        thickness: f64,
        porosity: f64,
        saturation: f64,
        density: f64,
        sigma_l: Rgb,
        eta_l: f64,
        particles: Vec<ParticleSpec>,
    ) -> Result<Self> {
        let spec = Self {
            thickness,
            porosity,
            saturation,
            density,
            sigma_l,
            eta_l,
            particles,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thickness >= 0.0) {
            return Err(invalid(format!("thickness {} must be >= 0", self.thickness)));
        }
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return Err(invalid(format!("porosity {} outside (0, 1)", self.porosity)));
        }
        if self.porosity <= min_porosity() {
            return Err(invalid(format!(
                "porosity {} gives sigma_t * l >= 1; need porosity > {:.6}",
                self.porosity,
                min_porosity()
            )));
        }
        if !(0.0..=1.0).contains(&self.saturation) {
            return Err(invalid(format!("saturation {} outside [0, 1]", self.saturation)));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(invalid(format!("particle density {} must be positive", self.density)));
        }
        if self.sigma_l.0.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(invalid("liquid extinction must be finite and >= 0"));
        }
        if !(self.eta_l >= 1.0) {
            return Err(invalid(format!("liquid index {} below 1", self.eta_l)));
        }
        if self.particles.is_empty() {
            return Err(invalid("medium needs at least one particle type"));
        }
        let w: f64 = self.particles.iter().map(|p| p.blend_weight).sum();
        if (w - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("particle blend weights sum to {w}, not 1")));
        }
        Ok(())
    }

    /// Lattice spacing `l = n^{-1/3}`.
    pub fn spacing(&self) -> f64 {
        self.density.powf(-1.0 / 3.0)
    }

    /// Dimensionless `σ_t l`; depends on porosity alone.
    pub fn sigma_t_l(&self) -> f64 {
        packing_constant() * (1.0 - self.porosity).powf(2.0 / 3.0)
    }

    /// Particle extinction coefficient.
    pub fn sigma_t(&self) -> f64 {
        self.sigma_t_l() / self.spacing()
    }

    pub fn hapke_k(&self) -> f64 {
        hapke_k_of(self.sigma_t_l())
    }

    /// `K σ_t + σ_t^l S` per channel.
    pub fn sigma_eff(&self) -> Rgb {
        let base = self.hapke_k() * self.sigma_t();
        self.sigma_l.map(|s| base + s * self.saturation)
    }

    /// Blend-weighted single-scattering albedo of the particles.
    pub fn albedo(&self) -> Rgb {
        let mut a = Rgb::ZERO;
        for p in &self.particles {
            a += p.albedo * p.blend_weight;
        }
        a
    }

    /// `T_W(t)` per channel.
    pub fn transmittance(&self, t: f64) -> Rgb {
        let k = self.hapke_k();
        self.sigma_eff().map(|s| k * (-s * t).exp())
    }
}

/// Which collisions contribute to an oracle estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    pub min_collisions: usize,
    pub max_collisions: usize,
}

impl OracleOptions {
    pub fn all(max_collisions: usize) -> Self {
        Self {
            min_collisions: 1,
            max_collisions,
        }
    }

    pub fn exactly(n: usize) -> Self {
        Self {
            min_collisions: n,
            max_collisions: n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub value: Rgb,
    pub std_err: Rgb,
}

impl From<RgbStats> for OracleEstimate {
    fn from(s: RgbStats) -> Self {
        Self {
            value: s.mean(),
            std_err: s.std_err(),
        }
    }
}

/// Shared depth-only random walk. `wi` points toward the light (`wi.z > 0`);
/// photons enter at the top travelling along `-wi`.
pub(crate) struct Walk<'a> {
    pub spec: &'a MediumSpec,
    pub phase: &'a BlendedPhase,
    k: f64,
    /// Flight sampling rate `K σ_t`; the liquid enters through the weights.
    rate: f64,
    sigma_eff: Rgb,
    liquid: Rgb,
    albedo: Rgb,
}

impl<'a> Walk<'a> {
    pub fn new(spec: &'a MediumSpec, phase: &'a BlendedPhase) -> Self {
        let k = spec.hapke_k();
        Self {
            spec,
            phase,
            k,
            rate: k * spec.sigma_t(),
            sigma_eff: spec.sigma_eff(),
            liquid: spec.sigma_l * spec.saturation,
            albedo: spec.albedo(),
        }
    }

    /// Distance to the boundary along `d` from depth `z`, if that boundary
    /// exists.
    fn exit_distance(&self, z: f64, d: Vec3) -> Option<f64> {
        if d.z > 0.0 {
            Some(z / d.z)
        } else if d.z < 0.0 && self.spec.thickness.is_finite() {
            Some((self.spec.thickness - z) / -d.z)
        } else {
            None
        }
    }

    /// One path's contribution toward `wo` (next-event estimation).
    ///
    /// Flights are drawn with rate `Kσ_t`. A flight of length `ℓ` has
    /// per-channel weight `T_W(ℓ)σ_t α / (Kσ_t e^{-Kσ_t ℓ}) = α e^{-σ_t^l S ℓ}`
    /// once the collision factor is included, so liquid only ever scales
    /// path weights down.
    pub fn bsdf_sample(&self, wi: Vec3, wo: Vec3, opts: OracleOptions, rng: &mut McRng) -> Rgb {
        let mut d = -wi;
        let mut z = 0.0;
        let mut w = Rgb::ONE;
        let mut total = Rgb::ZERO;
        let to_out = wo.z.abs();
        for c in 1..=opts.max_collisions {
            let l = -(1.0 - uniform(rng)).ln() / self.rate;
            if let Some(e) = self.exit_distance(z, d) {
                if l >= e {
                    break;
                }
            }
            z += -d.z * l;
            w = w * self.albedo * self.liquid.map(|s| (-s * l).exp());
            if c >= opts.min_collisions {
                if let Some(e) = self.exit_distance(z, wo) {
                    let f = self.phase.eval_dirs(d, wo);
                    let t = self.sigma_eff.map(|s| self.k * (-s * e).exp());
                    total += w * t * (f / to_out);
                }
            }
            if c < opts.max_collisions {
                d = self.phase.sample_dir(d, uniform(rng), uniform(rng));
            }
        }
        total
    }

    /// Analog exit tally for the energy report: `(reflected, transmitted)`
    /// weight of paths with at least one collision.
    fn exit_sample(&self, wi: Vec3, max_collisions: usize, rng: &mut McRng) -> (Rgb, Rgb) {
        let mut d = -wi;
        let mut z = 0.0;
        let mut w = Rgb::ONE;
        for c in 0..=max_collisions {
            let l = -(1.0 - uniform(rng)).ln() / self.rate;
            if let Some(e) = self.exit_distance(z, d) {
                if l >= e {
                    if c == 0 {
                        return (Rgb::ZERO, Rgb::ZERO);
                    }
                    // Escape probability under the sampling rate is e^{-rate·e};
                    // the medium's is T_W(e).
                    let wt = w * self.sigma_eff.map(|s| self.k * (-(s - self.rate) * e).exp());
                    return if d.z > 0.0 { (wt, Rgb::ZERO) } else { (Rgb::ZERO, wt) };
                }
            }
            if c == max_collisions {
                break;
            }
            z += -d.z * l;
            // T_W(ℓ)σ_t α / (rate e^{-rate ℓ}).
            w = w * self.albedo * self.liquid.map(|s| (-s * l).exp());
            d = self.phase.sample_dir(d, uniform(rng), uniform(rng));
        }
        (Rgb::ZERO, Rgb::ZERO)
    }
}

/// Volumetric random-walk estimate of the slab BSDF value for `(wi, wo)`:
/// reflection when `wo.z > 0`, transmission when `wo.z < 0`. Only paths whose
/// collision count lies in the option range contribute.
pub fn rte_oracle(
    spec: &MediumSpec,
    phase: &BlendedPhase,
    wi: Vec3,
    wo: Vec3,
    opts: OracleOptions,
    spp: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    spec.validate()?;
    if !(wi.z > 0.0) || wo.z == 0.0 || !wi.is_unit(1e-9) || !wo.is_unit(1e-9) {
        return Err(invalid("oracle needs unit wi above the surface and unit wo off the horizon"));
    }
    if opts.min_collisions == 0 || opts.min_collisions > opts.max_collisions {
        return Err(invalid(format!("bad collision range {opts:?}")));
    }
    let walk = Walk::new(spec, phase);
    Ok(mc::estimate_rgb(spp, seed, |rng| walk.bsdf_sample(wi, wo, opts, rng)).into())
}

/// Directional albedo of the scattered (collided) light from `wi`:
/// `(reflected, transmitted)` fractions. With unit particle albedo and no
/// liquid these can exceed one because `T_W(0) = K`.
pub fn oracle_albedo(
    spec: &MediumSpec,
    phase: &BlendedPhase,
    wi: Vec3,
    max_collisions: usize,
    spp: u64,
    seed: u64,
) -> Result<(OracleEstimate, OracleEstimate)> {
    spec.validate()?;
    if !(wi.z > 0.0) {
        return Err(invalid("albedo needs wi above the surface"));
    }
    let walk = Walk::new(spec, phase);
    let (r, t) = mc::run(
        spp,
        seed,
        || (RgbStats::default(), RgbStats::default()),
        |acc, rng, _| {
            let (r, t) = walk.exit_sample(wi, max_collisions, rng);
            acc.0.push(r);
            acc.1.push(t);
        },
        |a, b| (a.0.merge(b.0), a.1.merge(b.1)),
    );
    Ok((r.into(), t.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::PhaseFit;

    fn spec(porosity: f64, saturation: f64) -> MediumSpec {
        let p = ParticleSpec::new(0.8, 0.3, 1.5, Rgb([0.9, 0.7, 0.5]), 1.0).unwrap();
        MediumSpec::new(2.0, porosity, saturation, 8.0, Rgb([0.1, 0.3, 0.6]), 1.33, vec![p]).unwrap()
    }

    fn phase() -> BlendedPhase {
        BlendedPhase::single(PhaseFit {
            w1: 0.3,
            mu1: 0.2,
            sigma1: 0.5,
            w2: 0.1,
            mu2: 2.9,
            sigma2: 0.6,
        })
        .unwrap()
    }

    #[test]
    fn k_at_half() {
        assert!((hapke_k_of(0.5) - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((hapke_k_of(1e-12) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn sigma_t_l_at_min_porosity_is_one() {
        let s = spec(0.5, 0.0);
        let edge = MediumSpec {
            porosity: min_porosity(),
            ..s
        };
        assert!((edge.sigma_t_l() - 1.0).abs() < 1e-12);
        assert!(edge.validate().is_err());
    }

    #[test]
    fn transmittance_reductions() {
        let dry = spec(0.6, 0.0);
        let t = 0.37;
        let want = dry.hapke_k() * (-dry.hapke_k() * dry.sigma_t() * t).exp();
        for c in 0..3 {
            assert!((dry.transmittance(t)[c] - want).abs() < 1e-15);
        }
        assert_eq!(dry.transmittance(0.0), Rgb::splat(dry.hapke_k()));
    }

    #[test]
    fn transmittance_is_multiplicative_up_to_prefactor() {
        let s = spec(0.6, 0.5);
        let (a, b) = (0.3, 0.9);
        let k = s.hapke_k();
        let lhs = s.transmittance(a + b) * k;
        let rhs = s.transmittance(a) * s.transmittance(b);
        for c in 0..3 {
            assert!((lhs[c] - rhs[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_albedo_scatters_nothing() {
        let mut s = spec(0.6, 0.0);
        s.particles[0].albedo = Rgb::ZERO;
        let wi = Vec3::from_spherical(0.5, 0.0);
        let wo = Vec3::from_spherical(0.7, 2.0);
        let e = rte_oracle(&s, &phase(), wi, wo, OracleOptions::all(8), 10_000, 1).unwrap();
        assert!(e.value.is_black());
    }

    #[test]
    fn liquid_darkens_every_channel() {
        let p = phase();
        let wi = Vec3::from_spherical(0.5, 0.0);
        let wo = Vec3::from_spherical(0.8, 2.0);
        let dry = rte_oracle(&spec(0.6, 0.0), &p, wi, wo, OracleOptions::all(8), 20_000, 4).unwrap();
        let wet = rte_oracle(&spec(0.6, 0.7), &p, wi, wo, OracleOptions::all(8), 20_000, 4).unwrap();
        for c in 0..3 {
            assert!(wet.value[c] < dry.value[c]);
        }
    }
}
