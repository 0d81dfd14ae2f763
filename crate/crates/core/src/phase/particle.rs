use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::math::{sample_uniform_disk, sample_uniform_sphere, Frame, Rgb, Vec3};
use crate::mc::{self, uniform, McRng};
use crate::smith::{fresnel_dielectric, refracted_cos, sample_visible_normal, RoughnessParams};

/// One particle type: a spheroid with a rough dielectric surface.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSpec {
    /// Minor/major axis ratio; the two minor axes are equal.
    pub sphericity: f64,
    /// GGX α of the particle surface.
    pub roughness: f64,
    pub eta_p: f64,
    pub albedo: Rgb,
    pub blend_weight: f64,
}

impl ParticleSpec {
    pub fn new(sphericity: f64, roughness: f64, eta_p: f64, albedo: Rgb, blend_weight: f64) -> Result<Self> {
        if !(sphericity > 0.0 && sphericity <= 1.0) {
            return Err(invalid(format!("sphericity {sphericity} outside (0, 1]")));
        }
        RoughnessParams::isotropic(roughness)?;
        if !(eta_p > 1.0 && eta_p.is_finite()) {
            return Err(invalid(format!("particle index {eta_p} must exceed 1")));
        }
        if albedo.0.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(invalid("albedo channels must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&blend_weight) {
            return Err(invalid(format!("blend weight {blend_weight} outside [0, 1]")));
        }
        Ok(Self {
            sphericity,
            roughness,
            eta_p,
            albedo,
            blend_weight,
        })
    }
}

/// Binned angular scattering density of a particle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseHistogram {
    /// `bins + 1` edges over `[0, π]`.
    pub edges: Vec<f64>,
    /// Exit energy per incident hit per steradian.
    pub density: Vec<f64>,
    pub counts: Vec<u64>,
    pub samples: u64,
    pub hits: u64,
    pub misses: u64,
    /// Paths cut off by the interaction limit or an unresolvable micro-event.
    pub lost: u64,
}

impl PhaseHistogram {
    pub const DEFAULT_BINS: usize = 180;

    /// Histogram of an analytic density, for fitting tests.
    pub fn from_density(bins: usize, f: impl Fn(f64) -> f64) -> Self {
        let edges: Vec<f64> = (0..=bins).map(|i| PI * i as f64 / bins as f64).collect();
        let density: Vec<f64> = (0..bins).map(|j| f(0.5 * (edges[j] + edges[j + 1]))).collect();
        Self {
            counts: vec![1; bins],
            edges,
            density,
            samples: 0,
            hits: 0,
            misses: 0,
            lost: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn theta_mid(&self, j: usize) -> f64 {
        0.5 * (self.edges[j] + self.edges[j + 1])
    }

    pub fn solid_angle(&self, j: usize) -> f64 {
        2.0 * PI * (self.edges[j].cos() - self.edges[j + 1].cos())
    }

    pub fn nonempty_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Exit energy per incident hit, `∫ density dω`.
    pub fn energy(&self) -> f64 {
        (0..self.bins()).map(|j| self.density[j] * self.solid_angle(j)).sum()
    }
}

/// Maximum surface interactions per path.
const MAX_EVENTS: usize = 256;
/// Micronormal resamples when a scattered direction lands on the wrong side
/// of the macro surface.
const MICRO_RETRIES: usize = 16;

struct Spheroid {
    psi: f64,
}

impl Spheroid {
    /// Ray parameters of the two intersections, if any.
    fn intersect(&self, o: Vec3, d: Vec3) -> Option<(f64, f64)> {
        let s = 1.0 / self.psi;
        let os = Vec3::new(o.x * s, o.y * s, o.z);
        let ds = Vec3::new(d.x * s, d.y * s, d.z);
        let a = ds.length_squared();
        let b = os.dot(ds);
        let c = os.length_squared() - 1.0;
        let disc = b * b - a * c;
        if disc < 0.0 {
            return None;
        }
        let q = disc.sqrt();
        Some(((-b - q) / a, (-b + q) / a))
    }

    fn normal(&self, p: Vec3) -> Vec3 {
        let s2 = 1.0 / (self.psi * self.psi);
        Vec3::new(p.x * s2, p.y * s2, p.z).normalized()
    }
}

#[derive(Clone)]
struct Tally {
    bins: Vec<f64>,
    counts: Vec<u64>,
    hits: u64,
    misses: u64,
    lost: u64,
}

impl Tally {
    fn new(n: usize) -> Self {
        Self {
            bins: vec![0.0; n],
            counts: vec![0; n],
            hits: 0,
            misses: 0,
            lost: 0,
        }
    }

    fn merge(mut self, o: Tally) -> Tally {
        for (a, b) in self.bins.iter_mut().zip(o.bins) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(o.counts) {
            *a += b;
        }
        self.hits += o.hits;
        self.misses += o.misses;
        self.lost += o.lost;
        self
    }
}

/// Scatters `v` (pointing away from the surface on the side of `n`) off a
/// rough dielectric boundary. `eta` is the index ratio across the boundary.
/// Returns the new direction and whether it crossed.
fn micro_event(v: Vec3, n: Vec3, eta: f64, r: &RoughnessParams, rng: &mut McRng) -> Option<(Vec3, bool)> {
    let frame = Frame::from_normal(n);
    let mut vl = frame.to_local(v);
    vl.z = vl.z.max(1e-9);
    let vl = vl.normalized();
    for _ in 0..MICRO_RETRIES {
        let m = sample_visible_normal(vl, r, uniform(rng), uniform(rng));
        let cos = vl.dot(m);
        if cos <= 0.0 {
            continue;
        }
        let f = fresnel_dielectric(cos, eta);
        let (out, crossed) = if uniform(rng) < f {
            (vl.reflect(m), false)
        } else {
            let ct = refracted_cos(cos, eta)?;
            (m * (cos / eta - ct) - vl / eta, true)
        };
        // Reflections must stay above the macro surface and refractions below.
        if (out.z > 0.0) != crossed {
            return Some((frame.to_world(out).normalized(), crossed));
        }
    }
    None
}

/// Monte Carlo deflection-angle density of a randomly oriented particle.
///
/// Rays arrive uniformly over the sphere of directions and uniformly over a
/// disk covering the particle. Hits are traced through reflection and
/// refraction events on the microfacet surface until they leave; each
/// event multiplies the path energy by the mean albedo. `liquid_eta` is
/// the index of the surrounding medium (1 for air).
pub fn simulate_particle(spec: &ParticleSpec, liquid_eta: f64, samples: u64, seed: u64) -> Result<PhaseHistogram> {
    simulate_particle_binned(spec, liquid_eta, samples, seed, PhaseHistogram::DEFAULT_BINS)
}

pub fn simulate_particle_binned(
    spec: &ParticleSpec,
    liquid_eta: f64,
    samples: u64,
    seed: u64,
    bins: usize,
) -> Result<PhaseHistogram> {
    if samples < 100_000 {
        return Err(invalid(format!("particle simulation needs >= 1e5 samples, got {samples}")));
    }
    if !(liquid_eta >= 1.0) {
        return Err(invalid(format!("surrounding index {liquid_eta} below 1")));
    }
    let rough = RoughnessParams::isotropic(spec.roughness)?;
    let eta = spec.eta_p / liquid_eta;
    let albedo = spec.albedo.mean();
    let shape = Spheroid { psi: spec.sphericity };
    let tally = mc::run(
        samples,
        seed,
        || Tally::new(bins),
        |acc, rng, _| {
            let d0 = sample_uniform_sphere(uniform(rng), uniform(rng));
            let frame = Frame::from_normal(d0);
            let (dx, dy) = sample_uniform_disk(uniform(rng), uniform(rng));
            let mut o = frame.to_world(Vec3::new(dx, dy, 0.0)) - d0 * 2.0;
            let mut d = d0;
            let Some((t0, _)) = shape.intersect(o, d) else {
                acc.misses += 1;
                return;
            };
            acc.hits += 1;
            o = o + d * t0;
            let mut inside = false;
            let mut energy = 1.0;
            for _ in 0..MAX_EVENTS {
                let n_out = shape.normal(o);
                let (n, e) = if inside { (-n_out, 1.0 / eta) } else { (n_out, eta) };
                let Some((out, crossed)) = micro_event(-d, n, e, &rough, rng) else {
                    acc.lost += 1;
                    return;
                };
                energy *= albedo;
                d = out;
                if crossed {
                    inside = !inside;
                }
                if !inside {
                    // Convex body: an outgoing ray never returns.
                    let cos = d0.dot(d).clamp(-1.0, 1.0);
                    let j = ((cos.acos() / PI * bins as f64) as usize).min(bins - 1);
                    acc.bins[j] += energy;
                    acc.counts[j] += 1;
                    return;
                }
                let Some((_, t1)) = shape.intersect(o, d) else {
                    acc.lost += 1;
                    return;
                };
                o = o + d * t1;
            }
            acc.lost += 1;
        },
        Tally::merge,
    );
    let edges: Vec<f64> = (0..=bins).map(|i| PI * i as f64 / bins as f64).collect();
    let hits = tally.hits.max(1) as f64;
    let density = (0..bins)
        .map(|j| tally.bins[j] / (hits * 2.0 * PI * (edges[j].cos() - edges[j + 1].cos())))
        .collect();
    Ok(PhaseHistogram {
        edges,
        density,
        counts: tally.counts,
        samples,
        hits: tally.hits,
        misses: tally.misses,
        lost: tally.lost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_sphere_scatters_uniformly() {
        let spec = ParticleSpec::new(1.0, 1e-4, 1e7, Rgb::ONE, 1.0).unwrap();
        let h = simulate_particle_binned(&spec, 1.0, 400_000, 3, 18).unwrap();
        let want = 1.0 / (4.0 * PI);
        for (j, &d) in h.density.iter().enumerate() {
            assert!((d - want).abs() < 0.05 * want, "bin {j}: {d} vs {want}");
        }
        assert!((h.energy() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn absorbing_particles_lose_energy() {
        let spec = ParticleSpec::new(0.8, 0.3, 1.5, Rgb::splat(0.7), 1.0).unwrap();
        let h = simulate_particle(&spec, 1.0, 100_000, 1).unwrap();
        assert!(h.energy() < 0.7 + 1e-9);
        assert!(h.density.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = ParticleSpec::new(0.8, 0.3, 1.5, Rgb::ONE, 1.0).unwrap();
        let a = simulate_particle(&spec, 1.0, 100_000, 9).unwrap();
        let b = simulate_particle(&spec, 1.0, 100_000, 9).unwrap();
        assert_eq!(a, b);
    }
}
