//! Plain-text `key = value` description of a wet medium.
//!
//! ```text
//! thickness = 1.5            # or inf
//! porosity = 0.6
//! saturation = 0.4
//! density = 8
//! sigma_l = 0.1, 0.3, 0.6
//! eta_l = 1.33
//! particle.0.sphericity = 0.8
//! particle.0.roughness = 0.3
//! particle.0.eta_p = 1.5
//! particle.0.albedo = 0.9, 0.7, 0.5
//! particle.0.blend_weight = 1
//! particle.0.fit = 0.7, 0.3, 0.4, 0.2, 2.5, 0.6   # optional
//! ```
//!
//! Particles without a `fit` line get one from the particle simulator,
//! using `phase_samples` and `phase_seed`.

use std::collections::BTreeMap;

use scatterkit::phase::{fit_two_gaussian, simulate_particle};
use scatterkit::{BlendedPhase, MediumSpec, ParticleSpec, PhaseFit, Rgb, WetBsdfParams};

use crate::UsageError;

#[derive(Debug, Default)]
struct ParticleFields {
    sphericity: Option<f64>,
    roughness: Option<f64>,
    eta_p: Option<f64>,
    albedo: Option<Rgb>,
    blend_weight: Option<f64>,
    fit: Option<PhaseFit>,
}

#[derive(Debug, Clone)]
pub struct WetParamsFile {
    pub medium: MediumSpec,
    pub fits: Vec<Option<PhaseFit>>,
    pub phase_samples: u64,
    pub phase_seed: u64,
    pub max_collisions: usize,
}

pub fn parse_f64(key: &str, v: &str) -> Result<f64, UsageError> {
    let v = v.trim();
    if v.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    v.parse::<f64>()
        .map_err(|_| UsageError(format!("{key}: '{v}' is not a number")))
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, UsageError> {
    v.split(',').map(|s| parse_f64(key, s)).collect()
}

/// One value for all channels, or three comma-separated values.
pub fn parse_rgb(key: &str, v: &str) -> Result<Rgb, UsageError> {
    match parse_list(key, v)?.as_slice() {
        [x] => Ok(Rgb::splat(*x)),
        [r, g, b] => Ok(Rgb([*r, *g, *b])),
        _ => Err(UsageError(format!("{key}: expected 1 or 3 values, got '{v}'"))),
    }
}

fn parse_int(key: &str, v: &str) -> Result<u64, UsageError> {
    v.trim()
        .parse::<u64>()
        .map_err(|_| UsageError(format!("{key}: '{}' is not a non-negative integer", v.trim())))
}

impl WetParamsFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut scalars: BTreeMap<&str, f64> = BTreeMap::new();
        let mut sigma_l = None;
        let mut particles: BTreeMap<usize, ParticleFields> = BTreeMap::new();
        let (mut phase_samples, mut phase_seed, mut max_collisions) =
            (1_000_000u64, 0u64, scatterkit::wet::DEFAULT_MAX_COLLISIONS);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| UsageError(format!("line {}: expected key = value", n + 1)))?;
            let (key, val) = (key.trim(), val.trim());
            match key {
                "thickness" | "porosity" | "saturation" | "density" | "eta_l" => {
                    scalars.insert(key, parse_f64(key, val)?);
                }
                "sigma_l" => sigma_l = Some(parse_rgb(key, val)?),
                "phase_samples" => phase_samples = parse_int(key, val)?,
                "phase_seed" => phase_seed = parse_int(key, val)?,
                "max_collisions" => max_collisions = parse_int(key, val)? as usize,
                _ => {
                    let mut parts = key.splitn(3, '.');
                    let (Some("particle"), Some(idx), Some(field)) = (parts.next(), parts.next(), parts.next())
                    else {
                        return Err(UsageError(format!("line {}: unknown key '{key}'", n + 1)).into());
                    };
                    let idx: usize = idx
                        .parse()
                        .map_err(|_| UsageError(format!("{key}: bad particle index")))?;
                    let p = particles.entry(idx).or_default();
                    match field {
                        "sphericity" => p.sphericity = Some(parse_f64(key, val)?),
                        "roughness" => p.roughness = Some(parse_f64(key, val)?),
                        "eta_p" => p.eta_p = Some(parse_f64(key, val)?),
                        "albedo" => p.albedo = Some(parse_rgb(key, val)?),
                        "blend_weight" => p.blend_weight = Some(parse_f64(key, val)?),
                        "fit" => {
                            let v = parse_list(key, val)?;
                            if v.len() != 6 {
                                return Err(UsageError(format!("{key}: expected 6 values")).into());
                            }
                            p.fit = Some(PhaseFit::from_slice(&v));
                        }
                        _ => return Err(UsageError(format!("line {}: unknown key '{key}'", n + 1)).into()),
                    }
                }
            }
        }
        let need = |k: &str| -> Result<f64, UsageError> {
            scalars
                .get(k)
                .copied()
                .ok_or_else(|| UsageError(format!("missing key '{k}'")))
        };
        if particles.is_empty() {
            return Err(UsageError("no particle.N.* entries".into()).into());
        }
        let single = particles.len() == 1;
        let mut specs = Vec::new();
        let mut fits = Vec::new();
        for (i, p) in particles {
            let miss = |f: &str| UsageError(format!("missing key 'particle.{i}.{f}'"));
            specs.push(ParticleSpec::new(
                p.sphericity.ok_or_else(|| miss("sphericity"))?,
                p.roughness.ok_or_else(|| miss("roughness"))?,
                p.eta_p.ok_or_else(|| miss("eta_p"))?,
                p.albedo.unwrap_or(Rgb::ONE),
                match p.blend_weight {
                    Some(w) => w,
                    None if single => 1.0,
                    None => return Err(miss("blend_weight").into()),
                },
            )?);
            fits.push(p.fit);
        }
        let medium = MediumSpec::new(
            need("thickness")?,
            need("porosity")?,
            need("saturation")?,
            need("density")?,
            sigma_l.ok_or_else(|| UsageError("missing key 'sigma_l'".into()))?,
            scalars.get("eta_l").copied().unwrap_or(1.0),
            specs,
        )?;
        Ok(Self {
            medium,
            fits,
            phase_samples,
            phase_seed,
            max_collisions,
        })
    }

    /// BSDF parameters, simulating and fitting any particle without a fit.
    pub fn build(&self) -> anyhow::Result<WetBsdfParams> {
        let mut fits = Vec::with_capacity(self.fits.len());
        for (i, (p, fit)) in self.medium.particles.iter().zip(&self.fits).enumerate() {
            let fit = match fit {
                Some(f) => *f,
                None => {
                    let hist = simulate_particle(p, self.medium.eta_l, self.phase_samples, self.phase_seed + i as u64)?;
                    fit_two_gaussian(&hist, None)?.params
                }
            };
            fits.push(fit);
        }
        let weights = self.medium.particles.iter().map(|p| p.blend_weight).collect();
        let phase = BlendedPhase::new(fits, weights)?;
        let mut params = WetBsdfParams::new(self.medium.clone(), phase)?;
        params.max_collisions = self.max_collisions;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
        thickness = 1.5
        porosity = 0.6   # comment
        saturation = 0.4
        density = 8
        sigma_l = 0.1, 0.3, 0.6
        particle.0.sphericity = 0.8
        particle.0.roughness = 0.3
        particle.0.eta_p = 1.5
        particle.0.albedo = 0.9
        particle.0.fit = 0.7, 0.3, 0.4, 0.2, 2.5, 0.6
    ";

    #[test]
    fn parses_sample() {
        let p = WetParamsFile::parse(SAMPLE).unwrap();
        assert_eq!(p.medium.thickness, 1.5);
        assert_eq!(p.medium.sigma_l, Rgb([0.1, 0.3, 0.6]));
        assert_eq!(p.medium.particles[0].blend_weight, 1.0);
        assert!(p.fits[0].is_some());
        assert!(p.build().is_ok());
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = WetParamsFile::parse(&format!("{SAMPLE}\ncolour = 3")).unwrap_err();
        assert!(err.to_string().contains("colour"));
        let err = WetParamsFile::parse(&format!("{SAMPLE}\nparticle.0.size = 3")).unwrap_err();
        assert!(err.to_string().contains("particle.0.size"));
    }

    #[test]
    fn infinite_thickness() {
        let p = WetParamsFile::parse(&SAMPLE.replace("thickness = 1.5", "thickness = inf")).unwrap();
        assert!(p.medium.thickness.is_infinite());
    }
}
