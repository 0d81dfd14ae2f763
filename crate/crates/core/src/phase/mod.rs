//! Particle phase functions: a Monte Carlo spheroid simulator, two-lobe
//! Gaussian and Henyey–Greenstein fits, and the blended, sampleable phase
//! used by the wet BSDF.

mod blend;
mod fit;
mod particle;

pub use blend::{BlendedPhase, CDF_KNOTS};
pub use fit::{
    fit_one_gaussian, fit_two_gaussian, fit_two_hg_baseline, henyey_greenstein, rss, FitResult, PhaseFit, TwoHgFit,
};
pub use particle::{simulate_particle, simulate_particle_binned, ParticleSpec, PhaseHistogram};
