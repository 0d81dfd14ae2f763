//! Scattering-function toolkit.
//!
//! * [`smith`]: GGX Λ, NDF/VNDF, Fresnel, the microsurface phase function.
//! * [`segment`]: the multiple-bounce segment term (dynamic programming,
//!   direct recursion) and the hyperexponential exit probability.
//! * [`brdf`]: multiple-bounce Smith BRDF evaluation, sampling, the Hapke
//!   proxy pdf and a height-explicit random-walk reference.
//! * [`special`]: Gamma, Beta, generalized Beta and hypergeometric series.
//! * [`masking`]: shadowing-masking terms for paths with refraction.
//! * [`phase`]: ellipsoid particle simulator and two-lobe phase fits.
//! * [`medium`], [`wet`]: porous wet media and the layered wet BSDF.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brdf;
pub mod error;
pub mod masking;
pub mod math;
pub mod mc;
pub mod medium;
pub mod phase;
pub mod segment;
pub mod smith;
pub mod special;
pub mod wet;

pub use brdf::{BrdfEvalConfig, BsdfSample, HapkePdfParams};
pub use error::{Error, Result};
pub use math::{Direction, Frame, Rgb, Vec3};
pub use medium::{MediumSpec, OracleEstimate, OracleOptions};
pub use phase::{BlendedPhase, ParticleSpec, PhaseFit, PhaseHistogram};
pub use segment::{HyperExpState, SegmentTermState};
pub use smith::{FresnelSpec, RoughnessParams};
pub use special::{GenBetaArgs, HypergeomArgs};
pub use wet::WetBsdfParams;
