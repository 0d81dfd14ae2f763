//! Gamma, Beta, generalized Beta and generalized hypergeometric functions.

mod gamma;
mod genbeta;
mod hypergeom;
pub mod quadrature;

pub use gamma::{beta, digamma, gamma, ln_beta, ln_gamma};
pub use genbeta::{
    gen_beta, gen_beta2_analytic, gen_beta_quadrature, gen_beta_quadrature_full, gen_beta_symmetry_check, GenBetaArgs,
    GenBetaValue, Method, SymmetryReport, GEN_BETA_TARGET,
};
pub use hypergeom::{hypergeom_pfq, HypergeomArgs, HypergeomValue};
