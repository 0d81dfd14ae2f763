//! Command-line flags. Angles are in degrees.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scatterkit::masking::{B2Provider, MaskingKind};
use scatterkit::Rgb;

#[derive(Debug, Parser)]
#[command(name = "scatterkit", version, about = "Microfacet and wet-powder scattering toolkit")]
pub struct Cli {
    /// Worker threads; 0 uses every hardware thread. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multiple-bounce BRDF values over an outgoing-direction grid.
    Eval(EvalArgs),
    /// Histogram of sampled exit directions against evaluated BRDF mass.
    SampleHist(SampleHistArgs),
    /// Proxy pdf and the single-bounce + Lambert baseline against the sampled BRDF, all normalized per grid.
    PdfCurve(PdfCurveArgs),
    /// White-furnace directional albedo.
    Furnace(FurnaceArgs),
    /// Exit probability against the segment-term product form on random paths.
    EquivCheck(EquivCheckArgs),
    /// Per-path cost of the segment term and the hyperexponential exit probability.
    /// Timing columns vary between runs.
    BenchSegterm(BenchSegtermArgs),
    /// Generalized Beta function.
    Beta(BetaArgs),
    /// Shadowing-masking term of a refraction path.
    Smask(SmaskArgs),
    /// Simulates a particle and fits its phase function.
    FitPhase(FitPhaseArgs),
    /// Wet BSDF components from a key=value params file.
    WetEval(WetEvalArgs),
    /// Volumetric reference for a wet slab.
    WetOracle(WetOracleArgs),
    /// Runs the acceptance suite and prints a PASS/FAIL table.
    Accept(AcceptArgs),
}

pub fn parse_rgb(s: &str) -> Result<Rgb, String> {
    crate::params::parse_rgb("value", s).map_err(|e| e.0)
}

#[derive(Debug, Clone, Args)]
pub struct SurfaceArgs {
    /// GGX roughness along x.
    #[arg(long, default_value_t = 0.5)]
    pub alpha_x: f64,
    /// GGX roughness along y; defaults to alpha-x.
    #[arg(long)]
    pub alpha_y: Option<f64>,
    /// Maximum number of microfacet bounces.
    #[arg(long, default_value_t = 16)]
    pub max_bounce: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Incident polar angle.
    #[arg(long, default_value_t = 45.0)]
    pub theta_i: f64,
    /// Incident azimuth.
    #[arg(long, default_value_t = 0.0)]
    pub phi_i: f64,
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Constant microfacet reflectance, one value or r,g,b.
    #[arg(long, default_value = "1", value_parser = parse_rgb)]
    pub f0: Rgb,
    /// Paths per BRDF value.
    #[arg(long, default_value_t = 100_000)]
    pub spp: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of outgoing polar angles, at bin centres over [0, 90).
    #[arg(long, default_value_t = 18)]
    pub theta_o_steps: usize,
    /// Outgoing azimuths.
    #[arg(long, value_delimiter = ',', default_value = "0,90,180")]
    pub phi_o: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SampleHistArgs {
    #[arg(long, default_value_t = 45.0)]
    pub theta_i: f64,
    #[arg(long, default_value_t = 0.0)]
    pub phi_i: f64,
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, default_value = "1", value_parser = parse_rgb)]
    pub f0: Rgb,
    /// Sampled paths.
    #[arg(long, default_value_t = 10_000_000)]
    pub samples: u64,
    /// Stochastic BRDF evaluations per histogram bin.
    #[arg(long, default_value_t = 4096)]
    pub eval_per_bin: u64,
    /// Bins along cos θ and along φ.
    #[arg(long, default_value_t = 32)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PdfCurveArgs {
    #[arg(long, default_value_t = 30.0)]
    pub theta_i: f64,
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Sampled paths for the reference distribution.
    #[arg(long, default_value_t = 4_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 32)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FurnaceArgs {
    /// Incident polar angles.
    #[arg(long, value_delimiter = ',', default_value = "0,30,60")]
    pub theta_i: Vec<f64>,
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Samples per albedo estimate.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EquivCheckArgs {
    /// Bounces per path.
    #[arg(long, default_value_t = 2)]
    pub bounces: usize,
    /// Number of random paths.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Isotropic GGX roughness.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchSegtermArgs {
    /// Path lengths to time.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    pub bounces: Vec<usize>,
    /// Random paths per length.
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    /// Order k; the a and b lists must have k entries.
    #[arg(long)]
    pub order: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub a: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProviderArg {
    Analytic,
    Quadrature,
    Checked,
}

impl From<ProviderArg> for B2Provider {
    fn from(p: ProviderArg) -> Self {
        match p {
            ProviderArg::Analytic => B2Provider::Analytic,
            ProviderArg::Quadrature => B2Provider::Quadrature,
            ProviderArg::Checked => B2Provider::Checked,
        }
    }
}

#[derive(Debug, Args)]
pub struct SmaskArgs {
    /// Event sequence: tr, rt, tt, trr, rtr, ttr, trt or ttt.
    #[arg(long, value_parser = parse_kind)]
    pub kind: MaskingKind,
    /// Signed Λ of the path directions d_0..d_n.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub lambdas: Vec<f64>,
    /// Source of second-order generalized Beta values.
    #[arg(long, value_enum, default_value = "analytic")]
    pub provider: ProviderArg,
}

fn parse_kind(s: &str) -> Result<MaskingKind, String> {
    s.parse::<MaskingKind>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct FitPhaseArgs {
    /// Particle sphericity (minor/major axis ratio).
    #[arg(long, default_value_t = 1.0)]
    pub psi: f64,
    /// GGX roughness of the particle surface.
    #[arg(long, default_value_t = 0.1)]
    pub rough: f64,
    /// Particle refractive index.
    #[arg(long, default_value_t = 1.5)]
    pub eta_p: f64,
    /// Index of the surrounding liquid (1 for air).
    #[arg(long, default_value_t = 1.0)]
    pub eta_l: f64,
    /// Particle albedo, one value or r,g,b.
    #[arg(long, default_value = "0.9", value_parser = parse_rgb)]
    pub albedo: Rgb,
    /// Simulated rays.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 180)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the simulated histogram here.
    #[arg(long)]
    pub hist: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WetEvalArgs {
    /// key=value medium description.
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    pub theta_i: f64,
    /// Outgoing azimuth relative to the incident plane.
    #[arg(long, default_value_t = 180.0)]
    pub phi_o: f64,
    /// Outgoing polar angles per hemisphere, at bin centres.
    #[arg(long, default_value_t = 9)]
    pub grid: usize,
    /// Paths for the multiple-scattering estimate.
    #[arg(long, default_value_t = 100_000)]
    pub spp: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct WetOracleArgs {
    /// Slab thickness; `inf` for a half-space.
    #[arg(long, value_parser = parse_thickness)]
    pub thickness: f64,
    #[arg(long)]
    pub porosity: f64,
    #[arg(long)]
    pub saturation: f64,
    /// Particle count per unit volume.
    #[arg(long)]
    pub n: f64,
    /// Liquid extinction, one value or r,g,b.
    #[arg(long, default_value = "0", value_parser = parse_rgb)]
    pub sigma_l: Rgb,
    #[arg(long, default_value_t = 1.0)]
    pub eta_l: f64,
    /// Particle albedo, one value or r,g,b.
    #[arg(long, default_value = "1", value_parser = parse_rgb)]
    pub albedo: Rgb,
    /// Phase fit CSV as written by fit-phase.
    #[arg(long)]
    pub phase: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    pub theta_i: f64,
    #[arg(long, default_value_t = 180.0)]
    pub phi_o: f64,
    #[arg(long, default_value_t = 9)]
    pub grid: usize,
    /// Maximum collisions per path.
    #[arg(long, default_value_t = 8)]
    pub max_collisions: usize,
    #[arg(long, default_value_t = 100_000)]
    pub spp: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_thickness(s: &str) -> Result<f64, String> {
    crate::params::parse_f64("thickness", s).map_err(|e| e.0)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Suite {
    Primary,
}

#[derive(Debug, Args)]
pub struct AcceptArgs {
    #[arg(long, value_enum, default_value = "primary")]
    pub suite: Suite,
    /// Run only these criteria (see --list).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// List criterion names and exit.
    #[arg(long)]
    pub list: bool,
}
