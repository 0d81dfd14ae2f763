use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use scatterkit::masking::{masking_term, MaskingOptions};
use scatterkit::mc;
use scatterkit::phase::{fit_one_gaussian, fit_two_gaussian, fit_two_hg_baseline, simulate_particle_binned};
use scatterkit::segment::equivalence_check_lambdas;
use scatterkit::special::gen_beta;
use scatterkit::{
    brdf, medium, wet, BlendedPhase, BrdfEvalConfig, FresnelSpec, GenBetaArgs, MediumSpec, OracleOptions,
    ParticleSpec, PhaseFit, RoughnessParams, Vec3,
};

use crate::args::*;
use crate::experiments::{self, HemiGrid};
use crate::output::{format_f64, Csv};
use crate::params::WetParamsFile;
use crate::{accept, UsageError};

/// What a command needs besides its own flags.
pub struct Ctx<'a> {
    pub repro: String,
    pub out: Option<&'a Path>,
}

impl Ctx<'_> {
    fn csv(&self, header: &[&str]) -> Result<Csv> {
        Csv::create(self.out, &self.repro, header).context("cannot open output")
    }
}

fn deg(x: f64) -> f64 {
    x.to_radians()
}

impl SurfaceArgs {
    fn roughness(&self) -> Result<RoughnessParams> {
        Ok(RoughnessParams::new(self.alpha_x, self.alpha_y.unwrap_or(self.alpha_x))?)
    }

    fn config(&self, samples: u64, seed: u64) -> Result<BrdfEvalConfig> {
        Ok(BrdfEvalConfig::new(self.max_bounce, samples, seed)?)
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(UsageError(format!("--{name} must be at least 1")).into());
    }
    Ok(())
}

pub fn eval(a: &EvalArgs, ctx: &Ctx) -> Result<i32> {
    positive("theta-o-steps", a.theta_o_steps)?;
    let r = a.surface.roughness()?;
    let f = FresnelSpec::constant(a.f0)?;
    let cfg = a.surface.config(a.spp, a.seed)?;
    let wi = Vec3::from_spherical(deg(a.theta_i), deg(a.phi_i));
    let mut csv = ctx.csv(&["theta_o", "phi_o", "value_r", "value_g", "value_b"])?;
    for &phi_o in &a.phi_o {
        for i in 0..a.theta_o_steps {
            let theta_o = (i as f64 + 0.5) * 90.0 / a.theta_o_steps as f64;
            let wo = Vec3::from_spherical(deg(theta_o), deg(phi_o));
            let v = brdf::eval(wi, wo, &r, &f, &cfg);
            csv.row([theta_o, phi_o, v[0], v[1], v[2]])?;
        }
    }
    csv.finish()?;
    Ok(0)
}

pub fn sample_hist(a: &SampleHistArgs, ctx: &Ctx) -> Result<i32> {
    positive("bins", a.bins)?;
    positive("eval-per-bin", a.eval_per_bin as usize)?;
    let r = a.surface.roughness()?;
    let f = FresnelSpec::constant(a.f0)?;
    let cfg = a.surface.config(a.samples, a.seed)?;
    let wi = Vec3::from_spherical(deg(a.theta_i), deg(a.phi_i));
    let res = experiments::sampler_consistency(wi, &r, &f, &cfg, HemiGrid::square(a.bins), a.eval_per_bin);
    let mut csv = ctx.csv(&["cos_lo", "cos_hi", "phi_lo", "phi_hi", "sampled", "evaluated"])?;
    for b in 0..res.grid.len() {
        let (c0, c1, p0, p1) = res.grid.bounds(b);
        csv.row([c0, c1, p0, p1, res.sampled[b], res.evaluated[b]])?;
    }
    csv.comment(&format!("l1 {} mass_ratio {}", format_f64(res.l1), format_f64(res.mass_ratio)))?;
    csv.finish()?;
    log::info!("sampler vs eval L1 = {:.4}, mass ratio {:.4}", res.l1, res.mass_ratio);
    Ok(0)
}

pub fn pdf_curve(a: &PdfCurveArgs, ctx: &Ctx) -> Result<i32> {
    positive("bins", a.bins)?;
    let r = a.surface.roughness()?;
    let cfg = a.surface.config(a.samples, a.seed)?;
    let wi = Vec3::from_spherical(deg(a.theta_i), 0.0);
    let res = experiments::pdf_comparison(wi, &r, &cfg, HemiGrid::square(a.bins));
    let mut csv = ctx.csv(&["cos_lo", "cos_hi", "phi_lo", "phi_hi", "reference", "proxy", "baseline"])?;
    for b in 0..res.grid.len() {
        let (c0, c1, p0, p1) = res.grid.bounds(b);
        csv.row([c0, c1, p0, p1, res.reference[b], res.proxy[b], res.baseline[b]])?;
    }
    csv.comment(&format!("l1_proxy {} l1_baseline {}", format_f64(res.l1_proxy), format_f64(res.l1_baseline)))?;
    csv.finish()?;
    Ok(0)
}

pub fn furnace(a: &FurnaceArgs, ctx: &Ctx) -> Result<i32> {
    let r = a.surface.roughness()?;
    let cfg = a.surface.config(a.samples, a.seed)?;
    let mut csv = ctx.csv(&["theta_i", "alpha_x", "alpha_y", "albedo", "std_err"])?;
    for &t in &a.theta_i {
        let s = brdf::furnace_albedo(deg(t), &r, &cfg);
        csv.row([t, r.alpha_x, r.alpha_y, s.mean(), s.std_err()])?;
    }
    csv.finish()?;
    Ok(0)
}

pub fn equiv_check(a: &EquivCheckArgs, ctx: &Ctx) -> Result<i32> {
    positive("bounces", a.bounces)?;
    let r = RoughnessParams::isotropic(a.alpha)?;
    let mut rng = mc::stream_rng(a.seed, 0);
    let mut csv = ctx.csv(&["path_id", "k", "p_exit", "product_form", "rel_err", "singular_flag"])?;
    for id in 0..a.trials {
        let l = experiments::random_path_lambdas(a.bounces, &r, &mut rng);
        let rep = equivalence_check_lambdas(&l)?;
        csv.row([
            id.into(),
            a.bounces.into(),
            rep.p_exit.into(),
            rep.product_form.into(),
            rep.rel_err.into(),
            crate::output::Field::from(rep.singular.is_some()),
        ])?;
    }
    csv.finish()?;
    Ok(0)
}

pub fn bench_segterm(a: &BenchSegtermArgs, ctx: &Ctx) -> Result<i32> {
    positive("paths", a.paths)?;
    let mut csv = ctx.csv(&[
        "k",
        "paths",
        "segterm_ns",
        "hyperexp_ns",
        "segterm_ops",
        "hyperexp_ops",
        "max_rel_diff",
        "max_rel_diff_extended",
        "ill_conditioned",
    ])?;
    for &k in &a.bounces {
        positive("bounces", k)?;
        let row = experiments::bench_segterm(k, a.paths, a.alpha, a.seed)?;
        csv.row([
            row.k as f64,
            row.paths as f64,
            row.segterm_ns,
            row.hyperexp_ns,
            row.segterm_ops,
            row.hyperexp_ops,
            row.max_rel_diff,
            row.max_rel_diff_extended,
            row.ill_conditioned as f64,
        ])?;
    }
    csv.finish()?;
    Ok(0)
}

pub fn beta(a: &BetaArgs, ctx: &Ctx) -> Result<i32> {
    if a.a.len() != a.order || a.b.len() != a.order {
        return Err(UsageError(format!(
            "--order {} needs {} values in --a and --b, got {} and {}",
            a.order,
            a.order,
            a.a.len(),
            a.b.len()
        ))
        .into());
    }
    let v = gen_beta(&GenBetaArgs::new(&a.a, &a.b)?)?;
    let mut csv = ctx.csv(&["value", "method"])?;
    csv.row([format_f64(v.value), v.method.to_string()])?;
    csv.finish()?;
    Ok(0)
}

pub fn smask(a: &SmaskArgs, ctx: &Ctx) -> Result<i32> {
    let opts = MaskingOptions {
        b2: a.provider.into(),
        ..MaskingOptions::default()
    };
    let v = masking_term(a.kind, &a.lambdas, &opts)?;
    let mut csv = ctx.csv(&["value", "branch_id", "method"])?;
    csv.row([format_f64(v.value), v.branch_id, v.method.to_string()])?;
    if let Some(e) = v.oracle_rel_err {
        csv.comment(&format!("oracle_rel_err {}", format_f64(e)))?;
    }
    csv.finish()?;
    Ok(0)
}

pub fn fit_phase(a: &FitPhaseArgs, ctx: &Ctx) -> Result<i32> {
    let spec = ParticleSpec::new(a.psi, a.rough, a.eta_p, a.albedo, 1.0)?;
    let hist = simulate_particle_binned(&spec, a.eta_l, a.samples, a.seed, a.bins)?;
    if let Some(path) = &a.hist {
        let mut h = Csv::create(Some(path), &ctx.repro, &["theta_mid", "density", "count"])?;
        for j in 0..hist.bins() {
            h.row([hist.theta_mid(j).into(), hist.density[j].into(), crate::output::Field::from(hist.counts[j])])?;
        }
        h.finish()?;
    }
    let one = fit_one_gaussian(&hist)?;
    let two = fit_two_gaussian(&hist, None)?;
    let hg = fit_two_hg_baseline(&hist, None)?;
    let p = two.params;
    let mut csv = ctx.csv(&["w1", "mu1", "sigma1", "w2", "mu2", "sigma2", "rss"])?;
    csv.row([p.w1, p.mu1, p.sigma1, p.w2, p.mu2, p.sigma2, two.rss])?;
    csv.comment(&format!("rss_one_gaussian {} rss_two_hg {}", format_f64(one.rss), format_f64(hg.rss)))?;
    csv.finish()?;
    Ok(0)
}

/// Outgoing polar angles at bin centres over [0, 90).
fn polar_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (i as f64 + 0.5) * 90.0 / n as f64)
}

const CHANNELS: [&str; 3] = ["r", "g", "b"];

pub fn wet_eval(a: &WetEvalArgs, ctx: &Ctx) -> Result<i32> {
    positive("grid", a.grid)?;
    let text = fs::read_to_string(&a.params).with_context(|| format!("cannot read {}", a.params.display()))?;
    let p = WetParamsFile::parse(&text)?.build()?;
    let wi = Vec3::from_spherical(deg(a.theta_i), 0.0);
    let delta = wet::delta_transmission(wi, &p)?;
    let mut csv = ctx.csv(&["theta_o", "channel", "single_r", "single_t", "multi", "delta", "total"])?;
    let mut rows = Vec::new();
    for t in polar_grid(a.grid) {
        rows.push(t);
    }
    for t in polar_grid(a.grid).collect::<Vec<_>>().into_iter().rev() {
        rows.push(180.0 - t);
    }
    for (i, theta_o) in rows.into_iter().enumerate() {
        let wo = Vec3::from_spherical(deg(theta_o), deg(a.phi_o));
        let (sr, st) = if wo.z > 0.0 {
            (wet::eval_single_r(wi, wo, &p)?, scatterkit::Rgb::ZERO)
        } else {
            (scatterkit::Rgb::ZERO, wet::eval_single_t(wi, wo, &p)?)
        };
        let multi = wet::eval_multi(wi, wo, &p, a.spp, a.seed.wrapping_add(i as u64))?;
        for c in 0..3 {
            csv.row([
                format_f64(theta_o),
                CHANNELS[c].to_string(),
                format_f64(sr[c]),
                format_f64(st[c]),
                format_f64(multi[c]),
                format_f64(delta[c]),
                format_f64(sr[c] + st[c] + multi[c]),
            ])?;
        }
    }
    csv.finish()?;
    Ok(0)
}

/// First data row of a fit CSV.
pub fn read_fit_csv(path: &Path) -> Result<PhaseFit> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| UsageError(format!("{}: empty fit file", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let row = lines
        .next()
        .ok_or_else(|| UsageError(format!("{}: no fit row", path.display())))?;
    let vals: Vec<&str> = row.split(',').map(str::trim).collect();
    let get = |name: &str| -> Result<f64> {
        let i = cols
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| UsageError(format!("{}: missing column {name}", path.display())))?;
        Ok(crate::params::parse_f64(name, vals.get(i).copied().unwrap_or(""))?)
    };
    let fit = PhaseFit {
        w1: get("w1")?,
        mu1: get("mu1")?,
        sigma1: get("sigma1")?,
        w2: get("w2")?,
        mu2: get("mu2")?,
        sigma2: get("sigma2")?,
    };
    fit.validate()?;
    Ok(fit)
}

pub fn wet_oracle(a: &WetOracleArgs, ctx: &Ctx) -> Result<i32> {
    positive("grid", a.grid)?;
    positive("max-collisions", a.max_collisions)?;
    let phase = BlendedPhase::single(read_fit_csv(&a.phase)?)?;
    // Particle shape enters only through the phase fit; the albedo is all
    // the oracle needs from the particle record.
    let particle = ParticleSpec::new(1.0, 0.5, 1.5, a.albedo, 1.0)?;
    let spec = MediumSpec::new(a.thickness, a.porosity, a.saturation, a.n, a.sigma_l, a.eta_l, vec![particle])?;
    let wi = Vec3::from_spherical(deg(a.theta_i), 0.0);
    let opts = OracleOptions::all(a.max_collisions);
    let mut csv = ctx.csv(&["theta_o", "channel", "refl", "trans", "refl_err", "trans_err"])?;
    for (i, theta_o) in polar_grid(a.grid).enumerate() {
        let wr = Vec3::from_spherical(deg(theta_o), deg(a.phi_o));
        let wt = Vec3::from_spherical(PI - deg(theta_o), deg(a.phi_o));
        let seed = a.seed.wrapping_add(2 * i as u64);
        let r = medium::rte_oracle(&spec, &phase, wi, wr, opts, a.spp, seed)?;
        let t = if spec.thickness.is_finite() {
            Some(medium::rte_oracle(&spec, &phase, wi, wt, opts, a.spp, seed + 1)?)
        } else {
            None
        };
        for (c, name) in CHANNELS.iter().enumerate() {
            let (tv, te) = t.map_or((0.0, 0.0), |t| (t.value[c], t.std_err[c]));
            csv.row([
                format_f64(theta_o),
                name.to_string(),
                format_f64(r.value[c]),
                format_f64(tv),
                format_f64(r.std_err[c]),
                format_f64(te),
            ])?;
        }
    }
    csv.finish()?;
    Ok(0)
}

pub fn accept_cmd(a: &AcceptArgs) -> Result<i32> {
    let Suite::Primary = a.suite;
    if a.list {
        for c in accept::PRIMARY {
            println!("{:<24} {}", c.name, c.summary);
        }
        return Ok(0);
    }
    for name in &a.only {
        if !accept::PRIMARY.iter().any(|c| c.name == name) {
            return Err(UsageError(format!("--only: unknown criterion '{name}'")).into());
        }
    }
    println!("{}", accept::table_header());
    let mut all = true;
    for c in accept::PRIMARY {
        if !a.only.is_empty() && !a.only.iter().any(|n| n == c.name) {
            continue;
        }
        let o = accept::run_criterion(c);
        println!("{}", o.table_row());
        all &= o.pass;
    }
    Ok(if all { 0 } else { 1 })
}
