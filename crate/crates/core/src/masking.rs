//! Shadowing-masking terms for two- and three-bounce paths that contain
//! refraction events.
//!
//! Every term is a function of the signed Smith Λ values of the path
//! directions `d_0..d_n`, with `d_0` pointing into the surface. Branches are
//! selected by the hemisphere of the interior directions. Within Beta
//! arguments a bare `Λ` stands for its magnitude `|Λ|`, so that `-Λ(d)` and
//! `Λ(d) + 1` remain valid positive parameters for either hemisphere;
//! denominators keep their signed form.
//!
//! Difference quotients in these formulas have removable singularities when
//! two `|Λ|` coincide. Near-coincident values are spread symmetrically to a
//! fixed relative spacing, which turns the quotient into a central
//! finite-difference derivative (second-order accurate).

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::math::Direction;
use crate::smith::{lambda, RoughnessParams};
use crate::special::{
    beta, gen_beta, gen_beta_quadrature, gen_beta_quadrature_full, GenBetaArgs, Method,
};

/// Relative step used for removable-singularity limits.
pub const LIMIT_REL_STEP: f64 = 1e-4;

/// Quadrature tolerance for B² and B³ evaluated numerically.
const QUAD_TOL: f64 = 1e-9;
const B3_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    Reflect,
    Transmit,
}

/// Event sequence of a masking term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskingKind {
    Tr,
    Rt,
    Tt,
    Trr,
    Rtr,
    Ttr,
    Trt,
    Ttt,
}

impl MaskingKind {
    pub const ALL: [MaskingKind; 8] = [
        MaskingKind::Tr,
        MaskingKind::Rt,
        MaskingKind::Tt,
        MaskingKind::Trr,
        MaskingKind::Rtr,
        MaskingKind::Ttr,
        MaskingKind::Trt,
        MaskingKind::Ttt,
    ];

    pub fn events(self) -> &'static [Event] {
        use Event::{Reflect as R, Transmit as T};
        match self {
            MaskingKind::Tr => &[T, R],
            MaskingKind::Rt => &[R, T],
            MaskingKind::Tt => &[T, T],
            MaskingKind::Trr => &[T, R, R],
            MaskingKind::Rtr => &[R, T, R],
            MaskingKind::Ttr => &[T, T, R],
            MaskingKind::Trt => &[T, R, T],
            MaskingKind::Ttt => &[T, T, T],
        }
    }

    pub fn from_events(events: &[Event]) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.events() == events)
    }

    /// Number of scattering vertices; the path has one more direction.
    pub fn bounces(self) -> usize {
        self.events().len()
    }

    fn name(self) -> &'static str {
        match self {
            MaskingKind::Tr => "tr",
            MaskingKind::Rt => "rt",
            MaskingKind::Tt => "tt",
            MaskingKind::Trr => "trr",
            MaskingKind::Rtr => "rtr",
            MaskingKind::Ttr => "ttr",
            MaskingKind::Trt => "trt",
            MaskingKind::Ttt => "ttt",
        }
    }
}

impl fmt::Display for MaskingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MaskingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown masking kind '{s}'")))
    }
}

/// A path `d_0..d_n` with its events and signed Λ values.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskingPath {
    pub directions: Vec<Direction>,
    pub events: Vec<Event>,
    pub lambdas: Vec<f64>,
}

impl MaskingPath {
    pub fn new(directions: &[Direction], events: &[Event], r: &RoughnessParams) -> Result<Self> {
        if !(2..=3).contains(&events.len()) || directions.len() != events.len() + 1 {
            return Err(invalid(format!(
                "masking path needs 2 or 3 events and one more direction, got {} and {}",
                events.len(),
                directions.len()
            )));
        }
        if directions[0].z >= 0.0 {
            return Err(invalid("d0 must point into the surface (d0.z < 0)"));
        }
        Ok(Self {
            directions: directions.to_vec(),
            events: events.to_vec(),
            lambdas: directions.iter().map(|&d| lambda(d, r)).collect(),
        })
    }

    pub fn kind(&self) -> Option<MaskingKind> {
        MaskingKind::from_events(&self.events)
    }

    pub fn eval(&self, opts: &MaskingOptions) -> Result<MaskingValue> {
        let kind = self
            .kind()
            .ok_or_else(|| invalid(format!("no masking term for events {:?}", self.events)))?;
        masking_term(kind, &self.lambdas, opts)
    }
}

/// Source of B² values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum B2Provider {
    /// ₃F₂ closed form.
    #[default]
    Analytic,
    /// Numerical quadrature only.
    Quadrature,
    /// Closed form, cross-checked against quadrature on every call. B³ is
    /// also cross-checked against the fully nested quadrature.
    ///
    /// `Analytic` and `Checked` switch to quadrature for arguments where the
    /// series would lose more than about 1e-10 to cancellation.
    Checked,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskingOptions {
    pub b2: B2Provider,
    /// Resolve near-coincident `|Λ|` via the symmetric limit. When false the
    /// raw formula is evaluated as written.
    pub resolve_degenerate: bool,
}

impl Default for MaskingOptions {
    fn default() -> Self {
        Self {
            b2: B2Provider::Analytic,
            resolve_degenerate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskingValue {
    pub value: f64,
    /// Kind and hemisphere case, e.g. `trr:d1+d2-`.
    pub branch_id: String,
    /// `Limit` when a removable singularity was resolved, otherwise the
    /// least exact generalized-Beta method used.
    pub method: Method,
    /// Largest relative disagreement seen in `Checked` mode.
    pub oracle_rel_err: Option<f64>,
}

struct Evaluator {
    b2: B2Provider,
    method: Method,
    oracle: Option<f64>,
}

impl Evaluator {
    fn new(b2: B2Provider) -> Self {
        Self {
            b2,
            method: Method::Analytic,
            oracle: None,
        }
    }

    fn note(&mut self, m: Method) {
        self.method = self.method.max(m);
    }

    fn check(&mut self, a: f64, b: f64) {
        let e = (a - b).abs() / b.abs();
        self.oracle = Some(self.oracle.map_or(e, |o| o.max(e)));
    }

    fn b(&self, x: f64, y: f64) -> Result<f64> {
        GenBetaArgs::new(&[x], &[y])?;
        Ok(beta(x, y))
    }

    fn b2(&mut self, a1: f64, a2: f64, b1: f64, b2: f64) -> Result<f64> {
        let args = GenBetaArgs::new(&[a1, a2], &[b1, b2])?;
        match self.b2 {
            B2Provider::Analytic => {
                let v = gen_beta(&args)?;
                self.note(v.method);
                Ok(v.value)
            }
            B2Provider::Quadrature => {
                self.note(Method::Quadrature);
                Ok(gen_beta_quadrature(&args, QUAD_TOL)?.value)
            }
            B2Provider::Checked => {
                let v = gen_beta(&args)?;
                self.note(v.method);
                let q = gen_beta_quadrature(&args, QUAD_TOL)?.value;
                self.check(v.value, q);
                Ok(v.value)
            }
        }
    }

    fn b3(&mut self, a: [f64; 3], b: [f64; 3]) -> Result<f64> {
        let args = GenBetaArgs::new(&a, &b)?;
        self.note(Method::Quadrature);
        let v = gen_beta_quadrature(&args, B3_TOL)?.value;
        if self.b2 == B2Provider::Checked {
            let full = gen_beta_quadrature_full(&args, 1e-7)?.value;
            self.check(v, full);
        }
        Ok(v)
    }
}

fn branch_id(kind: MaskingKind, up: &[bool]) -> String {
    let mut s = format!("{kind}:");
    for (i, &u) in up.iter().enumerate() {
        s.push_str(&format!("d{}{}", i + 1, if u { '+' } else { '-' }));
    }
    s
}

/// Groups of `|Λ|` indices whose pairwise differences appear as
/// denominators in the selected branch.
fn clusters(kind: MaskingKind, up1: bool, up2: bool) -> &'static [&'static [usize]] {
    use MaskingKind::*;
    match (kind, up1, up2) {
        (Tr, false, _) => &[&[1, 2]],
        (Trr, false, false) => &[&[1, 2, 3]],
        (Trr, true, false) => &[&[2, 3]],
        (Rtr, false, false) => &[&[0, 1], &[2, 3]],
        (Rtr, false, true) => &[&[0, 1]],
        (Rtr, true, false) => &[&[2, 3]],
        (Ttr, _, true) => &[&[2, 3]],
        (Trt, false, false) | (Trt, true, true) => &[&[1, 2]],
        _ => &[],
    }
}

/// Spreads runs of near-equal values within each cluster to spacing `2h`,
/// `h = LIMIT_REL_STEP · mean`. Returns true if anything moved.
fn spread_degenerate(m: &mut [f64; 4], groups: &[&[usize]]) -> bool {
    let mut moved = false;
    for group in groups {
        let mut idx: Vec<usize> = group.to_vec();
        idx.sort_by(|&i, &j| m[i].total_cmp(&m[j]));
        let mut start = 0;
        while start < idx.len() {
            let mut end = start + 1;
            while end < idx.len() {
                let c = 0.5 * (m[idx[end - 1]] + m[idx[end]]);
                if m[idx[end]] - m[idx[end - 1]] >= 2.0 * LIMIT_REL_STEP * c.max(f64::MIN_POSITIVE) {
                    break;
                }
                end += 1;
            }
            if end - start > 1 {
                let run = &idx[start..end];
                let mean = run.iter().map(|&i| m[i]).sum::<f64>() / run.len() as f64;
                let h = LIMIT_REL_STEP * mean.max(1e-12);
                let mid = (run.len() - 1) as f64 / 2.0;
                for (k, &i) in run.iter().enumerate() {
                    m[i] = mean + (k as f64 - mid) * 2.0 * h;
                }
                moved = true;
            }
            start = end;
        }
    }
    moved
}

/// Evaluates a masking term from the signed Λ of its path directions.
///
/// `lambdas` holds `Λ(d_0)..Λ(d_n)` with `n = kind.bounces()`. `d_0` must be
/// a downward direction (`Λ ≤ -1`) and `d_n` an upward one (`Λ ≥ 0`).
pub fn masking_term(kind: MaskingKind, lambdas: &[f64], opts: &MaskingOptions) -> Result<MaskingValue> {
    let n = kind.bounces();
    if lambdas.len() != n + 1 {
        return Err(invalid(format!(
            "{kind} needs {} lambda values, got {}",
            n + 1,
            lambdas.len()
        )));
    }
    for &l in lambdas {
        // Signed Smith Λ lives on (-inf, -1] ∪ [0, inf).
        if !l.is_finite() || (l > -1.0 && l < 0.0) {
            return Err(invalid(format!("{l} is not a Smith lambda value")));
        }
    }
    if lambdas[0] > -1.0 {
        return Err(invalid("d0 must point into the surface (lambda <= -1)"));
    }
    if lambdas[n] < 0.0 {
        return Err(invalid("the last direction must leave the surface (lambda >= 0)"));
    }
    if kind == MaskingKind::Rt {
        // Path reversal: d'_i = -d_{n-i}, Λ(-d) = -1 - Λ(d).
        let rev: Vec<f64> = lambdas.iter().rev().map(|l| -1.0 - l).collect();
        let mut v = masking_term(MaskingKind::Tr, &rev, opts)?;
        v.branch_id = branch_id(kind, &[lambdas[1] >= 0.0]);
        return Ok(v);
    }

    let up: Vec<bool> = lambdas[1..n].iter().map(|&l| l >= 0.0).collect();
    let mut m = [0.0; 4];
    for (mi, l) in m.iter_mut().zip(lambdas) {
        *mi = l.abs();
    }
    let up1 = up[0];
    let up2 = up.get(1).copied().unwrap_or(true);
    let limit = opts.resolve_degenerate && spread_degenerate(&mut m, clusters(kind, up1, up2));
    let sgn = |i: usize| -> f64 {
        if lambdas[i] >= 0.0 {
            1.0
        } else {
            -1.0
        }
    };
    let l = |i: usize| sgn(i) * m[i];

    let mut ev = Evaluator::new(opts.b2);
    let id = branch_id(kind, &up);
    let undefined = || Error::UndefinedBranch(id.clone());
    let [m0, m1, m2, m3] = m;
    let value = match kind {
        MaskingKind::Tr => {
            if !up1 {
                (ev.b(m1, m0)? - ev.b(m2, m0)?) / (m2 - m1)
            } else {
                ev.b(m2, m0)? / (m2 + l(1))
            }
        }
        MaskingKind::Tt => {
            if !up1 {
                ev.b2(m0, m2 + 1.0, m1, m1 + 1.0)?
            } else {
                ev.b2(m2 + 1.0, m0, m1 + 1.0, m1)?
            }
        }
        MaskingKind::Trr => match (up1, up2) {
            (false, false) => {
                let g1 = ev.b(m1, m0)?;
                ((g1 - ev.b(m2, m0)?) / (m2 - m1) - (g1 - ev.b(m3, m0)?) / (m3 - m1)) / (m3 - m2)
            }
            (true, false) => (ev.b(m2, m0)? / (m2 + l(1)) - ev.b(m3, m0)? / (m3 + l(1))) / (m3 - m2),
            (true, true) => ev.b(m3, m0)? / ((m3 + l(2)) * (m3 + l(1))),
            (false, true) => return Err(undefined()),
        },
        MaskingKind::Rtr => match (up1, up2) {
            (false, false) => {
                let left = (ev.b(m1, m2)? - ev.b(m2, m0)?) / (m0 - m1);
                let right = (ev.b(m1, m3)? - ev.b(m3, m0)?) / (m0 - m1);
                (left - right) / (m3 - m2)
            }
            (false, true) => (ev.b(m1, m3)? - ev.b(m3, m0)?) / ((m0 - m1) * (m3 + l(2))),
            (true, false) => (ev.b(m2, m0)? - ev.b(m3, m0)?) / ((m3 - m2) * (m0 + l(1))),
            (true, true) => ev.b(m3, m0)? / ((m3 + l(2)) * (m0 + l(1))),
        },
        MaskingKind::Ttr => {
            let den = l(3) - l(2);
            match (up1, up2) {
                (false, false) => ev.b2(m1 + 1.0, m1, m3 + 1.0, m0)? / den,
                (false, true) => {
                    (ev.b2(m1 + 1.0, m1, m2 + 1.0, m0)? - ev.b2(m1 + 1.0, m1, m3 + 1.0, m0)?) / den
                }
                (true, false) => ev.b2(m1, m1 + 1.0, m0, m3 + 1.0)? / den,
                (true, true) => {
                    (ev.b2(m1, m1 + 1.0, m0, m2 + 1.0)? - ev.b2(m1, m1 + 1.0, m0, m3 + 1.0)?) / den
                }
            }
        }
        MaskingKind::Trt => {
            let den = l(1) - l(2);
            match (up1, up2) {
                (false, false) => {
                    (ev.b2(m1 + 1.0, m1, m3 + 1.0, m0)? - ev.b2(m2 + 1.0, m2, m3 + 1.0, m0)?) / den
                }
                (true, false) => {
                    (ev.b2(m2 + 1.0, m2, m3 + 1.0, m0)? + ev.b2(m1, m1 + 1.0, m0, m3 + 1.0)?) / den
                }
                (true, true) => {
                    (ev.b2(m2, m2 + 1.0, m0, m3 + 1.0)? - ev.b2(m1, m1 + 1.0, m0, m3 + 1.0)?) / den
                }
                (false, true) => return Err(undefined()),
            }
        }
        MaskingKind::Ttt => match (up1, up2) {
            (false, false) => ev.b3([m0, m2 + 1.0, m2], [m1, m1 + 1.0, m3])?,
            (false, true) => {
                ev.b(m0, m1)? * ev.b2(m1 + 1.0, m3, m2 + 1.0, m2)?
                    - ev.b3([m1, m1 + 1.0, m3], [m0, m2 + 1.0, m2])?
            }
            (true, false) => {
                ev.b(m0, m1)? * ev.b2(m2 + 1.0, m2, m1 + 1.0, m3)?
                    - ev.b3([m0, m2 + 1.0, m2], [m1, m1 + 1.0, m3])?
            }
            (true, true) => ev.b3([m1, m1 + 1.0, m3], [m0, m2 + 1.0, m2])?,
        },
        MaskingKind::Rt => unreachable!("handled by reversal"),
    };
    Ok(MaskingValue {
        value,
        branch_id: id,
        method: if limit { Method::Limit } else { ev.method },
        oracle_rel_err: ev.oracle,
    })
}

fn eval_dirs(kind: MaskingKind, dirs: &[Direction], r: &RoughnessParams) -> Result<MaskingValue> {
    MaskingPath::new(dirs, kind.events(), r)?.eval(&MaskingOptions::default())
}

pub fn s_tr(d0: Direction, d1: Direction, d2: Direction, r: &RoughnessParams) -> Result<MaskingValue> {
    eval_dirs(MaskingKind::Tr, &[d0, d1, d2], r)
}

/// Reflection followed by refraction, obtained from [`s_tr`] by reversing the path.
pub fn s_rt(d0: Direction, d1: Direction, d2: Direction, r: &RoughnessParams) -> Result<MaskingValue> {
    eval_dirs(MaskingKind::Rt, &[d0, d1, d2], r)
}

pub fn s_tt(d0: Direction, d1: Direction, d2: Direction, r: &RoughnessParams) -> Result<MaskingValue> {
    eval_dirs(MaskingKind::Tt, &[d0, d1, d2], r)
}

pub fn s_trr(d: [Direction; 4], r: &RoughnessParams) -> Result<MaskingValue> {
    eval_dirs(MaskingKind::Trr, &d, r)
}

pub fn s_rtr(d: [Direction; 4], r: &RoughnessParams) -> Result<MaskingValue> {
    eval_dirs(MaskingKind::Rtr, &d, r)
}

pub fn s_ttr(d: [Direction; 4], r: &RoughnessParams) -> Result<MaskingValue> {
    eval_dirs(MaskingKind::Ttr, &d, r)
}

pub fn s_trt(d: [Direction; 4], r: &RoughnessParams) -> Result<MaskingValue> {
    eval_dirs(MaskingKind::Trt, &d, r)
}

pub fn s_ttt(d: [Direction; 4], r: &RoughnessParams) -> Result<MaskingValue> {
    eval_dirs(MaskingKind::Ttt, &d, r)
}

/// Outcome of a removable-singularity probe.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitProbe {
    pub branch_id: String,
    /// Value at exact coincidence, resolved by the limit.
    pub limit: f64,
    /// Raw formula with the coinciding values split by `gap` about the same mean.
    pub nearby: f64,
    pub rel_err: f64,
}

/// Forces every denominator cluster of the branch selected by `lambdas` to
/// coincide at its mean and compares the limit with the raw formula at a
/// relative split `rel_gap` (centered, so the comparison is second order).
pub fn limit_probe(kind: MaskingKind, lambdas: &[f64], rel_gap: f64) -> Result<Option<LimitProbe>> {
    let kind_eval = if kind == MaskingKind::Rt { MaskingKind::Tr } else { kind };
    let ls: Vec<f64> = if kind == MaskingKind::Rt {
        lambdas.iter().rev().map(|l| -1.0 - l).collect()
    } else {
        lambdas.to_vec()
    };
    let n = kind_eval.bounces();
    if ls.len() != n + 1 {
        return Err(invalid("wrong number of lambda values"));
    }
    let up1 = ls[1] >= 0.0;
    let up2 = if n == 3 { ls[2] >= 0.0 } else { true };
    let groups = clusters(kind_eval, up1, up2);
    if groups.is_empty() {
        return Ok(None);
    }
    let mut at = ls.clone();
    let mut near = ls.clone();
    for group in groups {
        let mut c = group.iter().map(|&i| ls[i].abs()).sum::<f64>() / group.len() as f64;
        let mid = (group.len() - 1) as f64 / 2.0;
        // Downward members need |Λ| >= 1 after the split as well.
        if group.iter().any(|&i| ls[i] < 0.0) {
            c = c.max(1.0 / (1.0 - mid * rel_gap));
        }
        for (k, &i) in group.iter().enumerate() {
            let s = if ls[i] >= 0.0 { 1.0 } else { -1.0 };
            at[i] = s * c;
            let m = c + (k as f64 - mid) * rel_gap * c;
            near[i] = if s < 0.0 { -m.max(1.0) } else { m };
        }
    }
    let limit = masking_term(kind_eval, &at, &MaskingOptions::default())?;
    let raw = masking_term(
        kind_eval,
        &near,
        &MaskingOptions {
            resolve_degenerate: false,
            ..MaskingOptions::default()
        },
    )?;
    Ok(Some(LimitProbe {
        branch_id: limit.branch_id,
        limit: limit.value,
        nearby: raw.value,
        rel_err: (limit.value - raw.value).abs() / limit.value.abs(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn term(kind: MaskingKind, l: &[f64]) -> MaskingValue {
        masking_term(kind, l, &MaskingOptions::default()).unwrap()
    }

    #[test]
    fn tr_upward_with_zero_lambda() {
        let (l0, l2) = (-2.3, 0.7);
        let v = term(MaskingKind::Tr, &[l0, 0.0, l2]);
        assert_relative_eq!(v.value, beta(l2, -l0) / l2, max_relative = 1e-14);
        assert_eq!(v.branch_id, "tr:d1+");
    }

    #[test]
    fn trr_both_up_with_zero_lambdas() {
        let (l0, l3) = (-1.4, 0.9);
        let v = term(MaskingKind::Trr, &[l0, 0.0, 0.0, l3]);
        assert_relative_eq!(v.value, beta(l3, -l0) / (l3 * l3), max_relative = 1e-14);
    }

    #[test]
    fn tr_limit_is_beta_derivative() {
        let (l0, m) = (-1.7, 2.2);
        let v = term(MaskingKind::Tr, &[l0, -m, m]);
        assert_eq!(v.method, Method::Limit);
        let h = 1e-5;
        let deriv = -(beta(m + h, -l0) - beta(m - h, -l0)) / (2.0 * h);
        assert_relative_eq!(v.value, deriv, max_relative = 1e-7);
    }

    #[test]
    fn rt_is_reversed_tr() {
        let v = term(MaskingKind::Rt, &[-1.3, 0.4, 2.0]);
        let w = term(MaskingKind::Tr, &[-3.0, -1.4, 0.3]);
        assert_eq!(v.value, w.value);
        assert_eq!(v.branch_id, "rt:d1+");
    }

    #[test]
    fn undefined_branches_are_errors() {
        for kind in [MaskingKind::Trr, MaskingKind::Trt] {
            let e = masking_term(kind, &[-1.5, -1.2, 0.4, 0.8], &MaskingOptions::default());
            assert!(matches!(e, Err(Error::UndefinedBranch(_))), "{kind}");
        }
    }

    #[test]
    fn rejects_non_lambda_values() {
        assert!(masking_term(MaskingKind::Tr, &[-1.5, -0.5, 0.3], &MaskingOptions::default()).is_err());
        assert!(masking_term(MaskingKind::Tr, &[0.5, -1.5, 0.3], &MaskingOptions::default()).is_err());
        assert!(masking_term(MaskingKind::Tr, &[-1.5, -1.5], &MaskingOptions::default()).is_err());
    }

    #[test]
    fn trr_second_difference_limit() {
        let v = term(MaskingKind::Trr, &[-1.9, -2.5, -2.5, 2.5]);
        assert_eq!(v.method, Method::Limit);
        // Second divided difference of B(x, m0) is B''(x)/2 at coincidence.
        let (m0, x, h) = (1.9, 2.5, 1e-3);
        let d2 = (beta(x + h, m0) - 2.0 * beta(x, m0) + beta(x - h, m0)) / (h * h);
        assert_relative_eq!(v.value, 0.5 * d2, max_relative = 1e-5);
    }

    #[test]
    fn providers_agree() {
        let l = [-1.6, -1.2, 0.5];
        let a = term(MaskingKind::Tt, &l);
        let q = masking_term(
            MaskingKind::Tt,
            &l,
            &MaskingOptions {
                b2: B2Provider::Quadrature,
                ..Default::default()
            },
        )
        .unwrap();
        assert_relative_eq!(a.value, q.value, max_relative = 1e-8);
        assert_eq!(q.method, Method::Quadrature);
    }

    #[test]
    fn probe_reports_second_order_agreement() {
        let p = limit_probe(MaskingKind::Rtr, &[-1.3, -1.8, -2.2, 1.1], 1e-3).unwrap().unwrap();
        assert!(p.rel_err < 1e-5, "{p:?}");
    }

    #[test]
    fn kind_round_trip() {
        for k in MaskingKind::ALL {
            assert_eq!(k.to_string().parse::<MaskingKind>().unwrap(), k);
            assert_eq!(MaskingKind::from_events(k.events()), Some(k));
        }
    }
}
