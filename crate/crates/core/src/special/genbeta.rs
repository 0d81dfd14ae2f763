use std::fmt;

use super::gamma::beta;
use super::hypergeom::{hypergeom_pfq, HypergeomArgs};
use super::quadrature::integrate;
use statrs::function::beta::beta_reg;
use crate::error::{invalid, Error, Result};

/// Relative accuracy required of quadrature-evaluated generalized Betas.
pub const GEN_BETA_TARGET: f64 = 1e-6;

/// Parameters of `B^k(a_1..a_k; b_1..b_k)`, the integral of
/// `∏ u_n^{a_n-1} (1-u_n)^{b_n-1}` over `1 ≥ u_1 ≥ u_2 ≥ ... ≥ u_k ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenBetaArgs {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl GenBetaArgs {
    pub fn new(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(invalid(format!(
                "generalized Beta needs k >= 1 equal-length parameter lists, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if let Some(v) = a.iter().chain(b).find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(invalid(format!("generalized Beta parameter {v} is not positive")));
        }
        Ok(Self {
            a: a.to_vec(),
            b: b.to_vec(),
        })
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// Arguments of the mirrored integral `B^k(b_k..b_1; a_k..a_1)`.
    pub fn mirrored(&self) -> Self {
        Self {
            a: self.b.iter().rev().copied().collect(),
            b: self.a.iter().rev().copied().collect(),
        }
    }
}

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Analytic,
    Series,
    Quadrature,
    Limit,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Analytic => "analytic",
            Method::Series => "series",
            Method::Quadrature => "quadrature",
            Method::Limit => "limit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenBetaValue {
    pub value: f64,
    pub method: Method,
    /// Estimated relative error (0 for closed forms).
    pub rel_err: f64,
}

/// Relative cancellation loss above which the ₃F₂ form of B² is abandoned
/// for quadrature.
const SERIES_LOSS_LIMIT: f64 = 1e-10;

/// `B²` through `(1/a_2) B(a_1+a_2, b_1) ₃F₂(a_2, 1-b_2, a_1+a_2; a_2+1, a_1+a_2+b_1; 1)`,
/// or the same identity applied to the mirrored arguments, whichever has
/// the milder alternating parameter. Returns the value and an estimate of
/// the relative rounding loss.
fn gen_beta2_series(a1: f64, a2: f64, b1: f64, b2: f64) -> Result<(f64, f64)> {
    // Mirroring swaps the roles (a1, a2, b1, b2) -> (b2, b1, a2, a1).
    let (a1, a2, b1, b2) = if b2 <= a1 { (a1, a2, b1, b2) } else { (b2, b1, a2, a1) };
    let s = a1 + a2;
    let f = hypergeom_pfq(&HypergeomArgs::new(&[a2, 1.0 - b2, s], &[a2 + 1.0, s + b1], 1.0))?;
    let loss = f64::EPSILON * f.magnitude / f.value.abs();
    Ok((beta(s, b1) * f.value / a2, loss))
}

/// `B²(a_1, a_2; b_1, b_2)` from the ₃F₂ identity without any fallback.
pub fn gen_beta2_analytic(a1: f64, a2: f64, b1: f64, b2: f64) -> Result<f64> {
    GenBetaArgs::new(&[a1, a2], &[b1, b2])?;
    Ok(gen_beta2_series(a1, a2, b1, b2)?.0)
}

/// `B^k` by closed form for `k = 1`, the ₃F₂ series for `k = 2` (falling
/// back to quadrature when the series cancels badly) and nested quadrature
/// above.
pub fn gen_beta(args: &GenBetaArgs) -> Result<GenBetaValue> {
    match args.order() {
        1 => Ok(GenBetaValue {
            value: beta(args.a[0], args.b[0]),
            method: Method::Analytic,
            rel_err: 0.0,
        }),
        2 => {
            let (value, loss) = gen_beta2_series(args.a[0], args.a[1], args.b[0], args.b[1])?;
            if loss <= SERIES_LOSS_LIMIT && value > 0.0 {
                Ok(GenBetaValue {
                    value,
                    method: Method::Series,
                    rel_err: loss,
                })
            } else {
                gen_beta_quadrature(args, 1e-9)
            }
        }
        _ => gen_beta_quadrature(args, GEN_BETA_TARGET * 1e-2),
    }
}

/// `B(x; a, b) / x^a`, finite down to `x = 0`.
fn scaled_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.5 {
        // (1/a) ₂F₁(a, 1-b; a+1; x) after the Euler transformation, which
        // leaves only positive terms.
        let f = hypergeom_pfq(&HypergeomArgs::new(&[1.0, a + b], &[a + 1.0], x))
            .map(|v| v.value)
            .unwrap_or(f64::NAN);
        (1.0 - x).powf(b) * f / a
    } else {
        beta(a, b) * beta_reg(a, b, x) / x.powf(a)
    }
}

/// Nested evaluation in scale-free form. With `T_m = Σ_{j ≥ m} a_j`,
/// level `m` is `N_m(x) = ∫_0^1 v^{T_m-1} (1-xv)^{b_m-1} N_{m+1}(xv) dv`
/// and `B^k = N_0(1)`. Nothing is divided by a power of `x`, so tiny
/// exponents and arguments do not underflow.
struct Nested<'a> {
    a: &'a [f64],
    b: &'a [f64],
    tail: Vec<f64>,
    inner_tol: f64,
    /// Evaluate the innermost level as an incomplete Beta function.
    closed_innermost: bool,
}

impl Nested<'_> {
    fn next(&self, m: usize, y: f64) -> f64 {
        let k = self.a.len();
        if m + 1 == k {
            1.0
        } else if self.closed_innermost && m + 2 == k {
            scaled_incomplete_beta(self.a[m + 1], self.b[m + 1], y)
        } else {
            self.level(m + 1, y).0
        }
    }

    /// `N_m(x)` and its error estimate.
    ///
    /// `[0, 1/2]` uses `v = t^{1/p}/2` with `p = min(T_m, 1)`, absorbing the
    /// power-law endpoint. `[1/2, 1]` uses `1 - v = s^{1/b_m}/2` when
    /// `b_m < 1`, absorbing the singularity at `xv = 1`.
    fn level(&self, m: usize, x: f64) -> (f64, f64) {
        let (tol, max_iv) = if m == 0 { (self.inner_tol * 0.1, 400) } else { (self.inner_tol, 60) };
        let (t_m, b) = (self.tail[m], self.b[m]);
        let p = t_m.min(1.0);
        let lower_scale = 0.5f64.powf(t_m) / p;
        let lower = integrate(
            |t| {
                if t <= 0.0 {
                    return 0.0;
                }
                let v = 0.5 * t.powf(1.0 / p);
                let y = x * v;
                let g = t.powf(t_m / p - 1.0) * (1.0 - y).powf(b - 1.0) * self.next(m, y);
                if g.is_finite() {
                    g * lower_scale
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            tol,
            0.0,
            max_iv,
        );
        let upper = if b < 1.0 {
            integrate(
                |s| {
                    if s <= 0.0 {
                        return 0.0;
                    }
                    let ln_w = s.ln() / b - std::f64::consts::LN_2;
                    let w = ln_w.exp();
                    let ln_one_minus_y = if x == 1.0 { ln_w } else { ((1.0 - x) + x * w).ln() };
                    let v = 1.0 - w;
                    let y = x * v;
                    let g = ((b - 1.0) * ln_one_minus_y + (1.0 / b - 1.0) * s.ln()).exp()
                        * v.powf(t_m - 1.0)
                        * self.next(m, y)
                        * 0.5
                        / b;
                    if g.is_finite() {
                        g
                    } else {
                        0.0
                    }
                },
                0.0,
                1.0,
                tol,
                0.0,
                max_iv,
            )
        } else {
            integrate(
                |v| {
                    let y = x * v;
                    v.powf(t_m - 1.0) * (1.0 - y).powf(b - 1.0) * self.next(m, y)
                },
                0.5,
                1.0,
                tol,
                0.0,
                max_iv,
            )
        };
        (lower.value + upper.value, lower.abs_err + upper.abs_err)
    }
}

/// `B^k` by nested adaptive Gauss–Kronrod quadrature to relative accuracy
/// `rel_tol`. The innermost integral is the incomplete Beta function, so
/// only `k - 1` levels are integrated numerically. Fails with
/// `QuadratureBudgetExceeded` when the estimate stays above
/// [`GEN_BETA_TARGET`].
pub fn gen_beta_quadrature(args: &GenBetaArgs, rel_tol: f64) -> Result<GenBetaValue> {
    nested_quadrature(args, rel_tol, true)
}

/// Like [`gen_beta_quadrature`] but integrates all `k` levels numerically.
/// Much slower; kept as an independent oracle.
pub fn gen_beta_quadrature_full(args: &GenBetaArgs, rel_tol: f64) -> Result<GenBetaValue> {
    nested_quadrature(args, rel_tol, false)
}

fn nested_quadrature(args: &GenBetaArgs, rel_tol: f64, closed_innermost: bool) -> Result<GenBetaValue> {
    let k = args.order();
    let mut tail = vec![0.0; k];
    let mut acc = 0.0;
    for m in (0..k).rev() {
        acc += args.a[m];
        tail[m] = acc;
    }
    let nested = Nested {
        a: &args.a,
        b: &args.b,
        tail,
        inner_tol: rel_tol,
        closed_innermost: closed_innermost && k > 1,
    };
    let (value, abs_err) = if k == 1 && closed_innermost {
        (scaled_incomplete_beta(args.a[0], args.b[0], 1.0), 0.0)
    } else {
        nested.level(0, 1.0)
    };
    let rel_err = abs_err / value.abs();
    if !(rel_err <= GEN_BETA_TARGET.max(rel_tol)) {
        return Err(Error::QuadratureBudgetExceeded {
            rel_err,
            target: GEN_BETA_TARGET.max(rel_tol),
        });
    }
    Ok(GenBetaValue {
        value,
        method: Method::Quadrature,
        rel_err,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    pub direct: f64,
    pub mirrored: f64,
    pub rel_err: f64,
}

/// Compares `B^k(a; b)` with `B^k(b_k..b_1; a_k..a_1)`.
pub fn gen_beta_symmetry_check(args: &GenBetaArgs) -> Result<SymmetryReport> {
    let direct = gen_beta(args)?.value;
    let mirrored = gen_beta(&args.mirrored())?.value;
    Ok(SymmetryReport {
        direct,
        mirrored,
        rel_err: (direct - mirrored).abs() / direct.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn order_one_is_beta() {
        let g = gen_beta(&GenBetaArgs::new(&[2.0], &[3.0]).unwrap()).unwrap();
        assert_relative_eq!(g.value, 1.0 / 12.0, max_relative = 1e-14);
    }

    #[test]
    fn unit_simplex_volumes() {
        let two = GenBetaArgs::new(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(gen_beta(&two).unwrap().value, 0.5, max_relative = 1e-12);
        assert_relative_eq!(gen_beta_quadrature(&two, 1e-10).unwrap().value, 0.5, max_relative = 1e-10);
        let three = GenBetaArgs::new(&[1.0; 3], &[1.0; 3]).unwrap();
        assert_relative_eq!(gen_beta(&three).unwrap().value, 1.0 / 6.0, max_relative = 1e-8);
    }

    #[test]
    fn separable_case() {
        // Unit b-parameters leave pure powers: B²(a1, a2; 1, 1) = 1 / (a2 (a1 + a2)).
        let (a1, a2) = (0.3, 0.45);
        let want = 1.0 / (a2 * (a1 + a2));
        let args = GenBetaArgs::new(&[a1, a2], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(gen_beta(&args).unwrap().value, want, max_relative = 1e-10);
        assert_relative_eq!(gen_beta_quadrature(&args, 1e-10).unwrap().value, want, max_relative = 1e-9);
    }

    #[test]
    fn analytic_and_quadrature_agree_with_singular_ends() {
        let args = GenBetaArgs::new(&[0.3, 0.6], &[0.4, 2.5]).unwrap();
        let an = gen_beta(&args).unwrap().value;
        let qd = gen_beta_quadrature(&args, 1e-10).unwrap().value;
        assert_relative_eq!(an, qd, max_relative = 1e-8);
        let full = gen_beta_quadrature_full(&args, 1e-9).unwrap().value;
        assert_relative_eq!(an, full, max_relative = 1e-8);
    }

    #[test]
    fn tiny_and_large_parameters() {
        // Arguments met by masking terms at near-normal and grazing directions.
        let args = GenBetaArgs::new(&[1.0, 1.0011, 0.0011], &[1.043, 2.043, 1.021]).unwrap();
        let v = gen_beta_quadrature(&args, 1e-8).unwrap();
        assert!(v.value.is_finite() && v.value > 0.0);
        let sym = gen_beta_symmetry_check(&args).unwrap();
        assert!(sym.rel_err < 1e-6, "{sym:?}");
        // Large b_2: the direct ₃F₂ alternates with terms near 2^65.
        let args = GenBetaArgs::new(&[5.88, 6.88], &[3.47, 66.9]).unwrap();
        let an = gen_beta(&args).unwrap().value;
        let qd = gen_beta_quadrature(&args, 1e-10).unwrap().value;
        assert_relative_eq!(an, qd, max_relative = 1e-8);
    }

    #[test]
    fn rejects_bad_args() {
        assert!(GenBetaArgs::new(&[1.0, -0.2], &[1.0, 1.0]).is_err());
        assert!(GenBetaArgs::new(&[1.0], &[1.0, 1.0]).is_err());
    }
}
