use crate::error::{invalid, Error, Result};

/// Inputs of `pFq(a; b; z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergeomArgs {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub z: f64,
    pub max_terms: usize,
    pub tol: f64,
}

impl HypergeomArgs {
    pub fn new(a: &[f64], b: &[f64], z: f64) -> Self {
        Self {
            a: a.to_vec(),
            b: b.to_vec(),
            z,
            max_terms: 100_000,
            tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypergeomValue {
    pub value: f64,
    /// Terms of the series that were summed.
    pub terms: usize,
    /// True when the value was extrapolated from partial sums.
    pub accelerated: bool,
    /// Magnitude of the last term, or of the last extrapolation update.
    pub last_correction: f64,
    /// `Σ|term|`; `magnitude / |value|` bounds the cancellation loss.
    pub magnitude: f64,
}

/// Partial sums at `z = 1` are recorded at `FIRST_MARK · 2^i`, `i < MARKS`.
const FIRST_MARK: usize = 250;
const MARKS: usize = 7;

/// Generalized hypergeometric series `pFq(a; b; z)` for `z ∈ [0, 1]`.
///
/// Summed by the term-ratio recurrence with compensated accumulation. At
/// `z = 1` the series converges only algebraically, with partial sums
/// `S_N = S + N^{-e} (d_0 + d_1/N + ...)` where `e = Σb - Σa`. If direct
/// summation has not reached `tol` by `FIRST_MARK · 2^{MARKS-1}` terms, the
/// sums at the doubling marks are Richardson-extrapolated with the known
/// exponents `e, e+1, ...`.
pub fn hypergeom_pfq(args: &HypergeomArgs) -> Result<HypergeomValue> {
    let HypergeomArgs { a, b, z, max_terms, tol } = args;
    let (z, max_terms, tol) = (*z, *max_terms, *tol);
    if !(0.0..=1.0).contains(&z) {
        return Err(invalid(format!("z = {z} outside [0, 1]")));
    }
    if let Some(bj) = b.iter().find(|&&bj| bj <= 0.0 && bj == bj.round()) {
        return Err(invalid(format!("lower parameter {bj} is a nonpositive integer")));
    }
    let excess: f64 = b.iter().sum::<f64>() - a.iter().sum::<f64>();
    let at_one = z == 1.0 && a.len() == b.len() + 1;
    if at_one && excess <= 0.0 {
        return Err(invalid(format!(
            "series at z = 1 diverges: sum(b) - sum(a) = {excess} <= 0"
        )));
    }

    let mut sum = 1.0;
    let mut comp = 0.0;
    let mut term = 1.0;
    let mut magnitude = 1.0;
    let mut marks = Vec::with_capacity(MARKS);
    let mut next_mark = FIRST_MARK;
    for k in 0..max_terms {
        let kf = k as f64;
        let mut ratio = z / (kf + 1.0);
        for &ai in a {
            ratio *= ai + kf;
        }
        for &bj in b {
            ratio /= bj + kf;
        }
        term *= ratio;
        // Kahan step
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        magnitude += term.abs();
        // Bound on the remaining tail relative to the current term: ~k/e for
        // algebraic decay at z = 1, geometric 1/(1-z) below.
        let tail = if at_one {
            (kf + 1.0) / excess
        } else if z < 1.0 {
            1.0 / (1.0 - z)
        } else {
            1.0
        };
        if term == 0.0 || term.abs() * tail <= tol * sum.abs() {
            return Ok(HypergeomValue {
                value: sum,
                terms: k + 2,
                accelerated: false,
                last_correction: term.abs(),
                magnitude,
            });
        }
        if !term.is_finite() {
            break;
        }
        if at_one && k + 1 == next_mark {
            marks.push(sum);
            next_mark *= 2;
            if marks.len() == MARKS {
                let (value, corr) = richardson(&marks, excess);
                return Ok(HypergeomValue {
                    value,
                    terms: k + 2,
                    accelerated: true,
                    last_correction: corr,
                    magnitude,
                });
            }
        }
    }
    Err(Error::NotConverged {
        terms: max_terms,
        last_term: term.abs(),
    })
}

/// Extrapolates sums taken at doubling `N` whose error expands in
/// `N^{-e}, N^{-e-1}, ...`. Returns the estimate and its last update.
fn richardson(sums: &[f64], e: f64) -> (f64, f64) {
    let mut row = sums.to_vec();
    let mut corr = f64::INFINITY;
    for j in 0..sums.len() - 1 {
        let f = 2f64.powf(e + j as f64);
        let prev = row[0];
        row = row.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        corr = (row[0] - prev).abs();
    }
    (row[0], corr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{beta, gamma};
    use approx::assert_relative_eq;

    #[test]
    fn zero_argument_is_one() {
        let v = hypergeom_pfq(&HypergeomArgs::new(&[0.3, 2.0], &[1.7], 0.0)).unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn logarithm_identity() {
        let v = hypergeom_pfq(&HypergeomArgs::new(&[1.0, 1.0], &[2.0], 0.5)).unwrap();
        assert_relative_eq!(v.value, 2.0 * 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn gauss_summation_at_one() {
        for &(a, b, c) in &[(0.5, 0.7, 3.0), (1.2, 0.4, 1.9), (0.9, 0.8, 2.0), (1.3, -1.5, 1.35)] {
            let v = hypergeom_pfq(&HypergeomArgs::new(&[a, b], &[c], 1.0)).unwrap();
            let want = gamma(c) * gamma(c - a - b) / (gamma(c - a) * gamma(c - b));
            assert_relative_eq!(v.value, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn series_summing_to_zero() {
        // c = a makes the sum (1 - 1)^{-b} = 0.
        let v = hypergeom_pfq(&HypergeomArgs::new(&[2.5, -0.3], &[2.5], 1.0)).unwrap();
        assert!(v.value.abs() < 1e-12, "{}", v.value);
    }

    #[test]
    fn beta_as_hypergeometric() {
        for &(a, b) in &[(0.4, 0.6), (2.0, 3.5), (1.3, 0.25), (4.0, 1.0)] {
            let v = hypergeom_pfq(&HypergeomArgs::new(&[a, 1.0 - b], &[1.0 + a], 1.0)).unwrap();
            assert_relative_eq!(v.value / a, beta(a, b), max_relative = 1e-12);
        }
    }

    #[test]
    fn divergent_at_one_rejected() {
        assert!(hypergeom_pfq(&HypergeomArgs::new(&[1.0, 1.0], &[1.5], 1.0)).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let mut args = HypergeomArgs::new(&[1.0, 1.0], &[2.0], 0.999_999);
        args.max_terms = 50;
        assert!(matches!(hypergeom_pfq(&args), Err(Error::NotConverged { .. })));
    }
}
