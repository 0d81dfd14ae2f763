//! Segment term of the multiple-bounce path formulation.
//!
//! A path is `d_0, d_1, ..., d_k` followed by the exit direction, with
//! `d_0` the (downward) incident ray. Only the signed Λ of each direction
//! enters: downward directions carry `Λ ≤ -1`, upward ones `Λ ≥ 0`.
//!
//! Three implementations live here:
//!
//! * [`SegmentTermState`], the incremental dynamic program used by the
//!   estimators;
//! * [`segterm_recursive_lambdas`], the memoized recursion used as oracle;
//! * [`HyperExpState`], the hyperexponential height distribution whose exit
//!   probability satisfies `p_exit = (∏|Λ(d_i)|) · S`.
//!
//! The recursion splits a path at every interior upward-then-downward turn,
//! `(|Λ_i| + Λ_j) S(i,j) = S(i+1,j) + S(i,j-1) + Σ_m S(i,m-1) S(m,j)`;
//! the split sum vanishes on paths that go down then up only.

use crate::error::{invalid, Error, Result};
use crate::math::Vec3;
use crate::smith::{lambda, RoughnessParams};

/// Below this gap between a new downward `|Λ|` and an existing exponent the
/// hyperexponential update divides by a near-zero difference.
pub const EPS_SINGULAR: f64 = 1e-6;

/// Incremental segment-term state.
///
/// `e[i] = 1/(Λ_o + l[i])` for the i-th downward bounce, `g[i]` accumulates
/// the contribution of paths whose last downward-to-upward turn happens
/// after it, and `m` caches the all-downward product.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTermState {
    lambda_out: f64,
    m: f64,
    e: Vec<f64>,
    g: Vec<f64>,
    l: Vec<f64>,
}

impl SegmentTermState {
    pub fn new(lambda_out: f64) -> Self {
        Self::with_capacity(lambda_out, 8)
    }

    pub fn with_capacity(lambda_out: f64, cap: usize) -> Self {
        Self {
            lambda_out,
            m: 1.0,
            e: Vec::with_capacity(cap),
            g: Vec::with_capacity(cap),
            l: Vec::with_capacity(cap),
        }
    }

    /// Clears the state for reuse with a new exit direction.
    pub fn reset(&mut self, lambda_out: f64) {
        self.lambda_out = lambda_out;
        self.m = 1.0;
        self.e.clear();
        self.g.clear();
        self.l.clear();
    }

    pub fn lambda_out(&self) -> f64 {
        self.lambda_out
    }

    /// Number of downward bounces recorded.
    pub fn len(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
    }

    /// Appends the signed Λ of the next path direction.
    pub fn add_bounce(&mut self, lambda_k: f64) -> Result<()> {
        if lambda_k < 0.0 {
            let l = -lambda_k;
            let e = 1.0 / (self.lambda_out + l);
            self.g.push(if self.l.is_empty() { 1.0 } else { 0.0 });
            self.l.push(l);
            self.e.push(e);
            self.m *= e;
            Ok(())
        } else if lambda_k > 0.0 {
            if self.l.is_empty() {
                return Err(invalid("the first path direction must be downward"));
            }
            let mut h = 0.0;
            for (g, &l) in self.g.iter_mut().zip(&self.l) {
                h = (h + *g) / (lambda_k + l);
                *g = h;
            }
            self.m = 0.0;
            Ok(())
        } else {
            Err(invalid("lambda_k = 0 has no travel direction"))
        }
    }

    /// Current segment term for the recorded path and `Λ_o`.
    pub fn value(&self) -> f64 {
        if self.m != 0.0 || self.l.is_empty() {
            return self.m;
        }
        let mut t = 0.0;
        for (&g, &e) in self.g.iter().zip(&self.e) {
            t = (t + g) * e;
        }
        t
    }
}

/// Segment term through the incremental state, for a whole list of signed
/// Λ values `[Λ(d_0), ..., Λ(d_k), Λ_out]`.
pub fn segterm_dp_lambdas(lambdas: &[f64]) -> Result<f64> {
    let (&lo, path) = lambdas
        .split_last()
        .ok_or_else(|| invalid("empty path"))?;
    if lo < 0.0 {
        return Ok(0.0);
    }
    let mut st = SegmentTermState::with_capacity(lo, path.len());
    for &lk in path {
        st.add_bounce(lk)?;
    }
    Ok(st.value())
}

/// Memoized recursion over subpaths, `O(k^3)`.
///
/// `lambdas` holds the signed Λ of every path direction, the exit last.
/// Returns 0 when the first direction is upward or the last is downward.
pub fn segterm_recursive_lambdas(lambdas: &[f64]) -> f64 {
    let n = lambdas.len();
    if n < 2 {
        return 0.0;
    }
    let idx = |i: usize, j: usize| i * n + j;
    let mut memo = vec![0.0; n * n];
    for len in 1..n {
        for i in 0..n - len {
            let j = i + len;
            if lambdas[i] > 0.0 || lambdas[j] < 0.0 {
                continue;
            }
            let denom = lambdas[i].abs() + lambdas[j];
            let v = if len == 1 {
                1.0 / denom
            } else {
                let mut t = memo[idx(i + 1, j)] + memo[idx(i, j - 1)];
                for m in i + 2..j {
                    t += memo[idx(i, m - 1)] * memo[idx(m, j)];
                }
                t / denom
            };
            memo[idx(i, j)] = v;
        }
    }
    memo[idx(0, n - 1)]
}

/// [`segterm_recursive_lambdas`] on directions.
pub fn segterm_recursive(path: &[Vec3], r: &RoughnessParams) -> f64 {
    let l: Vec<f64> = path.iter().map(|&d| lambda(d, r)).collect();
    segterm_recursive_lambdas(&l)
}

/// Hyperexponential height distribution `Σ_j a_j e^{-b_j h}` of the last
/// scattering vertex.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HyperExpState {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl HyperExpState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> usize {
        self.a.len()
    }

    pub fn coefficients(&self) -> (&[f64], &[f64]) {
        (&self.a, &self.b)
    }

    pub fn add_bounce(&mut self, lambda_k: f64) -> Result<()> {
        if self.a.is_empty() {
            if lambda_k >= 0.0 {
                return Err(invalid("the first path direction must be downward"));
            }
            self.a.push(-lambda_k);
            self.b.push(-lambda_k);
            return Ok(());
        }
        if lambda_k < 0.0 {
            let lam = -lambda_k;
            for &b in &self.b {
                let gap = (lam - b).abs();
                if gap < EPS_SINGULAR {
                    return Err(Error::SingularConfiguration { gap, eps: EPS_SINGULAR });
                }
            }
            let mut sum = 0.0;
            for (a, &b) in self.a.iter_mut().zip(&self.b) {
                *a *= lam / (lam - b);
                sum += *a;
            }
            self.a.push(-sum);
            self.b.push(lam);
        } else if lambda_k > 0.0 {
            for (a, &b) in self.a.iter_mut().zip(&self.b) {
                *a *= lambda_k / (lambda_k + b);
            }
        } else {
            return Err(invalid("lambda_k = 0 has no travel direction"));
        }
        Ok(())
    }

    /// Probability of leaving the microsurface along a direction with
    /// `Λ = lambda_out`.
    pub fn p_exit(&self, lambda_out: f64) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(&a, &b)| a / (b + lambda_out))
            .sum()
    }
}

/// Exit probability for signed Λ values `[Λ(d_0), ..., Λ(d_k), Λ_out]`.
pub fn p_exit_lambdas(lambdas: &[f64]) -> Result<f64> {
    let (&lo, path) = lambdas
        .split_last()
        .ok_or_else(|| invalid("empty path"))?;
    let mut h = HyperExpState::new();
    for &lk in path {
        h.add_bounce(lk)?;
    }
    Ok(h.p_exit(lo))
}

/// Outcome of comparing the two formulations on one path.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub p_exit: f64,
    pub product_form: f64,
    pub rel_err: f64,
    /// Set when the hyperexponential update hit a near-zero difference;
    /// the path is then excluded and `p_exit`/`rel_err` are NaN.
    pub singular: Option<String>,
}

/// Compares `p_exit` with `(∏|Λ(d_i)|) · S` for signed Λ values.
pub fn equivalence_check_lambdas(lambdas: &[f64]) -> Result<EquivalenceReport> {
    let (_, path) = lambdas
        .split_last()
        .ok_or_else(|| invalid("empty path"))?;
    let prod: f64 = path.iter().map(|l| l.abs()).product();
    let product_form = prod * segterm_dp_lambdas(lambdas)?;
    match p_exit_lambdas(lambdas) {
        Ok(p) => Ok(EquivalenceReport {
            p_exit: p,
            product_form,
            rel_err: (p - product_form).abs() / p.abs(),
            singular: None,
        }),
        Err(e @ Error::SingularConfiguration { .. }) => Ok(EquivalenceReport {
            p_exit: f64::NAN,
            product_form,
            rel_err: f64::NAN,
            singular: Some(e.to_string()),
        }),
        Err(e) => Err(e),
    }
}

/// [`equivalence_check_lambdas`] on directions.
pub fn equivalence_check(path: &[Vec3], r: &RoughnessParams) -> Result<EquivalenceReport> {
    let l: Vec<f64> = path.iter().map(|&d| lambda(d, r)).collect();
    equivalence_check_lambdas(&l)
}

/// Arithmetic operation counts (add, mul, div, compare all weigh one) of
/// the two formulations on the same path, `(segment_term, hyperexp)`.
pub fn op_counts(lambdas: &[f64]) -> (usize, usize) {
    let Some((_, path)) = lambdas.split_last() else {
        return (0, 0);
    };
    let (mut st, mut he) = (0usize, 0usize);
    let mut down = 0usize;
    let mut any_up = false;
    for (k, &lk) in path.iter().enumerate() {
        if lk < 0.0 {
            down += 1;
            st += 3;
            if k > 0 {
                // gap checks, three ops per update, running sum and negation
                he += 5 * (down - 1) + 1;
            }
        } else {
            any_up = true;
            st += 3 * down;
            he += 3 * down;
        }
    }
    if any_up {
        st += 2 * down;
    }
    he += 3 * down;
    (st, he)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_bounce_values() {
        assert_eq!(segterm_dp_lambdas(&[-1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(segterm_dp_lambdas(&[-1.5, 0.5]).unwrap(), 0.5);
        assert_eq!(segterm_recursive_lambdas(&[-1.0, 0.0]), 1.0);
    }

    #[test]
    fn two_bounce_all_down_closed_form() {
        let (l0, l1, l2): (f64, f64, f64) = (-1.3, -2.2, 0.4);
        let want = 1.0 / ((l0.abs() + l2) * (l1.abs() + l2));
        assert_relative_eq!(segterm_recursive_lambdas(&[l0, l1, l2]), want, max_relative = 1e-15);
        assert_relative_eq!(segterm_dp_lambdas(&[l0, l1, l2]).unwrap(), want, max_relative = 1e-15);
    }

    #[test]
    fn zero_case_rule() {
        assert_eq!(segterm_recursive_lambdas(&[0.5, 0.3]), 0.0);
        assert_eq!(segterm_recursive_lambdas(&[-1.5, -1.3]), 0.0);
        assert_eq!(segterm_dp_lambdas(&[-1.5, -1.3]).unwrap(), 0.0);
    }

    #[test]
    fn hyperexp_small_paths() {
        let (l0, l1, lo) = (-1.7, -2.9, 0.6);
        assert_relative_eq!(
            p_exit_lambdas(&[l0, lo]).unwrap(),
            1.7 / (1.7 + lo),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            p_exit_lambdas(&[l0, l1, lo]).unwrap(),
            1.7 * 2.9 / ((lo + 1.7) * (lo + 2.9)),
            max_relative = 1e-14
        );
    }

    #[test]
    fn hyperexp_flags_singular_paths() {
        let e = p_exit_lambdas(&[-1.5, -1.5 - 1e-8, 0.2]).unwrap_err();
        assert!(matches!(e, Error::SingularConfiguration { .. }));
    }

    #[test]
    fn zero_lambda_rejected() {
        let mut st = SegmentTermState::new(0.3);
        st.add_bounce(-1.2).unwrap();
        assert!(st.add_bounce(0.0).is_err());
    }

    #[test]
    fn peak_path_matches_direct_integral() {
        // Height-space triple integral of the down,up,down,up path, computed
        // independently to seven digits.
        let l = [-1.5, 0.7, -2.0, 0.4];
        assert_relative_eq!(segterm_recursive_lambdas(&l), 0.0996810, max_relative = 1e-6);
        assert_relative_eq!(segterm_dp_lambdas(&l).unwrap(), 0.0996810, max_relative = 1e-6);
        let prod = 1.5 * 0.7 * 2.0;
        assert_relative_eq!(p_exit_lambdas(&l).unwrap(), prod * 0.0996810, max_relative = 1e-6);
    }

    /// The plain two-term recursion `S_1(d_0,d_k)(S(d_0..d_{k-1}) + S(d_1..d_k))`
    /// drops every path whose subranges both start upward or end downward.
    #[test]
    fn two_term_recursion_misses_peak_paths() {
        fn two_term(l: &[f64]) -> f64 {
            let (i, j) = (0, l.len() - 1);
            if l[i] > 0.0 || l[j] < 0.0 {
                return 0.0;
            }
            let s1 = 1.0 / (l[i].abs() + l[j]);
            if j == 1 {
                return s1;
            }
            s1 * (two_term(&l[..j]) + two_term(&l[1..]))
        }
        let l = [-1.5, 0.7, -2.0, 0.4];
        assert_eq!(two_term(&l), 0.0);
        let mono = [-1.5, -2.0, 0.7, 0.4];
        assert_relative_eq!(two_term(&mono), segterm_recursive_lambdas(&mono), max_relative = 1e-14);
    }

    #[test]
    fn op_counts_favour_dp_on_long_paths() {
        let mut l = vec![-1.3];
        for i in 0..15 {
            l.push(if i % 3 == 0 { 0.4 + i as f64 * 0.01 } else { -1.1 - i as f64 * 0.1 });
        }
        l.push(0.2);
        let (st, he) = op_counts(&l);
        assert!(st < he, "{st} {he}");
    }
}
