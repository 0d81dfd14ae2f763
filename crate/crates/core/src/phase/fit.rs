use std::f64::consts::PI;

use super::particle::PhaseHistogram;
use crate::error::{invalid, Error, Result};

/// Two-lobe Gaussian phase function in the deflection angle:
/// `w₁ G(θ; μ₁, σ₁) + w₂ G(θ; μ₂, σ₂)` with unit-area Gaussians in θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFit {
    pub w1: f64,
    pub mu1: f64,
    pub sigma1: f64,
    pub w2: f64,
    pub mu2: f64,
    pub sigma2: f64,
}

fn gaussian(x: f64, mu: f64, sigma: f64) -> f64 {
    let t = (x - mu) / sigma;
    (-0.5 * t * t).exp() / ((2.0 * PI).sqrt() * sigma)
}

impl PhaseFit {
    pub fn eval(&self, theta: f64) -> f64 {
        self.w1 * gaussian(theta, self.mu1, self.sigma1) + self.w2 * gaussian(theta, self.mu2, self.sigma2)
    }

    pub fn single(w: f64, mu: f64, sigma: f64) -> Self {
        Self {
            w1: w,
            mu1: mu,
            sigma1: sigma,
            w2: 0.0,
            mu2: PI,
            sigma2: 1.0,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.w1, self.mu1, self.sigma1, self.w2, self.mu2, self.sigma2]
    }

    pub fn from_slice(p: &[f64]) -> Self {
        Self {
            w1: p[0],
            mu1: p[1],
            sigma1: p[2],
            w2: p[3],
            mu2: p[4],
            sigma2: p[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.w1 >= 0.0
            && self.w2 >= 0.0
            && (0.0..=PI).contains(&self.mu1)
            && (0.0..=PI).contains(&self.mu2)
            && self.sigma1 > 0.0
            && self.sigma2 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid phase fit {self:?}")))
        }
    }
}

/// Two-lobe Henyey–Greenstein phase function, per steradian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoHgFit {
    pub w1: f64,
    pub g1: f64,
    pub w2: f64,
    pub g2: f64,
}

pub fn henyey_greenstein(cos: f64, g: f64) -> f64 {
    let d = 1.0 + g * g - 2.0 * g * cos;
    (1.0 - g * g) / (4.0 * PI * d * d.sqrt())
}

impl TwoHgFit {
    pub fn eval(&self, theta: f64) -> f64 {
        let c = theta.cos();
        self.w1 * henyey_greenstein(c, self.g1) + self.w2 * henyey_greenstein(c, self.g2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult<T> {
    pub params: T,
    pub rss: f64,
    /// Iterations of the start that produced `params`.
    pub iterations: usize,
}

/// Outcome of one damped least-squares run.
struct LmOutcome {
    p: Vec<f64>,
    rss: f64,
    iterations: usize,
}

const LM_MAX_ITER: usize = 500;
const LM_REL_TOL: f64 = 1e-9;

fn rss_of(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Solves the small dense system `a x = b` by Gaussian elimination with
/// partial pivoting. `a` is row-major `n × n`.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    Some(x)
}

/// Box constraints on the fit parameters.
struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    fn project(&self, p: &mut [f64]) {
        for (k, x) in p.iter_mut().enumerate() {
            *x = x.clamp(self.lo[k], self.hi[k]);
        }
    }

    /// Whether parameter `k` sits on a bound that the descent direction
    /// `-g` pushes against.
    fn blocks(&self, p: &[f64], g: &[f64], k: usize) -> bool {
        (p[k] <= self.lo[k] && g[k] > 0.0) || (p[k] >= self.hi[k] && g[k] < 0.0)
    }
}

/// Projected Levenberg–Marquardt with Marquardt diagonal scaling and a
/// central-difference Jacobian. Parameters held on a bound by the gradient
/// are frozen for the step, the rest are solved for and projected back.
/// Steps are accepted only when they lower the residual sum of squares.
fn levenberg_marquardt(p0: &[f64], residual: &dyn Fn(&[f64]) -> Vec<f64>, bounds: &Bounds) -> LmOutcome {
    let n = p0.len();
    let mut p = p0.to_vec();
    bounds.project(&mut p);
    let mut r = residual(&p);
    let mut rss = rss_of(&r);
    let mut damping = 1e-3;
    let mut iterations = 0;
    // Consecutive accepted steps below the relative-change tolerance.
    let mut quiet = 0;
    while iterations < LM_MAX_ITER && rss.is_finite() {
        iterations += 1;
        let m = r.len();
        let mut jac = vec![0.0; m * n];
        for k in 0..n {
            let h = 1e-6 * p[k].abs().max(1e-3);
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[k] += h;
            lo[k] -= h;
            let (rh, rl) = (residual(&hi), residual(&lo));
            for i in 0..m {
                jac[i * n + k] = (rh[i] - rl[i]) / (2.0 * h);
            }
        }
        let mut jtj = vec![0.0; n * n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            for a in 0..n {
                let ja = jac[i * n + a];
                jtr[a] += ja * r[i];
                for b in 0..n {
                    jtj[a * n + b] += ja * jac[i * n + b];
                }
            }
        }
        let frozen: Vec<bool> = (0..n).map(|k| bounds.blocks(&p, &jtr, k)).collect();
        let mut accepted = false;
        while damping < 1e12 {
            let mut sys = jtj.clone();
            let mut rhs: Vec<f64> = jtr.iter().map(|g| -g).collect();
            for a in 0..n {
                sys[a * n + a] += damping * jtj[a * n + a].max(1e-12);
                if frozen[a] {
                    for b in 0..n {
                        sys[a * n + b] = 0.0;
                        sys[b * n + a] = 0.0;
                    }
                    sys[a * n + a] = 1.0;
                    rhs[a] = 0.0;
                }
            }
            let Some(step) = solve(sys, rhs) else {
                damping *= 4.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
            bounds.project(&mut trial);
            let rt = residual(&trial);
            let rss_t = rss_of(&rt);
            if rss_t < rss {
                let rel = (rss - rss_t) / rss.max(f64::MIN_POSITIVE);
                p = trial;
                r = rt;
                rss = rss_t;
                damping = (damping / 3.0).max(1e-12);
                accepted = true;
                quiet = if rel < LM_REL_TOL { quiet + 1 } else { 0 };
                if quiet >= 2 {
                    return LmOutcome { p, rss, iterations };
                }
                break;
            }
            damping *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    LmOutcome { p, rss, iterations }
}

fn check_hist(hist: &PhaseHistogram) -> Result<()> {
    if hist.nonempty_bins() < 32 {
        return Err(invalid(format!(
            "phase fit needs >= 32 nonempty bins, histogram has {}",
            hist.nonempty_bins()
        )));
    }
    Ok(())
}

/// `∫ density dθ` over the forward (θ < π/2) and backward halves.
fn theta_mass(hist: &PhaseHistogram) -> (f64, f64) {
    let mut f = 0.0;
    let mut b = 0.0;
    for j in 0..hist.bins() {
        let m = hist.density[j] * (hist.edges[j + 1] - hist.edges[j]);
        if hist.theta_mid(j) < 0.5 * PI {
            f += m;
        } else {
            b += m;
        }
    }
    (f, b)
}

fn gaussian_residuals(hist: &PhaseHistogram, p: &[f64]) -> Vec<f64> {
    let fit = if p.len() == 3 {
        PhaseFit::single(p[0], p[1], p[2])
    } else {
        PhaseFit::from_slice(p)
    };
    (0..hist.bins()).map(|j| fit.eval(hist.theta_mid(j)) - hist.density[j]).collect()
}

fn gaussian_bounds(lobes: usize) -> Bounds {
    Bounds {
        lo: [0.0, 0.0, 1e-4].repeat(lobes),
        hi: [f64::INFINITY, PI, f64::INFINITY].repeat(lobes),
    }
}

fn best<T>(runs: impl Iterator<Item = (T, LmOutcome)>) -> Option<(T, LmOutcome)> {
    runs.filter(|(_, o)| o.rss.is_finite()).min_by(|a, b| a.1.rss.total_cmp(&b.1.rss))
}

/// Best single-Gaussian fit over a small set of starts.
pub fn fit_one_gaussian(hist: &PhaseHistogram) -> Result<FitResult<PhaseFit>> {
    check_hist(hist)?;
    let (f, b) = theta_mass(hist);
    let res = |p: &[f64]| gaussian_residuals(hist, p);
    let starts = [0.0, PI / 6.0, 2.0 * PI / 3.0, PI]
        .into_iter()
        .flat_map(|mu| [0.2, 0.6].map(|s| [f + b, mu, s]));
    let (_, o) = best(starts.map(|s| ((), levenberg_marquardt(&s, &res, &gaussian_bounds(1)))))
        .ok_or_else(|| Error::FitDiverged("no finite single-Gaussian fit".into()))?;
    Ok(FitResult {
        params: PhaseFit::single(o.p[0], o.p[1], o.p[2]),
        rss: o.rss,
        iterations: o.iterations,
    })
}

/// Two-Gaussian least-squares fit from the eight grid starts plus
/// `init` and a start nested on the best single Gaussian, keeping the best.
pub fn fit_two_gaussian(hist: &PhaseHistogram, init: Option<PhaseFit>) -> Result<FitResult<PhaseFit>> {
    check_hist(hist)?;
    let one = fit_one_gaussian(hist)?;
    let (f, b) = theta_mass(hist);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for mu1 in [0.0, PI / 6.0] {
        for mu2 in [2.0 * PI / 3.0, PI] {
            for s in [0.2, 0.6] {
                starts.push(vec![f, mu1, s, b, mu2, s]);
            }
        }
    }
    // The nested model: the single-Gaussian optimum with an empty second lobe.
    let o1 = one.params;
    starts.push(vec![o1.w1, o1.mu1, o1.sigma1, 0.0, PI - o1.mu1, 0.5]);
    if let Some(i) = init {
        starts.push(i.to_vec());
    }
    let res = |p: &[f64]| gaussian_residuals(hist, p);
    let (_, o) = best(starts.iter().map(|s| ((), levenberg_marquardt(s, &res, &gaussian_bounds(2)))))
        .ok_or_else(|| Error::FitDiverged("no finite two-Gaussian fit".into()))?;
    if o.rss > one.rss * (1.0 + 1e-12) {
        return Err(Error::FitDiverged(format!(
            "two-Gaussian RSS {} above single-Gaussian baseline {}",
            o.rss, one.rss
        )));
    }
    Ok(FitResult {
        params: PhaseFit::from_slice(&o.p),
        rss: o.rss,
        iterations: o.iterations,
    })
}

/// Two-lobe Henyey–Greenstein baseline fitted with the same optimizer.
pub fn fit_two_hg_baseline(hist: &PhaseHistogram, init: Option<TwoHgFit>) -> Result<FitResult<TwoHgFit>> {
    check_hist(hist)?;
    let energy = hist.energy();
    let mut forward = 0.0;
    for j in 0..hist.bins() {
        if hist.theta_mid(j) < 0.5 * PI {
            forward += hist.density[j] * hist.solid_angle(j);
        }
    }
    let backward = energy - forward;
    let res = |p: &[f64]| -> Vec<f64> {
        let fit = TwoHgFit {
            w1: p[0],
            g1: p[1],
            w2: p[2],
            g2: p[3],
        };
        (0..hist.bins()).map(|j| fit.eval(hist.theta_mid(j)) - hist.density[j]).collect()
    };
    let bounds = Bounds {
        lo: [0.0, -0.999].repeat(2),
        hi: [f64::INFINITY, 0.999].repeat(2),
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for g1 in [0.3, 0.8] {
        for g2 in [-0.3, -0.8] {
            starts.push(vec![forward, g1, backward, g2]);
        }
    }
    if let Some(i) = init {
        starts.push(vec![i.w1, i.g1, i.w2, i.g2]);
    }
    let (_, o) = best(starts.iter().map(|s| ((), levenberg_marquardt(s, &res, &bounds))))
        .ok_or_else(|| Error::FitDiverged("no finite two-HG fit".into()))?;
    Ok(FitResult {
        params: TwoHgFit {
            w1: o.p[0],
            g1: o.p[1],
            w2: o.p[2],
            g2: o.p[3],
        },
        rss: o.rss,
        iterations: o.iterations,
    })
}

/// Residual sum of squares of `f` against the histogram.
pub fn rss(hist: &PhaseHistogram, f: impl Fn(f64) -> f64) -> f64 {
    (0..hist.bins())
        .map(|j| {
            let r = f(hist.theta_mid(j)) - hist.density[j];
            r * r
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> PhaseFit {
        PhaseFit {
            w1: 0.35,
            mu1: 0.4,
            sigma1: 0.3,
            w2: 0.12,
            mu2: 2.6,
            sigma2: 0.5,
        }
    }

    #[test]
    fn recovers_synthetic_two_gaussian() {
        let t = truth();
        let hist = PhaseHistogram::from_density(180, |x| t.eval(x));
        let fit = fit_two_gaussian(&hist, None).unwrap();
        let (p, q) = (fit.params.to_vec(), t.to_vec());
        for k in 0..6 {
            assert!((p[k] - q[k]).abs() <= 0.01 * q[k].abs(), "param {k}: {} vs {}", p[k], q[k]);
        }
        assert!(fit.rss < 1e-16, "{}", fit.rss);
    }

    #[test]
    fn two_lobes_never_worse_than_one() {
        let hist = PhaseHistogram::from_density(180, |x| 0.05 + 0.2 * (-x).exp() + 0.01 * x * x);
        let one = fit_one_gaussian(&hist).unwrap();
        let two = fit_two_gaussian(&hist, None).unwrap();
        assert!(two.rss <= one.rss);
    }

    #[test]
    fn refit_is_idempotent() {
        let hist = PhaseHistogram::from_density(180, |x| 0.05 + 0.2 * (-x).exp() + 0.01 * x * x);
        let a = fit_two_gaussian(&hist, None).unwrap();
        let b = fit_two_gaussian(&hist, Some(a.params)).unwrap();
        assert!((a.rss - b.rss).abs() < 1e-12, "{} {} {:?} {:?}", a.rss, b.rss, a, b);
    }

    #[test]
    fn hg_baseline_recovers_hg_data() {
        let t = TwoHgFit {
            w1: 0.6,
            g1: 0.7,
            w2: 0.3,
            g2: -0.4,
        };
        let hist = PhaseHistogram::from_density(180, |x| t.eval(x));
        let fit = fit_two_hg_baseline(&hist, None).unwrap();
        assert!(fit.rss < 1e-14, "{fit:?}");
    }

    #[test]
    fn solver_handles_pivoting() {
        let x = solve(vec![0.0, 2.0, 1.0, 1.0], vec![4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }
}
