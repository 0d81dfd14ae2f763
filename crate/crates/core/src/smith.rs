//! Smith GGX microsurface: Λ, masking, normal and visible-normal
//! distributions, Fresnel and the microsurface phase function.
//!
//! Sign convention: a direction with `z < 0` travels downward and has
//! `Λ ≤ -1`, via `Λ(-ω) = -1 - Λ(ω)`.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::math::{Rgb, Vec3};

/// Smallest |z| used inside Λ.
pub const GRAZING_Z: f64 = 1e-7;

/// Anisotropic GGX roughness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughnessParams {
    pub alpha_x: f64,
    pub alpha_y: f64,
}

impl RoughnessParams {
    pub fn new(alpha_x: f64, alpha_y: f64) -> Result<Self> {
        for (name, a) in [("alpha_x", alpha_x), ("alpha_y", alpha_y)] {
            if !(a > 0.0 && a <= 4.0) {
                return Err(invalid(format!("{name} = {a} outside (0, 4]")));
            }
        }
        Ok(Self { alpha_x, alpha_y })
    }

    pub fn isotropic(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha)
    }

    pub fn is_isotropic(&self) -> bool {
        self.alpha_x == self.alpha_y
    }

    /// Roughness seen along azimuth `phi`.
    pub fn projected_alpha(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        (self.alpha_x * self.alpha_x * c * c + self.alpha_y * self.alpha_y * s * s).sqrt()
    }
}

/// How microfacets reflect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FresnelSpec {
    /// Angle-independent reflectance per channel.
    Constant(Rgb),
    /// Unpolarized dielectric with relative index `eta` (transmitted over incident).
    Dielectric { eta: f64 },
    /// Unpolarized conductor with complex index `eta + i k`.
    Conductor { eta: Rgb, k: Rgb },
}

impl FresnelSpec {
    /// Perfect reflector, used by furnace tests.
    pub const ONE: FresnelSpec = FresnelSpec::Constant(Rgb::ONE);

    pub fn constant(f0: Rgb) -> Result<Self> {
        if f0.0.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid(format!("constant Fresnel {:?} outside [0, 1]", f0.0)));
        }
        Ok(FresnelSpec::Constant(f0))
    }

    /// Reflectance at microfacet incidence cosine `cos_i`.
    pub fn eval(&self, cos_i: f64) -> Rgb {
        let c = cos_i.abs().min(1.0);
        match *self {
            FresnelSpec::Constant(f) => f,
            FresnelSpec::Dielectric { eta } => Rgb::splat(fresnel_dielectric(c, eta)),
            FresnelSpec::Conductor { eta, k } => {
                Rgb(std::array::from_fn(|i| fresnel_conductor(c, eta[i], k[i])))
            }
        }
    }
}

/// Unpolarized Fresnel reflectance of a dielectric boundary.
///
/// `cos_i > 0` is measured on the incident side and `eta = n_t / n_i`.
/// Returns 1 under total internal reflection.
pub fn fresnel_dielectric(cos_i: f64, eta: f64) -> f64 {
    let cos_i = cos_i.clamp(0.0, 1.0);
    let sin2_t = (1.0 - cos_i * cos_i) / (eta * eta);
    if sin2_t >= 1.0 {
        return 1.0;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let rs = (cos_i - eta * cos_t) / (cos_i + eta * cos_t);
    let rp = (eta * cos_i - cos_t) / (eta * cos_i + cos_t);
    0.5 * (rs * rs + rp * rp)
}

/// Cosine of the refracted direction for [`fresnel_dielectric`]'s inputs,
/// or `None` under total internal reflection.
pub fn refracted_cos(cos_i: f64, eta: f64) -> Option<f64> {
    let sin2_t = (1.0 - cos_i * cos_i) / (eta * eta);
    (sin2_t < 1.0).then(|| (1.0 - sin2_t).sqrt())
}

fn fresnel_conductor(cos_i: f64, eta: f64, k: f64) -> f64 {
    let cos2 = cos_i * cos_i;
    let sin2 = 1.0 - cos2;
    let eta2 = eta * eta;
    let k2 = k * k;
    let t0 = eta2 - k2 - sin2;
    let a2b2 = (t0 * t0 + 4.0 * eta2 * k2).sqrt();
    let t1 = a2b2 + cos2;
    let a = (0.5 * (a2b2 + t0)).max(0.0).sqrt();
    let t2 = 2.0 * cos_i * a;
    let rs = (t1 - t2) / (t1 + t2);
    let t3 = cos2 * a2b2 + sin2 * sin2;
    let t4 = t2 * sin2;
    let rp = rs * (t3 - t4) / (t3 + t4);
    0.5 * (rp + rs)
}

fn lambda_up(d: Vec3, r: &RoughnessParams) -> f64 {
    let z = d.z.abs().max(GRAZING_Z);
    let a2 = (r.alpha_x * r.alpha_x * d.x * d.x + r.alpha_y * r.alpha_y * d.y * d.y) / (z * z);
    // (sqrt(1 + a2) - 1) / 2 without cancellation for small a2.
    a2 / (2.0 * (1.0 + (1.0 + a2).sqrt()))
}

/// Signed Smith Λ for GGX.
pub fn lambda(d: Vec3, r: &RoughnessParams) -> f64 {
    let l = lambda_up(d, r);
    if d.z >= 0.0 {
        l
    } else {
        -1.0 - l
    }
}

/// Masking `1 / (1 + Λ)` for an upward direction.
pub fn g1(d: Vec3, r: &RoughnessParams) -> Result<f64> {
    if d.z <= 0.0 {
        return Err(invalid(format!("g1 needs an upward direction, got z = {}", d.z)));
    }
    Ok(1.0 / (1.0 + lambda_up(d, r)))
}

/// GGX normal distribution, 1/sr.
pub fn ndf(h: Vec3, r: &RoughnessParams) -> f64 {
    if h.z <= 0.0 {
        return 0.0;
    }
    let (ax, ay) = (r.alpha_x, r.alpha_y);
    let t = h.x * h.x / (ax * ax) + h.y * h.y / (ay * ay) + h.z * h.z;
    1.0 / (PI * ax * ay * t * t)
}

/// Projected area `∫ ⟨v, m⟩⁺ D(m) dm = (1 + Λ(v)) v.z` with the signed Λ;
/// `Λ(-v)|v.z|` for a view below the horizon.
fn projected_area(v: Vec3, r: &RoughnessParams) -> f64 {
    let z = v.z.abs().max(GRAZING_Z);
    if v.z >= 0.0 {
        (1.0 + lambda_up(v, r)) * z
    } else {
        lambda_up(v, r) * z
    }
}

/// Density of visible normals `h` seen from `v` (pointing away from the
/// microsurface, either side of the horizon), 1/sr.
pub fn vndf(v: Vec3, h: Vec3, r: &RoughnessParams) -> f64 {
    let vh = v.dot(h);
    if h.z <= 0.0 || vh <= 0.0 {
        return 0.0;
    }
    let area = projected_area(v, r);
    if area <= 0.0 {
        return 0.0;
    }
    vh * ndf(h, r) / area
}

/// Samples a visible micronormal for a view `v` on either side of the
/// horizon (spherical-cap construction in the stretched configuration).
pub fn sample_visible_normal(v: Vec3, r: &RoughnessParams, u1: f64, u2: f64) -> Vec3 {
    let vs = Vec3::new(r.alpha_x * v.x, r.alpha_y * v.y, v.z).normalized();
    // Uniform directions on the cap z > -vs.z map to normals with h.z > 0.
    let z = (1.0 - u1) * (1.0 + vs.z) - vs.z;
    let c = Vec3::from_cos_theta(z.clamp(-1.0, 1.0), 2.0 * PI * u2);
    let h = c + vs;
    Vec3::new(r.alpha_x * h.x, r.alpha_y * h.y, h.z.max(0.0)).normalized()
}

/// Samples the micronormal struck by a ray travelling along `incident`.
pub fn sample_vndf(incident: Vec3, r: &RoughnessParams, u1: f64, u2: f64) -> Vec3 {
    sample_visible_normal(-incident, r, u1, u2)
}

/// Microsurface phase function `F · D_wi(h) / (4 |wi·h|)`.
///
/// `wi` points back along the incoming ray, `wo` along the outgoing one.
/// A ray arriving from below (`wi.z < 0`) strikes the steep facets that
/// face it.
pub fn smith_phase(wi: Vec3, wo: Vec3, r: &RoughnessParams, f: &FresnelSpec) -> Rgb {
    let sum = wi + wo;
    let len = sum.length();
    if len == 0.0 {
        return Rgb::ZERO;
    }
    let mut h = sum / len;
    if h.z < 0.0 {
        h = -h;
    }
    let d = vndf(wi, h, r);
    if d == 0.0 {
        return Rgb::ZERO;
    }
    let vh = wi.dot(h);
    f.eval(vh) * (d / (4.0 * vh))
}

/// Path vertex term `f_p(-d_in, d_out) · |Λ(d_in)|`.
///
/// The projected area of `-d_in` is `|Λ(d_in)| |d_in.z|` on either side of the
/// horizon, so Λ cancels and the term reduces to `F D(h) / (4 |d_in.z|)`.
pub fn vertex_term(d_in: Vec3, d_out: Vec3, r: &RoughnessParams, f: &FresnelSpec) -> Rgb {
    let v = -d_in;
    let sum = v + d_out;
    let len = sum.length();
    if len == 0.0 {
        return Rgb::ZERO;
    }
    let mut h = sum / len;
    if h.z < 0.0 {
        h = -h;
    }
    let vh = v.dot(h);
    if h.z <= 0.0 || vh <= 0.0 {
        return Rgb::ZERO;
    }
    f.eval(vh) * (ndf(h, r) / (4.0 * v.z.abs().max(GRAZING_Z)))
}

/// Next direction after a ray travelling along `d` reflects off a visible
/// micronormal, with the Fresnel factor of that reflection.
///
/// The density of the returned direction is `smith_phase(-d, ·)` with unit
/// Fresnel, so `vertex_term / pdf = F · |Λ(d)|`.
pub fn sample_reflection(d: Vec3, r: &RoughnessParams, f: &FresnelSpec, u1: f64, u2: f64) -> (Vec3, Rgb) {
    let v = -d;
    let h = sample_visible_normal(v, r, u1, u2);
    // Reflecting a unit vector about a unit normal keeps unit length.
    let out = v.reflect(h);
    (out, f.eval(v.dot(h)))
}

/// Pdf of [`sample_reflection`] producing `out` from travel direction `d`.
pub fn reflection_pdf(d: Vec3, out: Vec3, r: &RoughnessParams) -> f64 {
    smith_phase(-d, out, r, &FresnelSpec::ONE)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn iso(a: f64) -> RoughnessParams {
        RoughnessParams::isotropic(a).unwrap()
    }

    /// Λ from its slope-space definition with the GGX slope marginal.
    fn lambda_slope_integral(theta: f64, alpha: f64) -> f64 {
        let mu = 1.0 / theta.tan();
        let p2 = |q: f64| 0.5 / alpha * (1.0 + q * q / (alpha * alpha)).powf(-1.5);
        // q = mu + s / (1 - s) maps [0, 1) onto [mu, inf).
        let n = 20_000;
        let mut acc = 0.0;
        for i in 0..n {
            let s = (i as f64 + 0.5) / n as f64;
            let q = mu + s / (1.0 - s);
            let jac = 1.0 / ((1.0 - s) * (1.0 - s));
            acc += (q - mu) * p2(q) * jac;
        }
        acc / n as f64 / mu
    }

    #[test]
    fn lambda_reference_values() {
        let r = iso(1.0);
        assert_eq!(lambda(Vec3::Z, &r), 0.0);
        assert_eq!(lambda(-Vec3::Z, &r), -1.0);
        let d = Vec3::from_spherical(PI / 4.0, 0.3);
        assert_relative_eq!(lambda(d, &r), (2f64.sqrt() - 1.0) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(g1(d, &r).unwrap(), 0.828427, max_relative = 1e-6);
    }

    #[test]
    fn lambda_matches_slope_integral() {
        for &(theta, alpha) in &[(0.3, 0.2), (1.0, 0.5), (1.3, 1.0), (0.8, 1.7)] {
            let d = Vec3::from_spherical(theta, 0.0);
            let num = lambda_slope_integral(theta, alpha);
            assert_relative_eq!(lambda(d, &iso(alpha)), num, max_relative = 1e-4);
        }
    }

    #[test]
    fn g1_rejects_downward() {
        assert!(g1(-Vec3::Z, &iso(0.5)).is_err());
    }

    #[test]
    fn ndf_projected_area_is_one() {
        for r in [iso(0.3), RoughnessParams::new(0.2, 0.9).unwrap()] {
            let n = 800;
            let mut acc = 0.0;
            for i in 0..n {
                // u = cos^2 grid concentrates samples near the peak.
                let u = (i as f64 + 0.5) / n as f64;
                let ct = u.sqrt();
                for j in 0..64 {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / 64.0;
                    let h = Vec3::from_cos_theta(ct, phi);
                    // d(omega) cos = d(ct) dphi ct = du/2 dphi.
                    acc += ndf(h, &r) * 0.5 / n as f64 * 2.0 * PI / 64.0;
                }
            }
            assert!((acc - 1.0).abs() < 5e-3, "{acc}");
        }
    }

    /// `∫ vndf dω_h` over the upper hemisphere by midpoint rule in `(cos θ, φ)`.
    fn vndf_mass(v: Vec3, r: &RoughnessParams) -> f64 {
        let n = 600;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let c = (i as f64 + 0.5) / n as f64;
                let h = Vec3::from_cos_theta(c, 2.0 * PI * (j as f64 + 0.5) / n as f64);
                s += vndf(v, h, r);
            }
        }
        s * 2.0 * PI / (n * n) as f64
    }

    #[test]
    fn vndf_normalized_on_both_sides_of_horizon() {
        let r = RoughnessParams::new(0.6, 0.9).unwrap();
        for v in [Vec3::from_spherical(0.6, 0.3), Vec3::from_spherical(2.2, 1.7)] {
            let m = vndf_mass(v, &r);
            assert!((m - 1.0).abs() < 2e-3, "{v:?}: {m}");
        }
    }

    #[test]
    fn below_horizon_sampler_faces_the_view() {
        let r = iso(1.0);
        let v = Vec3::from_spherical(2.0, 0.5);
        let n = 20_000;
        let mut mean_z = 0.0;
        for i in 0..n {
            let u1 = (i as f64 + 0.5) / n as f64;
            let u2 = ((i as f64 * 0.618_033_988_749_895) % 1.0).abs();
            let h = sample_visible_normal(v, &r, u1, u2);
            assert!(h.z >= 0.0 && v.dot(h) >= -1e-12);
            mean_z += h.z / n as f64;
        }
        // Mean of h.z under vndf by quadrature.
        let k = 600;
        let mut want = 0.0;
        for i in 0..k {
            for j in 0..k {
                let c = (i as f64 + 0.5) / k as f64;
                let h = Vec3::from_cos_theta(c, 2.0 * PI * (j as f64 + 0.5) / k as f64);
                want += vndf(v, h, &r) * h.z;
            }
        }
        want *= 2.0 * PI / (k * k) as f64;
        assert!((mean_z - want).abs() < 5e-3, "{mean_z} vs {want}");
    }

    #[test]
    fn smooth_limit_samples_geometric_normal() {
        let r = iso(1e-6);
        let h = sample_vndf(Vec3::from_spherical(2.5, 0.4), &r, 0.37, 0.81);
        assert!(h.z > 1.0 - 1e-9);
    }

    #[test]
    fn fresnel_dielectric_normal_incidence() {
        let f = fresnel_dielectric(1.0, 1.5);
        assert_relative_eq!(f, 0.04, max_relative = 1e-12);
        assert_eq!(fresnel_dielectric(0.1, 1.0 / 1.5), 1.0);
    }

    #[test]
    fn conductor_normal_incidence() {
        let (n, k) = (0.2, 3.0);
        let want = ((n - 1.0) * (n - 1.0) + k * k) / ((n + 1.0) * (n + 1.0) + k * k);
        assert_relative_eq!(fresnel_conductor(1.0, n, k), want, max_relative = 1e-12);
    }

    #[test]
    fn vertex_term_straight_down() {
        let r = iso(0.6);
        let wo = Vec3::from_spherical(0.4, 1.0);
        let v = vertex_term(-Vec3::Z, wo, &r, &FresnelSpec::ONE);
        let p = smith_phase(Vec3::Z, wo, &r, &FresnelSpec::ONE);
        assert_relative_eq!(v[0], p[0], max_relative = 1e-15);
    }
}
