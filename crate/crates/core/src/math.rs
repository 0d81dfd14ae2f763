//! Small vector and colour types shared by every module.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, DivAssign, Index, Mul, MulAssign, Neg, Sub};

/// A 3-vector in the z-up shading frame.
///
/// Directions are unit vectors of this type; the sign of `z` tells whether a
/// ray travels upward (`z > 0`) or downward (`z < 0`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Unit vector in the shading frame.
pub type Direction = Vec3;

impl Vec3 {
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Unit direction from polar angle `theta` (from +z) and azimuth `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(st * cp, st * sp, ct)
    }

    /// Unit direction from `cos theta` and azimuth.
    pub fn from_cos_theta(cos_theta: f64, phi: f64) -> Self {
        let st = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        let (sp, cp) = phi.sin_cos();
        Self::new(st * cp, st * sp, cos_theta)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self / self.length()
    }

    pub fn is_unit(self, tol: f64) -> bool {
        (self.length_squared() - 1.0).abs() <= tol
    }

    /// Mirror `self` (pointing away from the surface) about `n`.
    pub fn reflect(self, n: Vec3) -> Vec3 {
        n * (2.0 * self.dot(n)) - self
    }

    /// Polar angle from +z in `[0, pi]`.
    pub fn theta(self) -> f64 {
        self.z.clamp(-1.0, 1.0).acos()
    }

    /// Azimuth in `[0, 2pi)`.
    pub fn phi(self) -> f64 {
        let p = self.y.atan2(self.x);
        if p < 0.0 {
            p + 2.0 * PI
        } else {
            p
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Orthonormal basis whose third axis is a given unit vector.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub s: Vec3,
    pub t: Vec3,
    pub n: Vec3,
}

impl Frame {
    /// Branchless construction (Duff et al. 2017).
    pub fn from_normal(n: Vec3) -> Self {
        let sign = 1.0_f64.copysign(n.z);
        let a = -1.0 / (sign + n.z);
        let b = n.x * n.y * a;
        let s = Vec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
        let t = Vec3::new(b, sign + n.y * n.y * a, -n.y);
        Self { s, t, n }
    }

    pub fn to_local(&self, v: Vec3) -> Vec3 {
        Vec3::new(v.dot(self.s), v.dot(self.t), v.dot(self.n))
    }

    pub fn to_world(&self, v: Vec3) -> Vec3 {
        self.s * v.x + self.t * v.y + self.n * v.z
    }
}

/// Three-channel quantity (reflectance, extinction, albedo, ...).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rgb(pub [f64; 3]);

impl Rgb {
    pub const ZERO: Rgb = Rgb([0.0; 3]);
    pub const ONE: Rgb = Rgb([1.0; 3]);

    pub const fn splat(v: f64) -> Self {
        Rgb([v, v, v])
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Rgb {
        Rgb([f(self.0[0]), f(self.0[1]), f(self.0[2])])
    }

    pub fn zip(self, o: Rgb, f: impl Fn(f64, f64) -> f64) -> Rgb {
        Rgb([f(self.0[0], o.0[0]), f(self.0[1], o.0[1]), f(self.0[2], o.0[2])])
    }

    pub fn max_component(self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_component(self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(self) -> f64 {
        (self.0[0] + self.0[1] + self.0[2]) / 3.0
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn is_black(self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl Index<usize> for Rgb {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Rgb {
    type Output = Rgb;
    fn add(self, o: Rgb) -> Rgb {
        self.zip(o, |a, b| a + b)
    }
}

impl AddAssign for Rgb {
    fn add_assign(&mut self, o: Rgb) {
        *self = *self + o;
    }
}

impl Sub for Rgb {
    type Output = Rgb;
    fn sub(self, o: Rgb) -> Rgb {
        self.zip(o, |a, b| a - b)
    }
}

impl Mul for Rgb {
    type Output = Rgb;
    fn mul(self, o: Rgb) -> Rgb {
        self.zip(o, |a, b| a * b)
    }
}

impl MulAssign for Rgb {
    fn mul_assign(&mut self, o: Rgb) {
        *self = *self * o;
    }
}

impl Mul<f64> for Rgb {
    type Output = Rgb;
    fn mul(self, s: f64) -> Rgb {
        self.map(|a| a * s)
    }
}

impl MulAssign<f64> for Rgb {
    fn mul_assign(&mut self, s: f64) {
        *self = *self * s;
    }
}

impl Div for Rgb {
    type Output = Rgb;
    fn div(self, o: Rgb) -> Rgb {
        self.zip(o, |a, b| a / b)
    }
}

impl Div<f64> for Rgb {
    type Output = Rgb;
    fn div(self, s: f64) -> Rgb {
        self.map(|a| a / s)
    }
}

impl DivAssign<f64> for Rgb {
    fn div_assign(&mut self, s: f64) {
        *self = *self / s;
    }
}

/// Cosine-weighted hemisphere sample around +z.
pub fn sample_cosine_hemisphere(u1: f64, u2: f64) -> Vec3 {
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    Vec3::new(r * phi.cos(), r * phi.sin(), (1.0 - u1).max(0.0).sqrt())
}

/// Uniform sample on the unit sphere.
pub fn sample_uniform_sphere(u1: f64, u2: f64) -> Vec3 {
    Vec3::from_cos_theta(1.0 - 2.0 * u1, 2.0 * PI * u2)
}

/// Uniform sample on the unit disk (polar mapping).
pub fn sample_uniform_disk(u1: f64, u2: f64) -> (f64, f64) {
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    (r * phi.cos(), r * phi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal() {
        for &n in &[
            Vec3::Z,
            -Vec3::Z,
            Vec3::new(0.3, -0.4, 0.2).normalized(),
            Vec3::new(-0.9, 0.1, -0.05).normalized(),
        ] {
            let f = Frame::from_normal(n);
            assert!((f.s.dot(f.t)).abs() < 1e-12);
            assert!((f.s.dot(f.n)).abs() < 1e-12);
            assert!(f.s.is_unit(1e-12) && f.t.is_unit(1e-12));
            let v = Vec3::new(0.2, 0.5, -0.1);
            let back = f.to_world(f.to_local(v));
            assert!((back - v).length() < 1e-12);
        }
    }

    #[test]
    fn reflect_preserves_angle() {
        let wi = Vec3::from_spherical(0.7, 1.1);
        let r = wi.reflect(Vec3::Z);
        assert!((r.z - wi.z).abs() < 1e-15);
        assert!((r.x + wi.x).abs() < 1e-15);
    }

    #[test]
    fn spherical_round_trip() {
        let d = Vec3::from_spherical(1.2, 4.0);
        assert!((d.theta() - 1.2).abs() < 1e-12);
        assert!((d.phi() - 4.0).abs() < 1e-12);
    }
}
