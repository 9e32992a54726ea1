//! 3-vectors and periodic-geometry helpers.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// A 3-vector. Depending on context the components are a position (nm),
/// a force (kJ·mol⁻¹·nm⁻¹) or a velocity (nm·ps⁻¹).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Displacement `b - a`, wrapped component-wise into `(-L/2, L/2]` when a
/// box length is given (minimum image convention); plain subtraction
/// otherwise.
pub fn min_image_displacement(a: Vec3, b: Vec3, box_length: Option<f64>) -> Vec3 {
    let d = b - a;
    match box_length {
        None => d,
        Some(l) => Vec3::new(wrap_half(d.x, l), wrap_half(d.y, l), wrap_half(d.z, l)),
    }
}

/// Wrap a scalar into (-L/2, L/2].
fn wrap_half(x: f64, l: f64) -> f64 {
    let mut w = x - l * (x / l).round();
    // round() maps exactly -L/2 to itself; fold onto the +L/2 edge
    if w <= -0.5 * l {
        w += l;
    }
    w
}

/// Wrap a position component into [0, L).
pub fn wrap_into_box(x: f64, l: f64) -> f64 {
    let w = x - l * (x / l).floor();
    if w >= l {
        w - l
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_image_wraps_across_box() {
        let d = min_image_displacement(Vec3::ZERO, Vec3::new(6.0, 0.0, 0.0), Some(6.5));
        assert!((d.x - (-0.5)).abs() < 1e-12);
        assert_eq!(d.y, 0.0);
        assert_eq!(d.z, 0.0);
    }

    #[test]
    fn min_image_identity() {
        let a = Vec3::new(1.2, 3.4, 5.6);
        let d = min_image_displacement(a, a, Some(2.0));
        assert_eq!(d, Vec3::ZERO);
        let d = min_image_displacement(a, a, None);
        assert_eq!(d, Vec3::ZERO);
    }

    #[test]
    fn non_periodic_is_plain_subtraction() {
        let d = min_image_displacement(Vec3::new(1.0, 1.0, 1.0), Vec3::new(2.0, 3.0, 4.0), None);
        assert_eq!(d, Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn wrapped_never_longer_than_raw() {
        let a = Vec3::new(0.1, 0.2, 0.3);
        for i in 0..100 {
            let t = i as f64 * 0.37;
            let b = Vec3::new(t, -t * 0.5, t * 1.3);
            let raw = b - a;
            let wrapped = min_image_displacement(a, b, Some(3.0));
            assert!(wrapped.norm() <= raw.norm() + 1e-12);
            for c in [wrapped.x, wrapped.y, wrapped.z] {
                assert!(c > -1.5 && c <= 1.5, "component {c} out of (-L/2, L/2]");
            }
        }
    }
}
