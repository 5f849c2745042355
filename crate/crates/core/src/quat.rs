//! Quaternions and dual quaternions (scalar-first Hamilton convention).

use nalgebra::{Matrix3, Vector3};

/// Quaternion `w + xi + yj + zk`, scalar first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const ZERO: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion { w, x, y, z }
    }

    /// Pure quaternion `(0, v)`.
    pub fn from_vector(v: Vector3<f64>) -> Quaternion {
        Quaternion { w: 0.0, x: v.x, y: v.y, z: v.z }
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Hamilton product `self ⊗ rhs`.
    pub fn mul(&self, rhs: &Quaternion) -> Quaternion {
        Quaternion {
            w: self.w * rhs.w - self.x * rhs.x - self.y * rhs.y - self.z * rhs.z,
            x: self.w * rhs.x + self.x * rhs.w + self.y * rhs.z - self.z * rhs.y,
            y: self.w * rhs.y - self.x * rhs.z + self.y * rhs.w + self.z * rhs.x,
            z: self.w * rhs.z + self.x * rhs.y - self.y * rhs.x + self.z * rhs.w,
        }
    }

    pub fn conjugate(&self) -> Quaternion {
        Quaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn dot(&self, rhs: &Quaternion) -> f64 {
        self.w * rhs.w + self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Quaternion {
        Quaternion { w: self.w * s, x: self.x * s, y: self.y * s, z: self.z * s }
    }

    pub fn add(&self, rhs: &Quaternion) -> Quaternion {
        Quaternion { w: self.w + rhs.w, x: self.x + rhs.x, y: self.y + rhs.y, z: self.z + rhs.z }
    }

    pub fn sub(&self, rhs: &Quaternion) -> Quaternion {
        Quaternion { w: self.w - rhs.w, x: self.x - rhs.x, y: self.y - rhs.y, z: self.z - rhs.z }
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Rotation matrix of a unit quaternion.
    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }
}

impl std::ops::Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        Quaternion::mul(&self, &rhs)
    }
}

/// Hamilton product of two quaternions.
pub fn quat_mul(a: &Quaternion, b: &Quaternion) -> Quaternion {
    a.mul(b)
}

/// Rigid motion as a dual quaternion `q_r + ε q_d`.
///
/// For a valid rigid motion the real part is unit and the Plücker
/// condition `dot(q_r, q_d) = 0` holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQuaternion {
    pub real: Quaternion,
    pub dual: Quaternion,
}

impl DualQuaternion {
    pub const IDENTITY: DualQuaternion = DualQuaternion { real: Quaternion::IDENTITY, dual: Quaternion::ZERO };

    pub fn new(real: Quaternion, dual: Quaternion) -> DualQuaternion {
        DualQuaternion { real, dual }
    }

    /// Residual of the Plücker condition; zero for rigid motions.
    pub fn plucker_residual(&self) -> f64 {
        self.real.dot(&self.dual)
    }

    /// True when the real part is unit and the Plücker condition holds
    /// within `tol`.
    pub fn is_rigid(&self, tol: f64) -> bool {
        (self.real.norm() - 1.0).abs() <= tol && self.plucker_residual().abs() <= tol
    }

    /// Applies the encoded rigid motion to a point.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let rotated = self.real.to_rotation_matrix() * p;
        // t = vector part of 2 q_d ⊗ conj(q_r)
        let t = self.dual.scaled(2.0).mul(&self.real.conjugate()).vector();
        rotated + t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identity_is_left_neutral() {
        let q = Quaternion::new(0.3, -0.2, 0.8, 0.1);
        assert_eq!(Quaternion::IDENTITY * q, q);
    }

    #[test]
    fn k_squared_is_minus_one() {
        let k = Quaternion::new(0.0, 0.0, 0.0, 1.0);
        assert_eq!(k * k, Quaternion::new(-1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn i_times_j_is_k() {
        let i = Quaternion::new(0.0, 1.0, 0.0, 0.0);
        let j = Quaternion::new(0.0, 0.0, 1.0, 0.0);
        assert_eq!(i * j, Quaternion::new(0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn rotation_matrix_matches_axis_angle() {
        // 90 degrees about z maps x to y.
        let h = std::f64::consts::FRAC_PI_4;
        let q = Quaternion::new(h.cos(), 0.0, 0.0, h.sin());
        let r = q.to_rotation_matrix();
        let v = r * Vector3::x();
        assert_relative_eq!((v - Vector3::y()).norm(), 0.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn unit_quaternion_products_stay_unit(
            a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64, d in -1.0..1.0f64,
            e in -1.0..1.0f64, f in -1.0..1.0f64, g in -1.0..1.0f64, h in -1.0..1.0f64
        ) {
            let q1 = Quaternion::new(a + 2.0, b, c, d); // w offset avoids the zero quaternion
            let q2 = Quaternion::new(e + 2.0, f, g, h);
            let (n1, n2) = (q1.norm(), q2.norm());
            let u1 = q1.scaled(1.0 / n1);
            let u2 = q2.scaled(1.0 / n2);
            prop_assert!(((u1 * u2).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn product_norm_is_multiplicative(
            a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64,
            e in -2.0..2.0f64, f in -2.0..2.0f64, g in -2.0..2.0f64, h in -2.0..2.0f64
        ) {
            let q1 = Quaternion::new(a, b, c, d);
            let q2 = Quaternion::new(e, f, g, h);
            prop_assert!(((q1 * q2).norm() - q1.norm() * q2.norm()).abs() < 1e-9);
        }
    }
}
