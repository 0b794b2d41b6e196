//! Unit quaternions for attitude, Hamilton convention, scalar first.
//!
//! `rotate` is the active rotation `q ⊗ (0,v) ⊗ q̃`. A frame quaternion
//! `q_a2b` (the rotation carrying frame *a* onto frame *b*) maps coordinates
//! with the conjugate sandwich, so [`Quaternion::transform`] computes
//! `v_b = q̃ ⊗ (0, v_a) ⊗ q`. Frame chains compose left to right:
//! `q_a2c = q_a2b ⊗ q_b2c`. With these choices the kinematics of `q_a2b`
//! are `q̇ = ½ q ⊗ (0, ω)` with ω the rate of *b* relative to *a* expressed
//! in *b* axes.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::math::{Mat3, Vec3};
use crate::{Error, Result};

/// Unit quaternion `(w, x, y, z)` with `w` the scalar part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Rotation of `angle` radians about a unit `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self { w: c, x: axis.x * s, y: axis.y * s, z: axis.z * s }
    }

    pub fn vector_part(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Quaternion {
        let n = self.norm();
        Quaternion::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(self) -> Quaternion {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Same rotation with non-negative scalar part.
    pub fn canonicalized(self) -> Quaternion {
        if self.w < 0.0 {
            Quaternion::new(-self.w, -self.x, -self.y, -self.z)
        } else {
            self
        }
    }

    pub fn dot(self, o: Quaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Active rotation: vector part of `q ⊗ (0, v) ⊗ q̃`.
    pub fn rotate(self, v: Vec3) -> Vec3 {
        // expanded sandwich product, ~30% cheaper than two Hamilton products
        let qv = self.vector_part();
        let t = qv.cross(v) * 2.0;
        v + t * self.w + qv.cross(t)
    }

    /// Frame transformation for `q_a2b`: coordinates of `v` move from frame
    /// *a* into frame *b* via `q̃ ⊗ (0, v) ⊗ q`.
    pub fn transform(self, v: Vec3) -> Vec3 {
        self.conjugate().rotate(v)
    }

    /// Kinematics right-hand side `½ q ⊗ (0, ω)`; the result is a rate, not
    /// a unit quaternion.
    pub fn derivative(self, omega: Vec3) -> Quaternion {
        let q = self;
        Quaternion::new(
            0.5 * (-q.x * omega.x - q.y * omega.y - q.z * omega.z),
            0.5 * (q.w * omega.x + q.y * omega.z - q.z * omega.y),
            0.5 * (q.w * omega.y - q.x * omega.z + q.z * omega.x),
            0.5 * (q.w * omega.z + q.x * omega.y - q.y * omega.x),
        )
    }

    /// Rotation matrix `R` with `R v == q.rotate(v)`.
    pub fn to_dcm(self) -> Mat3 {
        let Quaternion { w, x, y, z } = self;
        Mat3::new([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }

    /// Quaternion of a rotation matrix (Shepperd's method, stable for all
    /// angles). Inverse of [`Quaternion::to_dcm`], up to overall sign.
    pub fn from_dcm(m: &Mat3) -> Quaternion {
        let m = &m.m;
        let trace = m[0][0] + m[1][1] + m[2][2];
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            Quaternion::new(
                0.25 * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            Quaternion::new(
                (m[2][1] - m[1][2]) / s,
                0.25 * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            Quaternion::new(
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                0.25 * s,
                (m[1][2] + m[2][1]) / s,
            )
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            Quaternion::new(
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                0.25 * s,
            )
        };
        q.normalized()
    }

    /// Rebuild a unit quaternion from its vector part using the unit-norm
    /// constraint `q0 = sqrt(1 − |qv|²)`.
    ///
    /// A vector part slightly over unit norm (≤ 1 + 1e-6) is accepted and
    /// renormalized; anything larger signals estimator divergence.
    pub fn from_vector_part(qv: Vec3) -> Result<Quaternion> {
        let n = qv.norm();
        if n > 1.0 + 1e-6 {
            return Err(Error::EstimatorDivergence {
                t: f64::NAN,
                msg: format!("quaternion vector part norm {n:.6e} exceeds 1"),
            });
        }
        let w = (1.0 - n * n).max(0.0).sqrt();
        Ok(Quaternion::new(w, qv.x, qv.y, qv.z).normalized())
    }

    /// Total rotation angle in radians, in [0, π].
    pub fn rotation_angle(self) -> f64 {
        2.0 * self.normalized().w.abs().clamp(0.0, 1.0).acos()
    }

    /// ZYX (yaw-pitch-roll) Euler angles `(roll, pitch, yaw)` in radians.
    ///
    /// For small rotations these approximate the rotation components about
    /// the x, y and z axes.
    pub fn to_euler_zyx(self) -> (f64, f64, f64) {
        let q = self.normalized();
        let sinr_cosp = 2.0 * (q.w * q.x + q.y * q.z);
        let cosr_cosp = 1.0 - 2.0 * (q.x * q.x + q.y * q.y);
        let roll = sinr_cosp.atan2(cosr_cosp);

        let sinp = 2.0 * (q.w * q.y - q.z * q.x);
        let pitch = if sinp.abs() >= 1.0 {
            (std::f64::consts::FRAC_PI_2).copysign(sinp)
        } else {
            sinp.asin()
        };

        let siny_cosp = 2.0 * (q.w * q.z + q.x * q.y);
        let cosy_cosp = 1.0 - 2.0 * (q.y * q.y + q.z * q.z);
        let yaw = siny_cosp.atan2(cosy_cosp);
        (roll, pitch, yaw)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }
}

impl From<[f64; 4]> for Quaternion {
    fn from(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        q.to_array()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    /// Hamilton product.
    fn mul(self, o: Quaternion) -> Quaternion {
        let (a, b) = (self, o);
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}
