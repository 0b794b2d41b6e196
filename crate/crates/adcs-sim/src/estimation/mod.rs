//! Attitude estimation: TRIAD initialization and the extended Kalman filter
//! with a reduced 6-dimensional error state (quaternion vector part ⊕ body
//! rate) over a full 7-state nonlinear prediction.

pub mod ekf;
pub mod triad;

pub use ekf::{
    covariance_psd_ok, ekf_correct, ekf_predict, ekf_step, EkfConfig, EkfState,
    ObservationBundle, ReferenceVectors,
};
pub use triad::triad_attitude;

use std::ops::{Add, Mul};

/// Dense 6×6 matrix for the reduced-state covariance algebra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat6(pub [[f64; 6]; 6]);

impl Mat6 {
    pub const ZERO: Mat6 = Mat6([[0.0; 6]; 6]);

    pub fn identity() -> Mat6 {
        let mut m = [[0.0; 6]; 6];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Mat6(m)
    }

    pub fn diagonal(d: [f64; 6]) -> Mat6 {
        let mut m = [[0.0; 6]; 6];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = d[i];
        }
        Mat6(m)
    }

    pub fn transpose(&self) -> Mat6 {
        let mut out = [[0.0; 6]; 6];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[j][i];
            }
        }
        Mat6(out)
    }

    pub fn symmetrized(&self) -> Mat6 {
        let mut out = [[0.0; 6]; 6];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = 0.5 * (self.0[i][j] + self.0[j][i]);
            }
        }
        Mat6(out)
    }

    pub fn trace(&self) -> f64 {
        (0..6).map(|i| self.0[i][i]).sum()
    }

    pub fn mul_vec(&self, v: [f64; 6]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..6).map(|k| self.0[i][k] * v[k]).sum();
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Mat6) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                d = d.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        d
    }
}

impl Mul for Mat6 {
    type Output = Mat6;
    fn mul(self, o: Mat6) -> Mat6 {
        let mut out = [[0.0; 6]; 6];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..6).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat6(out)
    }
}

impl Add for Mat6 {
    type Output = Mat6;
    fn add(self, o: Mat6) -> Mat6 {
        let mut out = self.0;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += o.0[i][j];
            }
        }
        Mat6(out)
    }
}

impl Mul<f64> for Mat6 {
    type Output = Mat6;
    fn mul(self, s: f64) -> Mat6 {
        let mut out = self.0;
        for row in &mut out {
            for v in row {
                *v *= s;
            }
        }
        Mat6(out)
    }
}
