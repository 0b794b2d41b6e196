//! Reaction-wheel array (tetrahedron installation, weighted minimum-norm
//! torque allocation, torque/momentum limits) and the orthogonal
//! magnetorquer array.

use serde::{Deserialize, Serialize};

use crate::math::{solve_square, Mat3, Vec3};
use crate::{Error, Result};

/// Reaction-wheel array specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WheelArraySpec {
    /// 3×4 installation matrix mapping wheel torques to body torque.
    pub w: [[f64; 4]; 3],
    /// Positive-definite allocation weight of the torque quadratic form.
    pub a: [[f64; 4]; 4],
    /// Per-wheel torque limit, N·m.
    pub m_max_nm: f64,
    /// Per-wheel angular-momentum limit, N·m·s.
    pub h_max_nms: f64,
}

impl Default for WheelArraySpec {
    /// Four wheels in the tetrahedron configuration, unit weight.
    fn default() -> Self {
        let s89 = (8.0f64 / 9.0).sqrt();
        let s29 = (2.0f64 / 9.0).sqrt();
        let s23 = (2.0f64 / 3.0).sqrt();
        WheelArraySpec {
            w: [
                [s89, -s29, -s29, 0.0],
                [0.0, s23, -s23, 0.0],
                [-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 1.0],
            ],
            a: identity4(),
            m_max_nm: 1e-3,
            h_max_nms: 1e-2,
        }
    }
}

fn identity4() -> [[f64; 4]; 4] {
    let mut a = [[0.0; 4]; 4];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    a
}

impl WheelArraySpec {
    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            for j in 0..4 {
                if (self.a[i][j] - self.a[j][i]).abs() > 1e-12 {
                    return Err(Error::Config("allocation weight A must be symmetric".into()));
                }
            }
        }
        cholesky4(&self.a).map_err(|_| {
            Error::Config("allocation weight A must be positive definite".into())
        })?;
        if self.m_max_nm <= 0.0 || self.h_max_nms <= 0.0 {
            return Err(Error::Config("wheel limits must be positive".into()));
        }
        // W·Wᵀ must be invertible for the array to span three axes
        self.w_wt().inverse().map_err(|_| {
            Error::Config("installation matrix W·Wᵀ is singular".into())
        })?;
        Ok(())
    }

    fn w_wt(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| self.w[i][k] * self.w[j][k]).sum();
            }
        }
        Mat3::new(m)
    }

    /// Body torque (or momentum) produced by per-wheel values: `W · v`.
    pub fn to_body(&self, wheel: [f64; 4]) -> Vec3 {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|k| self.w[i][k] * wheel[k]).sum();
        }
        Vec3::new(out[0], out[1], out[2])
    }
}

fn cholesky4(a: &[[f64; 4]; 4]) -> std::result::Result<(), ()> {
    let mut l = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return Err(());
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(())
}

/// Per-wheel momentum state.
#[derive(Debug, Clone, Copy, Default)]
pub struct WheelArrayState {
    /// Wheel angular momenta, N·m·s.
    pub h_wheel: [f64; 4],
}

impl WheelArrayState {
    pub fn h_body(&self, spec: &WheelArraySpec) -> Vec3 {
        spec.to_body(self.h_wheel)
    }
}

/// Weighted minimum-norm allocation: `τ = A⁻¹Wᵀ (W A⁻¹ Wᵀ)⁻¹ M_ctrl`,
/// the unique solution of `min τᵀAτ` subject to `W τ = M_ctrl`.
pub fn allocate_wheel_torques(m_ctrl: Vec3, spec: &WheelArraySpec) -> Result<[f64; 4]> {
    // X = A⁻¹ Wᵀ by solving A X = Wᵀ
    let mut a: Vec<Vec<f64>> = spec.a.iter().map(|r| r.to_vec()).collect();
    let mut x: Vec<Vec<f64>> = (0..4)
        .map(|k| (0..3).map(|i| spec.w[i][k]).collect())
        .collect();
    solve_square(&mut a, &mut x, "wheel allocation weight")?;

    // S = W X  (3×3), then y = S⁻¹ m_ctrl
    let mut s = [[0.0; 3]; 3];
    for (i, row) in s.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..4).map(|k| spec.w[i][k] * x[k][j]).sum();
        }
    }
    let y = Mat3::new(s)
        .inverse()
        .map_err(|_| Error::SingularMatrix("W A⁻¹ Wᵀ".into()))?
        * m_ctrl;

    let mut tau = [0.0; 4];
    for (k, t) in tau.iter_mut().enumerate() {
        *t = x[k][0] * y.x + x[k][1] * y.y + x[k][2] * y.z;
    }
    Ok(tau)
}

/// Clamp a torque command against the per-wheel torque limit and against
/// momentum saturation over the coming `dt`: torque first, then momentum
/// with torque truncation.
pub fn clamp_wheel_torques(
    state: &WheelArrayState,
    tau_cmd: [f64; 4],
    dt: f64,
    spec: &WheelArraySpec,
) -> [f64; 4] {
    let mut tau = [0.0; 4];
    for i in 0..4 {
        let t = tau_cmd[i].clamp(-spec.m_max_nm, spec.m_max_nm);
        let h_next = state.h_wheel[i] + t * dt;
        let h_clamped = h_next.clamp(-spec.h_max_nms, spec.h_max_nms);
        tau[i] = (h_clamped - state.h_wheel[i]) / dt;
    }
    tau
}

/// Advance the wheel array one step under a torque command.
///
/// Returns the new state and the reaction torque applied to the body,
/// `−W·τ_applied`.
pub fn apply_wheel_step(
    state: &WheelArrayState,
    tau_cmd: [f64; 4],
    dt: f64,
    spec: &WheelArraySpec,
) -> (WheelArrayState, Vec3) {
    let tau = clamp_wheel_torques(state, tau_cmd, dt, spec);
    let mut next = *state;
    for i in 0..4 {
        next.h_wheel[i] += tau[i] * dt;
    }
    (next, -spec.to_body(tau))
}

/// Orthogonal three-coil magnetorquer array.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MagnetorquerSpec {
    /// Unit coil axes, body frame, mutually orthogonal.
    pub axes: [Vec3; 3],
    pub n_turns: f64,
    pub coil_area_m2: f64,
    pub resistance_ohm: f64,
    pub v_max: f64,
}

impl Default for MagnetorquerSpec {
    fn default() -> Self {
        MagnetorquerSpec {
            axes: [
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            n_turns: 200.0,
            coil_area_m2: 0.0025,
            resistance_ohm: 25.0,
            v_max: 5.0,
        }
    }
}

impl MagnetorquerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resistance_ohm <= 0.0 {
            return Err(Error::Config("coil resistance must be positive".into()));
        }
        for i in 0..3 {
            if (self.axes[i].norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Config("magnetorquer axes must be unit".into()));
            }
            for j in (i + 1)..3 {
                if self.axes[i].dot(self.axes[j]).abs() > 1e-9 {
                    return Err(Error::Config("magnetorquer axes must be orthogonal".into()));
                }
            }
        }
        Ok(())
    }

    /// Maximum moment per axis from the available voltage:
    /// `m_max = (V_max / Res) · n · A_coil`, A·m².
    pub fn max_moment(&self) -> f64 {
        self.v_max / self.resistance_ohm * self.n_turns * self.coil_area_m2
    }
}

/// Torque from a magnetic moment in the environment field: `M = m × B`.
pub fn magnetorquer_torque(m_actual: Vec3, b_env: Vec3) -> Vec3 {
    m_actual.cross(b_env)
}
