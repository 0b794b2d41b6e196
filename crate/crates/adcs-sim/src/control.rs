//! Attitude control: PD law on the estimated state, B-dot magnetorquer
//! moment for wheel-momentum unloading, and the geometry-driven scheduler
//! that picks unloading windows.

use serde::{Deserialize, Serialize};

use crate::actuators::{
    allocate_wheel_torques, clamp_wheel_torques, MagnetorquerSpec, WheelArraySpec,
    WheelArrayState,
};
use crate::estimation::EkfState;
use crate::geomag::{field_in_orbital, DipoleParams, FieldModelKind, GaussCoefficients};
use crate::math::Vec3;
use crate::orbit::{propagate_circular, OrbitConfig};
use crate::quaternion::Quaternion;
use crate::vehicle::InertiaTensor;
use crate::{Error, Result};

/// PD gains and the commanded state.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ControlGains {
    /// Proportional gain, 1/s².
    pub k_q: f64,
    /// Derivative gain, 1/s.
    pub k_omega: f64,
    /// Required orbital→body attitude.
    pub q_req: Quaternion,
    /// Required body rate expressed in the orbital frame (the mean-motion
    /// spin that keeps the body tracking the orbital frame).
    pub omega_req_orbital: Vec3,
}

impl ControlGains {
    pub fn paper_defaults(mean_motion: f64) -> Self {
        ControlGains {
            k_q: 0.115,
            k_omega: 0.245,
            q_req: Quaternion::IDENTITY,
            omega_req_orbital: Vec3::new(0.0, mean_motion, 0.0),
        }
    }

    /// Required body rate resolved through an attitude estimate.
    pub fn omega_req_body(&self, q_o2b: Quaternion) -> Vec3 {
        q_o2b.transform(self.omega_req_orbital)
    }
}

/// Vector part of the error quaternion `q̃_req ⊗ q_est`, canonicalized to a
/// non-negative scalar part.
pub fn error_quaternion(q_est: Quaternion, q_req: Quaternion) -> Vec3 {
    (q_req.conjugate() * q_est).canonicalized().vector_part()
}

/// PD control torque `M = −M_ext − k_ω J ω_err − k_q J q_err`.
pub fn pd_control(
    q_err_v: Vec3,
    omega_err: Vec3,
    j: &InertiaTensor,
    gains: &ControlGains,
    m_ext: Vec3,
) -> Vec3 {
    -m_ext - *j.matrix() * omega_err * gains.k_omega - *j.matrix() * q_err_v * gains.k_q
}

/// B-dot unloading moment: `m_req = gain · (h × B_mtm)`, scaled down by the
/// largest component ratio when any coil would exceed `m_max`.
///
/// `gain` maps the tiny cross product onto the coil scale; sized so the
/// torquers saturate during a dump, it reproduces the full-authority
/// normalization while still obeying the per-coil bound, and tapers the
/// command smoothly once the residual momentum is nearly gone.
pub fn bdot_unloading_moment(h_body: Vec3, b_mtm: Vec3, m_max: f64, gain: f64) -> Vec3 {
    let m_req = h_body.cross(b_mtm) * gain;
    let ratio = m_req.max_abs() / m_max;
    m_req / ratio.max(1.0)
}

/// Scheduler output: permitted magnetorquer arcs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnloadingPlan {
    /// Non-overlapping, ordered (start, end) times, s.
    pub windows: Vec<(f64, f64)>,
    pub threshold_angle_rad: f64,
    /// Momentum magnitude below which the torquers stand down, N·m·s.
    pub h_target_nms: f64,
}

impl UnloadingPlan {
    pub fn contains(&self, t: f64) -> bool {
        self.windows.iter().any(|&(a, b)| t >= a && t < b)
    }

    /// Index of the window containing `t`.
    pub fn window_index(&self, t: f64) -> Option<usize> {
        self.windows.iter().position(|&(a, b)| t >= a && t < b)
    }
}

/// Scheduler settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub horizon_s: f64,
    /// Dipole mode: exclusion half-width around the geomagnetic poles and
    /// equator, rad.
    pub threshold_rad: f64,
    /// IGRF mode: minimum field magnitude for effective torquing, T.
    pub field_floor_t: f64,
    pub h_target_nms: f64,
    /// Scan resolution, s.
    pub scan_dt_s: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            horizon_s: 3000.0,
            threshold_rad: 20f64.to_radians(),
            field_floor_t: 1.5e-5,
            h_target_nms: 5e-6,
            scan_dt_s: 5.0,
        }
    }
}

/// Pick unloading windows over the horizon.
///
/// Dipole mode keeps the arcs away from both the geomagnetic poles and the
/// geomagnetic equator crossings of the orbit, where magnetic control
/// authority degenerates; IGRF mode permits one continuous window wherever
/// the field magnitude clears the floor.
pub fn plan_unloading_windows(
    orbit: &OrbitConfig,
    k_hat: Vec3,
    model: FieldModelKind,
    gc: Option<&GaussCoefficients>,
    dipole: &DipoleParams,
    planner: &PlannerConfig,
) -> Result<UnloadingPlan> {
    if planner.horizon_s <= 0.0 {
        return Err(Error::Config("planning horizon must be positive".into()));
    }
    let mut allowed = Vec::new();
    let steps = (planner.horizon_s / planner.scan_dt_s).ceil() as usize;
    for k in 0..=steps {
        let t = (k as f64 * planner.scan_dt_s).min(planner.horizon_s);
        let st = propagate_circular(orbit, t);
        let ok = match model {
            FieldModelKind::Dipole => {
                let alpha = st.r_eci.angle_to(k_hat);
                let thr = planner.threshold_rad;
                alpha >= thr
                    && alpha <= std::f64::consts::PI - thr
                    && (alpha - std::f64::consts::FRAC_PI_2).abs() >= thr
            }
            FieldModelKind::Igrf => {
                let b = field_in_orbital(model, &st, &orbit.epoch, gc, dipole)?;
                b.norm() >= planner.field_floor_t
            }
        };
        allowed.push((t, ok));
    }

    let mut windows: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for &(t, ok) in &allowed {
        match (ok, open) {
            (true, None) => open = Some(t),
            (false, Some(start)) => {
                windows.push((start, t));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        windows.push((start, planner.horizon_s));
    }
    if windows.is_empty() {
        return Err(Error::EmptyPlan(format!(
            "no unloading window within {:.0} s for the {model} model",
            planner.horizon_s
        )));
    }
    Ok(UnloadingPlan {
        windows,
        threshold_angle_rad: planner.threshold_rad,
        h_target_nms: planner.h_target_nms,
    })
}

/// Operating mode of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    /// Attitude stabilization only.
    Stabilize,
    /// Stabilization with scheduled wheel unloading.
    Unload,
}

impl std::str::FromStr for ControlMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "stabilize" => Ok(ControlMode::Stabilize),
            "unload" => Ok(ControlMode::Unload),
            other => Err(format!("unknown mode {other:?} (stabilize|unload)")),
        }
    }
}

/// What the controller commands for one control period.
#[derive(Debug, Clone, Copy)]
pub struct ControllerCommand {
    /// PD torque requested on the body, N·m.
    pub m_ctrl: Vec3,
    /// Torque command handed to each wheel, N·m.
    pub tau_cmd: [f64; 4],
    /// Per-wheel torque after limit handling, N·m.
    pub tau_applied: [f64; 4],
    /// Commanded magnetorquer moment, body frame, A·m².
    pub m_mtq: Vec3,
    /// Inside an unloading window (mode permitting).
    pub unloading_active: bool,
}

/// Compose one control period: PD torque on the estimate, wheel allocation
/// and clamping, and the B-dot moment when inside an active window with
/// momentum above the stand-down target.
#[allow(clippy::too_many_arguments)]
pub fn controller_step(
    mode: ControlMode,
    est: &EkfState,
    b_mtm: Vec3,
    wheels: &WheelArrayState,
    wheel_spec: &WheelArraySpec,
    mtq_spec: &MagnetorquerSpec,
    j: &InertiaTensor,
    gains: &ControlGains,
    plan: Option<&UnloadingPlan>,
    unload_gain: f64,
    t: f64,
    dt_control: f64,
) -> Result<ControllerCommand> {
    let q_err_v = error_quaternion(est.q, gains.q_req);
    let omega_err = est.omega - gains.omega_req_body(est.q);
    let m_ctrl = pd_control(q_err_v, omega_err, j, gains, Vec3::ZERO);

    // wheels deliver −W·τ to the body, so allocate the negated demand
    let tau_cmd = allocate_wheel_torques(-m_ctrl, wheel_spec)?;
    let tau_applied = clamp_wheel_torques(wheels, tau_cmd, dt_control, wheel_spec);

    let mut m_mtq = Vec3::ZERO;
    let mut unloading_active = false;
    if mode == ControlMode::Unload {
        if let Some(plan) = plan {
            if plan.contains(t) {
                unloading_active = true;
                let h_body = wheels.h_body(wheel_spec);
                if h_body.norm() > plan.h_target_nms {
                    let m_max = mtq_spec.max_moment();
                    // work in the torquer axis basis, then back to body axes
                    let h_basis = basis_components(h_body, mtq_spec);
                    let b_basis = basis_components(b_mtm, mtq_spec);
                    let m_basis = bdot_unloading_moment(h_basis, b_basis, m_max, unload_gain);
                    m_mtq = mtq_spec.axes[0] * m_basis.x
                        + mtq_spec.axes[1] * m_basis.y
                        + mtq_spec.axes[2] * m_basis.z;
                }
            }
        }
    }

    Ok(ControllerCommand { m_ctrl, tau_cmd, tau_applied, m_mtq, unloading_active })
}

fn basis_components(v: Vec3, spec: &MagnetorquerSpec) -> Vec3 {
    Vec3::new(
        v.dot(spec.axes[0]),
        v.dot(spec.axes[1]),
        v.dot(spec.axes[2]),
    )
}
