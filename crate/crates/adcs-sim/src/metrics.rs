//! Run metrics: settling detection, post-settle RMSE, the mean-motion
//! signature, and per-window unloading bookkeeping.
//!
//! Attitude errors are truth-versus-commanded; rate errors are the regulated
//! estimate-versus-commanded signal the controller actually drives.

use serde::{Deserialize, Serialize};

use crate::math::Vec3;
use crate::sim::TelemetryRecord;
use crate::{Error, Result};

/// Pointing threshold that defines "settled", deg.
pub const SETTLE_THRESHOLD_DEG: f64 = 1.0;
/// How long the pointing error must stay under the threshold, s.
pub const SETTLE_HOLD_S: f64 = 60.0;

/// Momentum change across one unloading window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnloadingEvent {
    pub t_start_s: f64,
    pub t_end_s: f64,
    /// Body-axis wheel momentum entering the window, N·m·s.
    pub h_before_nms: Vec3,
    /// Body-axis wheel momentum after the window, N·m·s.
    pub h_after_nms: Vec3,
    /// Per-axis reduction of |h|, percent (negative when an axis grew).
    pub percent_reduction: Vec3,
}

/// Aggregated results of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// Per-axis RMSE of the truth Euler errors over the report window, deg.
    pub rmse_euler_deg: Vec3,
    /// Per-axis RMSE of the regulated rate error over the window, deg/s.
    pub rmse_rates_deg_s: Vec3,
    /// First time the pointing error stays under 1° for 60 s.
    pub settle_time_s: Option<f64>,
    /// Window the RMSE was computed over.
    pub window_s: (f64, f64),
    /// Largest pointing error inside the report window, deg.
    pub max_pointing_in_window_deg: f64,
    /// Mean body-rate y component over the window, deg/s.
    pub mean_omega_y_deg_s: f64,
    pub unloading_events: Vec<UnloadingEvent>,
    /// Largest commanded magnetorquer moment component of the run, A·m².
    pub max_mtq_component_am2: f64,
    /// EKF covariance health failures observed during the run.
    pub ekf_psd_violations: u64,
}

/// First time after which the regulated pointing error (estimate versus
/// required) stays below the threshold for the full hold interval.
pub fn settle_time(records: &[TelemetryRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let mut hold_start: Option<f64> = None;
    for r in records {
        if r.pointing_est_deg < SETTLE_THRESHOLD_DEG {
            let start = *hold_start.get_or_insert(r.t);
            if r.t - start >= SETTLE_HOLD_S {
                return Some(start);
            }
        } else {
            hold_start = None;
        }
    }
    None
}

/// Per-axis RMSE of Euler and rate errors over `[t0, t1]`.
pub fn compute_rmse(records: &[TelemetryRecord], window: (f64, f64)) -> Result<(Vec3, Vec3)> {
    let (t0, t1) = window;
    let mut n = 0usize;
    let mut eul = Vec3::ZERO;
    let mut rate = Vec3::ZERO;
    for r in records.iter().filter(|r| r.t >= t0 && r.t <= t1) {
        let e = r.euler_err_deg;
        let w = r.rate_err_deg_s;
        eul += Vec3::new(e.x * e.x, e.y * e.y, e.z * e.z);
        rate += Vec3::new(w.x * w.x, w.y * w.y, w.z * w.z);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Telemetry(format!("empty RMSE window [{t0}, {t1}]")));
    }
    let inv = 1.0 / n as f64;
    Ok((
        Vec3::new((eul.x * inv).sqrt(), (eul.y * inv).sqrt(), (eul.z * inv).sqrt()),
        Vec3::new((rate.x * inv).sqrt(), (rate.y * inv).sqrt(), (rate.z * inv).sqrt()),
    ))
}

/// Window-by-window momentum bookkeeping from the telemetry flags.
pub fn compute_unloading_report(records: &[TelemetryRecord]) -> Vec<UnloadingEvent> {
    let mut events = Vec::new();
    let mut open: Option<(f64, Vec3)> = None;
    let mut last_in_window: Option<(f64, Vec3)> = None;
    for r in records {
        if r.unloading_active {
            if open.is_none() {
                open = Some((r.t, r.h_body_nms));
            }
            last_in_window = Some((r.t, r.h_body_nms));
        } else if let Some((t_start, h_before)) = open.take() {
            // first record after the window carries the post-window momentum
            let (t_end, h_after) = (r.t, r.h_body_nms);
            events.push(make_event(t_start, t_end, h_before, h_after));
            last_in_window = None;
        }
    }
    if let (Some((t_start, h_before)), Some((t_end, h_after))) = (open, last_in_window) {
        events.push(make_event(t_start, t_end, h_before, h_after));
    }
    events
}

fn make_event(t_start: f64, t_end: f64, h_before: Vec3, h_after: Vec3) -> UnloadingEvent {
    let pct = |before: f64, after: f64| {
        if before.abs() < 1e-300 {
            if after.abs() < 1e-300 {
                100.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            (1.0 - after.abs() / before.abs()) * 100.0
        }
    };
    UnloadingEvent {
        t_start_s: t_start,
        t_end_s: t_end,
        h_before_nms: h_before,
        h_after_nms: h_after,
        percent_reduction: Vec3::new(
            pct(h_before.x, h_after.x),
            pct(h_before.y, h_after.y),
            pct(h_before.z, h_after.z),
        ),
    }
}

/// Build the full report from telemetry. `window` overrides the default
/// `[settle_time, end]` RMSE window.
pub fn compute_report(
    records: &[TelemetryRecord],
    window: Option<(f64, f64)>,
    ekf_psd_violations: u64,
) -> Result<RunReport> {
    if records.is_empty() {
        return Ok(RunReport {
            rmse_euler_deg: Vec3::ZERO,
            rmse_rates_deg_s: Vec3::ZERO,
            settle_time_s: None,
            window_s: (0.0, 0.0),
            max_pointing_in_window_deg: 0.0,
            mean_omega_y_deg_s: 0.0,
            unloading_events: Vec::new(),
            max_mtq_component_am2: 0.0,
            ekf_psd_violations,
        });
    }
    let t_end = records.last().unwrap().t;
    let settle = settle_time(records);
    let window = window.unwrap_or_else(|| (settle.unwrap_or(0.0), t_end));
    let (rmse_euler_deg, rmse_rates_deg_s) = compute_rmse(records, window)?;

    let in_window: Vec<&TelemetryRecord> = records
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .collect();
    let max_pointing = in_window
        .iter()
        .map(|r| r.pointing_err_deg)
        .fold(0.0f64, f64::max);
    let mean_wy = in_window.iter().map(|r| r.omega_true_deg_s.y).sum::<f64>()
        / in_window.len() as f64;
    let max_mtq = records.iter().map(|r| r.m_mtq_am2.max_abs()).fold(0.0f64, f64::max);

    Ok(RunReport {
        rmse_euler_deg,
        rmse_rates_deg_s,
        settle_time_s: settle,
        window_s: window,
        max_pointing_in_window_deg: max_pointing,
        mean_omega_y_deg_s: mean_wy,
        unloading_events: compute_unloading_report(records),
        max_mtq_component_am2: max_mtq,
        ekf_psd_violations,
    })
}
