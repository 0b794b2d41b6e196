//! Deterministic scenario execution: truth propagation at the fine step,
//! sensing/estimation/control at the control period, telemetry capture and
//! CSV round-tripping.
//!
//! Every noise source draws from its own counter-based RNG stream
//! (environment, magnetometer, sun, disturbance), so swapping the field
//! model under a fixed seed leaves the noise history unchanged.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::actuators::{allocate_wheel_torques, magnetorquer_torque, WheelArrayState};
use crate::control::{
    controller_step, plan_unloading_windows, ControlGains, ControlMode, ControllerCommand,
    UnloadingPlan,
};
use crate::estimation::{
    covariance_psd_ok, ekf_step, triad_attitude, EkfConfig, EkfState, ReferenceVectors,
};
use crate::geomag::field_in_orbital;
use crate::math::Vec3;
use crate::metrics::{compute_report, RunReport};
use crate::orbit::{orbital_frame_quaternion, propagate_circular};
use crate::quaternion::Quaternion;
use crate::scenario::ScenarioConfig;
use crate::sensors::{measure_magnetic_field, measure_sun};
use crate::sun::{eclipse_state, sun_direction_eci};
use crate::vehicle::{disturbance_torque, step_truth, RigidBodyState};
use crate::{Error, Result};

/// One telemetry row per control step.
#[derive(Debug, Clone, Copy)]
pub struct TelemetryRecord {
    pub t: f64,
    pub q_true: Quaternion,
    pub q_est: Quaternion,
    pub omega_true_deg_s: Vec3,
    pub omega_est_deg_s: Vec3,
    /// ZYX Euler angles of the truth error relative to the required
    /// attitude (roll, pitch, yaw), deg.
    pub euler_err_deg: Vec3,
    /// Total rotation angle between truth and required attitude, deg.
    pub pointing_err_deg: f64,
    /// Total rotation angle between the estimate and the required attitude
    /// (the error the loop regulates), deg.
    pub pointing_est_deg: f64,
    /// Regulated rate error: estimate minus commanded rate, deg/s.
    pub rate_err_deg_s: Vec3,
    /// Model field at the true attitude (before noise), body frame, T.
    pub b_body_t: Vec3,
    pub h_wheel_nms: [f64; 4],
    pub h_body_nms: Vec3,
    pub m_mtq_am2: Vec3,
    /// Realized wheel reaction torque on the body, N·m.
    pub m_ctrl_nm: Vec3,
    pub m_dist_nm: Vec3,
    pub m_unload_nm: Vec3,
    pub sunlit: bool,
    pub sun_valid: bool,
    pub unloading_active: bool,
}

/// Execute a scenario, invoking `on_record` for every telemetry row as it
/// is produced.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    mut on_record: impl FnMut(&TelemetryRecord),
) -> Result<RunReport> {
    cfg.validate()?;
    let gc = cfg.load_coefficients()?;
    let j = cfg.inertia;
    let n = cfg.orbit.mean_motion();
    let gains = ControlGains {
        k_q: cfg.k_q,
        k_omega: cfg.k_omega,
        q_req: cfg.q_req,
        omega_req_orbital: Vec3::new(0.0, n, 0.0),
    };
    let ekf_cfg = EkfConfig {
        sigma_dist_nm: cfg.ekf_sigma_dist_nm,
        sigma_mtm_t: cfg.magnetometer.total_sigma() * cfg.ekf_sigma_mtm_scale,
        sigma_ss_rad: cfg.ekf_sigma_ss_rad.unwrap_or(cfg.sun_sensors.sigma_ss_rad),
        k_q: cfg.k_q,
        k_omega: cfg.k_omega,
        dt: cfg.dt_control_s,
        dt_substep: cfg.dt_truth_s,
        use_closed_loop_gains: false,
    };

    let plan: Option<UnloadingPlan> = if cfg.mode == ControlMode::Unload {
        let mut planner = cfg.unloading;
        planner.horizon_s = cfg.duration_s;
        Some(plan_unloading_windows(
            &cfg.orbit,
            cfg.dipole.k_hat,
            cfg.field_model,
            gc.as_ref(),
            &cfg.dipole,
            &planner,
        )?)
    } else {
        None
    };

    // independent per-source RNG streams under one seed
    let mut rng_env = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut rng_mtm = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut rng_sun = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut rng_dist = ChaCha12Rng::seed_from_u64(cfg.seed);
    rng_env.set_stream(0);
    rng_mtm.set_stream(1);
    rng_sun.set_stream(2);
    rng_dist.set_stream(3);

    let mut truth = RigidBodyState {
        q_o2b: cfg.initial_attitude.normalized(),
        omega: cfg.initial_rate_deg_s * std::f64::consts::PI / 180.0,
        t: 0.0,
    };
    let mut wheels = WheelArrayState {
        h_wheel: allocate_wheel_torques(cfg.initial_wheel_momentum_nms, &cfg.wheels)?,
    };
    let mut est: Option<EkfState> = None;
    let mut held: Option<HeldCommands> = None;
    let mut psd_violations = 0u64;
    let mut records: Vec<TelemetryRecord> = Vec::new();
    // lost-in-space fallback: persistent large residuals force TRIAD
    // re-acquisition with the loop held open
    let mut bad_residual_steps = 0usize;
    let mut control_open_until = cfg.control_warmup_s;

    let steps = (cfg.duration_s / cfg.dt_control_s).round() as usize;
    for k in 0..steps {
        let t = k as f64 * cfg.dt_control_s;

        // environment at this instant
        let orbit_state = propagate_circular(&cfg.orbit, t);
        let q_i2o = orbital_frame_quaternion(&orbit_state)?;
        let sun_eci = sun_direction_eci(&cfg.orbit.epoch, t)?;
        let sunlit = eclipse_state(orbit_state.r_eci, sun_eci);
        let sun_orb = q_i2o.transform(sun_eci);
        let b_orb =
            field_in_orbital(cfg.field_model, &orbit_state, &cfg.orbit.epoch, gc.as_ref(), &cfg.dipole)?;
        let b_mag = b_orb.norm();
        let refs = ReferenceVectors {
            b_orb_unit: b_orb.normalized().ok_or_else(|| Error::NonFinite {
                what: "zero model field".into(),
                t,
            })?,
            b_magnitude_t: b_mag,
            sun_orb_unit: sun_orb,
        };

        // sensing at the true attitude
        let b_body_true = truth.q_o2b.transform(b_orb);
        let (b_env, b_mtm) =
            measure_magnetic_field(b_body_true, &cfg.magnetometer, &mut rng_env, &mut rng_mtm);
        let sun_body_true = truth.q_o2b.transform(sun_orb);
        let (sun_valid, r_ss, active_head) =
            measure_sun(sun_body_true, sunlit, &cfg.sun_sensors, &mut rng_sun);
        let readout = crate::sensors::SensorReadout {
            b_env,
            b_mtm,
            sun_valid,
            r_ss,
            active_sensor: active_head,
        };

        // estimation: two TRIAD fixes bootstrap attitude and rate, then the
        // filter predicts and corrects every period
        let h_body_now = wheels.h_body(&cfg.wheels);
        // the Sun head is the precise sensor, so it anchors the triad
        let triad_fix = || {
            let b_meas = b_mtm.normalized()?;
            if !sun_valid {
                return None;
            }
            triad_attitude(r_ss, b_meas, refs.sun_orb_unit, refs.b_orb_unit).ok()
        };
        let new_est = match est {
            None => match triad_fix() {
                Some(q0) => {
                    // TRIAD attitude, zero rates; the filter learns the rate
                    // through the warm-up before the loop closes
                    Some(EkfState::new(q0, Vec3::ZERO, cfg.ekf_sigma_q0, cfg.ekf_sigma_w0, t))
                }
                None if k >= 2 => {
                    // no usable Sun early on: start mag-only from identity
                    Some(EkfState::new(
                        Quaternion::IDENTITY,
                        Vec3::ZERO,
                        cfg.ekf_sigma_q0,
                        cfg.ekf_sigma_w0,
                        t,
                    ))
                }
                None => None,
            },
            Some(prev) => {
                let held = held.as_ref().expect("commands held since the previous step");
                Some(ekf_step(
                    &prev,
                    &readout,
                    &refs,
                    &ekf_cfg,
                    &j,
                    held.h_body_at_start,
                    held.h_dot_body,
                    held.m_unload_feedforward,
                    n,
                )?)
            }
        };
        if let Some(e) = &new_est {
            if !covariance_psd_ok(&e.p, 1e-12) {
                psd_violations += 1;
            }
        }
        est = new_est;

        // the additive filter is only locally convergent: if both vector
        // residuals stay large the estimate has left its basin, so fall
        // back to a fresh TRIAD acquisition
        if let Some(e) = &est {
            let mag_resid = b_mtm
                .normalized()
                .map(|m| (m - e.q.transform(refs.b_orb_unit)).norm())
                .unwrap_or(0.0);
            let sun_resid = if sun_valid {
                (r_ss - e.q.transform(refs.sun_orb_unit)).norm()
            } else {
                0.0
            };
            if mag_resid > 0.8 && (!sun_valid || sun_resid > 0.8) {
                bad_residual_steps += 1;
            } else {
                bad_residual_steps = 0;
            }
            if bad_residual_steps >= 5 && sun_valid {
                est = None;
                bad_residual_steps = 0;
                control_open_until = t + cfg.control_warmup_s;
            }
        }

        // control decisions for the coming interval; the loop stays open
        // (zero commands) until the estimator is initialized and warmed up
        let cmd: ControllerCommand = match &est {
            Some(_) if t < control_open_until => ControllerCommand {
                m_ctrl: Vec3::ZERO,
                tau_cmd: [0.0; 4],
                tau_applied: [0.0; 4],
                m_mtq: Vec3::ZERO,
                unloading_active: false,
            },
            Some(est_now) => controller_step(
                cfg.mode,
                est_now,
                b_mtm,
                &wheels,
                &cfg.wheels,
                &cfg.magnetorquers,
                &j,
                &gains,
                plan.as_ref(),
                cfg.unload_gain,
                t,
                cfg.dt_control_s,
            )?,
            None => ControllerCommand {
                m_ctrl: Vec3::ZERO,
                tau_cmd: [0.0; 4],
                tau_applied: [0.0; 4],
                m_mtq: Vec3::ZERO,
                unloading_active: false,
            },
        };
        let h_dot_body = cfg.wheels.to_body(cmd.tau_applied);
        let m_unload = magnetorquer_torque(cmd.m_mtq, b_env);
        let m_dist = disturbance_torque(&mut rng_dist, cfg.sigma_dist_nm);

        // telemetry at this step
        let (q_est_now, omega_est_now) = match &est {
            Some(e) => (e.q, e.omega),
            None => (Quaternion::IDENTITY, Vec3::ZERO),
        };
        let q_err = (gains.q_req.conjugate() * truth.q_o2b).canonicalized();
        let q_err_est = (gains.q_req.conjugate() * q_est_now).canonicalized();
        let (roll, pitch, yaw) = q_err.to_euler_zyx();
        let rate_err =
            (omega_est_now - gains.omega_req_body(q_est_now)) * 180.0 / std::f64::consts::PI;
        let record = TelemetryRecord {
            t,
            q_true: truth.q_o2b,
            q_est: q_est_now,
            omega_true_deg_s: truth.omega * 180.0 / std::f64::consts::PI,
            omega_est_deg_s: omega_est_now * 180.0 / std::f64::consts::PI,
            euler_err_deg: Vec3::new(roll.to_degrees(), pitch.to_degrees(), yaw.to_degrees()),
            pointing_err_deg: q_err.rotation_angle().to_degrees(),
            pointing_est_deg: q_err_est.rotation_angle().to_degrees(),
            rate_err_deg_s: rate_err,
            b_body_t: b_body_true,
            h_wheel_nms: wheels.h_wheel,
            h_body_nms: h_body_now,
            m_mtq_am2: cmd.m_mtq,
            m_ctrl_nm: -h_dot_body,
            m_dist_nm: m_dist,
            m_unload_nm: m_unload,
            sunlit,
            sun_valid,
            unloading_active: cmd.unloading_active,
        };
        on_record(&record);
        records.push(record);

        held = Some(HeldCommands {
            h_body_at_start: h_body_now,
            h_dot_body,
            m_unload_feedforward: cmd.m_mtq.cross(b_mtm),
        });

        // propagate truth across the control interval at the fine step
        let m_external = m_dist + m_unload;
        let substeps = (cfg.dt_control_s / cfg.dt_truth_s).round().max(1.0) as usize;
        let dt_sub = cfg.dt_control_s / substeps as f64;
        let mut h_body = h_body_now;
        for _ in 0..substeps {
            let (next, h_next) =
                step_truth(&truth, &j, h_body, h_dot_body, m_external, n, dt_sub)?;
            truth = next;
            h_body = h_next;
        }
        for i in 0..4 {
            wheels.h_wheel[i] += cmd.tau_applied[i] * cfg.dt_control_s;
        }
    }

    compute_report(&records, None, psd_violations)
}

struct HeldCommands {
    h_body_at_start: Vec3,
    h_dot_body: Vec3,
    m_unload_feedforward: Vec3,
}

// ---------------------------------------------------------------------------
// Telemetry CSV
// ---------------------------------------------------------------------------

const CSV_COLUMNS: &[&str] = &[
    "t_s",
    "q_true_w", "q_true_x", "q_true_y", "q_true_z",
    "q_est_w", "q_est_x", "q_est_y", "q_est_z",
    "w_true_x_deg_s", "w_true_y_deg_s", "w_true_z_deg_s",
    "w_est_x_deg_s", "w_est_y_deg_s", "w_est_z_deg_s",
    "euler_err_roll_deg", "euler_err_pitch_deg", "euler_err_yaw_deg",
    "pointing_err_deg",
    "pointing_est_deg",
    "rate_err_x_deg_s", "rate_err_y_deg_s", "rate_err_z_deg_s",
    "b_body_x_t", "b_body_y_t", "b_body_z_t",
    "h_wheel_1_nms", "h_wheel_2_nms", "h_wheel_3_nms", "h_wheel_4_nms",
    "h_body_x_nms", "h_body_y_nms", "h_body_z_nms",
    "m_mtq_x_am2", "m_mtq_y_am2", "m_mtq_z_am2",
    "m_ctrl_x_nm", "m_ctrl_y_nm", "m_ctrl_z_nm",
    "m_dist_x_nm", "m_dist_y_nm", "m_dist_z_nm",
    "m_unload_x_nm", "m_unload_y_nm", "m_unload_z_nm",
    "sunlit", "sun_valid", "unloading_active",
];

/// Streaming CSV writer for telemetry records.
pub struct CsvSink<W: Write> {
    out: W,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        Ok(CsvSink { out })
    }

    pub fn write(&mut self, r: &TelemetryRecord) -> Result<()> {
        let mut fields: Vec<String> = Vec::with_capacity(CSV_COLUMNS.len());
        let mut push = |v: f64| fields.push(format!("{v}"));
        push(r.t);
        for q in [r.q_true, r.q_est] {
            push(q.w);
            push(q.x);
            push(q.y);
            push(q.z);
        }
        for v in [r.omega_true_deg_s, r.omega_est_deg_s, r.euler_err_deg] {
            push(v.x);
            push(v.y);
            push(v.z);
        }
        push(r.pointing_err_deg);
        push(r.pointing_est_deg);
        for v in [r.rate_err_deg_s, r.b_body_t] {
            push(v.x);
            push(v.y);
            push(v.z);
        }
        for h in r.h_wheel_nms {
            push(h);
        }
        for v in [r.h_body_nms, r.m_mtq_am2, r.m_ctrl_nm, r.m_dist_nm, r.m_unload_nm] {
            push(v.x);
            push(v.y);
            push(v.z);
        }
        for flag in [r.sunlit, r.sun_valid, r.unloading_active] {
            fields.push(if flag { "1".into() } else { "0".into() });
        }
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Parse telemetry back from CSV; the records round-trip bit exactly.
pub fn read_telemetry_csv(reader: impl BufRead) -> Result<Vec<TelemetryRecord>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Telemetry("empty telemetry file".into()))?
        .map_err(Error::Io)?;
    if header.trim() != CSV_COLUMNS.join(",") {
        return Err(Error::Telemetry("unrecognized telemetry header".into()));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(Error::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != CSV_COLUMNS.len() {
            return Err(Error::Telemetry(format!(
                "row {}: expected {} fields, found {}",
                i + 2,
                CSV_COLUMNS.len(),
                cells.len()
            )));
        }
        let mut idx = 0usize;
        let mut next = || {
            let v: f64 = cells[idx].parse().map_err(|e| {
                Error::Telemetry(format!("row {}: bad float {:?}: {e}", i + 2, cells[idx]))
            })?;
            idx += 1;
            Ok::<f64, Error>(v)
        };
        let t = next()?;
        let q_true = Quaternion::new(next()?, next()?, next()?, next()?);
        let q_est = Quaternion::new(next()?, next()?, next()?, next()?);
        let vec3 = |next: &mut dyn FnMut() -> Result<f64>| -> Result<Vec3> {
            Ok(Vec3::new(next()?, next()?, next()?))
        };
        let omega_true = vec3(&mut next)?;
        let omega_est = vec3(&mut next)?;
        let euler_err = vec3(&mut next)?;
        let pointing = next()?;
        let pointing_est = next()?;
        let rate_err = vec3(&mut next)?;
        let b_body = vec3(&mut next)?;
        let h_wheel = [next()?, next()?, next()?, next()?];
        let h_body = vec3(&mut next)?;
        let m_mtq = vec3(&mut next)?;
        let m_ctrl = vec3(&mut next)?;
        let m_dist = vec3(&mut next)?;
        let m_unload = vec3(&mut next)?;
        let flag = |s: &str| s == "1";
        records.push(TelemetryRecord {
            t,
            q_true,
            q_est,
            omega_true_deg_s: omega_true,
            omega_est_deg_s: omega_est,
            euler_err_deg: euler_err,
            pointing_err_deg: pointing,
            pointing_est_deg: pointing_est,
            rate_err_deg_s: rate_err,
            b_body_t: b_body,
            h_wheel_nms: h_wheel,
            h_body_nms: h_body,
            m_mtq_am2: m_mtq,
            m_ctrl_nm: m_ctrl,
            m_dist_nm: m_dist,
            m_unload_nm: m_unload,
            sunlit: flag(cells[idx]),
            sun_valid: flag(cells[idx + 1]),
            unloading_active: flag(cells[idx + 2]),
        });
    }
    Ok(records)
}

/// Render telemetry to a CSV string (convenience for tests and small runs).
pub fn telemetry_to_csv(records: &[TelemetryRecord]) -> Result<String> {
    let mut buf = Vec::new();
    {
        let mut sink = CsvSink::new(&mut buf)?;
        for r in records {
            sink.write(r)?;
        }
        sink.finish()?;
    }
    String::from_utf8(buf).map_err(|e| Error::Telemetry(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_duration_run_is_empty() {
        let mut cfg = ScenarioConfig::stabilize_dipole();
        cfg.duration_s = 0.0;
        let mut count = 0;
        let report = run_scenario(&cfg, |_| count += 1).unwrap();
        assert_eq!(count, 0);
        assert!(report.unloading_events.is_empty());
        assert!(report.settle_time_s.is_none());
    }

    #[test]
    fn same_seed_reproduces_telemetry_exactly() {
        let mut cfg = ScenarioConfig::stabilize_dipole();
        cfg.duration_s = 30.0;
        let mut rows_a = Vec::new();
        run_scenario(&cfg, |r| rows_a.push(*r)).unwrap();
        let mut rows_b = Vec::new();
        run_scenario(&cfg, |r| rows_b.push(*r)).unwrap();
        let csv_a = telemetry_to_csv(&rows_a).unwrap();
        let csv_b = telemetry_to_csv(&rows_b).unwrap();
        assert_eq!(csv_a, csv_b);

        let mut cfg2 = cfg.clone();
        cfg2.seed = 2;
        let mut rows_c = Vec::new();
        run_scenario(&cfg2, |r| rows_c.push(*r)).unwrap();
        assert_ne!(csv_a, telemetry_to_csv(&rows_c).unwrap());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mut cfg = ScenarioConfig::stabilize_dipole();
        cfg.duration_s = 20.0;
        let mut rows = Vec::new();
        run_scenario(&cfg, |r| rows.push(*r)).unwrap();
        let csv = telemetry_to_csv(&rows).unwrap();
        let back = read_telemetry_csv(std::io::BufReader::new(csv.as_bytes())).unwrap();
        assert_eq!(rows.len(), back.len());
        // byte-identical re-serialization implies bit-exact floats
        assert_eq!(csv, telemetry_to_csv(&back).unwrap());
        // and the derived report matches exactly
        let r1 = compute_report(&rows, None, 0).unwrap();
        let r2 = compute_report(&back, None, 0).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    }
}
