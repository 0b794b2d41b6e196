//! TRIAD bootstrap followed by EKF refinement, shown as the decay of the
//! attitude and rate estimation errors over the first minutes of a run.
//!
//! Run with: cargo run --release --example estimator_convergence

use adcs_sim::scenario::ScenarioConfig;
use adcs_sim::sim::{run_scenario, TelemetryRecord};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ScenarioConfig::stabilize_dipole();
    cfg.duration_s = 600.0;
    let mut rows: Vec<TelemetryRecord> = Vec::new();
    run_scenario(&cfg, |r| rows.push(*r))?;

    println!("estimation error decay (truth vs estimate):");
    println!("{:>8} {:>12} {:>14}", "t [s]", "att [deg]", "rate [deg/s]");
    for r in rows.iter().filter(|r| {
        let t = r.t;
        t < 10.0 || (t < 60.0 && t % 10.0 == 0.0) || t % 60.0 == 0.0
    }) {
        let att = (r.q_est.conjugate() * r.q_true).rotation_angle().to_degrees();
        let rate = (r.omega_true_deg_s - r.omega_est_deg_s).norm();
        println!("{:8.1} {:12.4} {:14.5}", r.t, att, rate);
    }

    let last = rows.last().unwrap();
    let att = (last.q_est.conjugate() * last.q_true).rotation_angle().to_degrees();
    println!("\nafter {:.0} s the estimate tracks truth to {att:.3} deg", last.t);
    Ok(())
}
