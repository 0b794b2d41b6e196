//! Attitude stabilization with magnetometer measurements generated by the
//! IGRF-13 model. The scenario epoch puts short eclipse arcs on each
//! revolution, so the filter rides through magnetometer-only stretches.
//!
//! Run with: cargo run --release --example stabilize_igrf

use std::fs::File;
use std::io::BufWriter;

use adcs_sim::scenario::ScenarioConfig;
use adcs_sim::sim::{run_scenario, CsvSink};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::stabilize_igrf();
    let mut sink = CsvSink::new(BufWriter::new(File::create("stabilize_igrf.csv")?))?;
    let mut eclipse_steps = 0usize;
    let mut total_steps = 0usize;
    let report = run_scenario(&cfg, |r| {
        if !r.sun_valid {
            eclipse_steps += 1;
        }
        total_steps += 1;
        sink.write(r).expect("telemetry write");
    })?;
    sink.finish()?;

    println!("scenario {} ({} s, seed {})", cfg.name, cfg.duration_s, cfg.seed);
    println!("telemetry -> stabilize_igrf.csv");
    println!(
        "sun invalid {:.1}% of the run (eclipse arcs)",
        100.0 * eclipse_steps as f64 / total_steps as f64
    );
    match report.settle_time_s {
        Some(t) => println!("settled at {t:.0} s"),
        None => println!("did not settle"),
    }
    let e = report.rmse_euler_deg;
    let r = report.rmse_rates_deg_s;
    println!("post-settle RMSE  roll {:.3}  pitch {:.3}  yaw {:.3} deg", e.x, e.y, e.z);
    println!(
        "post-settle rate RMSE  x {:.2e}  y {:.2e}  z {:.2e} deg/s",
        r.x, r.y, r.z
    );
    println!("mean body rate about y: {:.4} deg/s", report.mean_omega_y_deg_s);
    Ok(())
}
