//! Sample both geomagnetic field models around one sun-synchronous orbit
//! and summarize how far apart they are, writing the traces to CSV.
//!
//! Run with: cargo run --release --example field_comparison

use std::fs::File;
use std::io::{BufWriter, Write};

use adcs_sim::geomag::{field_in_orbital, FieldModelKind, GaussCoefficients};
use adcs_sim::orbit::propagate_circular;
use adcs_sim::scenario::ScenarioConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::default();
    let gc = GaussCoefficients::load_vendored()?;
    let period = cfg.orbit.period();
    let step = 10.0;

    let out = File::create("field_comparison.csv")?;
    let mut w = BufWriter::new(out);
    writeln!(
        w,
        "t_s,u_deg,dipole_x_t,dipole_y_t,dipole_z_t,igrf_x_t,igrf_y_t,igrf_z_t,angle_deg"
    )?;

    let mut sum_sq = 0.0;
    let mut max_angle: f64 = 0.0;
    let steps = (period / step).ceil() as usize;
    for k in 0..=steps {
        let t = k as f64 * step;
        let st = propagate_circular(&cfg.orbit, t);
        let bd = field_in_orbital(FieldModelKind::Dipole, &st, &cfg.orbit.epoch, None, &cfg.dipole)?;
        let bi =
            field_in_orbital(FieldModelKind::Igrf, &st, &cfg.orbit.epoch, Some(&gc), &cfg.dipole)?;
        let angle = bd.angle_to(bi).to_degrees();
        sum_sq += angle * angle;
        max_angle = max_angle.max(angle);
        writeln!(
            w,
            "{t},{},{},{},{},{},{},{},{angle}",
            st.u.to_degrees(),
            bd.x, bd.y, bd.z,
            bi.x, bi.y, bi.z
        )?;
    }
    w.flush()?;

    let rms = (sum_sq / (steps + 1) as f64).sqrt();
    println!("one orbit ({period:.0} s), sampled every {step} s -> field_comparison.csv");
    println!("dipole vs IGRF direction difference: RMS {rms:.2} deg, max {max_angle:.2} deg");
    Ok(())
}
