//! Global surface map of the IGRF total intensity at the last tabulated
//! epoch, 5°×5°, written as CSV with a min/max summary.
//!
//! Run with: cargo run --release --example igrf_map

use std::fs::File;
use std::io::{BufWriter, Write};

use adcs_sim::geomag::{igrf_field, GaussCoefficients, R_IGRF};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gc = GaussCoefficients::load_vendored()?;
    let date = gc.last_epoch();

    let out = File::create("igrf_map.csv")?;
    let mut w = BufWriter::new(out);
    writeln!(w, "lat_deg,lon_deg,intensity_nt")?;

    let mut min = f64::MAX;
    let mut max = f64::MIN;
    for i in 0..=36 {
        let lat = -90.0 + i as f64 * 5.0;
        for j in 0..72 {
            let lon = -180.0 + j as f64 * 5.0;
            let theta = (90.0 - lat).to_radians();
            let f = igrf_field(R_IGRF, theta, lon.to_radians(), date, &gc)?.b.norm() * 1e9;
            min = min.min(f);
            max = max.max(f);
            writeln!(w, "{lat},{lon},{f}")?;
        }
    }
    w.flush()?;

    println!("IGRF surface total intensity at {date:.1} -> igrf_map.csv");
    println!("min {min:.0} nT, max {max:.0} nT");
    Ok(())
}
