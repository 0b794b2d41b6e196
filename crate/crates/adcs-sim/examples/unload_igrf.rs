//! Reaction-wheel momentum unloading under the IGRF model: the Earth-fixed
//! field sweeps enough directions that one continuous window dumps all
//! three axes.
//!
//! Run with: cargo run --release --example unload_igrf

use std::fs::File;
use std::io::BufWriter;

use adcs_sim::scenario::ScenarioConfig;
use adcs_sim::sim::{run_scenario, CsvSink};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::unload_igrf();
    let mut sink = CsvSink::new(BufWriter::new(File::create("unload_igrf.csv")?))?;
    let report = run_scenario(&cfg, |r| sink.write(r).expect("telemetry write"))?;
    sink.finish()?;

    println!("scenario {} -> unload_igrf.csv", cfg.name);
    let h0 = cfg.initial_wheel_momentum_nms;
    println!("initial wheel momentum: ({:+.2e}, {:+.2e}, {:+.2e}) N·m·s", h0.x, h0.y, h0.z);
    println!("{} unloading window(s):", report.unloading_events.len());
    for ev in &report.unloading_events {
        println!(
            "  [{:5.0} .. {:5.0}] s  h ({:+.2e},{:+.2e},{:+.2e}) -> ({:+.2e},{:+.2e},{:+.2e})",
            ev.t_start_s, ev.t_end_s,
            ev.h_before_nms.x, ev.h_before_nms.y, ev.h_before_nms.z,
            ev.h_after_nms.x, ev.h_after_nms.y, ev.h_after_nms.z,
        );
        println!(
            "      per-axis reduction  X {:5.1}%  Y {:5.1}%  Z {:5.1}%",
            ev.percent_reduction.x, ev.percent_reduction.y, ev.percent_reduction.z
        );
    }
    println!(
        "largest commanded coil moment: {:.4} A·m² (bound 0.1)",
        report.max_mtq_component_am2
    );
    Ok(())
}
