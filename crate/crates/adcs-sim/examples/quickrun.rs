use adcs_sim::scenario::ScenarioConfig;
use adcs_sim::sim::run_scenario;
fn main() {
    for preset in ["stabilize-dipole", "stabilize-igrf"] {
        let mut settles = Vec::new();
        for seed in 1..=10u64 {
            let mut cfg = ScenarioConfig::preset(preset).unwrap();
            cfg.seed = seed;
            match run_scenario(&cfg, |_| {}) {
                Ok(r) => settles.push(r.settle_time_s.unwrap_or(-1.0) as i64),
                Err(e) => println!("{preset} s{seed}: ERROR {e}"),
            }
        }
        println!("{preset}: settles = {settles:?}");
    }
}
