//! Command-line front end: run scenarios, evaluate field models, recompute
//! reports from saved telemetry, and validate configuration files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adcs_sim::geomag::{
    field_in_orbital, igrf_field, igrf_field_eci, FieldModelKind, GaussCoefficients, R_IGRF,
};
use adcs_sim::metrics::compute_report;
use adcs_sim::orbit::{orbital_frame_quaternion, propagate_circular};
use adcs_sim::scenario::ScenarioConfig;
use adcs_sim::sim::{read_telemetry_csv, run_scenario, CsvSink};

#[derive(Parser)]
#[command(name = "adcs-sim", about = "Satellite ADCS simulation toolkit", version)]
struct Cli {
    /// Print the default scenario configuration as JSON and exit.
    #[arg(long, global = true)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario and write telemetry plus a run report.
    Run(RunArgs),
    /// Evaluate a geomagnetic field model along an orbit or on a global grid.
    Field(FieldArgs),
    /// Recompute a run report from saved telemetry.
    Report(ReportArgs),
    /// Check a scenario configuration file.
    ValidateConfig { config: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: stabilize-dipole, stabilize-igrf, unload-dipole,
    /// unload-igrf.
    #[arg(long, default_value = "stabilize-dipole")]
    preset: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Geomagnetic field model override.
    #[arg(long)]
    model: Option<FieldModelKind>,
    /// IAGA coefficient file override (defaults to the vendored IGRF-13).
    #[arg(long)]
    igrf_coeffs: Option<PathBuf>,
    /// Run duration override, s.
    #[arg(long)]
    duration: Option<f64>,
    /// Mode override: stabilize or unload.
    #[arg(long)]
    mode: Option<adcs_sim::control::ControlMode>,
    /// Telemetry CSV output path.
    #[arg(long, default_value = "telemetry.csv")]
    out: PathBuf,
    /// Run report JSON output path (defaults next to the telemetry).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long, default_value = "dipole")]
    model: FieldModelKind,
    #[arg(long)]
    igrf_coeffs: Option<PathBuf>,
    /// Orbit and epoch come from this scenario config (default preset orbit).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sample the model along the orbit for this long, s.
    #[arg(long, default_value_t = 5739.0)]
    duration: f64,
    /// Sampling step, s.
    #[arg(long, default_value_t = 10.0)]
    step: f64,
    /// Evaluate surface total intensity on a lat/lon grid instead.
    #[arg(long)]
    grid: bool,
    /// Grid spacing, degrees.
    #[arg(long, default_value_t = 5.0)]
    grid_step: f64,
    #[arg(long, default_value = "field.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    telemetry: PathBuf,
    /// Restrict the metrics window, formatted T0:T1 in seconds.
    #[arg(long)]
    window: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        println!("{}", ScenarioConfig::default().to_json());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no subcommand; try --help");
        return ExitCode::from(2);
    };
    match dispatch(command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<(), Box<dyn std::error::Error>> {
    match command {
        Command::Run(args) => run(args),
        Command::Field(args) => field(args),
        Command::Report(args) => report(args),
        Command::ValidateConfig { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            cfg.validate()?;
            println!("OK: {} is a valid scenario ({})", config.display(), cfg.name);
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::preset(&args.preset)
            .ok_or_else(|| format!("unknown preset {:?}", args.preset))?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(model) = args.model {
        cfg.field_model = model;
    }
    if let Some(path) = args.igrf_coeffs {
        cfg.igrf_coeffs_path = Some(path);
    }
    if let Some(duration) = args.duration {
        cfg.duration_s = duration;
    }
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }

    let file = File::create(&args.out)?;
    let mut sink = CsvSink::new(BufWriter::new(file))?;
    let mut sink_err = None;
    let report = run_scenario(&cfg, |r| {
        if sink_err.is_none() {
            if let Err(e) = sink.write(r) {
                sink_err = Some(e);
            }
        }
    })?;
    if let Some(e) = sink_err {
        return Err(e.into());
    }
    sink.finish()?;

    let report_path = args
        .report
        .unwrap_or_else(|| args.out.with_extension("report.json"));
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&report_path, &json)?;
    println!(
        "{}: wrote {} and {}",
        cfg.name,
        args.out.display(),
        report_path.display()
    );
    println!("{json}");
    Ok(())
}

fn field(args: FieldArgs) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let gc = match (&args.model, &args.igrf_coeffs) {
        (FieldModelKind::Igrf, Some(p)) => Some(GaussCoefficients::load(p)?),
        (FieldModelKind::Igrf, None) => Some(GaussCoefficients::load_vendored()?),
        _ => None,
    };
    let out = File::create(&args.out)?;
    let mut w = BufWriter::new(out);

    if args.grid {
        let gc = gc.ok_or("grid mode requires the igrf model")?;
        let date = cfg.orbit.epoch.decimal_year(0.0);
        writeln!(w, "lat_deg,lon_deg,intensity_nt")?;
        let steps_lat = (180.0 / args.grid_step).round() as usize;
        let steps_lon = (360.0 / args.grid_step).round() as usize;
        for i in 0..=steps_lat {
            let lat = -90.0 + i as f64 * args.grid_step;
            for j in 0..steps_lon {
                let lon = -180.0 + j as f64 * args.grid_step;
                let theta = (90.0 - lat).to_radians();
                let b = igrf_field(R_IGRF, theta, lon.to_radians(), date, &gc)?;
                writeln!(w, "{lat},{lon},{}", b.b.norm() * 1e9)?;
            }
        }
        w.flush()?;
        println!("wrote surface intensity grid to {}", args.out.display());
        return Ok(());
    }

    writeln!(
        w,
        "t_s,u_rad,b_orb_x_t,b_orb_y_t,b_orb_z_t,b_eci_x_t,b_eci_y_t,b_eci_z_t,b_norm_t"
    )?;
    let steps = (args.duration / args.step).ceil() as usize;
    for k in 0..=steps {
        let t = k as f64 * args.step;
        let st = propagate_circular(&cfg.orbit, t);
        let b_orb = field_in_orbital(args.model, &st, &cfg.orbit.epoch, gc.as_ref(), &cfg.dipole)?;
        let q_i2o = orbital_frame_quaternion(&st)?;
        let b_eci = match args.model {
            FieldModelKind::Igrf => {
                igrf_field_eci(st.r_eci, &cfg.orbit.epoch, t, gc.as_ref().unwrap())?
            }
            FieldModelKind::Dipole => q_i2o.rotate(b_orb),
        };
        writeln!(
            w,
            "{t},{},{},{},{},{},{},{},{}",
            st.u,
            b_orb.x,
            b_orb.y,
            b_orb.z,
            b_eci.x,
            b_eci.y,
            b_eci.z,
            b_orb.norm()
        )?;
    }
    w.flush()?;
    println!(
        "wrote {} samples of the {} field to {}",
        steps + 1,
        args.model,
        args.out.display()
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Box<dyn std::error::Error>> {
    let file = File::open(&args.telemetry)?;
    let records = read_telemetry_csv(BufReader::new(file))?;
    let window = match &args.window {
        Some(spec) => {
            let (a, b) = spec
                .split_once(':')
                .ok_or("window must be formatted T0:T1")?;
            Some((a.trim().parse::<f64>()?, b.trim().parse::<f64>()?))
        }
        None => None,
    };
    let report = compute_report(&records, window, 0)?;
    let json = serde_json::to_string_pretty(&report)?;
    match args.out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}
