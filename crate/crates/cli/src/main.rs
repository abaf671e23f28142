use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use airship::scenario::{preset, read_csv, run_to_dir, summarize, ScenarioSpec, Summary, PRESETS};
use airship::vehicle::{reference_blimp, VehicleConfig};
use airship_bridge::{Bridge, ServeOptions, Session};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "airship", version, about = "Deformable airship flight simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario headless and write telemetry.csv, summary.json and the
    /// effective scenario to the output directory.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory. Defaults to the scenario's `output`, then `runs/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Simulated duration, s.
        #[arg(long)]
        duration: Option<f64>,
        /// Use single-precision arithmetic.
        #[arg(long)]
        f32: bool,
    },
    /// Print summary metrics of a telemetry log as JSON.
    Summarize { log: PathBuf },
    /// Run a scenario in real time and serve it over WebSocket at /ws.
    Serve {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Telemetry broadcast rate, Hz.
        #[arg(long, default_value_t = 20.0)]
        rate: f64,
        /// Simulated seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        timescale: f64,
        /// Append every simulated frame to this CSV file.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Write the reference vehicle document.
    ExportVehicle {
        /// Destination file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios, or write them as JSON files into a directory.
    Presets {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// Scenario document.
    scenario: Option<PathBuf>,
    /// Built-in scenario name instead of a document.
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    /// Turbulence seed.
    #[arg(long)]
    seed: Option<u64>,
}

struct Loaded {
    spec: ScenarioSpec,
    vehicle: VehicleConfig,
    base: PathBuf,
}

impl Source {
    fn load(&self) -> Result<Loaded> {
        let (mut spec, base) = match (&self.scenario, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let spec = ScenarioSpec::from_json(&text).with_context(|| format!("in {}", path.display()))?;
                (spec, path.parent().unwrap_or(Path::new(".")).to_path_buf())
            }
            (None, Some(name)) => match preset(name) {
                Some(spec) => (spec, PathBuf::from(".")),
                None => bail!("unknown preset `{name}`; available: {}", PRESETS.join(", ")),
            },
            (None, None) => bail!("give a scenario file or --preset NAME"),
        };
        if self.seed.is_some() {
            spec.seed = self.seed;
        }
        let vehicle = spec.vehicle_config(&base).context("loading the vehicle")?;
        Ok(Loaded { spec, vehicle, base })
    }
}

fn print_summary(s: &Summary) {
    println!("samples              {}", s.samples);
    println!("position error RMS   {:.3} m", s.position_error_rms_m);
    println!("altitude error RMS   {:.3} m (sigma {:.3} m)", s.altitude_error_rms_m, s.altitude_error_std_m);
    println!("mean airspeed        {:.3} m/s", s.mean_airspeed_m_s);
    println!("mean |yaw rate|      {:.4} rad/s", s.mean_abs_yaw_rate_rad_s);
    if let Some(x) = s.cross_track_rms_m {
        println!("cross-track RMS      {x:.3} m");
    }
    if let (Some(t), Some(post)) = (s.inflation_change_s, &s.post) {
        println!("inflation change at  {t:.2} s");
        println!("altitude sigma       {:.3} -> {:.3} m", s.pre.altitude_error_std_m, post.altitude_error_std_m);
    }
    if let Some(db) = s.pitch_peak_rise_db {
        println!("pitch peak rise      {db:.1} dB");
    }
    if let Some(db) = s.yaw_hf_rise_db {
        println!("yaw HF rise          {db:.1} dB");
    }
}

fn run(source: &Source, out: Option<PathBuf>, duration: Option<f64>, single: bool) -> Result<()> {
    let Loaded { mut spec, vehicle, base } = source.load()?;
    if let Some(d) = duration {
        spec.duration = d;
    }
    let dir = out
        .or_else(|| spec.output.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("runs").join(&spec.name));
    spec.validate()?;

    // Keep a self-contained copy that reproduces this run.
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("vehicle.json"), vehicle.to_json())?;
    let replay = ScenarioSpec { vehicle: Some("vehicle.json".into()), output: None, ..spec.clone() };
    std::fs::write(dir.join("scenario.json"), replay.to_json())?;

    let summary = if single {
        run_to_dir::<f32>(&spec, &vehicle, &dir)
    } else {
        run_to_dir::<f64>(&spec, &vehicle, &dir)
    }
    .with_context(|| format!("scenario `{}` failed; partial telemetry in {}", spec.name, dir.display()))?;
    print_summary(&summary);
    println!("wrote {}", dir.display());
    Ok(())
}

fn summarize_log(path: &Path) -> Result<()> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let frames = read_csv(file).with_context(|| format!("reading {}", path.display()))?;
    let Some(summary) = summarize(&frames) else { bail!("{} has no frames", path.display()) };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn serve(source: &Source, addr: SocketAddr, rate: f64, timescale: f64, log: Option<PathBuf>) -> Result<()> {
    let Loaded { spec, vehicle, .. } = source.load()?;
    let session = Session::new(&spec, &vehicle, timescale)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let bridge = Bridge::bind(addr, session, ServeOptions { rate_hz: rate, log, ..ServeOptions::default() }).await?;
        eprintln!("serving `{}` on ws://{}/ws", spec.name, bridge.local_addr());
        bridge
            .run(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Cmd::Run { source, out, duration, f32 } => run(&source, out, duration, f32),
        Cmd::Summarize { log } => summarize_log(&log),
        Cmd::Serve { source, port, host, rate, timescale, log } => {
            serve(&source, SocketAddr::new(host, port), rate, timescale, log)
        }
        Cmd::ExportVehicle { out } => {
            let json = reference_blimp().to_json();
            match out {
                Some(path) => std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display())),
                None => {
                    println!("{json}");
                    Ok(())
                }
            }
        }
        Cmd::Presets { dir } => {
            for name in PRESETS {
                match &dir {
                    Some(d) => {
                        std::fs::create_dir_all(d)?;
                        std::fs::write(d.join(format!("{name}.json")), preset(name).expect("listed").to_json() + "\n")?;
                    }
                    None => println!("{name}"),
                }
            }
            Ok(())
        }
    }
}
