use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use eitlab::config::{ConfigError, ScenarioConfig};
use eitlab::optimizer::{optimal_pulse_duration, StorageSetup};
use eitlab::propagation::transmission_efficiency;
use eitlab::spectrum::{eit_transmission_profile, fit_lorentzian, symmetric_grid};
use eitlab::{harness, scaling, store_and_retrieve, ControlSchedule, Envelope, Grid, MediumParams};

const VERSION: &str = env!("EITLAB_VERSION");
const OUTPUT_ENV: &str = "EITLAB_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "eitlab", version = VERSION, about = "EIT slow and stored light laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state transmission around two-photon resonance, with a
    /// Lorentzian fit of the transparency window.
    EitScan {
        #[command(flatten)]
        medium: MediumArgs,
        /// Half-width of the detuning scan in units of the EIT bandwidth.
        #[arg(long, default_value_t = 3.0)]
        span: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Propagate a Gaussian pulse with the control left on.
    Slow {
        #[command(flatten)]
        medium: MediumArgs,
        /// Intensity FWHM; defaults to 6 / EIT bandwidth.
        #[arg(long)]
        fwhm: Option<f64>,
    },
    /// Store a Gaussian pulse for `--storage` and read it back.
    Store {
        #[command(flatten)]
        medium: MediumArgs,
        #[arg(long, default_value_t = 20.0)]
        storage: f64,
    },
    /// Time-reversal optimization of the input pulse.
    Optimize {
        #[command(flatten)]
        medium: MediumArgs,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Density x control-power sweep from a config file.
    Sweep(RunArgs),
    /// Radiation-trapping ladder over the config densities.
    Radtrap(RunArgs),
    /// Baseline against elongated cell at equal optical depth.
    GeometryCompare(RunArgs),
    /// Check a config file without running anything.
    Validate { config: PathBuf },
}

/// Dimensionless medium: depths, rates and detunings in units of the
/// excited-state decay rate.
#[derive(Args)]
struct MediumArgs {
    #[arg(long)]
    d: f64,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma_s: f64,
    /// One-photon detuning.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

enum Failure {
    Config(String),
    Runtime(String),
    MissingFile(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::MissingFile(_) => 4,
        }
    }
}

impl From<eitlab::Error> for Failure {
    fn from(e: eitlab::Error) -> Self {
        match e {
            eitlab::Error::Config(m) => Failure::Config(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::MissingFile(e.to_string()),
            ConfigError::Invalid(_) => Failure::Config(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("cannot write {}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(m) | Failure::Runtime(m) | Failure::MissingFile(m)) = &f;
            eprintln!("eitlab: {m}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::EitScan { medium, span, points } => eit_scan(&medium, span, points),
        Command::Slow { medium, fwhm } => slow(&medium, fwhm),
        Command::Store { medium, storage } => store(&medium, storage),
        Command::Optimize { medium, max_iter, tol } => optimize(&medium, max_iter, tol),
        Command::Sweep(args) => sweep(&args),
        Command::Radtrap(args) => radtrap(&args),
        Command::GeometryCompare(args) => geometry(&args),
        Command::Validate { config } => {
            ScenarioConfig::load(&config)?;
            println!("ok");
            Ok(())
        }
    }
}

impl MediumArgs {
    fn medium(&self) -> Result<MediumParams, Failure> {
        if !(self.omega > 0.0) {
            return Err(Failure::Config(format!("--omega must be positive, got {}", self.omega)));
        }
        MediumParams::new(self.d, self.gamma_s, self.delta).map_err(|e| Failure::Config(e.to_string()))
    }

    fn emit(&self, csv: &str) -> Outcome {
        match &self.out {
            Some(p) => std::fs::write(p, csv).map_err(|e| io_err(p, e)),
            None => {
                print!("{csv}");
                Ok(())
            }
        }
    }
}

fn eit_scan(args: &MediumArgs, span: f64, points: usize) -> Outcome {
    let m = args.medium()?;
    let width = scaling::eit_bandwidth(args.omega, &m)?;
    let grid = symmetric_grid(span * width, points);
    let profile = eit_transmission_profile(&m, args.omega, &grid)?;
    let fit = fit_lorentzian(&profile.detunings, &profile.transmission)?;
    let mut csv = String::from("delta2,transmission\n");
    for (x, t) in profile.detunings.iter().zip(&profile.transmission) {
        writeln!(csv, "{x},{t}").expect("string write");
    }
    args.emit(&csv)?;
    eprintln!("fwhm = {}", fit.fwhm);
    eprintln!("bandwidth_estimate = {width}");
    Ok(())
}

fn slow(args: &MediumArgs, fwhm: Option<f64>) -> Outcome {
    let m = args.medium()?;
    let grid = Grid::auto(&m, args.omega);
    let fwhm = match fwhm {
        Some(w) => w,
        None if m.d > 0.0 => 6.0 / scaling::eit_bandwidth(args.omega, &m)?,
        None => 10.0,
    };
    let n = (4.0 * fwhm / grid.dt).ceil() as usize + 1;
    let pulse = Envelope::gaussian(0.0, grid.dt, n, 2.0 * fwhm, fwhm)?;
    let len = pulse.t_end() + 2.0 * scaling::comoving_delay(&m, args.omega)? + 10.0 * fwhm;
    let (eta, state) = transmission_efficiency(&pulse, &ControlSchedule::continuous(len, args.omega)?, &m, grid)?;
    let delay = state.transmitted.peak_time() - pulse.peak_time();
    let mut csv = String::from("t,input,output\n");
    for (k, t) in state.transmitted.times().enumerate() {
        let i = pulse.value_at(t).norm_sqr();
        writeln!(csv, "{t},{i},{}", state.transmitted.values()[k].norm_sqr()).expect("string write");
    }
    args.emit(&csv)?;
    eprintln!("delay = {delay}");
    eprintln!("eta = {eta}");
    Ok(())
}

fn store(args: &MediumArgs, storage: f64) -> Outcome {
    let m = args.medium()?;
    let grid = Grid::auto(&m, args.omega);
    let setup = StorageSetup {
        storage,
        ..StorageSetup::new(args.omega)
    };
    let pulse = setup.gaussian_seed(&m, grid.dt)?;
    let control = setup.control(&m, grid.dt)?;
    let report = store_and_retrieve(&pulse, &control, &m, grid)?;
    let mut csv = String::from("t,retrieved\n");
    for (k, t) in report.retrieved.times().enumerate() {
        writeln!(csv, "{t},{}", report.retrieved.values()[k].norm_sqr()).expect("string write");
    }
    args.emit(&csv)?;
    eprintln!("eta_total = {}", report.eta_total);
    eprintln!("eta_leakage = {}", report.eta_leakage);
    eprintln!("eta_scatter = {}", report.eta_scatter);
    eprintln!("eta_spin_decay = {}", report.eta_spin_decay);
    eprintln!("eta_residual = {}", report.eta_residual);
    Ok(())
}

fn optimize(args: &MediumArgs, max_iter: usize, tol: f64) -> Outcome {
    let m = args.medium()?;
    let grid = Grid::auto(&m, args.omega);
    let setup = StorageSetup {
        max_iter,
        tol,
        ..StorageSetup::new(args.omega)
    };
    let trace = setup.run(&m, grid, None)?;
    args.emit(&trace.to_csv())?;
    eprintln!("eta = {}", trace.final_eta());
    eprintln!("converged = {}", trace.converged);
    if let Ok(t) = optimal_pulse_duration(&trace) {
        eprintln!("t_opt = {}", t.value);
        if t.equivalent_width {
            eprintln!("t_opt_is_equivalent_width = true");
        }
    }
    Ok(())
}

fn load(args: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Ok(dir) = std::env::var(OUTPUT_ENV) {
        if !dir.is_empty() {
            cfg.output_dir = dir;
        }
    }
    if args.jobs == 0 {
        return Err(Failure::Config("--jobs must be at least 1".into()));
    }
    Ok(cfg)
}

/// Writes `<name>.csv` and `<name>.json` into the output directory.
fn write_outputs(cfg: &ScenarioConfig, args: &RunArgs, name: &str, csv: &str, rows: usize, extra: Map<String, Value>) -> Outcome {
    let dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let csv_path = dir.join(format!("{name}.csv"));
    std::fs::write(&csv_path, csv).map_err(|e| io_err(&csv_path, e))?;
    let config: Map<String, Value> = cfg.entries().into_iter().map(|(k, v)| (k, Value::String(v))).collect();
    let mut summary = json!({
        "command": name,
        "version": VERSION,
        "config_path": args.config.display().to_string(),
        "config": config,
        "seed": cfg.seed,
        "rows": rows,
        "csv": csv_path.display().to_string(),
    });
    summary.as_object_mut().expect("object").extend(extra);
    let json_path = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&summary).expect("json values serialize");
    std::fs::write(&json_path, text + "\n").map_err(|e| io_err(&json_path, e))?;
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn sweep(args: &RunArgs) -> Outcome {
    let cfg = load(args)?;
    let rows = harness::run_sweep(&cfg, args.jobs)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let extra = Map::from_iter([("failed_points".to_string(), json!(failed))]);
    write_outputs(&cfg, args, "sweep", &harness::sweep_csv(&rows), rows.len(), extra)
}

fn radtrap(args: &RunArgs) -> Outcome {
    let cfg = load(args)?;
    let (rows, pump) = harness::run_trapping(&cfg, args.jobs)?;
    let extra = Map::from_iter([("pump_branching".to_string(), json!(pump.branching))]);
    write_outputs(&cfg, args, "radtrap", &harness::trapping_csv(&rows), rows.len(), extra)
}

fn geometry(args: &RunArgs) -> Outcome {
    let cfg = load(args)?;
    let rows = harness::run_geometry_compare(&cfg, args.jobs)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let extra = Map::from_iter([("failed_points".to_string(), json!(failed))]);
    write_outputs(&cfg, args, "geometry", &harness::geometry_csv(&rows), rows.len(), extra)
}
