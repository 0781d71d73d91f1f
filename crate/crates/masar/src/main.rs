use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use masar::cli_io::{
    default_grid, load_config, parse_grid, read_pump_csv, read_signal_csv, run_calibrate, run_fit,
    run_simulate, synth_pump, write_pump_csv, Config, PulseShape, PulseTrainSpec,
};
use masar::integrator::{Interpolation, PumpProfile};
use masar::{Error, Result};

/// Simulation and calibration toolkit for an optically pumped triplet spin
/// refrigerator coupled to a microwave cavity.
#[derive(Parser)]
#[command(name = "masar", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PumpArgs {
    /// Pump profile CSV (t_s,power_W)
    #[arg(long, value_name = "PATH", conflicts_with = "train")]
    pump: Option<PathBuf>,
    /// Synthetic rectangular pulse train: n,duration_s,interval_s,total_energy_J
    #[arg(long, value_name = "N,DUR,INTERVAL,ENERGY")]
    train: Option<String>,
    /// Interpolation rule for --pump files
    #[arg(long, value_enum, default_value = "linear")]
    interp: InterpArg,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum InterpArg {
    Linear,
    Hold,
}

impl From<InterpArg> for Interpolation {
    fn from(v: InterpArg) -> Self {
        match v {
            InterpArg::Linear => Interpolation::Linear,
            InterpArg::Hold => Interpolation::ZeroOrderHold,
        }
    }
}

impl PumpArgs {
    fn resolve(&self) -> Result<PumpProfile> {
        match (&self.pump, &self.train) {
            (Some(path), None) => read_pump_csv(path, self.interp.into()),
            (None, Some(train)) => synth_pump(&parse_train(train)?),
            (None, None) => Ok(PumpProfile::off()),
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        }
    }
}

fn parse_train(spec: &str) -> Result<PulseTrainSpec> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Parse(format!(
            "--train must be n,duration_s,interval_s,total_energy_J, got '{spec}'"
        )));
    }
    let n_pulses: usize = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad pulse count '{}'", parts[0])))?;
    let num = |s: &str, what: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad {what} '{s}'")))
    };
    Ok(PulseTrainSpec {
        n_pulses,
        duration: num(parts[1], "duration")?,
        interval: num(parts[2], "interval")?,
        total_energy: num(parts[3], "total energy")?,
        shape: PulseShape::Rectangular,
    })
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the coupled spin + photon dynamics, writing a trajectory CSV
    Simulate {
        /// TOML configuration (empty file = defaults)
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Output trajectory CSV
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[command(flatten)]
        pump: PumpArgs,
        /// Shift output timestamps by the 150 us receiver group delay
        #[arg(long)]
        time_offset: bool,
    },
    /// Tabulate the power-reduction vs mode-temperature calibration curve
    Calibrate {
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Temperature grid lo:hi:n (K); default 1:T0:T0
        #[arg(long, value_name = "LO:HI:N")]
        grid: Option<String>,
    },
    /// Fit a bi-exponential to a cooling signal and infer the coldest mode
    /// temperature with a 95% confidence interval
    Fit {
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Signal CSV (t_s,dp_dB[,sigma_dB])
        #[arg(long, value_name = "PATH")]
        signal: PathBuf,
        /// JSON fit report output
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Weight residuals by the sigma_dB column when present
        #[arg(long)]
        weighted: bool,
    },
    /// Report the spin temperature of the X-Z transition from populations
    SpinTemp {
        /// Population of the upper (X) sub-level
        #[arg(long)]
        n_x: f64,
        /// Population of the lower (Z) sub-level
        #[arg(long)]
        n_z: f64,
        /// Transition frequency (Hz)
        #[arg(long, default_value_t = 1.4495e9)]
        f_xz: f64,
    },
    /// Generate a synthetic pump pulse-train CSV
    SynthPump {
        /// Pulse train n,duration_s,interval_s,total_energy_J
        #[arg(long, value_name = "N,DUR,INTERVAL,ENERGY")]
        train: String,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
}

fn load(config: &Option<PathBuf>) -> Result<Config> {
    match config {
        Some(path) => load_config(path),
        None => Ok(Config::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out, pump, time_offset } => {
            let config = load(&config)?;
            let profile = pump.resolve()?;
            let trajectory = run_simulate(&config, &profile, &out, time_offset)?;
            let coldest = trajectory.min_t_mode();
            eprintln!(
                "wrote {} samples to {}; coldest mode temperature {:.3} K",
                trajectory.samples.len(),
                out.display(),
                coldest
            );
        }
        Command::Calibrate { config, out, grid } => {
            let config = load(&config)?;
            let grid = match grid {
                Some(spec) => parse_grid(&spec)?,
                None => default_grid(config.receiver.t0),
            };
            let curve = run_calibrate(&config, &grid, &out)?;
            eprintln!("wrote {} calibration points to {}", curve.len(), out.display());
        }
        Command::Fit { config, signal, out, weighted } => {
            let config = load(&config)?;
            let series = read_signal_csv(&signal)?;
            let (_, report) = run_fit(&config, &series, weighted)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Parse(format!("report serialize: {e}")))?;
            match out {
                Some(path) => std::fs::write(path, json)?,
                None => println!("{json}"),
            }
            eprintln!(
                "coldest point: {:+.3} dB at t = {:.6e} s -> {:.2} K (95% CI {:.2}..{:.2} K)",
                report.dp_db,
                report.minimum.t_min,
                report.inferred.t_mode,
                report.inferred.lower,
                report.inferred.upper
            );
        }
        Command::SpinTemp { n_x, n_z, f_xz } => {
            println!("{}", masar::cli_io::format_spin_temperature(n_x, n_z, f_xz)?);
        }
        Command::SynthPump { train, out } => {
            let profile = synth_pump(&parse_train(&train)?)?;
            write_pump_csv(&profile, &out)?;
            eprintln!(
                "wrote pump train to {} (peak {:.3} W, energy {:.6} J)",
                out.display(),
                profile.peak_power(),
                profile.integral()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests exit 0; genuine usage errors exit 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
