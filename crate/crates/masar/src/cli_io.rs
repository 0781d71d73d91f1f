//! Configuration, CSV serialization, synthetic pump generation and the
//! pipeline entry points behind the CLI subcommands.
//!
//! The configuration is a TOML key tree whose defaults reproduce the full
//! default parameter set, so `simulate` runs faithfully with an empty config
//! file. Unknown keys are rejected. All time series are CSV with a header
//! row, LF line endings, '.' decimal separator and 17-significant-digit
//! floats so written files re-read bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cavity_photon::CavityMode;
use crate::epr_analysis::{biexp_fit, fit_minimum, spin_temperature, BiexpFit, FitMinimum};
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegrationSettings, Interpolation, PumpProfile, Trajectory};
use crate::receiver_noise::{calibration_curve, invert_delta_p, InferredTemperature, ReceiverChain};
use crate::spin_dynamics::{PumpParams, TripletRates};

/// SAW-filter group delay used by the `--time-offset` plot option (s). The
/// offset only shifts output timestamps for overlay against measured traces;
/// it never affects the computation.
pub const SAW_DELAY_S: f64 = 150e-6;

/// Default number of photo-excitable dopant molecules.
///
/// Estimate from 0.1% doping of an elliptical pumped prism (semi-axes
/// 1 mm x 0.6 mm, length 4 mm), host density 1.23 g/cm^3 and molar mass
/// 230.3 g/mol: pi * 1e-3 * 0.6e-3 * 4e-3 m^3 * 1.23e3 kg/m^3 / 0.2303
/// kg/mol * 6.022e23 /mol * 1e-3 = 2.4e16.
pub const DEFAULT_N_TOT: f64 = 2.4e16;

/// Full run configuration; defaults reproduce the reference parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub triplet: TripletRates,
    pub cavity: CavityMode,
    pub receiver: ReceiverChain,
    pub pump: PumpParams,
    /// Total number of photo-excitable molecules.
    pub n_tot: f64,
    pub integration: IntegrationSettings,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            triplet: TripletRates::default(),
            cavity: CavityMode::default(),
            receiver: ReceiverChain::default(),
            pump: PumpParams::default(),
            n_tot: DEFAULT_N_TOT,
            integration: IntegrationSettings::default(),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.triplet.validate()?;
        self.cavity.validate()?;
        self.receiver.validate()?;
        self.pump.validate()?;
        self.integration.validate()?;
        if !self.n_tot.is_finite() || self.n_tot <= 0.0 {
            return Err(Error::Config(format!("n_tot must be finite and > 0, got {}", self.n_tot)));
        }
        Ok(())
    }
}

/// Parse and validate a configuration file; an empty file yields the full
/// default configuration.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<Config> {
    let config: Config =
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
    config.validate()?;
    Ok(config)
}

pub fn serialize_config(config: &Config) -> Result<String> {
    toml::to_string_pretty(config).map_err(|e| Error::Parse(format!("config serialize: {e}")))
}

/// Pulse shape of a synthetic train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    Rectangular,
    /// Linear rise and fall of the given duration (s) inside each pulse.
    Trapezoid { rise: f64 },
}

/// Synthetic pulse-train specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseTrainSpec {
    pub n_pulses: usize,
    /// Duration of each pulse (s).
    pub duration: f64,
    /// Start-to-start interval (s).
    pub interval: f64,
    /// Total optical energy over the whole train (J).
    pub total_energy: f64,
    pub shape: PulseShape,
}

impl PulseTrainSpec {
    /// The reference experiment's train: 3 x 150 us pulses staggered at
    /// 500 us, 2.4 J per shot.
    pub fn reference() -> Self {
        PulseTrainSpec {
            n_pulses: 3,
            duration: 150e-6,
            interval: 500e-6,
            total_energy: 2.4,
            shape: PulseShape::Rectangular,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pulses == 0 {
            return Err(Error::Config("pulse train needs at least one pulse".into()));
        }
        if !(self.duration > 0.0) {
            return Err(Error::Config(format!("pulse duration must be > 0, got {}", self.duration)));
        }
        if self.n_pulses > 1 && !(self.duration < self.interval) {
            return Err(Error::Config(format!(
                "pulse duration ({}) must be shorter than the interval ({})",
                self.duration, self.interval
            )));
        }
        if !(self.total_energy > 0.0) {
            return Err(Error::Config(format!(
                "total energy must be > 0, got {}",
                self.total_energy
            )));
        }
        if let PulseShape::Trapezoid { rise } = self.shape {
            if !(rise > 0.0 && 2.0 * rise < self.duration) {
                return Err(Error::Config(format!(
                    "trapezoid rise ({rise}) must satisfy 0 < 2 rise < duration ({})",
                    self.duration
                )));
            }
        }
        Ok(())
    }
}

/// Build a pump profile whose time integral equals the train's total energy.
///
/// Rectangular pulses use zero-order-hold samples (exact square edges);
/// trapezoids use linear interpolation with the plateau power normalized so
/// the per-pulse area stays `total_energy / n_pulses`.
pub fn synth_pump(spec: &PulseTrainSpec) -> Result<PumpProfile> {
    spec.validate()?;
    let energy_per_pulse = spec.total_energy / spec.n_pulses as f64;
    let mut samples = Vec::new();
    match spec.shape {
        PulseShape::Rectangular => {
            let power = energy_per_pulse / spec.duration;
            for i in 0..spec.n_pulses {
                let t0 = i as f64 * spec.interval;
                samples.push((t0, power));
                samples.push((t0 + spec.duration, 0.0));
            }
            PumpProfile::new(samples, Interpolation::ZeroOrderHold)
        }
        PulseShape::Trapezoid { rise } => {
            let power = energy_per_pulse / (spec.duration - rise);
            for i in 0..spec.n_pulses {
                let t0 = i as f64 * spec.interval;
                samples.push((t0, 0.0));
                samples.push((t0 + rise, power));
                samples.push((t0 + spec.duration - rise, power));
                samples.push((t0 + spec.duration, 0.0));
            }
            PumpProfile::new(samples, Interpolation::Linear)
        }
    }
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Trajectory CSV column order (header row).
pub const TRAJECTORY_HEADER: &str =
    "t_s,S0,S1,NX,NY,NZ,q,T_mode_K,eta_bar,gamma_c,delta_p_dB,P_maser_W";

/// Serialize a trajectory; `time_offset` (s) is added to the time column only.
pub fn trajectory_csv(trajectory: &Trajectory, time_offset: f64) -> String {
    let mut out = String::with_capacity(trajectory.samples.len() * 220 + 128);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &trajectory.samples {
        let cols = [
            s.t + time_offset,
            s.spin.s0,
            s.spin.s1,
            s.spin.n_x,
            s.spin.n_y,
            s.spin.n_z,
            s.q,
            s.t_mode,
            s.eta_bar,
            s.gamma_c,
            s.delta_p_db,
            s.p_maser_w,
        ];
        let mut first = true;
        for c in cols {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(c));
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Read a trajectory CSV back as raw rows in [`TRAJECTORY_HEADER`] order.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<[f64; 12]>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("trajectory CSV is empty".into()))?;
    if header != TRAJECTORY_HEADER {
        return Err(Error::Parse(format!("unexpected trajectory header '{header}'")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = [0.0; 12];
        let mut fields = line.split(',');
        for (j, slot) in row.iter_mut().enumerate() {
            let field = fields
                .next()
                .ok_or_else(|| Error::Parse(format!("trajectory line {}: missing column {j}", i + 2)))?;
            *slot = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("trajectory line {}: bad value '{field}'", i + 2)))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Run the coupled simulation and write the trajectory CSV.
pub fn run_simulate(
    config: &Config,
    pump: &PumpProfile,
    out_path: &Path,
    time_offset: bool,
) -> Result<Trajectory> {
    config.validate()?;
    let trajectory = integrate(
        &config.triplet,
        &config.cavity,
        &config.pump,
        pump,
        &config.receiver,
        config.n_tot,
        &config.integration,
    )?;
    let offset = if time_offset { SAW_DELAY_S } else { 0.0 };
    fs::write(out_path, trajectory_csv(&trajectory, offset))?;
    Ok(trajectory)
}

/// Evaluate the calibration curve over a grid and write it as CSV sorted by
/// ascending temperature.
pub fn run_calibrate(config: &Config, grid: &[f64], out_path: &Path) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    let curve = calibration_curve(&config.receiver, &grid)?;
    let mut out = String::from("T_mode_K,delta_p_dB\n");
    for &(t, dp) in &curve {
        let _ = writeln!(out, "{},{}", fmt_f64(t), fmt_f64(dp));
    }
    fs::write(out_path, out)?;
    Ok(curve)
}

/// Default calibration grid: 1 K steps from 1 K up to the bath temperature.
pub fn default_grid(t0: f64) -> Vec<f64> {
    let n = t0.floor() as usize;
    (1..=n).map(|i| i as f64).collect()
}

/// Parse a `lo:hi:n` grid specification.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("grid must be lo:hi:n, got '{spec}'")));
    }
    let lo: f64 = parts[0].parse().map_err(|_| Error::Parse(format!("bad grid lo '{}'", parts[0])))?;
    let hi: f64 = parts[1].parse().map_err(|_| Error::Parse(format!("bad grid hi '{}'", parts[1])))?;
    let n: usize = parts[2].parse().map_err(|_| Error::Parse(format!("bad grid n '{}'", parts[2])))?;
    if n < 1 || !(hi >= lo) {
        return Err(Error::Parse(format!("grid needs hi >= lo and n >= 1, got '{spec}'")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// A measured (or simulated) cooling signal: time vs power reduction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalSeries {
    pub t: Vec<f64>,
    pub dp_db: Vec<f64>,
    pub sigma_db: Option<Vec<f64>>,
}

/// Read a signal CSV with columns `t_s,dp_dB[,sigma_dB]`.
pub fn read_signal_csv(path: &Path) -> Result<SignalSeries> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("signal CSV is empty".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "t_s" || cols[1] != "dp_dB" {
        return Err(Error::Parse(format!(
            "signal CSV must start with columns t_s,dp_dB, got '{header}'"
        )));
    }
    let has_sigma = cols.len() >= 3 && cols[2] == "sigma_dB";
    let mut series = SignalSeries {
        sigma_db: has_sigma.then(Vec::new),
        ..Default::default()
    };
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let need = if has_sigma { 3 } else { 2 };
        if fields.len() < need {
            return Err(Error::Parse(format!("signal CSV line {}: too few fields", i + 2)));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("signal CSV line {}: bad {what} '{s}'", i + 2)))
        };
        series.t.push(parse(fields[0], "t_s")?);
        series.dp_db.push(parse(fields[1], "dp_dB")?);
        if let Some(sigmas) = series.sigma_db.as_mut() {
            sigmas.push(parse(fields[2], "sigma_dB")?);
        }
    }
    Ok(series)
}

/// Fit report produced by [`run_fit`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub a1: f64,
    pub tau1_s: f64,
    pub a2: f64,
    pub tau2_s: f64,
    pub offset_db: f64,
    pub covariance: [[f64; 5]; 5],
    pub degenerate: bool,
    pub iterations: usize,
    pub weighted_sse: f64,
    pub minimum: FitMinimum,
    /// ΔP at the minimum with its 95% band edges (dB).
    pub dp_db: f64,
    pub dp_upper_db: f64,
    pub dp_lower_db: f64,
    pub inferred: InferredTemperature,
}

/// Fit a cooling signal, locate the maximum cooling depth and convert it to
/// a mode temperature with an asymmetric confidence interval.
pub fn run_fit(config: &Config, signal: &SignalSeries, weighted: bool) -> Result<(BiexpFit, FitReport)> {
    config.validate()?;
    let n = signal.t.len();
    let sigma: Vec<f64> = match (&signal.sigma_db, weighted) {
        (Some(s), true) => s.clone(),
        _ => vec![1.0; n],
    };
    let fit = biexp_fit(&signal.t, &signal.dp_db, &sigma)?;
    let minimum = fit_minimum(&fit, (signal.t[0], signal.t[n - 1]))?;
    let dp = minimum.y_min.min(0.0);
    let dp_upper = minimum.y_upper.min(0.0);
    let dp_lower = minimum.y_lower;
    let inferred = invert_delta_p(&config.receiver, dp, (dp_upper, dp_lower))?;
    let report = FitReport {
        a1: fit.a1,
        tau1_s: fit.tau1,
        a2: fit.a2,
        tau2_s: fit.tau2,
        offset_db: fit.offset,
        covariance: fit.covariance,
        degenerate: fit.degenerate,
        iterations: fit.iterations,
        weighted_sse: fit.sse,
        minimum,
        dp_db: dp,
        dp_upper_db: dp_upper,
        dp_lower_db: dp_lower,
        inferred,
    };
    Ok((fit, report))
}

/// Format a spin temperature the way the CLI prints it; infinities are the
/// literal token `inf` with a sign, never a large float.
pub fn format_spin_temperature(n_x: f64, n_z: f64, f_xz: f64) -> Result<String> {
    let r = spin_temperature(n_x, n_z, f_xz)?;
    let temp = if r.temperature.is_infinite() {
        if r.temperature > 0.0 { "+inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{:+.6e} K", r.temperature)
    };
    Ok(format!("T_X-Z = {temp} (dN/N = {:+.6e})", r.delta_n_over_n))
}

/// Write a pump profile as CSV (`t_s,power_W`).
pub fn write_pump_csv(profile: &PumpProfile, path: &Path) -> Result<()> {
    let mut out = String::from("t_s,power_W\n");
    for &(t, p) in &profile.samples {
        let _ = writeln!(out, "{},{}", fmt_f64(t), fmt_f64(p));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a pump profile CSV (`t_s,power_W`) with the given interpolation rule.
pub fn read_pump_csv(path: &Path, interpolation: Interpolation) -> Result<PumpProfile> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("pump CSV is empty".into()))?;
    if header.split(',').count() < 2 {
        return Err(Error::Parse(format!("pump CSV needs t_s,power_W columns, got '{header}'")));
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let t: f64 = it
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("pump CSV line {}: bad time", i + 2)))?;
        let p: f64 = it
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("pump CSV line {}: bad power", i + 2)))?;
        samples.push((t, p));
    }
    PumpProfile::new(samples, interpolation)
}
