//! Fixed-step classical RK4 integration of the coupled spin + photon system.
//!
//! The state vector is (S0, S1, N_X, N_Y, N_Z, q). The pump power enters
//! through a sampled [`PumpProfile`]; the stimulated rate `W_XZ = B q` couples
//! the photon number back into the spin rate matrix at every stage
//! evaluation. Trajectories are decimated to a configurable stride and carry
//! the derived channels (T_mode, eta_bar, Gamma_c, delta P, P_maser) per
//! retained sample.

use serde::{Deserialize, Serialize};

use crate::cavity_photon::{
    self, einstein_b, magnetic_loss, mode_temperature, photon_derivative, photons_per_kelvin,
    reflection_from_loss, CavityMode,
};
use crate::error::{Error, Result};
use crate::receiver_noise::{delta_p, ReceiverChain};
use crate::spin_dynamics::{pump_rate, rate_matrix, spin_derivative, PumpParams, SpinState, TripletRates};

/// Interpolation rule between pump samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Piecewise-linear between samples (measured traces).
    #[default]
    Linear,
    /// Hold the previous sample (square synthetic pulses).
    ZeroOrderHold,
}

/// Sampled instantaneous optical pump power P(t); zero outside the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpProfile {
    /// Ordered (time in s, power in W) samples; times strictly increasing.
    pub samples: Vec<(f64, f64)>,
    pub interpolation: Interpolation,
}

impl PumpProfile {
    pub fn new(samples: Vec<(f64, f64)>, interpolation: Interpolation) -> Result<Self> {
        let profile = PumpProfile { samples, interpolation };
        profile.validate()?;
        Ok(profile)
    }

    /// The always-off pump.
    pub fn off() -> Self {
        PumpProfile { samples: Vec::new(), interpolation: Interpolation::Linear }
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Config(format!(
                    "pump sample times must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(t, p) in &self.samples {
            if !t.is_finite() || !p.is_finite() || p < 0.0 {
                return Err(Error::Config(format!(
                    "pump samples must be finite with power >= 0, got ({t}, {p})"
                )));
            }
        }
        Ok(())
    }

    /// Instantaneous power at time `t` (W).
    pub fn power_at(&self, t: f64) -> f64 {
        let s = &self.samples;
        if s.is_empty() || t < s[0].0 || t > s[s.len() - 1].0 {
            return 0.0;
        }
        let idx = s.partition_point(|&(ts, _)| ts <= t);
        if idx == 0 {
            return s[0].1;
        }
        if idx == s.len() {
            return s[s.len() - 1].1;
        }
        let (t0, p0) = s[idx - 1];
        let (t1, p1) = s[idx];
        match self.interpolation {
            Interpolation::ZeroOrderHold => p0,
            Interpolation::Linear => p0 + (p1 - p0) * (t - t0) / (t1 - t0),
        }
    }

    /// Peak sampled power (W).
    pub fn peak_power(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |a, &(_, p)| a.max(p))
    }

    /// Time integral of the profile (J) under its interpolation rule.
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for w in self.samples.windows(2) {
            let dt = w[1].0 - w[0].0;
            acc += match self.interpolation {
                Interpolation::Linear => 0.5 * (w[0].1 + w[1].1) * dt,
                Interpolation::ZeroOrderHold => w[0].1 * dt,
            };
        }
        acc
    }
}

/// Integration settings for the coupled system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationSettings {
    /// Fixed step size (s).
    pub h: f64,
    /// Start time (s).
    pub t_start: f64,
    /// End time (s).
    pub t_end: f64,
    /// Keep every `stride`-th step in the output trajectory.
    pub stride: usize,
    /// Spin temperature entering the photon equation (K); the steady-state
    /// spin term is negligible during masing and cooling, so it defaults to 0
    /// and is retained only for sensitivity studies.
    pub t_spin: f64,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        // h must satisfy h <= 1/(10 max rate); with Table values and the
        // 2.4 J pulse train the S1 depletion rate caps h just below 0.8 ns.
        IntegrationSettings { h: 0.5e-9, t_start: 0.0, t_end: 3e-3, stride: 2000, t_spin: 0.0 }
    }
}

impl IntegrationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("integration.h must be > 0, got {}", self.h)));
        }
        if !(self.t_end > self.t_start) {
            return Err(Error::Config(format!(
                "integration span must be non-empty, got ({}, {})",
                self.t_start, self.t_end
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("integration.stride must be >= 1".into()));
        }
        if !(self.t_spin >= 0.0 && self.t_spin.is_finite()) {
            return Err(Error::Config(format!(
                "integration.t_spin must be finite and >= 0, got {}",
                self.t_spin
            )));
        }
        Ok(())
    }
}

/// One retained trajectory sample with its derived channels.
///
/// `gamma_c` and `delta_p_db` are `NaN` where their defining relations do not
/// apply (masing side of the threshold, mode hotter than the bath).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub spin: SpinState,
    pub q: f64,
    pub t_mode: f64,
    pub eta_bar: f64,
    pub gamma_c: f64,
    pub delta_p_db: f64,
    pub p_maser_w: f64,
}

/// Decimated output of [`integrate`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// Step size the integration actually used (s).
    pub h: f64,
    pub stride: usize,
}

impl Trajectory {
    pub fn min_t_mode(&self) -> f64 {
        self.samples.iter().fold(f64::INFINITY, |a, s| a.min(s.t_mode))
    }
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> Result<[f64; N]> {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &add_scaled(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &add_scaled(y, &k2, 0.5 * h));
    let k4 = f(t + h, &add_scaled(y, &k3, h));
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if !out[i].is_finite() {
            return Err(Error::Numerical {
                t,
                message: format!("non-finite state component {i} after RK4 step"),
            });
        }
    }
    Ok(out)
}

fn add_scaled<const N: usize>(y: &[f64; N], k: &[f64; N], s: f64) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + s * k[i];
    }
    out
}

/// Integrate the coupled 6-state system under a time-dependent pump.
///
/// Initial condition: all molecules in S0 and the photon number at the
/// thermal value `epsilon T0`. The step size must satisfy
/// `h <= 1 / (10 max rate)` where the maximum is over the rate-matrix
/// diagonal at the pump's peak power; violating it is a configuration error
/// naming the limiting rate.
pub fn integrate(
    rates: &TripletRates,
    mode: &CavityMode,
    pump_params: &PumpParams,
    pump: &PumpProfile,
    chain: &ReceiverChain,
    n_tot: f64,
    settings: &IntegrationSettings,
) -> Result<Trajectory> {
    rates.validate()?;
    mode.validate()?;
    pump_params.validate()?;
    pump.validate()?;
    chain.validate()?;
    settings.validate()?;
    if !n_tot.is_finite() || n_tot <= 0.0 {
        return Err(Error::Config(format!("n_tot must be finite and > 0, got {n_tot}")));
    }

    let xi_peak = pump_rate(pump_params, pump.peak_power())?;
    let (max_rate, limiting) = rates.max_rate(xi_peak);
    if max_rate > 0.0 && settings.h > 1.0 / (10.0 * max_rate) {
        return Err(Error::Config(format!(
            "step size h = {:.3e} s exceeds 1/(10 max rate) = {:.3e} s; limiting rate is {} = {:.3e} 1/s",
            settings.h,
            1.0 / (10.0 * max_rate),
            limiting,
            max_rate
        )));
    }

    let b = einstein_b(mode)?;
    let eps = photons_per_kelvin(mode.f_mode);
    let q_thermal = eps * mode.t0;

    let n_steps = ((settings.t_end - settings.t_start) / settings.h).round() as u64;
    let mut y: [f64; 6] = [n_tot, 0.0, 0.0, 0.0, 0.0, q_thermal];
    let mut t = settings.t_start;

    let mut derivative = |t: f64, y: &[f64; 6]| -> [f64; 6] {
        let power = pump.power_at(t);
        let xi = pump_rate(pump_params, power).unwrap_or(f64::NAN);
        let w_xz = (b * y[5]).max(0.0);
        let m = match rate_matrix(rates, xi, w_xz) {
            Ok(m) => m,
            Err(_) => return [f64::NAN; 6],
        };
        let spin = SpinState::from_array([y[0], y[1], y[2], y[3], y[4]]);
        let ds = spin_derivative(&spin, &m).to_array();
        let dq = photon_derivative(y[5], mode, b, y[2], y[4], settings.t_spin);
        [ds[0], ds[1], ds[2], ds[3], ds[4], dq]
    };

    let mut trajectory = Trajectory {
        samples: Vec::with_capacity(n_steps as usize / settings.stride + 2),
        h: settings.h,
        stride: settings.stride,
    };
    trajectory.samples.push(sample_at(t, &y, mode, chain, b));

    for step in 1..=n_steps {
        y = rk4_step(&mut derivative, t, &y, settings.h)?;
        t = settings.t_start + step as f64 * settings.h;
        if y[5] < 0.0 {
            // photon number may undershoot by rounding only
            if y[5] < -1e-9 * q_thermal {
                return Err(Error::Numerical {
                    t,
                    message: format!("photon number went negative ({:.3e})", y[5]),
                });
            }
            y[5] = 0.0;
        }
        if step % settings.stride as u64 == 0 || step == n_steps {
            trajectory.samples.push(sample_at(t, &y, mode, chain, b));
        }
    }
    Ok(trajectory)
}

fn sample_at(
    t: f64,
    y: &[f64; 6],
    mode: &CavityMode,
    chain: &ReceiverChain,
    b: f64,
) -> TrajectorySample {
    let spin = SpinState::from_array([y[0], y[1], y[2], y[3], y[4]]);
    let q = y[5];
    let t_mode = mode_temperature(q, mode.f_mode);
    let eta_bar = magnetic_loss(mode, b, spin.n_z, spin.n_x);
    let gamma_c = reflection_from_loss(eta_bar).unwrap_or(f64::NAN);
    let delta_p_db = delta_p(chain, t_mode).unwrap_or(f64::NAN);
    // ambient critical coupling: k = 1, kappa_c = omega / Q_L
    let p_maser_w =
        cavity_photon::maser_output_power(q.max(0.0), mode, mode.decay_rate(), 1.0)
            .unwrap_or(f64::NAN);
    TrajectorySample { t, spin, q, t_mode, eta_bar, gamma_c, delta_p_db, p_maser_w }
}
