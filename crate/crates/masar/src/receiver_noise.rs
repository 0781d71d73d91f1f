//! Noise-wave model of the heterodyne receiver front end.
//!
//! The first LNA's noise is parameterized by (T_min, R_n/Z_0, Gamma_opt); the
//! cavity presents a source reflection Gamma_c that depends on the mode
//! temperature, and the mixer folds in image noise from the off-resonance
//! band where the coupling loop acts as a short (Gamma_c = -1). Downstream
//! stages are lumped into a Friis noise factor. The receiver output power as
//! a function of T_mode gives the calibration curve relating the measured
//! power reduction (dB) to the mode temperature, inverted by bisection.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity_photon::reflection_from_temperature;
use crate::constants::BOLTZMANN;
use crate::error::{Error, Result};

/// Noise parameters of the front-end LNA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LnaNoiseParams {
    /// Minimum noise temperature (K).
    pub t_min: f64,
    /// Noise resistance over the 50-ohm normalization impedance.
    pub rn_over_z0: f64,
    /// Optimum source reflection coefficient.
    pub gamma_opt: Complex64,
    /// Linear power gain.
    pub g_lna: f64,
}

impl Default for LnaNoiseParams {
    fn default() -> Self {
        LnaNoiseParams {
            t_min: 17.4,
            rn_over_z0: 0.022,
            gamma_opt: Complex64::new(-0.131, 0.189),
            g_lna: 32.5,
        }
    }
}

impl LnaNoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !self.t_min.is_finite() || self.t_min < 0.0 {
            return Err(Error::Config(format!(
                "receiver.lna.t_min must be finite and >= 0, got {}",
                self.t_min
            )));
        }
        if !self.rn_over_z0.is_finite() || self.rn_over_z0 < 0.0 {
            return Err(Error::Config(format!(
                "receiver.lna.rn_over_z0 must be finite and >= 0, got {}",
                self.rn_over_z0
            )));
        }
        if !(self.gamma_opt.norm() < 1.0) {
            return Err(Error::Config(format!(
                "receiver.lna.gamma_opt must have magnitude < 1, got |{}| = {}",
                self.gamma_opt,
                self.gamma_opt.norm()
            )));
        }
        if !self.g_lna.is_finite() || self.g_lna <= 0.0 {
            return Err(Error::Config(format!(
                "receiver.lna.g_lna must be finite and > 0, got {}",
                self.g_lna
            )));
        }
        Ok(())
    }
}

/// Full receiver chain as seen from the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverChain {
    pub lna: LnaNoiseParams,
    /// SAW filter bandwidth (Hz).
    pub b_saw: f64,
    /// Lumped noise factor of everything after the LNA (linear, >= 1).
    pub f_rec: f64,
    /// Lumped linear gain of everything after the LNA; cancels in delta P.
    pub g_rec: f64,
    /// Reference/bath temperature (K).
    pub t0: f64,
}

impl Default for ReceiverChain {
    fn default() -> Self {
        ReceiverChain {
            lna: LnaNoiseParams::default(),
            b_saw: 50e3,
            f_rec: 1.15,
            g_rec: 1.0,
            t0: 290.0,
        }
    }
}

impl ReceiverChain {
    pub fn validate(&self) -> Result<()> {
        self.lna.validate()?;
        if !self.b_saw.is_finite() || self.b_saw <= 0.0 {
            return Err(Error::Config(format!(
                "receiver.b_saw must be finite and > 0, got {}",
                self.b_saw
            )));
        }
        if !self.f_rec.is_finite() || self.f_rec < 1.0 {
            return Err(Error::Config(format!(
                "receiver.f_rec must be >= 1, got {}",
                self.f_rec
            )));
        }
        if !self.g_rec.is_finite() || self.g_rec <= 0.0 {
            return Err(Error::Config(format!(
                "receiver.g_rec must be finite and > 0, got {}",
                self.g_rec
            )));
        }
        if !self.t0.is_finite() || self.t0 <= 0.0 {
            return Err(Error::Config(format!("receiver.t0 must be > 0, got {}", self.t0)));
        }
        Ok(())
    }

    /// Noise temperature of the downstream stages: `(F_REC - 1) T0`.
    pub fn t_rec(&self) -> f64 {
        (self.f_rec - 1.0) * self.t0
    }
}

/// LNA noise temperature for a given source reflection (industry-standard
/// noise-parameter formula).
pub fn t_lna(lna: &LnaNoiseParams, gamma_c: Complex64, t0: f64) -> Result<f64> {
    lna.validate()?;
    let mag2 = gamma_c.norm_sqr();
    if !(mag2 < 1.0) {
        return Err(Error::Domain(format!(
            "|gamma_c| must be < 1 (formula diverges at total reflection), got {}",
            mag2.sqrt()
        )));
    }
    let one_plus_opt = (Complex64::new(1.0, 0.0) + lna.gamma_opt).norm_sqr();
    let mismatch = (gamma_c - lna.gamma_opt).norm_sqr();
    Ok(lna.t_min + 4.0 * t0 * lna.rn_over_z0 * mismatch / (one_plus_opt * (1.0 - mag2)))
}

/// Image noise temperature: the LNA sees the off-resonance cavity as a short
/// (Gamma_c = -1); since |-1 - Gopt| = |1 + Gopt| this reduces to
/// `4 T0 Rn/Z0`.
pub fn t_image(lna: &LnaNoiseParams, t0: f64) -> f64 {
    let one_plus_opt = (Complex64::new(1.0, 0.0) + lna.gamma_opt).norm_sqr();
    let short_mismatch = (Complex64::new(-1.0, 0.0) - lna.gamma_opt).norm_sqr();
    4.0 * t0 * lna.rn_over_z0 * short_mismatch / one_plus_opt
}

/// Friis cascade of (linear gain, noise factor) stages.
pub fn friis_noise_factor(stages: &[(f64, f64)]) -> Result<f64> {
    if stages.is_empty() {
        return Err(Error::Config("Friis cascade requires at least one stage".into()));
    }
    for &(g, f) in stages {
        if !(g > 0.0) || !(f >= 1.0) {
            return Err(Error::Config(format!(
                "Friis stages need gain > 0 and noise factor >= 1, got ({g}, {f})"
            )));
        }
    }
    let mut total = stages[0].1;
    let mut gain = stages[0].0;
    for &(g, f) in &stages[1..] {
        total += (f - 1.0) / gain;
        gain *= g;
    }
    Ok(total)
}

/// Bracketed content of the receiver's output-power expression, i.e. the
/// system noise temperature referred through the chain (K), without the
/// overall `G_REC k_B B_SAW` factor. `gamma_c` is the real part of the
/// cavity's reflection coefficient on the cooling branch.
fn system_noise_temperature(chain: &ReceiverChain, t_mode: f64, gamma_c: f64) -> f64 {
    let lna = &chain.lna;
    let one_plus_opt = (Complex64::new(1.0, 0.0) + lna.gamma_opt).norm_sqr();
    let mismatch = (Complex64::new(gamma_c, 0.0) - lna.gamma_opt).norm_sqr();
    let front_end = (lna.t_min + t_mode) * (1.0 - gamma_c * gamma_c)
        + 4.0 * chain.t0 * lna.rn_over_z0 * mismatch / one_plus_opt
        + t_image(lna, chain.t0);
    lna.g_lna * front_end + chain.t_rec()
}

/// Receiver output power (W) for a given mode temperature and cavity
/// reflection coefficient.
pub fn receiver_output_power(chain: &ReceiverChain, t_mode: f64, gamma_c: f64) -> Result<f64> {
    chain.validate()?;
    if !(t_mode > 0.0) {
        return Err(Error::Domain(format!("t_mode must be > 0 K, got {t_mode}")));
    }
    if !(gamma_c.abs() <= 1.0) {
        return Err(Error::Domain(format!("|gamma_c| must be <= 1, got {gamma_c}")));
    }
    Ok(chain.g_rec * BOLTZMANN * chain.b_saw * system_noise_temperature(chain, t_mode, gamma_c))
}

/// Power reduction (dB) relative to the unpumped reference
/// (T_mode = T0, Gamma_c = 0); the downstream gain cancels.
pub fn delta_p(chain: &ReceiverChain, t_mode: f64) -> Result<f64> {
    chain.validate()?;
    if !(t_mode > 0.0 && t_mode <= chain.t0) {
        return Err(Error::Domain(format!(
            "t_mode must lie in (0, {}] K on the cooling branch, got {t_mode}",
            chain.t0
        )));
    }
    let gamma_c = reflection_from_temperature(t_mode, chain.t0)?;
    let cooled = system_noise_temperature(chain, t_mode, gamma_c);
    let reference = system_noise_temperature(chain, chain.t0, 0.0);
    Ok(10.0 * (cooled / reference).log10())
}

/// Analytic T_mode -> 0 limit of [`delta_p`]: the receiver's noise floor (dB).
pub fn delta_p_floor(chain: &ReceiverChain) -> Result<f64> {
    chain.validate()?;
    // at Gamma_c = -1 the source term vanishes and the mismatch term equals
    // the image contribution
    let floor = chain.lna.g_lna * 2.0 * t_image(&chain.lna, chain.t0) + chain.t_rec();
    let reference = system_noise_temperature(chain, chain.t0, 0.0);
    Ok(10.0 * (floor / reference).log10())
}

/// Pointwise calibration curve (T_mode, delta P) over a temperature grid.
pub fn calibration_curve(chain: &ReceiverChain, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    t_grid.iter().map(|&t| delta_p(chain, t).map(|dp| (t, dp))).collect()
}

/// Mode temperature inferred from a measured power reduction, with the
/// asymmetric uncertainty interval obtained by inverting each dB bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InferredTemperature {
    /// Central value (K).
    pub t_mode: f64,
    /// Lower bound (K), from the more-negative dB bound.
    pub lower: f64,
    /// Upper bound (K), from the less-negative dB bound.
    pub upper: f64,
    /// Set when the lower dB bound fell below the noise floor and was
    /// clamped to it.
    pub lower_below_floor: bool,
    /// Achievable floor of the calibration (dB).
    pub floor_db: f64,
}

/// Invert the monotonic calibration curve by bisection to 0.01 K.
///
/// `dp_bounds` is the (upper, lower) dB uncertainty pair, upper being the
/// less negative value; a bound below the achievable floor maps to the floor
/// with `lower_below_floor` set.
pub fn invert_delta_p(
    chain: &ReceiverChain,
    dp: f64,
    dp_bounds: (f64, f64),
) -> Result<InferredTemperature> {
    chain.validate()?;
    let floor = delta_p_floor(chain)?;
    if !(dp > floor && dp <= 0.0) {
        return Err(Error::BelowNoiseFloor { dp_db: dp, floor_db: floor });
    }
    let (dp_hi, dp_lo) = dp_bounds;
    if dp_hi < dp || dp_lo > dp {
        return Err(Error::Domain(format!(
            "uncertainty bounds ({dp_hi}, {dp_lo}) dB must bracket dp = {dp} dB"
        )));
    }
    let t_mode = bisect_delta_p(chain, dp)?;
    let upper = bisect_delta_p(chain, dp_hi.min(0.0))?;
    let (lower, clamped) = if dp_lo <= floor {
        (0.0, true)
    } else {
        (bisect_delta_p(chain, dp_lo)?, false)
    };
    Ok(InferredTemperature { t_mode, lower, upper, lower_below_floor: clamped, floor_db: floor })
}

fn bisect_delta_p(chain: &ReceiverChain, target: f64) -> Result<f64> {
    if target >= 0.0 {
        return Ok(chain.t0);
    }
    let mut lo = 1e-6;
    let mut hi = chain.t0;
    // delta_p is strictly increasing in t_mode
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        if delta_p(chain, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
