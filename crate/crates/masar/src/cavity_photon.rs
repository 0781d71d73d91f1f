//! Spin-photon coupling and the cavity photon-number rate equation.
//!
//! The cavity mode is treated as a classical oscillator whose photon number
//! relaxes towards the thermal value of the 290 K bath through the intrinsic
//! and external quality factors, and exchanges photons with the X-Z spin
//! transition at the stimulated rate `B * q`. Temperatures and photon numbers
//! are related by the equipartition constant `epsilon = k_B / (h f_mode)`;
//! the Bose-Einstein occupancy is exposed for reporting only.

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, PLANCK, VACUUM_PERMEABILITY};
use crate::error::{Error, Result};

/// Cavity mode and spin-transition constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityMode {
    /// Mode frequency (Hz).
    pub f_mode: f64,
    /// Intrinsic (unloaded) quality factor.
    pub q0: f64,
    /// External quality factor set by the coupling loop.
    pub q_ex: f64,
    /// Magnetic mode volume (m^3).
    pub v_mode: f64,
    /// Spin dephasing time of the X-Z transition (s).
    pub t2: f64,
    /// Gyromagnetic ratio (rad/s/T).
    pub gamma_gyro: f64,
    /// Normalized transition probability matrix element <sigma^2>.
    pub sigma_sq: f64,
    /// Bath temperature of the lossy materials and receiver input (K).
    pub t0: f64,
}

impl Default for CavityMode {
    fn default() -> Self {
        CavityMode {
            f_mode: 1.4495e9,
            q0: 7200.0,
            q_ex: 7200.0,
            v_mode: 0.32e-6,
            t2: 2.9e-6,
            gamma_gyro: 2.0 * std::f64::consts::PI * 28e9,
            sigma_sq: 0.5,
            t0: 290.0,
        }
    }
}

impl CavityMode {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("cavity.f_mode", self.f_mode),
            ("cavity.q0", self.q0),
            ("cavity.q_ex", self.q_ex),
            ("cavity.v_mode", self.v_mode),
            ("cavity.t2", self.t2),
            ("cavity.gamma_gyro", self.gamma_gyro),
            ("cavity.t0", self.t0),
        ];
        for (name, v) in named {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.sigma_sq > 0.0 && self.sigma_sq <= 1.0) {
            return Err(Error::Config(format!(
                "cavity.sigma_sq must lie in (0, 1], got {}",
                self.sigma_sq
            )));
        }
        Ok(())
    }

    /// Angular frequency (rad/s).
    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_mode
    }

    /// Loaded cavity decay rate kappa_c = omega (1/Q0 + 1/Qex) (rad/s).
    pub fn decay_rate(&self) -> f64 {
        self.omega() * (1.0 / self.q0 + 1.0 / self.q_ex)
    }
}

/// Photons per kelvin for a mode at frequency `f`: epsilon = k_B / (h f).
pub fn photons_per_kelvin(f_mode: f64) -> f64 {
    BOLTZMANN / (PLANCK * f_mode)
}

/// Einstein B coefficient of the X-Z transition (1/s per photon).
pub fn einstein_b(mode: &CavityMode) -> Result<f64> {
    mode.validate()?;
    Ok(VACUUM_PERMEABILITY * mode.gamma_gyro.powi(2) * PLANCK * mode.f_mode * mode.t2
        * mode.sigma_sq
        / (2.0 * mode.v_mode))
}

/// Stimulated transition rate between |X> and |Z>: `W_XZ = B q`.
pub fn stimulated_rate(b: f64, q: f64) -> Result<f64> {
    if !b.is_finite() || b < 0.0 {
        return Err(Error::Domain(format!("B must be finite and >= 0, got {b}")));
    }
    if !q.is_finite() || q < 0.0 {
        return Err(Error::Domain(format!("photon number must be finite and >= 0, got {q}")));
    }
    Ok(b * q)
}

/// Dimensionless magnetic loss: `eta_bar = Q0 B (N_Z - N_X) / omega_mode`.
///
/// Positive when the spin system absorbs (N_Z > N_X), negative when it emits.
pub fn magnetic_loss(mode: &CavityMode, b: f64, n_z: f64, n_x: f64) -> f64 {
    mode.q0 * b * (n_z - n_x) / mode.omega()
}

/// Photon-number rate equation.
///
/// `dq/dt = -omega (1/Q0 + 1/Qex)(q - eps T0) + B (N_X - N_Z)(q - eps T_spin)`.
/// Both dissipation channels relax towards the bath at `mode.t0`; the spin
/// term pushes towards the (normally negligible) spin-temperature occupancy.
pub fn photon_derivative(
    q: f64,
    mode: &CavityMode,
    b: f64,
    n_x: f64,
    n_z: f64,
    t_spin: f64,
) -> f64 {
    let eps = photons_per_kelvin(mode.f_mode);
    -mode.decay_rate() * (q - eps * mode.t0) + b * (n_x - n_z) * (q - eps * t_spin)
}

/// Mode temperature of a photon number: `T = q / epsilon`.
pub fn mode_temperature(q: f64, f_mode: f64) -> f64 {
    q / photons_per_kelvin(f_mode)
}

/// Photon number of a mode temperature: `q = epsilon T`.
pub fn photons_of_temperature(t: f64, f_mode: f64) -> f64 {
    photons_per_kelvin(f_mode) * t
}

/// Bose-Einstein mean occupancy of a mode at frequency `f` and temperature `t`.
pub fn bose_occupancy(t: f64, f_mode: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("temperature must be > 0 K, got {t}")));
    }
    let x = PLANCK * f_mode / (BOLTZMANN * t);
    Ok(1.0 / x.exp_m1())
}

/// Reflection coefficient of the cavity from the magnetic loss (Eq. of the
/// critically coupled steady state): `Gamma_c = -eta_bar / (2 + eta_bar)`.
pub fn reflection_from_loss(eta_bar: f64) -> Result<f64> {
    if !eta_bar.is_finite() || eta_bar <= -2.0 {
        return Err(Error::AboveMaserThreshold { eta_bar });
    }
    Ok(-eta_bar / (2.0 + eta_bar))
}

/// Reflection coefficient from the mode temperature: `Gamma_c = T/T0 - 1`.
pub fn reflection_from_temperature(t_mode: f64, t0: f64) -> Result<f64> {
    if !(t_mode > 0.0 && t_mode <= t0) {
        return Err(Error::Domain(format!(
            "t_mode must lie in (0, {t0}] K for the cooling-branch relation, got {t_mode}"
        )));
    }
    Ok(t_mode / t0 - 1.0)
}

/// Coupling coefficient from the reflection coefficient: `k = (1+Gc)/(1-Gc)`.
pub fn coupling_from_reflection(gamma_c: f64) -> Result<f64> {
    if !gamma_c.is_finite() || gamma_c >= 1.0 {
        return Err(Error::Domain(format!(
            "reflection coefficient must be < 1, got {gamma_c}"
        )));
    }
    Ok((1.0 + gamma_c) / (1.0 - gamma_c))
}

/// Steady-state mode temperature from the magnetic loss:
/// `T_mode = (2 T0 + eta_bar T_spin) / (2 + eta_bar)`; pass `None` for the
/// simplified form that neglects the spin temperature.
pub fn mode_temperature_from_loss(eta_bar: f64, t0: f64, t_spin: Option<f64>) -> Result<f64> {
    if !eta_bar.is_finite() || eta_bar <= -2.0 {
        return Err(Error::AboveMaserThreshold { eta_bar });
    }
    let ts = t_spin.unwrap_or(0.0);
    Ok((2.0 * t0 + eta_bar * ts) / (2.0 + eta_bar))
}

/// Out-coupled maser power: `P = q h f_mode kappa_c k / (1 + k)`.
pub fn maser_output_power(q: f64, mode: &CavityMode, kappa_c: f64, k: f64) -> Result<f64> {
    for (name, v) in [("q", q), ("kappa_c", kappa_c), ("k", k)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    Ok(q * PLANCK * mode.f_mode * kappa_c * k / (1.0 + k))
}
