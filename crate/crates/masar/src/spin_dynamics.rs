//! Five-level rate-equation model of photo-excited pentacene.
//!
//! States are ordered (S0, S1, N_X, N_Y, N_Z): the singlet ground state, the
//! first excited singlet and the three zero-field sub-levels of the lowest
//! triplet. Intersystem crossing feeds the sub-levels directly from S1 at
//! `k_isc` split by the normalized ratios `p_x : p_y : p_z`; the intermediate
//! triplet state is not represented. Only the X-Z pair is microwave driven,
//! at the stimulated rate `w_xz`.

use serde::{Deserialize, Serialize};

use crate::constants::{PLANCK, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Number of spin states carried by the model.
pub const STATE_DIM: usize = 5;

/// Kinetic parameters of the pentacene model (all rates in 1/s).
///
/// Defaults are the room-temperature best estimates for pentacene doped at
/// ~0.1% into p-terphenyl.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TripletRates {
    /// Spontaneous emission S1 -> S0.
    pub k_sp: f64,
    /// Intersystem crossing S1 -> T1 (total over sub-levels).
    pub k_isc: f64,
    /// Normalized splitting ratios into |X>, |Y>, |Z>; must sum to 1.
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    /// Spin-lattice relaxation rates between sub-level pairs.
    pub gamma_xy: f64,
    pub gamma_yz: f64,
    pub gamma_xz: f64,
    /// Sub-level decay rates to S0.
    pub k_x: f64,
    pub k_y: f64,
    pub k_z: f64,
}

impl Default for TripletRates {
    fn default() -> Self {
        TripletRates {
            k_sp: 4.2e7,
            k_isc: 6.9e7,
            p_x: 0.76,
            p_y: 0.16,
            p_z: 0.08,
            gamma_xy: 0.4e4,
            gamma_yz: 2.2e4,
            gamma_xz: 1.1e4,
            k_x: 2.8e4,
            k_y: 0.6e4,
            k_z: 0.2e4,
        }
    }
}

impl TripletRates {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("triplet.k_sp", self.k_sp),
            ("triplet.k_isc", self.k_isc),
            ("triplet.p_x", self.p_x),
            ("triplet.p_y", self.p_y),
            ("triplet.p_z", self.p_z),
            ("triplet.gamma_xy", self.gamma_xy),
            ("triplet.gamma_yz", self.gamma_yz),
            ("triplet.gamma_xz", self.gamma_xz),
            ("triplet.k_x", self.k_x),
            ("triplet.k_y", self.k_y),
            ("triplet.k_z", self.k_z),
        ];
        for (name, v) in named {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        let sum = self.p_x + self.p_y + self.p_z;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "triplet splitting ratios must satisfy p_x + p_y + p_z = 1 within 1e-12, got {sum}"
            )));
        }
        Ok(())
    }

    /// Largest total rate appearing on the diagonal of the rate matrix for a
    /// given pumping parameter, together with a human-readable name of the
    /// limiting combination. Used by the integrator's step-size guard.
    pub fn max_rate(&self, xi: f64) -> (f64, &'static str) {
        let candidates = [
            (xi, "xi (ground-state pumping)"),
            (xi + self.k_sp + self.k_isc, "xi + k_sp + k_isc (S1 depletion)"),
            (self.k_x + self.gamma_xy + self.gamma_xz, "k_x + gamma_xy + gamma_xz"),
            (self.k_y + self.gamma_xy + self.gamma_yz, "k_y + gamma_xy + gamma_yz"),
            (self.k_z + self.gamma_xz + self.gamma_yz, "k_z + gamma_xz + gamma_yz"),
        ];
        let mut best = candidates[0];
        for c in candidates {
            if c.0 > best.0 {
                best = c;
            }
        }
        best
    }
}

/// Populations in absolute molecule counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpinState {
    pub s0: f64,
    pub s1: f64,
    pub n_x: f64,
    pub n_y: f64,
    pub n_z: f64,
}

impl SpinState {
    /// All molecules in the ground state.
    pub fn ground(n_tot: f64) -> Self {
        SpinState { s0: n_tot, ..Default::default() }
    }

    pub fn from_array(a: [f64; STATE_DIM]) -> Self {
        SpinState { s0: a[0], s1: a[1], n_x: a[2], n_y: a[3], n_z: a[4] }
    }

    pub fn to_array(self) -> [f64; STATE_DIM] {
        [self.s0, self.s1, self.n_x, self.n_y, self.n_z]
    }

    pub fn total(&self) -> f64 {
        self.s0 + self.s1 + self.n_x + self.n_y + self.n_z
    }
}

/// Optical pumping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpParams {
    /// Pump wavelength (m).
    pub lambda_p: f64,
    /// Absorption cross-section of the dopant (m^2).
    pub sigma_a: f64,
    /// Beam cross-section inside the crystal (m^2).
    pub area_p: f64,
    /// Path length through the crystal (m).
    pub length_l: f64,
    /// Optical absorption coefficient (1/m); required when `bleached` is false.
    pub alpha: Option<f64>,
    /// Use the bleached (optically thin) approximation.
    pub bleached: bool,
}

impl Default for PumpParams {
    fn default() -> Self {
        PumpParams {
            lambda_p: 590e-9,
            sigma_a: 2e-21, // 2e-17 cm^2
            area_p: 1.9e-6,
            length_l: 4e-3,
            alpha: None,
            bleached: true,
        }
    }
}

impl PumpParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("pump.lambda_p", self.lambda_p),
            ("pump.sigma_a", self.sigma_a),
            ("pump.area_p", self.area_p),
            ("pump.length_l", self.length_l),
        ];
        for (name, v) in named {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !self.bleached {
            match self.alpha {
                Some(a) if a.is_finite() && a > 0.0 => {}
                Some(a) => {
                    return Err(Error::Config(format!("pump.alpha must be finite and > 0, got {a}")))
                }
                None => {
                    return Err(Error::Config(
                        "pump.alpha is required when pump.bleached is false".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// Optical pumping parameter xi (1/s) for a given instantaneous power (W).
///
/// In the bleached (optically thin) regime the per-molecule rate is
/// `xi = lambda_p * sigma_a * P / (h c A_p)`; otherwise the full expression
/// with the crystal's absorption coefficient is used.
pub fn pump_rate(pump: &PumpParams, power: f64) -> Result<f64> {
    pump.validate()?;
    if !power.is_finite() || power < 0.0 {
        return Err(Error::Domain(format!("pump power must be finite and >= 0, got {power}")));
    }
    let xi = if pump.bleached {
        pump.lambda_p * pump.sigma_a * power / (PLANCK * SPEED_OF_LIGHT * pump.area_p)
    } else {
        let alpha = pump.alpha.expect("validated above");
        // exp_m1 keeps full precision in the optically thin limit
        pump.lambda_p / (PLANCK * SPEED_OF_LIGHT * pump.length_l * pump.area_p)
            * power
            * (-(-pump.length_l * alpha).exp_m1())
            * pump.sigma_a
            / alpha
    };
    Ok(xi)
}

/// Assemble the 5x5 rate matrix (row-major, state order S0, S1, X, Y, Z).
///
/// Every column sums to zero given `p_x + p_y + p_z = 1`, so total population
/// is conserved by construction.
pub fn rate_matrix(rates: &TripletRates, xi: f64, w_xz: f64) -> Result<[[f64; 5]; 5]> {
    rates.validate()?;
    if !xi.is_finite() || xi < 0.0 {
        return Err(Error::Domain(format!("xi must be finite and >= 0, got {xi}")));
    }
    if !w_xz.is_finite() || w_xz < 0.0 {
        return Err(Error::Domain(format!("w_xz must be finite and >= 0, got {w_xz}")));
    }
    let r = rates;
    Ok([
        [-xi, xi + r.k_sp, r.k_x, r.k_y, r.k_z],
        [xi, -(xi + r.k_sp + r.k_isc), 0.0, 0.0, 0.0],
        [
            0.0,
            r.p_x * r.k_isc,
            -(r.k_x + r.gamma_xy + r.gamma_xz + w_xz),
            r.gamma_xy,
            r.gamma_xz + w_xz,
        ],
        [
            0.0,
            r.p_y * r.k_isc,
            r.gamma_xy,
            -(r.k_y + r.gamma_xy + r.gamma_yz),
            r.gamma_yz,
        ],
        [
            0.0,
            r.p_z * r.k_isc,
            r.gamma_xz + w_xz,
            r.gamma_yz,
            -(r.k_z + r.gamma_xz + r.gamma_yz + w_xz),
        ],
    ])
}

/// Time derivative of the populations: `matrix * state`.
pub fn spin_derivative(state: &SpinState, matrix: &[[f64; 5]; 5]) -> SpinState {
    let v = state.to_array();
    let mut out = [0.0; STATE_DIM];
    for (row, o) in matrix.iter().zip(out.iter_mut()) {
        *o = row.iter().zip(v.iter()).map(|(m, x)| m * x).sum();
    }
    SpinState::from_array(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Independent hand check of the bleached pump-rate arithmetic:
    // 590e-9 * 2e-21 / (6.62607015e-34 * 2.99792458e8 * 1.9e-6) = 3126.45...
    const XI_PER_WATT: f64 = 3126.4513;

    #[test]
    fn pump_rate_bleached_one_watt() {
        let xi = pump_rate(&PumpParams::default(), 1.0).unwrap();
        assert_relative_eq!(xi, XI_PER_WATT, max_relative = 1e-5);
        // close to the quoted 3.13e3 1/s
        assert_relative_eq!(xi, 3.13e3, max_relative = 2e-3);
    }

    #[test]
    fn pump_rate_zero_power() {
        assert_eq!(pump_rate(&PumpParams::default(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn pump_rate_pulse_train_mean_power() {
        // 2.4 J over 3 x 150 us pulses -> 5333.3 W in-pulse
        let p = 2.4 / (3.0 * 150e-6);
        let xi = pump_rate(&PumpParams::default(), p).unwrap();
        assert_relative_eq!(xi, 1.67e7, max_relative = 2e-3);
    }

    #[test]
    fn pump_rate_negative_power_rejected() {
        assert!(matches!(pump_rate(&PumpParams::default(), -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn pump_rate_full_form_needs_alpha() {
        let pump = PumpParams { bleached: false, ..Default::default() };
        assert!(matches!(pump_rate(&pump, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn pump_rate_full_form_approaches_bleached_limit() {
        // 1 - exp(-l a) -> l a as a -> 0, so the full form tends to the
        // bleached expression.
        let bleached = pump_rate(&PumpParams::default(), 1.0).unwrap();
        for (alpha, tol) in [(10.0, 0.05), (0.1, 1e-3), (1e-4, 1e-6)] {
            let pump = PumpParams { bleached: false, alpha: Some(alpha), ..Default::default() };
            let full = pump_rate(&pump, 1.0).unwrap();
            assert!(full <= bleached);
            assert_relative_eq!(full, bleached, max_relative = tol);
        }
    }

    #[test]
    fn rate_matrix_zero_inputs_zero_matrix() {
        let rates = TripletRates {
            k_sp: 0.0,
            k_isc: 0.0,
            gamma_xy: 0.0,
            gamma_yz: 0.0,
            gamma_xz: 0.0,
            k_x: 0.0,
            k_y: 0.0,
            k_z: 0.0,
            ..Default::default()
        };
        let m = rate_matrix(&rates, 0.0, 0.0).unwrap();
        for row in m {
            for x in row {
                assert_eq!(x, 0.0);
            }
        }
    }

    #[test]
    fn rate_matrix_columns_sum_to_zero() {
        let m = rate_matrix(&TripletRates::default(), 1.7e7, 3.2e5).unwrap();
        let scale = m.iter().flatten().fold(0.0f64, |a, &x| a.max(x.abs()));
        for c in 0..5 {
            let sum: f64 = (0..5).map(|r| m[r][c]).sum();
            assert_abs_diff_eq!(sum, 0.0, epsilon = 1e-12 * scale);
        }
    }

    #[test]
    fn rate_matrix_isc_feed_entry() {
        // (row N_X, col S1) = p_x * k_isc = 0.76 * 6.9e7
        let m = rate_matrix(&TripletRates::default(), 0.0, 0.0).unwrap();
        assert_relative_eq!(m[2][1], 5.244e7, max_relative = 1e-12);
    }

    #[test]
    fn rate_matrix_rejects_negative_inputs() {
        let rates = TripletRates::default();
        assert!(rate_matrix(&rates, -1.0, 0.0).is_err());
        assert!(rate_matrix(&rates, 0.0, -1.0).is_err());
    }

    #[test]
    fn spin_derivative_zero_state() {
        let m = rate_matrix(&TripletRates::default(), 1e3, 1e2).unwrap();
        let d = spin_derivative(&SpinState::default(), &m);
        assert_eq!(d.to_array(), [0.0; 5]);
    }

    #[test]
    fn spin_derivative_pure_ground_state_only_pumped() {
        let n_tot = 2.4e16;
        let xi = 3.1e3;
        let m = rate_matrix(&TripletRates::default(), xi, 0.0).unwrap();
        let d = spin_derivative(&SpinState::ground(n_tot), &m);
        assert_relative_eq!(d.s0, -xi * n_tot, max_relative = 1e-14);
        assert_relative_eq!(d.s1, xi * n_tot, max_relative = 1e-14);
        assert_eq!(d.n_x, 0.0);
        assert_eq!(d.n_y, 0.0);
        assert_eq!(d.n_z, 0.0);
    }

    #[test]
    fn spin_derivative_component_sum_is_zero() {
        let m = rate_matrix(&TripletRates::default(), 5e6, 2e4).unwrap();
        let s = SpinState { s0: 1e15, s1: 3e14, n_x: 5e15, n_y: 1e15, n_z: 4e15 };
        let d = spin_derivative(&s, &m);
        let scale = d.to_array().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        assert_abs_diff_eq!(d.total(), 0.0, epsilon = 1e-12 * scale);
    }

    #[test]
    fn early_time_sublevel_ordering_matches_isc_ratios() {
        // Brute-force Euler oracle at h = 1 ns: shortly after an impulse that
        // leaves everything ISC-fed, the sub-levels order as N_X > N_Y > N_Z.
        let rates = TripletRates::default();
        let m = rate_matrix(&rates, 0.0, 0.0).unwrap();
        let mut y = SpinState { s0: 0.0, s1: 1e16, n_x: 0.0, n_y: 0.0, n_z: 0.0 };
        let h = 1e-9;
        for _ in 0..2000 {
            // 2 us
            let d = spin_derivative(&y, &m);
            let a = y.to_array();
            let da = d.to_array();
            let mut next = [0.0; 5];
            for i in 0..5 {
                next[i] = a[i] + h * da[i];
            }
            y = SpinState::from_array(next);
        }
        assert!(y.n_x > y.n_y && y.n_y > y.n_z);
    }

    #[test]
    fn splitting_ratio_normalization_enforced() {
        let rates = TripletRates { p_x: 0.7, ..Default::default() };
        assert!(matches!(rates.validate(), Err(Error::Config(_))));
    }
}
