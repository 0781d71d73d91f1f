//! Zero-field spin temperature, TR-EPR trajectory simulation and
//! bi-exponential fitting with linearized confidence bands.

use nalgebra::{SMatrix, SVector};
use serde::Serialize;

use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{Error, Result};
use crate::integrator::{rk4_step, IntegrationSettings, PumpProfile};
use crate::spin_dynamics::{pump_rate, rate_matrix, spin_derivative, PumpParams, SpinState, TripletRates};

const N_PARAMS: usize = 5;

/// Boltzmann-equivalent temperature of the X-Z two-level populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinTemperatureResult {
    /// Signed temperature (K); negative means population inversion,
    /// `+inf` when the populations are equal.
    pub temperature: f64,
    /// (N_Z - N_X) / (N_Z + N_X).
    pub delta_n_over_n: f64,
}

/// Spin temperature of the X-Z transition:
/// `T = h f / (2 k_B atanh(dN/N))` with `dN = N_Z - N_X`.
pub fn spin_temperature(n_x: f64, n_z: f64, f_xz: f64) -> Result<SpinTemperatureResult> {
    if !(n_x >= 0.0) || !(n_z >= 0.0) {
        return Err(Error::Domain(format!(
            "populations must be >= 0, got n_x = {n_x}, n_z = {n_z}"
        )));
    }
    if n_x == 0.0 && n_z == 0.0 {
        return Err(Error::Domain("spin temperature undefined for empty sub-levels".into()));
    }
    let ratio = (n_z - n_x) / (n_z + n_x);
    let temperature = if ratio == 0.0 {
        f64::INFINITY
    } else {
        PLANCK * f_xz / (2.0 * BOLTZMANN * ratio.atanh())
    };
    Ok(SpinTemperatureResult { temperature, delta_n_over_n: ratio })
}

/// One sample of a cavity-decoupled TR-EPR run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EprSample {
    pub t: f64,
    /// N_Z - N_X (molecule count; negative = emissive).
    pub delta_n: f64,
    /// N_Z + N_X.
    pub n: f64,
    /// Spin temperature at this sample (K; `inf` where dN = 0 or N = 0).
    pub t_xz: f64,
}

/// Result of [`tr_epr_simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrEprSeries {
    pub samples: Vec<EprSample>,
    /// First time where the transition switches from emissive (dN < 0) to
    /// absorptive (dN > 0), linearly interpolated between samples.
    pub crossing_time: Option<f64>,
    /// Spin temperature at the strongest emissive excursion (K, negative).
    pub emissive_peak_temperature: f64,
    /// Spin temperature at the strongest absorptive excursion (K, positive).
    pub absorptive_peak_temperature: f64,
}

/// Integrate the rate equations with the cavity decoupled (W_XZ = 0) and
/// report the X-Z population difference, sum and spin temperature over time.
pub fn tr_epr_simulate(
    rates: &TripletRates,
    pump_params: &PumpParams,
    pump: &PumpProfile,
    n_tot: f64,
    f_xz: f64,
    settings: &IntegrationSettings,
) -> Result<TrEprSeries> {
    rates.validate()?;
    pump_params.validate()?;
    pump.validate()?;
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

    let mut derivative = |t: f64, y: &[f64; 5]| -> [f64; 5] {
        let xi = pump_rate(pump_params, pump.power_at(t)).unwrap_or(f64::NAN);
        let m = match rate_matrix(rates, xi, 0.0) {
            Ok(m) => m,
            Err(_) => return [f64::NAN; 5],
        };
        spin_derivative(&SpinState::from_array(*y), &m).to_array()
    };

    let n_steps = ((settings.t_end - settings.t_start) / settings.h).round() as u64;
    let mut y = [n_tot, 0.0, 0.0, 0.0, 0.0];
    let mut t = settings.t_start;
    let zero_tol = 1e-12 * n_tot;

    let mut samples = Vec::with_capacity(n_steps as usize / settings.stride + 2);
    let push = |t: f64, y: &[f64; 5], samples: &mut Vec<EprSample>| {
        let (n_x, n_z) = (y[2], y[4]);
        let n = n_x + n_z;
        let delta_n = n_z - n_x;
        let t_xz = if n > zero_tol {
            spin_temperature(n_x.max(0.0), n_z.max(0.0), f_xz)
                .map(|r| r.temperature)
                .unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        };
        samples.push(EprSample { t, delta_n, n, t_xz });
    };
    push(t, &y, &mut samples);
    for step in 1..=n_steps {
        y = rk4_step(&mut derivative, t, &y, settings.h)?;
        t = settings.t_start + step as f64 * settings.h;
        if step % settings.stride as u64 == 0 || step == n_steps {
            push(t, &y, &mut samples);
        }
    }

    // emissive -> absorptive crossing: dN goes negative then positive
    let mut crossing_time = None;
    let mut was_emissive = false;
    for w in samples.windows(2) {
        if w[0].delta_n < -zero_tol {
            was_emissive = true;
        }
        if was_emissive && w[0].delta_n <= 0.0 && w[1].delta_n > 0.0 {
            let f = -w[0].delta_n / (w[1].delta_n - w[0].delta_n);
            crossing_time = Some(w[0].t + f * (w[1].t - w[0].t));
            break;
        }
    }

    // extremal polarizations (largest |dN/N|) map to the extremal finite
    // spin temperatures
    let mut emissive = f64::NEG_INFINITY; // largest finite negative temperature magnitude-wise
    let mut absorptive = f64::INFINITY;
    let mut min_ratio = 0.0;
    let mut max_ratio = 0.0;
    for s in &samples {
        if s.n > zero_tol {
            let ratio = s.delta_n / s.n;
            if ratio < min_ratio {
                min_ratio = ratio;
                emissive = s.t_xz;
            }
            if ratio > max_ratio {
                max_ratio = ratio;
                absorptive = s.t_xz;
            }
        }
    }

    Ok(TrEprSeries {
        samples,
        crossing_time,
        emissive_peak_temperature: emissive,
        absorptive_peak_temperature: absorptive,
    })
}

/// Bi-exponential fit `y = a1 exp(-t/tau1) + a2 exp(-t/tau2) + c` with
/// canonical ordering `tau1 <= tau2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiexpFit {
    pub a1: f64,
    pub tau1: f64,
    pub a2: f64,
    pub tau2: f64,
    pub offset: f64,
    /// Covariance of (a1, tau1, a2, tau2, c) from the linearized normal
    /// equations at the solution.
    pub covariance: [[f64; N_PARAMS]; N_PARAMS],
    /// Per-sample 95% confidence band (lower, upper) around the fitted curve.
    pub band: Vec<(f64, f64)>,
    /// Sample times the band refers to.
    pub t: Vec<f64>,
    /// tau1 and tau2 coincide to within 1e-6 relative; the fit is
    /// effectively single-exponential.
    pub degenerate: bool,
    pub iterations: usize,
    /// Weighted sum of squared residuals at the solution.
    pub sse: f64,
}

impl BiexpFit {
    pub fn params(&self) -> [f64; N_PARAMS] {
        [self.a1, self.tau1, self.a2, self.tau2, self.offset]
    }

    pub fn value(&self, t: f64) -> f64 {
        model(t, &self.params())
    }

    /// 95% confidence half-width of the fitted curve at `t` from the
    /// linearized covariance.
    pub fn band_half_width(&self, t: f64) -> f64 {
        let g = gradient(t, &self.params());
        let mut var = 0.0;
        for i in 0..N_PARAMS {
            for j in 0..N_PARAMS {
                var += g[i] * self.covariance[i][j] * g[j];
            }
        }
        1.96 * var.max(0.0).sqrt()
    }
}

fn model(t: f64, p: &[f64; N_PARAMS]) -> f64 {
    p[0] * (-t / p[1]).exp() + p[2] * (-t / p[3]).exp() + p[4]
}

fn gradient(t: f64, p: &[f64; N_PARAMS]) -> [f64; N_PARAMS] {
    let e1 = (-t / p[1]).exp();
    let e2 = (-t / p[3]).exp();
    [e1, p[0] * t / (p[1] * p[1]) * e1, e2, p[2] * t / (p[3] * p[3]) * e2, 1.0]
}

/// Weighted nonlinear least-squares bi-exponential fit.
///
/// Damped Gauss-Newton with an adaptive damping schedule, initialized by a
/// two-segment log-linear slope heuristic with a deterministic coarse grid as
/// fallback. Converged when the relative parameter change drops below 1e-8;
/// fails after 500 iterations.
pub fn biexp_fit(t: &[f64], y: &[f64], sigma: &[f64]) -> Result<BiexpFit> {
    if t.len() < 10 {
        return Err(Error::Domain(format!("need at least 10 samples, got {}", t.len())));
    }
    if t.len() != y.len() || t.len() != sigma.len() {
        return Err(Error::Domain("t, y and sigma must have equal lengths".into()));
    }
    if sigma.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Domain("all sigma values must be > 0".into()));
    }
    for w in t.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Domain("sample times must be strictly increasing".into()));
        }
    }

    let mut p = initial_guess(t, y);
    let mut lambda = 1e-3;
    let mut sse = weighted_sse(t, y, sigma, &p);
    let mut trace: Vec<[f64; N_PARAMS]> = vec![p];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < 500 {
        iterations += 1;
        let (jtj, jtr) = normal_equations(t, y, sigma, &p);
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = jtj;
            for i in 0..N_PARAMS {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
            }
            let Some(delta) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let mut candidate = p;
            for i in 0..N_PARAMS {
                candidate[i] += delta[i];
            }
            if candidate[1] <= 0.0 || candidate[3] <= 0.0 {
                lambda *= 10.0;
                continue;
            }
            let candidate_sse = weighted_sse(t, y, sigma, &candidate);
            if candidate_sse.is_finite() && candidate_sse <= sse {
                let rel_change = (0..N_PARAMS)
                    .map(|i| (delta[i] / (p[i].abs() + 1e-300)).abs())
                    .fold(0.0f64, f64::max);
                p = candidate;
                sse = candidate_sse;
                lambda = (lambda / 10.0).max(1e-14);
                accepted = true;
                if rel_change < 1e-8 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        trace.push(p);
        if converged {
            break;
        }
        if !accepted {
            // stuck: either already at the minimum (tiny gradient) or failed
            let grad_norm = jtr.norm();
            if grad_norm < 1e-10 * (1.0 + sse) {
                converged = true;
            }
            break;
        }
    }

    if !converged {
        let tail = trace.iter().rev().take(20).cloned().collect();
        return Err(Error::FitNonConvergence { iterations, sse, trace: tail });
    }

    // canonical ordering tau1 <= tau2
    if p[1] > p[3] {
        p = [p[2], p[3], p[0], p[1], p[4]];
    }

    let (jtj, _) = normal_equations(t, y, sigma, &p);
    let covariance = jtj
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular normal matrix at the fit solution".into()))?;
    let mut cov = [[0.0; N_PARAMS]; N_PARAMS];
    for i in 0..N_PARAMS {
        for j in 0..N_PARAMS {
            cov[i][j] = covariance[(i, j)];
        }
    }

    let degenerate = (p[1] - p[3]).abs() <= 1e-6 * p[3].abs();
    let mut fit = BiexpFit {
        a1: p[0],
        tau1: p[1],
        a2: p[2],
        tau2: p[3],
        offset: p[4],
        covariance: cov,
        band: Vec::new(),
        t: t.to_vec(),
        degenerate,
        iterations,
        sse,
    };
    fit.band = t
        .iter()
        .map(|&ti| {
            let f = fit.value(ti);
            let hw = fit.band_half_width(ti);
            (f - hw, f + hw)
        })
        .collect();
    Ok(fit)
}

fn weighted_sse(t: &[f64], y: &[f64], sigma: &[f64], p: &[f64; N_PARAMS]) -> f64 {
    t.iter()
        .zip(y)
        .zip(sigma)
        .map(|((&ti, &yi), &si)| {
            let r = (yi - model(ti, p)) / si;
            r * r
        })
        .sum()
}

fn normal_equations(
    t: &[f64],
    y: &[f64],
    sigma: &[f64],
    p: &[f64; N_PARAMS],
) -> (SMatrix<f64, N_PARAMS, N_PARAMS>, SVector<f64, N_PARAMS>) {
    let mut jtj = SMatrix::<f64, N_PARAMS, N_PARAMS>::zeros();
    let mut jtr = SVector::<f64, N_PARAMS>::zeros();
    for ((&ti, &yi), &si) in t.iter().zip(y).zip(sigma) {
        let g = gradient(ti, p);
        let r = (yi - model(ti, p)) / si;
        for i in 0..N_PARAMS {
            let gi = g[i] / si;
            jtr[i] += gi * r;
            for j in 0..N_PARAMS {
                jtj[(i, j)] += gi * g[j] / si;
            }
        }
    }
    (jtj, jtr)
}

/// Two-segment log-linear heuristic: the tail slope of ln|y - c| estimates
/// the slow time constant, the early slope the fast one; amplitudes and the
/// offset then come from a linear solve. A deterministic coarse grid over
/// time-constant pairs backs it up.
fn initial_guess(t: &[f64], y: &[f64]) -> [f64; N_PARAMS] {
    let n = t.len();
    let tail_n = (n / 10).max(3).min(n);
    let c0 = y[n - tail_n..].iter().sum::<f64>() / tail_n as f64;
    let span = t[n - 1] - t[0];

    let slope_tau = |lo: usize, hi: usize| -> Option<f64> {
        let scale = y.iter().map(|v| (v - c0).abs()).fold(0.0f64, f64::max);
        let pts: Vec<(f64, f64)> = (lo..hi)
            .filter(|&i| (y[i] - c0).abs() > 1e-6 * scale)
            .map(|i| (t[i], (y[i] - c0).abs().ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let m = pts.len() as f64;
        let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let lm = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let num: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
        let slope = num / den;
        (slope < 0.0).then(|| -1.0 / slope)
    };
    let tau_fast = slope_tau(0, n / 4).filter(|&v| v > 0.0 && v.is_finite());
    let tau_slow = slope_tau(n / 2, n).filter(|&v| v > 0.0 && v.is_finite());

    let mut candidates: Vec<(f64, f64)> = Vec::new();
    if let (Some(a), Some(b)) = (tau_fast, tau_slow) {
        candidates.push((a.min(b), a.max(b).max(1.0001 * a.min(b))));
    }
    // coarse deterministic grid over tau pairs spanning the record
    let grid: Vec<f64> = (0..6)
        .map(|i| span * 10f64.powf(-2.0 + i as f64 * 0.5) / 10.0)
        .filter(|&v| v > 0.0)
        .collect();
    for (i, &t1) in grid.iter().enumerate() {
        for &t2 in &grid[i + 1..] {
            candidates.push((t1, t2));
        }
    }

    let mut best: Option<([f64; N_PARAMS], f64)> = None;
    for (t1, t2) in candidates {
        if let Some(p) = linear_amplitudes(t, y, t1, t2) {
            let sse: f64 = t
                .iter()
                .zip(y)
                .map(|(&ti, &yi)| (yi - model(ti, &p)).powi(2))
                .sum();
            if best.as_ref().map_or(true, |(_, s)| sse < *s) {
                best = Some((p, sse));
            }
        }
    }
    best.map(|(p, _)| p).unwrap_or([y[0] - c0, span / 10.0, 0.0, span / 2.0, c0])
}

/// Best (a1, a2, c) for fixed time constants by linear least squares.
fn linear_amplitudes(t: &[f64], y: &[f64], tau1: f64, tau2: f64) -> Option<[f64; N_PARAMS]> {
    let mut ata = SMatrix::<f64, 3, 3>::zeros();
    let mut aty = SVector::<f64, 3>::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let row = [(-ti / tau1).exp(), (-ti / tau2).exp(), 1.0];
        for i in 0..3 {
            aty[i] += row[i] * yi;
            for j in 0..3 {
                ata[(i, j)] += row[i] * row[j];
            }
        }
    }
    let sol = ata.lu().solve(&aty)?;
    Some([sol[0], tau1, sol[1], tau2, sol[2]])
}

/// Minimum of a fitted curve over a time range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitMinimum {
    pub t_min: f64,
    pub y_min: f64,
    /// Lower edge of the 95% band at the minimum.
    pub y_lower: f64,
    /// Upper edge of the 95% band at the minimum.
    pub y_upper: f64,
    /// The minimum sits on a boundary of the search range (monotone curve).
    pub boundary: bool,
}

/// Locate the global minimum of the fitted curve on `t_range` by
/// golden-section search (the bi-exponential has at most one interior
/// stationary point, so the curve is unimodal on any range).
pub fn fit_minimum(fit: &BiexpFit, t_range: (f64, f64)) -> Result<FitMinimum> {
    let (mut a, mut b) = t_range;
    if !(b > a) {
        return Err(Error::Domain(format!("empty search range ({a}, {b})")));
    }
    let span = b - a;
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = fit.value(c);
    let mut fd = fit.value(d);
    let scale = a.abs().max(b.abs()).max(span);
    while (b - a) > 1e-3 * scale {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = fit.value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = fit.value(d);
        }
    }
    let mut t_min = 0.5 * (a + b);
    let mut y_min = fit.value(t_min);
    // compare against the range ends; a monotone curve bottoms out there
    let (t_lo, t_hi) = t_range;
    let mut boundary = false;
    for (te, ye) in [(t_lo, fit.value(t_lo)), (t_hi, fit.value(t_hi))] {
        if ye < y_min {
            t_min = te;
            y_min = ye;
            boundary = true;
        }
    }
    if !boundary {
        boundary = (t_min - t_lo).abs() < 2e-3 * scale || (t_min - t_hi).abs() < 2e-3 * scale;
    }
    let hw = fit.band_half_width(t_min);
    Ok(FitMinimum { t_min, y_min, y_lower: y_min - hw, y_upper: y_min + hw, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const F_XZ: f64 = 1.4495e9;

    #[test]
    fn spin_temperature_equal_populations_is_infinite() {
        let r = spin_temperature(5.0, 5.0, F_XZ).unwrap();
        assert!(r.temperature.is_infinite() && r.temperature > 0.0);
        assert_eq!(r.delta_n_over_n, 0.0);
    }

    #[test]
    fn spin_temperature_reference_anchors() {
        // oracle: tanh(h f / (2 k_B T)) at T = 80 mK and -170 mK
        let x80 = (PLANCK * F_XZ / (2.0 * BOLTZMANN * 0.080)).tanh();
        assert_abs_diff_eq!(x80, 0.4093, epsilon = 5e-4);
        let n = 1e15;
        let n_z = n * (1.0 + x80) / 2.0;
        let n_x = n * (1.0 - x80) / 2.0;
        let r = spin_temperature(n_x, n_z, F_XZ).unwrap();
        assert_relative_eq!(r.temperature, 0.080, max_relative = 1e-10);

        let x170 = (PLANCK * F_XZ / (2.0 * BOLTZMANN * -0.170)).tanh();
        assert_abs_diff_eq!(x170, -0.2018, epsilon = 5e-4);
        let n_z = n * (1.0 + x170) / 2.0;
        let n_x = n * (1.0 - x170) / 2.0;
        let r = spin_temperature(n_x, n_z, F_XZ).unwrap();
        assert_relative_eq!(r.temperature, -0.170, max_relative = 1e-10);
    }

    #[test]
    fn spin_temperature_antisymmetric() {
        let a = spin_temperature(3e14, 8e14, F_XZ).unwrap();
        let b = spin_temperature(8e14, 3e14, F_XZ).unwrap();
        assert_relative_eq!(a.temperature, -b.temperature, max_relative = 1e-14);
        assert_relative_eq!(a.delta_n_over_n, -b.delta_n_over_n, max_relative = 1e-14);
    }

    #[test]
    fn spin_temperature_round_trip_identity() {
        // |t| >= 10 mK keeps tanh(h f / 2 k T) representably below 1
        for &t in &[1e-2, 0.08, 0.17, 1.0, 290.0, 1e6, -1e-2, -0.17, -1e4] {
            let ratio = (PLANCK * F_XZ / (2.0 * BOLTZMANN * t)).tanh();
            let n = 2.0;
            let r = spin_temperature(n * (1.0 - ratio) / 2.0, n * (1.0 + ratio) / 2.0, F_XZ)
                .unwrap();
            // at |t| ~ 1e6 K the population ratio is ~3e-8, so recovering
            // it from the two sub-level counts costs ~eps/ratio in accuracy
            assert_relative_eq!(r.temperature, t, max_relative = 1e-8);
        }
    }

    #[test]
    fn spin_temperature_errors() {
        assert!(spin_temperature(0.0, 0.0, F_XZ).is_err());
        assert!(spin_temperature(-1.0, 1.0, F_XZ).is_err());
    }

    #[test]
    fn tr_epr_zero_pump_is_empty() {
        let series = tr_epr_simulate(
            &TripletRates::default(),
            &PumpParams::default(),
            &PumpProfile::off(),
            2.4e16,
            F_XZ,
            &IntegrationSettings { t_end: 50e-6, stride: 100, ..Default::default() },
        )
        .unwrap();
        for s in &series.samples {
            assert_eq!(s.delta_n, 0.0);
            assert_eq!(s.n, 0.0);
        }
        assert!(series.crossing_time.is_none());
    }

    #[test]
    fn biexp_fit_noiseless_recovery() {
        let true_p = [2.0, 100e-6, -3.0, 400e-6, 1.0];
        let t: Vec<f64> = (0..400).map(|i| i as f64 * 5e-6).collect();
        let y: Vec<f64> = t.iter().map(|&ti| model(ti, &true_p)).collect();
        let sigma = vec![1e-3; t.len()];
        let fit = biexp_fit(&t, &y, &sigma).unwrap();
        assert_relative_eq!(fit.a1, 2.0, max_relative = 1e-6);
        assert_relative_eq!(fit.tau1, 100e-6, max_relative = 1e-6);
        assert_relative_eq!(fit.a2, -3.0, max_relative = 1e-6);
        assert_relative_eq!(fit.tau2, 400e-6, max_relative = 1e-6);
        assert_relative_eq!(fit.offset, 1.0, max_relative = 1e-6);
        assert!(!fit.degenerate);
        assert!(fit.tau1 <= fit.tau2);
    }

    #[test]
    fn biexp_fit_is_local_minimum() {
        let true_p = [1.5, 80e-6, -2.5, 350e-6, 0.4];
        let t: Vec<f64> = (0..300).map(|i| i as f64 * 6e-6).collect();
        let y: Vec<f64> = t.iter().map(|&ti| model(ti, &true_p)).collect();
        let sigma = vec![1e-2; t.len()];
        let fit = biexp_fit(&t, &y, &sigma).unwrap();
        let p0 = fit.params();
        let base = weighted_sse(&t, &y, &sigma, &p0);
        for i in 0..N_PARAMS {
            for delta in [-0.01, 0.01] {
                let mut p = p0;
                p[i] *= 1.0 + delta;
                assert!(
                    weighted_sse(&t, &y, &sigma, &p) >= base,
                    "perturbing parameter {i} by {delta} decreased the SSE"
                );
            }
        }
    }

    #[test]
    fn biexp_fit_band_brackets_curve() {
        let true_p = [2.0, 100e-6, -3.0, 400e-6, 1.0];
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 10e-6).collect();
        let y: Vec<f64> = t.iter().map(|&ti| model(ti, &true_p)).collect();
        let sigma = vec![0.01; t.len()];
        let fit = biexp_fit(&t, &y, &sigma).unwrap();
        for (i, &(lo, hi)) in fit.band.iter().enumerate() {
            let f = fit.value(fit.t[i]);
            assert!(lo <= f && f <= hi);
        }
    }

    #[test]
    fn biexp_fit_input_validation() {
        let t: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let y = vec![1.0; 5];
        let s = vec![1.0; 5];
        assert!(biexp_fit(&t, &y, &s).is_err()); // too few samples
        let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y = vec![1.0; 20];
        let mut s = vec![1.0; 20];
        s[3] = 0.0;
        assert!(biexp_fit(&t, &y, &s).is_err()); // nonpositive sigma
    }

    #[test]
    fn fit_minimum_interior_closed_form() {
        // y = exp(-t/tau1) - exp(-t/tau2) has its interior minimum at
        // t = ln(tau2/tau1) tau1 tau2 / (tau2 - tau1)
        let (tau1, tau2) = (100e-6, 400e-6);
        let t: Vec<f64> = (0..500).map(|i| i as f64 * 4e-6).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&ti| (-ti / tau1).exp() - (-ti / tau2).exp())
            .collect();
        let sigma = vec![1e-4; t.len()];
        let fit = biexp_fit(&t, &y, &sigma).unwrap();
        let m = fit_minimum(&fit, (0.0, 2e-3)).unwrap();
        let expected = (tau2 / tau1).ln() * tau1 * tau2 / (tau2 - tau1);
        assert_relative_eq!(m.t_min, expected, max_relative = 5e-3);
        assert!(!m.boundary);
        assert!(m.y_lower <= m.y_min && m.y_min <= m.y_upper);
    }

    #[test]
    fn fit_minimum_monotone_curve_flags_boundary() {
        // single decaying exponential + offset: minimum at the right edge
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 1e-5).collect();
        let y: Vec<f64> = t.iter().map(|&ti| 2.0 * (-ti / 3e-4).exp() + 1.0).collect();
        let sigma = vec![1e-3; t.len()];
        let fit = biexp_fit(&t, &y, &sigma).unwrap();
        let m = fit_minimum(&fit, (0.0, 1e-3)).unwrap();
        assert!(m.boundary);
        assert_relative_eq!(m.t_min, 1e-3, max_relative = 3e-3);
    }
}
