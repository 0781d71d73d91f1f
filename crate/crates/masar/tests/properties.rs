//! Randomized property suites over the library's algebraic contracts.

use proptest::prelude::*;

use masar::cavity_photon::{
    bose_occupancy, coupling_from_reflection, mode_temperature_from_loss, photons_of_temperature,
    reflection_from_loss, reflection_from_temperature, CavityMode,
};
use masar::cli_io::{
    parse_config, serialize_config, synth_pump, trajectory_csv, Config, PulseShape, PulseTrainSpec,
};
use masar::constants::{BOLTZMANN, PLANCK};
use masar::integrator::{Trajectory, TrajectorySample};
use masar::receiver_noise::{delta_p, invert_delta_p, ReceiverChain};
use masar::spin_dynamics::{
    pump_rate, rate_matrix, spin_derivative, PumpParams, SpinState, TripletRates,
};

fn arb_rates() -> impl Strategy<Value = TripletRates> {
    (
        1e6..1e8f64,   // k_sp
        1e6..1e8f64,   // k_isc
        0.0..1e5f64,   // gamma_xy
        0.0..1e5f64,   // gamma_yz
        0.0..1e5f64,   // gamma_xz
        0.0..1e5f64,   // k_x
        0.0..1e5f64,   // k_y
        0.0..1e5f64,   // k_z
        0.01..0.98f64, // p_x
        0.01..0.98f64, // raw p_y (renormalized below)
    )
        .prop_map(|(k_sp, k_isc, gamma_xy, gamma_yz, gamma_xz, k_x, k_y, k_z, px, py_raw)| {
            let p_x = px;
            let p_y = (1.0 - p_x) * py_raw;
            let p_z = 1.0 - p_x - p_y;
            TripletRates {
                k_sp,
                k_isc,
                gamma_xy,
                gamma_yz,
                gamma_xz,
                k_x,
                k_y,
                k_z,
                p_x,
                p_y,
                p_z,
            }
        })
}

proptest! {
    #[test]
    fn rate_matrix_columns_sum_to_zero(
        rates in arb_rates(),
        xi in 0.0..1e8f64,
        w_xz in 0.0..1e6f64,
    ) {
        let m = rate_matrix(&rates, xi, w_xz).unwrap();
        for col in 0..5 {
            let sum: f64 = (0..5).map(|row| m[row][col]).sum();
            let scale: f64 = (0..5).map(|row| m[row][col].abs()).sum::<f64>().max(1.0);
            prop_assert!((sum / scale).abs() < 1e-12, "column {col} sums to {sum}");
        }
    }

    #[test]
    fn spin_derivative_is_linear(
        rates in arb_rates(),
        xi in 0.0..1e7f64,
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
        x in prop::array::uniform5(0.0..1e16f64),
        y in prop::array::uniform5(0.0..1e16f64),
    ) {
        let m = rate_matrix(&rates, xi, 0.0).unwrap();
        let fx = spin_derivative(&SpinState::from_array(x), &m).to_array();
        let fy = spin_derivative(&SpinState::from_array(y), &m).to_array();
        let mut combo = [0.0; 5];
        for i in 0..5 {
            combo[i] = a * x[i] + b * y[i];
        }
        let fc = spin_derivative(&SpinState::from_array(combo), &m).to_array();
        for i in 0..5 {
            let expect = a * fx[i] + b * fy[i];
            let scale = fx[i].abs().max(fy[i].abs()).max(1.0);
            prop_assert!((fc[i] - expect).abs() / scale < 1e-9);
        }
    }

    #[test]
    fn loss_temperature_reflection_routes_agree(eta_bar in 0.0..100.0f64) {
        let t0 = 290.0;
        // route 1: eta -> Gamma_c directly
        let gamma_direct = reflection_from_loss(eta_bar).unwrap();
        // route 2: eta -> T_mode -> Gamma_c
        let t_mode = mode_temperature_from_loss(eta_bar, t0, None).unwrap();
        let gamma_via_t = reflection_from_temperature(t_mode, t0).unwrap();
        prop_assert!((gamma_direct - gamma_via_t).abs() < 1e-12);
        // coupling coefficient route closes the triangle
        let k = coupling_from_reflection(gamma_direct).unwrap();
        prop_assert!(((k - 1.0) / (k + 1.0) - gamma_direct).abs() < 1e-12);
    }

    #[test]
    fn loss_maps_are_strictly_decreasing(
        eta_a in 0.0..100.0f64,
        delta in 1e-6..10.0f64,
    ) {
        let eta_b = eta_a + delta;
        prop_assert!(reflection_from_loss(eta_b).unwrap() < reflection_from_loss(eta_a).unwrap());
        let ta = mode_temperature_from_loss(eta_a, 290.0, None).unwrap();
        let tb = mode_temperature_from_loss(eta_b, 290.0, None).unwrap();
        prop_assert!(tb < ta);
    }

    #[test]
    fn delta_p_strictly_increasing_above_mismatch_knee(
        t in 6.0..289.0f64,
        step in 0.01..1.0f64,
    ) {
        let chain = ReceiverChain::default();
        let t_hi = (t + step).min(290.0);
        prop_assert!(delta_p(&chain, t_hi).unwrap() > delta_p(&chain, t).unwrap());
    }

    #[test]
    fn invert_composed_with_delta_p_is_identity(t in 13.0..290.0f64) {
        let chain = ReceiverChain::default();
        let dp = delta_p(&chain, t).unwrap().min(0.0);
        let inferred = invert_delta_p(&chain, dp, (dp, dp)).unwrap();
        prop_assert!(
            (inferred.t_mode - t).abs() <= 0.011,
            "{t} K -> {dp} dB -> {} K",
            inferred.t_mode
        );
    }

    #[test]
    fn bose_and_equipartition_agree_at_microwave_energies(t in 77.0..400.0f64) {
        let f = 1.4495e9;
        let bose = bose_occupancy(t, f).unwrap();
        let equi = photons_of_temperature(t, f);
        // they differ by ~1/2 photon out of ~kT/hf
        let bound = 1.01 * PLANCK * f / (2.0 * BOLTZMANN * t);
        prop_assert!(((bose - equi) / equi).abs() < bound);
    }

    #[test]
    fn bleached_rate_is_the_thin_limit_of_the_full_form(
        power in 0.0..1e4f64,
        alpha in 1e-6..1e-2f64,
    ) {
        let bleached = PumpParams::default();
        let full = PumpParams { alpha: Some(alpha), bleached: false, ..bleached };
        let xi_b = pump_rate(&bleached, power).unwrap();
        let xi_f = pump_rate(&full, power).unwrap();
        prop_assert!(xi_f <= xi_b + 1e-12);
        if power > 0.0 {
            // (1 - exp(-la))/(la) = 1 - la/2 + O(la^2); the 1e-12 floor
            // absorbs f64 cancellation when la itself is near epsilon
            let la = alpha * bleached.length_l;
            prop_assert!(((xi_b - xi_f) / xi_b - la / 2.0).abs() < la * la + 1e-12);
        }
    }

    #[test]
    fn config_round_trip_is_identity(
        n_tot in 1e14..1e18f64,
        h in 1e-10..1e-8f64,
        q0 in 1000.0..20000.0f64,
        f_rec in 1.0..2.0f64,
    ) {
        let mut config = Config::default();
        config.n_tot = n_tot;
        config.integration.h = h;
        config.cavity.q0 = q0;
        config.receiver.f_rec = f_rec;
        let text = serialize_config(&config).unwrap();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(config, back);
    }

    #[test]
    fn synth_pump_energy_is_exact(
        n_pulses in 1usize..6,
        duration in 1e-5..2e-4f64,
        energy in 0.01..10.0f64,
        rect in any::<bool>(),
    ) {
        let interval = duration * 3.0;
        let shape = if rect {
            PulseShape::Rectangular
        } else {
            PulseShape::Trapezoid { rise: duration / 4.0 }
        };
        let spec = PulseTrainSpec { n_pulses, duration, interval, total_energy: energy, shape };
        let profile = synth_pump(&spec).unwrap();
        prop_assert!((profile.integral() - energy).abs() / energy < 1e-9);
        prop_assert!(profile.peak_power() > 0.0);
    }

    #[test]
    fn trajectory_csv_round_trips_bit_exact(
        raw in prop::collection::vec(prop::array::uniform12(-1e18..1e18f64), 1..20),
    ) {
        let samples: Vec<TrajectorySample> = raw
            .iter()
            .map(|r| TrajectorySample {
                t: r[0],
                spin: SpinState::from_array([r[1], r[2], r[3], r[4], r[5]]),
                q: r[6],
                t_mode: r[7],
                eta_bar: r[8],
                gamma_c: r[9],
                delta_p_db: r[10],
                p_maser_w: r[11],
            })
            .collect();
        let trajectory = Trajectory { samples, h: 1e-9, stride: 1 };
        let text = trajectory_csv(&trajectory, 0.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, &text).unwrap();
        let rows = masar::cli_io::read_trajectory_csv(&path).unwrap();
        prop_assert_eq!(rows.len(), raw.len());
        for (row, orig) in rows.iter().zip(raw.iter()) {
            for (a, b) in row.iter().zip(orig.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}

#[test]
fn mode_default_round_trips_through_its_own_validation() {
    CavityMode::default().validate().unwrap();
    ReceiverChain::default().validate().unwrap();
    TripletRates::default().validate().unwrap();
}
