mod common;

use ancl_core::process::{
    check_ar_stationary, durbin_levinson, simulate_ar, simulate_garch, simulate_setar, ArSpec, GarchSpec,
    PacfSpec, SetarSpec, AR_BURN_IN, GARCH_BURN_IN, SETAR_BURN_IN,
};
use ancl_core::seeded_rng;
use common::{acf_naive, max_inverse_root_modulus};
use proptest::prelude::*;
use rand::Rng;

fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random_range(-1.0..1.0);
        if x > -1.0 {
            return x;
        }
    }
}

#[test]
fn extreme_alternating_pacf_maps_to_causal_coefficients() {
    let phi = durbin_levinson(&PacfSpec::new([0.9, -0.9, 0.9]).unwrap());
    let modulus = max_inverse_root_modulus(phi);
    assert!(modulus < 1.0, "largest inverse root {modulus}");
    assert!(check_ar_stationary(phi));
}

#[test]
fn every_open_pacf_gives_a_causal_ar() {
    let mut rng = seeded_rng(101);
    for _ in 0..10_000 {
        let kappa = [open_unit(&mut rng), open_unit(&mut rng), open_unit(&mut rng)];
        let phi = durbin_levinson(&PacfSpec::new(kappa).unwrap());
        assert!(check_ar_stationary(phi), "kappa {kappa:?} gave {phi:?}");
        let modulus = max_inverse_root_modulus(phi);
        assert!(modulus < 1.0 + 1e-9, "kappa {kappa:?}: root oracle says {modulus}");
    }
}

#[test]
fn causality_check_agrees_with_root_finder() {
    let mut rng = seeded_rng(102);
    let mut causal = 0;
    for _ in 0..20_000 {
        let phi = [
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-1.2..1.2),
        ];
        let modulus = max_inverse_root_modulus(phi);
        // Points this close to the unit circle are decided by the margin.
        if (modulus - 1.0).abs() < 1e-6 {
            continue;
        }
        assert_eq!(check_ar_stationary(phi), modulus < 1.0, "phi {phi:?}, modulus {modulus}");
        causal += usize::from(modulus < 1.0);
    }
    assert!(causal > 500, "sweep barely reached the causal region ({causal})");
}

#[test]
fn quadratic_hand_case_matches_explicit_roots() {
    // 1 - 0.4 z - 0.2 z^2 has roots -1 ± sqrt(6), both outside the unit disc.
    let roots = [-1.0 + 6f64.sqrt(), -1.0 - 6f64.sqrt()];
    assert!(roots.iter().all(|r| r.abs() > 1.0));
    assert!(check_ar_stationary([0.4, 0.2, 0.0]));
}

#[test]
fn garch_stays_finite_over_long_runs() {
    let mut rng = seeded_rng(103);
    for _ in 0..100 {
        let alpha = rng.random_range(0.0..0.5);
        let beta = rng.random_range(0.0..(1.0 - alpha) * 0.999_999);
        let omega = rng.random_range(1e-6..1e-2);
        let nu = [2.1, 3.0, 5.0, 10_000.0][rng.random_range(0..4)];
        let spec = GarchSpec::new(omega, alpha, beta, nu).unwrap();
        let x = simulate_garch(&spec, 1_000_000, GARCH_BURN_IN, &mut rng).unwrap();
        assert!(x.values().iter().all(|v| v.is_finite()), "{spec:?}");
    }
}

#[test]
fn setar_with_opposite_regimes_is_finite_and_mixing() {
    let spec = SetarSpec::new(0.8, -0.8, 0.0).unwrap();
    let x = simulate_setar(&spec, 100_000, SETAR_BURN_IN, &mut seeded_rng(104)).unwrap();
    assert!(x.values().iter().all(|v| v.is_finite()));
    let below = x.values().iter().filter(|v| **v <= 0.0).count();
    assert!(below > 10_000 && below < 90_000, "{below} values below the threshold");
}

#[test]
fn setar_regime_choice_uses_previous_value() {
    // With a threshold far above the data, every step uses the low regime.
    let low = SetarSpec::new(0.6, -0.9, 1e6).unwrap();
    let x = simulate_setar(&low, 100_000, SETAR_BURN_IN, &mut seeded_rng(105)).unwrap();
    assert!((acf_naive(x.values(), 1) - 0.6).abs() < 0.02);
    let high = SetarSpec::new(0.6, -0.3, -1e6).unwrap();
    let x = simulate_setar(&high, 100_000, SETAR_BURN_IN, &mut seeded_rng(106)).unwrap();
    assert!((acf_naive(x.values(), 1) + 0.3).abs() < 0.02);
}

#[test]
fn ar2_autocorrelations_follow_yule_walker() {
    let phi = [0.5, 0.3, 0.0];
    let x = simulate_ar(&ArSpec::new(phi, 1.0).unwrap(), 200_000, AR_BURN_IN, &mut seeded_rng(107)).unwrap();
    let rho1 = phi[0] / (1.0 - phi[1]);
    let rho2 = phi[0] * rho1 + phi[1];
    assert!((acf_naive(x.values(), 1) - rho1).abs() < 0.02);
    assert!((acf_naive(x.values(), 2) - rho2).abs() < 0.02);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulation_is_a_function_of_the_seed(seed in any::<u64>(), kappa in prop::array::uniform3(-0.99f64..0.99)) {
        let spec = ArSpec::from_pacf(&PacfSpec::new(kappa).unwrap(), 1.0).unwrap();
        let a = simulate_ar(&spec, 200, 50, &mut seeded_rng(seed)).unwrap();
        let b = simulate_ar(&spec, 200, 50, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(a, b);
        let g = GarchSpec::new(1e-5, 0.1, 0.8, 5.0).unwrap();
        let a = simulate_garch(&g, 200, 50, &mut seeded_rng(seed)).unwrap();
        let b = simulate_garch(&g, 200, 50, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn stationarity_matches_roots_on_random_pacf(kappa in prop::array::uniform3(-0.999f64..0.999)) {
        let phi = durbin_levinson(&PacfSpec::new(kappa).unwrap());
        prop_assert!(check_ar_stationary(phi));
        prop_assert!(max_inverse_root_modulus(phi) < 1.0 + 1e-9);
    }
}
