//! Model invariants as property tests.

use num_complex::Complex64;
use proptest::prelude::*;

use wrp_core::density::density;
use wrp_core::joint::{joint_probability_once, InnerIntegralCache, JointLawQuery, JointParams};
use wrp_core::levy::LevyTriplet;
use wrp_core::mc::{simulate, SimConfig};
use wrp_core::payoff::{linear_combination, make_put};
use wrp_core::symmetry::{compute_g_image, ContourParams};

fn bm_gamma() -> impl Strategy<Value = LevyTriplet> {
    (0.3f64..2.0, 0.5f64..3.0, 0.2f64..3.0).prop_map(|(s, a, b)| LevyTriplet::bm_gamma(s, a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psi_respects_conjugation(t in bm_gamma(), re in 0.0f64..10.0, im in -50.0f64..50.0) {
        let l = Complex64::new(re, im);
        let a = t.psi(l.conj()).unwrap();
        let b = t.psi(l).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
    }

    #[test]
    fn psi_is_real_on_the_positive_axis_and_vanishes_at_zero(t in bm_gamma(), l in 0.0f64..20.0) {
        let v = t.psi(Complex64::new(l, 0.0)).unwrap();
        prop_assert!(v.im.abs() <= 1e-12 * (1.0 + v.re.abs()));
        prop_assert_eq!(t.psi(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn psi_grows_quadratically(t in bm_gamma(), u in 100.0f64..1e4) {
        let ratio = t.psi(Complex64::new(4.0, u)).unwrap().norm() / (u * u);
        let half = 0.5 * t.sigma * t.sigma;
        prop_assert!(ratio > half / 10.0 && ratio < half * 10.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn density_is_nonnegative_with_unit_mass(t in 0.1f64..4.0) {
        let triplet = LevyTriplet::example();
        let grid: Vec<f64> = (0..=1200).map(|k| -60.0 + 0.06 * k as f64).collect();
        let slice = density(&triplet, t, &grid).unwrap();
        prop_assert!(slice.p_values.iter().all(|&p| p >= 0.0));
        prop_assert!(slice.clipped_excursion < 1e-8);
        prop_assert!(slice.normalization_defect < 1e-6, "{}", slice.normalization_defect);
    }

    #[test]
    fn joint_law_is_monotone_and_bounded(k in -1.0f64..-0.05, dk in 0.01f64..0.3, x in 0.0f64..0.5, dx in 0.01f64..0.3, t in 0.25f64..1.0) {
        let triplet = LevyTriplet::example();
        let params = JointParams::default();
        let p = |k: f64, x: f64| joint_probability_once(&triplet, &JointLawQuery::new(k, x, t).unwrap(), &params).unwrap().value;
        let base = p(k, x);
        prop_assert!(p((k + dk).min(-1e-3), x) >= base - 1e-6);
        prop_assert!(p(k, x + dx) <= base + 1e-6);
        let marginal = wrp_core::density::cdf(&triplet, t, k + x).unwrap();
        prop_assert!((0.0..=marginal.min(1.0) + 1e-6).contains(&base));
    }

    #[test]
    fn symmetry_image_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let t = LevyTriplet::example();
        let (p1, p2) = (make_put(-0.2, 0.9).unwrap(), make_put(-0.6, 0.9).unwrap());
        let both = linear_combination(vec![(a, p1.clone()), (b, p2.clone())]).unwrap();
        let grid = [0.2, 0.7, 1.3];
        let params = ContourParams::square(4.0, 60.0);
        let g1 = compute_g_image(&t, &p1, &grid, &params).unwrap();
        let g2 = compute_g_image(&t, &p2, &grid, &params).unwrap();
        let g = compute_g_image(&t, &both, &grid, &params).unwrap();
        for i in 0..grid.len() {
            let expect = a * g1.g_values[i] + b * g2.g_values[i];
            prop_assert!((g.g_values[i] - expect).abs() < 1e-6 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn cache_fingerprint_tracks_the_model(sigma in 0.5f64..1.5) {
        let base = LevyTriplet::example();
        let other = LevyTriplet::bm_gamma(sigma, 1.0, 1.0).unwrap();
        let params = JointParams::default();
        let payoff = params.indicator(&base, -0.2).unwrap();
        let cache = InnerIntegralCache::build(&base, &payoff, &params, 0.5).unwrap();
        prop_assert!(cache.check(&base, &payoff, &params).is_ok());
        prop_assert_eq!(cache.check(&other, &payoff, &params).is_ok(), other == base);
    }

    #[test]
    fn simulated_maximum_dominates_terminal_and_origin(seed in any::<u64>(), bridge in any::<bool>()) {
        let t = LevyTriplet::example();
        let batch = simulate(&t, &SimConfig::new(1_000, 100, 0.7, seed, bridge).unwrap()).unwrap();
        for (&x, &m) in batch.terminal.iter().zip(&batch.running_max) {
            prop_assert!(m >= x.max(0.0));
        }
        let again = simulate(&t, &SimConfig::new(1_000, 100, 0.7, seed, bridge).unwrap()).unwrap();
        prop_assert_eq!(batch, again);
    }
}
