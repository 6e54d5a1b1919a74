//! Cross-module invariants, checked on random inputs.

use alloc::vec::Vec;

use proptest::prelude::*;

use crate::analysis::{amplitude_distances, probability_distances, Regime};
use crate::dde::{integrate_cavity, IntegratorConfig};
use crate::math::cabs;
use crate::mirror::{chain_scattering, AtomChain, DEFAULT_OMEGA_A};
use crate::series::{series_c0, SeriesOptions};
use crate::spectral::{macroscopic_poles, spectral_main};
use crate::trajectory::uniform_grid;
use crate::CavityParams;

fn params(n: u32, tau: f64, phi: f64, loss: f64) -> CavityParams {
    CavityParams::new(n, tau)
        .unwrap()
        .with_phase(phi)
        .unwrap()
        .with_env_rate(loss)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn series_and_integrator_agree(n in 1u32..60, tau in 0.2f64..1.0, phi in -0.3f64..0.3, loss in 0.0f64..0.5) {
        let p = params(n, tau, phi, loss);
        let t = uniform_grid(2.0, 201);
        let s = series_c0(&p, &t, &SeriesOptions::default()).unwrap();
        let d = integrate_cavity(&p, &IntegratorConfig::new(2.0).with_output_times(t)).unwrap();
        let dist = amplitude_distances(&s, &d).unwrap().sup;
        prop_assert!(dist < 1e-6, "{dist}");
    }

    #[test]
    fn excitation_never_grows(n in 1u32..200, tau in 0.01f64..1.0, phi in -3.0f64..3.0, loss in 0.0f64..1.0) {
        let p = params(n, tau, phi, loss);
        let d = integrate_cavity(&p, &IntegratorConfig::new(1.0).with_output_times(uniform_grid(1.0, 51))).unwrap();
        for s in &d.samples {
            let total = s.p0() + s.cm.unwrap().norm_sqr();
            prop_assert!(total <= 1.0 + 1e-9, "{total}");
        }
    }

    #[test]
    fn distances_are_metrics(n in 10u32..200, tau in 0.001f64..0.1) {
        let p = params(n, tau, 0.0, 0.0);
        let t = uniform_grid(1.0, 101);
        let a = spectral_main(&p, &t).unwrap();
        let b = crate::spectral::rabi_approx(&p, &t).unwrap();
        let ab = probability_distances(&a, &b).unwrap();
        let ba = probability_distances(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab.sup >= 0.0 && ab.l2 >= 0.0 && ab.l2 <= ab.sup + 1e-15);
        let aa = probability_distances(&a, &a).unwrap();
        prop_assert_eq!((aa.sup, aa.l2), (0.0, 0.0));
    }

    #[test]
    fn poles_solve_their_equation(tau in 1e-3f64..1.0, frac in -0.9f64..0.9) {
        let detuning = frac * core::f64::consts::PI / tau;
        let set = macroscopic_poles(tau, detuning, 16).unwrap();
        for i in 0..set.len() {
            prop_assert!(set.residual(i) < 1e-10);
            prop_assert!(set.weights[i].re > 0.0);
        }
        // Residues of c0 sum to c0(0) = 1; the truncated sum stays below.
        let total = set.eval(0.0);
        prop_assert!(total.re <= 1.0 + 1e-12 && 1.0 - total.re <= set.tail_bound + 1e-12, "{total}");
    }

    #[test]
    fn zero_detuning_poles_come_in_conjugate_pairs(tau in 1e-3f64..1.0) {
        let set = macroscopic_poles(tau, 0.0, 8).unwrap();
        for j in 1..=8i64 {
            prop_assert_eq!(set.pole(j).unwrap(), set.pole(-j).unwrap().conj());
        }
    }

    #[test]
    fn translation_changes_reflection_by_a_phase(n in 1u32..40, delta in -100.0f64..100.0, dx in -1e-3f64..1e-3) {
        let chain = AtomChain::bragg(n, 1, DEFAULT_OMEGA_A, 0.0).unwrap();
        let a = chain_scattering(&chain, delta).unwrap();
        let b = chain_scattering(&chain.translated(dx).unwrap(), delta).unwrap();
        prop_assert!((cabs(a.r) - cabs(b.r)).abs() < 1e-10);
        prop_assert!((cabs(a.t) - cabs(b.t)).abs() < 1e-10);
    }

    #[test]
    fn regimes_are_ordered(a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let rank = |r: Regime| r as u8;
        if a <= b {
            prop_assert!(rank(Regime::classify(a)) <= rank(Regime::classify(b)));
        }
    }

    #[test]
    fn grids_are_uniform_and_closed(t_max in 1e-3f64..100.0, n in 2usize..500) {
        let g: Vec<f64> = uniform_grid(t_max, n);
        prop_assert_eq!(g.len(), n);
        prop_assert_eq!((g[0], g[n - 1]), (0.0, t_max));
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
