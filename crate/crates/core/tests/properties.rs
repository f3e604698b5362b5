use std::sync::Arc;

use mch_core::eulerian::{total_variation, uniform_grid};
use mch_core::flow::{velocity_profile, FlowState, Lagrangian};
use mch_core::kernel::{green, green_prime, MollifierShape};
use mch_core::momentum::{Atom, Momentum, Profile, SampleTable};
use mch_core::regularized::{reg_velocity, FieldMethod, ParticleEnsemble, RegScheme};
use proptest::prelude::*;

fn table_momentum(values: &[f64]) -> Momentum {
    let n = values.len() + 2;
    let mut v = vec![0.0];
    v.extend_from_slice(values);
    v.push(0.0);
    let table = SampleTable::new(uniform_grid(-1.0, 1.0, n), v).unwrap();
    Momentum::new(1.0, Profile::Table(table), Vec::new()).unwrap()
}

fn monotone(gaps: &[f64], start: f64) -> Vec<f64> {
    let mut x = vec![start];
    for g in gaps {
        x.push(x.last().unwrap() + g);
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prefix_sums_match_double_loop(
        values in prop::collection::vec(-4.0..4.0f64, 7),
        gaps in prop::collection::vec(1e-3..0.2f64, 32),
        xxi in prop::collection::vec(0.05..3.0f64, 33),
        start in -3.0..1.0f64,
    ) {
        let m = table_momentum(&values);
        let setup = Arc::new(Lagrangian::new(&m, 33).unwrap());
        let x = monotone(&gaps, start);
        let state = FlowState::from_parts(setup.clone(), 0.0, x.clone(), xxi).unwrap();
        let vp = velocity_profile(&state).unwrap();
        let q = setup.masses();
        let scale = q.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
        for (i, &xi) in x.iter().enumerate() {
            let u: f64 = x.iter().zip(q).map(|(&xj, &qj)| green(xi - xj) * qj).sum();
            let ux: f64 = x
                .iter()
                .zip(q)
                .filter(|(&xj, _)| xj != xi)
                .map(|(&xj, &qj)| green_prime(xi - xj) * qj)
                .sum();
            prop_assert!((vp.u[i] - u).abs() <= 1e-12 * scale);
            prop_assert!((vp.ux[i] - ux).abs() <= 1e-12 * scale);
            prop_assert!((vp.big_u[i] - (u * u - ux * ux)).abs() <= 1e-11 * scale * scale);
        }
    }

    #[test]
    fn a_priori_bounds_hold_on_arbitrary_states(
        values in prop::collection::vec(-4.0..4.0f64, 7),
        gaps in prop::collection::vec(1e-4..0.3f64, 32),
        xxi in prop::collection::vec(0.01..3.0f64, 33),
    ) {
        let m = table_momentum(&values);
        let setup = Arc::new(Lagrangian::new(&m, 33).unwrap());
        let m1: f64 = setup.masses().iter().map(|v| v.abs()).sum();
        let state = FlowState::from_parts(setup, 0.0, monotone(&gaps, -1.0), xxi).unwrap();
        let vp = velocity_profile(&state).unwrap();
        for i in 0..vp.u.len() {
            prop_assert!(vp.u[i].abs() <= 0.5 * m1 + 1e-12);
            prop_assert!(vp.ux[i].abs() <= 0.5 * m1 + 1e-12);
            prop_assert!(vp.big_u[i].abs() <= 0.5 * m1 * m1 + 1e-12);
        }
    }

    #[test]
    fn sorted_regularized_velocity_matches_naive(
        x in prop::collection::vec(-2.0..2.0f64, 12),
        p in prop::collection::vec(-1.5..1.5f64, 12),
        eps in 0.05..0.4f64,
    ) {
        let ens = ParticleEnsemble { t: 0.0, epsilon: eps, x, p };
        let naive = RegScheme::new(MollifierShape::Polynomial, eps, 16, FieldMethod::Naive).unwrap();
        let sorted = RegScheme::new(MollifierShape::Polynomial, eps, 16, FieldMethod::Sorted).unwrap();
        let a = reg_velocity(&ens, &naive).unwrap();
        let b = reg_velocity(&ens, &sorted).unwrap();
        let m1 = ens.m1();
        for (va, vb) in a.iter().zip(&b) {
            prop_assert!((va - vb).abs() <= 1e-10 * m1.max(1.0).powi(2));
            prop_assert!(va.abs() <= 0.5 * m1 * m1 + 1e-12);
        }
    }

    #[test]
    fn scaling_is_linear_in_both_norms(factor in 1e-3..5.0f64, amp in 0.1..4.0f64) {
        let m = Momentum::new(
            1.0,
            Profile::Bump { amplitude: amp, center: 0.0, width: 1.0 },
            vec![Atom { position: 0.3, weight: 0.7 }],
        )
        .unwrap();
        let s = m.scale(factor).unwrap();
        prop_assert!((s.m1_norm() - factor * m.m1_norm()).abs() <= 1e-12 * s.m1_norm());
        prop_assert!((s.atoms()[0].weight - factor * 0.7).abs() <= 1e-15);
    }

    #[test]
    fn total_variation_of_monotone_samples_telescopes(
        gaps in prop::collection::vec(0.0..1.0f64, 1..50),
        start in -5.0..5.0f64,
        up in any::<bool>(),
    ) {
        let mut v = monotone(&gaps, start);
        if !up {
            v.reverse();
        }
        let tv = total_variation(&v);
        let ends = (v[v.len() - 1] - v[0]).abs();
        prop_assert!((tv - ends).abs() <= 1e-12 * (1.0 + ends));
    }
}
