use num_complex::Complex64;
use photon_metrology::counting::{mach_zehnder_counting_povm, outcome_distribution, photon_counting_povm};
use photon_metrology::fock::basis;
use photon_metrology::frequentist::{
    cfi, coherent_mix_qfi_closed, convexity_bound, prob_mix_qfi_closed, prob_mix_qfi_nonorthogonal, qfi, qfi_mixed,
    qfi_pure, PureDecomposition,
};
use photon_metrology::states::coherent_superposition;
use photon_metrology::{DensityOperator, FockIndex, Probe, PureState, StateSpec};
use proptest::prelude::*;

fn pure_state(n_max: u32, raw: &[(f64, f64)]) -> Option<PureState> {
    let amps: Vec<_> = basis(n_max).zip(raw).map(|(i, &(re, im))| (i, Complex64::new(re, im))).collect();
    let norm: f64 = amps.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < 0.1 {
        return None;
    }
    PureState::new(n_max, amps.into_iter().map(|(i, a)| (i, a / norm))).ok()
}

fn arb_pure(max_n: u32) -> impl Strategy<Value = PureState> {
    (1..=max_n)
        .prop_flat_map(|n| {
            let dim = ((n + 1) * (n + 1)) as usize;
            (Just(n), prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim))
        })
        .prop_filter_map("degenerate amplitudes", |(n, raw)| pure_state(n, &raw))
}

/// Pure state without vacuum component.
fn arb_vacuum_free(max_n: u32) -> impl Strategy<Value = PureState> {
    arb_pure(max_n).prop_filter_map("vacuum only", |s| {
        let n = s.n_max();
        let amps: Vec<_> = s.iter().filter(|(i, _)| *i != FockIndex::VACUUM).collect();
        let norm: f64 = amps.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 0.1 {
            return None;
        }
        PureState::new(n, amps.into_iter().map(|(i, a)| (i, a / norm))).ok()
    })
}

fn arb_decomposition() -> impl Strategy<Value = PureDecomposition> {
    (1..=2u32)
        .prop_flat_map(|n| {
            let dim = ((n + 1) * (n + 1)) as usize;
            prop::collection::vec((0.05..1.0f64, prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim)), 1..=3)
                .prop_map(move |parts| (n, parts))
        })
        .prop_filter_map("degenerate amplitudes", |(n, parts)| {
            let total: f64 = parts.iter().map(|(w, _)| w).sum();
            let comps: Option<Vec<_>> =
                parts.iter().map(|(w, raw)| pure_state(n, raw).map(|s| (w / total, s))).collect();
            PureDecomposition::new(comps?).ok()
        })
}

fn named_specs() -> impl Strategy<Value = StateSpec> {
    let n = 1..=4u32;
    let eta = 0.05..2.0f64;
    prop_oneof![
        n.clone().prop_map(|n| StateSpec::Noon { n }),
        (n.clone(), eta.clone()).prop_map(|(n, eta)| StateSpec::VacuumFockSquared { n, eta }),
        (n.clone(), eta.clone()).prop_map(|(n, eta)| StateSpec::RhoOns { n, eta }),
        (n.clone(), eta.clone()).prop_map(|(n, eta)| StateSpec::RhoOnn { n, eta }),
        (n.clone(), eta).prop_map(|(n, eta)| StateSpec::PsiOnn { n, eta }),
        (n, 0.0..0.5f64, 0.0..0.5f64).prop_map(|(n, alpha, beta)| StateSpec::MasterState { n, alpha, beta }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_qfi_agrees_with_variance_on_pure_states(psi in arb_pure(3), phi in -3.0..3.0f64) {
        let pure = qfi_pure(&psi).unwrap().value;
        let mixed = qfi_mixed(&psi.projector(), phi).unwrap().value;
        prop_assert!((pure - mixed).abs() < 1e-9, "{pure} vs {mixed}");
    }

    #[test]
    fn encoding_preserves_norm_and_commutes_with_twirl(psi in arb_pure(3), phi in -3.0..3.0f64) {
        let enc = psi.encode_phase(phi);
        prop_assert!((enc.norm_sqr() - 1.0).abs() < 1e-12);
        let probe = Probe::from(psi);
        let a = probe.encode_phase(phi).twirl_total_number();
        let b = probe.twirl_total_number().encode_phase(phi);
        prop_assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn twirl_never_increases_qfi(psi in arb_pure(3)) {
        let before = qfi_pure(&psi).unwrap().value;
        let after = qfi_mixed(&Probe::from(psi).twirl_total_number(), 0.0).unwrap().value;
        prop_assert!(after <= before + 1e-9);
    }

    #[test]
    fn convexity_bound_dominates_mixed_qfi(decomp in arb_decomposition(), phi in -3.0..3.0f64) {
        let rho = decomp.density().unwrap();
        let bound = convexity_bound(&decomp).unwrap();
        let value = qfi_mixed(&rho, phi).unwrap().value;
        prop_assert!(bound - value >= -1e-9, "bound {bound} < qfi {value}");
    }

    #[test]
    fn counting_information_never_exceeds_qfi(decomp in arb_decomposition(), phi in -3.0..3.0f64) {
        let rho = decomp.density().unwrap();
        let f = qfi_mixed(&rho, phi).unwrap().value;
        for povm in [photon_counting_povm(rho.n_max()), mach_zehnder_counting_povm(rho.n_max())] {
            let c = cfi(&rho, phi, &povm).unwrap();
            prop_assert!(c >= -1e-12 && c <= f + 1e-9, "cfi {c} qfi {f}");
        }
    }

    #[test]
    fn outcome_probabilities_sum_to_one(decomp in arb_decomposition(), phi in -3.0..3.0f64) {
        let probe = Probe::from(decomp.density().unwrap());
        let d = outcome_distribution(&probe, phi, &mach_zehnder_counting_povm(probe.n_max()));
        prop_assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(d.values().all(|&p| p > -1e-12));
    }

    #[test]
    fn prob_mix_closed_forms_agree(psi in arb_pure(3), p in 0.01..1.0f64, phi in -3.0..3.0f64) {
        prop_assume!(psi.vacuum_overlap().norm_sqr() < 0.99);
        let closed = prob_mix_qfi_closed(&psi, p).unwrap();
        let nonorth = prob_mix_qfi_nonorthogonal(&psi, p).unwrap();
        prop_assert!((closed - nonorth).abs() < 1e-12, "{closed} vs {nonorth}");
        let n = psi.n_max();
        let vacuum = PureState::basis_state(n, FockIndex::VACUUM).unwrap().projector();
        let rho = DensityOperator::mixture(n, [(1.0 - p, &vacuum), (p, &psi.projector())]).unwrap();
        let spectral = qfi_mixed(&rho, phi).unwrap().value;
        prop_assert!((closed - spectral).abs() < 1e-9, "{closed} vs {spectral}");
        let ceiling = p * qfi_pure(&psi).unwrap().value;
        prop_assert!(closed <= ceiling + 1e-12);
    }

    #[test]
    fn vacuum_free_prob_mix_saturates_ceiling(psi in arb_vacuum_free(3), p in 0.0..1.0f64) {
        let closed = prob_mix_qfi_closed(&psi, p).unwrap();
        prop_assert!((closed - p * qfi_pure(&psi).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn coherent_mix_matches_explicit_superposition(psi in arb_vacuum_free(3), p in 0.01..1.0f64) {
        let closed = coherent_mix_qfi_closed(&psi, p).unwrap();
        let explicit = qfi_pure(&coherent_superposition(&psi, p).unwrap()).unwrap().value;
        prop_assert!((closed.value - explicit).abs() < 1e-9);
        prop_assert!((closed.conditioned - closed.value / p).abs() < 1e-9 * (1.0 + closed.conditioned));
        let f = qfi_pure(&psi).unwrap().value;
        let second = psi.expect_diagonal(|i| i.difference().powi(2));
        prop_assert!(closed.conditioned >= f - 1e-9 && closed.conditioned <= second + 1e-9);
    }

    #[test]
    fn named_families_have_phase_independent_qfi(spec in named_specs()) {
        let rho = spec.build().unwrap().to_density();
        let values: Vec<f64> = [0.0, 0.3, 1.7].iter().map(|&phi| qfi_mixed(&rho, phi).unwrap().value).collect();
        prop_assert!((values[0] - values[1]).abs() < 1e-9 && (values[0] - values[2]).abs() < 1e-9);
        prop_assert!(values[0] >= 0.0);
    }

    #[test]
    fn fixed_number_identities(n in 1..=8u32, eta in 0.01..3.0f64) {
        let probe = StateSpec::VacuumFockSquared { n, eta }.build().unwrap();
        let f = qfi(&probe).unwrap().value;
        let nbar = probe.mean_total_number();
        let nf = n as f64;
        prop_assert!((f - nbar * (nf - nbar / 2.0)).abs() < 1e-9);
        prop_assert!((f / probe.mean_total_number_squared() - 1.0 / (1.0 + 2.0 * eta * eta)).abs() < 1e-9);
    }
}
