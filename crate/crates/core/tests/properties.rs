mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use pfsic_core::constructions::random_rank_one_povm;
use pfsic_core::fisher::{fisher_rank, FD_STEP, PFSIC_TOL};
use pfsic_core::tomography::PovmSource;
use pfsic_core::*;
use proptest::prelude::*;
use rand::Rng;

use common::*;

/// `(d, n, seed, orthogonal_outcome)` for a random valid POVM.
fn povm_params() -> impl Strategy<Value = (usize, usize, u64, bool)> {
    (2usize..=6)
        .prop_flat_map(|d| (Just(d), d..=3 * d, any::<u64>(), prop::bool::weighted(0.2)))
}

fn build((d, n, seed, orth): (usize, usize, u64, bool)) -> RankOnePovm {
    random_rank_one_povm(d, n, orth, &mut rng(seed)).unwrap()
}

fn random_state(d: usize, seed: u64) -> PureState {
    let mut r = rng(seed);
    PureState::new(
        (0..d)
            .map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn probabilities_form_a_distribution(params in povm_params(), state_seed in any::<u64>()) {
        let povm = build(params);
        let p = povm.probabilities(&random_state(povm.dim(), state_seed)).unwrap();
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gauge_fix_is_idempotent_and_preserves_elements(params in povm_params()) {
        let povm = build(params);
        let g = povm.gauge_fixed();
        prop_assert_eq!(g.gauge_fixed(), g.clone());
        for xi in 0..povm.n_outcomes() {
            for (ra, rb) in povm.element(xi).iter().zip(g.element(xi)) {
                for (a, b) in ra.iter().zip(rb) {
                    prop_assert!((a - b).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn gauge_fixed_decomposition_satisfies_gram_conditions(params in povm_params()) {
        let povm = build(params).gauge_fixed();
        let r = povm.real_decomposition().unwrap();
        prop_assert!(r.gram_residual() <= 1e-10);
        prop_assert!(r.c(0).iter().all(|&v| v == 0.0));
        prop_assert!(r.b(0).iter().all(|&v| v >= 0.0));
        let p0 = povm.probabilities(&PureState::fiducial(povm.dim()).unwrap()).unwrap();
        for (p, b0) in p0.iter().zip(r.b(0)) {
            prop_assert!((p - b0 * b0).abs() <= 1e-15);
        }
    }

    #[test]
    fn fisher_bounds_hold(params in povm_params()) {
        let povm = build(params);
        let d = povm.dim();
        let c = classical_fisher(&povm).unwrap();
        let q = quantum_fisher_pure(d).unwrap();
        let gm = gill_massar(&c, &q).unwrap();
        prop_assert!(gm <= (d - 1) as f64 + 1e-9);
        let sym = fisher_symmetry_quantity(&c, &q).unwrap();
        prop_assert!(sym >= gm * gm / (2 * d - 2) as f64 - 1e-9);
        prop_assert!(fisher_rank(&c) <= povm.n_outcomes().min(2 * d - 2));
        let min_eig = c.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(min_eig >= -1e-10);
        prop_assert!(max_abs_diff(&c, &c.transpose()) == 0.0);
        if povm.n_outcomes() < 2 * d - 1 {
            prop_assert!(!is_pfsic(&povm, PFSIC_TOL).is_pfsic);
        }
    }

    #[test]
    fn gram_form_matches_finite_differences(params in povm_params()) {
        let povm = build(params);
        let c = classical_fisher(&povm).unwrap();
        let fd = classical_fisher_fd(&povm, FD_STEP).unwrap();
        prop_assert!(max_abs_diff(&c, &fd) <= 1e-6);
    }

    #[test]
    fn mixing_preserves_fisher_matrix(d in 2usize..=5, extra in 0usize..=3, seed in any::<u64>()) {
        let base = minimal_pfsic(d).unwrap();
        let o = OrthogonalMatrix::random(base.n_outcomes() + extra, &mut rng(seed));
        let mixed = orthogonal_mix(&base, &o, MixMode::Lenient).unwrap();
        prop_assert!(mixed.completeness_residual() <= 1e-10);
        let before = classical_fisher(&base).unwrap();
        let after = classical_fisher(&mixed).unwrap();
        prop_assert!(max_abs_diff(&before, &after) <= 1e-10);
    }

    #[test]
    fn mixing_composes(d in 2usize..=4, extra in 0usize..=2, seed in any::<u64>()) {
        let base = two_basis_pfsic(d, 0.5, None).unwrap();
        let m = base.n_outcomes() + extra;
        let mut r = rng(seed);
        let o1 = OrthogonalMatrix::random(m, &mut r);
        let o2 = OrthogonalMatrix::random(m, &mut r);
        let twice = orthogonal_mix(
            &orthogonal_mix(&base, &o1, MixMode::Lenient).unwrap(),
            &o2,
            MixMode::Lenient,
        )
        .unwrap();
        // Gauge fixing of the intermediate POVM flips the sign of vectors with a
        // negative |0⟩ component, which is the reflection S in O2·S·O1.
        let b0: Vec<f64> = base.vectors().iter().map(|v| v[0].re).collect();
        let signs: Vec<f64> = (0..m)
            .map(|xi| {
                let b: f64 = (0..base.n_outcomes()).map(|eta| o1.matrix()[(xi, eta)] * b0[eta]).sum();
                if b < 0.0 { -1.0 } else { 1.0 }
            })
            .collect();
        let s = OrthogonalMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(signs))).unwrap();
        let once = orthogonal_mix(&base, &o2.compose(&s).unwrap().compose(&o1).unwrap(), MixMode::Lenient).unwrap();
        let fid = PureState::fiducial(d).unwrap();
        let (pa, pb) = (twice.probabilities(&fid).unwrap(), once.probabilities(&fid).unwrap());
        for (a, b) in pa.iter().zip(&pb) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let ca = classical_fisher(&twice).unwrap();
        let cb = classical_fisher(&once).unwrap();
        prop_assert!(max_abs_diff(&ca, &cb) <= 1e-10);
    }

    #[test]
    fn two_basis_saturates_gill_massar(d in 2usize..=8, p_chi in 0.001f64..0.999) {
        let povm = two_basis_pfsic(d, p_chi, None).unwrap();
        let c = classical_fisher(&povm).unwrap();
        let q = quantum_fisher_pure(d).unwrap();
        prop_assert!((gill_massar(&c, &q).unwrap() - (d - 1) as f64).abs() <= 1e-9);
        // Information budget: per-parameter information in units of the quantum limit.
        let budget: f64 = (0..2 * d - 2).map(|a| c[(a, a)] / 4.0).sum();
        prop_assert!((budget - (d - 1) as f64).abs() <= 1e-9);
    }

    #[test]
    fn perturbed_zero_is_fiducial(d in 2usize..=10) {
        prop_assert_eq!(
            PureState::perturbed(&LocalParams::zeros(d).unwrap()).unwrap(),
            PureState::fiducial(d).unwrap()
        );
    }

    #[test]
    fn trine_cannot_see_bloch_z_sign(x0 in -0.6f64..0.6, x1 in -0.6f64..0.6) {
        let pair = trine_ambiguity_demo(&LocalParams::new(2, vec![x0, x1]).unwrap()).unwrap();
        prop_assert!(pair.max_abs_difference <= 1e-12);
    }
}

#[test]
fn information_budget_sweep() {
    for d in [2, 3, 5] {
        for i in 1..=9 {
            let p_chi = i as f64 / 10.0;
            let povm = two_basis_pfsic(d, p_chi, None).unwrap();
            let c = classical_fisher(&povm).unwrap();
            let budget: f64 = (0..2 * d - 2).map(|a| c[(a, a)] / 4.0).sum();
            assert!((budget - (d - 1) as f64).abs() <= 1e-9);
            let sym = fisher_symmetry_quantity(&c, &quantum_fisher_pure(d).unwrap()).unwrap();
            let want = (d - 1) as f64 * (p_chi * p_chi + (1.0 - p_chi) * (1.0 - p_chi));
            assert!((sym - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn estimator_is_unbiased_at_first_order() {
    for (d, seed) in [(2, 1u64), (3, 2), (4, 3)] {
        let (n, m) = (20_000u64, 400usize);
        let report = run_trials(&SimConfig {
            povm: PovmSource::Descriptor(ConstructionDescriptor::Minimal { d }),
            true_params: None,
            shots_per_trial: n,
            trials: m,
            seed,
        })
        .unwrap();
        let p_min = 1.0 / (2 * d - 1) as f64;
        let bound = 5.0 / (2.0 * n as f64 * m as f64 * p_min).sqrt();
        for v in &report.empirical_mean {
            assert!(v.abs() <= bound, "d={d}: mean {v} exceeds {bound}");
        }
        // Covariance saturation: 3σ of the sample-covariance fluctuation.
        let cov = report.empirical_cov.unwrap();
        let scale = 2.0 * n as f64;
        for a in 0..2 * d - 2 {
            assert!((cov[(a, a)] * scale - 1.0).abs() <= 3.0 * (2.0 / m as f64).sqrt());
            for b in 0..2 * d - 2 {
                if a != b {
                    assert!(cov[(a, b)].abs() <= 3.0 / (m as f64 * scale).sqrt());
                }
            }
        }
    }
}

#[test]
fn small_perturbation_is_recovered() {
    let truth = LocalParams::new(3, vec![0.02, -0.01, 0.005, 0.03]).unwrap();
    let report = run_trials(&SimConfig {
        povm: PovmSource::Explicit(two_basis_pfsic(3, 0.5, None).unwrap()),
        true_params: Some(truth.clone()),
        shots_per_trial: 50_000,
        trials: 300,
        seed: 5,
    })
    .unwrap();
    for (m, t) in report.empirical_mean.iter().zip(truth.as_slice()) {
        // Statistical error ~1.8e-4 plus second-order bias below |x|².
        assert!((m - t).abs() < 2e-3, "mean {m} vs {t}");
    }
}

#[test]
fn parallel_and_sequential_trials_agree() {
    let cfg = SimConfig {
        povm: PovmSource::Descriptor(ConstructionDescriptor::Minimal { d: 3 }),
        true_params: None,
        shots_per_trial: 1000,
        trials: 50,
        seed: 17,
    };
    let parallel = run_trials(&cfg).unwrap();
    let sequential = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_trials(&cfg).unwrap());
    assert_eq!(parallel, sequential);
}
