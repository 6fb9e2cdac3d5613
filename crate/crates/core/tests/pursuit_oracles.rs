//! Recovery algorithms against brute-force oracles and structural invariants.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use pursuitlab::analysis;
use pursuitlab::linalg::{self, DenseMatrix};
use pursuitlab::model::{self, Rng};
use pursuitlab::pursuit::{self, AlgorithmSpec, Omega, StoppingRule, Termination};

fn svd_least_squares(a: &DenseMatrix, cols: &[usize], y: &[f64]) -> (Vec<f64>, f64) {
    let sub = DMatrix::from_fn(a.rows(), cols.len(), |i, j| a.get(i, cols[j]));
    let yv = DVector::from_column_slice(y);
    let coef = sub.clone().svd(true, true).solve(&yv, 1e-14).unwrap();
    let resid = (yv - sub * &coef).norm();
    (coef.iter().copied().collect(), resid)
}

#[derive(Debug)]
struct Problem {
    a: DenseMatrix,
    x: model::SparseSignal,
    y: Vec<f64>,
    eps: f64,
}

fn problem(seed: u64, m: usize, n: usize, k: usize, snr_db: Option<f64>) -> Problem {
    let mut rng = Rng::seed_from_u64(seed);
    let a = model::gen_sensing_matrix(&mut rng, m, n).unwrap().into_matrix();
    let x = model::gen_sparse_signal(&mut rng, n, k).unwrap();
    let meas = model::gen_measurement(&mut rng, &a, &x, snr_db).unwrap();
    Problem { a, x, y: meas.y.into_vec(), eps: meas.epsilon }
}

fn all_algorithms(k: usize) -> Vec<AlgorithmSpec> {
    vec![
        AlgorithmSpec::Omp,
        AlgorithmSpec::Sgp { k_max: k, mu: None },
        AlgorithmSpec::Tomp { alpha: 0.5 },
        AlgorithmSpec::Lomp { lambda: 5, omega: Omega::Spectral },
        AlgorithmSpec::Lomp { lambda: 5, omega: Omega::Frobenius },
        AlgorithmSpec::Cosamp { k },
    ]
}

#[test]
fn omp_matches_exhaustive_support_search() {
    let p = problem(1020, 10, 20, 3, None);
    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
    analysis::for_each_subset_colex(20, 3, |s| {
        let (coef, resid) = svd_least_squares(&p.a, s, &p.y);
        if best.as_ref().is_none_or(|b| resid < b.2) {
            best = Some((s.to_vec(), coef, resid));
        }
    });
    let (support, coef, _) = best.unwrap();
    let mut oracle = vec![0.0; 20];
    for (&j, c) in support.iter().zip(&coef) {
        oracle[j] = *c;
    }

    let stop = StoppingRule::new(0.0, 10).unwrap();
    let res = pursuit::recover_omp(&p.a, &p.y, &stop).unwrap();
    assert_eq!(res.termination, Termination::ResidualMet);
    assert_eq!(res.support, support);
    for (got, want) in res.x_hat.iter().zip(&oracle) {
        assert!((got - want).abs() <= 1e-8);
    }
}

#[test]
fn omp_at_high_snr_with_many_measurements_finds_k_atoms() {
    let mut sizes = Vec::new();
    for seed in 0..50 {
        let p = problem(seed, 64, 256, 8, Some(40.0));
        let stop = StoppingRule::new(p.eps, 64).unwrap();
        sizes.push(pursuit::recover_omp(&p.a, &p.y, &stop).unwrap().support.len());
    }
    let at_k = sizes.iter().filter(|&&s| s == 8).count();
    assert!(at_k >= 45, "{sizes:?}");
}

#[test]
fn cosamp_single_atom_matches_singleton_search() {
    for seed in 0..20 {
        let p = problem(400 + seed, 4, 6, 1, None);
        let (j, coef) = (0..6)
            .map(|j| {
                let (c, r) = svd_least_squares(&p.a, &[j], &p.y);
                (j, c[0], r)
            })
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(j, c, _)| (j, c))
            .unwrap();
        let stop = StoppingRule::new(0.0, 4).unwrap();
        let res = pursuit::recover_cosamp(&p.a, &p.y, &stop, 1).unwrap();
        assert_eq!(res.support, vec![j]);
        assert!((res.x_hat[j] - coef).abs() <= 1e-10);
    }
}

#[test]
fn lomp_with_long_inner_loop_reproduces_least_squares() {
    let p = problem(77, 32, 64, 4, None);
    let a_s = p.a.select_columns(p.x.support()).unwrap();
    let omega = pursuit::landweber_bound(&a_s).unwrap();
    let z = pursuit::landweber_iterate(&a_s, &p.y, &[0.0; 4], omega, 10_000).unwrap();
    let (ls, _) = svd_least_squares(&p.a, p.x.support(), &p.y);
    assert!(linalg::sub(&z, &ls).unwrap().norm2() <= 1e-8);

    let stop = StoppingRule::new(0.0, 32).unwrap();
    let omp = pursuit::recover_omp(&p.a, &p.y, &stop).unwrap();
    let lomp = pursuit::recover_lomp(&p.a, &p.y, &stop, 10_000, Omega::Spectral).unwrap();
    assert_eq!(omp.support, lomp.support);
    assert!(linalg::sub(&omp.x_hat, &lomp.x_hat).unwrap().norm2() <= 1e-8);
}

#[test]
fn tomp_with_tiny_alpha_reproduces_omp() {
    let p = problem(5, 32, 128, 6, Some(30.0));
    let stop = StoppingRule::new(p.eps, 32).unwrap();
    let omp = pursuit::recover_omp(&p.a, &p.y, &stop).unwrap();
    let tomp = pursuit::recover_tomp(&p.a, &p.y, &stop, 1e-12).unwrap();
    assert_eq!(omp.support, tomp.support);
    assert!(linalg::sub(&omp.x_hat, &tomp.x_hat).unwrap().norm2() <= 1e-8);
}

#[test]
fn sgp_auto_step_for_sixteen_measurements() {
    assert!((pursuit::sgp_auto_mu(16, 8) - 4.0 / 3.0).abs() < 1e-15);
}

fn seeded_problem() -> impl Strategy<Value = Problem> {
    (any::<u64>(), 8usize..=32, 1usize..=4, prop::option::of(0.0f64..40.0))
        .prop_map(|(seed, m, k, snr)| problem(seed, m, 2 * m, k, snr))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omp_residual_is_orthogonal_to_selected_atoms(p in seeded_problem()) {
        let m = p.a.rows();
        let stop = StoppingRule::new(p.eps, m).unwrap();
        let res = pursuit::recover_omp(&p.a, &p.y, &stop).unwrap();
        let r = linalg::sub(&p.y, &p.a.matvec(&res.x_hat).unwrap()).unwrap();
        let u = p.a.matvec_transpose(&r).unwrap();
        for &j in &res.support {
            prop_assert!(u[j].abs() <= 1e-9);
        }
    }

    #[test]
    fn omp_and_cosamp_residuals_never_increase(p in seeded_problem()) {
        let m = p.a.rows();
        let k = p.x.k();
        let stop = StoppingRule::new(p.eps, m).unwrap();
        for spec in [AlgorithmSpec::Omp, AlgorithmSpec::Cosamp { k }] {
            let res = spec.recover(&p.a, &p.y, &stop).unwrap();
            for w in res.residual_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }

    #[test]
    fn greedy_support_grows_by_one_per_iteration(p in seeded_problem()) {
        let m = p.a.rows();
        let stop = StoppingRule::new(p.eps, m).unwrap();
        for spec in all_algorithms(p.x.k()).into_iter().filter(|s| !matches!(s, AlgorithmSpec::Cosamp { .. })) {
            let res = spec.recover(&p.a, &p.y, &stop).unwrap();
            prop_assert_eq!(res.support.len(), res.iterations);
            prop_assert_eq!(res.residual_history.len(), res.iterations + 1);
            prop_assert!(res.iterations <= m);
        }
    }

    #[test]
    fn estimates_vanish_off_support_and_history_ends_at_residual(p in seeded_problem()) {
        let m = p.a.rows();
        let stop = StoppingRule::new(p.eps, m).unwrap();
        for spec in all_algorithms(p.x.k()) {
            let res = spec.recover(&p.a, &p.y, &stop).unwrap();
            for (j, v) in res.x_hat.iter().enumerate() {
                if res.support.binary_search(&j).is_err() {
                    prop_assert_eq!(*v, 0.0);
                }
            }
            let r = linalg::sub(&p.y, &p.a.matvec(&res.x_hat).unwrap()).unwrap().norm2();
            prop_assert!((r - res.final_residual()).abs() <= 1e-9 * (1.0 + r), "{} {} {} {:?}", spec.name(), r, res.final_residual(), res.termination);
            if res.termination == Termination::ResidualMet {
                prop_assert!(res.final_residual() <= stop.effective_threshold(linalg::vec_norm2(&p.y)));
            }
        }
    }

    #[test]
    fn landweber_steps_compose(seed in any::<u64>(), a in 0usize..20, b in 0usize..20) {
        let p = problem(seed, 12, 24, 3, Some(20.0));
        let a_s = p.a.select_columns(p.x.support()).unwrap();
        let omega = pursuit::landweber_bound(&a_s).unwrap();
        let start = [0.1, -0.2, 0.3];
        let two = pursuit::landweber_iterate(&a_s, &p.y, &start, omega, a).unwrap();
        let two = pursuit::landweber_iterate(&a_s, &p.y, &two, omega, b).unwrap();
        let one = pursuit::landweber_iterate(&a_s, &p.y, &start, omega, a + b).unwrap();
        prop_assert!(linalg::sub(&one, &two).unwrap().norm2() <= 1e-12);
    }

    #[test]
    fn lomp_inner_loop_is_additive(p in seeded_problem(), a in 1usize..6, b in 1usize..6) {
        // one outer iteration: λ = a then λ = b from the warm start equals λ = a + b
        let stop = StoppingRule::new(0.0, 1).unwrap();
        let whole = pursuit::recover_lomp(&p.a, &p.y, &stop, a + b, Omega::Spectral).unwrap();
        let first = pursuit::recover_lomp(&p.a, &p.y, &stop, a, Omega::Spectral).unwrap();
        let a_s = p.a.select_columns(&first.support).unwrap();
        let omega = pursuit::landweber_bound(&a_s).unwrap();
        let warm: Vec<f64> = first.support.iter().map(|&j| first.x_hat[j]).collect();
        let resumed = pursuit::landweber_iterate(&a_s, &p.y, &warm, omega, b).unwrap();
        let direct: Vec<f64> = whole.support.iter().map(|&j| whole.x_hat[j]).collect();
        prop_assert_eq!(&first.support, &whole.support);
        prop_assert!(linalg::sub(&resumed, &direct).unwrap().norm2() <= 1e-12);
    }
}
