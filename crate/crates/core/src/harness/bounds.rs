//! Seeded ensembles for the Tikhonov and Landweber noise-propagation bounds.

use crate::analysis::{self, BoundCheck, LandweberStep};
use crate::linalg::{self, DenseMatrix, DenseVector};
use crate::model::{self, Rng};
use crate::pursuit;

use super::Result;

/// Regularization parameters cycled through by the Tikhonov ensemble.
pub const TIKHONOV_ALPHAS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
pub const LANDWEBER_ELL_MAX: usize = 100;
pub const LANDWEBER_CONVERGENCE_STEPS: usize = 10_000;

const ENSEMBLE_M: usize = 16;
const ENSEMBLE_N: usize = 64;
const ENSEMBLE_K: usize = 4;
const STREAM_TAG: u64 = 0xb0d5;

/// Restricted system `A_S` with clean and noisy samples, `S = supp(x)`.
#[derive(Debug, Clone)]
pub struct BoundInstance {
    pub a_s: DenseMatrix,
    pub x_s: DenseVector,
    pub y_clean: DenseVector,
    pub y_noisy: DenseVector,
}

/// Instance `index` of the ensemble seeded by `seed`: a 16×64 normalized
/// Gaussian matrix, a 4-sparse signal and noise at an SNR uniform in [0, 30] dB.
pub fn bound_instance(seed: u64, index: usize) -> Result<BoundInstance> {
    let mut rng = Rng::child(seed, index as u64, STREAM_TAG);
    let a = model::gen_sensing_matrix(&mut rng, ENSEMBLE_M, ENSEMBLE_N)?;
    let x = model::gen_sparse_signal(&mut rng, ENSEMBLE_N, ENSEMBLE_K)?;
    let snr = 30.0 * rng.uniform();
    let meas = model::gen_measurement(&mut rng, &a, &x, Some(snr))?;
    let a_s = a.select_columns(x.support())?;
    let x_s = DenseVector::new(x.support().iter().map(|&i| x.x()[i]).collect())?;
    Ok(BoundInstance { a_s, x_s, y_clean: meas.clean, y_noisy: meas.y })
}

#[derive(Debug, Clone)]
pub struct TikhonovOutcome {
    pub alpha: f64,
    pub check: BoundCheck,
}

pub fn tikhonov_ensemble(seed: u64, instances: usize) -> Result<Vec<TikhonovOutcome>> {
    (0..instances)
        .map(|i| {
            let inst = bound_instance(seed, i)?;
            let alpha = TIKHONOV_ALPHAS[i % TIKHONOV_ALPHAS.len()];
            let check = analysis::check_tikhonov_bound(&inst.a_s, &inst.y_clean, &inst.y_noisy, alpha)?;
            Ok(TikhonovOutcome { alpha, check })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LandweberOutcome {
    pub omega: f64,
    pub steps: Vec<LandweberStep>,
    /// `‖x^{ℓ,0} − A_S† y‖₂` after [`LANDWEBER_CONVERGENCE_STEPS`] clean iterations.
    pub convergence_gap: f64,
}

impl LandweberOutcome {
    pub fn holds(&self) -> bool {
        self.steps.iter().all(|s| s.check.holds)
    }
}

/// Landweber bound with `ω = ‖A_S‖_F⁻²` for `ℓ ≤ 100`, plus the distance of the
/// clean iterate from the least-squares solution after 10⁴ steps.
pub fn landweber_ensemble(seed: u64, instances: usize) -> Result<Vec<LandweberOutcome>> {
    (0..instances)
        .map(|i| {
            let inst = bound_instance(seed, i)?;
            let omega = 1.0 / inst.a_s.frobenius_norm().powi(2);
            let steps = analysis::check_landweber_bound(&inst.a_s, &inst.y_clean, &inst.y_noisy, omega, LANDWEBER_ELL_MAX)?;
            let start = vec![0.0; inst.a_s.cols()];
            let limit = pursuit::landweber_iterate(&inst.a_s, &inst.y_clean, &start, omega, LANDWEBER_CONVERGENCE_STEPS)?;
            let ls = linalg::least_squares(&inst.a_s, &inst.y_clean)?;
            let convergence_gap = linalg::sub(&limit, &ls)?.norm2();
            Ok(LandweberOutcome { omega, steps, convergence_gap })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_is_consistent() {
        let inst = bound_instance(1, 0).unwrap();
        assert_eq!(inst.a_s.shape(), (16, 4));
        let fitted = inst.a_s.matvec(&inst.x_s).unwrap();
        for (p, q) in fitted.iter().zip(inst.y_clean.iter()) {
            assert!((p - q).abs() < 1e-12);
        }
        assert_ne!(inst.y_clean, inst.y_noisy);
    }

    #[test]
    fn small_ensembles_hold() {
        assert!(tikhonov_ensemble(3, 8).unwrap().iter().all(|o| o.check.holds));
        assert!(landweber_ensemble(3, 2).unwrap().iter().all(LandweberOutcome::holds));
    }
}
