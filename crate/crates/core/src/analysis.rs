//! Reconstruction metrics, the exhaustive restricted-isometry verifier, and
//! numerical checks of the Tikhonov and Landweber noise-propagation bounds.

use thiserror::Error;

use crate::linalg::{self, DenseMatrix, LinalgError};
use crate::model::SparseSignal;
use crate::pursuit::{self, PursuitError, RecoveryResult, Termination};

/// Largest number of `k`-subsets `ric_exact` will enumerate.
pub const RIC_ENUMERATION_LIMIT: u64 = 1_000_000;
/// Magnitude above which an estimate entry counts as nonzero.
pub const NONZERO_TOL: f64 = 1e-8;
/// Slack allowed when comparing a bound's two sides.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("true signal has zero spread; NRMSE is undefined")]
    ZeroSpread,
    #[error("SNR is undefined when either energy is zero")]
    UndefinedSnr,
    #[error("RIC enumeration needs {subsets} subsets, above the limit of {limit}")]
    TooLarge { subsets: u64, limit: u64 },
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("Landweber step {omega:e} outside (0, {bound:e}]")]
    InvalidOmega { omega: f64, bound: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<PursuitError> for AnalysisError {
    fn from(e: PursuitError) -> Self {
        match e {
            PursuitError::Linalg(l) => AnalysisError::Linalg(l),
            PursuitError::InvalidOmega { omega, bound } => AnalysisError::InvalidOmega { omega, bound },
            other => AnalysisError::InvalidDims(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Per-trial outcome of one recovery run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub nrmse: f64,
    pub support_size: usize,
    /// `supp(x) ⊆ S`
    pub support_recovered: bool,
    /// `supp(x) = S`
    pub exact_support: bool,
    pub residual_final: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// `‖x̂‖₀` counted above [`NONZERO_TOL`].
    pub nonzero_count: usize,
}

/// `‖x − x̂‖₂ / (√N · Δ)` where `Δ = max(x) − min(x)` over all entries of `x`.
pub fn nrmse(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() || x.is_empty() {
        return Err(AnalysisError::InvalidDims(format!("nrmse: lengths {} and {}", x.len(), x_hat.len())));
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max - min;
    if !(spread > 0.0) {
        return Err(AnalysisError::ZeroSpread);
    }
    let err = linalg::sub(x, x_hat)?.norm2();
    Ok(err / ((x.len() as f64).sqrt() * spread))
}

/// `10·log10(‖Ax‖² / ‖v‖²)`.
pub fn snr_db(clean: &[f64], noise: &[f64]) -> Result<f64> {
    let s = linalg::vec_norm2(clean);
    let n = linalg::vec_norm2(noise);
    if s == 0.0 || n == 0.0 {
        return Err(AnalysisError::UndefinedSnr);
    }
    Ok(20.0 * (s / n).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportMetrics {
    pub support_size: usize,
    pub support_recovered: bool,
    pub exact_support: bool,
}

pub fn support_metrics(x: &SparseSignal, result: &RecoveryResult) -> SupportMetrics {
    // both supports are sorted
    let recovered = x.support().iter().all(|i| result.support.binary_search(i).is_ok());
    SupportMetrics {
        support_size: result.support.len(),
        support_recovered: recovered,
        exact_support: recovered && result.support.len() == x.k(),
    }
}

pub fn trial_metrics(x: &SparseSignal, result: &RecoveryResult) -> Result<TrialMetrics> {
    let support = support_metrics(x, result);
    Ok(TrialMetrics {
        nrmse: nrmse(x.x(), &result.x_hat)?,
        support_size: support.support_size,
        support_recovered: support.support_recovered,
        exact_support: support.exact_support,
        residual_final: result.final_residual(),
        iterations: result.iterations,
        termination: result.termination,
        nonzero_count: result.nonzero_count(NONZERO_TOL),
    })
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n as u128 - i) / (i + 1);
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Visits all `k`-subsets of `0..n` in colexicographic order.
pub fn for_each_subset_colex(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        visit(&c);
        // smallest position that can move up without colliding with its successor
        let mut j = 0;
        while j < k {
            let limit = if j + 1 < k { c[j + 1] } else { n };
            if c[j] + 1 < limit {
                break;
            }
            j += 1;
        }
        if j == k {
            return;
        }
        c[j] += 1;
        for (i, ci) in c.iter_mut().enumerate().take(j) {
            *ci = i;
        }
    }
}

/// Restricted isometry constant of order `k`, by enumerating every
/// `k`-column submatrix:
/// `δ_k = max_S max(1 − λ_min(A_SᵀA_S), λ_max(A_SᵀA_S) − 1)`.
pub fn ric_exact(a: &DenseMatrix, k: usize) -> Result<f64> {
    let (m, n) = a.shape();
    if k == 0 || k > m || k > n {
        return Err(AnalysisError::InvalidDims(format!("need 1 <= k <= min(m, N), got k = {k} for {m}x{n}")));
    }
    let subsets = binomial(n, k);
    if subsets > RIC_ENUMERATION_LIMIT {
        return Err(AnalysisError::TooLarge { subsets, limit: RIC_ENUMERATION_LIMIT });
    }
    let mut delta = 0.0_f64;
    let mut failure = None;
    for_each_subset_colex(n, k, |cols| {
        if failure.is_some() {
            return;
        }
        let res = a.select_columns(cols).and_then(|sub| linalg::gram_eig_extremes(&sub));
        match res {
            Ok((lo, hi)) => delta = delta.max(1.0 - lo).max(hi - 1.0),
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(delta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, holds: lhs <= rhs + BOUND_SLACK }
    }
}

/// Compares `‖x^{α,0} − x^{α,ε}‖₂` against `ε / √α` with `ε = ‖y_noisy − y_clean‖₂`.
pub fn check_tikhonov_bound(a_s: &DenseMatrix, y_clean: &[f64], y_noisy: &[f64], alpha: f64) -> Result<BoundCheck> {
    let clean = linalg::solve_tikhonov(a_s, y_clean, alpha)?;
    let noisy = linalg::solve_tikhonov(a_s, y_noisy, alpha)?;
    let lhs = linalg::sub(&clean, &noisy)?.norm2();
    let eps = linalg::sub(y_noisy, y_clean)?.norm2();
    Ok(BoundCheck::new(lhs, eps / alpha.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandweberStep {
    pub ell: usize,
    pub check: BoundCheck,
}

/// Runs the clean and noisy Landweber sequences from zero and compares
/// `‖x^{ℓ,0} − x^{ℓ,ε}‖₂` with `√ℓ·ε` for every `ℓ = 0..=ell_max`.
pub fn check_landweber_bound(
    a_s: &DenseMatrix,
    y_clean: &[f64],
    y_noisy: &[f64],
    omega: f64,
    ell_max: usize,
) -> Result<Vec<LandweberStep>> {
    let bound = pursuit::landweber_bound(a_s)?;
    if !(omega > 0.0 && omega <= bound * (1.0 + 1e-12)) {
        return Err(AnalysisError::InvalidOmega { omega, bound });
    }
    let eps = linalg::sub(y_noisy, y_clean)?.norm2();
    let s = a_s.cols();
    let mut clean = vec![0.0; s];
    let mut noisy = vec![0.0; s];
    let mut out = Vec::with_capacity(ell_max + 1);
    for ell in 0..=ell_max {
        if ell > 0 {
            clean = pursuit::landweber_iterate(a_s, y_clean, &clean, omega, 1)?.into_vec();
            noisy = pursuit::landweber_iterate(a_s, y_noisy, &noisy, omega, 1)?.into_vec();
        }
        let lhs = linalg::sub(&clean, &noisy)?.norm2();
        out.push(LandweberStep { ell, check: BoundCheck::new(lhs, (ell as f64).sqrt() * eps) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseVector;

    fn result_with_support(n: usize, support: Vec<usize>) -> RecoveryResult {
        RecoveryResult {
            x_hat: DenseVector::zeros(n),
            support,
            residual_history: vec![1.0],
            iterations: 0,
            termination: Termination::ResidualMet,
        }
    }

    fn signal(values: Vec<f64>) -> SparseSignal {
        SparseSignal::from_dense(DenseVector::new(values).unwrap()).unwrap()
    }

    #[test]
    fn nrmse_cases() {
        let x = [1.0, 0.0, 0.0, -1.0];
        assert_eq!(nrmse(&x, &x).unwrap(), 0.0);
        let v = nrmse(&x, &[0.0; 4]).unwrap();
        assert!((v - 2f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((v - 0.35355).abs() < 1e-5);
        assert!(matches!(nrmse(&[2.0, 2.0], &[0.0, 0.0]), Err(AnalysisError::ZeroSpread)));
        assert!(matches!(nrmse(&[1.0], &[0.0, 0.0]), Err(AnalysisError::InvalidDims(_))));
    }

    #[test]
    fn snr_cases() {
        assert!((snr_db(&[10.0, 0.0], &[0.0, 1.0]).unwrap() - 20.0).abs() < 1e-12);
        assert!(snr_db(&[3.0, 4.0], &[5.0, 0.0]).unwrap().abs() < 1e-12);
        assert!(matches!(snr_db(&[0.0], &[1.0]), Err(AnalysisError::UndefinedSnr)));
        assert!(matches!(snr_db(&[1.0], &[0.0]), Err(AnalysisError::UndefinedSnr)));
    }

    #[test]
    fn support_cases() {
        let x = signal(vec![0.0, 1.0, 0.0, 0.5, 0.0, 0.0]);
        let exact = support_metrics(&x, &result_with_support(6, vec![1, 3]));
        assert_eq!(exact, SupportMetrics { support_size: 2, support_recovered: true, exact_support: true });
        let over = support_metrics(&x, &result_with_support(6, vec![0, 1, 3, 5]));
        assert_eq!(over, SupportMetrics { support_size: 4, support_recovered: true, exact_support: false });
        let disjoint = support_metrics(&x, &result_with_support(6, vec![0, 2]));
        assert_eq!(disjoint, SupportMetrics { support_size: 2, support_recovered: false, exact_support: false });
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(256, 3), 2_763_520);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(1000, 500), u64::MAX);
    }

    #[test]
    fn colex_order() {
        let mut seen = Vec::new();
        for_each_subset_colex(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 3], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn ric_orthonormal_and_duplicate() {
        let a = DenseMatrix::identity(4);
        for k in 1..=4 {
            assert!(ric_exact(&a, k).unwrap().abs() < 1e-12);
        }
        let dup = DenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(ric_exact(&dup, 2).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn ric_guards() {
        let a = DenseMatrix::zeros(3, 300);
        assert!(matches!(ric_exact(&a, 3), Err(AnalysisError::TooLarge { .. })));
        assert!(matches!(ric_exact(&DenseMatrix::identity(2), 3), Err(AnalysisError::InvalidDims(_))));
    }

    #[test]
    fn tikhonov_bound_trivial_cases() {
        let a = DenseMatrix::identity(3);
        let y = [1.0, 2.0, 3.0];
        let same = check_tikhonov_bound(&a, &y, &y, 1.0).unwrap();
        assert_eq!(same.lhs, 0.0);
        assert!(same.holds);
        let noisy = [1.5, 2.0, 2.0];
        let c = check_tikhonov_bound(&a, &y, &noisy, 1.0).unwrap();
        let dy = (0.25f64 + 1.0).sqrt();
        assert!((c.lhs - dy / 2.0).abs() < 1e-15);
        assert!((c.rhs - dy).abs() < 1e-15);
        assert!(c.holds);
    }

    #[test]
    fn landweber_bound_trivial_cases() {
        let a = DenseMatrix::identity(2);
        let y = [1.0, 1.0];
        let noisy = [1.3, 0.6];
        let steps = check_landweber_bound(&a, &y, &noisy, 1.0, 3).unwrap();
        assert_eq!(steps.len(), 4);
        assert_eq!(steps[0].check.lhs, 0.0);
        let eps = 0.25f64.sqrt();
        assert!((steps[1].check.lhs - eps).abs() < 1e-15);
        assert!((steps[1].check.rhs - eps).abs() < 1e-15);
        assert!(steps.iter().all(|s| s.check.holds));
        assert!(matches!(check_landweber_bound(&a, &y, &noisy, 1.5, 3), Err(AnalysisError::InvalidOmega { .. })));
        assert!(matches!(check_landweber_bound(&a, &y, &noisy, 0.0, 3), Err(AnalysisError::InvalidOmega { .. })));
    }
}
