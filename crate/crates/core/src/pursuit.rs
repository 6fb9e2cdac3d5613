//! Greedy sparse recovery: OMP and its regularized variants, plus CoSaMP.
//!
//! OMP, T-OMP, L-OMP and SGP share one outer loop. Each iteration adds the
//! column most correlated with the residual to the support and then re-estimates
//! the coefficients on that support; the variants differ only in how that
//! estimate is formed:
//!
//! * OMP: exact least squares,
//! * T-OMP: Tikhonov-regularized normal equations,
//! * L-OMP: a fixed number of warm-started Landweber steps,
//! * SGP: one warm-started LMS pass over the rows of `A_S`.
//!
//! All of them stop once `‖r‖₂` drops to the residual threshold or the
//! iteration cap is reached.

use std::fmt;

use thiserror::Error;

use crate::linalg::{self, DenseMatrix, DenseVector, LinalgError};

/// Replaces a zero residual threshold by this fraction of `‖y‖₂`.
pub const NOISE_FREE_RTOL: f64 = 1e-10;
/// A best correlation below this fraction of `‖y‖₂` stalls the pursuit.
pub const STALL_CORRELATION_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PursuitError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid stopping rule: {0}")]
    InvalidStoppingRule(String),
    #[error("invalid algorithm parameter: {0}")]
    InvalidParameter(String),
    #[error("Landweber step {omega:e} exceeds the stability bound {bound:e} = ‖A_S‖⁻²")]
    InvalidOmega { omega: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, PursuitError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    /// Stop as soon as `‖r‖₂` is at most this value.
    pub residual_threshold: f64,
    pub max_iterations: usize,
}

impl StoppingRule {
    pub fn new(residual_threshold: f64, max_iterations: usize) -> Result<Self> {
        let rule = Self { residual_threshold, max_iterations };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.residual_threshold >= 0.0 && self.residual_threshold.is_finite()) {
            return Err(PursuitError::InvalidStoppingRule(format!(
                "residual threshold must be finite and nonnegative, got {}",
                self.residual_threshold
            )));
        }
        if self.max_iterations == 0 {
            return Err(PursuitError::InvalidStoppingRule("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    /// Threshold actually compared against `‖r‖₂`.
    pub fn effective_threshold(&self, y_norm: f64) -> f64 {
        if self.residual_threshold == 0.0 {
            NOISE_FREE_RTOL * y_norm
        } else {
            self.residual_threshold
        }
    }
}

/// Landweber step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Omega {
    /// `‖A‖_F⁻²`, computed once per run.
    Frobenius,
    /// `‖A_S‖_F⁻²`, recomputed whenever the support grows.
    SupportFrobenius,
    /// `1 / λ_max(A_SᵀA_S) = ‖A_S‖_op⁻²`, recomputed whenever the support grows.
    Spectral,
    Fixed(f64),
}

impl fmt::Display for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Omega::Frobenius => f.write_str("frobenius"),
            Omega::SupportFrobenius => f.write_str("support_frobenius"),
            Omega::Spectral => f.write_str("spectral"),
            Omega::Fixed(w) => write!(f, "{w}"),
        }
    }
}

/// One recovery algorithm together with exactly the parameters it uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgorithmSpec {
    Omp,
    /// Stochastic gradient pursuit; `mu = None` means `2m / (3 k_max)`.
    Sgp { k_max: usize, mu: Option<f64> },
    Tomp { alpha: f64 },
    Lomp { lambda: usize, omega: Omega },
    Cosamp { k: usize },
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::Omp => "OMP",
            AlgorithmSpec::Sgp { .. } => "SGP",
            AlgorithmSpec::Tomp { .. } => "T-OMP",
            AlgorithmSpec::Lomp { .. } => "L-OMP",
            AlgorithmSpec::Cosamp { .. } => "CoSaMP",
        }
    }

    /// `key=value` pairs joined by `;`, empty for OMP.
    pub fn params(&self) -> String {
        match self {
            AlgorithmSpec::Omp => String::new(),
            AlgorithmSpec::Sgp { k_max, mu: None } => format!("k_max={k_max};mu=auto"),
            AlgorithmSpec::Sgp { k_max, mu: Some(mu) } => format!("k_max={k_max};mu={mu}"),
            AlgorithmSpec::Tomp { alpha } => format!("alpha={alpha}"),
            AlgorithmSpec::Lomp { lambda, omega } => format!("lambda={lambda};omega={omega}"),
            AlgorithmSpec::Cosamp { k } => format!("k={k}"),
        }
    }

    pub fn recover(&self, a: &DenseMatrix, y: &[f64], stop: &StoppingRule) -> Result<RecoveryResult> {
        match *self {
            AlgorithmSpec::Omp => recover_omp(a, y, stop),
            AlgorithmSpec::Sgp { k_max, mu } => recover_sgp(a, y, stop, k_max, mu),
            AlgorithmSpec::Tomp { alpha } => recover_tomp(a, y, stop, alpha),
            AlgorithmSpec::Lomp { lambda, omega } => recover_lomp(a, y, stop, lambda, omega),
            AlgorithmSpec::Cosamp { k } => recover_cosamp(a, y, stop, k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    ResidualMet,
    MaxIterations,
    Stalled,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ResidualMet => "residual_met",
            Termination::MaxIterations => "max_iterations",
            Termination::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Full-length estimate, zero outside `support`.
    pub x_hat: DenseVector,
    /// Selected columns, ascending.
    pub support: Vec<usize>,
    /// `‖r‖₂` before the first iteration and after each accepted one.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl RecoveryResult {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history always holds ‖y‖")
    }

    /// Entries of `x_hat` with magnitude above `tol`.
    pub fn nonzero_count(&self, tol: f64) -> usize {
        self.x_hat.iter().filter(|v| v.abs() > tol).count()
    }
}

/// `Aᵀr`.
pub fn observation_vector(a: &DenseMatrix, r: &[f64]) -> Result<DenseVector> {
    Ok(a.matvec_transpose(r)?)
}

/// Index of the largest `|u_j|` outside `excluded`; ties go to the lowest index.
fn argmax_abs(u: &[f64], excluded: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in u.iter().enumerate() {
        if excluded[j] {
            continue;
        }
        let mag = v.abs();
        if best.is_none_or(|(_, b)| mag > b) {
            best = Some((j, mag));
        }
    }
    best.map(|(j, _)| j)
}

fn check_shapes(a: &DenseMatrix, y: &[f64]) -> Result<()> {
    if y.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "measurement has length {} but the sensing matrix has {} rows",
            y.len(),
            a.rows()
        ))
        .into());
    }
    Ok(())
}

/// Outcome of one signal-estimation step.
enum Estimate {
    Coefficients(Vec<f64>),
    Breakdown,
}

impl From<std::result::Result<DenseVector, LinalgError>> for Estimate {
    fn from(res: std::result::Result<DenseVector, LinalgError>) -> Self {
        match res {
            Ok(z) if z.is_finite() => Estimate::Coefficients(z.into_vec()),
            _ => Estimate::Breakdown,
        }
    }
}

/// A non-finite iterate ends the pursuit instead of failing it.
fn diverged_as_breakdown(res: Result<DenseVector>) -> Result<Estimate> {
    match res {
        Ok(z) => Ok(Estimate::Coefficients(z.into_vec())),
        Err(PursuitError::Linalg(LinalgError::NonFinite)) => Ok(Estimate::Breakdown),
        Err(e) => Err(e),
    }
}

/// Shared support-augmentation loop. `estimate(A_S, y, warm)` receives the
/// previous coefficients in selection order with a zero appended for the new
/// column.
fn greedy_pursuit<F>(a: &DenseMatrix, y: &[f64], stop: &StoppingRule, mut estimate: F) -> Result<RecoveryResult>
where
    F: FnMut(&DenseMatrix, &[f64], Vec<f64>) -> Result<Estimate>,
{
    stop.validate()?;
    check_shapes(a, y)?;
    let (m, n) = a.shape();
    if stop.max_iterations > m {
        return Err(PursuitError::InvalidStoppingRule(format!(
            "max_iterations {} exceeds the number of measurements {m}",
            stop.max_iterations
        )));
    }

    let y_norm = linalg::vec_norm2(y);
    let threshold = stop.effective_threshold(y_norm);
    let mut selected: Vec<usize> = Vec::new();
    let mut in_support = vec![false; n];
    let mut coef: Vec<f64> = Vec::new();
    let mut residual = y.to_vec();
    let mut history = vec![y_norm];

    let termination = loop {
        if history[history.len() - 1] <= threshold {
            break Termination::ResidualMet;
        }
        if selected.len() == stop.max_iterations {
            break Termination::MaxIterations;
        }
        let u = a.matvec_transpose(&residual)?;
        let Some(s) = argmax_abs(&u, &in_support) else {
            break Termination::Stalled;
        };
        if u[s].abs() < STALL_CORRELATION_RTOL * y_norm {
            break Termination::Stalled;
        }

        selected.push(s);
        let a_s = a.select_columns(&selected)?;
        let mut warm = coef.clone();
        warm.push(0.0);
        match estimate(&a_s, y, warm)? {
            Estimate::Coefficients(z) => {
                let fitted = a_s.matvec(&z)?;
                let r = linalg::sub(y, &fitted)?.into_vec();
                let r_norm = linalg::vec_norm2(&r);
                if !r_norm.is_finite() {
                    selected.pop();
                    break Termination::Stalled;
                }
                in_support[s] = true;
                residual = r;
                history.push(r_norm);
                coef = z;
            }
            Estimate::Breakdown => {
                selected.pop();
                break Termination::Stalled;
            }
        }
    };

    let mut x_hat = vec![0.0; n];
    for (&j, &c) in selected.iter().zip(&coef) {
        x_hat[j] = c;
    }
    selected.sort_unstable();
    Ok(RecoveryResult {
        x_hat: DenseVector::new(x_hat)?,
        support: selected,
        iterations: history.len() - 1,
        residual_history: history,
        termination,
    })
}

/// Orthogonal matching pursuit: least-squares re-fit on every support.
pub fn recover_omp(a: &DenseMatrix, y: &[f64], stop: &StoppingRule) -> Result<RecoveryResult> {
    greedy_pursuit(a, y, stop, |a_s, y, _| Ok(linalg::least_squares(a_s, y).into()))
}

/// Tikhonov-regularized OMP: `x_S = (A_SᵀA_S + αI)⁻¹ A_Sᵀ y`.
pub fn recover_tomp(a: &DenseMatrix, y: &[f64], stop: &StoppingRule, alpha: f64) -> Result<RecoveryResult> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(PursuitError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    greedy_pursuit(a, y, stop, |a_s, y, _| Ok(linalg::solve_tikhonov(a_s, y, alpha).into()))
}

/// `steps` Landweber iterations `z ← z + ω A_Sᵀ(y − A_S z)` starting from `start`.
pub fn landweber_iterate(a_s: &DenseMatrix, y: &[f64], start: &[f64], omega: f64, steps: usize) -> Result<DenseVector> {
    check_shapes(a_s, y)?;
    if start.len() != a_s.cols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "warm start has length {} for {} columns",
            start.len(),
            a_s.cols()
        ))
        .into());
    }
    let mut z = start.to_vec();
    for _ in 0..steps {
        let fitted = a_s.matvec(&z)?;
        let r = linalg::sub(y, &fitted)?;
        let g = a_s.matvec_transpose(&r)?;
        z.iter_mut().zip(g.iter()).for_each(|(zi, gi)| *zi += omega * gi);
    }
    Ok(DenseVector::new(z)?)
}

/// Largest admissible Landweber step for `A_S`, `‖A_S‖_op⁻²`.
pub fn landweber_bound(a_s: &DenseMatrix) -> Result<f64> {
    let (_, lambda_max) = linalg::gram_eig_extremes(a_s)?;
    Ok(1.0 / lambda_max)
}

/// Landweber-regularized OMP: `lambda` warm-started Landweber steps per support.
pub fn recover_lomp(a: &DenseMatrix, y: &[f64], stop: &StoppingRule, lambda: usize, omega: Omega) -> Result<RecoveryResult> {
    if lambda == 0 {
        return Err(PursuitError::InvalidParameter("lambda must be a positive integer".into()));
    }
    if let Omega::Fixed(w) = omega {
        if !(w > 0.0 && w.is_finite()) {
            return Err(PursuitError::InvalidParameter(format!("omega must be positive, got {w}")));
        }
    }
    let global = 1.0 / a.frobenius_norm().powi(2);
    greedy_pursuit(a, y, stop, |a_s, y, warm| {
        let step = match omega {
            Omega::Frobenius => global,
            Omega::SupportFrobenius => 1.0 / a_s.frobenius_norm().powi(2),
            Omega::Spectral => landweber_bound(a_s)?,
            Omega::Fixed(w) => {
                let bound = landweber_bound(a_s)?;
                if w > bound * (1.0 + 1e-12) {
                    return Err(PursuitError::InvalidOmega { omega: w, bound });
                }
                w
            }
        };
        diverged_as_breakdown(landweber_iterate(a_s, y, &warm, step, lambda))
    })
}

/// One ordered LMS pass over the rows of `A_S`:
/// `e = y_l − a_l·z`, `z ← z + μ e a_lᵀ` for `l = 1..m`.
pub fn lms_pass(a_s: &DenseMatrix, y: &[f64], start: &[f64], mu: f64) -> Result<DenseVector> {
    check_shapes(a_s, y)?;
    if start.len() != a_s.cols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "warm start has length {} for {} columns",
            start.len(),
            a_s.cols()
        ))
        .into());
    }
    let mut z = start.to_vec();
    for (l, &yl) in y.iter().enumerate() {
        let row = a_s.row(l);
        let e = yl - row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        z.iter_mut().zip(row).for_each(|(zi, ai)| *zi += mu * e * ai);
    }
    Ok(DenseVector::new(z)?)
}

/// Default LMS step `2m / (3 k_max)`.
pub fn sgp_auto_mu(m: usize, k_max: usize) -> f64 {
    2.0 * m as f64 / (3.0 * k_max as f64)
}

/// Stochastic gradient pursuit: one warm-started LMS pass per support.
pub fn recover_sgp(a: &DenseMatrix, y: &[f64], stop: &StoppingRule, k_max: usize, mu: Option<f64>) -> Result<RecoveryResult> {
    if k_max == 0 {
        return Err(PursuitError::InvalidParameter("k_max must be positive".into()));
    }
    let mu = mu.unwrap_or_else(|| sgp_auto_mu(a.rows(), k_max));
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(PursuitError::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    greedy_pursuit(a, y, stop, |a_s, y, warm| {
        diverged_as_breakdown(lms_pass(a_s, y, &warm, mu))
    })
}

/// Indices of the `count` largest `|v_j|`, ties to the lowest index.
fn largest_indices(v: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    idx.truncate(count);
    idx
}

/// CoSaMP with known sparsity `k`.
///
/// Each iteration merges the `2k` largest entries of `Aᵀr` with the current
/// support (capped at `m` columns), fits least squares on the merged set and
/// keeps the `k` largest coefficients. An iteration that fails to reduce
/// `‖r‖₂` is discarded and the run ends as [`Termination::Stalled`].
pub fn recover_cosamp(a: &DenseMatrix, y: &[f64], stop: &StoppingRule, k: usize) -> Result<RecoveryResult> {
    stop.validate()?;
    check_shapes(a, y)?;
    let (m, n) = a.shape();
    if k == 0 || 2 * k > m || k > n {
        return Err(PursuitError::InvalidParameter(format!("CoSaMP needs 1 <= k and 2k <= m, got k = {k}, m = {m}")));
    }

    let y_norm = linalg::vec_norm2(y);
    let threshold = stop.effective_threshold(y_norm);
    let mut support: Vec<usize> = Vec::new();
    let mut x_hat = vec![0.0; n];
    let mut residual = y.to_vec();
    let mut history = vec![y_norm];

    let termination = loop {
        let current = history[history.len() - 1];
        if current <= threshold {
            break Termination::ResidualMet;
        }
        if history.len() - 1 == stop.max_iterations {
            break Termination::MaxIterations;
        }
        let u = a.matvec_transpose(&residual)?;
        let mut merged = support.clone();
        for j in largest_indices(&u, n).into_iter().take(2 * k) {
            if merged.len() == m {
                break;
            }
            if !support.contains(&j) {
                merged.push(j);
            }
        }
        merged.sort_unstable();

        let a_t = a.select_columns(&merged)?;
        let xi = match linalg::least_squares(&a_t, y) {
            Ok(xi) => xi,
            Err(LinalgError::RankDeficient { .. }) => break Termination::Stalled,
            Err(e) => return Err(e.into()),
        };
        let mut keep: Vec<usize> = largest_indices(&xi, k);
        keep.sort_unstable();
        let mut candidate = vec![0.0; n];
        for &p in &keep {
            candidate[merged[p]] = xi[p];
        }
        let fitted = a.matvec(&candidate)?;
        let r = linalg::sub(y, &fitted)?.into_vec();
        let r_norm = linalg::vec_norm2(&r);
        if !(r_norm < current) {
            break Termination::Stalled;
        }
        support = keep.iter().map(|&p| merged[p]).collect();
        x_hat = candidate;
        residual = r;
        history.push(r_norm);
    };

    Ok(RecoveryResult {
        x_hat: DenseVector::new(x_hat)?,
        support,
        iterations: history.len() - 1,
        residual_history: history,
        termination,
    })
}
