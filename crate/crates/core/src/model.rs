//! Seedable generation of compressed-sensing problem instances.
//!
//! An instance is a Gaussian sensing matrix with unit-norm columns, a
//! `k`-sparse signal with uniform nonzeros on `[-1, 1]`, and a measurement
//! `y = Ax + v` whose noise is scaled to hit a requested SNR exactly.

use std::ops::Deref;

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{self, DenseMatrix, DenseVector, LinalgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("SNR is undefined for a zero clean signal Ax")]
    ZeroSignal,
    #[error("SNR must be finite, got {0}")]
    InvalidSnr(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(master_seed, trial_index, cell)`.
///
/// `splitmix64(splitmix64(splitmix64(master) ^ trial) ^ cell)`; any schedule
/// that evaluates the same triple gets the same stream.
pub fn derive_seed(master_seed: u64, trial_index: u64, cell: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ trial_index) ^ cell)
}

/// Deterministic generator: ChaCha8 keyed from a 64-bit seed, with Gaussian
/// deviates drawn by the Marsaglia polar method.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed), spare_normal: None }
    }

    /// Independent stream for one trial of one experiment cell.
    pub fn child(master_seed: u64, trial_index: u64, cell: u64) -> Self {
        Self::seed_from_u64(derive_seed(master_seed, trial_index, cell))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on `[-1, 1)`.
    pub fn uniform_symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = self.uniform_symmetric();
            let v = self.uniform_symmetric();
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }
}

/// `m × N` sensing matrix whose columns all have unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    mat: DenseMatrix,
}

impl SensingMatrix {
    /// Wraps a matrix, normalizing its columns. Fails on zero columns or `m > N`.
    pub fn from_matrix(mut mat: DenseMatrix) -> Result<Self> {
        let (m, n) = mat.shape();
        if m > n {
            return Err(ModelError::InvalidDims(format!("sensing matrix needs m <= N, got {m}x{n}")));
        }
        if let Some(j) = (0..n).find(|&j| mat.column_norm(j) == 0.0) {
            return Err(ModelError::InvalidDims(format!("column {j} is zero")));
        }
        mat.normalize_columns();
        Ok(Self { mat })
    }

    pub fn m(&self) -> usize {
        self.mat.rows()
    }

    pub fn n(&self) -> usize {
        self.mat.cols()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.mat
    }
}

impl Deref for SensingMatrix {
    type Target = DenseMatrix;

    fn deref(&self) -> &DenseMatrix {
        &self.mat
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(ModelError::InvalidDims(format!("need 1 <= m <= N, got m = {m}, N = {n}")));
    }
    Ok(())
}

fn gaussian_matrix(rng: &mut Rng, m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| rng.standard_normal())
}

/// i.i.d. standard normal entries (drawn in row-major order), columns then
/// scaled to unit norm.
pub fn gen_sensing_matrix(rng: &mut Rng, m: usize, n: usize) -> Result<SensingMatrix> {
    check_dims(m, n)?;
    let mut mat = gaussian_matrix(rng, m, n);
    mat.normalize_columns();
    Ok(SensingMatrix { mat })
}

/// Unnormalized ensemble with `N(0, 1/m)` entries, so that `√m·A` is standard
/// Gaussian. Useful for RIC studies; the benchmark uses [`gen_sensing_matrix`].
pub fn gen_sensing_matrix_raw(rng: &mut Rng, m: usize, n: usize) -> Result<DenseMatrix> {
    check_dims(m, n)?;
    let mut mat = gaussian_matrix(rng, m, n);
    mat.scale(1.0 / (m as f64).sqrt());
    Ok(mat)
}

/// Ground-truth sparse vector together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    x: DenseVector,
    support: Vec<usize>,
}

impl SparseSignal {
    /// Derives the support from the nonzero entries of `x`.
    pub fn from_dense(x: DenseVector) -> Result<Self> {
        let support: Vec<usize> = x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
        if support.is_empty() {
            return Err(ModelError::InvalidDims("signal has no nonzero entry".into()));
        }
        Ok(Self { x, support })
    }

    pub fn x(&self) -> &DenseVector {
        &self.x
    }

    /// Strictly increasing nonzero positions.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// Uniformly random `k`-subset support (Fisher–Yates prefix) with values
/// uniform on `[-1, 1]`; exact zeros are redrawn.
pub fn gen_sparse_signal(rng: &mut Rng, n: usize, k: usize) -> Result<SparseSignal> {
    if k == 0 || k > n {
        return Err(ModelError::InvalidDims(format!("need 1 <= k <= N, got k = {k}, N = {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below(n - i);
        idx.swap(i, j);
    }
    let mut support = idx[..k].to_vec();
    support.sort_unstable();

    let mut x = vec![0.0; n];
    for &i in &support {
        let mut v = rng.uniform_symmetric();
        while v == 0.0 {
            v = rng.uniform_symmetric();
        }
        x[i] = v;
    }
    Ok(SparseSignal { x: DenseVector::new(x)?, support })
}

/// Noisy samples `y = Ax + v` and the noise that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub clean: DenseVector,
    pub y: DenseVector,
    pub v: DenseVector,
    /// `‖v‖₂`; zero exactly when the measurement is noise free.
    pub epsilon: f64,
    /// Target SNR in dB, `None` for noise-free samples.
    pub snr_db: Option<f64>,
}

impl Measurement {
    pub fn is_noise_free(&self) -> bool {
        self.snr_db.is_none()
    }
}

/// Samples `v` i.i.d. standard normal and rescales it so that
/// `10·log10(‖Ax‖²/‖v‖²) = snr_db`. `None` produces noise-free samples and
/// draws nothing from `rng`.
pub fn gen_measurement(
    rng: &mut Rng,
    a: &DenseMatrix,
    x: &SparseSignal,
    snr_db: Option<f64>,
) -> Result<Measurement> {
    let clean = a.matvec(x.x())?;
    let m = clean.len();
    let Some(snr) = snr_db else {
        return Ok(Measurement { y: clean.clone(), clean, v: DenseVector::zeros(m), epsilon: 0.0, snr_db: None });
    };
    if !snr.is_finite() {
        return Err(ModelError::InvalidSnr(snr));
    }
    let signal_norm = clean.norm2();
    if signal_norm == 0.0 {
        return Err(ModelError::ZeroSignal);
    }
    let mut g: Vec<f64> = (0..m).map(|_| rng.standard_normal()).collect();
    let target = signal_norm * 10f64.powf(-snr / 20.0);
    let scale = target / linalg::vec_norm2(&g);
    g.iter_mut().for_each(|v| *v *= scale);
    let v = DenseVector::new(g)?;
    let y = DenseVector::new(clean.iter().zip(v.iter()).map(|(c, n)| c + n).collect())?;
    let epsilon = v.norm2();
    Ok(Measurement { clean, y, v, epsilon, snr_db: Some(snr) })
}
