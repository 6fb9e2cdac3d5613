//! Seeded Monte-Carlo execution and per-cell aggregation.
//!
//! Every trial owns a generator derived from `(master_seed, trial, m)`. The
//! sensing matrix and signal are drawn first, then one noise direction which is
//! rescaled for each SNR cell. All algorithms of a trial therefore see the same
//! instance, and results do not depend on how trials are scheduled.

use rayon::prelude::*;

use crate::analysis::{self, TrialMetrics};
use crate::model::{self, Measurement, Rng, SensingMatrix, SparseSignal};
use crate::pursuit::{StoppingRule, Termination};

use super::config::{AlgorithmConfig, ExperimentConfig, StopChoice};
use super::Result;

/// Aggregated metrics of one `(m, snr, algorithm)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub algorithm: String,
    pub params: String,
    pub m: usize,
    /// `None` for the noise-free cell.
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub nrmse_mean: f64,
    pub nrmse_std: f64,
    pub support_size_mean: f64,
    pub support_recovered_rate: f64,
    pub exact_support_rate: f64,
    pub iterations_mean: f64,
    pub stalled_count: usize,
}

impl CellSummary {
    /// Means and rates over `metrics`; the standard deviation uses `n − 1`.
    pub fn aggregate(alg: &AlgorithmConfig, m: usize, snr_db: Option<f64>, metrics: &[TrialMetrics]) -> Self {
        let n = metrics.len();
        let nf = n as f64;
        let mean = |f: &dyn Fn(&TrialMetrics) -> f64| metrics.iter().map(f).sum::<f64>() / nf;
        let nrmse_mean = mean(&|t| t.nrmse);
        let nrmse_std = if n > 1 {
            (metrics.iter().map(|t| (t.nrmse - nrmse_mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            algorithm: alg.name().to_string(),
            params: alg.params(),
            m,
            snr_db,
            trials: n,
            nrmse_mean,
            nrmse_std,
            support_size_mean: mean(&|t| t.support_size as f64),
            support_recovered_rate: mean(&|t| f64::from(u8::from(t.support_recovered))),
            exact_support_rate: mean(&|t| f64::from(u8::from(t.exact_support))),
            iterations_mean: mean(&|t| t.iterations as f64),
            stalled_count: metrics.iter().filter(|t| t.termination == Termination::Stalled).count(),
        }
    }

    pub fn label(&self) -> String {
        format!("{} {}", self.algorithm, self.params.replace(';', " "))
    }
}

/// Metrics of one trial, kept when `keep_trials` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub algorithm: String,
    pub params: String,
    pub m: usize,
    pub snr_db: Option<f64>,
    pub trial: usize,
    pub metrics: TrialMetrics,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentOutput {
    /// Ordered by `m`, then SNR cell, then algorithm, following the config.
    pub summaries: Vec<CellSummary>,
    pub records: Option<Vec<TrialRecord>>,
}

/// Problem instance shared by every cell of one trial at a given `m`.
pub struct Instance {
    pub a: SensingMatrix,
    pub x: SparseSignal,
    noise_rng: Rng,
}

impl Instance {
    pub fn generate(cfg: &ExperimentConfig, m: usize, trial_index: usize) -> Result<Self> {
        let mut rng = Rng::child(cfg.master_seed, trial_index as u64, m as u64);
        let a = model::gen_sensing_matrix(&mut rng, m, cfg.n)?;
        let x = model::gen_sparse_signal(&mut rng, cfg.n, cfg.k)?;
        Ok(Self { a, x, noise_rng: rng })
    }

    /// Same noise direction for every SNR; only its scale changes.
    pub fn measurement(&self, snr_db: Option<f64>) -> Result<Measurement> {
        Ok(model::gen_measurement(&mut self.noise_rng.clone(), &self.a, &self.x, snr_db)?)
    }

    pub fn solve(&self, meas: &Measurement, alg: &AlgorithmConfig) -> Result<TrialMetrics> {
        let threshold = match alg.stopping {
            StopChoice::EpsilonTrue => meas.epsilon,
            StopChoice::FixedTau(tau) => tau,
        };
        let stop = StoppingRule::new(threshold, self.a.m())?;
        let result = alg.spec.recover(&self.a, &meas.y, &stop)?;
        Ok(analysis::trial_metrics(&self.x, &result)?)
    }
}

/// One trial of one cell, computed from scratch.
pub fn run_trial(
    cfg: &ExperimentConfig,
    m: usize,
    snr_db: Option<f64>,
    alg: &AlgorithmConfig,
    trial_index: usize,
) -> Result<TrialMetrics> {
    let inst = Instance::generate(cfg, m, trial_index)?;
    inst.solve(&inst.measurement(snr_db)?, alg)
}

/// Every cell of one trial at `m`, ordered by SNR cell then algorithm.
fn run_instance(cfg: &ExperimentConfig, m: usize, trial_index: usize) -> Result<Vec<TrialMetrics>> {
    let inst = Instance::generate(cfg, m, trial_index)?;
    let mut out = Vec::with_capacity(cfg.snr_list_db.len() * cfg.algorithms.len());
    for snr in cfg.snr_cells() {
        let meas = inst.measurement(snr)?;
        for alg in &cfg.algorithms {
            out.push(inst.solve(&meas, alg)?);
        }
    }
    Ok(out)
}

/// How trials are spread over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Serial,
    /// Worker pool with this many threads; 0 means one per core.
    Parallel(usize),
}

impl Schedule {
    pub fn from_threads(threads: usize) -> Self {
        if threads == 1 {
            Schedule::Serial
        } else {
            Schedule::Parallel(threads)
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_with(cfg, Schedule::from_threads(cfg.threads), |_| Ok(()))
}

/// Runs every cell. `on_block` receives the summaries finished so far after
/// each value of `m` completes, so callers can flush partial results.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    schedule: Schedule,
    mut on_block: impl FnMut(&[CellSummary]) -> Result<()>,
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let pool = match schedule {
        Schedule::Serial => None,
        Schedule::Parallel(threads) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| super::HarnessError::Validation(format!("cannot start worker pool: {e}")))?,
        ),
    };

    let snr_cells = cfg.snr_cells();
    let mut output = ExperimentOutput { summaries: Vec::new(), records: cfg.keep_trials.then(Vec::new) };
    for &m in &cfg.m_list {
        let per_trial: Vec<Vec<TrialMetrics>> = match &pool {
            None => (0..cfg.trials).map(|t| run_instance(cfg, m, t)).collect::<Result<_>>()?,
            Some(pool) => pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_instance(cfg, m, t)).collect::<Result<_>>())?,
        };

        let mut slot = 0;
        for &snr in &snr_cells {
            for alg in &cfg.algorithms {
                let metrics: Vec<TrialMetrics> = per_trial.iter().map(|cells| cells[slot].clone()).collect();
                output.summaries.push(CellSummary::aggregate(alg, m, snr, &metrics));
                if let Some(records) = output.records.as_mut() {
                    records.extend(metrics.into_iter().enumerate().map(|(trial, metrics)| TrialRecord {
                        algorithm: alg.name().to_string(),
                        params: alg.params(),
                        m,
                        snr_db: snr,
                        trial,
                        metrics,
                    }));
                }
                slot += 1;
            }
        }
        on_block(&output.summaries)?;
    }
    Ok(output)
}
