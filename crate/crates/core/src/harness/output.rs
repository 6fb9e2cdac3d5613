//! CSV and manifest writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::runner::{CellSummary, TrialRecord};
use super::Result;

pub const SUMMARY_HEADER: [&str; 12] = [
    "algorithm",
    "params",
    "m",
    "snr_db",
    "trials",
    "nrmse_mean",
    "nrmse_std",
    "support_size_mean",
    "support_recovered_rate",
    "exact_support_rate",
    "iterations_mean",
    "stalled_count",
];

pub const TRIALS_HEADER: [&str; 13] = [
    "algorithm",
    "params",
    "m",
    "snr_db",
    "trial",
    "nrmse",
    "support_size",
    "support_recovered",
    "exact_support",
    "residual_final",
    "iterations",
    "termination",
    "nonzero_count",
];

/// Nine significant digits in the style of C's `%.9g`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

/// `inf` marks the noise-free cell.
pub fn format_snr(snr_db: Option<f64>) -> String {
    snr_db.map_or_else(|| "inf".to_string(), format_sig9)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = BufWriter::new(File::create(path)?);
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

pub fn write_csv(summaries: &[CellSummary], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        w.write_record([
            s.algorithm.clone(),
            s.params.clone(),
            s.m.to_string(),
            format_snr(s.snr_db),
            s.trials.to_string(),
            format_sig9(s.nrmse_mean),
            format_sig9(s.nrmse_std),
            format_sig9(s.support_size_mean),
            format_sig9(s.support_recovered_rate),
            format_sig9(s.exact_support_rate),
            format_sig9(s.iterations_mean),
            s.stalled_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials_csv(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(TRIALS_HEADER)?;
    for r in records {
        let t = &r.metrics;
        w.write_record([
            r.algorithm.clone(),
            r.params.clone(),
            r.m.to_string(),
            format_snr(r.snr_db),
            r.trial.to_string(),
            format_sig9(t.nrmse),
            t.support_size.to_string(),
            t.support_recovered.to_string(),
            t.exact_support.to_string(),
            format_sig9(t.residual_final),
            t.iterations.to_string(),
            t.termination.as_str().to_string(),
            t.nonzero_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// SHA-256 of the canonical configuration text, lowercase hex.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_config_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Records what produced a result directory.
pub fn write_manifest(cfg: &ExperimentConfig, path: impl AsRef<Path>) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "artifact = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "master_seed = {}", cfg.master_seed)?;
    writeln!(f, "config_sha256 = {}", config_hash(cfg))?;
    writeln!(f, "# resolved configuration")?;
    f.write_all(cfg.to_config_string().as_bytes())?;
    f.flush()?;
    Ok(())
}
