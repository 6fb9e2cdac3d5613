//! Experiment configuration: a plain `key = value` file, one pair per line.
//!
//! ```text
//! # comments start with '#'
//! N = 256
//! m_list = 16, 32, 64
//! k = 8
//! snr_list_db = 5, 10, 15, 20, 25, 30, 35, 40
//! noise_free = false
//! trials = 1000
//! master_seed = 20190101
//! algorithms = omp, sgp, sgp(tau_sq=0.0164), cosamp, tomp(alpha=1), lomp(lambda=10)
//! output_dir = results
//! threads = 0
//! keep_trials = false
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::pursuit::{AlgorithmSpec, Omega};

use super::{HarnessError, Result};

pub const DEFAULT_MASTER_SEED: u64 = 20_190_101;

/// Residual threshold used by one algorithm configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopChoice {
    /// `ε = ‖v‖₂`, the energy of the noise actually added.
    EpsilonTrue,
    /// A fixed `τ` independent of the noise.
    FixedTau(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmConfig {
    pub spec: AlgorithmSpec,
    pub stopping: StopChoice,
}

impl AlgorithmConfig {
    pub fn new(spec: AlgorithmSpec) -> Self {
        Self { spec, stopping: StopChoice::EpsilonTrue }
    }

    pub fn with_tau(spec: AlgorithmSpec, tau: f64) -> Self {
        Self { spec, stopping: StopChoice::FixedTau(tau) }
    }

    pub fn name(&self) -> &'static str {
        self.spec.name()
    }

    /// Algorithm parameters plus the stopping rule, e.g. `alpha=1;stop=eps`.
    pub fn params(&self) -> String {
        let stop = match self.stopping {
            StopChoice::EpsilonTrue => "stop=eps".to_string(),
            StopChoice::FixedTau(tau) => format!("stop=tau:{tau}"),
        };
        let p = self.spec.params();
        if p.is_empty() {
            stop
        } else {
            format!("{p};{stop}")
        }
    }

    pub fn label(&self) -> String {
        format!("{} {}", self.name(), self.params().replace(';', " "))
    }

    /// Canonical text form accepted by [`parse_algorithm`].
    pub fn to_config_string(&self) -> String {
        let mut args: Vec<String> = match self.spec {
            AlgorithmSpec::Omp => vec![],
            AlgorithmSpec::Sgp { k_max, mu } => {
                let mut v = vec![format!("k_max={k_max}")];
                if let Some(mu) = mu {
                    v.push(format!("mu={mu}"));
                }
                v
            }
            AlgorithmSpec::Tomp { alpha } => vec![format!("alpha={alpha}")],
            AlgorithmSpec::Lomp { lambda, omega } => vec![format!("lambda={lambda}"), format!("omega={omega}")],
            AlgorithmSpec::Cosamp { k } => vec![format!("k={k}")],
        };
        if let StopChoice::FixedTau(tau) = self.stopping {
            args.push(format!("tau={tau}"));
        }
        let name = match self.spec {
            AlgorithmSpec::Omp => "omp",
            AlgorithmSpec::Sgp { .. } => "sgp",
            AlgorithmSpec::Tomp { .. } => "tomp",
            AlgorithmSpec::Lomp { .. } => "lomp",
            AlgorithmSpec::Cosamp { .. } => "cosamp",
        };
        if args.is_empty() {
            name.to_string()
        } else {
            format!("{name}({})", args.join(";"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m_list: Vec<usize>,
    pub k: usize,
    pub snr_list_db: Vec<f64>,
    /// Adds a noise-free cell after the SNR grid.
    pub noise_free: bool,
    pub trials: usize,
    pub master_seed: u64,
    pub algorithms: Vec<AlgorithmConfig>,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available core, 1 runs serially.
    pub threads: usize,
    pub keep_trials: bool,
}

/// The comparison set of the benchmark figures, for sparsity `k`.
pub fn default_algorithms(k: usize) -> Vec<AlgorithmConfig> {
    let sgp = AlgorithmSpec::Sgp { k_max: k, mu: None };
    let mut algs = vec![
        AlgorithmConfig::new(AlgorithmSpec::Omp),
        AlgorithmConfig::new(sgp),
        AlgorithmConfig::with_tau(sgp, 0.0164f64.sqrt()),
        AlgorithmConfig::new(AlgorithmSpec::Cosamp { k }),
    ];
    for alpha in [0.1, 1.0, 10.0] {
        algs.push(AlgorithmConfig::new(AlgorithmSpec::Tomp { alpha }));
    }
    for lambda in [1, 10, 100] {
        algs.push(AlgorithmConfig::new(AlgorithmSpec::Lomp { lambda, omega: Omega::Spectral }));
    }
    algs
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 256,
            m_list: vec![16, 32, 64],
            k: 8,
            snr_list_db: (1..=8).map(|i| 5.0 * i as f64).collect(),
            noise_free: false,
            trials: 1000,
            master_seed: DEFAULT_MASTER_SEED,
            algorithms: default_algorithms(8),
            output_dir: PathBuf::from("results"),
            threads: 0,
            keep_trials: false,
        }
    }
}

impl ExperimentConfig {
    /// Checks every cross-field invariant; the error names the violated one.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::Validation(msg));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.m_list.is_empty() {
            return fail("m_list must not be empty".into());
        }
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        for &m in &self.m_list {
            if !(self.k <= m && m <= self.n) {
                return fail(format!("k <= m <= N violated: k = {}, m = {m}, N = {}", self.k, self.n));
            }
        }
        if self.snr_list_db.is_empty() && !self.noise_free {
            return fail("no SNR cells: snr_list_db is empty and noise_free is false".into());
        }
        if let Some(s) = self.snr_list_db.iter().find(|s| !s.is_finite()) {
            return fail(format!("snr_list_db entries must be finite, got {s}"));
        }
        if self.algorithms.is_empty() {
            return fail("algorithms must not be empty".into());
        }
        let min_m = *self.m_list.iter().min().expect("nonempty");
        for alg in &self.algorithms {
            match alg.spec {
                AlgorithmSpec::Cosamp { k } if k == 0 || 2 * k > min_m => {
                    return fail(format!("CoSaMP needs 1 <= 2k <= m for every m, got k = {k}, m = {min_m}"));
                }
                AlgorithmSpec::Sgp { k_max: 0, .. } => return fail("SGP k_max must be positive".into()),
                AlgorithmSpec::Tomp { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                    return fail(format!("T-OMP alpha must be positive, got {alpha}"));
                }
                AlgorithmSpec::Lomp { lambda: 0, .. } => return fail("L-OMP lambda must be positive".into()),
                _ => {}
            }
            if let StopChoice::FixedTau(tau) = alg.stopping {
                if !(tau >= 0.0 && tau.is_finite()) {
                    return fail(format!("tau must be finite and nonnegative, got {tau}"));
                }
            }
        }
        Ok(())
    }

    /// SNR cells in sweep order; `None` is the noise-free cell.
    pub fn snr_cells(&self) -> Vec<Option<f64>> {
        let mut cells: Vec<Option<f64>> = self.snr_list_db.iter().copied().map(Some).collect();
        if self.noise_free {
            cells.push(None);
        }
        cells
    }

    /// Renders the configuration in the file format; parsing the result gives
    /// back an equal configuration.
    pub fn to_config_string(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut s = String::new();
        writeln!(s, "N = {}", self.n).unwrap();
        writeln!(s, "m_list = {}", join(self.m_list.iter().map(ToString::to_string).collect())).unwrap();
        writeln!(s, "k = {}", self.k).unwrap();
        writeln!(s, "snr_list_db = {}", join(self.snr_list_db.iter().map(|v| format!("{v:?}")).collect())).unwrap();
        writeln!(s, "noise_free = {}", self.noise_free).unwrap();
        writeln!(s, "trials = {}", self.trials).unwrap();
        writeln!(s, "master_seed = {}", self.master_seed).unwrap();
        writeln!(s, "algorithms = {}", join(self.algorithms.iter().map(AlgorithmConfig::to_config_string).collect()))
            .unwrap();
        writeln!(s, "output_dir = {}", self.output_dir.display()).unwrap();
        writeln!(s, "threads = {}", self.threads).unwrap();
        writeln!(s, "keep_trials = {}", self.keep_trials).unwrap();
        s
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse { line, message: message.into() }
}

/// Splits on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(s[start..].trim());
    parts.retain(|p| !p.is_empty());
    parts
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.trim().parse::<T>().map_err(|_| format!("cannot parse {key} value {value:?}"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("{key} expects true or false, got {other:?}")),
    }
}

/// Parses one algorithm entry such as `omp`, `tomp(alpha=1)`,
/// `lomp(lambda=10;omega=frobenius)` or `sgp(tau_sq=0.0164)`.
///
/// `default_k` fills in `k_max` for SGP and `k` for CoSaMP when omitted.
pub fn parse_algorithm(text: &str, default_k: usize) -> std::result::Result<AlgorithmConfig, String> {
    let text = text.trim();
    let (name, args) = match text.find('(') {
        Some(open) => {
            if !text.ends_with(')') {
                return Err(format!("unbalanced parentheses in {text:?}"));
            }
            (text[..open].trim(), &text[open + 1..text.len() - 1])
        }
        None => (text, ""),
    };
    let mut pairs = Vec::new();
    for item in args.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| format!("expected key=value in {item:?}"))?;
        pairs.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }

    let mut stopping = StopChoice::EpsilonTrue;
    let mut alpha = None;
    let mut lambda = None;
    let mut omega = Omega::Spectral;
    let mut k_max = default_k;
    let mut mu = None;
    let mut k = default_k;
    let lname = name.to_ascii_lowercase();
    let allowed: &[&str] = match lname.as_str() {
        "omp" => &[],
        "sgp" => &["k_max", "mu"],
        "tomp" | "t-omp" => &["alpha"],
        "lomp" | "l-omp" => &["lambda", "omega"],
        "cosamp" => &["k"],
        _ => return Err(format!("unknown algorithm {name:?}")),
    };
    for (key, value) in &pairs {
        let key = key.as_str();
        if !allowed.contains(&key) && !matches!(key, "tau" | "tau_sq" | "stop") {
            return Err(format!("{name} does not take parameter {key:?}"));
        }
        match key {
            "tau" => stopping = StopChoice::FixedTau(parse_num("tau", value)?),
            "tau_sq" => stopping = StopChoice::FixedTau(parse_num::<f64>("tau_sq", value)?.sqrt()),
            "stop" if value == "eps" => stopping = StopChoice::EpsilonTrue,
            "stop" => return Err(format!("stop expects eps, got {value:?}")),
            "alpha" => alpha = Some(parse_num::<f64>("alpha", value)?),
            "lambda" => lambda = Some(parse_num::<usize>("lambda", value)?),
            "omega" => {
                omega = match value.as_str() {
                    "frobenius" | "auto" => Omega::Frobenius,
                    "support_frobenius" => Omega::SupportFrobenius,
                    "spectral" => Omega::Spectral,
                    v => Omega::Fixed(parse_num("omega", v)?),
                }
            }
            "k_max" => k_max = parse_num("k_max", value)?,
            "mu" if value == "auto" => mu = None,
            "mu" => mu = Some(parse_num::<f64>("mu", value)?),
            "k" => k = parse_num("k", value)?,
            _ => unreachable!(),
        }
    }
    let spec = match lname.as_str() {
        "omp" => AlgorithmSpec::Omp,
        "sgp" => AlgorithmSpec::Sgp { k_max, mu },
        "tomp" | "t-omp" => AlgorithmSpec::Tomp { alpha: alpha.ok_or("tomp requires alpha")? },
        "lomp" | "l-omp" => AlgorithmSpec::Lomp { lambda: lambda.ok_or("lomp requires lambda")?, omega },
        _ => AlgorithmSpec::Cosamp { k },
    };
    Ok(AlgorithmConfig { spec, stopping })
}

pub fn parse_algorithm_list(text: &str, default_k: usize) -> std::result::Result<Vec<AlgorithmConfig>, String> {
    split_top_level(text).into_iter().map(|item| parse_algorithm(item, default_k)).collect()
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub output_dir: Option<PathBuf>,
    pub master_seed: Option<u64>,
    pub trials: Option<usize>,
    pub algorithms: Option<String>,
    pub threads: Option<usize>,
    pub keep_trials: Option<bool>,
}

/// Parses a configuration file and applies `overrides` on top. Keys not set
/// anywhere keep their defaults. Validation runs last.
pub fn parse_config(text: &str, overrides: &ConfigOverrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut algorithms: Option<(usize, String)> = None;
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| parse_err(line, format!("expected key = value, got {content:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(parse_err(line, format!("duplicate key {key:?}")));
        }
        let res: std::result::Result<(), String> = (|| {
            match key {
                "N" | "n" => cfg.n = parse_num(key, value)?,
                "m_list" => {
                    cfg.m_list = split_top_level(value).into_iter().map(|v| parse_num(key, v)).collect::<std::result::Result<_, _>>()?
                }
                "k" => cfg.k = parse_num(key, value)?,
                "snr_list_db" => {
                    cfg.snr_list_db =
                        split_top_level(value).into_iter().map(|v| parse_num(key, v)).collect::<std::result::Result<_, _>>()?
                }
                "noise_free" => cfg.noise_free = parse_bool(key, value)?,
                "trials" => cfg.trials = parse_num(key, value)?,
                "master_seed" | "seed" => cfg.master_seed = parse_num(key, value)?,
                "algorithms" => algorithms = Some((line, value.to_string())),
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "threads" => cfg.threads = parse_num(key, value)?,
                "keep_trials" => cfg.keep_trials = parse_bool(key, value)?,
                _ => return Err(format!("unknown key {key:?}")),
            }
            Ok(())
        })();
        res.map_err(|m| parse_err(line, m))?;
    }

    // algorithm defaults depend on k, so resolve them after every key is known
    match (&overrides.algorithms, algorithms) {
        (Some(list), _) => {
            cfg.algorithms = parse_algorithm_list(list, cfg.k).map_err(|m| parse_err(0, format!("--algorithms: {m}")))?
        }
        (None, Some((line, list))) => cfg.algorithms = parse_algorithm_list(&list, cfg.k).map_err(|m| parse_err(line, m))?,
        (None, None) => cfg.algorithms = default_algorithms(cfg.k),
    }
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = overrides.master_seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = overrides.trials {
        cfg.trials = trials;
    }
    if let Some(threads) = overrides.threads {
        cfg.threads = threads;
    }
    if let Some(keep) = overrides.keep_trials {
        cfg.keep_trials = keep;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("", &ConfigOverrides::default()).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.n, 256);
        assert_eq!(cfg.m_list, vec![16, 32, 64]);
        assert_eq!(cfg.k, 8);
        assert_eq!(cfg.trials, 1000);
        assert_eq!(cfg.snr_list_db, vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]);
        assert_eq!(cfg.algorithms.len(), 10);
    }

    #[test]
    fn flags_override_file() {
        let ov = ConfigOverrides { trials: Some(10), ..Default::default() };
        let cfg = parse_config("m_list = 16\ntrials = 500 # ignored by the flag\n", &ov).unwrap();
        assert_eq!(cfg.m_list, vec![16]);
        assert_eq!(cfg.trials, 10);
    }

    #[test]
    fn k_above_n_is_a_validation_error() {
        let err = parse_config("k = 300\n", &ConfigOverrides::default()).unwrap_err();
        match err {
            HarnessError::Validation(msg) => assert!(msg.contains("k <= m <= N"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config("# header\n\nbogus = 1\n", &ConfigOverrides::default()).unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 3, .. }), "{err:?}");
        let err = parse_config("trials = many\n", &ConfigOverrides::default()).unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 1, .. }));
        let err = parse_config("k = 4\nno equals sign\n", &ConfigOverrides::default()).unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 2, .. }));
        let err = parse_config("k = 4\nk = 5\n", &ConfigOverrides::default()).unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 2, .. }));
        let err = parse_config("algorithms = omp, tomp\n", &ConfigOverrides::default()).unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 1, .. }));
    }

    #[test]
    fn algorithm_entries() {
        let a = parse_algorithm("tomp(alpha=0.1)", 8).unwrap();
        assert_eq!(a.spec, AlgorithmSpec::Tomp { alpha: 0.1 });
        let s = parse_algorithm("sgp(tau_sq=0.0164)", 8).unwrap();
        match s.stopping {
            StopChoice::FixedTau(t) => assert!((t - 0.128062484748657).abs() < 1e-12),
            _ => panic!(),
        }
        assert_eq!(s.spec, AlgorithmSpec::Sgp { k_max: 8, mu: None });
        let l = parse_algorithm("lomp(lambda=10;omega=frobenius)", 8).unwrap();
        assert_eq!(l.spec, AlgorithmSpec::Lomp { lambda: 10, omega: Omega::Frobenius });
        assert_eq!(parse_algorithm("cosamp", 5).unwrap().spec, AlgorithmSpec::Cosamp { k: 5 });
        assert!(parse_algorithm("omp(alpha=1)", 8).is_err());
        assert!(parse_algorithm("romp", 8).is_err());
        assert!(parse_algorithm("tomp(alpha=1", 8).is_err());
    }

    #[test]
    fn list_split_respects_parentheses() {
        let list = parse_algorithm_list("omp, lomp(lambda=1;omega=spectral), cosamp(k=4)", 8).unwrap();
        assert_eq!(list.len(), 3);
    }

    #[test]
    fn cosamp_needs_room() {
        let err = parse_config("m_list = 12\nalgorithms = cosamp\n", &ConfigOverrides::default()).unwrap_err();
        assert!(matches!(err, HarnessError::Validation(_)));
    }

    #[test]
    fn rendered_config_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.noise_free = true;
        cfg.snr_list_db = vec![2.5, 10.0];
        cfg.algorithms.push(AlgorithmConfig::new(AlgorithmSpec::Sgp { k_max: 4, mu: Some(0.75) }));
        cfg.algorithms.push(AlgorithmConfig::new(AlgorithmSpec::Lomp { lambda: 3, omega: Omega::Fixed(0.25) }));
        let text = cfg.to_config_string();
        assert_eq!(parse_config(&text, &ConfigOverrides::default()).unwrap(), cfg);
    }

    #[test]
    fn labels_include_stopping_rule() {
        let a = AlgorithmConfig::with_tau(AlgorithmSpec::Sgp { k_max: 8, mu: None }, 0.5);
        assert_eq!(a.params(), "k_max=8;mu=auto;stop=tau:0.5");
        assert_eq!(AlgorithmConfig::new(AlgorithmSpec::Omp).params(), "stop=eps");
    }
}
