use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use pursuitlab::analysis;
use pursuitlab::harness::{self, bounds, ConfigOverrides, HarnessError, Schedule};
use pursuitlab::model::{self, Rng};

#[derive(Parser)]
#[command(name = "pursuitlab", version, about = "Regularized matching pursuit benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Bound {
    Tikhonov,
    Landweber,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo sweep and write CSV/SVG results.
    Run {
        /// key = value configuration file; defaults are used when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// e.g. "omp, tomp(alpha=1), lomp(lambda=10)"
        #[arg(long)]
        algorithms: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
        /// Worker threads (0 = all cores, 1 = serial)
        #[arg(long)]
        threads: Option<usize>,
        /// Also write per-trial records to trials.csv
        #[arg(long)]
        keep_trials: bool,
    },
    /// Exact restricted isometry constants of a random sensing matrix.
    Ric {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// N(0, 1/m) entries instead of unit-norm columns
        #[arg(long)]
        raw: bool,
    },
    /// Check the Tikhonov or Landweber noise bound on a seeded ensemble.
    VerifyBounds {
        #[arg(long, value_enum)]
        which: Bound,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(
    config: Option<PathBuf>,
    overrides: ConfigOverrides,
    format: Format,
) -> harness::Result<()> {
    let text = match &config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let cfg = harness::parse_config(&text, &overrides)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    harness::write_manifest(&cfg, cfg.output_dir.join("manifest.txt"))?;

    let csv_path = cfg.output_dir.join("summary.csv");
    let started = Instant::now();
    let out = harness::run_experiment_with(&cfg, Schedule::from_threads(cfg.threads), |done| {
        eprintln!("[{:>7.1}s] {} cells done", started.elapsed().as_secs_f64(), done.len());
        if format != Format::Svg {
            harness::write_csv(done, &csv_path)?;
        }
        Ok(())
    })?;
    if let Some(records) = &out.records {
        harness::write_trials_csv(records, cfg.output_dir.join("trials.csv"))?;
    }
    if format != Format::Csv {
        for path in harness::write_svg_plots(&out.summaries, cfg.output_dir.join("fig_"))? {
            eprintln!("wrote {}", path.display());
        }
    }
    eprintln!("finished {} cells in {:.1}s", out.summaries.len(), started.elapsed().as_secs_f64());
    Ok(())
}

fn ric(rows: usize, cols: usize, k: usize, seed: u64, raw: bool) -> harness::Result<()> {
    let mut rng = Rng::seed_from_u64(seed);
    let a = if raw {
        model::gen_sensing_matrix_raw(&mut rng, rows, cols)?
    } else {
        model::gen_sensing_matrix(&mut rng, rows, cols)?.into_matrix()
    };
    println!("order,delta");
    for order in 1..=k {
        let delta = analysis::ric_exact(&a, order)?;
        println!("{order},{}", harness::output::format_sig9(delta));
    }
    Ok(())
}

fn verify_bounds(which: Bound, instances: usize, seed: u64) -> harness::Result<bool> {
    match which {
        Bound::Tikhonov => {
            let outcomes = bounds::tikhonov_ensemble(seed, instances)?;
            let held = outcomes.iter().filter(|o| o.check.holds).count();
            let worst = outcomes.iter().map(|o| o.check.lhs / o.check.rhs).fold(0.0, f64::max);
            println!("tikhonov: {held}/{instances} instances satisfy |x_clean - x_noisy| <= eps/sqrt(alpha); worst lhs/rhs = {worst:.4}");
            Ok(held == instances)
        }
        Bound::Landweber => {
            let outcomes = bounds::landweber_ensemble(seed, instances)?;
            let held = outcomes.iter().filter(|o| o.holds()).count();
            let gap = outcomes.iter().map(|o| o.convergence_gap).fold(0.0, f64::max);
            println!(
                "landweber: {held}/{instances} instances satisfy |x_clean - x_noisy| <= sqrt(l)*eps for l <= {}; \
                 max |x_l - pinv(A)y| at l = {} is {gap:.3e}",
                bounds::LANDWEBER_ELL_MAX,
                bounds::LANDWEBER_CONVERGENCE_STEPS
            );
            Ok(held == instances)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed, trials, algorithms, format, threads, keep_trials } => {
            let overrides = ConfigOverrides {
                output_dir: out,
                master_seed: seed,
                trials,
                algorithms,
                threads,
                keep_trials: keep_trials.then_some(true),
            };
            run(config, overrides, format).map(|()| true)
        }
        Command::Ric { rows, cols, k, seed, raw } => ric(rows, cols, k, seed, raw).map(|()| true),
        Command::VerifyBounds { which, instances, seed } => verify_bounds(which, instances, seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e @ (HarnessError::Validation(_) | HarnessError::Parse { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
