use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use graphbargain::pipeline::{self, RunConfig};
use graphbargain::Error;

#[derive(Parser, Debug)]
#[command(name = "graphbargain", version, about = "Evenly distributed synthetic RMAT graph datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat key=value configuration file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Baseline size
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    e_min: Option<u64>,
    #[arg(long, global = true)]
    e_max: Option<u64>,
    /// Bins per metric axis
    #[arg(long, global = true)]
    metric_bins: Option<usize>,
    /// Bins per parameter axis
    #[arg(long, global = true)]
    param_bins: Option<usize>,
    /// Optimizer population size
    #[arg(long, global = true)]
    pop: Option<usize>,
    #[arg(long, global = true)]
    max_gen: Option<usize>,
    /// Minimum holdout improvement per generation
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Generations below tolerance before stopping
    #[arg(long, global = true)]
    patience: Option<usize>,
    /// Holdout fraction of the baseline records
    #[arg(long, global = true)]
    holdout: Option<f64>,
    #[arg(long, global = true, env = "GRAPHBARGAIN_SEED")]
    seed: Option<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the naive baseline dataset and its conditional model
    Baseline {
        #[command(flatten)]
        common: Common,
    },
    /// Optimize the parameter distributions against a conditional model
    Optimize {
        /// Conditional model (default: <out>/baseline/conditional.txt)
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate the result dataset from optimized distributions
    Generate {
        /// key=value distribution file (default: <out>/best_q.txt)
        #[arg(long)]
        q: Option<PathBuf>,
        /// Number of graphs (default: --n)
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare real graphs (.mtx or edge lists) against a result dataset
    Validate {
        /// Result manifest (default: <out>/result/manifest.csv)
        #[arg(long)]
        result: Option<PathBuf>,
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Statistics for manifests given as label=path
    Report {
        manifests: Vec<String>,
        /// Also write the combined scatter CSV here
        #[arg(long)]
        scatter: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn build_config(c: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &c.config {
        cfg.apply_file(path)?;
    }
    macro_rules! apply {
        ($($field:ident => $target:expr),* $(,)?) => {
            $(if let Some(v) = c.$field.clone() { $target = v; })*
        };
    }
    apply! {
        n => cfg.n,
        e_min => cfg.e_min,
        e_max => cfg.e_max,
        metric_bins => cfg.metric_bins,
        param_bins => cfg.param_bins,
        pop => cfg.optimizer.population_size,
        max_gen => cfg.optimizer.max_generations,
        tol => cfg.optimizer.tolerance,
        patience => cfg.optimizer.patience,
        holdout => cfg.optimizer.holdout_fraction,
        seed => cfg.seed,
        jobs => cfg.jobs,
        out => cfg.out,
    }
    Ok(cfg)
}

fn parse_labeled(items: &[String]) -> Vec<(String, PathBuf)> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| match s.split_once('=') {
            Some((label, path)) => (label.to_string(), PathBuf::from(path)),
            None => (format!("dataset{i}"), PathBuf::from(s)),
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Baseline { common } => {
            let cfg = build_config(&common)?;
            let out = pipeline::cmd_baseline(&cfg)?;
            let report = std::fs::read_to_string(cfg.baseline_dir().join("report.csv")).unwrap_or_default();
            print!("{report}");
            println!("observed parameter cells: {}", out.model.rows().len());
        }
        Command::Optimize { model, common } => {
            let cfg = build_config(&common)?;
            let model = model.unwrap_or_else(|| cfg.conditional_path());
            let r = pipeline::cmd_optimize(&cfg, &model)?;
            println!(
                "best holdout fitness {} (train {}) after {} generations",
                r.best_holdout_fitness.0, r.best_train_fitness.0, r.generations_run
            );
            println!("wrote {}", cfg.best_q_path().display());
        }
        Command::Generate { q, count, common } => {
            let mut cfg = build_config(&common)?;
            if count.is_some() {
                cfg.count = count;
            }
            let q = pipeline::read_q(&q.unwrap_or_else(|| cfg.best_q_path()))?;
            let rows = pipeline::cmd_generate(&cfg, &q, cfg.count.unwrap_or(cfg.n))?;
            println!("wrote {} graphs to {}", rows.len(), cfg.result_dir().display());
        }
        Command::Validate { result, files, common } => {
            let cfg = build_config(&common)?;
            let result = result.unwrap_or_else(|| cfg.result_dir().join("manifest.csv"));
            let r = pipeline::cmd_validate(&cfg, &result, &files)?;
            for row in &r.rows {
                println!(
                    "{}: N={} E={} C={:.4} Dlog={:.4} covered={}",
                    row.name, row.n_final, row.e_final, row.metrics.clustering, row.metrics.dlog, row.covered
                );
            }
            for (p, e) in &r.failures {
                eprintln!("unreadable: {}: {e}", p.display());
            }
            match r.coverage {
                Some(c) => println!("coverage: {c:.4}"),
                None => println!("coverage: n/a"),
            }
        }
        Command::Report { manifests, scatter, common } => {
            let cfg = build_config(&common)?;
            let labeled = parse_labeled(&manifests);
            print!("{}", pipeline::cmd_report(&cfg, &labeled)?);
            if let Some(path) = scatter {
                let file = std::fs::File::create(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                pipeline::write_scatter(&labeled, std::io::BufWriter::new(file))?;
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::InvalidParams(_) => 2,
        Error::CoverageCollapse(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
