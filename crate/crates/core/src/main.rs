use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mlabs::benchmarks::{SyntheticSpec, TestFunction};
use mlabs::commands;
use mlabs::config::{RunConfig, Task};
use mlabs::{MlabsError, Result};

/// Adaptive tensor-product B-spline regression and classification.
///
/// Settings are read from the TOML file given by --config (if any); flags
/// given on the command line override the file.
#[derive(Parser)]
#[command(name = "mlabs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the regression model and save the chain.
    Fit(Common),
    /// Predict from a saved chain.
    Predict(Common),
    /// Fit the probit classifier and save the chain.
    Classify(Common),
    /// Cross-validate on a dataset.
    Cv(Common),
    /// Synthetic benchmark sweep.
    Benchmark(Common),
    /// Cross-validated hyperparameter grid search.
    HyperGrid(Common),
    /// Write a synthetic train/test pair as CSV.
    Generate {
        #[arg(long)]
        function: TestFunction,
        #[arg(long, default_value_t = 5.0)]
        rsnr: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "y")]
        response: String,
        #[arg(long)]
        output_dir: PathBuf,
    },
}

#[derive(Args, Default)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    predict_data: Option<PathBuf>,
    #[arg(long)]
    chain: Option<PathBuf>,
    #[arg(long)]
    response: Option<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_iter: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Degree set S, e.g. `0,1,2`.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<usize>>,
    #[arg(long)]
    max_interaction: Option<usize>,
    #[arg(long)]
    expansion: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Treat the response as 0/1 labels (cv, hyper-grid).
    #[arg(long)]
    classification: bool,
    #[arg(long, value_delimiter = ',')]
    functions: Option<Vec<TestFunction>>,
    #[arg(long, value_delimiter = ',')]
    rsnr: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    grid_resolution: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn resolve(self, task: Task) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        c.task = task;
        macro_rules! set {
            ($($src:ident => $dst:expr),* $(,)?) => {
                $(if let Some(v) = self.$src { $dst = v; })*
            };
        }
        set!(
            response => c.response,
            output_dir => c.output_dir,
            seed => c.hyper.seed,
            n_iter => c.hyper.n_iter,
            burn_in => c.hyper.burn_in,
            thin => c.hyper.thin,
            degrees => c.hyper.degrees,
            max_interaction => c.hyper.max_interaction,
            expansion => c.hyper.expansion,
            folds => c.cv.folds,
            repeats => c.cv.repeats,
            functions => c.benchmark.functions,
            rsnr => c.benchmark.rsnr,
            replicates => c.benchmark.replicates,
            threads => c.threads,
        );
        if self.data.is_some() {
            c.data = self.data;
        }
        if self.predict_data.is_some() {
            c.predict_data = self.predict_data;
        }
        if self.chain.is_some() {
            c.chain = self.chain;
        }
        if self.grid_resolution.is_some() {
            c.grid_resolution = self.grid_resolution;
        }
        if self.classification {
            c.classification = true;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (task, common) = match cli.command {
        Command::Fit(c) => (Task::Fit, c),
        Command::Predict(c) => (Task::Predict, c),
        Command::Classify(c) => (Task::Classify, c),
        Command::Cv(c) => (Task::Cv, c),
        Command::Benchmark(c) => (Task::Benchmark, c),
        Command::HyperGrid(c) => (Task::HyperGrid, c),
        Command::Generate {
            function,
            rsnr,
            seed,
            response,
            output_dir,
        } => {
            let spec = SyntheticSpec::standard(function, rsnr, seed);
            commands::export_synthetic(&spec, &output_dir, &response)?;
            println!("wrote {}", output_dir.display());
            return Ok(());
        }
    };
    let cfg = common.resolve(task)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| MlabsError::Config(e.to_string()))?;
    }
    match task {
        Task::Fit | Task::Classify => {
            let r = if task == Task::Fit {
                commands::cmd_fit(&cfg)?
            } else {
                commands::cmd_classify(&cfg)?
            };
            let label = if task == Task::Fit {
                "in-sample rmse"
            } else {
                "in-sample auc"
            };
            println!(
                "retained {} samples; mean J {:.2}; mean sigma2 {:.5}; {label} {:.5}",
                r.retained, r.mean_atoms, r.mean_sigma2, r.in_sample_score
            );
        }
        Task::Predict => {
            let t = commands::cmd_predict(&cfg)?;
            println!("wrote {} predictions", t.rows.len());
        }
        Task::Cv => {
            let r = commands::cmd_cv(&cfg)?;
            let metric = if cfg.classification { "auc" } else { "rmse" };
            println!(
                "cv {metric}: mean {:.5} sd {:.5} ({} fits, {} failed)",
                r.mean,
                r.sd,
                r.folds.len(),
                r.failed
            );
        }
        Task::Benchmark => {
            for row in commands::cmd_benchmark(&cfg)? {
                match row.rmse {
                    Some(v) => println!(
                        "{} rsnr={} rep={} rmse={v:.5} ({:.1}s)",
                        row.function, row.rsnr, row.replicate, row.runtime_s
                    ),
                    None => println!(
                        "{} rsnr={} rep={} failed: {}",
                        row.function,
                        row.rsnr,
                        row.replicate,
                        row.error.unwrap_or_default()
                    ),
                }
            }
        }
        Task::HyperGrid => {
            let r = commands::cmd_hyper_grid(&cfg)?;
            println!(
                "best grid point {}: S={:?} K_max={} E={}",
                r.best_index, r.best.degrees, r.best.max_interaction, r.best.expansion
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
