//! Run configuration: one TOML document per run, overridable from the command line.
//!
//! ```toml
//! task = "fit"
//! data = "train.csv"
//! response = "y"
//! output_dir = "out"
//!
//! [hyper]
//! degrees = [0, 1]
//! max_interaction = 2
//! n_iter = 20000
//! burn_in = 10000
//! thin = 10
//!
//! [cv]
//! folds = 5
//! repeats = 1
//! ```
//!
//! Every field has a default, so an empty document is a valid regression run
//! once `data` is supplied.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarks::TestFunction;
use crate::error::{MlabsError, Result};
use crate::model::Hyperparams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Fit,
    Predict,
    Classify,
    Benchmark,
    Cv,
    HyperGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub functions: Vec<TestFunction>,
    pub rsnr: Vec<f64>,
    pub replicates: usize,
    /// Training-set size override; `None` keeps each function's standard size.
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            functions: vec![TestFunction::Radial],
            rsnr: vec![1.0, 5.0],
            replicates: 5,
            n_train: None,
            n_test: None,
        }
    }
}

/// Candidate values for the hyperparameter search; the full product is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub degrees: Vec<Vec<usize>>,
    pub max_interaction: Vec<usize>,
    pub expansion: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            degrees: vec![
                vec![0],
                vec![1],
                vec![2],
                vec![3],
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3],
                vec![0, 1, 2],
                vec![0, 1, 2, 3],
            ],
            max_interaction: vec![1, 2, 3],
            expansion: vec![0.1, 1.0, 2.0, 3.0],
        }
    }
}

impl GridConfig {
    /// Grid points in enumeration order: degree sets outermost, then `K_max`, then `E`.
    pub fn points(&self, base: &Hyperparams) -> Vec<Hyperparams> {
        let mut out = Vec::new();
        for s in &self.degrees {
            for &k in &self.max_interaction {
                for &e in &self.expansion {
                    out.push(Hyperparams {
                        degrees: s.clone(),
                        max_interaction: k,
                        expansion: e,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    /// Training data (or the data to cross-validate).
    pub data: Option<PathBuf>,
    /// Rows to predict at.
    pub predict_data: Option<PathBuf>,
    /// Chain file to read (`predict`); defaults to `output_dir/chain.jsonl`.
    pub chain: Option<PathBuf>,
    pub response: String,
    /// Binary 0/1 response with the probit model (`cv`, `hyper-grid`).
    pub classification: bool,
    pub output_dir: PathBuf,
    /// Side length of the probability grid exported by `classify` for 2-D data.
    pub grid_resolution: Option<usize>,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub hyper: Hyperparams,
    pub cv: CvConfig,
    pub benchmark: BenchmarkConfig,
    pub grid: GridConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::Fit,
            data: None,
            predict_data: None,
            chain: None,
            response: "y".into(),
            classification: false,
            output_dir: PathBuf::from("mlabs-out"),
            grid_resolution: None,
            threads: 0,
            hyper: Hyperparams::default(),
            cv: CvConfig::default(),
            benchmark: BenchmarkConfig::default(),
            grid: GridConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| MlabsError::Config("no data file given".into()))
    }

    pub fn chain_path(&self) -> PathBuf {
        self.chain
            .clone()
            .unwrap_or_else(|| self.output_dir.join("chain.jsonl"))
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.cv.folds < 2 {
            return Err(MlabsError::Config("cv.folds must be >= 2".into()));
        }
        if self.cv.repeats == 0 {
            return Err(MlabsError::Config("cv.repeats must be >= 1".into()));
        }
        if self.benchmark.replicates == 0 {
            return Err(MlabsError::Config(
                "benchmark.replicates must be >= 1".into(),
            ));
        }
        if self.grid_resolution.is_some_and(|g| g < 2) {
            return Err(MlabsError::Config("grid_resolution must be >= 2".into()));
        }
        Ok(())
    }
}
