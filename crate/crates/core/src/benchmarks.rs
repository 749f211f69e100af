//! Synthetic test surfaces, noise calibration and accuracy metrics.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::sample_std_normal;
use crate::error::{MlabsError, Result};
use crate::model::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    Radial,
    Complex,
    Nonsmooth,
    Friedman1,
    Friedman2,
    Friedman3,
}

impl TestFunction {
    pub const ALL: [TestFunction; 6] = [
        TestFunction::Radial,
        TestFunction::Complex,
        TestFunction::Nonsmooth,
        TestFunction::Friedman1,
        TestFunction::Friedman2,
        TestFunction::Friedman3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Radial => "radial",
            TestFunction::Complex => "complex",
            TestFunction::Nonsmooth => "nonsmooth",
            TestFunction::Friedman1 => "friedman1",
            TestFunction::Friedman2 => "friedman2",
            TestFunction::Friedman3 => "friedman3",
        }
    }

    /// Number of predictor columns generated by default.
    pub fn default_dim(self) -> usize {
        match self {
            TestFunction::Radial | TestFunction::Complex | TestFunction::Nonsmooth => 2,
            TestFunction::Friedman1 => 10,
            TestFunction::Friedman2 | TestFunction::Friedman3 => 4,
        }
    }

    pub fn min_dim(self) -> usize {
        match self {
            TestFunction::Friedman1 => 5,
            other => other.default_dim(),
        }
    }

    pub fn is_surface(self) -> bool {
        self.default_dim() == 2 && self.min_dim() == 2
    }

    /// Closed box `[lo, hi]` of predictor `j`.
    pub fn domain(self, j: usize) -> (f64, f64) {
        match (self, j) {
            (TestFunction::Friedman2 | TestFunction::Friedman3, 0) => (0.0, 100.0),
            (TestFunction::Friedman2 | TestFunction::Friedman3, 1) => (40.0 * PI, 560.0 * PI),
            (TestFunction::Friedman2 | TestFunction::Friedman3, 3) => (1.0, 11.0),
            _ => (0.0, 1.0),
        }
    }

    fn check(self, x: &[f64]) -> Result<()> {
        let p = x.len();
        let ok_len = if self.is_surface()
            || matches!(self, TestFunction::Friedman2 | TestFunction::Friedman3)
        {
            p == self.default_dim()
        } else {
            p >= self.min_dim()
        };
        if !ok_len {
            return Err(MlabsError::Input(format!(
                "{} expects {} predictors, got {p}",
                self.name(),
                self.default_dim()
            )));
        }
        for (j, &v) in x.iter().enumerate() {
            let (lo, hi) = self.domain(j);
            if !(lo..=hi).contains(&v) {
                return Err(MlabsError::Input(format!(
                    "{}: x{} = {v} outside [{lo}, {hi}]",
                    self.name(),
                    j + 1
                )));
            }
        }
        Ok(())
    }

    pub fn eval(self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Radial => {
                let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
                24.234 * (r2 * (0.75 - r2))
            }
            TestFunction::Complex => {
                let (x1, x2) = (x[0], x[1]);
                1.9 * (1.35
                    + x1.exp() * (13.0 * (x1 - 0.6).powi(2)).sin() * (-x2).exp() * (7.0 * x2).sin())
            }
            TestFunction::Nonsmooth => {
                let (x1, x2) = (x[0], x[1]);
                if x2 >= -0.6 * x1 + 0.75 {
                    0.2 + x1 * x1 + 0.1 * x2
                } else {
                    0.7 + 0.01 * (4.0 * x1 + 10.0 * x2 - 9.0).abs().powf(1.5)
                }
            }
            TestFunction::Friedman1 => {
                10.0 * (PI * x[0] * x[1]).sin()
                    + 20.0 * (x[2] - 0.5).powi(2)
                    + 10.0 * x[3]
                    + 5.0 * x[4]
            }
            TestFunction::Friedman2 => {
                let t = x[1] * x[2] - 1.0 / (x[1] * x[3]);
                (x[0] * x[0] + t * t).sqrt()
            }
            TestFunction::Friedman3 => {
                let t = x[1] * x[2] - 1.0 / (x[1] * x[3]);
                (t / x[0]).atan()
            }
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = MlabsError;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| MlabsError::Config(format!("unknown test function '{s}'")))
    }
}

pub fn eval_test_function(id: TestFunction, x: &[f64]) -> Result<f64> {
    id.eval(x)
}

/// Noise sd giving root signal-to-noise ratio `rsnr`: sample sd of `f` over `rsnr`.
pub fn rsnr_sigma(f_values: &[f64], rsnr: f64) -> Result<f64> {
    if !(rsnr.is_finite() && rsnr > 0.0) {
        return Err(MlabsError::Config(format!(
            "rsnr must be positive, got {rsnr}"
        )));
    }
    let n = f_values.len();
    if n < 2 {
        return Err(MlabsError::Input("need at least two signal values".into()));
    }
    let mean = f_values.iter().sum::<f64>() / n as f64;
    let var = f_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 || var.is_nan() {
        return Err(MlabsError::Input("signal is constant".into()));
    }
    Ok(var.sqrt() / rsnr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    /// Equally spaced square grid over the unit square; `n_train` must be a square.
    Grid,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub function: TestFunction,
    pub n_train: usize,
    pub n_test: usize,
    pub rsnr: f64,
    pub design: Design,
    /// Number of predictors; `None` uses the function's default.
    #[serde(default)]
    pub dim: Option<usize>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Desk-scale defaults: a 30×30 grid with 2500 test points for surfaces,
    /// 250 uniform training and 1000 test points for the Friedman functions.
    pub fn standard(function: TestFunction, rsnr: f64, seed: u64) -> Self {
        let (n_train, n_test, design) = if function.is_surface() {
            (900, 2500, Design::Grid)
        } else {
            (250, 1000, Design::Uniform)
        };
        SyntheticSpec {
            function,
            n_train,
            n_test,
            rsnr,
            design,
            dim: None,
            seed,
        }
    }

    fn validate(&self) -> Result<usize> {
        let dim = self.dim.unwrap_or(self.function.default_dim());
        if dim < self.function.min_dim()
            || (dim != self.function.default_dim() && self.function != TestFunction::Friedman1)
        {
            return Err(MlabsError::Config(format!(
                "{} cannot use {dim} predictors",
                self.function
            )));
        }
        if !(self.rsnr.is_finite() && self.rsnr > 0.0) {
            return Err(MlabsError::Config(format!(
                "rsnr must be positive, got {}",
                self.rsnr
            )));
        }
        if self.n_train < 2 || self.n_test == 0 {
            return Err(MlabsError::Config(
                "need n_train >= 2 and n_test >= 1".into(),
            ));
        }
        if self.design == Design::Grid {
            if dim != 2 {
                return Err(MlabsError::Config(
                    "grid design needs a 2-D function".into(),
                ));
            }
            let side = grid_side(self.n_train);
            if side * side != self.n_train {
                return Err(MlabsError::Config(format!(
                    "grid design needs a square n_train, got {}",
                    self.n_train
                )));
            }
        }
        Ok(dim)
    }
}

fn grid_side(n: usize) -> usize {
    let s = (n as f64).sqrt().round() as usize;
    s.max(2)
}

/// Training data with noisy response, test data carrying the noiseless `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: Dataset,
    pub test: Dataset,
    pub sigma: f64,
}

fn uniform_rows<R: Rng>(f: TestFunction, dim: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|j| {
                    let (lo, hi) = f.domain(j);
                    lo + (hi - lo) * rng.random::<f64>()
                })
                .collect()
        })
        .collect()
}

pub fn generate_dataset(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let dim = spec.validate()?;
    let f = spec.function;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let train_rows = match spec.design {
        Design::Grid => {
            let side = grid_side(spec.n_train);
            let step = 1.0 / (side - 1) as f64;
            (0..side)
                .flat_map(|i| (0..side).map(move |j| vec![i as f64 * step, j as f64 * step]))
                .collect()
        }
        Design::Uniform => uniform_rows(f, dim, spec.n_train, &mut rng),
    };
    let test_rows = uniform_rows(f, dim, spec.n_test, &mut rng);
    let signal: Vec<f64> = train_rows.iter().map(|x| f.eval_unchecked(x)).collect();
    let sigma = rsnr_sigma(&signal, spec.rsnr)?;
    let y = signal
        .iter()
        .map(|s| s + sigma * sample_std_normal(&mut rng))
        .collect();
    let truth = test_rows.iter().map(|x| f.eval_unchecked(x)).collect();
    Ok(SyntheticData {
        train: Dataset::from_rows(&train_rows, y)?,
        test: Dataset::from_rows(&test_rows, truth)?,
        sigma,
    })
}

pub fn rmse(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(MlabsError::Input(format!(
            "rmse: lengths differ ({} vs {})",
            truth.len(),
            estimate.len()
        )));
    }
    if truth.is_empty() {
        return Err(MlabsError::Input("rmse: empty input".into()));
    }
    let mse = truth
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / truth.len() as f64;
    Ok(mse.sqrt())
}

/// Area under the ROC curve via the Mann–Whitney statistic, ties counted half.
pub fn auc(labels: &[f64], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(MlabsError::Input("auc: lengths differ".into()));
    }
    if labels.iter().any(|&l| l != 0.0 && l != 1.0) {
        return Err(MlabsError::Input("auc: labels must be 0 or 1".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(MlabsError::Input("auc: NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MlabsError::Input("auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks over tied blocks
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += order[i..=j].iter().filter(|&&k| labels[k] == 1.0).count() as f64 * mid;
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Two interleaving half circles with Gaussian noise of sd `noise`.
/// Label 0 is the upper arc, label 1 the lower, shifted arc.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(MlabsError::Config("two moons needs n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_upper = n / 2 + n % 2;
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let t = PI * rng.random::<f64>();
        let (a, b, label) = if i < n_upper {
            (t.cos(), t.sin(), 0.0)
        } else {
            (1.0 - t.cos(), 0.5 - t.sin(), 1.0)
        };
        rows.push(vec![
            a + noise * sample_std_normal(&mut rng),
            b + noise * sample_std_normal(&mut rng),
        ]);
        y.push(label);
    }
    Dataset::from_rows(&rows, y)
}
