//! Workflows behind the command-line interface. Each command is a pure
//! function of its configuration, input files and seed.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{auc, generate_dataset, rmse, SyntheticSpec, TestFunction};
use crate::config::RunConfig;
use crate::error::{MlabsError, Result};
use crate::io::{load_chain, read_dataset, read_predictors, save_chain, write_rows, Table};
use crate::model::{Dataset, Hyperparams};
use crate::probit::{check_binary, predict_prob, run_probit_chain};
use crate::sampler::{run_chain, Chain, ChainKind, MoveKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub p: usize,
    pub retained: usize,
    pub mean_atoms: f64,
    pub mean_sigma2: f64,
    /// RMSE of the posterior mean against the training response (regression),
    /// or AUC of the posterior probabilities (classification).
    pub in_sample_score: f64,
    pub accept_birth: f64,
    pub accept_death: f64,
    pub accept_relocate: f64,
}

fn report(chain: &Chain, data: &Dataset) -> Result<FitReport> {
    let rows = data.rows();
    let score = match chain.kind {
        ChainKind::Regression => rmse(data.y(), &chain.predict(&rows)?.mean)?,
        ChainKind::Probit => auc(data.y(), &predict_prob(&chain.samples, &rows)?)?,
    };
    let m = &chain.diagnostics.moves;
    Ok(FitReport {
        n: data.n(),
        p: data.p(),
        retained: chain.samples.len(),
        mean_atoms: chain.posterior_mean(|s| s.num_atoms() as f64),
        mean_sigma2: chain.posterior_mean(|s| s.sigma2),
        in_sample_score: score,
        accept_birth: m.acceptance_rate(MoveKind::Birth),
        accept_death: m.acceptance_rate(MoveKind::Death),
        accept_relocate: m.acceptance_rate(MoveKind::Relocate),
    })
}

fn prepare_output(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    Ok(())
}

/// Fits the regression chain, writes `chain.jsonl` and `report.csv`.
pub fn cmd_fit(cfg: &RunConfig) -> Result<FitReport> {
    cfg.validate()?;
    let data = read_dataset(cfg.data_path()?, &cfg.response)?;
    let chain = run_chain(&data, &cfg.hyper)?;
    prepare_output(cfg)?;
    save_chain(cfg.chain_path(), &chain, data.names())?;
    let rep = report(&chain, &data)?;
    write_rows(
        cfg.output_dir.join("report.csv"),
        std::slice::from_ref(&rep),
    )?;
    Ok(rep)
}

/// Fits the probit chain; optionally exports a probability grid for 2-D data
/// and predictions at `predict_data`.
pub fn cmd_classify(cfg: &RunConfig) -> Result<FitReport> {
    cfg.validate()?;
    let data = read_dataset(cfg.data_path()?, &cfg.response)?;
    let chain = run_probit_chain(&data, &cfg.hyper)?;
    prepare_output(cfg)?;
    save_chain(cfg.chain_path(), &chain, data.names())?;
    let rep = report(&chain, &data)?;
    write_rows(
        cfg.output_dir.join("report.csv"),
        std::slice::from_ref(&rep),
    )?;
    if let Some(g) = cfg.grid_resolution {
        let grid = probability_grid(&chain, &data, g)?;
        crate::io::write_table(cfg.output_dir.join("grid.csv"), &grid)?;
    }
    if let Some(path) = &cfg.predict_data {
        let rows = read_predictors(path, data.names())?;
        write_predictions(cfg, &chain, &rows)?;
    }
    Ok(rep)
}

/// `(x₁, x₂, p̂)` over a `g × g` grid spanning the observed ranges.
pub fn probability_grid(chain: &Chain, data: &Dataset, g: usize) -> Result<Table> {
    if data.p() != 2 {
        return Err(MlabsError::Config(format!(
            "grid export needs two predictors, data has {}",
            data.p()
        )));
    }
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..g)
            .map(|i| lo + (hi - lo) * i as f64 / (g - 1) as f64)
            .collect()
    };
    let (a, b) = (axis(data.ranges()[0]), axis(data.ranges()[1]));
    let points: Vec<Vec<f64>> = a
        .iter()
        .flat_map(|&u| b.iter().map(move |&v| vec![u, v]))
        .collect();
    let p = predict_prob(&chain.samples, &points)?;
    let mut headers = data.names().to_vec();
    headers.push("prob".into());
    Ok(Table {
        headers,
        rows: points
            .into_iter()
            .zip(p)
            .map(|(mut r, p)| {
                r.push(p);
                r
            })
            .collect(),
    })
}

fn write_predictions(cfg: &RunConfig, chain: &Chain, rows: &[Vec<f64>]) -> Result<Table> {
    let table = match chain.kind {
        ChainKind::Regression => {
            let pred = chain.predict(rows)?;
            Table {
                headers: vec!["mean".into(), "lower".into(), "upper".into()],
                rows: (0..rows.len())
                    .map(|i| vec![pred.mean[i], pred.lower[i], pred.upper[i]])
                    .collect(),
            }
        }
        ChainKind::Probit => Table {
            headers: vec!["prob".into()],
            rows: predict_prob(&chain.samples, rows)?
                .into_iter()
                .map(|p| vec![p])
                .collect(),
        },
    };
    prepare_output(cfg)?;
    crate::io::write_table(cfg.output_dir.join("predictions.csv"), &table)?;
    Ok(table)
}

/// Loads a saved chain and predicts at `predict_data` (falling back to `data`).
pub fn cmd_predict(cfg: &RunConfig) -> Result<Table> {
    let (header, chain) = load_chain(cfg.chain_path())?;
    let path = cfg
        .predict_data
        .as_deref()
        .or(cfg.data.as_deref())
        .ok_or_else(|| MlabsError::Config("no prediction data given".into()))?;
    let rows = read_predictors(path, &header.names)?;
    write_predictions(cfg, &chain, &rows)
}

/// Fold index sets for one repeat. With `labels`, each class is spread
/// evenly over the folds.
pub fn cv_folds(
    n: usize,
    folds: usize,
    seed: u64,
    labels: Option<&[f64]>,
) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(MlabsError::Config("folds must be >= 2".into()));
    }
    if folds > n {
        return Err(MlabsError::Config(format!(
            "{folds} folds requested for {n} rows"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<usize>> = match labels {
        Some(y) => {
            let mut pos: Vec<usize> = (0..n).filter(|&i| y[i] == 1.0).collect();
            let mut neg: Vec<usize> = (0..n).filter(|&i| y[i] != 1.0).collect();
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            vec![pos, neg]
        }
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            vec![all]
        }
    };
    let mut out = vec![Vec::new(); folds];
    let mut k = 0;
    for g in groups {
        for i in g {
            out[k % folds].push(i);
            k += 1;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub repeat: usize,
    pub fold: usize,
    /// Test RMSE (regression) or AUC (classification); `None` when the fit failed.
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldScore>,
    pub mean: f64,
    pub sd: f64,
    pub failed: usize,
}

fn fold_fit(
    data: &Dataset,
    test_idx: &[usize],
    hyper: &Hyperparams,
    classification: bool,
) -> Result<f64> {
    let train_idx: Vec<usize> = {
        let mut mask = vec![true; data.n()];
        for &i in test_idx {
            mask[i] = false;
        }
        (0..data.n()).filter(|&i| mask[i]).collect()
    };
    let train = data.subset(&train_idx)?;
    let test = data.subset(test_idx)?;
    let rows = test.rows();
    if classification {
        let chain = run_probit_chain(&train, hyper)?;
        auc(test.y(), &predict_prob(&chain.samples, &rows)?)
    } else {
        let chain = run_chain(&train, hyper)?;
        rmse(test.y(), &chain.predict(&rows)?.mean)
    }
}

/// Repeated k-fold cross-validation; folds run in parallel.
pub fn cross_validate(
    data: &Dataset,
    hyper: &Hyperparams,
    folds: usize,
    repeats: usize,
    classification: bool,
) -> Result<CvReport> {
    hyper.validate()?;
    if repeats == 0 {
        return Err(MlabsError::Config("repeats must be >= 1".into()));
    }
    if classification {
        check_binary(data.y())?;
    }
    let labels = classification.then(|| data.y());
    let mut tasks = Vec::new();
    for r in 0..repeats {
        let assignment = cv_folds(data.n(), folds, hyper.seed.wrapping_add(r as u64), labels)?;
        for (f, idx) in assignment.into_iter().enumerate() {
            tasks.push((r, f, idx));
        }
    }
    let results: Vec<FoldScore> = tasks
        .par_iter()
        .map(|(r, f, idx)| {
            let h = Hyperparams {
                seed: hyper.seed.wrapping_add((r * folds + f) as u64 * 7919 + 1),
                ..hyper.clone()
            };
            match fold_fit(data, idx, &h, classification) {
                Ok(s) => FoldScore {
                    repeat: *r,
                    fold: *f,
                    score: Some(s),
                    error: None,
                },
                Err(e) => FoldScore {
                    repeat: *r,
                    fold: *f,
                    score: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let scores: Vec<f64> = results.iter().filter_map(|s| s.score).collect();
    let failed = results.len() - scores.len();
    let (mean, sd) = mean_sd(&scores);
    Ok(CvReport {
        folds: results,
        mean,
        sd,
        failed,
    })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

pub fn cmd_cv(cfg: &RunConfig) -> Result<CvReport> {
    cfg.validate()?;
    let data = read_dataset(cfg.data_path()?, &cfg.response)?;
    let rep = cross_validate(
        &data,
        &cfg.hyper,
        cfg.cv.folds,
        cfg.cv.repeats,
        cfg.classification,
    )?;
    prepare_output(cfg)?;
    write_rows(cfg.output_dir.join("cv.csv"), &rep.folds)?;
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub function: TestFunction,
    pub rsnr: f64,
    pub replicate: usize,
    pub rmse: Option<f64>,
    pub runtime_s: f64,
    pub error: Option<String>,
}

/// Generates, fits and scores one replicate. Data and chain share the seed
/// `seed + replicate`.
pub fn benchmark_replicate(
    function: TestFunction,
    rsnr: f64,
    replicate: usize,
    hyper: &Hyperparams,
    sizes: (Option<usize>, Option<usize>),
) -> BenchmarkRow {
    let start = Instant::now();
    let seed = hyper.seed.wrapping_add(replicate as u64);
    let run = || -> Result<f64> {
        let mut spec = SyntheticSpec::standard(function, rsnr, seed);
        if let Some(n) = sizes.0 {
            spec.n_train = n;
        }
        if let Some(n) = sizes.1 {
            spec.n_test = n;
        }
        let d = generate_dataset(&spec)?;
        let h = Hyperparams {
            seed,
            ..hyper.clone()
        };
        let chain = run_chain(&d.train, &h)?;
        rmse(d.test.y(), &chain.predict(&d.test.rows())?.mean)
    };
    let res = run();
    BenchmarkRow {
        function,
        rsnr,
        replicate,
        rmse: res.as_ref().ok().copied(),
        runtime_s: start.elapsed().as_secs_f64(),
        error: res.err().map(|e| e.to_string()),
    }
}

/// Every (function, rsnr, replicate) cell, in that nesting order.
pub fn run_benchmark(cfg: &RunConfig) -> Result<Vec<BenchmarkRow>> {
    cfg.validate()?;
    let b = &cfg.benchmark;
    let mut cells = Vec::new();
    for &f in &b.functions {
        for &r in &b.rsnr {
            for rep in 0..b.replicates {
                cells.push((f, r, rep));
            }
        }
    }
    Ok(cells
        .par_iter()
        .map(|&(f, r, rep)| benchmark_replicate(f, r, rep, &cfg.hyper, (b.n_train, b.n_test)))
        .collect())
}

pub fn cmd_benchmark(cfg: &RunConfig) -> Result<Vec<BenchmarkRow>> {
    let rows = run_benchmark(cfg)?;
    prepare_output(cfg)?;
    write_rows(cfg.output_dir.join("benchmark.csv"), &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub index: usize,
    pub degrees: String,
    pub max_interaction: usize,
    pub expansion: f64,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: Hyperparams,
    pub best_index: usize,
    pub rows: Vec<GridRow>,
}

/// Index of the best score; ties keep the earliest.
fn select_best(scores: &[Option<f64>], higher_is_better: bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        let Some(s) = *s else { continue };
        let better = match best {
            None => true,
            Some((_, b)) => {
                if higher_is_better {
                    s > b
                } else {
                    s < b
                }
            }
        };
        if better {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Cross-validated search over the configured grid.
pub fn hyper_grid(
    data: &Dataset,
    points: &[Hyperparams],
    folds: usize,
    repeats: usize,
    classification: bool,
) -> Result<GridResult> {
    let row = |i: usize, h: &Hyperparams, score| GridRow {
        index: i,
        degrees: h
            .degrees
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(" "),
        max_interaction: h.max_interaction,
        expansion: h.expansion,
        score,
    };
    match points {
        [] => Err(MlabsError::Config("hyperparameter grid is empty".into())),
        [only] => {
            only.validate()?;
            Ok(GridResult {
                best: only.clone(),
                best_index: 0,
                rows: vec![row(0, only, None)],
            })
        }
        _ => {
            let scores: Vec<Option<f64>> = points
                .iter()
                .map(|h| {
                    cross_validate(data, h, folds, repeats, classification)
                        .ok()
                        .filter(|r| r.failed == 0 && r.mean.is_finite())
                        .map(|r| r.mean)
                })
                .collect();
            let best_index = select_best(&scores, classification)
                .ok_or_else(|| MlabsError::State("every grid point failed to fit".into()))?;
            Ok(GridResult {
                best: points[best_index].clone(),
                best_index,
                rows: points
                    .iter()
                    .zip(&scores)
                    .enumerate()
                    .map(|(i, (h, s))| row(i, h, *s))
                    .collect(),
            })
        }
    }
}

pub fn cmd_hyper_grid(cfg: &RunConfig) -> Result<GridResult> {
    cfg.validate()?;
    let points = cfg.grid.points(&cfg.hyper);
    let data = read_dataset(cfg.data_path()?, &cfg.response)?;
    let res = hyper_grid(
        &data,
        &points,
        cfg.cv.folds,
        cfg.cv.repeats,
        cfg.classification,
    )?;
    prepare_output(cfg)?;
    write_rows(cfg.output_dir.join("grid.csv"), &res.rows)?;
    let best = toml::to_string(&res.best)
        .map_err(|e| MlabsError::State(format!("cannot serialize hyperparameters: {e}")))?;
    std::fs::write(cfg.output_dir.join("best_hyper.toml"), best)?;
    Ok(res)
}

/// Writes a synthetic dataset pair as `train.csv` and `test.csv` under `dir`.
pub fn export_synthetic(spec: &SyntheticSpec, dir: &Path, response: &str) -> Result<()> {
    let d = generate_dataset(spec)?;
    std::fs::create_dir_all(dir)?;
    crate::io::write_dataset(dir.join("train.csv"), &d.train, response)?;
    crate::io::write_dataset(dir.join("test.csv"), &d.test, response)?;
    Ok(())
}
