use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MoveStats, Sampler};
use crate::error::Result;
use crate::model::{fit_defaults, predict, Dataset, Hyperparams, ModelState, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Regression,
    Probit,
}

/// Traces over every iteration (burn-in included) and move counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub moves: MoveStats,
    pub num_atoms: Vec<usize>,
    pub sigma2: Vec<f64>,
    pub levy_mass: Vec<f64>,
    pub tau: Vec<f64>,
}

impl Diagnostics {
    pub(crate) fn record(&mut self, state: &ModelState) {
        self.num_atoms.push(state.num_atoms());
        self.sigma2.push(state.sigma2);
        self.levy_mass.push(state.levy_mass);
        if let Some(t) = state.tau {
            self.tau.push(t);
        }
    }
}

/// Retained (post burn-in, thinned) states.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub kind: ChainKind,
    pub samples: Vec<ModelState>,
    pub diagnostics: Diagnostics,
}

impl Chain {
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Prediction> {
        predict(&self.samples, rows)
    }

    /// Posterior mean of a per-sample statistic.
    pub fn posterior_mean<F: Fn(&ModelState) -> f64>(&self, stat: F) -> f64 {
        if self.samples.is_empty() {
            return f64::NAN;
        }
        self.samples.iter().map(stat).sum::<f64>() / self.samples.len() as f64
    }
}

/// Whether iteration `iter` (zero-based) is retained.
pub(crate) fn is_retained(iter: usize, hyper: &Hyperparams) -> bool {
    iter >= hyper.burn_in && (iter + 1 - hyper.burn_in).is_multiple_of(hyper.thin)
}

/// Overrides for the regression chain.
#[derive(Debug, Clone, Default)]
pub struct ChainOptions {
    /// Hold `σ²` at this value instead of sampling it.
    pub fixed_sigma2: Option<f64>,
    /// Fixed coefficient scale instead of the configured rule.
    pub coef_sd: Option<f64>,
}

pub fn run_chain(data: &Dataset, hyper: &Hyperparams) -> Result<Chain> {
    run_chain_with(data, hyper, &ChainOptions::default())
}

pub fn run_chain_with(data: &Dataset, hyper: &Hyperparams, opts: &ChainOptions) -> Result<Chain> {
    hyper.validate()?;
    let (intercept, phi) = fit_defaults(data, hyper)?;
    let coef_sd = opts.coef_sd.unwrap_or(phi);
    let sigma2_init = {
        let n = data.n() as f64;
        let v = data
            .y()
            .iter()
            .map(|y| (y - intercept).powi(2))
            .sum::<f64>()
            / n;
        if v > 0.0 {
            v
        } else {
            1.0
        }
    };
    let init = ModelState::new(intercept, sigma2_init, hyper.a_gamma / hyper.b_gamma);
    let mut sampler = Sampler::new(data, hyper, init, coef_sd)?;
    if let Some(s2) = opts.fixed_sigma2 {
        sampler.fix_sigma2(s2);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut samples = Vec::with_capacity(hyper.retained());
    let mut diagnostics = Diagnostics::default();
    for iter in 0..hyper.n_iter {
        sampler.iterate(&mut rng)?;
        diagnostics.record(sampler.state());
        if is_retained(iter, hyper) {
            samples.push(sampler.state().clone());
        }
    }
    diagnostics.moves = sampler.stats().clone();
    Ok(Chain {
        kind: ChainKind::Regression,
        samples,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retained_count_matches_schedule() {
        let h = Hyperparams::default();
        let kept = (0..h.n_iter).filter(|&i| is_retained(i, &h)).count();
        assert_eq!(kept, 1000);
        assert_eq!(h.retained(), 1000);
        let h = Hyperparams {
            n_iter: 107,
            burn_in: 10,
            thin: 7,
            ..Default::default()
        };
        assert_eq!((0..h.n_iter).filter(|&i| is_retained(i, &h)).count(), 13);
        assert_eq!(h.retained(), 13);
    }

    #[test]
    fn invalid_schedule_is_config_error() {
        let d = Dataset::new(vec![vec![0.0, 1.0, 2.0]], vec![0.0, 1.0, 0.5]).unwrap();
        let h = Hyperparams {
            n_iter: 100,
            burn_in: 100,
            ..Default::default()
        };
        assert!(matches!(
            run_chain(&d, &h),
            Err(crate::error::MlabsError::Config(_))
        ));
    }

    #[test]
    fn same_seed_same_chain() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let y = x.iter().map(|v| (6.0 * v).sin()).collect();
        let d = Dataset::new(vec![x], y).unwrap();
        let h = Hyperparams {
            n_iter: 600,
            burn_in: 300,
            thin: 3,
            ..Default::default()
        };
        let a = run_chain(&d, &h).unwrap();
        let b = run_chain(&d, &h).unwrap();
        assert_eq!(a.samples.len(), 100);
        assert_eq!(a, b);
    }
}
