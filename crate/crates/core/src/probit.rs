//! Binary classification through the probit link.
//!
//! Latent utilities `zᵢ = f(xᵢ) + εᵢ`, `εᵢ ~ N(0, 1)`, with `yᵢ = 1` iff
//! `zᵢ > 0`. Given `z` the regression sampler runs unchanged with unit
//! noise variance; the coefficient prior is `N(0, τ⁻¹)` with
//! `τ ~ Ga(a_τ, b_τ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{norm_cdf, norm_quantile, sample_gamma, sample_std_normal_above};
use crate::error::{MlabsError, Result};
use crate::model::{check_rows, mean_function, Dataset, Hyperparams, ModelState};
use crate::sampler::chain::is_retained;
use crate::sampler::{Chain, ChainKind, Diagnostics, Sampler};

/// Intercept on the latent scale is clamped to `±INTERCEPT_BOUND`.
const INTERCEPT_BOUND: f64 = 3.0;
const LATENT_RETRIES: usize = 16;

pub fn check_binary(y: &[f64]) -> Result<()> {
    if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(MlabsError::Input(format!(
            "class labels must be exactly 0 or 1, found {v}"
        )));
    }
    Ok(())
}

/// `Φ⁻¹(ȳ)`, clamped away from ±∞.
pub fn probit_intercept(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    norm_quantile(mean).clamp(-INTERCEPT_BOUND, INTERCEPT_BOUND)
}

/// Draws `zᵢ ~ TN(fᵢ, 1, 0, ∞)` when `yᵢ = 1` and `TN(fᵢ, 1, -∞, 0)` otherwise,
/// with `zᵢ (2yᵢ - 1) > 0` strictly.
pub fn sample_latent<R: Rng + ?Sized>(z: &mut [f64], y: &[f64], f: &[f64], rng: &mut R) {
    for ((zi, &yi), &fi) in z.iter_mut().zip(y).zip(f) {
        *zi = draw_latent(yi == 1.0, fi, rng);
    }
}

fn draw_latent<R: Rng + ?Sized>(positive: bool, mean: f64, rng: &mut R) -> f64 {
    for _ in 0..LATENT_RETRIES {
        let z = if positive {
            mean + sample_std_normal_above(rng, -mean)
        } else {
            mean - sample_std_normal_above(rng, mean)
        };
        if (positive && z > 0.0) || (!positive && z < 0.0) {
            return z;
        }
    }
    // mean + e rounded onto zero every time: only when |mean| dwarfs the tail
    if positive {
        f64::MIN_POSITIVE
    } else {
        -f64::MIN_POSITIVE
    }
}

/// `τ ~ Ga(a_τ + J/2, b_τ + Σβⱼ²/2)` (shape, rate).
pub fn tau_posterior(betas: &[f64], a_tau: f64, b_tau: f64) -> (f64, f64) {
    (
        a_tau + betas.len() as f64 / 2.0,
        b_tau + betas.iter().map(|b| b * b).sum::<f64>() / 2.0,
    )
}

pub fn gibbs_tau<R: Rng + ?Sized>(betas: &[f64], a_tau: f64, b_tau: f64, rng: &mut R) -> f64 {
    let (shape, rate) = tau_posterior(betas, a_tau, b_tau);
    sample_gamma(rng, shape, rate)
}

/// Test hooks for the probit chain.
#[derive(Debug, Clone)]
pub struct ProbitOptions {
    pub update_latent: bool,
    pub update_tau: bool,
    /// Initial latent utilities; drawn from the prior predictive when `None`.
    pub initial_latent: Option<Vec<f64>>,
}

impl Default for ProbitOptions {
    fn default() -> Self {
        ProbitOptions {
            update_latent: true,
            update_tau: true,
            initial_latent: None,
        }
    }
}

pub fn run_probit_chain(data: &Dataset, hyper: &Hyperparams) -> Result<Chain> {
    run_probit_chain_with(data, hyper, &ProbitOptions::default())
}

pub fn run_probit_chain_with(
    data: &Dataset,
    hyper: &Hyperparams,
    opts: &ProbitOptions,
) -> Result<Chain> {
    run_probit_chain_observed(data, hyper, opts, |_, _| {})
}

/// As [`run_probit_chain_with`], calling `observe(iteration, z)` after every
/// latent update; the initial draw reports iteration `None`.
pub fn run_probit_chain_observed<F: FnMut(Option<usize>, &[f64])>(
    data: &Dataset,
    hyper: &Hyperparams,
    opts: &ProbitOptions,
    mut observe: F,
) -> Result<Chain> {
    hyper.validate()?;
    check_binary(data.y())?;
    let intercept = probit_intercept(data.y());
    let tau = hyper.a_tau / hyper.b_tau;
    let mut init = ModelState::new(intercept, 1.0, hyper.a_gamma / hyper.b_gamma);
    init.tau = Some(tau);
    let mut sampler = Sampler::new(data, hyper, init, tau.powf(-0.5))?;
    sampler.fix_sigma2(1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let y = data.y().to_vec();
    let mut z = match &opts.initial_latent {
        Some(z0) => {
            if z0.len() != data.n() {
                return Err(MlabsError::Input(
                    "initial latent vector has wrong length".into(),
                ));
            }
            z0.clone()
        }
        None => {
            let mut z = vec![0.0; data.n()];
            sample_latent(&mut z, &y, sampler.fitted(), &mut rng);
            observe(None, &z);
            z
        }
    };
    sampler.set_response(z.clone());

    let mut samples = Vec::with_capacity(hyper.retained());
    let mut diagnostics = Diagnostics::default();
    for iter in 0..hyper.n_iter {
        if opts.update_latent {
            sample_latent(&mut z, &y, sampler.fitted(), &mut rng);
            observe(Some(iter), &z);
            sampler.set_response(z.clone());
        }
        sampler.structural_step(&mut rng);
        sampler.gibbs_betas(&mut rng)?;
        if opts.update_tau {
            let betas = sampler.state().coefficients();
            let t = gibbs_tau(&betas, hyper.a_tau, hyper.b_tau, &mut rng);
            sampler.state_mut().tau = Some(t);
            sampler.set_coef_sd(t.powf(-0.5));
        }
        sampler.gibbs_levy_mass(&mut rng);
        diagnostics.record(sampler.state());
        if is_retained(iter, hyper) {
            samples.push(sampler.state().clone());
        }
    }
    diagnostics.moves = sampler.stats().clone();
    Ok(Chain {
        kind: ChainKind::Probit,
        samples,
        diagnostics,
    })
}

/// Posterior mean of `Φ(f(x))`, kept strictly inside `(0, 1)`.
pub fn predict_prob(samples: &[ModelState], rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(MlabsError::State(
            "cannot predict from an empty chain".into(),
        ));
    }
    check_rows(samples, rows)?;
    let upper = 1.0 - f64::EPSILON / 2.0;
    Ok(rows
        .iter()
        .map(|x| {
            let p = samples
                .iter()
                .map(|s| norm_cdf(mean_function(s, x)))
                .sum::<f64>()
                / samples.len() as f64;
            p.clamp(f64::MIN_POSITIVE, upper)
        })
        .collect())
}
