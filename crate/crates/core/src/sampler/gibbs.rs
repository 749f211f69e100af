//! Conjugate full-conditional draws.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dist::{sample_gamma, sample_inv_gamma, sample_std_normal};
use crate::error::{MlabsError, Result};
use crate::model::Hyperparams;

/// Gaussian full conditional of the coefficient vector in `y - β₀ = Xβ + ε`,
/// `ε ~ N(0, σ²I)`, `β ~ N(0, φ²I)`: precision `XᵀX/σ² + I/φ²`, mean
/// `precision⁻¹ Xᵀ(y - β₀)/σ²`. Returns `(mean, covariance)`.
pub fn coefficient_posterior(
    gram: &[Vec<f64>],
    xtr: &[f64],
    sigma2: f64,
    coef_sd: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (chol, b) = factor(gram, xtr, sigma2, coef_sd)?;
    let mean = chol.solve(&b);
    let cov = chol.inverse();
    let j = xtr.len();
    Ok((
        mean.iter().copied().collect(),
        (0..j)
            .map(|r| (0..j).map(|c| cov[(r, c)]).collect())
            .collect(),
    ))
}

fn factor(
    gram: &[Vec<f64>],
    xtr: &[f64],
    sigma2: f64,
    coef_sd: f64,
) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, DVector<f64>)> {
    let j = xtr.len();
    let prior_prec = 1.0 / (coef_sd * coef_sd);
    let b = DVector::from_iterator(j, xtr.iter().map(|v| v / sigma2));
    let mut jitter = 0.0;
    for _ in 0..8 {
        let a = DMatrix::from_fn(j, j, |r, c| {
            let g = gram[r][c] / sigma2;
            if r == c {
                g + prior_prec + jitter
            } else {
                g
            }
        });
        if let Some(chol) = a.cholesky() {
            return Ok((chol, b));
        }
        // round-off on near-duplicate columns with a very diffuse prior
        let scale = (0..j)
            .map(|i| gram[i][i] / sigma2)
            .fold(prior_prec, f64::max);
        jitter = if jitter == 0.0 {
            1e-12 * scale
        } else {
            jitter * 100.0
        };
    }
    Err(MlabsError::Numerical(
        "coefficient precision matrix is not positive definite".into(),
    ))
}

/// One joint draw from [`coefficient_posterior`].
pub fn draw_coefficients<R: Rng + ?Sized>(
    gram: &[Vec<f64>],
    xtr: &[f64],
    sigma2: f64,
    coef_sd: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let j = xtr.len();
    if j == 0 {
        return Ok(Vec::new());
    }
    let (chol, b) = factor(gram, xtr, sigma2, coef_sd)?;
    let mean = chol.solve(&b);
    let z = DVector::from_iterator(j, (0..j).map(|_| sample_std_normal(rng)));
    // precision = L Lᵀ, so Lᵀ⁻¹ z has covariance precision⁻¹
    let l = chol.l();
    let noise = l
        .tr_solve_lower_triangular(&z)
        .ok_or_else(|| MlabsError::Numerical("singular Cholesky factor".into()))?;
    Ok((mean + noise).iter().copied().collect())
}

/// `σ² ~ IG((r + n)/2, (rR + SSE)/2)`.
pub fn draw_sigma2<R: Rng + ?Sized>(sse: f64, n: usize, hyper: &Hyperparams, rng: &mut R) -> f64 {
    let (shape, scale) = sigma2_posterior(sse, n, hyper);
    sample_inv_gamma(rng, shape, scale)
}

pub fn sigma2_posterior(sse: f64, n: usize, hyper: &Hyperparams) -> (f64, f64) {
    (
        (hyper.sigma_df + n as f64) / 2.0,
        (hyper.sigma_df * hyper.sigma_guess + sse) / 2.0,
    )
}

/// `M ~ Ga(a_γ + J, b_γ + 1)` (shape, rate).
pub fn draw_levy_mass<R: Rng + ?Sized>(num_atoms: usize, hyper: &Hyperparams, rng: &mut R) -> f64 {
    let (shape, rate) = levy_mass_posterior(num_atoms, hyper);
    sample_gamma(rng, shape, rate)
}

pub fn levy_mass_posterior(num_atoms: usize, hyper: &Hyperparams) -> (f64, f64) {
    (hyper.a_gamma + num_atoms as f64, hyper.b_gamma + 1.0)
}
