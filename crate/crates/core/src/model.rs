//! Hierarchical model: hyperparameters, state, data, priors and likelihood.
//!
//! The mean function is `f(x) = β₀ + Σⱼ βⱼ Bⱼ(x)` where each `Bⱼ` is a
//! tensor-product atom. The number of atoms is Poisson with mean `M`,
//! `M ~ Ga(a_γ, b_γ)`, `σ² ~ IG(r/2, rR/2)` and `βⱼ ~ N(0, φ²)`. Interaction
//! order, variable subset and degrees are uniform; knots follow the
//! data-anchored scheme in [`crate::sampler::proposal`].

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::dist::{gamma_ln_pdf, inv_gamma_ln_pdf, normal_ln_pdf, poisson_ln_pmf, LN_2PI};
use crate::error::{MlabsError, Result};
use crate::sampler::proposal::KnotAnchors;
use crate::tensor::BasisAtom;

/// Scale `φ` of the Gaussian coefficient prior `N(0, φ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefScale {
    /// Sample variance of the response (divisor `n - 1`).
    Variance,
    /// Half the response range.
    HalfRange,
    Fixed(f64),
}

/// How birth and relocation moves pick the coefficient of a new atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientProposal {
    /// Draw from the prior `N(0, φ²)`; relocation keeps the current coefficient.
    Prior,
    /// Draw from the Gaussian full conditional given the other atoms, which
    /// integrates the coefficient out of the acceptance ratio.
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Allowed B-spline degrees `S` (each in 0..=3).
    pub degrees: Vec<usize>,
    /// Maximum interaction order `K_max`.
    pub max_interaction: usize,
    /// Knot-range expansion multiplier `E`.
    pub expansion: f64,
    pub a_gamma: f64,
    pub b_gamma: f64,
    /// `r` in `σ² ~ IG(r/2, rR/2)`.
    pub sigma_df: f64,
    /// `R` in `σ² ~ IG(r/2, rR/2)`.
    pub sigma_guess: f64,
    pub coef_scale: CoefScale,
    pub p_birth: f64,
    pub p_death: f64,
    pub p_relocate: f64,
    /// Probability that a relocation redraws a single factor of the atom
    /// rather than its whole structure.
    pub p_factor_relocate: f64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub coefficient_proposal: CoefficientProposal,
    /// Gamma prior on the coefficient precision of the probit model.
    pub a_tau: f64,
    pub b_tau: f64,
    /// Diagnostic mode: drop the likelihood so the chain targets the prior.
    pub flat_likelihood: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            degrees: vec![0, 1, 2, 3],
            max_interaction: 2,
            expansion: 0.1,
            a_gamma: 5.0,
            b_gamma: 1.0,
            sigma_df: 0.01,
            sigma_guess: 0.01,
            coef_scale: CoefScale::Variance,
            p_birth: 1.0 / 3.0,
            p_death: 1.0 / 3.0,
            p_relocate: 1.0 / 3.0,
            p_factor_relocate: 0.5,
            n_iter: 100_000,
            burn_in: 50_000,
            thin: 50,
            seed: 42,
            coefficient_proposal: CoefficientProposal::Conditional,
            a_tau: 1.0,
            b_tau: 1.0,
            flat_likelihood: false,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(MlabsError::Config(m));
        if self.degrees.is_empty() {
            return cfg("degree set S must be nonempty".into());
        }
        if let Some(d) = self.degrees.iter().find(|&&d| d > 3) {
            return cfg(format!("degree {d} not supported (allowed 0..=3)"));
        }
        let mut sorted = self.degrees.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.degrees.len() {
            return cfg("degree set S has duplicates".into());
        }
        if self.max_interaction == 0 {
            return cfg("max_interaction must be >= 1".into());
        }
        if !(self.expansion.is_finite() && self.expansion >= 0.0) {
            return cfg(format!("expansion E must be >= 0, got {}", self.expansion));
        }
        for (name, v) in [
            ("a_gamma", self.a_gamma),
            ("b_gamma", self.b_gamma),
            ("sigma_df", self.sigma_df),
            ("sigma_guess", self.sigma_guess),
            ("a_tau", self.a_tau),
            ("b_tau", self.b_tau),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return cfg(format!("{name} must be positive, got {v}"));
            }
        }
        if let CoefScale::Fixed(phi) = self.coef_scale {
            if !(phi.is_finite() && phi > 0.0) {
                return cfg(format!(
                    "fixed coefficient scale must be positive, got {phi}"
                ));
            }
        }
        let probs = [self.p_birth, self.p_death, self.p_relocate];
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return cfg("move probabilities must be non-negative".into());
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return cfg("move probabilities must sum to 1".into());
        }
        if !(0.0..=1.0).contains(&self.p_factor_relocate) {
            return cfg("p_factor_relocate must lie in [0, 1]".into());
        }
        if self.p_birth == 0.0 || self.p_death == 0.0 {
            return cfg("birth and death probabilities must be positive".into());
        }
        if self.burn_in >= self.n_iter {
            return cfg(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            ));
        }
        if self.thin == 0 {
            return cfg("thin must be >= 1".into());
        }
        Ok(())
    }

    /// Number of retained samples for the configured schedule.
    pub fn retained(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }

    /// `K_max` capped by the number of predictors.
    pub fn effective_max_interaction(&self, p: usize) -> usize {
        self.max_interaction.min(p)
    }
}

/// One point of the parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub intercept: f64,
    pub atoms: Vec<BasisAtom>,
    pub sigma2: f64,
    pub levy_mass: f64,
    /// Coefficient precision; only present for probit chains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl ModelState {
    pub fn new(intercept: f64, sigma2: f64, levy_mass: f64) -> Self {
        ModelState {
            intercept,
            atoms: Vec::new(),
            sigma2,
            levy_mass,
            tau: None,
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.coefficient).collect()
    }

    pub fn max_variable(&self) -> Option<usize> {
        self.atoms.iter().map(|a| a.max_variable()).max()
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        mean_function(self, x)
    }
}

/// Training data stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    ranges: Vec<(f64, f64)>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(columns: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let names = (0..columns.len()).map(|j| format!("x{}", j + 1)).collect();
        Self::with_names(columns, y, names)
    }

    pub fn with_names(columns: Vec<Vec<f64>>, y: Vec<f64>, names: Vec<String>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(MlabsError::Input("dataset has no rows".into()));
        }
        if columns.is_empty() {
            return Err(MlabsError::Input("dataset has no predictors".into()));
        }
        if names.len() != columns.len() {
            return Err(MlabsError::Input("one name per predictor required".into()));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(MlabsError::Input(format!(
                    "predictor {j} has {} rows, response has {n}",
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(MlabsError::Input(format!(
                    "predictor {j} has missing values"
                )));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(MlabsError::Input("response has missing values".into()));
        }
        let ranges = columns
            .iter()
            .map(|c| {
                c.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    })
            })
            .collect();
        Ok(Dataset {
            columns,
            y,
            ranges,
            names,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let p = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != p) {
            return Err(MlabsError::Input("rows differ in length".into()));
        }
        let columns = (0..p)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        Self::new(columns, y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    /// Expanded knot bounds `(b₁, b₂)` per predictor for multiplier `E`.
    pub fn bounds(&self, expansion: f64) -> Vec<(f64, f64)> {
        self.ranges
            .iter()
            .map(|&(lo, hi)| {
                let w = expansion * (hi - lo);
                (lo - w, hi + w)
            })
            .collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row(i)).collect()
    }

    /// Same predictors, new response.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        Self::with_names(self.columns.clone(), y, self.names.clone())
    }

    /// Rows at `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let columns = self
            .columns
            .iter()
            .map(|c| idx.iter().map(|&i| c[i]).collect())
            .collect();
        let y = idx.iter().map(|&i| self.y[i]).collect();
        Self::with_names(columns, y, self.names.clone())
    }
}

pub fn mean_function(state: &ModelState, x: &[f64]) -> f64 {
    state.intercept
        + state
            .atoms
            .iter()
            .map(|a| a.coefficient * a.eval_unchecked(x))
            .sum::<f64>()
}

pub fn log_likelihood(state: &ModelState, data: &Dataset) -> f64 {
    let n = data.n() as f64;
    let sse: f64 = (0..data.n())
        .map(|i| {
            let r = data.y()[i] - mean_function(state, &data.row(i));
            r * r
        })
        .sum();
    -0.5 * n * (LN_2PI + state.sigma2.ln()) - 0.5 * sse / state.sigma2
}

/// Intercept `β₀ = ȳ` and coefficient scale `φ` per the configured rule.
pub fn fit_defaults(data: &Dataset, hyper: &Hyperparams) -> Result<(f64, f64)> {
    let y = data.y();
    if y.len() < 2 {
        return Err(MlabsError::Input(
            "at least two observations are needed".into(),
        ));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let phi = match hyper.coef_scale {
        CoefScale::Variance => y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0),
        CoefScale::HalfRange => {
            let (lo, hi) = y
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            0.5 * (hi - lo)
        }
        CoefScale::Fixed(phi) => phi,
    };
    if phi <= 0.0 || phi.is_nan() {
        return Err(MlabsError::Config(
            "coefficient scale is zero: the response is constant".into(),
        ));
    }
    Ok((mean, phi))
}

/// Log prior of one atom's structure `(K, ν, c, ξ)`, excluding the coefficient.
pub fn structure_log_prior(atom: &BasisAtom, hyper: &Hyperparams, anchors: &KnotAnchors) -> f64 {
    let p = anchors.p();
    let k_max = hyper.effective_max_interaction(p);
    let k = atom.interaction_order();
    if k > k_max || atom.max_variable() >= p {
        return f64::NEG_INFINITY;
    }
    let s = hyper.degrees.len() as f64;
    let mut lp = -(k_max as f64).ln() - ln_binomial(p as u64, k as u64);
    for f in atom.factors() {
        if !hyper.degrees.contains(&f.degree()) {
            return f64::NEG_INFINITY;
        }
        lp += -s.ln() + anchors.column(f.variable).knot_log_density(&f.knots);
    }
    lp
}

/// Log prior broken into its components, for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPriorParts {
    pub sigma2: f64,
    pub levy_mass: f64,
    pub count: f64,
    pub coefficients: f64,
    pub structure: f64,
}

impl LogPriorParts {
    pub fn total(&self) -> f64 {
        self.sigma2 + self.levy_mass + self.count + self.coefficients + self.structure
    }
}

/// Prior terms given a coefficient scale and precomputed knot anchors.
pub fn log_prior_parts(
    state: &ModelState,
    hyper: &Hyperparams,
    anchors: &KnotAnchors,
    coef_sd: f64,
) -> LogPriorParts {
    LogPriorParts {
        sigma2: inv_gamma_ln_pdf(
            state.sigma2,
            hyper.sigma_df / 2.0,
            hyper.sigma_df * hyper.sigma_guess / 2.0,
        ),
        levy_mass: gamma_ln_pdf(state.levy_mass, hyper.a_gamma, hyper.b_gamma),
        count: poisson_ln_pmf(state.num_atoms(), state.levy_mass),
        coefficients: state
            .atoms
            .iter()
            .map(|a| normal_ln_pdf(a.coefficient, 0.0, coef_sd))
            .sum(),
        structure: state
            .atoms
            .iter()
            .map(|a| structure_log_prior(a, hyper, anchors))
            .sum(),
    }
}

pub fn log_prior(state: &ModelState, hyper: &Hyperparams, data: &Dataset) -> Result<f64> {
    let (_, phi) = fit_defaults(data, hyper)?;
    let anchors = KnotAnchors::new(data, hyper.expansion)?;
    Ok(log_prior_parts(state, hyper, &anchors, phi).total())
}

/// Posterior summary of `f` at new points.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Posterior mean and central 95% band of `f` over retained samples.
pub fn predict(samples: &[ModelState], rows: &[Vec<f64>]) -> Result<Prediction> {
    predict_draws(samples, rows, |_, _, f| f)
}

/// Like [`predict`] but each draw adds observation noise `N(0, σ²)` from its
/// own sample, so the band covers new responses rather than `f`.
pub fn predict_with_noise(
    samples: &[ModelState],
    rows: &[Vec<f64>],
    seed: u64,
) -> Result<Prediction> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let sd = s.sigma2.sqrt();
            (0..rows.len())
                .map(|_| sd * crate::dist::sample_std_normal(&mut rng))
                .collect()
        })
        .collect();
    predict_draws(samples, rows, |s, i, f| f + noise[s][i])
}

fn predict_draws<F>(samples: &[ModelState], rows: &[Vec<f64>], draw: F) -> Result<Prediction>
where
    F: Fn(usize, usize, f64) -> f64,
{
    if samples.is_empty() {
        return Err(MlabsError::State(
            "cannot predict from an empty chain".into(),
        ));
    }
    check_rows(samples, rows)?;
    let mut mean = Vec::with_capacity(rows.len());
    let mut lower = Vec::with_capacity(rows.len());
    let mut upper = Vec::with_capacity(rows.len());
    let mut values = vec![0.0; samples.len()];
    for (i, x) in rows.iter().enumerate() {
        for (s, state) in samples.iter().enumerate() {
            values[s] = draw(s, i, mean_function(state, x));
        }
        mean.push(values.iter().sum::<f64>() / values.len() as f64);
        values.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&values, 0.025));
        upper.push(quantile_sorted(&values, 0.975));
    }
    Ok(Prediction { mean, lower, upper })
}

pub(crate) fn check_rows(samples: &[ModelState], rows: &[Vec<f64>]) -> Result<()> {
    let needed = samples.iter().filter_map(|s| s.max_variable()).max();
    if let Some(v) = needed {
        if let Some(r) = rows.iter().find(|r| r.len() <= v) {
            return Err(MlabsError::Input(format!(
                "prediction rows have {} predictors but the chain uses variable index {v}",
                r.len()
            )));
        }
    }
    Ok(())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::KnotSequence;
    use crate::tensor::AtomFactor;

    fn step_atom(beta: f64) -> BasisAtom {
        BasisAtom::new(
            vec![AtomFactor::new(
                0,
                KnotSequence::new(0, vec![0.0, 1.0]).unwrap(),
            )],
            beta,
        )
        .unwrap()
    }

    fn toy_data() -> Dataset {
        Dataset::new(vec![vec![0.1, 0.4, 0.6, 0.9]], vec![0.0, 1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn mean_function_cases() {
        let mut s = ModelState::new(1.0, 1.0, 5.0);
        assert_eq!(mean_function(&s, &[0.5]), 1.0);
        s.atoms.push(step_atom(2.0));
        assert_eq!(mean_function(&s, &[0.5]), 3.0);
        assert_eq!(mean_function(&s, &[1.5]), 1.0);
    }

    #[test]
    fn mean_function_is_linear_in_coefficients() {
        let mut s = ModelState::new(0.7, 1.0, 5.0);
        s.atoms.push(step_atom(2.0));
        s.atoms.push(
            BasisAtom::new(
                vec![AtomFactor::new(
                    0,
                    KnotSequence::new(1, vec![0.0, 0.5, 1.0]).unwrap(),
                )],
                -1.3,
            )
            .unwrap(),
        );
        let mut doubled = s.clone();
        doubled.intercept *= 2.0;
        for a in &mut doubled.atoms {
            a.coefficient *= 2.0;
        }
        for x in [0.1, 0.3, 0.5, 0.77] {
            assert_eq!(mean_function(&doubled, &[x]), 2.0 * mean_function(&s, &[x]));
        }
    }

    #[test]
    fn likelihood_closed_forms() {
        let s = ModelState::new(0.0, 1.0, 5.0);
        let d = Dataset::new(vec![vec![0.0]], vec![0.0]).unwrap();
        assert!((log_likelihood(&s, &d) + 0.5 * LN_2PI).abs() < 1e-14);

        let d = Dataset::new(vec![vec![0.0, 1.0]], vec![1.0, -1.0]).unwrap();
        assert!((log_likelihood(&s, &d) - (-LN_2PI - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn likelihood_decreases_beyond_mle_variance() {
        let d = Dataset::new(vec![vec![0.0, 1.0]], vec![1.0, -1.0]).unwrap();
        // residual MLE variance is 1
        let mut prev = f64::INFINITY;
        for s2 in [1.0, 2.0, 5.0, 50.0, 1e4] {
            let ll = log_likelihood(&ModelState::new(0.0, s2, 5.0), &d);
            assert!(ll < prev);
            prev = ll;
        }
    }

    #[test]
    fn prior_terms() {
        let d = toy_data();
        let h = Hyperparams {
            max_interaction: 1,
            ..Default::default()
        };
        let anchors = KnotAnchors::new(&d, h.expansion).unwrap();
        let s = ModelState::new(0.0, 1.0, 5.0);
        let parts = log_prior_parts(&s, &h, &anchors, 2.0);
        assert!((parts.count + 5.0).abs() < 1e-14);
        assert_eq!(parts.coefficients, 0.0);
        let expect_sigma = inv_gamma_ln_pdf(1.0, 0.005, 0.00005);
        assert!((parts.sigma2 - expect_sigma).abs() < 1e-12);

        let mut s1 = s.clone();
        s1.atoms.push(step_atom(0.0));
        let parts1 = log_prior_parts(&s1, &h, &anchors, 2.0);
        assert!(
            (parts1.coefficients - (1.0 / (2.0 * (2.0 * std::f64::consts::PI).sqrt())).ln()).abs()
                < 1e-14
        );
    }

    #[test]
    fn interaction_order_term() {
        // With p = 3, K_max = 3, S = {0}: structure prior = -ln 3 - ln C(3,K) - ln 1 + knots
        let d = Dataset::new(
            vec![
                vec![0.0, 0.5, 1.0],
                vec![0.0, 0.5, 1.0],
                vec![0.0, 0.5, 1.0],
            ],
            vec![0.0, 1.0, 2.0],
        )
        .unwrap();
        let h = Hyperparams {
            degrees: vec![0],
            max_interaction: 3,
            ..Default::default()
        };
        let anchors = KnotAnchors::new(&d, h.expansion).unwrap();
        let knots = KnotSequence::new(0, vec![0.2, 0.6]).unwrap();
        let atom = BasisAtom::new(vec![AtomFactor::new(1, knots.clone())], 1.0).unwrap();
        let lp = structure_log_prior(&atom, &h, &anchors);
        let expected = -(3f64).ln() - (3f64).ln() + anchors.column(1).knot_log_density(&knots);
        assert!((lp - expected).abs() < 1e-12);
    }

    #[test]
    fn defaults_rules() {
        let d = Dataset::new(vec![vec![0.0, 1.0]], vec![0.0, 2.0]).unwrap();
        let h = Hyperparams {
            coef_scale: CoefScale::HalfRange,
            ..Default::default()
        };
        assert_eq!(fit_defaults(&d, &h).unwrap(), (1.0, 1.0));

        let d = Dataset::new(vec![vec![0.0, 1.0, 2.0]], vec![1.0, 3.0, 5.0]).unwrap();
        let (b0, phi) = fit_defaults(&d, &Hyperparams::default()).unwrap();
        assert_eq!(b0, 3.0);
        assert_eq!(phi, 4.0);

        let d = Dataset::new(vec![vec![0.0, 1.0, 2.0]], vec![4.0, 4.0, 4.0]).unwrap();
        assert!(matches!(
            fit_defaults(&d, &Hyperparams::default()),
            Err(MlabsError::Config(_))
        ));
    }

    #[test]
    fn predict_summaries() {
        let mut a = ModelState::new(1.0, 1.0, 5.0);
        a.atoms.push(step_atom(2.0));
        let p = predict(std::slice::from_ref(&a), &[vec![0.5]]).unwrap();
        assert_eq!(p.mean, vec![3.0]);
        assert_eq!(p.lower, vec![3.0]);
        assert_eq!(p.upper, vec![3.0]);

        let b = ModelState::new(1.0, 1.0, 5.0);
        let p = predict(&[a, b], &[vec![0.5]]).unwrap();
        assert_eq!(p.mean, vec![2.0]);

        assert!(matches!(
            predict(&[], &[vec![0.5]]),
            Err(MlabsError::State(_))
        ));
    }

    #[test]
    fn hyper_validation() {
        assert!(Hyperparams::default().validate().is_ok());
        let bad = Hyperparams {
            burn_in: 10,
            n_iter: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = Hyperparams {
            p_birth: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = Hyperparams {
            expansion: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = Hyperparams {
            degrees: vec![],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
