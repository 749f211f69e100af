//! Reversible-jump sampler over tensor-product atoms.
//!
//! Each iteration picks one structural move (birth, death or relocation)
//! with probabilities `(p_b, p_d, p_w)`, then refreshes the coefficient
//! vector, `σ²` and the Lévy mass `M` from their full conditionals.
//!
//! Birth draws the structure `(K, ν, c, ξ)` from its prior, so only the
//! likelihood, the Poisson dimension term `M/(J+1)` and the move
//! probabilities survive in the acceptance ratio. With
//! [`CoefficientProposal::Conditional`] the new coefficient is drawn from
//! its Gaussian full conditional and the likelihood ratio becomes the
//! marginal-likelihood gain of the new column.
//!
//! Relocation either redraws the whole structure from the prior or redraws a
//! single factor from its conditional prior given the others. Both proposals
//! match the prior on the replaced block, so only likelihood terms remain.

mod cache;
pub(crate) mod chain;
pub mod gibbs;
pub mod proposal;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use cache::DesignCache;
pub use chain::{run_chain, run_chain_with, Chain, ChainKind, ChainOptions, Diagnostics};

use crate::error::{MlabsError, Result};
use crate::model::{CoefficientProposal, Dataset, Hyperparams, ModelState};
use crate::tensor::BasisAtom;
use cache::dot;
use proposal::{propose_atom, propose_factor_redraw, propose_structure, KnotAnchors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Birth,
    Death,
    Relocate,
}

impl MoveKind {
    fn index(self) -> usize {
        match self {
            MoveKind::Birth => 0,
            MoveKind::Death => 1,
            MoveKind::Relocate => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
    /// `-∞` for deterministic rejections (death with no atoms, failed proposal).
    pub log_accept_ratio: f64,
    /// Number of atoms the proposed state would have.
    pub proposed_j: usize,
}

/// Per-move proposal and acceptance counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: [usize; 3],
    pub accepted: [usize; 3],
    /// Proposals that could not be formed (no atom to remove, knot failure).
    pub skipped: usize,
}

impl MoveStats {
    pub fn acceptance_rate(&self, kind: MoveKind) -> f64 {
        let i = kind.index();
        if self.proposed[i] == 0 {
            0.0
        } else {
            self.accepted[i] as f64 / self.proposed[i] as f64
        }
    }

    fn record(&mut self, outcome: &MoveOutcome, skipped: bool) {
        let i = outcome.kind.index();
        self.proposed[i] += 1;
        if outcome.accepted {
            self.accepted[i] += 1;
        }
        if skipped {
            self.skipped += 1;
        }
    }
}

/// How a relocation builds the new structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelocateKernel {
    /// Fresh `(K, ν, c, ξ)` from the prior.
    Full,
    /// One factor redrawn from its conditional prior, the rest kept.
    Factor,
}

/// A proposed structural change together with its log acceptance ratio.
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    Birth {
        atom: BasisAtom,
        column: Vec<f64>,
        log_ratio: f64,
    },
    Death {
        index: usize,
        log_ratio: f64,
    },
    Relocate {
        index: usize,
        kernel: RelocateKernel,
        atom: BasisAtom,
        column: Vec<f64>,
        log_ratio: f64,
    },
    /// Rejected without a proposal (no atom to remove or relocate, knots
    /// could not be drawn).
    Skip {
        kind: MoveKind,
    },
}

impl Proposal {
    pub fn kind(&self) -> MoveKind {
        match self {
            Proposal::Birth { .. } => MoveKind::Birth,
            Proposal::Death { .. } => MoveKind::Death,
            Proposal::Relocate { .. } => MoveKind::Relocate,
            Proposal::Skip { kind } => *kind,
        }
    }

    pub fn log_ratio(&self) -> f64 {
        match self {
            Proposal::Birth { log_ratio, .. }
            | Proposal::Death { log_ratio, .. }
            | Proposal::Relocate { log_ratio, .. } => *log_ratio,
            Proposal::Skip { .. } => f64::NEG_INFINITY,
        }
    }
}

/// Mean and variance of one coefficient's Gaussian full conditional given a
/// partial residual, and the log marginal-likelihood gain of including it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnConditional {
    pub mean: f64,
    pub var: f64,
    pub log_gain: f64,
}

pub fn column_conditional(bb: f64, br: f64, sigma2: f64, coef_sd: f64) -> ColumnConditional {
    let prior_var = coef_sd * coef_sd;
    let var = 1.0 / (bb / sigma2 + 1.0 / prior_var);
    let mean = var * br / sigma2;
    ColumnConditional {
        mean,
        var,
        log_gain: 0.5 * (var / prior_var).ln() + 0.5 * mean * mean / var,
    }
}

/// Mutable chain state: the model point, its design cache and fitted values.
///
/// The response is `y` for regression and the latent utilities for probit.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    data: &'a Dataset,
    hyper: &'a Hyperparams,
    anchors: KnotAnchors,
    response: Vec<f64>,
    coef_sd: f64,
    update_sigma2: bool,
    state: ModelState,
    cache: DesignCache,
    fitted: Vec<f64>,
    stats: MoveStats,
}

impl<'a> Sampler<'a> {
    pub fn new(
        data: &'a Dataset,
        hyper: &'a Hyperparams,
        init: ModelState,
        coef_sd: f64,
    ) -> Result<Self> {
        hyper.validate()?;
        if !(coef_sd.is_finite() && coef_sd > 0.0) {
            return Err(MlabsError::Config(format!(
                "coefficient scale must be positive, got {coef_sd}"
            )));
        }
        if let Some(v) = init.max_variable() {
            if v >= data.p() {
                return Err(MlabsError::Input(format!(
                    "initial state uses variable {v} but data has {} predictors",
                    data.p()
                )));
            }
        }
        let anchors = KnotAnchors::new(data, hyper.expansion)?;
        let cache = DesignCache::rebuild(&init, data);
        let mut s = Sampler {
            data,
            hyper,
            anchors,
            response: data.y().to_vec(),
            coef_sd,
            update_sigma2: true,
            state: init,
            cache,
            fitted: Vec::new(),
            stats: MoveStats::default(),
        };
        s.refresh_fitted();
        Ok(s)
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn cache(&self) -> &DesignCache {
        &self.cache
    }

    pub fn anchors(&self) -> &KnotAnchors {
        &self.anchors
    }

    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn stats(&self) -> &MoveStats {
        &self.stats
    }

    pub fn coef_sd(&self) -> f64 {
        self.coef_sd
    }

    pub fn set_coef_sd(&mut self, coef_sd: f64) {
        self.coef_sd = coef_sd;
    }

    pub fn set_response(&mut self, response: Vec<f64>) {
        assert_eq!(response.len(), self.data.n());
        self.response = response;
    }

    pub(crate) fn state_mut(&mut self) -> &mut ModelState {
        &mut self.state
    }

    /// Pins `σ²` and stops its Gibbs update (probit uses unit noise).
    pub fn fix_sigma2(&mut self, sigma2: f64) {
        self.state.sigma2 = sigma2;
        self.update_sigma2 = false;
    }

    fn likelihood_on(&self) -> bool {
        !self.hyper.flat_likelihood
    }

    fn refresh_fitted(&mut self) {
        let mut f = vec![self.state.intercept; self.data.n()];
        for (atom, col) in self.state.atoms.iter().zip(self.cache.columns()) {
            let b = atom.coefficient;
            for (fi, ci) in f.iter_mut().zip(col) {
                *fi += b * ci;
            }
        }
        self.fitted = f;
    }

    fn residual(&self) -> Vec<f64> {
        self.response
            .iter()
            .zip(&self.fitted)
            .map(|(y, f)| y - f)
            .collect()
    }

    pub fn sse(&self) -> f64 {
        self.response
            .iter()
            .zip(&self.fitted)
            .map(|(y, f)| (y - f) * (y - f))
            .sum()
    }

    fn conditional(&self, bb: f64, br: f64) -> ColumnConditional {
        if self.likelihood_on() {
            column_conditional(bb, br, self.state.sigma2, self.coef_sd)
        } else {
            column_conditional(0.0, 0.0, 1.0, self.coef_sd)
        }
    }

    /// `-ΔSSE / 2σ²` for a change `d` added to the fitted values.
    fn log_lik_change(&self, residual: &[f64], delta: &[f64]) -> f64 {
        if !self.likelihood_on() {
            return 0.0;
        }
        let dsse: f64 = residual
            .iter()
            .zip(delta)
            .map(|(r, d)| -2.0 * r * d + d * d)
            .sum();
        -0.5 * dsse / self.state.sigma2
    }

    fn log_dimension_birth(&self) -> f64 {
        let j = self.state.num_atoms() as f64;
        (self.state.levy_mass / (j + 1.0)).ln() + (self.hyper.p_death / self.hyper.p_birth).ln()
    }

    pub fn propose<R: Rng + ?Sized>(&self, kind: MoveKind, rng: &mut R) -> Proposal {
        let res = match kind {
            MoveKind::Birth => self.propose_birth(rng),
            MoveKind::Death => Ok(self.propose_death(rng)),
            MoveKind::Relocate => self.propose_relocate(rng),
        };
        match res {
            Ok(p) => p,
            Err(_) => Proposal::Skip { kind },
        }
    }

    fn propose_birth<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Proposal> {
        let n = self.data.n();
        let residual = self.residual();
        let dim = self.log_dimension_birth();
        match self.hyper.coefficient_proposal {
            CoefficientProposal::Prior => {
                let atom = propose_atom(&self.anchors, self.hyper, self.coef_sd, rng)?;
                let column = atom.design_column_unchecked(self.data.columns(), n);
                let delta: Vec<f64> = column.iter().map(|c| atom.coefficient * c).collect();
                let log_ratio = self.log_lik_change(&residual, &delta) + dim;
                Ok(Proposal::Birth {
                    atom,
                    column,
                    log_ratio,
                })
            }
            CoefficientProposal::Conditional => {
                let structure = propose_structure(&self.anchors, self.hyper, rng)?;
                let column = structure.design_column_unchecked(self.data.columns(), n);
                let cond = self.conditional(dot(&column, &column), dot(&column, &residual));
                let beta = cond.mean + cond.var.sqrt() * crate::dist::sample_std_normal(rng);
                Ok(Proposal::Birth {
                    atom: structure.with_coefficient(beta),
                    column,
                    log_ratio: cond.log_gain + dim,
                })
            }
        }
    }

    fn propose_death<R: Rng + ?Sized>(&self, rng: &mut R) -> Proposal {
        let j = self.state.num_atoms();
        if j == 0 {
            return Proposal::Skip {
                kind: MoveKind::Death,
            };
        }
        let index = rng.random_range(0..j);
        let beta = self.state.atoms[index].coefficient;
        let column = self.cache.column(index);
        let residual = self.residual();
        // reverse of a birth from J-1 atoms
        let dim = ((j as f64) / self.state.levy_mass).ln()
            + (self.hyper.p_birth / self.hyper.p_death).ln();
        let log_ratio = match self.hyper.coefficient_proposal {
            CoefficientProposal::Prior => {
                let delta: Vec<f64> = column.iter().map(|c| -beta * c).collect();
                self.log_lik_change(&residual, &delta) + dim
            }
            CoefficientProposal::Conditional => {
                let bb = self.cache.gram()[index][index];
                let br = dot(column, &residual) + beta * bb;
                -self.conditional(bb, br).log_gain + dim
            }
        };
        Proposal::Death { index, log_ratio }
    }

    fn propose_relocate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Proposal> {
        let j = self.state.num_atoms();
        if j == 0 {
            return Ok(Proposal::Skip {
                kind: MoveKind::Relocate,
            });
        }
        let n = self.data.n();
        let index = rng.random_range(0..j);
        let beta = self.state.atoms[index].coefficient;
        let old = self.cache.column(index);
        let kernel = if rng.random::<f64>() < self.hyper.p_factor_relocate {
            RelocateKernel::Factor
        } else {
            RelocateKernel::Full
        };
        let structure = match kernel {
            RelocateKernel::Full => propose_structure(&self.anchors, self.hyper, rng)?,
            RelocateKernel::Factor => {
                propose_factor_redraw(&self.state.atoms[index], &self.anchors, self.hyper, rng)?
            }
        };
        let column = structure.design_column_unchecked(self.data.columns(), n);
        let residual = self.residual();
        match self.hyper.coefficient_proposal {
            CoefficientProposal::Prior => {
                let delta: Vec<f64> = column
                    .iter()
                    .zip(old)
                    .map(|(c, o)| beta * (c - o))
                    .collect();
                let log_ratio = self.log_lik_change(&residual, &delta);
                Ok(Proposal::Relocate {
                    index,
                    kernel,
                    atom: structure.with_coefficient(beta),
                    column,
                    log_ratio,
                })
            }
            CoefficientProposal::Conditional => {
                let bb_old = self.cache.gram()[index][index];
                let br_old = dot(old, &residual) + beta * bb_old;
                let bb_new = dot(&column, &column);
                let br_new = dot(&column, &residual) + beta * dot(&column, old);
                let c_old = self.conditional(bb_old, br_old);
                let c_new = self.conditional(bb_new, br_new);
                let beta_new = c_new.mean + c_new.var.sqrt() * crate::dist::sample_std_normal(rng);
                Ok(Proposal::Relocate {
                    index,
                    kernel,
                    atom: structure.with_coefficient(beta_new),
                    column,
                    log_ratio: c_new.log_gain - c_old.log_gain,
                })
            }
        }
    }

    /// Applies an accepted proposal to the state, cache and fitted values.
    pub fn apply(&mut self, proposal: Proposal) {
        match proposal {
            Proposal::Birth { atom, column, .. } => {
                let b = atom.coefficient;
                for (f, c) in self.fitted.iter_mut().zip(&column) {
                    *f += b * c;
                }
                self.state.atoms.push(atom);
                self.cache.push(column);
            }
            Proposal::Death { index, .. } => {
                let atom = self.state.atoms.remove(index);
                let column = self.cache.remove(index);
                for (f, c) in self.fitted.iter_mut().zip(&column) {
                    *f -= atom.coefficient * c;
                }
            }
            Proposal::Relocate {
                index,
                atom,
                column,
                ..
            } => {
                let old_beta = self.state.atoms[index].coefficient;
                let b = atom.coefficient;
                for ((f, c), o) in self
                    .fitted
                    .iter_mut()
                    .zip(&column)
                    .zip(self.cache.column(index))
                {
                    *f += b * c - old_beta * o;
                }
                self.state.atoms[index] = atom;
                self.cache.replace(index, column);
            }
            Proposal::Skip { .. } => {}
        }
    }

    fn run_move<R: Rng + ?Sized>(&mut self, kind: MoveKind, rng: &mut R) -> MoveOutcome {
        let j = self.state.num_atoms();
        let proposal = self.propose(kind, rng);
        let skipped = matches!(proposal, Proposal::Skip { .. });
        let log_ratio = proposal.log_ratio();
        let proposed_j = match kind {
            MoveKind::Birth => j + 1,
            MoveKind::Death => j.saturating_sub(1),
            MoveKind::Relocate => j,
        };
        let accepted = !skipped && {
            let u = 1.0 - rng.random::<f64>();
            u.ln() < log_ratio
        };
        if accepted {
            self.apply(proposal);
        }
        let outcome = MoveOutcome {
            kind,
            accepted,
            log_accept_ratio: log_ratio,
            proposed_j,
        };
        self.stats.record(&outcome, skipped);
        outcome
    }

    pub fn birth_move<R: Rng + ?Sized>(&mut self, rng: &mut R) -> MoveOutcome {
        self.run_move(MoveKind::Birth, rng)
    }

    pub fn death_move<R: Rng + ?Sized>(&mut self, rng: &mut R) -> MoveOutcome {
        self.run_move(MoveKind::Death, rng)
    }

    pub fn relocate_move<R: Rng + ?Sized>(&mut self, rng: &mut R) -> MoveOutcome {
        self.run_move(MoveKind::Relocate, rng)
    }

    pub fn select_move<R: Rng + ?Sized>(&self, rng: &mut R) -> MoveKind {
        let u: f64 = rng.random();
        if u < self.hyper.p_birth {
            MoveKind::Birth
        } else if u < self.hyper.p_birth + self.hyper.p_death {
            MoveKind::Death
        } else {
            MoveKind::Relocate
        }
    }

    /// One randomly selected structural move.
    pub fn structural_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> MoveOutcome {
        let kind = self.select_move(rng);
        self.run_move(kind, rng)
    }

    /// Joint Gaussian draw of all coefficients given structure and `σ²`.
    pub fn gibbs_betas<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let j = self.state.num_atoms();
        if j == 0 {
            self.refresh_fitted();
            return Ok(());
        }
        let betas = if self.likelihood_on() {
            let centered: Vec<f64> = self
                .response
                .iter()
                .map(|y| y - self.state.intercept)
                .collect();
            let xtr: Vec<f64> = self
                .cache
                .columns()
                .iter()
                .map(|c| dot(c, &centered))
                .collect();
            gibbs::draw_coefficients(
                self.cache.gram(),
                &xtr,
                self.state.sigma2,
                self.coef_sd,
                rng,
            )?
        } else {
            let zero = vec![vec![0.0; j]; j];
            gibbs::draw_coefficients(&zero, &vec![0.0; j], 1.0, self.coef_sd, rng)?
        };
        for (a, b) in self.state.atoms.iter_mut().zip(betas) {
            a.coefficient = b;
        }
        self.refresh_fitted();
        Ok(())
    }

    pub fn gibbs_sigma2<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if !self.update_sigma2 {
            return;
        }
        let (sse, n) = if self.likelihood_on() {
            (self.sse(), self.data.n())
        } else {
            (0.0, 0)
        };
        self.state.sigma2 = gibbs::draw_sigma2(sse, n, self.hyper, rng);
    }

    pub fn gibbs_levy_mass<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.state.levy_mass = gibbs::draw_levy_mass(self.state.num_atoms(), self.hyper, rng);
    }

    /// Structural move followed by the coefficient, `σ²` and `M` updates.
    pub fn iterate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<MoveOutcome> {
        let outcome = self.structural_step(rng);
        self.gibbs_betas(rng)?;
        self.gibbs_sigma2(rng);
        self.gibbs_levy_mass(rng);
        Ok(outcome)
    }

    /// Largest deviation of the incremental cache and fitted values from a
    /// from-scratch rebuild.
    pub fn cache_drift(&self) -> f64 {
        let fresh = DesignCache::rebuild(&self.state, self.data);
        let mut fitted = vec![self.state.intercept; self.data.n()];
        for (atom, col) in self.state.atoms.iter().zip(fresh.columns()) {
            for (f, c) in fitted.iter_mut().zip(col) {
                *f += atom.coefficient * c;
            }
        }
        let fdiff = fitted
            .iter()
            .zip(&self.fitted)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.cache.max_abs_diff(&fresh).max(fdiff)
    }
}
