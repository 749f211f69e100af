//! Data-anchored knot proposals and their densities.
//!
//! For a predictor with observed values `x₁ ≤ … ≤ xₙ` the knot window is
//! `[b₁, b₂] = [x₁ - E·(xₙ - x₁), xₙ + E·(xₙ - x₁)]`. An anchor `a` is drawn
//! uniformly from the observed values and knots are placed around it:
//!
//! | degree | knots below `a`         | at `a` | knots above `a`         |
//! |--------|-------------------------|--------|-------------------------|
//! | 0      | `ξ₁ ~ U[b₁, a]`         |        | `ξ₂ ~ U[a, b₂]`         |
//! | 1      | `ξ₁ ~ U[b₁, a]`         | `ξ₂`   | `ξ₃ ~ U[a, b₂]`         |
//! | 2      | `ξ₁ < ξ₂` from `U[b₁,a]²`|       | `ξ₃ < ξ₄` from `U[a,b₂]²`|
//! | 3      | `ξ₁ < ξ₂` from `U[b₁,a]²`| `ξ₃`  | `ξ₄ < ξ₅` from `U[a,b₂]²`|
//!
//! The same mixture (over anchors) is the knot prior, so the knot terms cancel
//! in birth and relocation acceptance ratios.

use rand::seq::index;
use rand::Rng;

use crate::basis::KnotSequence;
use crate::dist::sample_std_normal;
use crate::error::{MlabsError, Result};
use crate::model::{Dataset, Hyperparams};
use crate::tensor::{AtomFactor, BasisAtom};

const MAX_TIE_RETRIES: usize = 64;

/// Anchor values and knot window of one predictor.
#[derive(Debug, Clone)]
pub struct ColumnAnchors {
    values: Vec<f64>,
    /// Distinct values with multiplicities, ascending.
    distinct: Vec<(f64, usize)>,
    lower: f64,
    upper: f64,
    min: f64,
    max: f64,
}

impl ColumnAnchors {
    pub fn new(column: &[f64], expansion: f64) -> Result<Self> {
        if !(expansion.is_finite() && expansion >= 0.0) {
            return Err(MlabsError::Config(format!(
                "expansion E must be >= 0, got {expansion}"
            )));
        }
        if column.is_empty() {
            return Err(MlabsError::Input("empty predictor column".into()));
        }
        let mut sorted = column.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut distinct: Vec<(f64, usize)> = Vec::new();
        for &v in &sorted {
            match distinct.last_mut() {
                Some((last, c)) if *last == v => *c += 1,
                _ => distinct.push((v, 1)),
            }
        }
        let min = sorted[0];
        let max = sorted[sorted.len() - 1];
        let w = expansion * (max - min);
        Ok(ColumnAnchors {
            values: column.to_vec(),
            distinct,
            lower: min - w,
            upper: max + w,
            min,
            max,
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn is_constant(&self) -> bool {
        self.max == self.min
    }

    /// Anchors usable for a degree: degree 0 tolerates an anchor on the
    /// window edge (one knot lands exactly on it), higher degrees would
    /// always produce tied knots there.
    fn admissible(&self, degree: usize, a: f64) -> bool {
        degree == 0 || (a > self.lower && a < self.upper)
    }

    fn admissible_count(&self, degree: usize) -> usize {
        if degree == 0 || (self.lower < self.min && self.upper > self.max) {
            return self.values.len();
        }
        self.distinct
            .iter()
            .filter(|(a, _)| self.admissible(degree, *a))
            .map(|(_, c)| c)
            .sum()
    }

    fn draw_anchor<R: Rng + ?Sized>(&self, degree: usize, rng: &mut R) -> Result<f64> {
        let total = self.admissible_count(degree);
        if total == 0 {
            return Err(MlabsError::Proposal(format!(
                "no admissible anchor for degree {degree}"
            )));
        }
        if total == self.values.len() {
            return Ok(self.values[rng.random_range(0..total)]);
        }
        let mut pick = rng.random_range(0..total);
        for &(a, c) in &self.distinct {
            if !self.admissible(degree, a) {
                continue;
            }
            if pick < c {
                return Ok(a);
            }
            pick -= c;
        }
        unreachable!("anchor index within admissible count")
    }

    pub fn propose<R: Rng + ?Sized>(&self, degree: usize, rng: &mut R) -> Result<KnotSequence> {
        if degree > 3 {
            return Err(MlabsError::Config(format!("degree {degree} not supported")));
        }
        if self.is_constant() {
            return Err(MlabsError::Proposal("constant predictor column".into()));
        }
        let (lo, hi) = (self.lower, self.upper);
        for _ in 0..MAX_TIE_RETRIES {
            let a = self.draw_anchor(degree, rng)?;
            let below = |rng: &mut R| lo + (a - lo) * rng.random::<f64>();
            let above = |rng: &mut R| a + (hi - a) * rng.random::<f64>();
            let knots = match degree {
                0 => vec![below(rng), above(rng)],
                1 => vec![below(rng), a, above(rng)],
                2 | 3 => {
                    let (u1, u2) = sorted_pair(below(rng), below(rng));
                    let (v1, v2) = sorted_pair(above(rng), above(rng));
                    if degree == 2 {
                        vec![u1, u2, v1, v2]
                    } else {
                        vec![u1, u2, a, v1, v2]
                    }
                }
                _ => unreachable!(),
            };
            if let Ok(k) = KnotSequence::new(degree, knots) {
                return Ok(k);
            }
        }
        Err(MlabsError::Proposal(format!(
            "could not draw strictly ascending knots for degree {degree}"
        )))
    }

    /// Log density of the anchored knot mixture at `kseq`.
    ///
    /// Degrees 1 and 3 put the middle knot exactly on an observed value, so
    /// their density is with respect to counting measure on that knot and
    /// Lebesgue measure on the rest.
    pub fn knot_log_density(&self, kseq: &KnotSequence) -> f64 {
        if self.is_constant() {
            return f64::NEG_INFINITY;
        }
        let k = kseq.knots();
        let degree = kseq.degree();
        let (lo, hi) = (self.lower, self.upper);
        if k[0] < lo || k[degree + 1] > hi {
            return f64::NEG_INFINITY;
        }
        let total = self.admissible_count(degree) as f64;
        if total == 0.0 {
            return f64::NEG_INFINITY;
        }
        let density = match degree {
            0 => {
                // ξ₁ ≤ a ≤ ξ₂; a zero-width side is a point mass on the edge
                let mut sum = 0.0;
                for &(a, c) in self.anchors_between(k[0], k[1]) {
                    let left = side_density(k[0], lo, a);
                    let right = side_density(k[1], a, hi);
                    sum += c as f64 * left * right;
                }
                sum
            }
            1 => match self.anchor_count(k[1]) {
                Some(c) if self.admissible(1, k[1]) => c as f64 / ((k[1] - lo) * (hi - k[1])),
                _ => 0.0,
            },
            2 => {
                let mut sum = 0.0;
                for &(a, c) in self.anchors_between(k[1], k[2]) {
                    if self.admissible(2, a) {
                        sum += c as f64 * 4.0 / ((a - lo).powi(2) * (hi - a).powi(2));
                    }
                }
                sum
            }
            3 => match self.anchor_count(k[2]) {
                Some(c) if self.admissible(3, k[2]) => {
                    c as f64 * 4.0 / ((k[2] - lo).powi(2) * (hi - k[2]).powi(2))
                }
                _ => 0.0,
            },
            _ => 0.0,
        };
        (density / total).ln()
    }

    fn anchors_between(&self, from: f64, to: f64) -> &[(f64, usize)] {
        let start = self.distinct.partition_point(|(a, _)| *a < from);
        let end = self.distinct.partition_point(|(a, _)| *a <= to);
        &self.distinct[start..end.max(start)]
    }

    fn anchor_count(&self, v: f64) -> Option<usize> {
        let i = self.distinct.partition_point(|(a, _)| *a < v);
        self.distinct
            .get(i)
            .filter(|(a, _)| *a == v)
            .map(|(_, c)| *c)
    }
}

/// Density of a `U[from, to]` draw at `x`; a degenerate interval is a point mass.
fn side_density(x: f64, from: f64, to: f64) -> f64 {
    if to > from {
        1.0 / (to - from)
    } else if x == from {
        1.0
    } else {
        0.0
    }
}

fn sorted_pair(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Anchors for every predictor of a dataset.
#[derive(Debug, Clone)]
pub struct KnotAnchors {
    columns: Vec<ColumnAnchors>,
}

impl KnotAnchors {
    pub fn new(data: &Dataset, expansion: f64) -> Result<Self> {
        let columns = data
            .columns()
            .iter()
            .map(|c| ColumnAnchors::new(c, expansion))
            .collect::<Result<_>>()?;
        Ok(KnotAnchors { columns })
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &ColumnAnchors {
        &self.columns[j]
    }
}

/// Draws a knot sequence for one predictor column.
pub fn propose_knots<R: Rng + ?Sized>(
    degree: usize,
    column: &[f64],
    expansion: f64,
    rng: &mut R,
) -> Result<KnotSequence> {
    ColumnAnchors::new(column, expansion)?.propose(degree, rng)
}

/// Draws the structural part `(K, ν, c, ξ)` of an atom; the coefficient is zero.
pub fn propose_structure<R: Rng + ?Sized>(
    anchors: &KnotAnchors,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<BasisAtom> {
    let p = anchors.p();
    let k_max = hyper.effective_max_interaction(p);
    let k = rng.random_range(1..=k_max);
    let mut vars = index::sample(rng, p, k).into_vec();
    vars.sort_unstable();
    let mut factors = Vec::with_capacity(k);
    for v in vars {
        let degree = hyper.degrees[rng.random_range(0..hyper.degrees.len())];
        let knots = anchors.column(v).propose(degree, rng)?;
        factors.push(AtomFactor::new(v, knots));
    }
    BasisAtom::new(factors, 0.0)
}

/// Replaces one factor of `atom`, chosen uniformly. The variable is kept with
/// probability 1/2 and otherwise drawn uniformly from the predictors not used
/// by the remaining factors (the current one included); the degree is kept
/// with probability 1/2 and otherwise drawn uniformly from `S`; knots are
/// always redrawn. Both choices are symmetric and the conditional prior of
/// the variable and degree is uniform, so only the knot densities enter the
/// proposal ratio and they cancel against the prior. The coefficient is zero.
pub fn propose_factor_redraw<R: Rng + ?Sized>(
    atom: &BasisAtom,
    anchors: &KnotAnchors,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<BasisAtom> {
    let l = rng.random_range(0..atom.interaction_order());
    let mut rest: Vec<AtomFactor> = atom.factors().to_vec();
    rest.remove(l);
    let free: Vec<usize> = (0..anchors.p())
        .filter(|v| rest.iter().all(|f| f.variable != *v))
        .collect();
    let old = &atom.factors()[l];
    let v = if rng.random::<bool>() {
        old.variable
    } else {
        free[rng.random_range(0..free.len())]
    };
    let degree = if rng.random::<bool>() {
        old.degree()
    } else {
        hyper.degrees[rng.random_range(0..hyper.degrees.len())]
    };
    let knots = anchors.column(v).propose(degree, rng)?;
    rest.push(AtomFactor::new(v, knots));
    BasisAtom::new(rest, 0.0)
}

/// Draws a full atom from the prior, coefficient `β ~ N(0, coef_sd²)`.
pub fn propose_atom<R: Rng + ?Sized>(
    anchors: &KnotAnchors,
    hyper: &Hyperparams,
    coef_sd: f64,
    rng: &mut R,
) -> Result<BasisAtom> {
    let atom = propose_structure(anchors, hyper, rng)?;
    let beta = coef_sd * sample_std_normal(rng);
    Ok(atom.with_coefficient(beta))
}
