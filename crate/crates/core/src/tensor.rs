//! Tensor-product basis atoms and design-column assembly.

use serde::{Deserialize, Serialize};

use crate::basis::KnotSequence;
use crate::error::{MlabsError, Result};

/// One univariate factor of an atom: a B-spline on a single predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomFactor {
    /// Zero-based predictor index.
    pub variable: usize,
    pub knots: KnotSequence,
}

impl AtomFactor {
    pub fn new(variable: usize, knots: KnotSequence) -> Self {
        AtomFactor { variable, knots }
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }
}

/// A product of B-splines over distinct predictors, with its coefficient.
///
/// Factors are stored sorted by variable index, so two atoms built from the
/// same factor set in any order compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AtomRepr", into = "AtomRepr")]
pub struct BasisAtom {
    factors: Vec<AtomFactor>,
    pub coefficient: f64,
}

#[derive(Serialize, Deserialize)]
struct AtomRepr {
    factors: Vec<AtomFactor>,
    coefficient: f64,
}

impl TryFrom<AtomRepr> for BasisAtom {
    type Error = MlabsError;

    fn try_from(r: AtomRepr) -> Result<Self> {
        BasisAtom::new(r.factors, r.coefficient)
    }
}

impl From<BasisAtom> for AtomRepr {
    fn from(a: BasisAtom) -> Self {
        AtomRepr {
            factors: a.factors,
            coefficient: a.coefficient,
        }
    }
}

impl BasisAtom {
    pub fn new(mut factors: Vec<AtomFactor>, coefficient: f64) -> Result<Self> {
        if factors.is_empty() {
            return Err(MlabsError::Input(
                "an atom needs at least one factor".into(),
            ));
        }
        factors.sort_by_key(|f| f.variable);
        if factors.windows(2).any(|w| w[0].variable == w[1].variable) {
            return Err(MlabsError::Input(
                "atom factors must use distinct variables".into(),
            ));
        }
        Ok(BasisAtom {
            factors,
            coefficient,
        })
    }

    pub fn interaction_order(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[AtomFactor] {
        &self.factors
    }

    pub fn variables(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.variable).collect()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.degree()).collect()
    }

    pub fn max_variable(&self) -> usize {
        self.factors.last().map(|f| f.variable).unwrap_or(0)
    }

    /// Same factors, different coefficient.
    pub fn with_coefficient(&self, coefficient: f64) -> Self {
        BasisAtom {
            factors: self.factors.clone(),
            coefficient,
        }
    }

    /// Same structure check, ignoring the coefficient.
    pub fn same_structure(&self, other: &BasisAtom) -> bool {
        self.factors == other.factors
    }

    /// Product of the factor evaluations at one observation, without the coefficient.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if self.max_variable() >= x.len() {
            return Err(MlabsError::Input(format!(
                "atom uses variable {} but the observation has {} predictors",
                self.max_variable(),
                x.len()
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut prod = 1.0;
        for f in &self.factors {
            prod *= f.knots.eval(x[f.variable]);
            if prod == 0.0 {
                return 0.0;
            }
        }
        prod
    }

    /// Evaluates the atom for every row of a column-major design.
    pub fn design_column(&self, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
        if self.max_variable() >= columns.len() {
            return Err(MlabsError::Input(format!(
                "atom uses variable {} but the design has {} columns",
                self.max_variable(),
                columns.len()
            )));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(MlabsError::Input("design columns differ in length".into()));
        }
        Ok(self.design_column_unchecked(columns, n))
    }

    pub(crate) fn design_column_unchecked(&self, columns: &[Vec<f64>], n: usize) -> Vec<f64> {
        let mut out = vec![1.0; n];
        for f in &self.factors {
            let col = &columns[f.variable];
            for (o, &x) in out.iter_mut().zip(col) {
                if *o != 0.0 {
                    *o *= f.knots.eval(x);
                }
            }
        }
        out
    }
}

pub fn eval_atom(atom: &BasisAtom, x: &[f64]) -> Result<f64> {
    atom.eval(x)
}

pub fn design_column(atom: &BasisAtom, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
    atom.design_column(columns)
}
