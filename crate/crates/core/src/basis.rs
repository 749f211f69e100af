//! Univariate B-spline basis functions of arbitrary degree.
//!
//! A basis function of degree `k` is fully determined by `k + 2` strictly
//! ascending knots and is evaluated with the Cox-de Boor style recursion,
//! starting from the half-open indicator of degree zero.

use serde::{Deserialize, Serialize};

use crate::error::{MlabsError, Result};

/// Strictly ascending knots `ξ₁ < … < ξ_{k+2}` of one degree-`k` B-spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KnotsRepr", into = "KnotsRepr")]
pub struct KnotSequence {
    degree: usize,
    knots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KnotsRepr {
    degree: usize,
    knots: Vec<f64>,
}

impl TryFrom<KnotsRepr> for KnotSequence {
    type Error = MlabsError;

    fn try_from(r: KnotsRepr) -> Result<Self> {
        KnotSequence::new(r.degree, r.knots)
    }
}

impl From<KnotSequence> for KnotsRepr {
    fn from(k: KnotSequence) -> Self {
        KnotsRepr {
            degree: k.degree,
            knots: k.knots,
        }
    }
}

impl KnotSequence {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if knots.len() != degree + 2 {
            return Err(MlabsError::InvalidKnots(format!(
                "degree {degree} needs {} knots, got {}",
                degree + 2,
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(MlabsError::InvalidKnots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MlabsError::InvalidKnots(format!(
                "knots must be strictly ascending: {knots:?}"
            )));
        }
        Ok(KnotSequence { degree, knots })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Half-open support `[ξ₁, ξ_{k+2})`.
    pub fn support(&self) -> Support {
        Support {
            lower: self.knots[0],
            upper: self.knots[self.degree + 1],
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let s = self.support();
        if !s.contains(x) {
            return 0.0;
        }
        eval_recursive(&self.knots, x)
    }
}

/// Half-open interval `[lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
}

impl Support {
    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x < self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn eval_bspline(kseq: &KnotSequence, x: f64) -> f64 {
    kseq.eval(x)
}

pub fn bspline_support(kseq: &KnotSequence) -> Support {
    kseq.support()
}

fn eval_recursive(knots: &[f64], x: f64) -> f64 {
    let k = knots.len() - 2;
    if k == 0 {
        return if knots[0] <= x && x < knots[1] {
            1.0
        } else {
            0.0
        };
    }
    let left = (x - knots[0]) / (knots[k] - knots[0]) * eval_recursive(&knots[..=k], x);
    let right = (knots[k + 1] - x) / (knots[k + 1] - knots[1]) * eval_recursive(&knots[1..], x);
    left + right
}
