//! Log densities and samplers shared by the regression and probit chains.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
}

/// Shape/rate parameterisation.
pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Inverse-gamma with shape `a` and scale `b`: density `b^a / Γ(a) x^{-a-1} e^{-b/x}`.
pub fn inv_gamma_ln_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

pub fn poisson_ln_pmf(k: usize, mean: f64) -> f64 {
    let k = k as f64;
    k * mean.ln() - mean - ln_gamma(k + 1.0)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail `1 - Φ(x)`, accurate far into the right tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Draws from a gamma distribution with the given shape and rate, kept strictly
/// positive and finite so that tiny shapes cannot underflow to zero.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("gamma parameters must be positive");
    g.sample(rng).clamp(f64::MIN_POSITIVE, f64::MAX)
}

/// Inverse-gamma draw with shape `a` and scale `b`.
pub fn sample_inv_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    let g = Gamma::new(shape, 1.0).expect("inverse-gamma shape must be positive");
    let x: f64 = g.sample(rng).max(f64::MIN_POSITIVE);
    (scale / x).clamp(f64::MIN_POSITIVE, f64::MAX)
}

pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Threshold above which the inverse-CDF tail underflows and exponential
/// rejection takes over.
const TAIL_SWITCH: f64 = 26.0;

/// Standard normal conditioned on `x > a`.
///
/// Inverse CDF on the upper tail for moderate `a`, so the uniform is mapped
/// through `Φ̄⁻¹` rather than `Φ⁻¹(1 - u)` and keeps full precision; exponential
/// rejection (Robert 1995) once the tail mass underflows.
pub fn sample_std_normal_above<R: Rng + ?Sized>(rng: &mut R, a: f64) -> f64 {
    if a <= 0.0 {
        let lo = norm_cdf(a);
        loop {
            let u: f64 = rng.random();
            let p = lo + u * (1.0 - lo);
            let x = norm_quantile(p);
            if x.is_finite() && x >= a {
                return x;
            }
        }
    } else if a < TAIL_SWITCH {
        let tail = norm_sf(a);
        loop {
            // u in (0, 1]
            let u = 1.0 - rng.random::<f64>();
            let x = SQRT_2 * erfc_inv(2.0 * u * tail);
            if x.is_finite() {
                return x.max(a);
            }
        }
    } else {
        let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let x = a - u.ln() / lambda;
            let rho = (-0.5 * (x - lambda) * (x - lambda)).exp();
            if rng.random::<f64>() <= rho {
                return x;
            }
        }
    }
}

/// Mean of a standard normal truncated to `(a, ∞)`.
pub fn truncated_mean_above(a: f64) -> f64 {
    (-0.5 * a * a).exp() / (2.0 * PI).sqrt() / norm_sf(a)
}
