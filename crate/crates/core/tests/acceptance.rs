//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use mlabs::basis::KnotSequence;
use mlabs::benchmarks::{generate_dataset, rmse, two_moons, SyntheticSpec, TestFunction};
use mlabs::commands::cross_validate;
use mlabs::probit::{run_probit_chain_observed, ProbitOptions};
use mlabs::sampler::gibbs::{draw_coefficients, draw_levy_mass, draw_sigma2};
use mlabs::sampler::{MoveKind, Proposal, RelocateKernel, Sampler};
use mlabs::{
    eval_bspline, run_chain, BasisAtom, CoefScale, CoefficientProposal, Dataset, Hyperparams,
    ModelState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} [{id:>2}] {name}: {detail}");
}

// ---------------------------------------------------------------- 1

/// Five-point Gauss-Legendre on each knot interval; exact for the
/// piecewise polynomials of degree <= 9.
fn integrate_bspline(k: &KnotSequence) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    k.knots()
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (m, h) = ((a + b) / 2.0, (b - a) / 2.0);
            X.iter()
                .zip(W)
                .map(|(x, wt)| wt * eval_bspline(k, m + h * x))
                .sum::<f64>()
                * h
        })
        .sum()
}

#[test]
fn c01_bspline_integral_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for degree in 0..=3usize {
        for _ in 0..200 {
            let mut knots: Vec<f64> = (0..degree + 2)
                .map(|_| rng.random_range(-5.0..5.0))
                .collect();
            knots.sort_by(f64::total_cmp);
            let Ok(k) = KnotSequence::new(degree, knots.clone()) else {
                continue;
            };
            let expected = (knots[degree + 1] - knots[0]) / (degree + 1) as f64;
            let rel = (integrate_bspline(&k) - expected).abs() / expected;
            worst = worst.max(rel);
        }
    }
    let pass = worst <= 1e-6;
    report(
        1,
        "B-spline integral identity",
        pass,
        &format!("max rel err {worst:.2e}"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 2
//
// Independent posterior and proposal densities. Atoms are treated as an
// unordered configuration of a Poisson process with mean M, so the
// configuration density is e^{-M} M^J times the per-atom densities and a
// particular atom is removed by a death move with probability 1/J.

fn toy() -> Dataset {
    let x1: Vec<f64> = (0..20).map(|i| (i as f64 + 0.3) / 20.0).collect();
    let x2: Vec<f64> = (0..20)
        .map(|i| ((i * 7) % 20) as f64 / 19.0 + 0.01)
        .collect();
    let y = x1
        .iter()
        .zip(&x2)
        .map(|(a, b)| (3.0 * a).sin() + if *b > 0.4 { 0.8 * a * b } else { -0.3 })
        .collect();
    Dataset::new(vec![x1, x2], y).unwrap()
}

/// Cox-de Boor recursion on `[ξ_i, ξ_{i+1})`, written out from scratch.
fn basis(knots: &[f64], degree: usize, x: f64) -> f64 {
    fn rec(t: &[f64], i: usize, k: usize, x: f64) -> f64 {
        if k == 0 {
            return if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = t[i + k] - t[i];
        if d1 > 0.0 {
            v += (x - t[i]) / d1 * rec(t, i, k - 1, x);
        }
        let d2 = t[i + k + 1] - t[i + 1];
        if d2 > 0.0 {
            v += (t[i + k + 1] - x) / d2 * rec(t, i + 1, k - 1, x);
        }
        v
    }
    rec(knots, 0, degree, x)
}

fn atom_column(atom: &BasisAtom, data: &Dataset) -> Vec<f64> {
    (0..data.n())
        .map(|i| {
            atom.factors()
                .iter()
                .map(|f| basis(f.knots.knots(), f.degree(), data.columns()[f.variable][i]))
                .product()
        })
        .collect()
}

fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * (x - mean).powi(2) / var
}

struct Oracle<'a> {
    data: &'a Dataset,
    hyper: &'a Hyperparams,
    coef_sd: f64,
}

impl Oracle<'_> {
    fn window(&self, v: usize) -> (f64, f64) {
        let c = &self.data.columns()[v];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = self.hyper.expansion * (hi - lo);
        (lo - w, hi + w)
    }

    /// Anchored knot mixture; every observed value is a distinct admissible anchor.
    fn ln_knots(&self, v: usize, knots: &[f64], degree: usize) -> f64 {
        let col = &self.data.columns()[v];
        let n = col.len() as f64;
        let (lo, hi) = self.window(v);
        let on_data = |a: f64| col.contains(&a);
        let d = match degree {
            0 => col
                .iter()
                .filter(|&&a| knots[0] <= a && a <= knots[1])
                .map(|&a| 1.0 / ((a - lo) * (hi - a)))
                .sum::<f64>(),
            1 if on_data(knots[1]) => 1.0 / ((knots[1] - lo) * (hi - knots[1])),
            2 => col
                .iter()
                .filter(|&&a| knots[1] <= a && a <= knots[2])
                .map(|&a| 4.0 / ((a - lo).powi(2) * (hi - a).powi(2)))
                .sum::<f64>(),
            3 if on_data(knots[2]) => 4.0 / ((knots[2] - lo).powi(2) * (hi - knots[2]).powi(2)),
            _ => 0.0,
        };
        (d / n).ln()
    }

    fn ln_structure(&self, atom: &BasisAtom) -> f64 {
        let p = self.data.p() as f64;
        let k_max = self.hyper.max_interaction.min(self.data.p()) as f64;
        let k = atom.interaction_order();
        let ln_choose = (0..k)
            .map(|i| ((p - i as f64) / (i + 1) as f64).ln())
            .sum::<f64>();
        let s = self.hyper.degrees.len() as f64;
        -k_max.ln() - ln_choose
            + atom
                .factors()
                .iter()
                .map(|f| -s.ln() + self.ln_knots(f.variable, f.knots.knots(), f.degree()))
                .sum::<f64>()
    }

    fn fitted(&self, state: &ModelState) -> Vec<f64> {
        let mut f = vec![state.intercept; self.data.n()];
        for a in &state.atoms {
            for (fi, c) in f.iter_mut().zip(atom_column(a, self.data)) {
                *fi += a.coefficient * c;
            }
        }
        f
    }

    /// Log posterior up to terms that no structural move changes.
    fn ln_post(&self, state: &ModelState, response: &[f64]) -> f64 {
        let f = self.fitted(state);
        let sse: f64 = response.iter().zip(&f).map(|(y, f)| (y - f).powi(2)).sum();
        let m = state.levy_mass;
        -0.5 * sse / state.sigma2
            + state.num_atoms() as f64 * m.ln()
            + state
                .atoms
                .iter()
                .map(|a| self.ln_structure(a) + ln_normal(a.coefficient, 0.0, self.coef_sd.powi(2)))
                .sum::<f64>()
    }

    /// Log density of drawing `beta` for `atom` given the other atoms of `rest`.
    fn ln_coef(&self, atom: &BasisAtom, beta: f64, rest: &ModelState, response: &[f64]) -> f64 {
        let prior_var = self.coef_sd.powi(2);
        match self.hyper.coefficient_proposal {
            CoefficientProposal::Prior => ln_normal(beta, 0.0, prior_var),
            CoefficientProposal::Conditional => {
                let c = atom_column(atom, self.data);
                let f = self.fitted(rest);
                let r: Vec<f64> = response.iter().zip(&f).map(|(y, f)| y - f).collect();
                let bb: f64 = c.iter().map(|v| v * v).sum();
                let br: f64 = c.iter().zip(&r).map(|(a, b)| a * b).sum();
                let var = 1.0 / (bb / rest.sigma2 + 1.0 / prior_var);
                ln_normal(beta, var * br / rest.sigma2, var)
            }
        }
    }

    /// Log probability of the single-factor redraw turning `from` into `to`.
    fn ln_factor_kernel(&self, from: &BasisAtom, to: &BasisAtom) -> f64 {
        let changed_from: Vec<_> = from
            .factors()
            .iter()
            .filter(|f| !to.factors().contains(f))
            .collect();
        let changed_to: Vec<_> = to
            .factors()
            .iter()
            .filter(|f| !from.factors().contains(f))
            .collect();
        assert_eq!(changed_from.len(), 1);
        assert_eq!(changed_to.len(), 1);
        let (old, new) = (changed_from[0], changed_to[0]);
        let k = from.interaction_order() as f64;
        let free = self.data.p() - (from.interaction_order() - 1);
        let q_var = if old.variable == new.variable {
            0.5
        } else {
            0.0
        } + 0.5 / free as f64;
        let s = self.hyper.degrees.len() as f64;
        let q_deg = if old.degree() == new.degree() {
            0.5
        } else {
            0.0
        } + 0.5 / s;
        -k.ln()
            + q_var.ln()
            + q_deg.ln()
            + self.ln_knots(new.variable, new.knots.knots(), new.degree())
    }

    fn ln_ratio(&self, state: &ModelState, response: &[f64], prop: &Proposal) -> f64 {
        let h = self.hyper;
        let j = state.num_atoms() as f64;
        match prop {
            Proposal::Birth { atom, .. } => {
                let mut next = state.clone();
                next.atoms.push(atom.clone());
                let fwd = h.p_birth.ln()
                    + self.ln_structure(atom)
                    + self.ln_coef(atom, atom.coefficient, state, response);
                let rev = h.p_death.ln() - (j + 1.0).ln();
                self.ln_post(&next, response) - self.ln_post(state, response) + rev - fwd
            }
            Proposal::Death { index, .. } => {
                let mut next = state.clone();
                let gone = next.atoms.remove(*index);
                let fwd = h.p_death.ln() - j.ln();
                let rev = h.p_birth.ln()
                    + self.ln_structure(&gone)
                    + self.ln_coef(&gone, gone.coefficient, &next, response);
                self.ln_post(&next, response) - self.ln_post(state, response) + rev - fwd
            }
            Proposal::Relocate {
                index,
                kernel,
                atom,
                ..
            } => {
                let old = &state.atoms[*index];
                let mut next = state.clone();
                next.atoms[*index] = atom.clone();
                let mut rest = state.clone();
                rest.atoms.remove(*index);
                let (mut fwd, mut rev) = match kernel {
                    RelocateKernel::Full => (self.ln_structure(atom), self.ln_structure(old)),
                    RelocateKernel::Factor => (
                        self.ln_factor_kernel(old, atom),
                        self.ln_factor_kernel(atom, old),
                    ),
                };
                if h.coefficient_proposal == CoefficientProposal::Conditional {
                    fwd += self.ln_coef(atom, atom.coefficient, &rest, response);
                    rev += self.ln_coef(old, old.coefficient, &rest, response);
                }
                self.ln_post(&next, response) - self.ln_post(state, response) + rev - fwd
            }
            Proposal::Skip { .. } => f64::NEG_INFINITY,
        }
    }
}

#[test]
fn c02_acceptance_ratio_matches_oracle() {
    let data = toy();
    let mut worst = 0.0f64;
    let mut compared = 0;
    let mut kernels = [0usize; 2];
    for mode in [CoefficientProposal::Prior, CoefficientProposal::Conditional] {
        let hyper = Hyperparams {
            degrees: vec![0, 1, 2, 3],
            max_interaction: 2,
            expansion: 0.5,
            coefficient_proposal: mode,
            ..Default::default()
        };
        let coef_sd = 1.3;
        let oracle = Oracle {
            data: &data,
            hyper: &hyper,
            coef_sd,
        };
        let mut s = Sampler::new(&data, &hyper, ModelState::new(0.2, 0.05, 5.0), coef_sd).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let kinds = [MoveKind::Birth, MoveKind::Death, MoveKind::Relocate];
        let mut n = 0;
        let mut step = 0;
        while n < 500 {
            let kind = kinds[step % 3];
            step += 1;
            let prop = s.propose(kind, &mut rng);
            if !matches!(prop, Proposal::Skip { .. }) {
                if let Proposal::Relocate { kernel, .. } = &prop {
                    kernels[(*kernel == RelocateKernel::Factor) as usize] += 1;
                }
                let want = oracle.ln_ratio(s.state(), s.response(), &prop);
                let diff = (prop.log_ratio() - want).abs();
                assert!(diff.is_finite(), "{kind:?}: {} vs {want}", prop.log_ratio());
                worst = worst.max(diff);
                n += 1;
            }
            s.iterate(&mut rng).unwrap();
        }
        compared += n;
    }
    let pass = worst <= 1e-8 && kernels.iter().all(|&k| k > 50);
    report(
        2,
        "acceptance ratio vs independent density",
        pass,
        &format!("{compared} moves, max abs diff {worst:.2e}, relocations full/factor {kernels:?}"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 3

#[test]
fn c03_prior_recovery_under_flat_likelihood() {
    let data = toy();
    let hyper = Hyperparams {
        flat_likelihood: true,
        n_iter: 200_000,
        burn_in: 0,
        thin: 1,
        seed: 3,
        ..Default::default()
    };
    let chain = run_chain(&data, &hyper).unwrap();
    let d = &chain.diagnostics;
    let mean_j = d.num_atoms.iter().sum::<usize>() as f64 / d.num_atoms.len() as f64;
    let mean_m = d.levy_mass.iter().sum::<f64>() / d.levy_mass.len() as f64;
    let target = hyper.a_gamma / hyper.b_gamma;
    let pass = (mean_j / target - 1.0).abs() <= 0.1 && (mean_m / target - 1.0).abs() <= 0.1;
    report(
        3,
        "prior recovery",
        pass,
        &format!("E[J] {mean_j:.3}, E[M] {mean_m:.3}, target {target}"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 4

/// Sample mean and variance against closed forms, each inside a 3-sigma band.
fn moments_ok(draws: &[f64], mean: f64, var: f64) -> (bool, String) {
    let n = draws.len() as f64;
    let m = draws.iter().sum::<f64>() / n;
    let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = draws.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let se_m = (var / n).sqrt();
    let se_v = ((m4 - v * v) / n).sqrt();
    let ok = (m - mean).abs() <= 3.0 * se_m && (v - var).abs() <= 3.0 * se_v;
    (ok, format!("mean {m:.4}/{mean:.4} var {v:.4}/{var:.4}"))
}

#[test]
fn c04_conjugate_updates() {
    const N: usize = 50_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let hyper = Hyperparams::default();
    let mut lines = Vec::new();
    let mut all = true;
    let mut check = |name: &str, (ok, msg): (bool, String)| {
        all &= ok;
        lines.push(format!("{name} {} ({msg})", if ok { "ok" } else { "off" }));
    };

    // σ² | SSE ~ IG((r + n)/2, (rR + SSE)/2)
    let (sse, n) = (3.7, 30);
    let a = (0.01 + n as f64) / 2.0;
    let b = (0.01 * 0.01 + sse) / 2.0;
    let d: Vec<f64> = (0..N)
        .map(|_| draw_sigma2(sse, n, &hyper, &mut rng))
        .collect();
    check(
        "sigma2",
        moments_ok(&d, b / (a - 1.0), b * b / ((a - 1.0).powi(2) * (a - 2.0))),
    );

    // M | J ~ Ga(a_γ + J, b_γ + 1)
    let j = 7;
    let (shape, rate) = (5.0 + j as f64, 2.0);
    let d: Vec<f64> = (0..N)
        .map(|_| draw_levy_mass(j, &hyper, &mut rng))
        .collect();
    check("M", moments_ok(&d, shape / rate, shape / (rate * rate)));

    // β | rest: precision G/σ² + I/φ², mean precision⁻¹ Xᵀr/σ²
    let gram = vec![vec![2.0, 0.6], vec![0.6, 1.5]];
    let xtr = vec![1.2, -0.4];
    let (s2, phi) = (0.5, 1.5);
    let p = [
        [gram[0][0] / s2 + 1.0 / (phi * phi), gram[0][1] / s2],
        [gram[1][0] / s2, gram[1][1] / s2 + 1.0 / (phi * phi)],
    ];
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let cov = [
        [p[1][1] / det, -p[0][1] / det],
        [-p[1][0] / det, p[0][0] / det],
    ];
    let mean = [
        (cov[0][0] * xtr[0] + cov[0][1] * xtr[1]) / s2,
        (cov[1][0] * xtr[0] + cov[1][1] * xtr[1]) / s2,
    ];
    let d: Vec<Vec<f64>> = (0..N)
        .map(|_| draw_coefficients(&gram, &xtr, s2, phi, &mut rng).unwrap())
        .collect();
    for c in 0..2 {
        let col: Vec<f64> = d.iter().map(|v| v[c]).collect();
        check(&format!("beta{c}"), moments_ok(&col, mean[c], cov[c][c]));
    }
    // the cross moment, via the variance of the sum
    let sum: Vec<f64> = d.iter().map(|v| v[0] + v[1]).collect();
    check(
        "beta0+beta1",
        moments_ok(
            &sum,
            mean[0] + mean[1],
            cov[0][0] + cov[1][1] + 2.0 * cov[0][1],
        ),
    );

    // τ | β ~ Ga(a_τ + J/2, b_τ + Σβ²/2)
    let betas = [0.4, -1.1, 0.7];
    let shape = 1.0 + betas.len() as f64 / 2.0;
    let rate = 1.0 + betas.iter().map(|b| b * b).sum::<f64>() / 2.0;
    let d: Vec<f64> = (0..N)
        .map(|_| mlabs::probit::gibbs_tau(&betas, 1.0, 1.0, &mut rng))
        .collect();
    check("tau", moments_ok(&d, shape / rate, shape / (rate * rate)));

    report(4, "conjugate updates", all, &lines.join("; "));
    assert!(all);
}

// ---------------------------------------------------------------- 5

#[test]
fn c05_probit_sign_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|x| {
            let noisy = x[0] + x[1] - 1.0 + 0.3 * (rng.random::<f64>() - 0.5);
            if noisy > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let data = Dataset::from_rows(&rows, y.clone()).unwrap();
    let hyper = Hyperparams {
        n_iter: 3000,
        burn_in: 1000,
        thin: 10,
        ..Default::default()
    };
    let mut updates = 0usize;
    let mut violations = 0usize;
    run_probit_chain_observed(&data, &hyper, &ProbitOptions::default(), |_, z| {
        updates += 1;
        violations += z
            .iter()
            .zip(&y)
            .filter(|(z, y)| z.is_nan() || *z * (2.0 * *y - 1.0) <= 0.0)
            .count();
    })
    .unwrap();
    let pass = violations == 0 && updates == hyper.n_iter + 1;
    report(
        5,
        "probit sign consistency",
        pass,
        &format!("{updates} latent updates x 50 points, {violations} violations"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 6-9

struct Bench {
    function: TestFunction,
    rsnr: f64,
    degrees: Vec<usize>,
    expansion: f64,
    coef_scale: CoefScale,
    gate: f64,
}

fn bench_rmse(b: &Bench) -> Vec<f64> {
    (0..5u64)
        .map(|rep| {
            let seed = 42 + rep;
            let d = generate_dataset(&SyntheticSpec::standard(b.function, b.rsnr, seed)).unwrap();
            let hyper = Hyperparams {
                degrees: b.degrees.clone(),
                max_interaction: 2,
                expansion: b.expansion,
                coef_scale: b.coef_scale,
                coefficient_proposal: CoefficientProposal::Conditional,
                n_iter: 20_000,
                burn_in: 10_000,
                thin: 10,
                seed,
                ..Default::default()
            };
            let chain = run_chain(&d.train, &hyper).unwrap();
            rmse(d.test.y(), &chain.predict(&d.test.rows()).unwrap().mean).unwrap()
        })
        .collect()
}

fn run_bench(id: u32, b: Bench) {
    let r = bench_rmse(&b);
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let pass = mean <= b.gate;
    let reps: Vec<String> = r.iter().map(|v| format!("{v:.4}")).collect();
    report(
        id,
        &format!("{} rsnr {}", b.function, b.rsnr),
        pass,
        &format!(
            "mean test rmse {mean:.4} (gate {}) reps [{}]",
            b.gate,
            reps.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn c06_radial_surface() {
    run_bench(
        6,
        Bench {
            function: TestFunction::Radial,
            rsnr: 5.0,
            degrees: vec![2, 3],
            expansion: 0.1,
            coef_scale: CoefScale::Variance,
            gate: 0.07,
        },
    );
}

#[test]
fn c07_nonsmooth_surface() {
    run_bench(
        7,
        Bench {
            function: TestFunction::Nonsmooth,
            rsnr: 1.0,
            degrees: vec![2, 3],
            expansion: 0.1,
            coef_scale: CoefScale::Variance,
            gate: 0.10,
        },
    );
}

#[test]
fn c08_friedman1() {
    run_bench(
        8,
        Bench {
            function: TestFunction::Friedman1,
            rsnr: 5.0,
            degrees: vec![2, 3],
            expansion: 1.0,
            coef_scale: CoefScale::HalfRange,
            gate: 0.8,
        },
    );
}

#[test]
fn c09_friedman2() {
    run_bench(
        9,
        Bench {
            function: TestFunction::Friedman2,
            rsnr: 5.0,
            degrees: vec![1, 2, 3],
            expansion: 3.0,
            coef_scale: CoefScale::HalfRange,
            gate: 34.0,
        },
    );
}

// ---------------------------------------------------------------- 10

#[test]
fn c10_two_moons_probit_cv() {
    let data = two_moons(300, 0.2, 10).unwrap();
    let hyper = Hyperparams {
        n_iter: 10_000,
        burn_in: 5_000,
        thin: 10,
        seed: 10,
        ..Default::default()
    };
    let r = cross_validate(&data, &hyper, 5, 1, true).unwrap();
    let pass = r.failed == 0 && r.mean >= 0.95;
    let folds: Vec<String> = r
        .folds
        .iter()
        .map(|f| f.score.map_or("failed".into(), |s| format!("{s:.4}")))
        .collect();
    report(
        10,
        "two-moons probit 5-fold cv",
        pass,
        &format!(
            "mean auc {:.4} (gate 0.95) folds [{}]",
            r.mean,
            folds.join(", ")
        ),
    );
    assert!(pass);
}
