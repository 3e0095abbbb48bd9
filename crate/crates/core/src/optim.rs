//! Local optimization over rank-k factor states `ρ = AA†/tr(AA†)`.
//!
//! Objectives and constraints are smooth functions of an expectation tuple
//! `e_j = tr(ρ X_j)` for a fixed list of Hermitian `X_j`. The chain rule gives
//! the Wirtinger gradient `∂f/∂Ā = (Σ_j w_j X_j - Σ_j w_j e_j) A / tr(AA†)` with
//! `w = ∂f/∂e`, so every evaluation costs one product `X_j A` per observable.
//!
//! Equality constraints are handled by an augmented Lagrangian with penalty
//! escalation, followed by a Gauss-Newton restoration onto the constraint set.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::linalg::{CMat, C64};
use crate::rng;

/// Smooth program over the expectation tuple of a fixed observable list.
pub trait ExpectationProgram: Sync {
    /// Value to minimize and its gradient with respect to the tuple.
    /// Non-finite values mark infeasible regions for the line search.
    fn objective(&self, e: &[f64]) -> (f64, Vec<f64>);

    /// Equality constraints `h_i(e) = 0` with gradients.
    fn constraints(&self, _e: &[f64]) -> Vec<(f64, Vec<f64>)> {
        Vec::new()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub rank: usize,
    /// Penalty weights, one augmented-Lagrangian round each.
    pub penalties: Vec<f64>,
    /// Multiplier updates per penalty weight.
    pub multiplier_updates: usize,
    pub inner_max_iter: usize,
    pub gradient_tol: f64,
    /// Constraint residual below which a solution counts as converged.
    pub feasibility_tol: f64,
    pub restoration_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rank: 1,
            penalties: vec![1e2, 1e4, 1e6],
            multiplier_updates: 4,
            inner_max_iter: 400,
            gradient_tol: 1e-11,
            feasibility_tol: 1e-8,
            restoration_steps: 80,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalSolution {
    pub factor: CMat,
    pub expectations: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Observable list plus the real embedding `x = (Re A, Im A)` of a `d × k` factor.
pub struct FactorSpace<'a> {
    ops: &'a [CMat],
    dim: usize,
    rank: usize,
}

struct Evaluation {
    expectations: Vec<f64>,
    factor: CMat,
    products: Vec<CMat>,
    norm2: f64,
}

impl<'a> FactorSpace<'a> {
    pub fn new(ops: &'a [CMat], rank: usize) -> Self {
        let dim = ops[0].nrows();
        FactorSpace { ops, dim, rank }
    }

    pub fn n_params(&self) -> usize {
        2 * self.dim * self.rank
    }

    pub fn to_factor(&self, x: &[f64]) -> CMat {
        let half = self.dim * self.rank;
        CMat::from_fn(self.dim, self.rank, |r, c| {
            let k = c * self.dim + r;
            C64::new(x[k], x[half + k])
        })
    }

    pub fn from_factor(&self, a: &CMat) -> Vec<f64> {
        let half = self.dim * self.rank;
        let mut x = vec![0.0; 2 * half];
        for c in 0..self.rank {
            for r in 0..self.dim {
                let k = c * self.dim + r;
                x[k] = a[(r, c)].re;
                x[half + k] = a[(r, c)].im;
            }
        }
        x
    }

    fn evaluate(&self, x: &[f64]) -> Evaluation {
        let factor = self.to_factor(x);
        let norm2 = factor.norm_squared();
        let products: Vec<CMat> = self.ops.iter().map(|op| op * &factor).collect();
        let expectations = products
            .iter()
            .map(|xa| factor.iter().zip(xa.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / norm2)
            .collect();
        Evaluation {
            expectations,
            factor,
            products,
            norm2,
        }
    }

    pub fn expectations(&self, x: &[f64]) -> Vec<f64> {
        self.evaluate(x).expectations
    }

    fn pullback(&self, ev: &Evaluation, w: &[f64]) -> Vec<f64> {
        let shift: f64 = w.iter().zip(&ev.expectations).map(|(a, b)| a * b).sum();
        let mut g = &ev.factor * C64::new(-shift, 0.0);
        for (wj, xa) in w.iter().zip(&ev.products) {
            if *wj != 0.0 {
                g += xa * C64::new(*wj, 0.0);
            }
        }
        g *= C64::new(2.0 / ev.norm2, 0.0);
        self.from_factor(&g)
    }
}

fn augmented<P: ExpectationProgram>(
    space: &FactorSpace,
    program: &P,
    x: &[f64],
    multipliers: &[f64],
    mu: f64,
) -> (f64, Vec<f64>) {
    let ev = space.evaluate(x);
    let (mut value, mut w) = program.objective(&ev.expectations);
    if !value.is_finite() {
        return (f64::INFINITY, vec![0.0; x.len()]);
    }
    for (i, (h, dh)) in program.constraints(&ev.expectations).into_iter().enumerate() {
        let lam = multipliers.get(i).copied().unwrap_or(0.0);
        value += lam * h + 0.5 * mu * h * h;
        let coef = lam + mu * h;
        for (wj, dj) in w.iter_mut().zip(&dh) {
            *wj += coef * dj;
        }
    }
    (value, space.pullback(&ev, &w))
}

fn residual_of<P: ExpectationProgram>(program: &P, e: &[f64]) -> f64 {
    program
        .constraints(e)
        .iter()
        .fold(0.0_f64, |acc, (h, _)| acc.max(h.abs()))
}

/// Gauss-Newton projection onto `h(e(x)) = 0` with backtracking on `‖h‖`.
fn restore<P: ExpectationProgram>(space: &FactorSpace, program: &P, x: &mut Vec<f64>, steps: usize, tol: f64) {
    for _ in 0..steps {
        let ev = space.evaluate(x);
        let cons = program.constraints(&ev.expectations);
        let m = cons.len();
        if m == 0 {
            return;
        }
        let h: Vec<f64> = cons.iter().map(|c| c.0).collect();
        let hnorm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        if h.iter().all(|v| v.abs() < tol * 1e-2) {
            return;
        }
        let jac: Vec<Vec<f64>> = cons.iter().map(|(_, dh)| space.pullback(&ev, dh)).collect();
        // (J Jᵀ + εI) y = h, step = -Jᵀ y
        let mut gram = nalgebra::DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] = dot(&jac[i], &jac[j]);
            }
        }
        let ridge = 1e-14 * (0..m).map(|i| gram[(i, i)]).fold(0.0, f64::max).max(1e-300);
        for i in 0..m {
            gram[(i, i)] += ridge;
        }
        let Some(y) = gram.lu().solve(&nalgebra::DVector::from_vec(h.clone())) else {
            return;
        };
        let mut step = vec![0.0; x.len()];
        for i in 0..m {
            for (s, jv) in step.iter_mut().zip(&jac[i]) {
                *s -= y[i] * jv;
            }
        }
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + alpha * b).collect();
            let e = space.expectations(&trial);
            let hn = program
                .constraints(&e)
                .iter()
                .map(|c| c.0 * c.0)
                .sum::<f64>()
                .sqrt();
            if hn < hnorm {
                *x = trial;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            return;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// Runs the augmented-Lagrangian scheme from one starting factor.
pub fn solve_local<P: ExpectationProgram>(ops: &[CMat], program: &P, start: &CMat, opts: &SolveOptions) -> LocalSolution {
    let space = FactorSpace::new(ops, opts.rank);
    let mut x = space.from_factor(start);
    normalize(&mut x);
    let n_cons = program.constraints(&space.expectations(&x)).len();
    let mut multipliers = vec![0.0; n_cons];
    let lbfgs_opts = LbfgsOptions {
        max_iter: opts.inner_max_iter,
        gradient_tol: opts.gradient_tol,
        ..LbfgsOptions::default()
    };
    let rounds: Vec<f64> = if n_cons == 0 { vec![0.0] } else { opts.penalties.clone() };
    for &mu in &rounds {
        let updates = if n_cons == 0 { 1 } else { opts.multiplier_updates.max(1) };
        for _ in 0..updates {
            let res = lbfgs(|z| augmented(&space, program, z, &multipliers, mu), &x, &lbfgs_opts);
            x = res.x;
            normalize(&mut x);
            if n_cons == 0 {
                break;
            }
            let cons = program.constraints(&space.expectations(&x));
            for (lam, (h, _)) in multipliers.iter_mut().zip(&cons) {
                *lam += mu * h;
            }
            if cons.iter().all(|(h, _)| h.abs() < opts.feasibility_tol * 1e-2) {
                break;
            }
        }
    }
    if n_cons > 0 {
        restore(&space, program, &mut x, opts.restoration_steps, opts.feasibility_tol);
        normalize(&mut x);
    }
    let e = space.expectations(&x);
    let residual = residual_of(program, &e);
    let value = program.objective(&e).0;
    LocalSolution {
        factor: space.to_factor(&x),
        expectations: e,
        value,
        residual,
        converged: residual < opts.feasibility_tol && value.is_finite(),
    }
}

#[derive(Debug, Clone)]
pub struct MultiStart {
    pub best: LocalSolution,
    pub best_restart: usize,
    pub restarts_used: usize,
    pub converged_restarts: usize,
}

/// Best of `restarts` independent local solves from Gaussian random factors.
///
/// Restart `i` draws its start from stream `i` of `seed`. Converged solutions
/// win over unconverged ones; among equals the lower value wins, ties going to
/// the lower restart index.
pub fn multi_start<P: ExpectationProgram>(
    ops: &[CMat],
    program: &P,
    opts: &SolveOptions,
    restarts: usize,
    seed: u64,
) -> MultiStart {
    let dim = ops[0].nrows();
    let restarts = restarts.max(1);
    let results: Vec<LocalSolution> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let start = rng::gaussian_matrix(&mut r, dim, opts.rank);
            solve_local(ops, program, &start, opts)
        })
        .collect();
    pick_best(results)
}

pub(crate) fn pick_best(results: Vec<LocalSolution>) -> MultiStart {
    let restarts_used = results.len();
    let converged_restarts = results.iter().filter(|s| s.converged).count();
    let mut best_idx = 0;
    for (i, s) in results.iter().enumerate().skip(1) {
        let b = &results[best_idx];
        let better = match (s.converged, b.converged) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => s.value < b.value,
            (false, false) => (s.residual, s.value) < (b.residual, b.value),
        };
        if better {
            best_idx = i;
        }
    }
    let best = results.into_iter().nth(best_idx).expect("at least one restart");
    MultiStart {
        best,
        best_restart: best_idx,
        restarts_used,
        converged_restarts,
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    pub gradient_tol: f64,
    /// Stop after three consecutive steps with relative decrease below this.
    pub value_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iter: 500,
            gradient_tol: 1e-10,
            value_tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Limited-memory BFGS with Armijo backtracking. Non-finite trial values are
/// rejected by the line search, so the objective may encode hard walls.
pub fn lbfgs<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stalls = 0;
    let mut iterations = 0;
    if !fx.is_finite() {
        return LbfgsResult {
            x,
            value: fx,
            iterations,
            converged: false,
        };
    }
    while iterations < opts.max_iter {
        let gmax = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if gmax < opts.gradient_tol {
            return LbfgsResult {
                x,
                value: fx,
                iterations,
                converged: true,
            };
        }
        iterations += 1;
        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut alpha = if history.is_empty() {
            (1.0 / dot(&dir, &dir).sqrt()).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * alpha * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fxn, gn)) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            history.push_back((s, y, 1.0 / sy));
            if history.len() > opts.memory {
                history.pop_front();
            }
        }
        let decrease = fx - fxn;
        if decrease <= opts.value_tol * (1.0 + fx.abs()) {
            stalls += 1;
        } else {
            stalls = 0;
        }
        x = xn;
        fx = fxn;
        g = gn;
        if stalls >= 3 {
            return LbfgsResult {
                x,
                value: fx,
                iterations,
                converged: true,
            };
        }
    }
    LbfgsResult {
        x,
        value: fx,
        iterations,
        converged: false,
    }
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::operators::build_canonical_pair;

    #[test]
    fn lbfgs_minimizes_rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (v, g)
        };
        let res = lbfgs(
            f,
            &[-1.2, 1.0],
            &LbfgsOptions {
                max_iter: 2000,
                ..LbfgsOptions::default()
            },
        );
        assert!((res.x[0] - 1.0).abs() < 1e-6 && (res.x[1] - 1.0).abs() < 1e-6, "{:?}", res.x);
    }

    struct MinExpectation;
    impl ExpectationProgram for MinExpectation {
        fn objective(&self, e: &[f64]) -> (f64, Vec<f64>) {
            (e[0], vec![1.0])
        }
    }

    #[test]
    fn unconstrained_expectation_reaches_ground_energy() {
        let pair = build_canonical_pair(5).unwrap();
        let t = (&pair.q().square() + &pair.p().square()).matrix().clone();
        let ground = linalg::eigh(&t).min();
        let ops = [t];
        let best = multi_start(&ops, &MinExpectation, &SolveOptions::default(), 4, 1);
        assert!((best.best.value - ground).abs() < 1e-10);
    }

    struct PinnedQ(f64);
    impl ExpectationProgram for PinnedQ {
        fn objective(&self, e: &[f64]) -> (f64, Vec<f64>) {
            (-e[1], vec![0.0, -1.0])
        }
        fn constraints(&self, e: &[f64]) -> Vec<(f64, Vec<f64>)> {
            vec![(e[0] - self.0, vec![1.0, 0.0])]
        }
    }

    #[test]
    fn equality_constraint_is_met() {
        let pair = build_canonical_pair(4).unwrap();
        let ops = [pair.q().matrix().clone(), pair.p().matrix().clone()];
        let best = multi_start(&ops, &PinnedQ(0.3), &SolveOptions::default(), 4, 3);
        assert!(best.best.converged);
        assert!((best.best.expectations[0] - 0.3).abs() < 1e-8);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pair = build_canonical_pair(3).unwrap();
        let ops = [pair.q().matrix().clone(), pair.p().square().matrix().clone()];
        let space = FactorSpace::new(&ops, 2);
        let mut r = rng::stream(11, 0);
        let x = space.from_factor(&rng::gaussian_matrix(&mut r, 3, 2));
        let w = [0.7, -1.3];
        let ev = space.evaluate(&x);
        let g = space.pullback(&ev, &w);
        let h = 1e-6;
        for k in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fp: f64 = space.expectations(&xp).iter().zip(&w).map(|(a, b)| a * b).sum();
            let fm: f64 = space.expectations(&xm).iter().zip(&w).map(|(a, b)| a * b).sum();
            assert!(((fp - fm) / (2.0 * h) - g[k]).abs() < 1e-6);
        }
    }
}
