//! The attainable covariance region of `(Q, P)`.
//!
//! * Extremal sums of variances: `τ_min = min_{q,p} λ_min((Q-q)² + (P-p)²)` and
//!   `τ_max = λ_max(Q² + P²)`.
//! * The `(tr Γ, det Γ)` region, sampled by extremizing `det Γ` at fixed trace
//!   over rank-k factor states with random restarts.
//! * Support points of joint numerical ranges and cross-sections of the
//!   `(⟨G₁⟩, ⟨G₂⟩, ⟨G₃⟩)` body at fixed `⟨T⟩ = t`, `⟨Q⟩ = ⟨P⟩ = 0`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::cov_matrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::moments::{self, PairCov};
use crate::operators::{build_quadratics, CanonicalPair, HermitianOperator};
use crate::optim::{self, ExpectationProgram, SolveOptions};
use crate::states::QuantumState;

/// Slack on the admissible trace window and on region invariants.
pub const TRACE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    Min,
    Max,
}

impl Extremum {
    pub fn as_str(&self) -> &'static str {
        match self {
            Extremum::Min => "min",
            Extremum::Max => "max",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrbitPoint {
    pub centers: (f64, f64),
    pub state: QuantumState,
}

#[derive(Debug, Clone)]
pub struct VarianceExtremum {
    /// `Var(Q) + Var(P)` at the optimum.
    pub value: f64,
    /// Optimal shifts `(q*, p*)`, equal to `(⟨Q⟩, ⟨P⟩)` of the optimal state.
    pub centers: (f64, f64),
    pub state: QuantumState,
    /// Distinct optima generated by Fourier conjugation, `(q, p) → (-p, q)`.
    pub orbit: Vec<OrbitPoint>,
    pub converged: bool,
    pub refinement_steps: usize,
}

impl VarianceExtremum {
    pub fn on_axis(&self, tol: f64) -> bool {
        self.centers.0.abs() < tol && self.centers.1.abs() < tol
    }
}

fn shifted_sum(pair: &CanonicalPair, q: f64, p: f64) -> CMat {
    let a = pair.q().shifted(q);
    let b = pair.p().shifted(p);
    a.matrix() * a.matrix() + b.matrix() * b.matrix()
}

/// `λ_min((Q-q)² + (P-p)²)` and its eigenvector.
pub fn shifted_ground(pair: &CanonicalPair, q: f64, p: f64) -> (f64, linalg::CVec) {
    let eig = linalg::eigh(&shifted_sum(pair, q, p));
    (eig.min(), eig.vector(0))
}

const MAX_REFINE_STEPS: usize = 10_000;

fn shifted_means(pair: &CanonicalPair, x: [f64; 2]) -> [f64; 2] {
    let (_, psi) = shifted_ground(pair, x[0], x[1]);
    [
        linalg::expect_vec(&psi, pair.q().matrix()).re,
        linalg::expect_vec(&psi, pair.p().matrix()).re,
    ]
}

/// Newton step on `r(x) = means(x) - x`, Jacobian by central differences.
fn newton_step(pair: &CanonicalPair, x: [f64; 2], r: [f64; 2]) -> Option<[f64; 2]> {
    const H: f64 = 1e-6;
    let mut jac = [[0.0; 2]; 2];
    for k in 0..2 {
        let mut a = x;
        let mut b = x;
        a[k] += H;
        b[k] -= H;
        let (ma, mb) = (shifted_means(pair, a), shifted_means(pair, b));
        for i in 0..2 {
            jac[i][k] = (ma[i] - mb[i]) / (2.0 * H) - if i == k { 1.0 } else { 0.0 };
        }
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if det.abs() < 1e-14 {
        return None;
    }
    let dq = (-r[0] * jac[1][1] + r[1] * jac[0][1]) / det;
    let dp = (-r[1] * jac[0][0] + r[0] * jac[1][0]) / det;
    Some([x[0] + dq, x[1] + dp])
}

fn residual(pair: &CanonicalPair, x: [f64; 2]) -> ([f64; 2], f64) {
    let m = shifted_means(pair, x);
    let r = [m[0] - x[0], m[1] - x[1]];
    (r, r[0].abs() + r[1].abs())
}

/// Grid search over `(q, p)` in the spectral box followed by local refinement.
///
/// The gradient of `λ_min((Q-q)² + (P-p)²)` is `2(q - ⟨Q⟩, p - ⟨P⟩)` at the
/// ground state, so stationary shifts are fixed points of `x → means(x)`.
/// Refinement takes Newton steps on that fixed-point residual and falls back
/// to the plain update whenever Newton does not reduce it.
pub fn min_sum_variances(pair: &CanonicalPair, grid_n: usize, refine_tol: f64) -> Result<VarianceExtremum> {
    if grid_n < 8 {
        return Err(Error::InvalidParameter(format!("grid_n must be >= 8, got {grid_n}")));
    }
    let r = pair.spectral_radius();
    let axis: Vec<f64> = (0..grid_n)
        .map(|i| -r + 2.0 * r * i as f64 / (grid_n - 1) as f64)
        .collect();
    let values: Vec<(f64, usize)> = (0..grid_n * grid_n)
        .into_par_iter()
        .map(|k| (shifted_ground(pair, axis[k / grid_n], axis[k % grid_n]).0, k))
        .collect();
    let (_, best) = values
        .into_iter()
        .fold((f64::INFINITY, 0), |acc, v| if v.0 < acc.0 { v } else { acc });
    let mut x = [axis[best / grid_n], axis[best % grid_n]];

    let mut converged = false;
    let mut steps = 0;
    let (mut res, mut size) = residual(pair, x);
    while steps < MAX_REFINE_STEPS {
        if size < refine_tol {
            converged = true;
            break;
        }
        steps += 1;
        let plain = [x[0] + res[0], x[1] + res[1]];
        let trial = newton_step(pair, x, res).map(|y| (y, residual(pair, y)));
        match trial {
            Some((y, (r2, s2))) if s2 < size => {
                x = y;
                res = r2;
                size = s2;
            }
            _ => {
                x = plain;
                (res, size) = residual(pair, x);
            }
        }
    }
    let (q, p) = (x[0], x[1]);
    let (value, psi) = shifted_ground(pair, q, p);
    let state = QuantumState::from_vector(psi)?;
    let orbit = fourier_orbit(pair, &state)?;
    Ok(VarianceExtremum {
        value,
        centers: (q, p),
        state,
        orbit,
        converged,
        refinement_steps: steps,
    })
}

/// `F^k |ψ⟩` for k = 0..3, keeping points with distinct centers (1e-6).
pub fn fourier_orbit(pair: &CanonicalPair, state: &QuantumState) -> Result<Vec<OrbitPoint>> {
    let mut out: Vec<OrbitPoint> = Vec::with_capacity(4);
    let mut current = state.clone();
    for _ in 0..4 {
        let centers = (current.expectation(pair.q()), current.expectation(pair.p()));
        let duplicate = out
            .iter()
            .any(|o| (o.centers.0 - centers.0).abs() < 1e-6 && (o.centers.1 - centers.1).abs() < 1e-6);
        if !duplicate {
            out.push(OrbitPoint {
                centers,
                state: current.clone(),
            });
        }
        current = current.evolve(pair.fourier())?;
    }
    Ok(out)
}

/// `λ_max(Q² + P²)` with its eigenvector.
pub fn max_sum_variances(pair: &CanonicalPair) -> Result<VarianceExtremum> {
    let t = build_quadratics(pair).t;
    let eig = t.eigen();
    let state = QuantumState::from_vector(eig.vector(pair.dim() - 1))?;
    let centers = (state.expectation(pair.q()), state.expectation(pair.p()));
    let orbit = vec![OrbitPoint {
        centers,
        state: state.clone(),
    }];
    Ok(VarianceExtremum {
        value: eig.max(),
        centers,
        state,
        orbit,
        converged: true,
        refinement_steps: 0,
    })
}

#[derive(Debug, Clone)]
pub struct RegionSample {
    pub dim: usize,
    pub rank: usize,
    pub t_target: f64,
    pub trace: f64,
    pub det: f64,
    pub direction: Extremum,
    pub state: QuantumState,
    pub converged: bool,
    pub restarts_used: usize,
    /// `|tr Γ - t|` at the returned state.
    pub residual: f64,
}

struct DetAtTrace {
    target: f64,
    sign: f64,
}

impl ExpectationProgram for DetAtTrace {
    fn objective(&self, e: &[f64]) -> (f64, Vec<f64>) {
        let det = PairCov::from_moments(e).det();
        let g = moments::det_gradient(e).into_iter().map(|v| self.sign * v).collect();
        (self.sign * det, g)
    }

    fn constraints(&self, e: &[f64]) -> Vec<(f64, Vec<f64>)> {
        vec![(PairCov::from_moments(e).trace() - self.target, moments::trace_gradient(e))]
    }
}

/// Attainable window `[τ_min, τ_max]` of `Var(Q) + Var(P)`.
#[derive(Debug, Clone, Copy)]
pub struct TraceBounds {
    pub min: f64,
    pub max: f64,
}

impl TraceBounds {
    pub fn compute(pair: &CanonicalPair) -> Result<Self> {
        Ok(TraceBounds {
            min: min_sum_variances(pair, 64, 1e-12)?.value,
            max: max_sum_variances(pair)?.value,
        })
    }
}

/// Trace-constrained determinant extremization with random restarts.
pub struct RegionSolver<'a> {
    pair: &'a CanonicalPair,
    ops: Vec<CMat>,
    bounds: TraceBounds,
    pub options: SolveOptions,
}

impl<'a> RegionSolver<'a> {
    pub fn new(pair: &'a CanonicalPair) -> Result<Self> {
        Ok(Self::with_bounds(pair, TraceBounds::compute(pair)?))
    }

    pub fn with_bounds(pair: &'a CanonicalPair, bounds: TraceBounds) -> Self {
        RegionSolver {
            pair,
            ops: moments::moment_operators(pair),
            bounds,
            options: SolveOptions::default(),
        }
    }

    pub fn bounds(&self) -> TraceBounds {
        self.bounds
    }

    pub fn extremize(&self, t: f64, rank: usize, direction: Extremum, restarts: usize, seed: u64) -> Result<RegionSample> {
        let d = self.pair.dim();
        if rank == 0 || rank > d {
            return Err(Error::InvalidParameter(format!("rank must be in 1..={d}, got {rank}")));
        }
        if !(t >= self.bounds.min - TRACE_SLACK && t <= self.bounds.max + TRACE_SLACK) {
            return Err(Error::InfeasibleTrace {
                target: t,
                min: self.bounds.min,
                max: self.bounds.max,
            });
        }
        let target = t.clamp(self.bounds.min, self.bounds.max);
        let program = DetAtTrace {
            target,
            sign: match direction {
                Extremum::Min => 1.0,
                Extremum::Max => -1.0,
            },
        };
        let opts = SolveOptions {
            rank,
            ..self.options.clone()
        };
        let run = optim::multi_start(&self.ops, &program, &opts, restarts, seed);
        let state = QuantumState::from_factor(run.best.factor)?;
        let cov = cov_matrix(&state, &[self.pair.q(), self.pair.p()])?;
        Ok(RegionSample {
            dim: d,
            rank,
            t_target: t,
            trace: cov.trace(),
            det: cov.det(),
            direction,
            state,
            converged: run.best.converged,
            restarts_used: run.restarts_used,
            residual: (cov.trace() - target).abs(),
        })
    }

    /// Min- and max-det samples on a uniform trace grid over `[τ_min, τ_max]`.
    pub fn trace_det_region(&self, n_trace_samples: usize, rank: usize, restarts: usize, seed: u64) -> Result<Vec<RegionSample>> {
        if n_trace_samples < 2 {
            return Err(Error::InvalidParameter("need at least two trace samples".into()));
        }
        let span = self.bounds.max - self.bounds.min;
        let jobs: Vec<(usize, Extremum)> = (0..n_trace_samples)
            .flat_map(|i| [(i, Extremum::Min), (i, Extremum::Max)])
            .collect();
        jobs.into_par_iter()
            .map(|(i, dir)| {
                let t = self.bounds.min + span * i as f64 / (n_trace_samples - 1) as f64;
                let job_seed = seed.wrapping_add(2 * i as u64 + (dir == Extremum::Max) as u64);
                self.extremize(t, rank, dir, restarts, job_seed)
            })
            .collect()
    }
}

pub fn extremize_det_at_trace(
    pair: &CanonicalPair,
    t: f64,
    rank: usize,
    direction: Extremum,
    restarts: usize,
    seed: u64,
) -> Result<RegionSample> {
    RegionSolver::new(pair)?.extremize(t, rank, direction, restarts, seed)
}

pub fn trace_det_region(
    pair: &CanonicalPair,
    n_trace_samples: usize,
    rank: usize,
    restarts: usize,
    seed: u64,
) -> Result<Vec<RegionSample>> {
    RegionSolver::new(pair)?.trace_det_region(n_trace_samples, rank, restarts, seed)
}

#[derive(Debug, Clone)]
pub struct JnrPoint {
    pub direction: Vec<f64>,
    pub point: Vec<f64>,
    /// `λ_max(Σ nᵢGᵢ)`, equal to `direction · point`.
    pub support_value: f64,
    pub state: QuantumState,
    /// Top eigenvalue of `Σ nᵢGᵢ` is degenerate (flat boundary face).
    pub degenerate: bool,
}

/// Supporting point of the joint numerical range of `ops` in direction `n`.
pub fn jnr_support(ops: &[&HermitianOperator], direction: &[f64]) -> Result<JnrPoint> {
    if ops.is_empty() {
        return Err(Error::InvalidParameter("need at least one operator".into()));
    }
    if ops.len() != direction.len() {
        return Err(Error::Shape(format!(
            "{} operators but direction has {} components",
            ops.len(),
            direction.len()
        )));
    }
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("direction must be a unit vector (norm {norm})")));
    }
    let d = ops[0].dim();
    let mut m = CMat::zeros(d, d);
    for (op, &n) in ops.iter().zip(direction) {
        if op.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: op.dim() });
        }
        m += op.matrix() * C64::new(n, 0.0);
    }
    let eig = linalg::eigh(&m);
    let top = eig.max();
    let degenerate = d > 1 && top - eig.values[d - 2] < 1e-9 * top.abs().max(1.0);
    let state = QuantumState::from_vector(eig.vector(d - 1))?;
    let point = ops.iter().map(|op| state.expectation(op)).collect();
    Ok(JnrPoint {
        direction: direction.to_vec(),
        point,
        support_value: top,
        state,
        degenerate,
    })
}

/// Rotation `(q, p) → (-p, q)` induced on the `(⟨Q⟩, ⟨P⟩)` plane by Fourier conjugation.
pub fn quarter_turn(v: [f64; 3]) -> [f64; 3] {
    [-v[1], v[0], v[2]]
}

/// Near-uniform directions on the unit sphere (Fibonacci lattice).
pub fn sphere_directions(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SlicePoint {
    pub direction: [f64; 3],
    /// `(⟨G₁⟩, ⟨G₂⟩, ⟨G₃⟩)`.
    pub g: [f64; 3],
    pub radius: f64,
    /// `(t² - r²)/4`.
    pub det: f64,
    pub state: QuantumState,
}

#[derive(Debug, Clone)]
pub struct CrossSection {
    pub t: f64,
    pub points: Vec<SlicePoint>,
    /// `(t² - r_max²)/4` over the sampled boundary.
    pub det_min: f64,
    /// `(t² - r_near²)/4` with `r_near` the distance of the origin to the sampled hull.
    pub det_max: f64,
    pub origin_inside: bool,
}

struct SliceSupport {
    normal: [f64; 3],
    t: f64,
}

impl ExpectationProgram for SliceSupport {
    fn objective(&self, e: &[f64]) -> (f64, Vec<f64>) {
        let n = self.normal;
        (
            -(n[0] * e[0] + n[1] * e[1] + n[2] * e[2]),
            vec![-n[0], -n[1], -n[2], 0.0, 0.0, 0.0],
        )
    }

    fn constraints(&self, e: &[f64]) -> Vec<(f64, Vec<f64>)> {
        vec![
            (e[3], vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
            (e[4], vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
            (e[5] - self.t, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
        ]
    }
}

/// Restarts per direction in the cross-section sampler.
pub const SLICE_RESTARTS: usize = 4;

/// Boundary sample of `J_t = {(⟨G₁⟩,⟨G₂⟩,⟨G₃⟩) : ⟨T⟩ = t, ⟨Q⟩ = ⟨P⟩ = 0}`.
///
/// Each direction `n` yields the supporting point maximizing `n·g` over rank-2
/// states satisfying the three linear constraints. The determinant range at
/// trace `t` follows from the radii of the sampled body.
pub fn jnr_cross_section(pair: &CanonicalPair, t: f64, n_directions: usize, seed: u64) -> Result<CrossSection> {
    if n_directions < 20 {
        return Err(Error::InvalidParameter(format!("need at least 20 directions, got {n_directions}")));
    }
    let quad = build_quadratics(pair);
    let t_eig = quad.t.eigen();
    if !(t >= t_eig.min() - TRACE_SLACK && t <= t_eig.max() + TRACE_SLACK) {
        return Err(Error::EmptySlice(t));
    }
    let ops: Vec<CMat> = [&quad.g1, &quad.g2, &quad.g3, pair.q(), pair.p(), &quad.t]
        .iter()
        .map(|o| o.matrix().clone())
        .collect();
    let opts = SolveOptions {
        rank: 2.min(pair.dim()),
        ..SolveOptions::default()
    };
    let dirs = sphere_directions(n_directions);
    let sols: Vec<Option<SlicePoint>> = dirs
        .par_iter()
        .enumerate()
        .map(|(i, n)| {
            let program = SliceSupport { normal: *n, t };
            let run = optim::multi_start(&ops, &program, &opts, SLICE_RESTARTS, seed.wrapping_add(i as u64));
            if !run.best.converged {
                return None;
            }
            let e = &run.best.expectations;
            let g = [e[0], e[1], e[2]];
            let radius = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            let state = QuantumState::from_factor(run.best.factor).ok()?;
            Some(SlicePoint {
                direction: *n,
                g,
                radius,
                det: (t * t - radius * radius) / 4.0,
                state,
            })
        })
        .collect();
    let points: Vec<SlicePoint> = sols.into_iter().flatten().collect();
    if points.is_empty() {
        return Err(Error::EmptySlice(t));
    }
    let r_max = points.iter().map(|p| p.radius).fold(0.0, f64::max);
    // distance from the origin to conv(points) is max_n (-h(n)) when positive
    let r_near = dirs
        .iter()
        .map(|n| {
            let h = points
                .iter()
                .map(|p| n[0] * p.g[0] + n[1] * p.g[1] + n[2] * p.g[2])
                .fold(f64::NEG_INFINITY, f64::max);
            -h
        })
        .fold(0.0, f64::max);
    Ok(CrossSection {
        t,
        det_min: (t * t - r_max * r_max) / 4.0,
        det_max: (t * t - r_near * r_near) / 4.0,
        origin_inside: r_near == 0.0,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::build_canonical_pair;

    #[test]
    fn grid_too_small_rejected() {
        let pair = build_canonical_pair(3).unwrap();
        assert!(min_sum_variances(&pair, 4, 1e-10).is_err());
    }

    #[test]
    fn infeasible_trace_is_distinct_error() {
        let pair = build_canonical_pair(3).unwrap();
        let solver = RegionSolver::new(&pair).unwrap();
        let err = solver.extremize(0.1, 1, Extremum::Min, 2, 0).unwrap_err();
        assert!(matches!(err, Error::InfeasibleTrace { .. }));
        let err = solver.extremize(100.0, 1, Extremum::Max, 2, 0).unwrap_err();
        assert!(matches!(err, Error::InfeasibleTrace { .. }));
    }

    #[test]
    fn bad_rank_rejected() {
        let pair = build_canonical_pair(3).unwrap();
        let solver = RegionSolver::new(&pair).unwrap();
        assert!(solver.extremize(1.5, 0, Extremum::Min, 2, 0).is_err());
        assert!(solver.extremize(1.5, 4, Extremum::Min, 2, 0).is_err());
    }

    #[test]
    fn jnr_support_validates_direction() {
        let pair = build_canonical_pair(3).unwrap();
        assert!(jnr_support(&[pair.q()], &[0.5]).is_err());
        assert!(jnr_support(&[pair.q(), pair.p()], &[1.0]).is_err());
        assert!(jnr_support(&[], &[]).is_err());
    }

    #[test]
    fn cross_section_rejects_infeasible_t() {
        let pair = build_canonical_pair(3).unwrap();
        assert!(matches!(jnr_cross_section(&pair, 0.1, 20, 0), Err(Error::EmptySlice(_))));
        assert!(jnr_cross_section(&pair, 2.0, 5, 0).is_err());
    }

    #[test]
    fn sphere_directions_are_unit() {
        for n in sphere_directions(50) {
            assert!(((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt() - 1.0).abs() < 1e-14);
        }
    }
}
