//! Estimation bounds for the displacement encoding `e^{i(r₁Q + r₂P)}`.
//!
//! For pure probes the QFIM is `4Γˢ` of the generators, so the scalar QCRB on
//! `tr Cov(r̂)` is `¼ tr (Γˢ)⁻¹ = ¼ tr Γˢ / det Γˢ`. Its minimum over pure
//! states is `A_d`; adding the saturability constraint `⟨[Q,P]⟩ = 0` gives
//! `A_d^c`. Measuring only the first moments of `(Q, P)` yields the
//! moment-matrix bound `A_d^M = tr 𝓜⁻¹`.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat, C64, I};
use crate::moments::{self, PairCov};
use crate::operators::{CanonicalPair, HermitianOperator, UnitaryOperator};
use crate::optim::{self, ExpectationProgram, SolveOptions};
use crate::rng;
use crate::states::QuantumState;

/// Floor on `det Γˢ` below which the objective is continued linearly.
pub const DET_FLOOR: f64 = 1e-12;
/// Largest accepted condition number of `Γˢ(M)`.
pub const MAX_CONDITION: f64 = 1e12;
/// Required `|⟨C⟩|` on the constrained optimum.
pub const SATURABILITY_TOL: f64 = 1e-6;

/// `Re(⟨H_μH_ν⟩) - ⟨H_μ⟩⟨H_ν⟩` for any number of observables.
pub fn symmetric_covariance(state: &QuantumState, obs: &[&HermitianOperator]) -> Result<RMat> {
    if obs.is_empty() {
        return Err(Error::Shape("need at least one observable".into()));
    }
    let d = state.dim();
    for o in obs {
        if o.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: o.dim() });
        }
    }
    let means: Vec<f64> = obs.iter().map(|o| state.expectation(o)).collect();
    let m = obs.len();
    let mut g = RMat::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let v = state.expectation_c(&(obs[j].matrix() * obs[k].matrix())).re - means[j] * means[k];
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    Ok(g)
}

/// `4Γˢ(H₁, …, H_n)` for a pure probe.
pub fn qfim_pure(state: &QuantumState, generators: &[&HermitianOperator]) -> Result<RMat> {
    if !state.is_pure() {
        return Err(Error::NotPure(state.purity()));
    }
    Ok(symmetric_covariance(state, generators)? * 4.0)
}

/// `J_{μν} = -2i⟨[H_μ, H_ν]⟩`.
pub fn saturability_matrix(state: &QuantumState, generators: &[&HermitianOperator]) -> Result<RMat> {
    let m = generators.len();
    let mut j = RMat::zeros(m, m);
    for a in 0..m {
        for b in (a + 1)..m {
            let c = state.expectation_c(&linalg::commutator(generators[a].matrix(), generators[b].matrix()));
            let v = (C64::new(0.0, -2.0) * c).re;
            j[(a, b)] = v;
            j[(b, a)] = -v;
        }
    }
    Ok(j)
}

/// `¼ tr W (Γˢ)⁻¹`; `W = 1` gives the scalar QCRB.
pub fn weighted_qcrb(sym_cov: &RMat, weight: &RMat) -> Result<f64> {
    let inv = sym_cov
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NonInvertible("symmetric covariance matrix is singular".into()))?;
    Ok(0.25 * (weight * inv).trace())
}

/// `¼ tr Γˢ / det Γˢ` with a linear continuation below the floor.
fn barrier_objective(e: &[f64]) -> (f64, Vec<f64>) {
    let c = PairCov::from_moments(e);
    let tr = c.trace();
    let det = c.sym_det();
    let dtr = moments::trace_gradient(e);
    let ddet = moments::sym_det_gradient(e);
    let (f, a, b) = if det >= DET_FLOOR {
        (tr / (4.0 * det), 1.0 / (4.0 * det), -tr / (4.0 * det * det))
    } else {
        let s = DET_FLOOR;
        (
            tr * (2.0 - det / s) / (4.0 * s),
            (2.0 - det / s) / (4.0 * s),
            -tr / (4.0 * s * s),
        )
    };
    let g = dtr.iter().zip(&ddet).map(|(x, y)| a * x + b * y).collect();
    (f, g)
}

struct AccuracyProgram {
    constrained: bool,
}

impl ExpectationProgram for AccuracyProgram {
    fn objective(&self, e: &[f64]) -> (f64, Vec<f64>) {
        barrier_objective(e)
    }

    fn constraints(&self, e: &[f64]) -> Vec<(f64, Vec<f64>)> {
        if self.constrained {
            vec![(e[5], vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0])]
        } else {
            Vec::new()
        }
    }
}

#[derive(Debug, Clone)]
pub struct AccuracyOptimum {
    /// `¼ tr Γˢ / det Γˢ` recomputed from the returned state.
    pub value: f64,
    pub state: QuantumState,
    /// `max |Ω|` of `Γ(Q, P)`, i.e. `|⟨C⟩|`.
    pub saturability_residual: f64,
    pub converged: bool,
    pub restarts_used: usize,
}

/// Scalar QCRB `¼ tr Γˢ / det Γˢ` of `(Q, P)` on a state.
pub fn qcrb_trace(pair: &CanonicalPair, state: &QuantumState) -> Result<f64> {
    let g = symmetric_covariance(state, &[pair.q(), pair.p()])?;
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    Ok(0.25 * g.trace() / det)
}

pub fn optimize_a_d(pair: &CanonicalPair, restarts: usize, seed: u64, constrained: bool) -> Result<AccuracyOptimum> {
    let ops = moments::moment_operators(pair);
    let program = AccuracyProgram { constrained };
    let opts = SolveOptions {
        rank: 1,
        ..SolveOptions::default()
    };
    let run = optim::multi_start(&ops, &program, &opts, restarts, seed);
    let state = QuantumState::from_factor(run.best.factor)?;
    let c_op = &pair.q().commutator_i(pair.p()) * 0.5;
    let skew = state.expectation(&c_op).abs();
    let value = qcrb_trace(pair, &state)?;
    let converged = run.best.converged && value.is_finite() && value > 0.0 && (!constrained || skew < SATURABILITY_TOL);
    Ok(AccuracyOptimum {
        value,
        state,
        saturability_residual: skew,
        converged,
        restarts_used: run.restarts_used,
    })
}

#[derive(Debug, Clone)]
pub struct MomentMatrix {
    /// `Cᵀ Γˢ(M)⁻¹ C`.
    pub matrix: RMat,
    /// `C_{ij} = -i⟨[M_i, H_j]⟩`.
    pub jacobian: RMat,
    pub condition: f64,
    /// All commutators vanish: the measured set carries no information.
    pub insensitive: bool,
}

pub fn moment_matrix(
    state: &QuantumState,
    measured: &[&HermitianOperator],
    generators: &[&HermitianOperator],
) -> Result<MomentMatrix> {
    if generators.is_empty() {
        return Err(Error::Shape("need at least one generator".into()));
    }
    let g = symmetric_covariance(state, measured)?;
    let ev = linalg::eigvals_sym(&g);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned(condition));
    }
    let mut c = RMat::zeros(measured.len(), generators.len());
    for (i, m) in measured.iter().enumerate() {
        for (j, h) in generators.iter().enumerate() {
            if h.dim() != state.dim() {
                return Err(Error::DimensionMismatch {
                    expected: state.dim(),
                    got: h.dim(),
                });
            }
            c[(i, j)] = (-I * state.expectation_c(&linalg::commutator(m.matrix(), h.matrix()))).re;
        }
    }
    let insensitive = c.iter().all(|v| v.abs() < 1e-12);
    let inv = g.try_inverse().ok_or(Error::IllConditioned(condition))?;
    let matrix = c.transpose() * inv * &c;
    Ok(MomentMatrix {
        matrix: (&matrix + matrix.transpose()) * 0.5,
        jacobian: c,
        condition,
        insensitive,
    })
}

/// `tr 𝓜⁻¹` for measured = generators = `(Q, P)`.
pub fn moment_bound(pair: &CanonicalPair, state: &QuantumState) -> Result<f64> {
    let mm = moment_matrix(state, &[pair.q(), pair.p()], &[pair.q(), pair.p()])?;
    if mm.insensitive {
        return Err(Error::Insensitive("⟨[Q, P]⟩ vanishes on this probe".into()));
    }
    let inv = mm
        .matrix
        .try_inverse()
        .ok_or_else(|| Error::NonInvertible("moment matrix is singular".into()))?;
    Ok(inv.trace())
}

#[derive(Debug, Clone)]
pub struct AccuracyReport {
    pub dim: usize,
    pub a_d: f64,
    pub a_d_c: f64,
    pub a_d_m: f64,
    pub gap_delta: f64,
    pub state_a_d: QuantumState,
    pub state_a_d_c: QuantumState,
    pub saturability_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct AccuracyScan {
    pub reports: Vec<AccuracyReport>,
    /// Least-squares slope of `ln A_d` against `ln d`, when at least two dimensions were scanned.
    pub slope: Option<f64>,
}

pub fn accuracy_report(pair: &CanonicalPair, restarts: usize, seed: u64) -> Result<AccuracyReport> {
    let free = optimize_a_d(pair, restarts, seed, false)?;
    let cons = optimize_a_d(pair, restarts, seed, true)?;
    let a_d_m = moment_bound(pair, &free.state)?;
    Ok(AccuracyReport {
        dim: pair.dim(),
        a_d: free.value,
        a_d_c: cons.value,
        a_d_m,
        gap_delta: a_d_m - free.value,
        state_a_d: free.state,
        state_a_d_c: cons.state,
        saturability_residual: cons.saturability_residual,
        converged: free.converged && cons.converged,
    })
}

pub fn accuracy_scan(d_list: &[usize], restarts: usize, seed: u64) -> Result<AccuracyScan> {
    if d_list.is_empty() {
        return Err(Error::InvalidParameter("dimension list is empty".into()));
    }
    let reports = d_list
        .iter()
        .map(|&d| accuracy_report(&CanonicalPair::new(d)?, restarts, seed))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = reports.iter().map(|r| (r.dim as f64).ln()).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.a_d.ln()).collect();
    Ok(AccuracyScan {
        slope: loglog_slope(&xs, &ys),
        reports,
    })
}

/// Ordinary least-squares slope.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct MomSimResult {
    pub nu: u64,
    pub trials: usize,
    pub empirical_mse: f64,
    pub predicted_mse: f64,
    pub ratio: f64,
    /// Trials whose sample mean fell outside the invertible window of `μ`.
    pub clamped: usize,
}

/// Outcome distribution of a projective measurement of `m`.
struct Measurement {
    values: Vec<f64>,
    basis: CMat,
}

impl Measurement {
    fn new(m: &HermitianOperator) -> Self {
        let eig = m.eigen();
        Measurement {
            values: eig.values.clone(),
            basis: eig.vectors.clone(),
        }
    }

    fn probabilities(&self, rho: &CMat) -> Vec<f64> {
        let r = self.basis.adjoint() * rho * &self.basis;
        let mut p: Vec<f64> = (0..self.values.len()).map(|k| r[(k, k)].re.max(0.0)).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        p
    }

    /// Sample mean of `nu` outcomes, drawn as a chain of binomials.
    fn sample_mean(&self, probs: &[f64], nu: u64, r: &mut rng::Rng) -> f64 {
        let mut left = nu;
        let mut mass = 1.0;
        let mut sum = 0.0;
        for (k, (&p, &v)) in probs.iter().zip(&self.values).enumerate() {
            if left == 0 {
                break;
            }
            let count = if k + 1 == probs.len() || mass <= 0.0 {
                left
            } else {
                let q = (p / mass).clamp(0.0, 1.0);
                Binomial::new(left, q).expect("valid binomial").sample(r)
            };
            sum += count as f64 * v;
            left -= count;
            mass -= p;
        }
        sum / nu as f64
    }
}

fn encoded(rho: &CMat, h: &HermitianOperator, theta: f64) -> Result<CMat> {
    let u = UnitaryOperator::exp_i(h, theta)?;
    Ok(u.matrix() * rho * u.matrix().adjoint())
}

fn mean_of(rho: &CMat, m: &HermitianOperator) -> f64 {
    linalg::expect_rho(rho, m.matrix()).re
}

/// Single-parameter method of moments for `e^{iθH}ρe^{-iθH}`, measuring `M`.
pub fn mom_simulate_single(
    state: &QuantumState,
    m: &HermitianOperator,
    h: &HermitianOperator,
    theta_true: f64,
    nu: u64,
    trials: usize,
    seed: u64,
) -> Result<MomSimResult> {
    if nu < 2 || trials < 2 {
        return Err(Error::InvalidParameter(format!("need nu >= 2 and trials >= 2, got {nu} and {trials}")));
    }
    if m.dim() != state.dim() || h.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: if m.dim() != state.dim() { m.dim() } else { h.dim() },
        });
    }
    let rho0 = state.density().clone();
    let comm = linalg::commutator(m.matrix(), h.matrix());
    let slope_at = |rho: &CMat| (I * linalg::expect_rho(rho, &comm)).re;
    let rho_true = encoded(&rho0, h, theta_true)?;
    let sens = slope_at(&rho_true);
    if sens.abs() < 1e-8 {
        return Err(Error::Insensitive(format!("|<[M, H]>| = {:.3e} on the probe", sens.abs())));
    }

    // monotone window of μ(θ) around θ_true
    let step = 1e-3 / h.eigen().values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut bounds = [theta_true, theta_true];
    for (side, dir) in [(0usize, -1.0), (1usize, 1.0)] {
        for _ in 0..20_000 {
            let next = bounds[side] + dir * step;
            let rho = encoded(&rho0, h, next)?;
            if slope_at(&rho) * sens <= 0.0 {
                break;
            }
            bounds[side] = next;
        }
    }
    let (lo, hi) = (bounds[0], bounds[1]);
    if hi - lo < 2.0 * step {
        return Err(Error::NonInvertible("mean of M is not locally invertible around the true parameter".into()));
    }
    let mu = |t: f64| -> Result<f64> { Ok(mean_of(&encoded(&rho0, h, t)?, m)) };
    let (mu_lo, mu_hi) = (mu(lo)?, mu(hi)?);

    let meas = Measurement::new(m);
    let probs = meas.probabilities(&rho_true);
    let outcomes: Vec<Result<(f64, bool)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let xbar = meas.sample_mean(&probs, nu, &mut r);
            let (mut a, mut b) = (lo, hi);
            let increasing = mu_hi > mu_lo;
            let inside = if increasing {
                xbar > mu_lo && xbar < mu_hi
            } else {
                xbar < mu_lo && xbar > mu_hi
            };
            if !inside {
                let edge = if (xbar <= mu_lo) == increasing { lo } else { hi };
                return Ok(((edge - theta_true).powi(2), true));
            }
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if b - a < 1e-15 * (1.0 + mid.abs()) {
                    break;
                }
                if (mu(mid)? < xbar) == increasing {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            Ok(((0.5 * (a + b) - theta_true).powi(2), false))
        })
        .collect();
    let mut sum = 0.0;
    let mut clamped = 0;
    for o in outcomes {
        let (se, c) = o?;
        sum += se;
        clamped += c as usize;
    }
    let empirical_mse = sum / trials as f64;
    let mean = mean_of(&rho_true, m);
    let var = linalg::expect_rho(&rho_true, &(m.matrix() * m.matrix())).re - mean * mean;
    let predicted_mse = var / (nu as f64 * sens * sens);
    Ok(MomSimResult {
        nu,
        trials,
        empirical_mse,
        predicted_mse,
        ratio: empirical_mse / predicted_mse,
        clamped,
    })
}

/// Two-parameter method of moments for `e^{i(θ₁H₁ + θ₂H₂)}`, measuring `M₁`
/// on the first `ν/2` shots and `M₂` on the remaining ones. The even shot
/// split is a convention for non-commuting measured observables.
pub fn mom_simulate_split(
    state: &QuantumState,
    measured: [&HermitianOperator; 2],
    generators: [&HermitianOperator; 2],
    theta_true: [f64; 2],
    nu: u64,
    trials: usize,
    seed: u64,
) -> Result<MomSimResult> {
    if nu < 4 || trials < 2 {
        return Err(Error::InvalidParameter(format!("need nu >= 4 and trials >= 2, got {nu} and {trials}")));
    }
    let rho0 = state.density().clone();
    let enc = |t: [f64; 2]| -> Result<CMat> {
        let h = &(generators[0] * t[0]) + &(generators[1] * t[1]);
        let u = UnitaryOperator::exp_i(&h, 1.0)?;
        Ok(u.matrix() * &rho0 * u.matrix().adjoint())
    };
    let mu = |t: [f64; 2]| -> Result<[f64; 2]> {
        let rho = enc(t)?;
        Ok([mean_of(&rho, measured[0]), mean_of(&rho, measured[1])])
    };
    let jacobian = |t: [f64; 2]| -> Result<[[f64; 2]; 2]> {
        const H: f64 = 1e-6;
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let (mut a, mut b) = (t, t);
            a[k] += H;
            b[k] -= H;
            let (ma, mb) = (mu(a)?, mu(b)?);
            for i in 0..2 {
                j[i][k] = (ma[i] - mb[i]) / (2.0 * H);
            }
        }
        Ok(j)
    };
    let solve2 = |j: [[f64; 2]; 2], r: [f64; 2]| -> Option<[f64; 2]> {
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        (det.abs() > 1e-14).then(|| [(r[0] * j[1][1] - r[1] * j[0][1]) / det, (r[1] * j[0][0] - r[0] * j[1][0]) / det])
    };

    let rho_true = enc(theta_true)?;
    let j0 = jacobian(theta_true)?;
    let det0 = j0[0][0] * j0[1][1] - j0[0][1] * j0[1][0];
    if det0.abs() < 1e-8 {
        return Err(Error::Insensitive("moment Jacobian is singular at the true parameter".into()));
    }
    let nus = [nu / 2, nu - nu / 2];
    let vars: Vec<f64> = measured
        .iter()
        .map(|m| {
            let mean = mean_of(&rho_true, m);
            linalg::expect_rho(&rho_true, &(m.matrix() * m.matrix())).re - mean * mean
        })
        .collect();
    // tr J⁻¹ Σ J⁻ᵀ with Σ = diag(Var M_i / ν_i)
    let inv = [
        [j0[1][1] / det0, -j0[0][1] / det0],
        [-j0[1][0] / det0, j0[0][0] / det0],
    ];
    let mut predicted_mse = 0.0;
    for row in inv {
        for k in 0..2 {
            predicted_mse += row[k] * row[k] * vars[k] / nus[k] as f64;
        }
    }

    let meas = [Measurement::new(measured[0]), Measurement::new(measured[1])];
    let probs = [meas[0].probabilities(&rho_true), meas[1].probabilities(&rho_true)];
    let outcomes: Vec<Result<(f64, bool)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let xbar = [
                meas[0].sample_mean(&probs[0], nus[0], &mut r),
                meas[1].sample_mean(&probs[1], nus[1], &mut r),
            ];
            let mut th = theta_true;
            let mut ok = false;
            for _ in 0..50 {
                let m = mu(th)?;
                let res = [xbar[0] - m[0], xbar[1] - m[1]];
                if res[0].abs() + res[1].abs() < 1e-13 {
                    ok = true;
                    break;
                }
                let Some(dx) = solve2(jacobian(th)?, res) else { break };
                th = [th[0] + dx[0], th[1] + dx[1]];
            }
            let se = (th[0] - theta_true[0]).powi(2) + (th[1] - theta_true[1]).powi(2);
            Ok((se, !ok))
        })
        .collect();
    let mut sum = 0.0;
    let mut clamped = 0;
    for o in outcomes {
        let (se, c) = o?;
        sum += se;
        clamped += c as usize;
    }
    let empirical_mse = sum / trials as f64;
    Ok(MomSimResult {
        nu,
        trials,
        empirical_mse,
        predicted_mse,
        ratio: empirical_mse / predicted_mse,
        clamped,
    })
}
