//! Minimum-uncertainty states of an observable pair `(A, B)`.
//!
//! Pure states saturating the Robertson–Schrödinger inequality with
//! `Var(A) > 0` are the eigenvectors of the non-normal operator
//! `L(λ) = λA + iB`, `Re λ > 0`, with eigenvalue `z = λ⟨A⟩ + i⟨B⟩`.

use serde::Serialize;

use crate::covariance::rs_inequality_gap;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, I};
use crate::operators::HermitianOperator;
use crate::states::QuantumState;

/// Residual bound for accepting an eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Variances below this mark an (approximate) eigenstate of the observable.
pub const EIGENSTATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct MinUncSolution {
    pub lambda: C64,
    pub eigenvalue_z: C64,
    pub state: QuantumState,
    pub var_a: f64,
    pub var_b: f64,
    /// `Re Cov(A, B)`.
    pub cov_ab: f64,
    /// `⟨C⟩` with `C = -(i/2)[A, B]`.
    pub commutator_expectation: f64,
    /// `‖(L - z)ψ‖`.
    pub residual: f64,
    /// The eigenvalue belongs to a cluster with fewer independent eigenvectors than its multiplicity.
    pub defective: bool,
    pub eigenstate_of_a: bool,
    pub eigenstate_of_b: bool,
}

#[derive(Debug, Clone)]
pub struct MinUncReport {
    pub lambda: C64,
    pub solutions: Vec<MinUncSolution>,
    /// Eigenvectors dropped because `⟨C⟩ < 0`.
    pub discarded: usize,
    pub defective_clusters: usize,
}

fn check_pair(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// `λA + iB`.
pub fn ladder_operator(a: &HermitianOperator, b: &HermitianOperator, lambda: C64) -> CMat {
    a.matrix() * lambda + b.matrix() * I
}

/// Orthonormal basis of the numerical null space of `m` and the count of
/// singular values below `tol`.
fn null_space(m: &CMat, tol: f64) -> Vec<CVec> {
    let n = m.nrows();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut out = Vec::new();
    for k in 0..n {
        if svd.singular_values[k] < tol {
            out.push(v_t.row(k).adjoint());
        }
    }
    out
}

fn smallest_singular_vector(m: &CMat) -> CVec {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let k = (0..m.nrows())
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .unwrap_or(0);
    v_t.row(k).adjoint()
}

/// One step of inverse iteration with a small shift off `z`.
fn polish(l: &CMat, z: C64, v: &CVec, scale: f64) -> CVec {
    let n = l.nrows();
    let shift = z + C64::new(1e-10 * scale, 1e-10 * scale);
    let m = l - CMat::identity(n, n) * shift;
    match m.lu().solve(v) {
        Some(w) if w.norm() > 0.0 && w.iter().all(|x| x.is_finite()) => w.normalize(),
        _ => v.clone(),
    }
}

pub fn solve_minunc(a: &HermitianOperator, b: &HermitianOperator, lambda: C64) -> Result<MinUncReport> {
    check_pair(a, b)?;
    if !(lambda.re > 0.0) || !lambda.im.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Re λ must be positive (got {lambda}); the boundary cases are the eigenstates of A and of B"
        )));
    }
    let n = a.dim();
    let l = ladder_operator(a, b, lambda);
    let scale = linalg::max_abs(&l).max(1.0);
    let eigs: Vec<C64> = l
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::NonInvertible("Schur decomposition failed".into()))?
        .iter()
        .copied()
        .collect();

    // group numerically coincident eigenvalues
    let cluster_tol = 1e-7 * scale;
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for z in eigs {
        match clusters.iter_mut().find(|(c, _)| (*c - z).norm() < cluster_tol) {
            Some(entry) => entry.1 += 1,
            None => clusters.push((z, 1)),
        }
    }
    // a Jordan block of size k splits by ~ε^(1/k); its pieces share one eigenvector
    let mut merged: Vec<(C64, usize, CVec)> = Vec::new();
    for (z, mult) in clusters {
        let v = smallest_singular_vector(&(&l - CMat::identity(n, n) * z));
        match merged
            .iter_mut()
            .find(|(c, _, u)| (*c - z).norm() < 1e-3 * scale && u.dotc(&v).norm() > 1.0 - 1e-6)
        {
            Some(entry) => {
                let total = (entry.1 + mult) as f64;
                entry.0 = (entry.0 * entry.1 as f64 + z * mult as f64) / total;
                entry.1 += mult;
            }
            None => merged.push((z, mult, v)),
        }
    }
    let mut clusters: Vec<(C64, usize)> = merged.into_iter().map(|(z, m, _)| (z, m)).collect();
    clusters.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));

    let c_op = &a.commutator_i(b) * 0.5;
    let mut solutions = Vec::new();
    let mut discarded = 0;
    let mut defective_clusters = 0;
    for (z, mult) in clusters {
        let shifted = &l - CMat::identity(n, n) * z;
        let mut basis = null_space(&shifted, 1e-6 * scale);
        if basis.is_empty() {
            basis = null_space(&shifted, 1e-4 * scale).into_iter().take(1).collect();
        }
        let defective = basis.len() < mult;
        if defective {
            defective_clusters += 1;
        }
        if mult == 1 {
            basis = basis.into_iter().take(1).map(|v| polish(&l, z, &v, scale)).collect();
        }
        for v in basis {
            let mut psi = v.normalize();
            linalg::fix_phase(&mut psi);
            let state = QuantumState::from_vector(psi.clone())?;
            let zq = linalg::expect_vec(&psi, &l);
            let residual = (&l * &psi - &psi * zq).norm();
            let commutator_expectation = state.expectation(&c_op);
            if commutator_expectation < -1e-12 {
                discarded += 1;
                continue;
            }
            let mean_a = state.expectation(a);
            let mean_b = state.expectation(b);
            let var_a = state.expectation(&a.square()) - mean_a * mean_a;
            let var_b = state.expectation(&b.square()) - mean_b * mean_b;
            let cov_ab = 0.5 * state.expectation(&a.anticommutator(b)) - mean_a * mean_b;
            solutions.push(MinUncSolution {
                lambda,
                eigenvalue_z: zq,
                state,
                var_a,
                var_b,
                cov_ab,
                commutator_expectation,
                residual,
                defective,
                eigenstate_of_a: var_a < EIGENSTATE_TOL,
                eigenstate_of_b: var_b < EIGENSTATE_TOL,
            });
        }
    }
    Ok(MinUncReport {
        lambda,
        solutions,
        discarded,
        defective_clusters,
    })
}

/// `‖λ(A - ⟨A⟩)ψ - i(B - ⟨B⟩)ψ‖` for a pure state.
pub fn parallelism_residual(state: &QuantumState, a: &HermitianOperator, b: &HermitianOperator, lambda: C64) -> Result<f64> {
    check_pair(a, b)?;
    let psi = state.pure_vector()?;
    let pa = a.matrix() * &psi - &psi * C64::new(state.expectation(a), 0.0);
    let pb = b.matrix() * &psi - &psi * C64::new(state.expectation(b), 0.0);
    // (λA + iB - z)ψ = λ(A-⟨A⟩)ψ + i(B-⟨B⟩)ψ; the sign on B follows the eigenproblem
    Ok((pa * lambda + pb * I).norm())
}

pub fn verify_parallelism(solution: &MinUncSolution, a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    parallelism_residual(&solution.state, a, b, solution.lambda)
}

/// `Var(A)Var(B) - |Cov|²` style saturation gap for a solution.
pub fn saturation_gap(solution: &MinUncSolution, a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    rs_inequality_gap(&solution.state, a, b)
}

/// Residuals of the two scalar relations quoted for saturating states,
/// `Var B - |λ|² Var A = -iλ Re X` and `Var B + |λ|² Var A = λ Im X`,
/// with `X = Cov(B, A) = ⟨BA⟩ - ⟨B⟩⟨A⟩`. Reported, not enforced.
pub fn scalar_relation_residuals(solution: &MinUncSolution) -> (f64, f64) {
    let l = solution.lambda;
    let x = C64::new(solution.cov_ab, -solution.commutator_expectation);
    let l2 = l.norm_sqr();
    let first = C64::new(solution.var_b - l2 * solution.var_a, 0.0) + I * l * x.re;
    let second = C64::new(solution.var_b + l2 * solution.var_a, 0.0) - l * x.im;
    (first.norm(), second.norm())
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionJson {
    pub z: [f64; 2],
    pub var_a: f64,
    pub var_b: f64,
    pub cov_ab: f64,
    pub commutator_expectation: f64,
    pub residual: f64,
    pub defective: bool,
    pub eigenstate_of_a: bool,
    pub eigenstate_of_b: bool,
    pub state: crate::states::StateJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportJson {
    pub lambda: [f64; 2],
    pub discarded: usize,
    pub defective_clusters: usize,
    pub solutions: Vec<SolutionJson>,
}

impl MinUncReport {
    pub fn to_json(&self) -> ReportJson {
        ReportJson {
            lambda: [self.lambda.re, self.lambda.im],
            discarded: self.discarded,
            defective_clusters: self.defective_clusters,
            solutions: self
                .solutions
                .iter()
                .map(|s| SolutionJson {
                    z: [s.eigenvalue_z.re, s.eigenvalue_z.im],
                    var_a: s.var_a,
                    var_b: s.var_b,
                    cov_ab: s.cov_ab,
                    commutator_expectation: s.commutator_expectation,
                    residual: s.residual,
                    defective: s.defective,
                    eigenstate_of_a: s.eigenstate_of_a,
                    eigenstate_of_b: s.eigenstate_of_b,
                    state: s.state.to_json(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::build_canonical_pair;

    #[test]
    fn nonpositive_real_part_rejected() {
        let pair = build_canonical_pair(3).unwrap();
        for l in [C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(f64::NAN, 0.0)] {
            assert!(matches!(
                solve_minunc(pair.q(), pair.p(), l),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = build_canonical_pair(3).unwrap();
        let b = build_canonical_pair(4).unwrap();
        assert!(solve_minunc(a.q(), b.p(), C64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn commuting_pair_is_flagged_as_eigenstates() {
        let pair = build_canonical_pair(3).unwrap();
        let q2 = pair.q().square();
        let report = solve_minunc(pair.q(), &q2, C64::new(1.0, 0.0)).unwrap();
        assert_eq!(report.solutions.len(), 3);
        assert!(report.solutions.iter().all(|s| s.eigenstate_of_a && s.eigenstate_of_b));
    }
}
