//! Covariance matrices of observable tuples.
//!
//! The non-symmetric convention `Cov(A,B) = ⟨AB⟩ - ⟨A⟩⟨B⟩` is used throughout,
//! which makes `Γ` Hermitian but complex. `Γˢ = Re Γ` is the symmetrized
//! covariance and `Ω = Im Γ` the commutator part.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat, C64};
use crate::operators::HermitianOperator;
use crate::serial::split_rows;
use crate::states::QuantumState;

/// Eigenvalues of a valid covariance matrix may dip this far below zero.
pub const PSD_TOL: f64 = 1e-9;

fn check_dim(state: &QuantumState, op: &HermitianOperator) -> Result<()> {
    if state.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: op.dim(),
        });
    }
    Ok(())
}

/// `⟨AB⟩ - ⟨A⟩⟨B⟩`.
pub fn covariance(state: &QuantumState, a: &HermitianOperator, b: &HermitianOperator) -> Result<C64> {
    check_dim(state, a)?;
    check_dim(state, b)?;
    let ab = state.expectation_c(&(a.matrix() * b.matrix()));
    Ok(ab - C64::new(state.expectation(a) * state.expectation(b), 0.0))
}

pub fn variance(state: &QuantumState, a: &HermitianOperator) -> Result<f64> {
    Ok(covariance(state, a, a)?.re)
}

#[derive(Debug, Clone)]
pub struct CovMatrix {
    entries: CMat,
    sym: RMat,
    skew: RMat,
    trace: f64,
    det: f64,
}

impl CovMatrix {
    /// Wraps a Hermitian matrix, symmetrizing it and computing the invariants.
    pub fn from_entries(entries: CMat) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Shape("covariance matrix must be square and nonempty".into()));
        }
        let entries = linalg::hermitize(&entries);
        let m = entries.nrows();
        let sym = linalg::real_part(&entries);
        let mut skew = linalg::imag_part(&entries);
        for k in 0..m {
            skew[(k, k)] = 0.0;
        }
        let trace = (0..m).map(|k| sym[(k, k)]).sum();
        let det = if m == 2 {
            sym[(0, 0)] * sym[(1, 1)] - entries[(0, 1)].norm_sqr()
        } else {
            entries.clone().determinant().re
        };
        Ok(CovMatrix {
            entries,
            sym,
            skew,
            trace,
            det,
        })
    }

    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    /// `Γˢ = Re Γ`.
    pub fn sym(&self) -> &RMat {
        &self.sym
    }

    /// `Ω = Im Γ`.
    pub fn skew(&self) -> &RMat {
        &self.skew
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// `det Γˢ`, closed form for 2×2.
    pub fn sym_det(&self) -> f64 {
        if self.m() == 2 {
            self.sym[(0, 0)] * self.sym[(1, 1)] - self.sym[(0, 1)] * self.sym[(1, 0)]
        } else {
            self.sym.clone().determinant()
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.entries).values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    pub fn to_json(&self) -> CovJson {
        let (re, im) = split_rows(&self.entries);
        CovJson {
            m: self.m(),
            re,
            im,
            trace: self.trace,
            det: self.det,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovJson {
    pub m: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    pub trace: f64,
    pub det: f64,
}

pub fn mean_vector(state: &QuantumState, obs: &[&HermitianOperator]) -> Result<Vec<f64>> {
    obs.iter()
        .map(|o| {
            check_dim(state, o)?;
            Ok(state.expectation(o))
        })
        .collect()
}

pub fn cov_matrix(state: &QuantumState, obs: &[&HermitianOperator]) -> Result<CovMatrix> {
    if obs.len() < 2 {
        return Err(Error::Shape("covariance matrix needs at least two observables".into()));
    }
    let means = mean_vector(state, obs)?;
    let m = obs.len();
    let mut g = CMat::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let v = state.expectation_c(&(obs[j].matrix() * obs[k].matrix()))
                - C64::new(means[j] * means[k], 0.0);
            g[(j, k)] = v;
            g[(k, j)] = v.conj();
        }
    }
    CovMatrix::from_entries(g)
}

/// `Var(A)Var(B) - ¼(|⟨[A,B]⟩|² + |⟨{A,B}⟩ - 2⟨A⟩⟨B⟩|²)`.
pub fn rs_inequality_gap(state: &QuantumState, a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    let va = variance(state, a)?;
    let vb = variance(state, b)?;
    let comm = state.expectation_c(&linalg::commutator(a.matrix(), b.matrix()));
    let anti = state.expectation(&a.anticommutator(b));
    let sym = anti - 2.0 * state.expectation(a) * state.expectation(b);
    Ok(va * vb - 0.25 * (comm.norm_sqr() + sym * sym))
}

/// `L Γ Lᵀ` for a real `m' × m` matrix `L`.
pub fn transform(cov: &CovMatrix, l: &RMat) -> Result<CovMatrix> {
    if l.ncols() != cov.m() {
        return Err(Error::Shape(format!(
            "transform has {} columns, covariance is {}x{}",
            l.ncols(),
            cov.m(),
            cov.m()
        )));
    }
    let lc = l.map(|x| C64::new(x, 0.0));
    CovMatrix::from_entries(&lc * cov.entries() * lc.transpose())
}

/// `Γ(pρ₁+(1-p)ρ₂) - pΓ(ρ₁) - (1-p)Γ(ρ₂)`, which is real and PSD.
pub fn concavity_check(
    rho1: &QuantumState,
    rho2: &QuantumState,
    p: f64,
    obs: &[&HermitianOperator],
) -> Result<RMat> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("mixing weight {p} outside [0,1]")));
    }
    let mix = QuantumState::mixture(p, rho1, rho2)?;
    let g = cov_matrix(&mix, obs)?;
    let g1 = cov_matrix(rho1, obs)?;
    let g2 = cov_matrix(rho2, obs)?;
    Ok(g.sym() - g1.sym() * p - g2.sym() * (1.0 - p))
}
