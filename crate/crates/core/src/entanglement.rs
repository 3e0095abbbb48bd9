//! Covariance-based entanglement detection for two copies of `(Q, P)`.
//!
//! For separable states `Var(Q₁ - Q₂) + Var(P₁ + P₂) ≥ 2U`, where `U` is the
//! minimal pure-state `tr Γ(Q, P)`. A negative `Δ̃ = lhs - 2U` certifies
//! entanglement.

use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{cov_matrix, variance, CovMatrix};
use crate::error::{Error, Result};
use crate::linalg::{CMat, HermEigen, RMat};
use crate::operators::{CanonicalPair, HermitianOperator};
use crate::regions::min_sum_variances;
use crate::states::{thermal_from_eigen, two_mode_squeezed, QuantumState};

/// `Δ̃` must fall below `-VERDICT_TOL` for an entangled verdict.
pub const VERDICT_TOL: f64 = 1e-9;

/// Local operators `Q⊗1, P⊗1, 1⊗Q, 1⊗P`.
#[derive(Debug, Clone)]
pub struct LocalOperators {
    pub q1: HermitianOperator,
    pub p1: HermitianOperator,
    pub q2: HermitianOperator,
    pub p2: HermitianOperator,
}

impl LocalOperators {
    pub fn new(pair: &CanonicalPair) -> Self {
        let one = HermitianOperator::identity(pair.dim());
        LocalOperators {
            q1: pair.q().tensor(&one),
            p1: pair.p().tensor(&one),
            q2: one.tensor(pair.q()),
            p2: one.tensor(pair.p()),
        }
    }

    pub fn difference_q(&self) -> HermitianOperator {
        &self.q1 - &self.q2
    }

    pub fn sum_p(&self) -> HermitianOperator {
        &self.p1 + &self.p2
    }

    /// `(Q₁ - Q₂)² + (P₁ + P₂)²`.
    pub fn witness_hamiltonian(&self) -> HermitianOperator {
        &self.difference_q().square() + &self.sum_p().square()
    }
}

#[derive(Debug, Clone)]
pub struct BipartiteCov {
    /// Covariance of `(Q₁, P₁, Q₂, P₂)`.
    pub gamma_full: CovMatrix,
    pub block_a: CMat,
    pub block_b: CMat,
    pub cross: CMat,
}

impl BipartiteCov {
    pub fn assemble(&self) -> CMat {
        let mut g = CMat::zeros(4, 4);
        g.view_mut((0, 0), (2, 2)).copy_from(&self.block_a);
        g.view_mut((2, 2), (2, 2)).copy_from(&self.block_b);
        g.view_mut((0, 2), (2, 2)).copy_from(&self.cross);
        g.view_mut((2, 0), (2, 2)).copy_from(&self.cross.adjoint());
        g
    }

    /// `wᵀ Γˢ w`, the variance of `Σ wᵢ Rᵢ` for real weights.
    pub fn quadratic_form(&self, w: [f64; 4]) -> f64 {
        let v = RMat::from_column_slice(4, 1, &w);
        (v.transpose() * self.gamma_full.sym() * v)[(0, 0)]
    }

    /// `Var(Q₁ - Q₂) + Var(P₁ + P₂)` contracted from the 4×4 matrix.
    pub fn witness_lhs(&self) -> f64 {
        self.quadratic_form([1.0, 0.0, -1.0, 0.0]) + self.quadratic_form([0.0, 1.0, 0.0, 1.0])
    }
}

fn check_bipartite(state: &QuantumState, d: usize) -> Result<()> {
    if state.dim() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            got: state.dim(),
        });
    }
    if let Ok((a, b)) = state.bipartite_dims() {
        if a != d || b != d {
            return Err(Error::Shape(format!("state is {a}x{b}, expected {d}x{d}")));
        }
    }
    Ok(())
}

pub fn bipartite_cov(state: &QuantumState, pair: &CanonicalPair) -> Result<BipartiteCov> {
    let ops = LocalOperators::new(pair);
    bipartite_cov_with(state, pair.dim(), &ops)
}

fn bipartite_cov_with(state: &QuantumState, d: usize, ops: &LocalOperators) -> Result<BipartiteCov> {
    check_bipartite(state, d)?;
    let gamma_full = cov_matrix(state, &[&ops.q1, &ops.p1, &ops.q2, &ops.p2])?;
    let e = gamma_full.entries();
    Ok(BipartiteCov {
        block_a: e.view((0, 0), (2, 2)).into_owned(),
        block_b: e.view((2, 2), (2, 2)).into_owned(),
        cross: e.view((0, 2), (2, 2)).into_owned(),
        gamma_full,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Entangled,
    Undetected,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Entangled => "entangled",
            Verdict::Undetected => "undetected",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessResult {
    /// `Var(Q₁ - Q₂) + Var(P₁ + P₂)` from the sum and difference operators.
    pub lhs: f64,
    /// The same quantity contracted from the 4×4 covariance matrix.
    pub lhs_from_blocks: f64,
    pub bound: f64,
    pub delta_tilde: f64,
    pub verdict: Verdict,
}

/// Duan-like witness for one dimension, with `U` computed once.
#[derive(Debug, Clone)]
pub struct DuanWitness {
    dim: usize,
    u: f64,
    ops: LocalOperators,
    diff_q: HermitianOperator,
    sum_p: HermitianOperator,
}

impl DuanWitness {
    pub fn new(pair: &CanonicalPair) -> Result<Self> {
        let u = min_sum_variances(pair, 64, 1e-12)?.value;
        Ok(Self::with_bound(pair, u))
    }

    /// Uses a known value of `U = τ_min`.
    pub fn with_bound(pair: &CanonicalPair, u: f64) -> Self {
        let ops = LocalOperators::new(pair);
        DuanWitness {
            dim: pair.dim(),
            u,
            diff_q: ops.difference_q(),
            sum_p: ops.sum_p(),
            ops,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn bound(&self) -> f64 {
        2.0 * self.u
    }

    pub fn hamiltonian(&self) -> HermitianOperator {
        self.ops.witness_hamiltonian()
    }

    pub fn evaluate(&self, state: &QuantumState) -> Result<WitnessResult> {
        check_bipartite(state, self.dim)?;
        let lhs = variance(state, &self.diff_q)? + variance(state, &self.sum_p)?;
        let lhs_from_blocks = bipartite_cov_with(state, self.dim, &self.ops)?.witness_lhs();
        let delta_tilde = lhs - self.bound();
        Ok(WitnessResult {
            lhs,
            lhs_from_blocks,
            bound: self.bound(),
            delta_tilde,
            verdict: if delta_tilde < -VERDICT_TOL {
                Verdict::Entangled
            } else {
                Verdict::Undetected
            },
        })
    }
}

pub fn duan_witness(state: &QuantumState, pair: &CanonicalPair) -> Result<WitnessResult> {
    DuanWitness::new(pair)?.evaluate(state)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TemperatureGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
}

impl Default for TemperatureGrid {
    fn default() -> Self {
        TemperatureGrid {
            t_min: 0.05,
            t_max: 3.0,
            step: 0.05,
        }
    }
}

impl TemperatureGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.t_min > 0.0) || !(self.t_max >= self.t_min) {
            return Err(Error::InvalidParameter(format!(
                "temperature grid needs 0 < t_min <= t_max and step > 0 (got {:?})",
                self
            )));
        }
        let n = ((self.t_max - self.t_min) / self.step + 1e-9).floor() as usize;
        // round away accumulated binary error so 2.05 prints as 2.05
        Ok((0..=n)
            .map(|k| ((self.t_min + k as f64 * self.step) * 1e12).round() / 1e12)
            .collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermalPoint {
    pub temperature: f64,
    pub delta_tilde: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermalScan {
    pub dim: usize,
    /// Largest grid temperature with an entangled verdict.
    pub threshold: Option<f64>,
    pub points: Vec<ThermalPoint>,
}

/// Scans thermal states of `(Q₁ - Q₂)² + (P₁ + P₂)²` over the grid.
pub fn thermal_scan(witness: &DuanWitness, grid: &TemperatureGrid) -> Result<ThermalScan> {
    let temps = grid.points()?;
    let eig: HermEigen = witness.hamiltonian().eigen();
    let d = witness.dim();
    let points = temps
        .par_iter()
        .map(|&t| {
            let state = thermal_from_eigen(&eig, t)?.with_dims(d, d)?;
            let w = witness.evaluate(&state)?;
            Ok(ThermalPoint {
                temperature: t,
                delta_tilde: w.delta_tilde,
                verdict: w.verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let threshold = points
        .iter()
        .filter(|p| p.verdict == Verdict::Entangled)
        .map(|p| p.temperature)
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))));
    Ok(ThermalScan { dim: d, threshold, points })
}

pub fn thermal_threshold(pair: &CanonicalPair, grid: &TemperatureGrid) -> Result<Option<f64>> {
    Ok(thermal_scan(&DuanWitness::new(pair)?, grid)?.threshold)
}

#[derive(Debug, Clone, Serialize)]
pub struct SqueezingPoint {
    pub dim: usize,
    pub a: f64,
    pub b: f64,
    pub delta_tilde: f64,
}

/// `Δ̃` of two-mode squeezed states along a list of `b` values.
pub fn squeezing_scan(witness: &DuanWitness, a: f64, bs: &[f64]) -> Result<Vec<SqueezingPoint>> {
    let d = witness.dim();
    bs.par_iter()
        .map(|&b| {
            let w = witness.evaluate(&two_mode_squeezed(d, a, b)?)?;
            Ok(SqueezingPoint {
                dim: d,
                a,
                b,
                delta_tilde: w.delta_tilde,
            })
        })
        .collect()
}
