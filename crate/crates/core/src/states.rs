//! Pure and mixed states, the rank-k factor parametrization `ρ = AA†/tr(AA†)`,
//! and the named state families (discrete vacuum and squeezed states in d=3,
//! two-mode squeezed analogues, the maximally entangled state, thermal states).
//!
//! Bipartite states use the composite index `i = k₁·d + k₂`, where `k` is the
//! 0-based position of a label in the ascending symmetric label set.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, HermEigen, C64};
use crate::operators::{symmetric_labels, HermitianOperator, UnitaryOperator};
use crate::serial::{join_vec, split_rows, split_vec, MatrixJson};

/// States with `tr ρ² > 1 - PURITY_TOL` are treated as pure.
pub const PURITY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
enum Repr {
    Pure(CVec),
    Factor(CMat),
    Density,
}

#[derive(Debug, Clone)]
pub struct QuantumState {
    dims: Vec<usize>,
    repr: Repr,
    rho: CMat,
}

impl QuantumState {
    /// Pure state from an unnormalized vector.
    pub fn from_vector(v: CVec) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroFactor);
        }
        let psi = v / C64::new(n, 0.0);
        let rho = &psi * psi.adjoint();
        Ok(QuantumState {
            dims: vec![psi.len()],
            repr: Repr::Pure(psi),
            rho,
        })
    }

    /// `ρ = AA† / tr(AA†)` for a `d × k` factor.
    pub fn from_factor(a: CMat) -> Result<Self> {
        let norm2 = a.norm_squared();
        if norm2 == 0.0 || !norm2.is_finite() {
            return Err(Error::ZeroFactor);
        }
        if a.ncols() == 1 {
            return Self::from_vector(a.column(0).into_owned());
        }
        let a = a / C64::new(norm2.sqrt(), 0.0);
        let rho = linalg::hermitize(&(&a * a.adjoint()));
        Ok(QuantumState {
            dims: vec![a.nrows()],
            repr: Repr::Factor(a),
            rho,
        })
    }

    /// Density matrix; must be Hermitian PSD (to -1e-10) with unit trace (to 1e-10).
    pub fn from_density(rho: CMat) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::Shape("density matrix must be square".into()));
        }
        let rho = linalg::hermitize(&rho);
        let tr = linalg::trace(&rho).re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("density trace {tr} != 1")));
        }
        let min = linalg::eigh(&rho).min();
        if min < -PSD_TOL {
            return Err(Error::InvalidParameter(format!(
                "density has negative eigenvalue {min:e}"
            )));
        }
        Ok(QuantumState {
            dims: vec![rho.nrows()],
            repr: Repr::Density,
            rho: rho / C64::new(tr, 0.0),
        })
    }

    /// Tags the state as bipartite with local dimensions `d_a × d_b`.
    pub fn with_dims(mut self, d_a: usize, d_b: usize) -> Result<Self> {
        if d_a * d_b != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: d_a * d_b,
            });
        }
        self.dims = vec![d_a, d_b];
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Local dimensions: one entry for single systems, two for bipartite.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn is_bipartite(&self) -> bool {
        self.dims.len() == 2
    }

    pub fn density(&self) -> &CMat {
        &self.rho
    }

    /// State vector for states built from a vector or a rank-1 factor.
    pub fn vector(&self) -> Option<&CVec> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            _ => None,
        }
    }

    pub fn factor(&self) -> Option<&CMat> {
        match &self.repr {
            Repr::Factor(a) => Some(a),
            _ => None,
        }
    }

    pub fn rank_hint(&self) -> usize {
        match &self.repr {
            Repr::Pure(_) => 1,
            Repr::Factor(a) => a.ncols(),
            Repr::Density => self.dim(),
        }
    }

    pub fn purity(&self) -> f64 {
        match &self.repr {
            Repr::Pure(_) => 1.0,
            _ => linalg::expect_rho(&self.rho, &self.rho).re,
        }
    }

    pub fn is_pure(&self) -> bool {
        self.purity() > 1.0 - PURITY_TOL
    }

    /// A unit vector representing the state if it is pure.
    pub fn pure_vector(&self) -> Result<CVec> {
        if let Repr::Pure(v) = &self.repr {
            return Ok(v.clone());
        }
        let p = self.purity();
        if p <= 1.0 - PURITY_TOL {
            return Err(Error::NotPure(p));
        }
        let eig = linalg::eigh(&self.rho);
        Ok(eig.vector(self.dim() - 1))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.rho).values
    }

    pub fn expectation(&self, op: &HermitianOperator) -> f64 {
        self.expectation_c(op.matrix()).re
    }

    /// `tr(ρ M)` for an arbitrary (not necessarily Hermitian) matrix.
    pub fn expectation_c(&self, m: &CMat) -> C64 {
        match &self.repr {
            Repr::Pure(v) => linalg::expect_vec(v, m),
            _ => linalg::expect_rho(&self.rho, m),
        }
    }

    pub fn evolve(&self, u: &UnitaryOperator) -> Result<Self> {
        let out = match &self.repr {
            Repr::Pure(v) => Self::from_vector(u.apply(v))?,
            Repr::Factor(a) => Self::from_factor(u.matrix() * a)?,
            Repr::Density => Self::from_density(u.matrix() * &self.rho * u.matrix().adjoint())?,
        };
        Ok(QuantumState {
            dims: self.dims.clone(),
            ..out
        })
    }

    /// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`; reduces to overlaps for pure inputs.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(match (&self.repr, &other.repr) {
            (Repr::Pure(a), Repr::Pure(b)) => a.dotc(b).norm_sqr(),
            (Repr::Pure(a), _) => linalg::expect_vec(a, &other.rho).re,
            (_, Repr::Pure(b)) => linalg::expect_vec(b, &self.rho).re,
            _ => {
                let sqrt_rho = linalg::hermitian_function(&self.rho, |x| {
                    C64::new(x.max(0.0).sqrt(), 0.0)
                });
                let inner = &sqrt_rho * &other.rho * &sqrt_rho;
                let tr: f64 = linalg::eigh(&inner)
                    .values
                    .iter()
                    .map(|x| x.max(0.0).sqrt())
                    .sum();
                tr * tr
            }
        })
    }

    /// `½‖ρ - σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        let diff = &self.rho - &other.rho;
        Ok(0.5 * linalg::eigh(&diff).values.iter().map(|x| x.abs()).sum::<f64>())
    }

    /// Reduced state of the first party.
    pub fn reduced_first(&self) -> Result<Self> {
        let (da, db) = self.bipartite_dims()?;
        let rho = CMat::from_fn(da, da, |i, j| {
            (0..db).map(|k| self.rho[(i * db + k, j * db + k)]).sum()
        });
        Self::from_density(rho)
    }

    pub fn bipartite_dims(&self) -> Result<(usize, usize)> {
        match self.dims.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(Error::Shape("state is not bipartite".into())),
        }
    }

    /// `ρ_A ⊗ ρ_B`.
    pub fn product(a: &Self, b: &Self) -> Result<Self> {
        let (da, db) = (a.dim(), b.dim());
        let out = match (&a.repr, &b.repr) {
            (Repr::Pure(x), Repr::Pure(y)) => Self::from_vector(CVec::from_fn(da * db, |i, _| {
                x[i / db] * y[i % db]
            }))?,
            _ => Self::from_density(linalg::kron(&a.rho, &b.rho))?,
        };
        out.with_dims(da, db)
    }

    /// `p ρ₁ + (1-p) ρ₂`.
    pub fn mixture(p: f64, a: &Self, b: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("mixing weight {p} outside [0,1]")));
        }
        a.check_same_dim(b)?;
        let rho = &a.rho * C64::new(p, 0.0) + &b.rho * C64::new(1.0 - p, 0.0);
        let mut out = Self::from_density(rho)?;
        out.dims = a.dims.clone();
        Ok(out)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> StateJson {
        let (re, im) = match &self.repr {
            Repr::Pure(v) => {
                let (re, im) = split_vec(v);
                (Amplitudes::Vector(re), Amplitudes::Vector(im))
            }
            _ => {
                let (re, im) = split_rows(&self.rho);
                (Amplitudes::Matrix(re), Amplitudes::Matrix(im))
            }
        };
        StateJson {
            dims: self.is_bipartite().then(|| self.dims.clone()),
            re,
            im,
        }
    }

    pub fn from_json(json: &StateJson) -> Result<Self> {
        let state = match (&json.re, &json.im) {
            (Amplitudes::Vector(re), Amplitudes::Vector(im)) => Self::from_vector(join_vec(re, im)?)?,
            (Amplitudes::Matrix(re), Amplitudes::Matrix(im)) => {
                let m = MatrixJson {
                    dim: re.len(),
                    re: re.clone(),
                    im: im.clone(),
                };
                Self::from_density(m.to_matrix()?)?
            }
            _ => return Err(Error::Shape("re and im must both be vectors or matrices".into())),
        };
        match json.dims.as_deref() {
            None => Ok(state),
            Some([a, b]) => state.with_dims(*a, *b),
            Some(other) => Err(Error::Shape(format!("dims must have two entries, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitudes {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    pub re: Amplitudes,
    pub im: Amplitudes,
}

fn real_vector(xs: &[f64]) -> CVec {
    CVec::from_iterator(xs.len(), xs.iter().map(|&x| C64::new(x, 0.0)))
}

/// Zero-eigenvalue eigenvector of `Q + iP` in d=3, `(1, 1+√3, 1)/√(6+2√3)`.
pub fn vacuum_d3() -> QuantumState {
    let s3 = 3f64.sqrt();
    QuantumState::from_vector(real_vector(&[1.0, 1.0 + s3, 1.0])).expect("nonzero vector")
}

/// Rotation angle of the d=3 squeezing family, `α = √2·π·ξ/(3√3)`.
pub fn squeezing_angle_d3(xi: f64) -> f64 {
    2f64.sqrt() * PI * xi / (3.0 * 3f64.sqrt())
}

/// `e^{-iξK}|0_A⟩` in d=3 from its closed form `(x(α), y(α), x(α))`.
pub fn squeezed_d3(xi: f64) -> Result<QuantumState> {
    if !xi.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite squeezing {xi}")));
    }
    let s3 = 3f64.sqrt();
    let alpha = squeezing_angle_d3(xi);
    let (s, c) = alpha.sin_cos();
    let x = c + 2f64.sqrt() * (1.0 + s3) / 2.0 * s;
    let y = (1.0 + s3) * c - 2f64.sqrt() * s;
    QuantumState::from_vector(real_vector(&[x, y, x]))
}

/// Discrete two-mode squeezed state with amplitudes
/// `exp(-(π/d)(a(n₁-n₂)² + (n₁+n₂)²/b))` over symmetric labels.
pub fn two_mode_squeezed(d: usize, a: f64, b: f64) -> Result<QuantumState> {
    if d < 2 {
        return Err(Error::Dimension(d, usize::MAX));
    }
    if b == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "two-mode squeezing needs finite a and nonzero finite b (a={a}, b={b})"
        )));
    }
    let labels = symmetric_labels(d);
    let k = PI / d as f64;
    let v = CVec::from_fn(d * d, |i, _| {
        let (n1, n2) = (labels[i / d], labels[i % d]);
        let diff = n1 - n2;
        let sum = n1 + n2;
        C64::new((-k * (a * diff * diff + sum * sum / b)).exp(), 0.0)
    });
    QuantumState::from_vector(v)?.with_dims(d, d)
}

/// `|Φ⟩ = Σ_n |n, n⟩ / √d`.
pub fn max_entangled(d: usize) -> Result<QuantumState> {
    if d < 2 {
        return Err(Error::Dimension(d, usize::MAX));
    }
    let v = CVec::from_fn(d * d, |i, _| {
        if i / d == i % d {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    QuantumState::from_vector(v)?.with_dims(d, d)
}

/// `e^{-H/T} / Z`, with the ground energy shifted out before exponentiating.
pub fn thermal_state(h: &HermitianOperator, temperature: f64) -> Result<QuantumState> {
    thermal_from_eigen(&h.eigen(), temperature)
}

/// Thermal state from a precomputed eigendecomposition of the Hamiltonian.
pub fn thermal_from_eigen(eig: &HermEigen, temperature: f64) -> Result<QuantumState> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let e0 = eig.min();
    let weights: Vec<f64> = eig.values.iter().map(|&e| (-(e - e0) / temperature).exp()).collect();
    let z: f64 = weights.iter().sum();
    let n = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for k in 0..n {
        let w = C64::new(weights[k] / z, 0.0);
        for r in 0..n {
            scaled[(r, k)] *= w;
        }
    }
    QuantumState::from_density(scaled * eig.vectors.adjoint())
}

/// Named state families with their parameters.
#[derive(Debug, Clone)]
pub enum StateFamily {
    Vacuum3,
    Squeezed3 { xi: f64 },
    TwoModeSqueezed { d: usize, a: f64, b: f64 },
    MaxEntangled { d: usize },
    Thermal { temperature: f64, hamiltonian: HermitianOperator },
}

impl StateFamily {
    pub fn build(&self) -> Result<QuantumState> {
        match self {
            StateFamily::Vacuum3 => Ok(vacuum_d3()),
            StateFamily::Squeezed3 { xi } => squeezed_d3(*xi),
            StateFamily::TwoModeSqueezed { d, a, b } => two_mode_squeezed(*d, *a, *b),
            StateFamily::MaxEntangled { d } => max_entangled(*d),
            StateFamily::Thermal {
                temperature,
                hamiltonian,
            } => thermal_state(hamiltonian, *temperature),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_factor_rejected() {
        assert!(matches!(
            QuantumState::from_factor(CMat::zeros(3, 2)),
            Err(Error::ZeroFactor)
        ));
    }

    #[test]
    fn basis_factor_gives_projector() {
        let mut a = CMat::zeros(3, 1);
        a[(0, 0)] = C64::new(1.0, 0.0);
        let s = QuantumState::from_factor(a).unwrap();
        assert!((s.density()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(s.is_pure());
    }

    #[test]
    fn thermal_rejects_nonpositive_temperature() {
        let h = HermitianOperator::identity(2);
        assert!(thermal_state(&h, 0.0).is_err());
        assert!(thermal_state(&h, -1.0).is_err());
    }

    #[test]
    fn two_mode_rejects_zero_b() {
        assert!(two_mode_squeezed(3, 1.0, 0.0).is_err());
    }

    #[test]
    fn mixture_rejects_bad_weight() {
        let v = vacuum_d3();
        assert!(QuantumState::mixture(1.5, &v, &v).is_err());
    }

    #[test]
    fn json_round_trip_bipartite() {
        let s = max_entangled(2).unwrap();
        let text = serde_json::to_string(&s.to_json()).unwrap();
        let back = QuantumState::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.dims(), &[2, 2]);
        assert!((back.fidelity(&s).unwrap() - 1.0).abs() < 1e-14);
    }
}
