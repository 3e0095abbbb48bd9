//! The finite canonical pair `(Q, P)`, the Fourier matrix linking them, the
//! quadratic observables built from them and the discrete Weyl displacements.
//!
//! Basis labels run over the symmetric set `n = -(d-1)/2, ..., (d-1)/2` in unit
//! steps, so they are half-integers for even `d`. The Fourier matrix uses the
//! same labels: `F[j][k] = ω^{jk} / √d` with `ω = e^{2πi/d}`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, HermEigen, C64, I};
use crate::serial::MatrixJson;

/// Largest single-system dimension accepted unless a caller raises the cap.
pub const DEFAULT_MAX_DIM: usize = 64;

const UNITARY_TOL: f64 = 1e-12;

/// Dense Hermitian matrix. Hermiticity is exact: every constructor symmetrizes.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMat,
}

impl HermitianOperator {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() < 2 {
            return Err(Error::Shape("operator dimension must be at least 2".into()));
        }
        Ok(Self::from_raw(matrix))
    }

    pub(crate) fn from_raw(matrix: CMat) -> Self {
        HermitianOperator {
            matrix: linalg::hermitize(&matrix),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            matrix: CMat::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn eigen(&self) -> HermEigen {
        linalg::eigh(&self.matrix)
    }

    pub fn square(&self) -> Self {
        Self::from_raw(&self.matrix * &self.matrix)
    }

    /// `AB + BA`.
    pub fn anticommutator(&self, other: &Self) -> Self {
        Self::from_raw(&self.matrix * &other.matrix + &other.matrix * &self.matrix)
    }

    /// `-i[A, B]`, which is Hermitian.
    pub fn commutator_i(&self, other: &Self) -> Self {
        Self::from_raw(linalg::commutator(&self.matrix, &other.matrix) * (-I))
    }

    /// `A ⊗ B`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_raw(linalg::kron(&self.matrix, &other.matrix))
    }

    /// `A - c·1`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.matrix.clone();
        for k in 0..m.nrows() {
            m[(k, k)] -= C64::new(c, 0.0);
        }
        Self::from_raw(m)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.matrix)
    }

    pub fn from_json(json: &MatrixJson) -> Result<Self> {
        Self::new(json.to_matrix()?)
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: Self) -> HermitianOperator {
        HermitianOperator::from_raw(&self.matrix + &rhs.matrix)
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: Self) -> HermitianOperator {
        HermitianOperator::from_raw(&self.matrix - &rhs.matrix)
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        HermitianOperator::from_raw(-&self.matrix)
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        HermitianOperator::from_raw(&self.matrix * C64::new(rhs, 0.0))
    }
}

/// Dense unitary matrix, checked to `UU† = 1` within 1e-12 on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    matrix: CMat,
}

impl UnitaryOperator {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape("unitary must be square".into()));
        }
        let dev = unitarity_defect(&matrix);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(UnitaryOperator { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryOperator {
            matrix: CMat::identity(dim, dim),
        }
    }

    /// `e^{i s H}` through the spectral decomposition of `H`.
    pub fn exp_i(h: &HermitianOperator, s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite exponent {s}")));
        }
        Self::new(linalg::hermitian_function(h.matrix(), |x| {
            C64::from_polar(1.0, s * x)
        }))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        UnitaryOperator {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        UnitaryOperator {
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = CMat::identity(self.dim(), self.dim());
        for _ in 0..k {
            out = &out * &self.matrix;
        }
        UnitaryOperator { matrix: out }
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.matrix * v
    }

    /// `U H U†`.
    pub fn conjugate(&self, h: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::from_raw(&self.matrix * h.matrix() * self.matrix.adjoint())
    }

    pub fn determinant(&self) -> C64 {
        self.matrix.clone().determinant()
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.matrix)
    }
}

fn unitarity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    linalg::max_abs(&(m * m.adjoint() - CMat::identity(n, n)))
}

/// The Fourier-conjugate pair `(Q, P = F Q F†)` in dimension `d`.
#[derive(Debug, Clone)]
pub struct CanonicalPair {
    dim: usize,
    q: HermitianOperator,
    p: HermitianOperator,
    fourier: UnitaryOperator,
    labels: Vec<f64>,
}

impl CanonicalPair {
    pub fn new(d: usize) -> Result<Self> {
        build_canonical_pair(d)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> &HermitianOperator {
        &self.q
    }

    pub fn p(&self) -> &HermitianOperator {
        &self.p
    }

    pub fn fourier(&self) -> &UnitaryOperator {
        &self.fourier
    }

    /// Spectral labels `n`, ascending.
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `√(2π/d)`, the spacing of the spectrum of `Q` and `P`.
    pub fn scale(&self) -> f64 {
        spectral_scale(self.dim)
    }

    /// Largest eigenvalue of `Q` (and of `P`).
    pub fn spectral_radius(&self) -> f64 {
        self.scale() * (self.dim as f64 - 1.0) / 2.0
    }
}

pub fn spectral_scale(d: usize) -> f64 {
    (2.0 * PI / d as f64).sqrt()
}

pub fn symmetric_labels(d: usize) -> Vec<f64> {
    (0..d).map(|k| k as f64 - (d as f64 - 1.0) / 2.0).collect()
}

pub fn build_canonical_pair(d: usize) -> Result<CanonicalPair> {
    build_canonical_pair_capped(d, DEFAULT_MAX_DIM)
}

pub fn build_canonical_pair_capped(d: usize, max_dim: usize) -> Result<CanonicalPair> {
    if d < 2 || d > max_dim {
        return Err(Error::Dimension(d, max_dim));
    }
    let labels = symmetric_labels(d);
    let scale = spectral_scale(d);
    let q = CMat::from_diagonal(&CVec::from_iterator(
        d,
        labels.iter().map(|&n| C64::new(scale * n, 0.0)),
    ));
    let norm = 1.0 / (d as f64).sqrt();
    let f = CMat::from_fn(d, d, |j, k| {
        C64::from_polar(norm, 2.0 * PI * labels[j] * labels[k] / d as f64)
    });
    let fourier = UnitaryOperator::new(f)?;
    let q = HermitianOperator::from_raw(q);
    let p = fourier.conjugate(&q);
    Ok(CanonicalPair {
        dim: d,
        q,
        p,
        fourier,
        labels,
    })
}

/// Entry-wise closed form of `P` in the position basis.
pub fn momentum_closed_form(d: usize) -> CMat {
    let labels = symmetric_labels(d);
    let scale = spectral_scale(d);
    CMat::from_fn(d, d, |k, l| {
        if k == l {
            return C64::new(0.0, 0.0);
        }
        let m = labels[k] - labels[l];
        let sign = parity(m);
        -I * (0.5 * scale * sign / (PI * m / d as f64).sin())
    })
}

/// Entry-wise closed form of `[Q, P]` in the position basis.
pub fn commutator_closed_form(d: usize) -> CMat {
    let labels = symmetric_labels(d);
    CMat::from_fn(d, d, |k, l| {
        if k == l {
            return C64::new(0.0, 0.0);
        }
        let m = labels[k] - labels[l];
        -I * (PI / d as f64 * parity(m) * m / (PI * m / d as f64).sin())
    })
}

fn parity(m: f64) -> f64 {
    if (m.round() as i64).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `-i[Q, P]`.
pub fn commutator_qp(pair: &CanonicalPair) -> HermitianOperator {
    pair.q.commutator_i(&pair.p)
}

/// Quadratic observables `T = Q²+P²`, `G₁ = {Q,P}`, `G₂ = -i[Q,P]`, `G₃ = Q²-P²`.
#[derive(Debug, Clone)]
pub struct Quadratics {
    pub t: HermitianOperator,
    pub g1: HermitianOperator,
    pub g2: HermitianOperator,
    pub g3: HermitianOperator,
}

pub fn build_quadratics(pair: &CanonicalPair) -> Quadratics {
    let q2 = pair.q.square();
    let p2 = pair.p.square();
    Quadratics {
        t: &q2 + &p2,
        g1: pair.q.anticommutator(&pair.p),
        g2: commutator_qp(pair),
        g3: &q2 - &p2,
    }
}

/// `K = (QP + PQ)/2`.
pub fn squeezing_generator(pair: &CanonicalPair) -> HermitianOperator {
    &pair.q.anticommutator(&pair.p) * 0.5
}

/// `e^{-iξK}`.
pub fn squeezing_unitary(pair: &CanonicalPair, xi: f64) -> Result<UnitaryOperator> {
    UnitaryOperator::exp_i(&squeezing_generator(pair), -xi)
}

/// `X = e^{i√(2π/d) P}`, a cyclic shift of the position basis.
pub fn shift_operator(pair: &CanonicalPair) -> UnitaryOperator {
    UnitaryOperator::exp_i(&pair.p, pair.scale()).expect("exponential of Hermitian is unitary")
}

/// `Z = e^{-i√(2π/d) Q}`, diagonal in the position basis.
pub fn clock_operator(pair: &CanonicalPair) -> UnitaryOperator {
    UnitaryOperator::exp_i(&pair.q, -pair.scale()).expect("exponential of Hermitian is unitary")
}

/// Heisenberg-Weyl operator `ω^l X^n Z^m`, all indices in `0..d`.
pub fn build_displacements(
    pair: &CanonicalPair,
    l: i64,
    n: i64,
    m: i64,
) -> Result<UnitaryOperator> {
    let d = pair.dim;
    for (name, value) in [("l", l), ("n", n), ("m", m)] {
        if value < 0 || value >= d as i64 {
            return Err(Error::IndexOutOfRange {
                name,
                value,
                dim: d,
            });
        }
    }
    let x = shift_operator(pair).pow(n as u32);
    let z = clock_operator(pair).pow(m as u32);
    let phase = C64::from_polar(1.0, 2.0 * PI * l as f64 / d as f64);
    UnitaryOperator::new(x.compose(&z).matrix() * phase)
}
