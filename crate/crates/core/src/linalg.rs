//! Small dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
///
/// Ties keep the solver's original column order (stable sort), so the
/// result is deterministic for a given input.
#[derive(Debug, Clone)]
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn vector(&self, k: usize) -> CVec {
        self.vectors.column(k).into_owned()
    }
}

pub fn eigh(m: &CMat) -> HermEigen {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        fix_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    HermEigen { values, vectors }
}

/// `(M + M†)/2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.abs()))
}

/// Rotates the global phase so the first entry of largest modulus is real positive.
pub fn fix_phase(v: &mut CVec) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (k, z) in v.iter().enumerate() {
        // 1e-9 relative slack keeps the choice stable against rounding noise
        if z.norm() > best_norm * (1.0 + 1e-9) {
            best = k;
            best_norm = z.norm();
        }
    }
    if best_norm > 0.0 {
        let phase = v[best].conj() / best_norm;
        *v *= phase;
    }
}

/// Applies a scalar function to a Hermitian matrix through its spectrum.
pub fn hermitian_function<F: Fn(f64) -> C64>(m: &CMat, f: F) -> CMat {
    let eig = eigh(m);
    let n = m.nrows();
    let mut scaled = eig.vectors.clone();
    for k in 0..n {
        let fk = f(eig.values[k]);
        for r in 0..n {
            scaled[(r, k)] *= fk;
        }
    }
    scaled * eig.vectors.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `⟨ψ|M|ψ⟩` for a normalized vector.
pub fn expect_vec(psi: &CVec, m: &CMat) -> C64 {
    psi.dotc(&(m * psi))
}

/// `tr(ρ M)` without forming the product.
pub fn expect_rho(rho: &CMat, m: &CMat) -> C64 {
    let n = rho.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += rho[(i, j)] * m[(j, i)];
        }
    }
    acc
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Commutator `AB - BA`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMat) -> RMat {
    m.map(|z| z.im)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn eigvals_sym(m: &RMat) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}
