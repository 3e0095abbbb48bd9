//! The six moments of `(Q, P)` that determine the 2×2 covariance matrix:
//! `(⟨Q⟩, ⟨P⟩, ⟨Q²⟩, ⟨P²⟩, ⟨K⟩, ⟨C⟩)` with `K = {Q,P}/2` and `C = -(i/2)[Q,P]`,
//! so that `Γ₁₂ = ⟨K⟩ - ⟨Q⟩⟨P⟩ + i⟨C⟩`.

use crate::linalg::CMat;
use crate::operators::{CanonicalPair, HermitianOperator};

pub const N_MOMENTS: usize = 6;

pub fn moment_operators(pair: &CanonicalPair) -> Vec<CMat> {
    let q = pair.q();
    let p = pair.p();
    let k = &q.anticommutator(p) * 0.5;
    let c = &q.commutator_i(p) * 0.5;
    [q.clone(), p.clone(), q.square(), p.square(), k, c]
        .iter()
        .map(|o: &HermitianOperator| o.matrix().clone())
        .collect()
}

/// Entries of `Γ(Q,P)` from a moment tuple.
#[derive(Debug, Clone, Copy)]
pub struct PairCov {
    pub var_q: f64,
    pub var_p: f64,
    /// `Re Γ₁₂`
    pub sym: f64,
    /// `Im Γ₁₂ = ⟨C⟩`
    pub skew: f64,
}

impl PairCov {
    pub fn from_moments(e: &[f64]) -> Self {
        PairCov {
            var_q: e[2] - e[0] * e[0],
            var_p: e[3] - e[1] * e[1],
            sym: e[4] - e[0] * e[1],
            skew: e[5],
        }
    }

    pub fn trace(&self) -> f64 {
        self.var_q + self.var_p
    }

    pub fn det(&self) -> f64 {
        self.var_q * self.var_p - self.sym * self.sym - self.skew * self.skew
    }

    /// `det Γˢ`.
    pub fn sym_det(&self) -> f64 {
        self.var_q * self.var_p - self.sym * self.sym
    }
}

pub fn trace_gradient(e: &[f64]) -> Vec<f64> {
    vec![-2.0 * e[0], -2.0 * e[1], 1.0, 1.0, 0.0, 0.0]
}

pub fn det_gradient(e: &[f64]) -> Vec<f64> {
    let c = PairCov::from_moments(e);
    let mut g = sym_det_gradient(e);
    g[5] = -2.0 * c.skew;
    g
}

pub fn sym_det_gradient(e: &[f64]) -> Vec<f64> {
    let c = PairCov::from_moments(e);
    vec![
        -2.0 * e[0] * c.var_p + 2.0 * c.sym * e[1],
        -2.0 * e[1] * c.var_q + 2.0 * c.sym * e[0],
        c.var_p,
        c.var_q,
        -2.0 * c.sym,
        0.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(&[f64]) -> f64, e: &[f64]) -> Vec<f64> {
        (0..e.len())
            .map(|k| {
                let mut a = e.to_vec();
                let mut b = e.to_vec();
                a[k] += 1e-6;
                b[k] -= 1e-6;
                (f(&a) - f(&b)) / 2e-6
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let e = [0.3, -0.2, 1.4, 1.1, 0.25, 0.6];
        let checks: [(fn(&[f64]) -> f64, fn(&[f64]) -> Vec<f64>); 3] = [
            (|e| PairCov::from_moments(e).trace(), trace_gradient),
            (|e| PairCov::from_moments(e).det(), det_gradient),
            (|e| PairCov::from_moments(e).sym_det(), sym_det_gradient),
        ];
        for (f, g) in checks {
            let num = fd(f, &e);
            for (a, b) in num.iter().zip(g(&e)) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
