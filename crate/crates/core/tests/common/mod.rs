#![allow(dead_code)]

use std::f64::consts::PI;

use finiteqp::linalg::{CMat, C64};
use finiteqp::operators::CanonicalPair;

/// Pauli coefficients `h_i = tr(H σ_i)/2` of a traceless qubit observable.
pub fn pauli_coeffs(h: &CMat) -> [f64; 3] {
    let c = |r: usize, col: usize| h[(r, col)];
    let x = (c(0, 1) + c(1, 0)).re / 2.0;
    let y = (C64::new(0.0, 1.0) * (c(0, 1) - c(1, 0))).re / 2.0;
    let z = (c(0, 0) - c(1, 1)).re / 2.0;
    [x, y, z]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// `(tr Γ, det Γ)` of `(Q, P)` for the qubit pure state with Bloch vector `n`.
pub fn bloch_trace_det(q: [f64; 3], p: [f64; 3], n: [f64; 3]) -> (f64, f64) {
    let (qn, pn) = (dot(q, n), dot(p, n));
    let vq = dot(q, q) - qn * qn;
    let vp = dot(p, p) - pn * pn;
    let sym = dot(q, p) - qn * pn;
    let c = dot(cross(q, p), n);
    (vq + vp, vq * vp - sym * sym - c * c)
}

/// `(tr, det)` over an `n × n` grid in polar and azimuthal angle.
pub fn bloch_cloud(pair: &CanonicalPair, n: usize) -> Vec<(f64, f64)> {
    assert_eq!(pair.dim(), 2);
    let q = pauli_coeffs(pair.q().matrix());
    let p = pauli_coeffs(pair.p().matrix());
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let th = PI * i as f64 / (n - 1) as f64;
        let (st, ct) = th.sin_cos();
        for j in 0..n {
            let ph = 2.0 * PI * j as f64 / n as f64;
            let (sp, cp) = ph.sin_cos();
            out.push(bloch_trace_det(q, p, [st * cp, st * sp, ct]));
        }
    }
    out
}

/// Lower and upper det envelopes of a `(tr, det)` cloud over `bins` trace bins,
/// both closed off by the cloud's extreme-trace points.
pub fn envelopes(cloud: &[(f64, f64)], bins: usize) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let lo_t = cloud.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let hi_t = cloud.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi_t - lo_t) / bins as f64;
    let mut lo: Vec<Option<(f64, f64)>> = vec![None; bins];
    let mut hi: Vec<Option<(f64, f64)>> = vec![None; bins];
    for &(t, d) in cloud {
        let b = (((t - lo_t) / width) as usize).min(bins - 1);
        if lo[b].is_none_or(|x| d < x.1) {
            lo[b] = Some((t, d));
        }
        if hi[b].is_none_or(|x| d > x.1) {
            hi[b] = Some((t, d));
        }
    }
    let first = *cloud.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    let last = *cloud.iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    let close = |env: Vec<Option<(f64, f64)>>| {
        let mut v: Vec<(f64, f64)> = env.into_iter().flatten().collect();
        v.push(first);
        v.push(last);
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    (close(lo), close(hi))
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p.0 - a.0 - s * dx).powi(2) + (p.1 - a.1 - s * dy).powi(2)).sqrt()
}

fn polyline_dist(p: (f64, f64), line: &[(f64, f64)]) -> f64 {
    if line.len() == 1 {
        return seg_dist(p, line[0], line[0]);
    }
    line.windows(2).map(|w| seg_dist(p, w[0], w[1])).fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two polylines sorted by trace.
pub fn hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let ab = a.iter().map(|&p| polyline_dist(p, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|&p| polyline_dist(p, a)).fold(0.0, f64::max);
    ab.max(ba)
}
