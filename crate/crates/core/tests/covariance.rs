use std::f64::consts::PI;

use finiteqp::covariance::*;
use finiteqp::linalg::{self, CMat, RMat, C64};
use finiteqp::operators::{build_canonical_pair, build_quadratics, CanonicalPair, HermitianOperator};
use finiteqp::rng;
use finiteqp::states::{vacuum_d3, QuantumState};
use proptest::prelude::*;

fn random_pure(seed: u64, d: usize) -> QuantumState {
    let mut r = rng::stream(seed, 0);
    QuantumState::from_vector(rng::random_unit_vector(&mut r, d)).unwrap()
}

fn random_mixed(seed: u64, d: usize, k: usize) -> QuantumState {
    let mut r = rng::stream(seed, 1);
    QuantumState::from_factor(rng::gaussian_matrix(&mut r, d, k)).unwrap()
}

/// Real vector symmetric under label reversal, so ⟨Q⟩ = ⟨P⟩ = 0 exactly.
fn centered(pair: &CanonicalPair, seed: u64) -> QuantumState {
    let d = pair.dim();
    let mut r = rng::stream(seed, 2);
    let half: Vec<f64> = (0..d).map(|_| rng::gaussian(&mut r)).collect();
    let v = finiteqp::linalg::CVec::from_fn(d, |i, _| C64::new(half[i] + half[d - 1 - i], 0.0));
    QuantumState::from_vector(v).unwrap()
}

/// Variance products straight from expectation values.
fn rs_gap_oracle(s: &QuantumState, a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    let (am, bm) = (a.matrix(), b.matrix());
    let ea = s.expectation(a);
    let eb = s.expectation(b);
    let va = s.expectation_c(&(am * am)).re - ea * ea;
    let vb = s.expectation_c(&(bm * bm)).re - eb * eb;
    let comm = s.expectation_c(&(am * bm - bm * am)).norm_sqr();
    let anti = (s.expectation_c(&(am * bm + bm * am)).re - 2.0 * ea * eb).powi(2);
    va * vb - 0.25 * (comm + anti)
}

#[test]
fn covariance_conventions() {
    let pair = build_canonical_pair(3).unwrap();
    let v = vacuum_d3();
    let c = covariance(&v, pair.q(), pair.p()).unwrap();
    assert!(c.re.abs() < 1e-14);
    assert!(c.im.abs() > 1e-3);

    let s = random_pure(3, 3);
    let var = covariance(&s, pair.q(), pair.q()).unwrap();
    assert!(var.im.abs() < 1e-14 && var.re >= 0.0);

    let mut e = finiteqp::linalg::CVec::zeros(3);
    e[0] = C64::new(1.0, 0.0);
    let eig = QuantumState::from_vector(e).unwrap();
    for b in [pair.p(), &pair.p().square()] {
        assert!(covariance(&eig, pair.q(), b).unwrap().norm() < 1e-14);
    }
    let g = cov_matrix(&eig, &[pair.q(), pair.p()]).unwrap();
    assert!(g.sym()[(0, 0)].abs() < 1e-14 && g.sym()[(0, 1)].abs() < 1e-14);

    let other = build_canonical_pair(4).unwrap();
    assert!(covariance(&v, pair.q(), other.p()).is_err());
}

#[test]
fn vacuum_covariance_matrix() {
    let pair = build_canonical_pair(3).unwrap();
    let g = cov_matrix(&vacuum_d3(), &[pair.q(), pair.p()]).unwrap();
    assert!(g.det().abs() < 1e-12);
    assert!((g.trace() - 2.0 / 9.0 * (3.0 - 3f64.sqrt()) * PI).abs() < 1e-12);
    assert!(rs_inequality_gap(&vacuum_d3(), pair.q(), pair.p()).unwrap().abs() < 1e-10);

    let js = serde_json::to_value(g.to_json()).unwrap();
    for key in ["m", "re", "im", "trace", "det"] {
        assert!(js.get(key).is_some(), "{key}");
    }
}

#[test]
fn decomposition_and_hermiticity() {
    let pair = build_canonical_pair(5).unwrap();
    let q = build_quadratics(&pair);
    let obs = [pair.q(), pair.p(), &q.t, &q.g1];
    let s = random_mixed(9, 5, 3);
    let g = cov_matrix(&s, &obs).unwrap();
    let recon = g.sym().map(|x| C64::new(x, 0.0)) + g.skew().map(|x| C64::new(0.0, x));
    assert_eq!(&recon, g.entries());
    assert_eq!(g.entries(), &g.entries().adjoint());
    assert!(linalg::max_abs_real(&(g.skew() + g.skew().transpose())) == 0.0);
    for j in 0..4 {
        for k in 0..4 {
            let direct = covariance(&s, obs[j], obs[k]).unwrap();
            assert!((g.entries()[(j, k)] - direct).norm() < 1e-12);
        }
    }
    let ev = linalg::eigh(g.entries()).values;
    assert!(ev[0] > -1e-9);
    let lu_det: f64 = ev.iter().product();
    assert!((g.det() - lu_det).abs() < 1e-9 * lu_det.abs().max(1.0));
}

#[test]
fn transforms() {
    let pair = build_canonical_pair(4).unwrap();
    let s = random_pure(5, 4);
    let g = cov_matrix(&s, &[pair.q(), pair.p()]).unwrap();

    let id = transform(&g, &RMat::identity(2, 2)).unwrap();
    assert!(linalg::max_abs(&(id.entries() - g.entries())) < 1e-14);

    let (sn, cs) = (PI / 4.0).sin_cos();
    let rot = RMat::from_row_slice(2, 2, &[cs, -sn, sn, cs]);
    assert!((transform(&g, &rot).unwrap().trace() - g.trace()).abs() < 1e-12);

    let l = RMat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
    let gl = transform(&g, &l).unwrap();
    let q2 = HermitianOperator::new(pair.q().matrix() * C64::new(2.0, 0.0)).unwrap();
    let direct = cov_matrix(&s, &[&q2, pair.p()]).unwrap();
    assert!(linalg::max_abs(&(gl.entries() - direct.entries())) < 1e-10);
    assert!((gl.det() - 4.0 * g.det()).abs() < 1e-10);

    // mixing rows of (Q, P) into three observables
    let l = RMat::from_row_slice(3, 2, &[1.0, 1.0, 0.5, -2.0, 0.0, 3.0]);
    let mk = |a: f64, b: f64| {
        HermitianOperator::new(pair.q().matrix() * C64::new(a, 0.0) + pair.p().matrix() * C64::new(b, 0.0)).unwrap()
    };
    let ops = [mk(1.0, 1.0), mk(0.5, -2.0), mk(0.0, 3.0)];
    let direct = cov_matrix(&s, &[&ops[0], &ops[1], &ops[2]]).unwrap();
    assert!(linalg::max_abs(&(transform(&g, &l).unwrap().entries() - direct.entries())) < 1e-10);
    assert!(transform(&g, &RMat::identity(3, 3)).is_err());
}

#[test]
fn concavity() {
    let pair = build_canonical_pair(3).unwrap();
    let obs = [pair.q(), pair.p()];
    let (a, b) = (random_pure(1, 3), random_pure(2, 3));
    assert!(linalg::max_abs_real(&concavity_check(&a, &b, 0.0, &obs).unwrap()) < 1e-14);
    assert!(linalg::max_abs_real(&concavity_check(&a, &a, 0.3, &obs).unwrap()) < 1e-14);
    let m = concavity_check(&a, &b, 0.5, &obs).unwrap();
    assert!(linalg::eigvals_sym(&m)[0] >= -1e-10);
    assert!(concavity_check(&a, &b, 1.5, &obs).is_err());
}

#[test]
fn det_from_radius_on_centered_states() {
    for d in [3, 4, 5, 6] {
        let pair = build_canonical_pair(d).unwrap();
        let q = build_quadratics(&pair);
        for seed in 0..50 {
            let s = centered(&pair, seed);
            assert!(s.expectation(pair.q()).abs() < 1e-12);
            assert!(s.expectation(pair.p()).abs() < 1e-12);
            let t = s.expectation(&q.t);
            let r2: f64 = [&q.g1, &q.g2, &q.g3].iter().map(|g| s.expectation(g).powi(2)).sum();
            let g = cov_matrix(&s, &[pair.q(), pair.p()]).unwrap();
            assert!((g.det() - (t * t - r2) / 4.0).abs() < 1e-10, "d={d}");
            assert!(r2.sqrt() <= t + 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn rs_gap_is_det_and_nonnegative(seed in any::<u64>(), d in 2usize..=6, mixed in any::<bool>()) {
        let pair = build_canonical_pair(d).unwrap();
        let s = if mixed { random_mixed(seed, d, 2) } else { random_pure(seed, d) };
        let gap = rs_inequality_gap(&s, pair.q(), pair.p()).unwrap();
        let g = cov_matrix(&s, &[pair.q(), pair.p()]).unwrap();
        prop_assert!(gap >= -1e-10);
        prop_assert!((gap - g.det()).abs() < 1e-12);
        prop_assert!((gap - rs_gap_oracle(&s, pair.q(), pair.p())).abs() < 1e-10);
        prop_assert!(g.trace() >= 0.0);
        prop_assert!(g.det() <= g.trace().powi(2) / 4.0 + 1e-9);
        prop_assert!(g.is_psd());
    }

    #[test]
    fn concavity_is_psd(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let pair = build_canonical_pair(3).unwrap();
        let m = concavity_check(&random_mixed(seed, 3, 2), &random_pure(seed ^ 7, 3), p, &[pair.q(), pair.p()]).unwrap();
        prop_assert!(linalg::eigvals_sym(&m)[0] >= -1e-10);
    }

    #[test]
    fn random_covariance_is_psd(seed in any::<u64>()) {
        let pair = build_canonical_pair(4).unwrap();
        let q = build_quadratics(&pair);
        let g = cov_matrix(&random_pure(seed, 4), &[pair.q(), pair.p(), &q.t]).unwrap();
        let m: CMat = g.entries().clone();
        prop_assert!(linalg::eigh(&m).values[0] >= -1e-9);
    }
}
