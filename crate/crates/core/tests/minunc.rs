use std::f64::consts::PI;

use finiteqp::covariance::{cov_matrix, covariance, variance};
use finiteqp::linalg::{self, C64};
use finiteqp::minunc::*;
use finiteqp::operators::{build_canonical_pair, build_quadratics};
use finiteqp::rng;
use finiteqp::states::{vacuum_d3, QuantumState};

fn sweep() -> Vec<C64> {
    let mut out = Vec::new();
    for r in [0.25, 0.5, 1.0, 2.0, 4.0] {
        for ph in [0.0, PI / 6.0, PI / 4.0] {
            out.push(C64::from_polar(r, ph));
        }
    }
    out
}

#[test]
fn vacuum_is_a_solution_at_lambda_one() {
    let pair = build_canonical_pair(3).unwrap();
    let rep = solve_minunc(pair.q(), pair.p(), C64::new(1.0, 0.0)).unwrap();
    let vac = vacuum_d3();
    let hit = rep
        .solutions
        .iter()
        .find(|s| s.state.fidelity(&vac).unwrap() > 1.0 - 1e-10)
        .expect("vacuum among solutions");
    assert!(hit.eigenvalue_z.norm() < 1e-10, "{}", hit.eigenvalue_z);
    // Q + iP is nilpotent at d = 3: a single Jordan block
    assert_eq!(rep.solutions.len(), 1);
    assert_eq!(rep.defective_clusters, 1);
    assert!(hit.defective);
    assert!(verify_parallelism(hit, pair.q(), pair.p()).unwrap() < 1e-10);
}

#[test]
fn covariances_follow_commutator() {
    for d in [3, 4, 6] {
        let pair = build_canonical_pair(d).unwrap();
        let (a, b) = (pair.q(), pair.p());
        for lambda in sweep() {
            let rep = solve_minunc(a, b, lambda).unwrap();
            assert!(!rep.solutions.is_empty());
            for s in &rep.solutions {
                let c = s.commutator_expectation;
                let (va, vb) = (variance(&s.state, a).unwrap(), variance(&s.state, b).unwrap());
                let cov = covariance(&s.state, a, b).unwrap();
                assert!((va - c / lambda.re).abs() < 1e-8, "d={d} λ={lambda}");
                assert!((vb - lambda.norm_sqr() * c / lambda.re).abs() < 1e-8);
                assert!((cov.re + c * lambda.im / lambda.re).abs() < 1e-8);
                if va > 1e-10 {
                    assert!((vb / va - lambda.norm_sqr()).abs() < 1e-8);
                }
                let psi = s.state.vector().unwrap();
                let z_direct = C64::new(s.state.expectation(a), 0.0) * lambda + C64::new(0.0, s.state.expectation(b));
                assert!((s.eigenvalue_z - z_direct).norm() < 1e-9);
                let l = ladder_operator(a, b, lambda);
                assert!((l * psi - psi * s.eigenvalue_z).norm() < 1e-9);
                assert!(saturation_gap(s, a, b).unwrap().abs() < 1e-9);
                assert!(cov_matrix(&s.state, &[a, b]).unwrap().det().abs() < 1e-9);
                assert!(verify_parallelism(s, a, b).unwrap() < 1e-9);
                assert!(c >= -1e-12);
                if lambda.im == 0.0 {
                    let tr = va + vb;
                    assert!((tr - c * (lambda.re + 1.0 / lambda.re)).abs() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn other_pairs() {
    let pair = build_canonical_pair(5).unwrap();
    let q = build_quadratics(&pair);
    for (a, b) in [(&q.t, &q.g1), (pair.q(), &q.g3), (&q.g1, &q.g2)] {
        let rep = solve_minunc(a, b, C64::new(0.7, 0.2)).unwrap();
        for s in &rep.solutions {
            assert!(s.residual < RESIDUAL_TOL);
            assert!(verify_parallelism(s, a, b).unwrap() < 1e-9);
            assert!(saturation_gap(s, a, b).unwrap().abs() < 1e-9);
        }
    }
}

#[test]
fn negative_control() {
    let pair = build_canonical_pair(4).unwrap();
    let mut above = 0;
    for i in 0..50 {
        let mut r = rng::stream(13, i);
        let s = QuantumState::from_vector(rng::random_unit_vector(&mut r, 4)).unwrap();
        if parallelism_residual(&s, pair.q(), pair.p(), C64::new(1.0, 0.0)).unwrap() > 1e-3 {
            above += 1;
        }
    }
    assert_eq!(above, 50);
}

#[test]
fn rejects_nonpositive_lambda() {
    let pair = build_canonical_pair(3).unwrap();
    for l in [C64::new(0.0, 1.0), C64::new(-1.0, 0.0)] {
        assert!(solve_minunc(pair.q(), pair.p(), l).is_err());
    }
    let other = build_canonical_pair(4).unwrap();
    assert!(solve_minunc(pair.q(), other.p(), C64::new(1.0, 0.0)).is_err());
}

#[test]
fn d6_jordan_block_flagged() {
    let pair = build_canonical_pair(6).unwrap();
    let rep = solve_minunc(pair.q(), pair.p(), C64::new(1.0, 0.0)).unwrap();
    assert_eq!(rep.defective_clusters, 1);
    assert_eq!(rep.solutions.len() + rep.discarded, 5);
    assert!(rep.solutions.iter().any(|s| s.defective));

    // independent check: Q + iP - z has a one-dimensional kernel at the defective z
    let s = rep.solutions.iter().find(|s| s.defective).unwrap();
    let m = ladder_operator(pair.q(), pair.p(), C64::new(1.0, 0.0)) - linalg::identity(6) * s.eigenvalue_z;
    let sv = m.singular_values();
    let mut sv: Vec<f64> = sv.iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    assert!(sv[0] < 1e-6 && sv[1] > 1e-2);
}

#[test]
fn report_json_shape() {
    let pair = build_canonical_pair(3).unwrap();
    let rep = solve_minunc(pair.q(), pair.p(), C64::new(2.0, 0.5)).unwrap();
    let v = serde_json::to_value(rep.to_json()).unwrap();
    assert_eq!(v["lambda"], serde_json::json!([2.0, 0.5]));
    let sols = v["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), rep.solutions.len());
    for s in sols {
        for key in ["z", "var_a", "var_b", "cov_ab", "residual", "state"] {
            assert!(s.get(key).is_some());
        }
    }
}
