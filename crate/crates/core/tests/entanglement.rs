use finiteqp::covariance::variance;
use finiteqp::entanglement::*;
use finiteqp::linalg::{self, CMat, C64};
use finiteqp::operators::build_canonical_pair;
use finiteqp::regions::min_sum_variances;
use finiteqp::rng;
use finiteqp::states::{max_entangled, thermal_state, two_mode_squeezed, vacuum_d3, QuantumState};
use proptest::prelude::*;
use rand::Rng as _;

fn random_pure(r: &mut rng::Rng, d: usize) -> QuantumState {
    QuantumState::from_vector(rng::random_unit_vector(r, d)).unwrap()
}

fn random_product(r: &mut rng::Rng, d: usize) -> QuantumState {
    QuantumState::product(&random_pure(r, d), &random_pure(r, d)).unwrap()
}

#[test]
fn product_state_has_no_cross_block() {
    let pair = build_canonical_pair(4).unwrap();
    let mut r = rng::stream(1, 0);
    for _ in 0..20 {
        let s = random_product(&mut r, 4);
        let bc = bipartite_cov(&s, &pair).unwrap();
        assert!(linalg::max_abs(&bc.cross) < 1e-12);
        assert_eq!(&bc.assemble(), bc.gamma_full.entries());
    }
    assert!(bipartite_cov(&vacuum_d3(), &pair).is_err());
}

#[test]
fn random_bipartite_covariance_is_psd() {
    let pair = build_canonical_pair(3).unwrap();
    let mut r = rng::stream(2, 0);
    for _ in 0..50 {
        let s = random_pure(&mut r, 9).with_dims(3, 3).unwrap();
        let bc = bipartite_cov(&s, &pair).unwrap();
        let ev = linalg::eigh(bc.gamma_full.entries()).values;
        assert!(ev[0] >= -1e-9);
        assert_eq!(&bc.assemble(), bc.gamma_full.entries());
    }
}

#[test]
fn max_entangled_saturates() {
    for d in 2..=8 {
        let pair = build_canonical_pair(d).unwrap();
        let w = DuanWitness::new(&pair).unwrap();
        let me = max_entangled(d).unwrap();
        let res = w.evaluate(&me).unwrap();
        assert!(res.lhs.abs() < 1e-10, "d={d}: {}", res.lhs);
        assert!((res.delta_tilde + w.bound()).abs() < 1e-10);
        assert_eq!(res.verdict, Verdict::Entangled);

        let bc = bipartite_cov(&me, &pair).unwrap();
        assert!(bc.quadratic_form([1.0, 0.0, -1.0, 0.0]).abs() < 1e-10);
    }
}

#[test]
fn vacuum_product_sits_on_the_bound() {
    let pair = build_canonical_pair(3).unwrap();
    let s = QuantumState::product(&vacuum_d3(), &vacuum_d3()).unwrap();
    let res = duan_witness(&s, &pair).unwrap();
    let u = min_sum_variances(&pair, 64, 1e-12).unwrap().value;
    assert!((res.bound - 2.0 * u).abs() < 1e-14);
    assert!(res.delta_tilde.abs() < 1e-10);
    assert_eq!(res.verdict, Verdict::Undetected);
}

#[test]
fn lhs_two_ways() {
    let mut r = rng::stream(3, 0);
    for d in [2, 3, 4, 5] {
        let pair = build_canonical_pair(d).unwrap();
        let w = DuanWitness::new(&pair).unwrap();
        let loc = LocalOperators::new(&pair);
        for k in 0..20 {
            let s = if k % 2 == 0 {
                random_pure(&mut r, d * d).with_dims(d, d).unwrap()
            } else {
                QuantumState::from_factor(rng::gaussian_matrix(&mut r, d * d, 3)).unwrap().with_dims(d, d).unwrap()
            };
            let res = w.evaluate(&s).unwrap();
            let direct = variance(&s, &loc.difference_q()).unwrap() + variance(&s, &loc.sum_p()).unwrap();
            assert!((res.lhs - res.lhs_from_blocks).abs() < 1e-10);
            assert!((res.lhs - direct).abs() < 1e-10);
        }
    }
}

#[test]
fn separable_states_are_never_flagged() {
    for d in [3, 5] {
        let pair = build_canonical_pair(d).unwrap();
        let w = DuanWitness::new(&pair).unwrap();
        let mut r = rng::stream(4, d as u64);
        for _ in 0..200 {
            let s = random_product(&mut r, d);
            assert!(w.evaluate(&s).unwrap().delta_tilde >= -1e-9);
        }
        for _ in 0..200 {
            let k = 2 + (r.random::<f64>() * 4.0) as usize;
            let mut rho = CMat::zeros(d * d, d * d);
            let mut total = 0.0;
            for _ in 0..k {
                let p = r.random::<f64>() + 1e-3;
                rho += random_product(&mut r, d).density() * C64::new(p, 0.0);
                total += p;
            }
            let s = QuantumState::from_density(rho / C64::new(total, 0.0)).unwrap().with_dims(d, d).unwrap();
            assert!(w.evaluate(&s).unwrap().delta_tilde >= -1e-9);
        }
    }
}

#[test]
fn thermal_delta_is_monotone() {
    for d in [3, 5, 7] {
        let pair = build_canonical_pair(d).unwrap();
        let scan = thermal_scan(&DuanWitness::new(&pair).unwrap(), &TemperatureGrid::default()).unwrap();
        for w in scan.points.windows(2) {
            assert!(w[1].delta_tilde >= w[0].delta_tilde - 1e-6, "d={d} T={}", w[1].temperature);
        }
        assert!(scan.threshold.is_some());
        let thr = scan.threshold.unwrap();
        // verdicts flip exactly once
        for p in &scan.points {
            assert_eq!(p.verdict == Verdict::Entangled, p.temperature <= thr);
        }
    }
}

#[test]
fn unit_step_thresholds() {
    let grid = TemperatureGrid {
        t_min: 0.05,
        t_max: 4.05,
        step: 1.0,
    };
    for (d, expect) in [(3, 2.05), (5, 2.05), (9, 1.05)] {
        let thr = thermal_threshold(&build_canonical_pair(d).unwrap(), &grid).unwrap();
        assert_eq!(thr, Some(expect), "d={d}");
    }
}

#[test]
fn cold_thermal_state_is_entangled() {
    let pair = build_canonical_pair(5).unwrap();
    let w = DuanWitness::new(&pair).unwrap();
    let s = thermal_state(&w.hamiltonian(), 0.05).unwrap().with_dims(5, 5).unwrap();
    assert_eq!(w.evaluate(&s).unwrap().verdict, Verdict::Entangled);
    let hot = thermal_state(&w.hamiltonian(), 50.0).unwrap().with_dims(5, 5).unwrap();
    assert_eq!(w.evaluate(&hot).unwrap().verdict, Verdict::Undetected);
}

#[test]
fn two_mode_squeezed_profile() {
    let pair = build_canonical_pair(5).unwrap();
    let w = DuanWitness::new(&pair).unwrap();
    let bs: Vec<f64> = (0..50).map(|k| 2.0 + 98.0 * k as f64 / 49.0).collect();
    let pts = squeezing_scan(&w, 4.0, &bs).unwrap();
    for p in pts.windows(2) {
        assert!(p[1].delta_tilde < p[0].delta_tilde);
    }
    for p in &pts {
        let direct = w.evaluate(&two_mode_squeezed(5, 4.0, p.b).unwrap()).unwrap().delta_tilde;
        assert_eq!(direct.to_bits(), p.delta_tilde.to_bits());
        if p.b >= 3.0 {
            assert!(p.delta_tilde < 0.0, "b={}", p.b);
        }
    }
    // heavy squeezing approaches the maximally entangled value
    let far = w.evaluate(&two_mode_squeezed(5, 1e4, 1e4).unwrap()).unwrap();
    assert!((far.delta_tilde + w.bound()).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mixtures_of_products_are_undetected(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let pair = build_canonical_pair(3).unwrap();
        let w = DuanWitness::with_bound(&pair, 2.0 / 9.0 * (3.0 - 3f64.sqrt()) * std::f64::consts::PI);
        let mut r = rng::stream(seed, 0);
        let (a, b) = (random_product(&mut r, 3), random_product(&mut r, 3));
        let s = QuantumState::mixture(p, &a, &b).unwrap().with_dims(3, 3).unwrap();
        let res = w.evaluate(&s).unwrap();
        prop_assert!(res.delta_tilde >= -1e-9);
        prop_assert!((res.lhs - res.lhs_from_blocks).abs() < 1e-10);
    }
}
