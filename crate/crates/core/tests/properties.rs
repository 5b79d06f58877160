//! Property tests over randomly drawn networks.

use mcast_sinr::feasibility::constrained_embedded_radius;
use mcast_sinr::spectral::max_spectral_radius_bruteforce;
use mcast_sinr::{
    check_constrained, check_unconstrained, lp_oracle, solve_beta, spectral_radius, ConstraintSet,
    Method, NetworkModel, PowerConstraint, PowerVector, SinrTarget, SolveOptions, Status,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Sessions, receiver counts and a gain table in `[1e-6, 1)`.
fn model_strategy(max_n: usize, max_k: usize) -> impl Strategy<Value = NetworkModel> {
    (2..=max_n)
        .prop_flat_map(move |n| prop::collection::vec(1..=max_k, n))
        .prop_flat_map(|ks| {
            let n = ks.len();
            let k: usize = ks.iter().sum();
            (
                Just(ks),
                prop::collection::vec(prop::collection::vec(1e-6..1.0f64, n), k),
            )
        })
        .prop_map(|(ks, gains)| NetworkModel::new(ks, gains, 0.1).unwrap())
}

fn with_direction(max_n: usize, max_k: usize) -> impl Strategy<Value = (NetworkModel, SinrTarget)> {
    model_strategy(max_n, max_k).prop_flat_map(|m| {
        let n = m.num_sessions();
        (
            Just(m),
            prop::collection::vec(0.05..1.0f64, n).prop_map(|v| SinrTarget::new(v).unwrap()),
        )
    })
}

fn criterion(m: &NetworkModel, mu: &SinrTarget) -> f64 {
    max_spectral_radius_bruteforce(m, mu).unwrap().0
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sinr_targets_met_iff_coefficient_rows_hold(
        (m, mu) in with_direction(4, 3),
        p in prop::collection::vec(1e-3..10.0f64, 4),
    ) {
        let n = m.num_sessions();
        let p = PowerVector::new(p[..n].to_vec()).unwrap();
        let sinr = m.per_receiver_sinr(&p).unwrap();
        let sys = m.coefficient_system(&mu).unwrap();
        for r in 0..m.num_receivers() {
            let target = mu.as_slice()[m.session_of(r)];
            let row: f64 = (0..n).map(|j| sys.a_matrix[(r, j)] * p.as_slice()[j]).sum();
            let slack = row - sys.noise_vec[r];
            // both sides carry the same sign unless the receiver sits on its target
            if (sinr[r] - target).abs() > 1e-9 * target {
                prop_assert_eq!(sinr[r] > target, slack > 0.0);
            }
        }
        let session = m.session_sinr(&p).unwrap();
        let meets = session.iter().zip(mu.as_slice()).all(|(g, t)| g >= t);
        if session.iter().zip(mu.as_slice()).all(|(g, t)| (g - t).abs() > 1e-9 * t) {
            prop_assert_eq!(meets, sys.is_satisfied_by(p.as_slice(), 0.0));
        }
    }

    #[test]
    fn criterion_is_homogeneous((m, mu) in with_direction(4, 3), c in 0.01..100.0f64) {
        let a = criterion(&m, &mu);
        let b = criterion(&m, &mu.scaled(c).unwrap());
        prop_assert!(rel(b, c * a) <= 1e-10);
    }

    #[test]
    fn criterion_is_monotone((m, mu) in with_direction(4, 3), bump in prop::collection::vec(1.0..2.0f64, 4)) {
        let n = m.num_sessions();
        let bigger = SinrTarget::new(mu.as_slice().iter().zip(&bump[..n]).map(|(a, b)| a * b).collect()).unwrap();
        prop_assert!(criterion(&m, &bigger) >= criterion(&m, &mu) * (1.0 - 1e-12));
    }

    #[test]
    fn criterion_ignores_row_scaling_and_noise(
        (m, mu) in with_direction(3, 3),
        scales in prop::collection::vec(1e-3..1e3f64, 9),
        noise in 1e-3..10.0f64,
    ) {
        let rows: Vec<Vec<f64>> = m.gain_rows().iter().zip(&scales)
            .map(|(row, s)| row.iter().map(|g| g * s).collect()).collect();
        let scaled = NetworkModel::new(m.receivers_per_session().to_vec(), rows, noise).unwrap();
        prop_assert!(rel(criterion(&scaled, &mu), criterion(&m, &mu)) <= 1e-10);
    }

    #[test]
    fn unconstrained_verdict_matches_lp((m, mu) in with_direction(4, 3), u in 0.3..1.7f64) {
        prop_assume!((u - 1.0f64).abs() > 1e-4);
        let target = mu.scaled(u / criterion(&m, &mu)).unwrap();
        let v = check_unconstrained(&m, &target, Method::Brute).unwrap();
        let o = lp_oracle(&m, &target, None).unwrap();
        prop_assert_eq!(v.status == Status::Feasible, o.status == Status::Feasible);
        if let Some(w) = v.witness {
            let sys = m.coefficient_system(&target).unwrap();
            prop_assert!(sys.is_satisfied_by(w.as_slice(), 1e-7));
        }
    }

    #[test]
    fn iterative_matches_brute_force((m, mu) in with_direction(4, 3), u in 0.3..1.7f64) {
        prop_assume!((u - 1.0f64).abs() > 1e-6);
        let target = mu.scaled(u / criterion(&m, &mu)).unwrap();
        let a = check_unconstrained(&m, &target, Method::Brute).unwrap();
        let b = check_unconstrained(&m, &target, Method::Iterative).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert!(rel(b.criterion_value, a.criterion_value) <= 1e-9);
    }

    #[test]
    fn capped_verdict_matches_lp(
        (m, mu) in with_direction(4, 2),
        subset in prop::collection::vec(any::<bool>(), 4),
        cap in 0.2..5.0f64,
        u in 0.3..1.7f64,
    ) {
        let n = m.num_sessions();
        let mut sessions: Vec<usize> = (0..n).filter(|&i| subset[i]).collect();
        if sessions.is_empty() {
            sessions.push(0);
        }
        let cons = ConstraintSet::new(vec![PowerConstraint::new(sessions, cap).unwrap()]).unwrap();
        let lam = m.selections().unwrap()
            .map(|k| constrained_embedded_radius(&m, &mu, &k, &cons).unwrap())
            .fold(0.0, f64::max);
        // the capped criterion is not homogeneous; scale only to land near it
        let target = mu.scaled(u / lam).unwrap();
        let v = check_constrained(&m, &target, &cons, Method::Brute).unwrap();
        prop_assume!((1.0 - v.criterion_value).abs() > 1e-6);
        let o = lp_oracle(&m, &target, Some(&cons)).unwrap();
        prop_assert_eq!(v.status == Status::Feasible, o.status == Status::Feasible);
    }

    #[test]
    fn deletions_keep_radius_below_one(
        n in 2usize..6,
        entries in prop::collection::vec(1e-6..1.0f64, 36),
        target in 0.05..0.999f64,
        drop in 0usize..6,
    ) {
        let mut z = DMatrix::from_fn(n, n, |a, b| if a == b { 0.0 } else { entries[a * 6 + b] });
        z *= target / spectral_radius(&z).unwrap().radius;
        let keep: Vec<usize> = (0..n).filter(|&j| j != drop % n).collect();
        let sub = z.select_rows(&keep).select_columns(&keep);
        prop_assert!(spectral_radius(&sub).unwrap().radius < 1.0);
    }

    #[test]
    fn spectral_radius_matches_eigenvalues(n in 2usize..4, entries in prop::collection::vec(0.0..1.0f64, 9)) {
        let z = DMatrix::from_fn(n, n, |a, b| if a == b { 0.0 } else { entries[a * 3 + b] + 1e-3 });
        let ours = spectral_radius(&z).unwrap().radius;
        let oracle = if n == 2 {
            (z[(0, 1)] * z[(1, 0)]).sqrt()
        } else {
            z.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
        };
        prop_assert!((ours - oracle).abs() <= 1e-10 * oracle.max(1.0));
    }

    #[test]
    fn balancer_trace_is_monotone((m, mu) in with_direction(4, 3), p0 in prop::collection::vec(1e-3..1.0f64, 4)) {
        let n = m.num_sessions();
        let opts = SolveOptions { p0: Some(p0[..n].to_vec()), ..SolveOptions::default() };
        let r = solve_beta(&m, &mu, &opts).unwrap();
        let bound = 1.0 / criterion(&m, &mu);
        prop_assert!(r.beta_trace.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(r.beta_trace.iter().all(|&b| b <= bound + 1e-10));
        prop_assert!(rel(r.beta_star, bound) <= 1e-9);
    }
}

#[test]
fn scaled_perron_power_approaches_boundary_sinr() {
    // three symmetric sessions: every embedded system has a primitive matrix
    let m = NetworkModel::new(
        vec![2, 2, 2],
        vec![
            vec![1.0, 0.5, 0.1],
            vec![1.0, 0.1, 0.5],
            vec![0.5, 1.0, 0.1],
            vec![0.1, 1.0, 0.5],
            vec![0.5, 0.1, 1.0],
            vec![0.1, 0.5, 1.0],
        ],
        0.1,
    )
    .unwrap();
    let mu = SinrTarget::new(vec![0.2, 0.5, 0.3]).unwrap();
    let r = solve_beta(&m, &mu, &SolveOptions::default()).unwrap();
    let alpha = 1e6;
    let p = PowerVector::new(r.p_star.iter().map(|x| x * alpha).collect()).unwrap();
    let gamma = m.session_sinr(&p).unwrap();
    let scale = gamma
        .iter()
        .zip(mu.as_slice())
        .map(|(g, t)| g / t)
        .fold(f64::INFINITY, f64::min);
    assert!(rel(scale, r.beta_star) < 1e-5, "{scale} vs {}", r.beta_star);
    assert!(scale < r.beta_star);
}
