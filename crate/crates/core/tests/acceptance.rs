//! Acceptance criteria. Runs as a plain binary so every criterion prints
//! one PASS/FAIL line; exits non-zero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mcast_sinr::balancer::SolveReport;
use mcast_sinr::feasibility::lemma2_sign_product;
use mcast_sinr::generate::{
    mixed_model, random_constraints, random_direction, random_zero_outage, uniform_model,
};
use mcast_sinr::region::{
    direction_fan, infeasible_convexity_probe, log_convexity_probe, trace_boundary,
    zero_outage_map, zero_outage_stacked_lp, COUNTEREXAMPLE_BUDGET,
};
use mcast_sinr::scenario::Scenario;
use mcast_sinr::spectral::{max_spectral_radius_bruteforce, primitive_set_sufficient};
use mcast_sinr::{
    check_constrained, check_unconstrained, corollary1_radius, lp_oracle, power_reduce,
    solve_beta, solve_beta_constrained, spectral_radius, ConstraintSet, EmbeddedSelection, Method,
    NetworkModel, PowerVector, SinrTarget, SolveOptions, Status,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    Scenario::load(&path).expect("scenario loads")
}

fn within(limit_s: u64, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t > Duration::from_secs(limit_s) {
        Err(format!("took {t:.2?}, limit {limit_s} s"))
    } else {
        Ok(t)
    }
}

fn feasible(s: Status) -> bool {
    s == Status::Feasible
}

/// Scale factor `u` with `|1 - u| > 1e-6`, spread around the threshold.
fn off_threshold(r: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = r.gen_range(0.5..1.5);
        if (u - 1.0).abs() > 1e-6 {
            return u;
        }
    }
}

fn unconstrained_vs_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut agree = 0;
    for i in 0..200 {
        let m = mixed_model(&mut r, 2..=4, 1..=3).map_err(|e| e.to_string())?;
        let d = SinrTarget::new(random_direction(&mut r, m.num_sessions())).unwrap();
        let lam = max_spectral_radius_bruteforce(&m, &d).unwrap().0;
        let mu = d.scaled(off_threshold(&mut r) / lam).unwrap();
        let v = check_unconstrained(&m, &mu, Method::Brute).unwrap();
        if (1.0 - v.criterion_value).abs() <= 1e-6 {
            return Err(format!("instance {i} sampled inside the margin"));
        }
        let o = lp_oracle(&m, &mu, None).unwrap();
        if feasible(v.status) == feasible(o.status) {
            agree += 1;
        }
    }
    let t = within(10, start)?;
    if agree == 200 {
        Ok(format!("200/200 agree in {t:.2?}"))
    } else {
        Err(format!("{agree}/200 agree"))
    }
}

fn capped_vs_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(202);
    let (mut agree, mut total) = (0, 0);
    while total < 200 {
        let m = mixed_model(&mut r, 2..=4, 1..=3).unwrap();
        let cons = random_constraints(&mut r, m.num_sessions(), 1, 3).unwrap();
        let d = SinrTarget::new(random_direction(&mut r, m.num_sessions())).unwrap();
        let beta = solve_beta_constrained(&m, &d, &cons, &SolveOptions::default())
            .unwrap()
            .beta_star;
        let mu = d.scaled(beta * off_threshold(&mut r)).unwrap();
        let v = check_constrained(&m, &mu, &cons, Method::Brute).unwrap();
        if (1.0 - v.criterion_value).abs() <= 1e-6 {
            continue;
        }
        total += 1;
        let o = lp_oracle(&m, &mu, Some(&cons)).unwrap();
        if feasible(v.status) == feasible(o.status) {
            agree += 1;
        }
    }
    let t = within(20, start)?;
    if agree == 200 {
        Ok(format!("200/200 agree in {t:.2?}"))
    } else {
        Err(format!("{agree}/200 agree"))
    }
}

/// Criterion 3 also feeds its traces and bounds to criterion 4.
fn iterative_vs_brute_force(traces: &mut Vec<(Vec<f64>, f64)>) -> Outcome {
    let start = Instant::now();
    let mut r = rng(303);
    let mut instances = 0;
    let mut worst = 0.0f64;
    while instances < 100 {
        let m = uniform_model(&mut r, 4, 3).unwrap();
        let mu = SinrTarget::new(random_direction(&mut r, 4)).unwrap();
        let zs: Vec<DMatrix<f64>> = m
            .selections()
            .unwrap()
            .map(|k| m.interference_matrix(&mu, &k).unwrap())
            .collect();
        if zs.len() != 81 {
            return Err(format!("expected 81 embedded systems, got {}", zs.len()));
        }
        if !primitive_set_sufficient(&zs) {
            continue;
        }
        instances += 1;
        let bound = 1.0 / max_spectral_radius_bruteforce(&m, &mu).unwrap().0;
        for init in 0..5 {
            let p0 = if init == 0 {
                None
            } else {
                Some((0..4).map(|_| r.gen_range(1e-3..1.0)).collect())
            };
            let opts = SolveOptions {
                p0,
                ..SolveOptions::default()
            };
            let rep = solve_beta(&m, &mu, &opts).unwrap();
            worst = worst.max((rep.beta_star - bound).abs());
            traces.push((rep.beta_trace, bound));
        }
    }
    let t = within(60, start)?;
    if worst <= 1e-8 {
        Ok(format!("100 instances x 5 starts, max |beta* - brute| = {worst:.2e} in {t:.2?}"))
    } else {
        Err(format!("max |beta* - brute| = {worst:.3e} > 1e-8"))
    }
}

fn traces_monotone(traces: &[(Vec<f64>, f64)]) -> Outcome {
    for (i, (trace, bound)) in traces.iter().enumerate() {
        if trace.is_empty() {
            return Err(format!("run {i} has an empty trace"));
        }
        if let Some(w) = trace.windows(2).find(|w| w[1] < w[0]) {
            return Err(format!("run {i}: trace decreased {} -> {}", w[0], w[1]));
        }
        if let Some(b) = trace.iter().find(|&&b| b > bound + 1e-10) {
            return Err(format!("run {i}: trace value {b} above bound {bound}"));
        }
    }
    Ok(format!("{} traces monotone and bounded", traces.len()))
}

/// Largest `alpha` with `alpha d` feasible under `cons`, by bisection on
/// the LP oracle alone.
fn lp_bisection(m: &NetworkModel, d: &SinrTarget, cons: &ConstraintSet) -> f64 {
    let ok = |a: f64| feasible(lp_oracle(m, &d.scaled(a).unwrap(), Some(cons)).unwrap().status);
    let (mut lo, mut hi) = (0.0, 1.0);
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn capped_pair_boundary(traces: &mut Vec<(Vec<f64>, f64)>) -> Outcome {
    let s = scenario("two_sessions.json");
    let cons = s.constraints.clone().expect("pair has a cap");
    let start = Instant::now();
    let fan = direction_fan(2, 64, 0);
    let points = trace_boundary(&s.model, &fan, Some(&cons)).map_err(|e| e.to_string())?;
    let t = within(5, start)?;
    let (mut worst_lp, mut worst_min) = (0.0f64, 0.0f64);
    for (d, p) in fan.iter().zip(&points) {
        let b = lp_bisection(&s.model, d, &cons);
        worst_lp = worst_lp.max((p.beta - b).abs() / b);
        let per = p.per_embedded.as_ref().ok_or("per-embedded betas missing")?;
        if per.len() != 4 {
            return Err(format!("{} embedded boundaries, expected 4", per.len()));
        }
        let min = per.iter().copied().fold(f64::INFINITY, f64::min);
        worst_min = worst_min.max((p.beta - min).abs() / min);
        let rep = solve_beta_constrained(&s.model, d, &cons, &SolveOptions::default()).unwrap();
        let bound = 1.0
            / s.model
                .selections()
                .unwrap()
                .map(|k| {
                    mcast_sinr::feasibility::constrained_embedded_radius(&s.model, d, &k, &cons)
                        .unwrap()
                })
                .fold(0.0, f64::max);
        let runs: Vec<&SolveReport> = rep.per_constraint.iter().collect();
        for run in runs {
            traces.push((run.beta_trace.clone(), bound));
        }
    }
    if worst_lp > 1e-6 {
        return Err(format!("LP bisection deviation {worst_lp:.3e} > 1e-6"));
    }
    if worst_min > 1e-10 {
        return Err(format!("per-embedded minimum deviation {worst_min:.3e} > 1e-10"));
    }
    Ok(format!(
        "64 directions in {t:.2?}; vs LP bisection {worst_lp:.1e}, vs per-embedded min {worst_min:.1e}"
    ))
}

fn pair_closed_form() -> Outcome {
    let mut r = rng(606);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let ks: Vec<usize> = (0..2).map(|_| r.gen_range(1..=3)).collect();
        let m = mcast_sinr::generate::random_model(&mut r, &ks).unwrap();
        let mu = SinrTarget::new(random_direction(&mut r, 2)).unwrap();
        let (c1, k) = corollary1_radius(&m, &mu).unwrap();
        let (brute, _) = max_spectral_radius_bruteforce(&m, &mu).unwrap();
        let at_k = spectral_radius(&m.interference_matrix(&mu, &k).unwrap())
            .unwrap()
            .radius;
        worst = worst.max((c1 - brute).abs() / brute).max((at_k - brute).abs() / brute);
    }
    if worst <= 1e-12 {
        Ok(format!("100 instances, max relative deviation {worst:.1e}"))
    } else {
        Err(format!("relative deviation {worst:.3e} > 1e-12"))
    }
}

fn sign_products() -> Outcome {
    let mut r = rng(707);
    let (mut pairs, mut worst) = (0usize, f64::NEG_INFINITY);
    for _ in 0..100 {
        let m = mixed_model(&mut r, 2..=3, 1..=3).unwrap();
        let d = SinrTarget::new(random_direction(&mut r, m.num_sessions())).unwrap();
        let lam = max_spectral_radius_bruteforce(&m, &d).unwrap().0;
        let mu = d.scaled(r.gen_range(0.1..0.95) / lam).unwrap();
        let sels: Vec<EmbeddedSelection> = m.selections().unwrap().collect();
        for (a, ka) in sels.iter().enumerate() {
            for kb in &sels[a + 1..] {
                if ka.differing_sessions(kb).len() == 1 {
                    worst = worst.max(lemma2_sign_product(&m, &mu, ka, kb).unwrap());
                    pairs += 1;
                }
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("{pairs} pairs, largest product {worst:.2e}"))
    } else {
        Err(format!("product {worst:.3e} > 1e-12"))
    }
}

fn deletions() -> Outcome {
    let mut r = rng(808);
    let mut checks = 0;
    for i in 0..100 {
        let n = r.gen_range(3..=6);
        let mut z = DMatrix::from_fn(n, n, |a, b| if a == b { 0.0 } else { r.gen_range(1e-6..1.0) });
        let lam = spectral_radius(&z).unwrap().radius;
        z *= r.gen_range(0.05..0.999) / lam;
        let keep = |drop: &[usize]| -> Vec<usize> { (0..n).filter(|j| !drop.contains(j)).collect() };
        let mut sets: Vec<Vec<usize>> = (0..n).map(|a| vec![a]).collect();
        for a in 0..n {
            for b in a + 1..n {
                sets.push(vec![a, b]);
            }
        }
        for drop in sets {
            let idx = keep(&drop);
            let sub = z.select_rows(&idx).select_columns(&idx);
            let l = spectral_radius(&sub).unwrap().radius;
            checks += 1;
            if l >= 1.0 {
                return Err(format!("matrix {i}: deleting {drop:?} gives radius {l}"));
            }
        }
    }
    Ok(format!("100 matrices, {checks} deletions all below 1"))
}

fn log_convexity() -> Outcome {
    let grid = [0.25, 0.5, 0.75];
    let mut models = vec![scenario("three_sessions.json").model];
    let mut r = rng(909);
    for _ in 0..20 {
        models.push(mixed_model(&mut r, 2..=4, 1..=3).unwrap());
    }
    let mut checks = 0;
    for (i, m) in models.iter().enumerate() {
        let rep = log_convexity_probe(m, 200, &grid, 9000 + i as u64).map_err(|e| e.to_string())?;
        checks += rep.checks;
        if rep.violations > 0 {
            return Err(format!("model {i}: {} violations", rep.violations));
        }
    }
    Ok(format!("21 models, {checks} interpolants, 0 violations"))
}

fn convexity_dichotomy() -> Outcome {
    let two = scenario("two_sessions.json").model;
    let rep2 = infeasible_convexity_probe(&two, 500, 1010, None).map_err(|e| e.to_string())?;
    if rep2.violations > 0 || rep2.pairs != 500 {
        return Err(format!(
            "two sessions: {} violations over {} pairs",
            rep2.violations, rep2.pairs
        ));
    }
    let three = scenario("three_sessions.json").model;
    let rep3 = infeasible_convexity_probe(&three, COUNTEREXAMPLE_BUDGET, 1011, None)
        .map_err(|e| e.to_string())?;
    let Some((a, b)) = rep3.counterexample else {
        return Err(format!("no counterexample in {} pairs", rep3.pairs));
    };
    let status = |v: Vec<f64>| {
        check_unconstrained(&three, &SinrTarget::new(v).unwrap(), Method::Brute)
            .unwrap()
            .status
    };
    let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
    if status(a.clone()) != Status::Infeasible
        || status(b.clone()) != Status::Infeasible
        || status(mid) != Status::Feasible
    {
        return Err("reported counterexample does not re-check".into());
    }
    Ok(format!(
        "N=2: 0 violations over 500 pairs; N=3: counterexample at pair {}",
        rep3.pairs
    ))
}

fn reduction() -> Outcome {
    let mut r = rng(1111);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let m = mixed_model(&mut r, 2..=4, 1..=3).unwrap();
        let d = SinrTarget::new(random_direction(&mut r, m.num_sessions())).unwrap();
        let lam = max_spectral_radius_bruteforce(&m, &d).unwrap().0;
        let mu = d.scaled(r.gen_range(0.1..0.95) / lam).unwrap();
        let w = lp_oracle(&m, &mu, None).unwrap().witness.unwrap();
        let c = r.gen_range(1.5..5.0);
        let start = PowerVector::new(w.as_slice().iter().map(|x| x * c).collect()).unwrap();
        let p = power_reduce(&m, &start, &mu).map_err(|e| format!("instance {i}: {e}"))?;
        let gamma = m.session_sinr(&p).unwrap();
        for (g, t) in gamma.iter().zip(mu.as_slice()) {
            worst = worst.max((g - t).abs() / t);
        }
        if p.as_slice().iter().zip(start.as_slice()).any(|(a, b)| a > b) {
            return Err(format!("instance {i}: reduced power exceeds the start"));
        }
    }
    if worst <= 1e-9 {
        Ok(format!("100 instances, max relative SINR deviation {worst:.1e}"))
    } else {
        Err(format!("relative SINR deviation {worst:.3e} > 1e-9"))
    }
}

fn zero_outage() -> Outcome {
    let mut r = rng(1212);
    let mut agree = 0;
    for _ in 0..50 {
        let inst = random_zero_outage(&mut r, 2, 3).unwrap();
        let m = zero_outage_map(&inst).unwrap();
        let d = SinrTarget::new(random_direction(&mut r, 2)).unwrap();
        let lam = max_spectral_radius_bruteforce(&m, &d).unwrap().0;
        let mu = d.scaled(off_threshold(&mut r) / lam).unwrap();
        let mapped = feasible(check_unconstrained(&m, &mu, Method::Brute).unwrap().status);
        let stacked = zero_outage_stacked_lp(&inst, &mu).unwrap();
        if mapped == stacked {
            agree += 1;
        }
    }
    if agree == 50 {
        Ok("50/50 agree".into())
    } else {
        Err(format!("{agree}/50 agree"))
    }
}

fn main() -> ExitCode {
    let mut traces = Vec::new();
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "unconstrained criterion vs LP oracle", unconstrained_vs_oracle()),
        (2, "capped criterion vs LP oracle", capped_vs_oracle()),
    ];
    results.push((3, "iterative beta* equals brute force", iterative_vs_brute_force(&mut traces)));
    let pair = capped_pair_boundary(&mut traces);
    results.push((4, "beta traces monotone and bounded", traces_monotone(&traces)));
    results.push((5, "capped two-session boundary", pair));
    results.push((6, "two-session closed form", pair_closed_form()));
    results.push((7, "one-row sign product", sign_products()));
    results.push((8, "deletions keep the radius below 1", deletions()));
    results.push((9, "log-convexity probe", log_convexity()));
    results.push((10, "convexity of the infeasible region", convexity_dichotomy()));
    results.push((11, "power reduction meets targets", reduction()));
    results.push((12, "zero-outage reduction", zero_outage()));

    let mut failed = 0;
    for (i, name, res) in &results {
        match res {
            Ok(msg) => println!("criterion {i:>2} PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {i:>2} FAIL  {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
