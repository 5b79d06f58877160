//! Cross-module property suite with seeded, reproducible trials.
//!
//! Every trial draws a fresh instance from its own seed, so a failure is
//! reproduced by rerunning that single seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::balancer::{solve_beta, solve_beta_constrained, SolveOptions};
use crate::error::Result;
use crate::feasibility::{check_constrained, check_unconstrained, lp_oracle, Method, Status};
use crate::generate::{mixed_model, random_constraints, random_direction};
use crate::model::SinrTarget;
use crate::region::log_convexity_probe;
use crate::spectral::max_spectral_radius_bruteforce;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Negates the spectral criterion before comparing, so the harness can
    /// prove it notices a broken implementation.
    pub inject_bug: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 1,
            inject_bug: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    /// Seed of the first failing trial and what went wrong.
    pub first_failure: Option<(u64, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub properties: Vec<PropertyOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> usize {
        self.properties.iter().map(|p| p.passed).sum()
    }

    pub fn failed(&self) -> usize {
        self.properties.iter().map(|p| p.failed).sum()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }
}

/// Per-trial seed, spread so neighbouring trials are unrelated.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(trial as u64)
}

type Check = fn(&mut ChaCha8Rng, bool) -> Result<std::result::Result<(), String>>;

const PROPERTIES: &[(&str, Check)] = &[
    ("unconstrained criterion agrees with LP", unconstrained_vs_lp),
    ("capped criterion agrees with LP", capped_vs_lp),
    ("balancer trace monotone and bounded", balancer_trace),
    ("balancer reaches brute-force optimum", balancer_optimum),
    ("criterion is homogeneous", homogeneity),
    ("dropping a session keeps feasibility", drop_session),
    ("feasible region is log-convex", log_convexity),
];

pub fn run(opts: &VerifyOptions) -> VerifyReport {
    let properties = PROPERTIES
        .iter()
        .enumerate()
        .map(|(pi, &(name, check))| {
            let mut out = PropertyOutcome {
                name,
                passed: 0,
                failed: 0,
                first_failure: None,
            };
            for t in 0..opts.trials {
                let seed = trial_seed(opts.seed.wrapping_add(pi as u64 * 1_000_003), t);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let res = match check(&mut rng, opts.inject_bug) {
                    Ok(r) => r,
                    Err(e) => Err(format!("error: {e}")),
                };
                match res {
                    Ok(()) => out.passed += 1,
                    Err(msg) => {
                        out.failed += 1;
                        out.first_failure.get_or_insert((seed, msg));
                    }
                }
            }
            out
        })
        .collect();
    VerifyReport { properties }
}

fn feasible(status: Status, flip: bool) -> bool {
    (status == Status::Feasible) != flip
}

/// Target with criterion exactly `u` along a random direction.
fn scaled_target(
    rng: &mut ChaCha8Rng,
    model: &crate::model::NetworkModel,
) -> Result<(SinrTarget, f64)> {
    let d = SinrTarget::new(random_direction(rng, model.num_sessions()))?;
    let lam = max_spectral_radius_bruteforce(model, &d)?.0;
    let mut u = rng.gen_range(0.5..1.5);
    if (u - 1.0f64).abs() < 1e-3 {
        u = 0.9;
    }
    Ok((d.scaled(u / lam)?, u))
}

fn unconstrained_vs_lp(rng: &mut ChaCha8Rng, bug: bool) -> Result<std::result::Result<(), String>> {
    let model = mixed_model(rng, 2..=4, 1..=3)?;
    let (mu, u) = scaled_target(rng, &model)?;
    let verdict = check_unconstrained(&model, &mu, Method::Brute)?;
    let lp = lp_oracle(&model, &mu, None)?;
    Ok(if feasible(verdict.status, bug) == feasible(lp.status, false) {
        Ok(())
    } else {
        Err(format!("criterion {u}: spectral {:?}, LP {:?}", verdict.status, lp.status))
    })
}

fn capped_vs_lp(rng: &mut ChaCha8Rng, bug: bool) -> Result<std::result::Result<(), String>> {
    let model = mixed_model(rng, 2..=4, 1..=3)?;
    let cons = random_constraints(rng, model.num_sessions(), 1, 3)?;
    let d = SinrTarget::new(random_direction(rng, model.num_sessions()))?;
    let beta = solve_beta_constrained(&model, &d, &cons, &SolveOptions::default())?.beta_star;
    let mut u = rng.gen_range(0.5..1.5);
    if (u - 1.0f64).abs() < 1e-3 {
        u = 0.9;
    }
    let mu = d.scaled(beta * u)?;
    let verdict = check_constrained(&model, &mu, &cons, Method::Brute)?;
    if verdict.status == Status::Boundary {
        return Ok(Ok(()));
    }
    let lp = lp_oracle(&model, &mu, Some(&cons))?;
    Ok(if feasible(verdict.status, bug) == feasible(lp.status, false) {
        Ok(())
    } else {
        Err(format!("scale {u}: spectral {:?}, LP {:?}", verdict.status, lp.status))
    })
}

fn balancer_trace(rng: &mut ChaCha8Rng, _bug: bool) -> Result<std::result::Result<(), String>> {
    let model = mixed_model(rng, 3..=4, 1..=3)?;
    let mu = SinrTarget::new(random_direction(rng, model.num_sessions()))?;
    let bound = 1.0 / max_spectral_radius_bruteforce(&model, &mu)?.0;
    let r = solve_beta(&model, &mu, &SolveOptions::default())?;
    if let Some(w) = r.beta_trace.windows(2).find(|w| w[1] < w[0]) {
        return Ok(Err(format!("trace decreased from {} to {}", w[0], w[1])));
    }
    Ok(match r.beta_trace.iter().find(|&&b| b > bound + 1e-10) {
        Some(b) => Err(format!("trace value {b} above bound {bound}")),
        None => Ok(()),
    })
}

fn balancer_optimum(rng: &mut ChaCha8Rng, bug: bool) -> Result<std::result::Result<(), String>> {
    let model = mixed_model(rng, 2..=4, 1..=3)?;
    let mu = SinrTarget::new(random_direction(rng, model.num_sessions()))?;
    let lam = max_spectral_radius_bruteforce(&model, &mu)?.0;
    let lam = if bug { -lam } else { lam };
    let beta = solve_beta(&model, &mu, &SolveOptions::default())?.beta_star;
    Ok(if (beta * lam - 1.0).abs() <= 1e-8 {
        Ok(())
    } else {
        Err(format!("beta* {beta} vs brute-force {}", 1.0 / lam))
    })
}

fn homogeneity(rng: &mut ChaCha8Rng, bug: bool) -> Result<std::result::Result<(), String>> {
    let model = mixed_model(rng, 2..=4, 1..=3)?;
    let mu = SinrTarget::new(random_direction(rng, model.num_sessions()))?;
    let c = rng.gen_range(0.1..10.0);
    let a = max_spectral_radius_bruteforce(&model, &mu)?.0;
    let b = max_spectral_radius_bruteforce(&model, &mu.scaled(c)?)?.0;
    let b = if bug { -b } else { b };
    Ok(if (b - c * a).abs() <= 1e-10 * c * a {
        Ok(())
    } else {
        Err(format!("criterion({c} mu) = {b}, expected {}", c * a))
    })
}

fn drop_session(rng: &mut ChaCha8Rng, bug: bool) -> Result<std::result::Result<(), String>> {
    let model = mixed_model(rng, 3..=4, 1..=3)?;
    let d = SinrTarget::new(random_direction(rng, model.num_sessions()))?;
    let lam = max_spectral_radius_bruteforce(&model, &d)?.0;
    let mu = d.scaled(rng.gen_range(0.1..0.99) / lam)?;
    let drop = rng.gen_range(0..model.num_sessions());
    let sub = model.without_session(drop)?;
    let mut rest = mu.as_slice().to_vec();
    rest.remove(drop);
    let v = check_unconstrained(&sub, &SinrTarget::new(rest)?, Method::Brute)?;
    Ok(if feasible(v.status, bug) {
        Ok(())
    } else {
        Err(format!("dropping session {} gave {:?}", drop + 1, v.status))
    })
}

fn log_convexity(rng: &mut ChaCha8Rng, bug: bool) -> Result<std::result::Result<(), String>> {
    let model = mixed_model(rng, 2..=3, 1..=2)?;
    let r = log_convexity_probe(&model, 2, &[0.25, 0.5, 0.75], rng.gen())?;
    let violations = if bug { r.checks - r.violations } else { r.violations };
    Ok(if violations == 0 {
        Ok(())
    } else {
        Err(format!("{violations} of {} interpolants infeasible", r.checks))
    })
}
