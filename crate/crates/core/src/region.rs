//! The feasible SINR region: boundary tracing along direction fans,
//! geometric probes, and the zero-outage reduction for time-varying
//! channels.
//!
//! Boundary points are suprema. The open segment `{a mu : 0 < a < beta*}`
//! is feasible and nothing beyond it is, but `beta* mu` itself is only
//! approached as powers grow without bound.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::balancer::{solve_beta, solve_beta_constrained, SolveOptions};
use crate::error::{Error, Result};
use crate::feasibility::{
    check_constrained, check_unconstrained, constrained_embedded_radius, ConstraintSet, Method,
    Status,
};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::model::{NetworkModel, SinrTarget, DEFAULT_ENUMERATION_CAP};
use crate::spectral::spectral_radius;

/// Counterexample search budget for the N >= 3 convexity probe.
pub const COUNTEREXAMPLE_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    /// Unit 1-norm direction.
    pub direction: Vec<f64>,
    pub beta: f64,
    /// `beta * direction`.
    pub point: Vec<f64>,
    /// `beta` of every embedded system, in selection order, when the
    /// selection count is within the enumeration cap.
    pub per_embedded: Option<Vec<f64>>,
    pub constrained: bool,
}

fn unit_l1(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

/// Deterministic fan of `count` strictly positive unit-1-norm directions in
/// `n` dimensions: equal angular spacing for two sessions, a Fibonacci
/// lattice on the positive octant for three, seeded flat-Dirichlet samples
/// beyond that. A single direction is always the diagonal.
pub fn direction_fan(n: usize, count: usize, seed: u64) -> Vec<SinrTarget> {
    let raw: Vec<Vec<f64>> = if count == 1 || n == 1 {
        vec![vec![1.0; n]; count]
    } else if n == 2 {
        (0..count)
            .map(|j| {
                let theta = (j as f64 + 0.5) / count as f64 * FRAC_PI_2;
                vec![theta.cos(), theta.sin()]
            })
            .collect()
    } else if n == 3 {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        (0..count)
            .map(|j| {
                let z = 1.0 - (j as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = ((j as f64 + 0.5) * golden).fract() * FRAC_PI_2;
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect())
            .collect()
    };
    raw.iter()
        .map(|d| SinrTarget::new(unit_l1(d)).expect("fan directions are positive"))
        .collect()
}

/// `beta*` along `mu`, with or without caps.
pub fn boundary_beta(
    model: &NetworkModel,
    mu: &SinrTarget,
    cons: Option<&ConstraintSet>,
) -> Result<f64> {
    let opts = SolveOptions::default();
    Ok(match cons {
        None => solve_beta(model, mu, &opts)?.beta_star,
        Some(c) => solve_beta_constrained(model, mu, c, &opts)?.beta_star,
    })
}

/// `beta` of each embedded unicast system along `mu`.
pub fn per_embedded_betas(
    model: &NetworkModel,
    mu: &SinrTarget,
    cons: Option<&ConstraintSet>,
) -> Result<Vec<f64>> {
    model
        .selections()?
        .map(|k| {
            let lam = match cons {
                None => spectral_radius(&model.interference_matrix(mu, &k)?)?.radius,
                Some(c) => constrained_embedded_radius(model, mu, &k, c)?,
            };
            Ok(1.0 / lam)
        })
        .collect()
}

/// Boundary point along every direction of `fan`.
pub fn trace_boundary(
    model: &NetworkModel,
    fan: &[SinrTarget],
    cons: Option<&ConstraintSet>,
) -> Result<Vec<BoundaryPoint>> {
    let enumerable = model.selection_count() <= DEFAULT_ENUMERATION_CAP;
    fan.iter()
        .map(|d| {
            let direction = unit_l1(d.as_slice());
            let mu = SinrTarget::new(direction.clone())?;
            let beta = boundary_beta(model, &mu, cons)?;
            let per_embedded = if enumerable {
                Some(per_embedded_betas(model, &mu, cons)?)
            } else {
                None
            };
            Ok(BoundaryPoint {
                point: direction.iter().map(|x| x * beta).collect(),
                direction,
                beta,
                per_embedded,
                constrained: cons.is_some(),
            })
        })
        .collect()
}

/// Writes boundary points as CSV: `mu_1..mu_N` hold the point coordinates,
/// then `beta` and the `constrained` flag; floats carry 17 significant
/// digits.
pub fn write_region_csv<W: Write>(points: &[BoundaryPoint], out: W) -> Result<()> {
    let first = points
        .first()
        .ok_or_else(|| Error::Precondition("no boundary points to write".into()))?;
    let n = first.point.len();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=n).map(|i| format!("mu_{i}")).collect();
    header.push("beta".into());
    header.push("constrained".into());
    w.write_record(&header)?;
    for p in points {
        let mut rec: Vec<String> = p.point.iter().map(|x| format!("{x:.16e}")).collect();
        rec.push(format!("{:.16e}", p.beta));
        rec.push(p.constrained.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV to `path`. An empty list is an error and creates no file.
pub fn emit_region_csv(points: &[BoundaryPoint], path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Precondition("no boundary points to write".into()));
    }
    let mut buf = Vec::new();
    write_region_csv(points, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRow {
    pub point: Vec<f64>,
    pub beta: f64,
    pub constrained: bool,
}

pub fn read_region_csv(path: &Path) -> Result<Vec<RegionRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let width = rdr.headers()?.len();
    if width < 3 {
        return Err(Error::Precondition(format!(
            "{} has {width} columns, expected at least 3",
            path.display()
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::Precondition(format!("not a number: {s:?}")))
    };
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let point = (0..width - 2).map(|i| parse(&rec[i])).collect::<Result<_>>()?;
            Ok(RegionRow {
                point,
                beta: parse(&rec[width - 2])?,
                constrained: rec[width - 1].trim() == "true",
            })
        })
        .collect()
}

/// Largest relative per-point deviation between traced points and golden
/// rows, or an error when the shapes differ.
pub fn golden_deviation(points: &[BoundaryPoint], golden: &[RegionRow]) -> Result<f64> {
    if points.len() != golden.len() {
        return Err(Error::Precondition(format!(
            "{} points traced but the golden file has {} rows",
            points.len(),
            golden.len()
        )));
    }
    let mut worst = 0.0f64;
    for (p, g) in points.iter().zip(golden) {
        if p.point.len() != g.point.len() || p.constrained != g.constrained {
            return Err(Error::Precondition("golden row shape mismatch".into()));
        }
        for (a, b) in p.point.iter().chain([&p.beta]).zip(g.point.iter().chain([&g.beta])) {
            worst = worst.max((a - b).abs() / b.abs().max(1e-300));
        }
    }
    Ok(worst)
}

fn verdict(
    model: &NetworkModel,
    mu: &SinrTarget,
    cons: Option<&ConstraintSet>,
) -> Result<Status> {
    let method = if model.selection_count() <= DEFAULT_ENUMERATION_CAP {
        Method::Brute
    } else {
        Method::Iterative
    };
    Ok(match cons {
        None => check_unconstrained(model, mu, method)?.status,
        Some(c) => check_constrained(model, mu, c, method)?.status,
    })
}

fn random_direction<R: Rng>(rng: &mut R, n: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive shape");
    loop {
        let v: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        if v.iter().all(|&x| x > 0.0) {
            return unit_l1(&v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogConvexityReport {
    pub pairs: usize,
    pub checks: usize,
    pub violations: usize,
}

/// Samples `trials` pairs of strictly feasible targets (criterion at most
/// `1 - 1e-6`) and checks that every component-wise geometric interpolant
/// `mu^t mu'^(1-t)`, `t` in `t_grid`, is feasible.
pub fn log_convexity_probe(
    model: &NetworkModel,
    trials: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<LogConvexityReport> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let n = model.num_sessions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
        let d = random_direction(rng, n, 1.0);
        let beta = boundary_beta(model, &SinrTarget::new(d.clone())?, None)?;
        let beta = if beta.is_finite() { beta } else { 1.0 };
        let u = rng.gen_range(0.05..0.999);
        Ok(d.iter().map(|x| x * beta * u).collect())
    };
    let mut report = LogConvexityReport {
        pairs: 0,
        checks: 0,
        violations: 0,
    };
    for _ in 0..trials {
        let a = sample(&mut rng)?;
        let b = sample(&mut rng)?;
        report.pairs += 1;
        for &t in t_grid {
            let mid: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| x.powf(t) * y.powf(1.0 - t))
                .collect();
            report.checks += 1;
            if verdict(model, &SinrTarget::new(mid)?, None)? != Status::Feasible {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub pairs: usize,
    /// Convex combinations of two infeasible points found feasible.
    pub violations: usize,
    /// First violating pair, if any.
    pub counterexample: Option<(Vec<f64>, Vec<f64>)>,
}

/// Probes convexity of the infeasible region.
///
/// For two sessions (or whenever `cons` is given) it samples `trials` pairs
/// of infeasible targets and counts convex combinations at
/// `t in {0.25, 0.5, 0.75}` that come out feasible; without caps the count
/// should be zero, with caps violations are legitimate and only reported.
///
/// For three or more sessions without caps it searches up to `trials`
/// pairs for two infeasible targets with a feasible midpoint. Candidates
/// sit just outside the boundary along axis-biased directions, so the two
/// points of a pair tend to be cut off by different embedded systems.
pub fn infeasible_convexity_probe(
    model: &NetworkModel,
    trials: usize,
    seed: u64,
    cons: Option<&ConstraintSet>,
) -> Result<ConvexityReport> {
    let n = model.num_sessions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ConvexityReport {
        pairs: 0,
        violations: 0,
        counterexample: None,
    };
    if n == 1 && cons.is_none() {
        // nothing is infeasible
        return Ok(report);
    }
    let search = n >= 3 && cons.is_none();
    let (concentration, excess) = if search { (0.3, 1e-3) } else { (1.0, 0.0) };
    let sample = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
        let d = random_direction(rng, n, concentration);
        let beta = boundary_beta(model, &SinrTarget::new(d.clone())?, cons)?;
        let s = if search {
            1.0 + excess
        } else {
            rng.gen_range(1.001..3.0)
        };
        Ok(d.iter().map(|x| x * beta * s).collect())
    };
    let ts: &[f64] = if search { &[0.5] } else { &[0.25, 0.5, 0.75] };
    for _ in 0..trials {
        let a = sample(&mut rng)?;
        let b = sample(&mut rng)?;
        report.pairs += 1;
        let mut hit = false;
        for &t in ts {
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            if verdict(model, &SinrTarget::new(mix)?, cons)? == Status::Feasible {
                report.violations += 1;
                hit = true;
            }
        }
        if hit && report.counterexample.is_none() {
            report.counterexample = Some((a, b));
            if search {
                break;
            }
        }
    }
    Ok(report)
}

/// Time-varying unicast links: receiver `i` sees one of `K_i` gain vectors
/// `h_i^k` (one entry per transmitter) at any time.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroOutageInstance {
    states_per_receiver: Vec<usize>,
    gain_states: Vec<Vec<Vec<f64>>>,
    noise_variance: f64,
}

impl ZeroOutageInstance {
    pub fn new(gain_states: Vec<Vec<Vec<f64>>>, noise_variance: f64) -> Result<Self> {
        let n = gain_states.len();
        if n == 0 {
            return Err(Error::InvalidModel("at least one link is required".into()));
        }
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(Error::InvalidModel(format!(
                "noise variance must be positive and finite, got {noise_variance}"
            )));
        }
        for (i, states) in gain_states.iter().enumerate() {
            if states.is_empty() {
                return Err(Error::InvalidModel(format!("receiver {} has no states", i + 1)));
            }
            for (k, h) in states.iter().enumerate() {
                if h.len() != n {
                    return Err(Error::InvalidModel(format!(
                        "state {} of receiver {} has {} gains, expected {}",
                        k + 1,
                        i + 1,
                        h.len(),
                        n
                    )));
                }
                if let Some((j, g)) = h.iter().enumerate().find(|(_, g)| !(g.is_finite() && **g > 0.0)) {
                    return Err(Error::InvalidModel(format!(
                        "gain from transmitter {} in state {} of receiver {} must be positive, got {}",
                        j + 1,
                        k + 1,
                        i + 1,
                        g
                    )));
                }
            }
        }
        Ok(Self {
            states_per_receiver: gain_states.iter().map(Vec::len).collect(),
            gain_states,
            noise_variance,
        })
    }

    pub fn num_pairs(&self) -> usize {
        self.gain_states.len()
    }

    pub fn states_per_receiver(&self) -> &[usize] {
        &self.states_per_receiver
    }

    pub fn gain_states(&self) -> &[Vec<Vec<f64>>] {
        &self.gain_states
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }
}

/// Each channel state of receiver `i` becomes a separate receiver of
/// session `i`. A target is then feasible in the mapped multicast model iff
/// one fixed power vector meets it in every state.
pub fn zero_outage_map(inst: &ZeroOutageInstance) -> Result<NetworkModel> {
    NetworkModel::new(
        inst.states_per_receiver.clone(),
        inst.gain_states.iter().flatten().cloned().collect(),
        inst.noise_variance,
    )
}

/// Shared-power feasibility over every joint channel state, decided by one
/// LP that stacks the SINR inequalities of all `prod K_i` state
/// combinations. Built straight from the instance, independent of
/// [`zero_outage_map`].
pub fn zero_outage_stacked_lp(inst: &ZeroOutageInstance, mu: &SinrTarget) -> Result<bool> {
    let n = inst.num_pairs();
    if mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: mu.len(),
        });
    }
    let total: u128 = inst
        .states_per_receiver
        .iter()
        .fold(1u128, |a, &k| a.saturating_mul(k as u128));
    if total > DEFAULT_ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            count: total,
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    let mut lp = LinearProgram::new(n);
    let mut state = vec![0usize; n];
    loop {
        for i in 0..n {
            let h = &inst.gain_states[i][state[i]];
            // h_ii p_i - mu_i sum_{j != i} h_ij p_j >= mu_i sigma^2
            let row = (0..n)
                .map(|j| if j == i { h[i] } else { -mu.as_slice()[i] * h[j] })
                .collect();
            lp.add_row(row, Relation::Ge, mu.as_slice()[i] * inst.noise_variance);
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(matches!(
                    lp.solve(crate::feasibility::LP_FEASIBILITY_TOL)?,
                    LpOutcome::Optimal { .. }
                ));
            }
            pos -= 1;
            state[pos] += 1;
            if state[pos] < inst.states_per_receiver[pos] {
                break;
            }
            state[pos] = 0;
        }
    }
}
