//! Iterative computation of the boundary scaling `beta*(mu)`.
//!
//! Each step sets every transmitter's next power to the largest
//! interference seen by any of its receivers,
//!
//! ```text
//! y_i = max_k (Z_k p)_i,   beta = min_i p_i / y_i,   p <- y / |y|,
//! ```
//!
//! except that `p` moves to `y + s p` with `s` the midpoint of the current
//! eigenvalue bracket, which leaves the fixed point alone and speeds up
//! nearly periodic sets.
//!
//! without ever forming a selected matrix: the rows of the coefficient
//! system depend only on their own session, so the max decomposes per
//! session. `beta` never decreases and is bounded by `1 / max_Z lambda(Z)`;
//! `max_i p_i / y_i` bounds the same quantity from above, and the loop stops
//! once the two meet. When the matrix set is primitive they always meet.
//! Two-session systems are periodic and never do, so a closed form or
//! enumeration supplies the answer instead (see [`Fallback`]).

use std::io::Write;

use crate::error::{Error, Result};
use crate::feasibility::{
    constrained_embedded_radius, corollary1_radius, psi, ConstraintSet, PowerConstraint,
};
use crate::model::{NetworkModel, SinrTarget, DEFAULT_ENUMERATION_CAP};
use crate::spectral::{max_over_selections, spectral_radius};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Relative tolerance on the gap between the lower and upper bounds.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting power direction; must be strictly positive. Defaults to the
    /// uniform unit vector.
    pub p0: Option<Vec<f64>>,
    /// Enumeration cap for the brute-force fallback.
    pub cap: u128,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            p0: None,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Where `beta_star` came from when the iteration alone could not certify it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    Corollary1,
    BruteForce,
}

impl std::fmt::Display for Fallback {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Fallback::Corollary1 => "corollary1",
            Fallback::BruteForce => "bruteforce",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `+inf` for a lone unconstrained session, which is never limited.
    pub beta_star: f64,
    /// Unit Euclidean norm, positive.
    pub p_star: Vec<f64>,
    pub iterations: usize,
    /// `beta^(k)` for every step taken.
    pub beta_trace: Vec<f64>,
    /// Last `max_i p_i / y_i` seen by the loop.
    pub upper_bound: f64,
    pub converged: bool,
    pub fallback_used: Option<Fallback>,
    /// Outcome of the majority-positive primitivity test on the matrix set.
    pub set_primitive: bool,
}

/// Per-constraint reports and their minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedReport {
    pub beta_star: f64,
    /// Index of the constraint attaining the minimum.
    pub binding: usize,
    pub per_constraint: Vec<SolveReport>,
}

/// Receiver row of a (possibly shifted) interference matrix:
/// `z . p + shift * sum_{j in omega} p_j`.
#[derive(Debug, Clone)]
struct RowTerm {
    z: Vec<f64>,
    shift: f64,
}

#[derive(Debug, Clone)]
struct RowSet {
    n: usize,
    sessions: Vec<Vec<RowTerm>>,
    omega: Vec<bool>,
}

impl RowSet {
    fn build(model: &NetworkModel, mu: &SinrTarget, cap: Option<&PowerConstraint>) -> Self {
        let n = model.num_sessions();
        let mut omega = vec![false; n];
        if let Some(c) = cap {
            c.sessions().iter().for_each(|&j| omega[j] = true);
        }
        let sessions = (0..n)
            .map(|i| {
                model
                    .rows_of(i)
                    .map(|r| {
                        let (z, noise) = model.interference_row(mu.as_slice(), r);
                        let shift = cap.map_or(0.0, |c| noise / c.cap());
                        RowTerm { z, shift }
                    })
                    .collect()
            })
            .collect();
        Self { n, sessions, omega }
    }

    fn entry_positive(&self, term: &RowTerm, j: usize) -> bool {
        term.z[j] > 0.0 || (term.shift > 0.0 && self.omega[j])
    }

    /// Majority-positive test over every matrix the rows can form, without
    /// enumerating them: rows are checked one by one, and a column's worst
    /// case picks, in each session, a receiver with a zero in that column
    /// whenever one exists.
    fn primitive_set_sufficient(&self) -> bool {
        let n = self.n;
        let rows_ok = self.sessions.iter().flatten().all(|t| {
            2 * (0..n).filter(|&j| self.entry_positive(t, j)).count() > n
        });
        let cols_ok = (0..n).all(|j| {
            let worst = self
                .sessions
                .iter()
                .filter(|rows| rows.iter().all(|t| self.entry_positive(t, j)))
                .count();
            2 * worst > n
        });
        rows_ok && cols_ok
    }

    fn apply(&self, p: &[f64]) -> Vec<f64> {
        let omega_sum: f64 = p
            .iter()
            .zip(&self.omega)
            .filter(|(_, &o)| o)
            .map(|(x, _)| x)
            .sum();
        self.sessions
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|t| {
                        t.z.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + t.shift * omega_sum
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }
}

struct LoopOutcome {
    p: Vec<f64>,
    trace: Vec<f64>,
    upper: f64,
    converged: bool,
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn initial_power(n: usize, opts: &SolveOptions) -> Result<Vec<f64>> {
    match &opts.p0 {
        None => Ok(vec![1.0 / (n as f64).sqrt(); n]),
        Some(p0) => {
            if p0.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p0.len(),
                });
            }
            if p0.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return Err(Error::InvalidPower(
                    "initial power must be strictly positive".into(),
                ));
            }
            Ok(normalized(p0))
        }
    }
}

/// Relative bound gap accepted as converged when `beta` stops increasing in
/// floating point before the bounds meet to `tol`.
const SATURATION_GAP: f64 = 1e-9;

/// The iteration itself. On sets not known to be primitive it also stops
/// when `beta` stalls, since the bounds may never meet there. A step that
/// lowers `beta` can only come from roundoff and ends the loop.
fn run_loop(rows: &RowSet, p0: Vec<f64>, opts: &SolveOptions, primitive: bool) -> Result<LoopOutcome> {
    let mut p = p0;
    let mut prev_p = p.clone();
    let mut trace = Vec::new();
    let mut upper = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let y = rows.apply(&p);
        if let Some(i) = y.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Numerical(format!(
                "interference update for session {} is {} (zero cross gains?)",
                i + 1,
                y[i]
            )));
        }
        let (lo, hi) = p
            .iter()
            .zip(&y)
            .map(|(a, b)| a / b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
        let prev = trace.last().copied();
        if prev.is_some_and(|b| lo < b) {
            // The lower bound has saturated and this step only carries
            // roundoff; keep the previous iterate.
            return Ok(LoopOutcome {
                p: prev_p,
                trace,
                upper,
                converged: upper - prev.unwrap_or(0.0) <= SATURATION_GAP * upper,
            });
        }
        trace.push(lo);
        upper = hi;
        if hi - lo <= opts.tol * lo {
            return Ok(LoopOutcome {
                p,
                trace,
                upper,
                converged: true,
            });
        }
        if !primitive {
            if let Some(prev) = prev {
                if (lo - prev).abs() <= opts.tol * lo {
                    return Ok(LoopOutcome {
                        p,
                        trace,
                        upper,
                        converged: false,
                    });
                }
            }
        }
        // Shifting by the midpoint of the current eigenvalue bracket damps
        // the oscillating modes. The bound `max_i (Zp)_i / p_i` stays
        // non-increasing for any non-negative shift.
        let shift = 0.5 * (1.0 / lo + 1.0 / hi);
        let next: Vec<f64> = y.iter().zip(&p).map(|(a, b)| a + shift * b).collect();
        prev_p = std::mem::replace(&mut p, normalized(&next));
    }
    Ok(LoopOutcome {
        p,
        trace,
        upper,
        converged: false,
    })
}

fn unit_perron_vector(z: &nalgebra::DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let s = spectral_radius(z)?;
    Ok((s.radius, s.eigvec.iter().copied().collect()))
}

/// Computes `beta*(mu) = 1 / max_Z lambda(Z)` with the iterative scheme.
///
/// When the matrix set fails the majority-positive primitivity test the
/// value comes from the two-session closed form, or from enumeration when
/// the selection count is within `opts.cap`; the loop still runs and its
/// trace is reported. Beyond the cap the loop result is returned only if its
/// bounds met.
pub fn solve_beta(model: &NetworkModel, mu: &SinrTarget, opts: &SolveOptions) -> Result<SolveReport> {
    model.check_target(mu)?;
    let n = model.num_sessions();
    if n == 1 {
        // Z = [0]: no interference, every target is reachable.
        return Ok(SolveReport {
            beta_star: f64::INFINITY,
            p_star: vec![1.0],
            iterations: 0,
            beta_trace: Vec::new(),
            upper_bound: f64::INFINITY,
            converged: true,
            fallback_used: None,
            set_primitive: false,
        });
    }
    let rows = RowSet::build(model, mu, None);
    let primitive = rows.primitive_set_sufficient();
    let out = run_loop(&rows, initial_power(n, opts)?, opts, primitive)?;
    let mut report = SolveReport {
        beta_star: *out.trace.last().unwrap_or(&0.0),
        p_star: out.p,
        iterations: out.trace.len(),
        beta_trace: out.trace,
        upper_bound: out.upper,
        converged: out.converged,
        fallback_used: None,
        set_primitive: primitive,
    };
    if primitive {
        return Ok(report);
    }

    let fallback = if n == 2 {
        let (lam, k) = corollary1_radius(model, mu)?;
        let (_, v) = unit_perron_vector(&model.interference_matrix(mu, &k)?)?;
        Some((Fallback::Corollary1, lam, v))
    } else if model.selection_count() <= opts.cap {
        let (lam, k) = max_over_selections(model, |k| {
            Ok(spectral_radius(&model.interference_matrix(mu, k)?)?.radius)
        })?;
        let (_, v) = unit_perron_vector(&model.interference_matrix(mu, &k)?)?;
        Some((Fallback::BruteForce, lam, v))
    } else {
        None
    };
    match fallback {
        Some((tag, lam, v)) => {
            report.beta_star = 1.0 / lam;
            report.p_star = v;
            report.fallback_used = Some(tag);
            report.converged = true;
            Ok(report)
        }
        None if report.converged => Ok(report),
        None => Err(Error::PrimitivityUnknown {
            iterations: report.iterations,
            last_beta: report.beta_star,
            trace: report.beta_trace,
        }),
    }
}

/// Runs the scheme once per cap over the shifted set
/// `{psi(I - G, n_G / cap_m, Omega_m)}` and returns the smallest `beta`.
pub fn solve_beta_constrained(
    model: &NetworkModel,
    mu: &SinrTarget,
    cons: &ConstraintSet,
    opts: &SolveOptions,
) -> Result<ConstrainedReport> {
    model.check_target(mu)?;
    cons.validate_for(model.num_sessions())?;
    let n = model.num_sessions();
    let mut per_constraint = Vec::with_capacity(cons.len());
    for c in cons.constraints() {
        let rows = RowSet::build(model, mu, Some(c));
        let primitive = rows.primitive_set_sufficient();
        let out = run_loop(&rows, initial_power(n, opts)?, opts, primitive)?;
        let mut report = SolveReport {
            beta_star: *out.trace.last().unwrap_or(&0.0),
            p_star: out.p,
            iterations: out.trace.len(),
            beta_trace: out.trace,
            upper_bound: out.upper,
            converged: out.converged,
            fallback_used: None,
            set_primitive: primitive,
        };
        if !primitive {
            if model.selection_count() <= opts.cap {
                let single = ConstraintSet::new(vec![c.clone()])?;
                let (lam, k) = max_over_selections(model, |k| {
                    constrained_embedded_radius(model, mu, k, &single)
                })?;
                let z = model.interference_matrix(mu, &k)?;
                let (_, ng) = model.embedded_system(mu, &k)?;
                let (_, v) = unit_perron_vector(&psi(&z, &(&ng / c.cap()), c.sessions()))?;
                report.beta_star = 1.0 / lam;
                report.p_star = v;
                report.fallback_used = Some(Fallback::BruteForce);
                report.converged = true;
            } else if !report.converged {
                return Err(Error::PrimitivityUnknown {
                    iterations: report.iterations,
                    last_beta: report.beta_star,
                    trace: report.beta_trace,
                });
            }
        }
        per_constraint.push(report);
    }
    let (binding, beta_star) = per_constraint
        .iter()
        .map(|r| r.beta_star)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (m, b)| if b < best.1 { (m, b) } else { best });
    Ok(ConstrainedReport {
        beta_star,
        binding,
        per_constraint,
    })
}

/// Max-min SINR balancing: `sup_p min_i gamma_i(p) = beta*(1)`.
pub fn power_balance(model: &NetworkModel, opts: &SolveOptions) -> Result<SolveReport> {
    solve_beta(model, &SinrTarget::ones(model.num_sessions()), opts)
}

/// Writes the `beta` trace as CSV with header `k,beta`.
pub fn write_trace_csv<W: Write>(report: &SolveReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "beta"])?;
    for (k, b) in report.beta_trace.iter().enumerate() {
        w.write_record([k.to_string(), format!("{b:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::max_spectral_radius_bruteforce;

    fn pair() -> NetworkModel {
        NetworkModel::new(
            vec![2, 2],
            vec![
                vec![0.5326, 0.6801],
                vec![0.5539, 0.3672],
                vec![0.2393, 0.8669],
                vec![0.5789, 0.4068],
            ],
            0.1,
        )
        .unwrap()
    }

    fn three_session() -> NetworkModel {
        NetworkModel::new(
            vec![1, 1, 1],
            vec![vec![1.0, 0.2, 0.3], vec![0.1, 1.0, 0.4], vec![0.5, 0.25, 1.0]],
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn unicast_matches_perron_root() {
        let m = three_session();
        let r = power_balance(&m, &SolveOptions::default()).unwrap();
        assert!(r.set_primitive);
        assert!(r.fallback_used.is_none());
        assert!(r.converged);
        let lam = spectral_radius(&m.interference_matrix(&SinrTarget::ones(3), &crate::EmbeddedSelection::new(vec![0, 0, 0])).unwrap())
            .unwrap()
            .radius;
        assert!((r.beta_star - 1.0 / lam).abs() < 1e-10);
        assert!(r.beta_trace.windows(2).all(|w| w[1] >= w[0]));
        assert!((r.p_star.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_sessions_use_closed_form() {
        let r = power_balance(&pair(), &SolveOptions::default()).unwrap();
        assert_eq!(r.fallback_used, Some(Fallback::Corollary1));
        assert!(!r.set_primitive);
        let expected = 1.0 / ((0.6801f64 / 0.5326) * (0.5789 / 0.4068)).sqrt();
        assert!((r.beta_star - expected).abs() < 1e-12);
        assert!((r.beta_star - 0.742).abs() < 1e-3);
        let bound = 1.0 / max_spectral_radius_bruteforce(&pair(), &SinrTarget::ones(2)).unwrap().0;
        assert!(r.beta_trace.iter().all(|&b| b <= bound + 1e-10));
    }

    #[test]
    fn symmetric_unicast_pair() {
        let c = 0.25;
        let m = NetworkModel::new(vec![1, 1], vec![vec![1.0, c], vec![c, 1.0]], 0.1).unwrap();
        let r = power_balance(&m, &SolveOptions::default()).unwrap();
        assert!((r.beta_star - 1.0 / c).abs() < 1e-12);
    }

    #[test]
    fn lone_session_is_unbounded() {
        let m = NetworkModel::new(vec![2], vec![vec![1.0], vec![0.5]], 0.1).unwrap();
        let r = power_balance(&m, &SolveOptions::default()).unwrap();
        assert!(r.beta_star.is_infinite());
    }

    #[test]
    fn lone_session_under_cap() {
        let m = NetworkModel::new(vec![1], vec![vec![1.0]], 1.0).unwrap();
        let cons = ConstraintSet::total_power(1, 1.0).unwrap();
        let r = solve_beta_constrained(&m, &SinrTarget::ones(1), &cons, &SolveOptions::default()).unwrap();
        assert!((r.beta_star - 1.0).abs() < 1e-15);
    }

    #[test]
    fn huge_cap_recovers_unconstrained() {
        let m = three_session();
        let mu = SinrTarget::new(vec![0.5, 1.0, 2.0]).unwrap();
        let free = solve_beta(&m, &mu, &SolveOptions::default()).unwrap();
        let cons = ConstraintSet::total_power(3, 1e9).unwrap();
        let capped = solve_beta_constrained(&m, &mu, &cons, &SolveOptions::default()).unwrap();
        assert!((capped.beta_star - free.beta_star).abs() <= 1e-6 * free.beta_star);
    }

    #[test]
    fn rejects_bad_start() {
        let opts = SolveOptions {
            p0: Some(vec![1.0, 0.0, 1.0]),
            ..SolveOptions::default()
        };
        assert!(solve_beta(&three_session(), &SinrTarget::ones(3), &opts).is_err());
    }

    #[test]
    fn unknown_primitivity_beyond_cap_reports_trace() {
        let opts = SolveOptions {
            cap: 0,
            ..SolveOptions::default()
        };
        // Two-session fallback is exact regardless of the cap.
        assert!(power_balance(&pair(), &opts).is_ok());
        // Four sessions with three zero cross gains per row fail the majority
        // test, and with cap 0 there is nothing to fall back on.
        let mut rows = vec![vec![0.0; 4]; 4];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
            row[(i + 1) % 4] = 0.5;
        }
        let m = NetworkModel::new_relaxed(vec![1; 4], rows, 0.1).unwrap();
        let opts = SolveOptions {
            p0: Some(vec![1.0, 2.0, 3.0, 4.0]),
            ..opts
        };
        match power_balance(&m, &opts) {
            Err(Error::PrimitivityUnknown { trace, .. }) => assert!(!trace.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_csv_shape() {
        let r = power_balance(&three_session(), &SolveOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,beta"));
        assert_eq!(lines.count(), r.beta_trace.len());
    }
}
