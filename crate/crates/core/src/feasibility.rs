//! Feasibility verdicts for SINR targets.
//!
//! Without power limits a target `mu` is feasible iff the largest Perron root
//! over all embedded interference matrices is strictly below one. Under
//! linear caps `sum_{i in Omega_m} p_i <= cap_m` each embedded matrix is
//! first shifted column-wise by its noise vector over the cap (see [`psi`]),
//! and the largest root may reach one.
//!
//! Every verdict can be cross-checked with [`lp_oracle`], which decides the
//! same question from the raw inequalities and never touches the spectral
//! path.

use nalgebra::{DMatrix, DVector};

use crate::balancer::{self, SolveOptions};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::model::{EmbeddedSelection, NetworkModel, PowerVector, SinrTarget};
use crate::spectral::{self, max_over_selections, spectral_radius};

/// Criterion values within this distance of the threshold are reported as
/// [`Status::Boundary`].
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Phase-one tolerance of the LP oracle.
pub const LP_FEASIBILITY_TOL: f64 = 1e-9;

/// One cap `sum_{i in sessions} p_i <= cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerConstraint {
    /// Zero-based session indices, sorted and deduplicated.
    sessions: Vec<usize>,
    cap: f64,
}

impl PowerConstraint {
    pub fn new(mut sessions: Vec<usize>, cap: f64) -> Result<Self> {
        sessions.sort_unstable();
        sessions.dedup();
        if sessions.is_empty() {
            return Err(Error::InvalidConstraint("session set is empty".into()));
        }
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::InvalidConstraint(format!(
                "cap must be positive and finite, got {cap}"
            )));
        }
        Ok(Self { sessions, cap })
    }

    pub fn sessions(&self) -> &[usize] {
        &self.sessions
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// Same sessions, cap multiplied by `factor`.
    pub fn with_cap_scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.sessions.clone(), self.cap * factor)
    }
}

/// The power set `P`: `p >= 0` plus `M >= 1` linear caps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    constraints: Vec<PowerConstraint>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<PowerConstraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidConstraint(
                "a constraint set needs at least one constraint".into(),
            ));
        }
        Ok(Self { constraints })
    }

    /// Single cap on the total power of all `n` sessions.
    pub fn total_power(n: usize, cap: f64) -> Result<Self> {
        Self::new(vec![PowerConstraint::new((0..n).collect(), cap)?])
    }

    pub fn constraints(&self) -> &[PowerConstraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Every cap multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.constraints
                .iter()
                .map(|c| c.with_cap_scaled(factor))
                .collect::<Result<_>>()?,
        )
    }

    pub(crate) fn validate_for(&self, n: usize) -> Result<()> {
        for c in &self.constraints {
            if let Some(&bad) = c.sessions.iter().find(|&&s| s >= n) {
                return Err(Error::InvalidConstraint(format!(
                    "session {} out of range for a {}-session model",
                    bad + 1,
                    n
                )));
            }
        }
        Ok(())
    }

    /// Whether `p` respects every cap up to relative slack `tol`.
    pub fn is_satisfied_by(&self, p: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|c| {
            let total: f64 = c.sessions.iter().map(|&i| p[i]).sum();
            total <= c.cap * (1.0 + tol)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Feasible,
    Infeasible,
    /// Within [`BOUNDARY_BAND`] of the threshold. For unconstrained checks
    /// the exact answer is "infeasible" at the threshold itself; for capped
    /// checks it is "feasible".
    Boundary,
}

/// Which route computes the spectral criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Enumerate every embedded system.
    #[default]
    Brute,
    /// Iterative max-row scheme with its fallbacks.
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: Status,
    /// Largest Perron root for spectral checks; the phase-one residual for
    /// LP checks.
    pub criterion_value: f64,
    pub witness: Option<PowerVector>,
    /// Signed distance `threshold - criterion_value`; positive on the
    /// feasible side.
    pub margin: f64,
}

impl Verdict {
    fn spectral(criterion: f64, witness: Option<PowerVector>) -> Self {
        let margin = 1.0 - criterion;
        let status = if margin.abs() <= BOUNDARY_BAND {
            Status::Boundary
        } else if margin > 0.0 {
            Status::Feasible
        } else {
            Status::Infeasible
        };
        Self {
            status,
            criterion_value: criterion,
            witness,
            margin,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }
}

/// Unconstrained feasibility: `max_G lambda(I - G) < 1`.
pub fn check_unconstrained(
    model: &NetworkModel,
    mu: &SinrTarget,
    method: Method,
) -> Result<Verdict> {
    model.check_target(mu)?;
    let criterion = match method {
        Method::Brute => spectral::max_spectral_radius_bruteforce(model, mu)?.0,
        Method::Iterative => {
            let report = balancer::solve_beta(model, mu, &SolveOptions::default())?;
            1.0 / report.beta_star
        }
    };
    let mut verdict = Verdict::spectral(criterion, None);
    if verdict.status == Status::Feasible {
        verdict.witness = min_power_witness(model, mu, None)?;
    }
    Ok(verdict)
}

/// Largest Perron root for two sessions in closed form, together with the
/// maximising selection. Each session picks the receiver with the largest
/// cross-to-direct gain ratio.
pub fn corollary1_radius(
    model: &NetworkModel,
    mu: &SinrTarget,
) -> Result<(f64, EmbeddedSelection)> {
    if model.num_sessions() != 2 {
        return Err(Error::SessionCount {
            expected: 2,
            found: model.num_sessions(),
        });
    }
    model.check_target(mu)?;
    let mut best = [(0.0f64, 0usize); 2];
    for (i, slot) in best.iter_mut().enumerate() {
        let j = 1 - i;
        for k in 0..model.receivers_per_session()[i] {
            let ratio = model.gain(i, k, j) / model.gain(i, k, i);
            if k == 0 || ratio > slot.0 {
                *slot = (ratio, k);
            }
        }
    }
    let mu = mu.as_slice();
    let radius = (mu[0] * best[0].0 * mu[1] * best[1].0).sqrt();
    Ok((radius, EmbeddedSelection::new(vec![best[0].1, best[1].1])))
}

/// Adds `y` to every column of `x` listed in `omega` (zero-based). An empty
/// `omega` returns `x` unchanged.
pub fn psi(x: &DMatrix<f64>, y: &DVector<f64>, omega: &[usize]) -> DMatrix<f64> {
    assert_eq!(x.nrows(), y.len(), "psi: row count and shift length differ");
    let mut z = x.clone();
    for &j in omega {
        let mut col = z.column_mut(j);
        col += y;
    }
    z
}

/// `max_m lambda(psi(I - G_k, n_k / cap_m, Omega_m))` for one embedded
/// system.
pub fn constrained_embedded_radius(
    model: &NetworkModel,
    mu: &SinrTarget,
    k: &EmbeddedSelection,
    cons: &ConstraintSet,
) -> Result<f64> {
    let z = model.interference_matrix(mu, k)?;
    let (_, ng) = model.embedded_system(mu, k)?;
    cons.constraints()
        .iter()
        .map(|c| {
            let shifted = psi(&z, &(&ng / c.cap()), c.sessions());
            Ok(spectral_radius(&shifted)?.radius)
        })
        .try_fold(0.0f64, |acc, r: Result<f64>| Ok(acc.max(r?)))
}

/// Feasibility under linear caps: the largest shifted Perron root is at
/// most one.
pub fn check_constrained(
    model: &NetworkModel,
    mu: &SinrTarget,
    cons: &ConstraintSet,
    method: Method,
) -> Result<Verdict> {
    model.check_target(mu)?;
    cons.validate_for(model.num_sessions())?;
    let criterion = match method {
        Method::Brute => {
            max_over_selections(model, |k| constrained_embedded_radius(model, mu, k, cons))?.0
        }
        Method::Iterative => {
            let report =
                balancer::solve_beta_constrained(model, mu, cons, &SolveOptions::default())?;
            1.0 / report.beta_star
        }
    };
    let mut verdict = Verdict::spectral(criterion, None);
    if verdict.status != Status::Infeasible {
        verdict.witness = min_power_witness(model, mu, Some(cons))?;
    }
    Ok(verdict)
}

fn build_lp(
    model: &NetworkModel,
    mu: &SinrTarget,
    cons: Option<&ConstraintSet>,
) -> Result<LinearProgram> {
    let n = model.num_sessions();
    let sys = model.coefficient_system(mu)?;
    let mut lp = LinearProgram::new(n).minimize(vec![1.0; n]);
    for r in 0..sys.a_matrix.nrows() {
        lp.add_row(
            sys.a_matrix.row(r).iter().copied().collect(),
            Relation::Ge,
            sys.noise_vec[r],
        );
    }
    if let Some(cons) = cons {
        cons.validate_for(n)?;
        for c in cons.constraints() {
            let mut row = vec![0.0; n];
            for &i in c.sessions() {
                row[i] = 1.0;
            }
            lp.add_row(row, Relation::Le, c.cap());
        }
    }
    Ok(lp)
}

fn min_power_witness(
    model: &NetworkModel,
    mu: &SinrTarget,
    cons: Option<&ConstraintSet>,
) -> Result<Option<PowerVector>> {
    match build_lp(model, mu, cons)?.solve(LP_FEASIBILITY_TOL) {
        Ok(LpOutcome::Optimal { x, .. }) => Ok(Some(PowerVector::new(x)?)),
        Ok(_) | Err(Error::Numerical(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Decides `exists p >= 0: A(mu) p >= n(mu)` (and every cap, when given) by
/// phase-one simplex. Feasible verdicts carry the minimum-total-power
/// witness.
pub fn lp_oracle(
    model: &NetworkModel,
    mu: &SinrTarget,
    cons: Option<&ConstraintSet>,
) -> Result<Verdict> {
    let lp = build_lp(model, mu, cons)?;
    Ok(match lp.solve(LP_FEASIBILITY_TOL)? {
        LpOutcome::Optimal { x, .. } => Verdict {
            status: Status::Feasible,
            criterion_value: 0.0,
            witness: Some(PowerVector::new(x)?),
            margin: 0.0,
        },
        LpOutcome::Infeasible { residual } => Verdict {
            status: Status::Infeasible,
            criterion_value: residual,
            witness: None,
            margin: -residual,
        },
        LpOutcome::Unbounded => {
            return Err(Error::Numerical(
                "minimum-power program reported unbounded".into(),
            ))
        }
    })
}

/// Stop when every session's SINR exceeds its target by at most this
/// relative amount.
const REDUCE_TOL: f64 = 1e-10;
const REDUCE_MAX_SWEEPS: usize = 10_000;

/// Lowers powers from a start point that meets `mu` until every session
/// meets it with equality.
///
/// Sessions are swept cyclically. A session above target has its power set
/// to the exact value that brings its worst receiver down to the target,
/// which can only help the other sessions.
pub fn power_reduce(
    model: &NetworkModel,
    p_start: &PowerVector,
    mu: &SinrTarget,
) -> Result<PowerVector> {
    model.check_target(mu)?;
    let gamma = model.session_sinr(p_start)?;
    let mu = mu.as_slice();
    if let Some(i) = (0..mu.len()).find(|&i| gamma[i] < mu[i] * (1.0 - 1e-12)) {
        return Err(Error::Precondition(format!(
            "start power gives session {} SINR {} below its target {}",
            i + 1,
            gamma[i],
            mu[i]
        )));
    }

    let n = model.num_sessions();
    let sigma2 = model.noise_variance();
    let mut p = p_start.as_slice().to_vec();
    for _ in 0..REDUCE_MAX_SWEEPS {
        let gamma = model.session_sinr(&PowerVector::new(p.clone())?)?;
        let excess = (0..n)
            .map(|i| (gamma[i] - mu[i]) / mu[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if excess <= REDUCE_TOL {
            return PowerVector::new(p);
        }
        for i in 0..n {
            let current = model.session_sinr(&PowerVector::new(p.clone())?)?[i];
            if current <= mu[i] {
                continue;
            }
            let needed = model
                .rows_of(i)
                .map(|r| {
                    let interference: f64 = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| model.gains()[(r, j)] * p[j])
                        .sum();
                    (interference + sigma2) / model.gains()[(r, i)]
                })
                .fold(0.0f64, f64::max);
            p[i] = (mu[i] * needed).min(p[i]);
        }
    }
    Err(Error::NoConvergence {
        iterations: REDUCE_MAX_SWEEPS,
    })
}

/// For two embedded systems differing in exactly one session `i`, returns
/// `(a_i^{k~} p^ - n^{k~}) * (a_i^{k^} p~ - n^{k^})` where `p^`, `p~` solve
/// the two square systems with equality. The product is never positive.
pub fn lemma2_sign_product(
    model: &NetworkModel,
    mu: &SinrTarget,
    k_hat: &EmbeddedSelection,
    k_tilde: &EmbeddedSelection,
) -> Result<f64> {
    model.check_selection(k_hat)?;
    model.check_selection(k_tilde)?;
    let diff = k_hat.differing_sessions(k_tilde);
    if diff.len() != 1 {
        return Err(Error::Precondition(format!(
            "selections must differ in exactly one session, they differ in {}",
            diff.len()
        )));
    }
    let i = diff[0];
    let solve = |k: &EmbeddedSelection| -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
        let z = model.interference_matrix(mu, k)?;
        let lam = spectral_radius(&z)?.radius;
        if lam >= 1.0 {
            return Err(Error::Precondition(format!(
                "embedded system {k} has spectral radius {lam} >= 1"
            )));
        }
        let (g, ng) = model.embedded_system(mu, k)?;
        let p = g
            .clone()
            .lu()
            .solve(&ng)
            .ok_or_else(|| Error::Numerical(format!("embedded system {k} is singular")))?;
        Ok((g, ng, p))
    };
    let (g_hat, n_hat, p_hat) = solve(k_hat)?;
    let (g_tilde, n_tilde, p_tilde) = solve(k_tilde)?;
    let first = g_tilde.row(i).dot(&p_hat.transpose()) - n_tilde[i];
    let second = g_hat.row(i).dot(&p_tilde.transpose()) - n_hat[i];
    Ok(first * second)
}
