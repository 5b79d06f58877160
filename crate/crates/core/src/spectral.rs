//! Perron-Frobenius tools for small dense nonnegative matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{EmbeddedSelection, NetworkModel, SinrTarget};

/// Perron root of a nonnegative irreducible matrix and its eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub radius: f64,
    /// Positive, unit Euclidean norm.
    pub eigvec: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterOptions {
    /// Relative width of the Collatz-Wielandt bracket at which to stop.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIterOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

/// Spectral radius with default tolerances.
pub fn spectral_radius(x: &DMatrix<f64>) -> Result<SpectralResult> {
    spectral_radius_with(x, PowerIterOptions::default())
}

/// Spectral radius of a nonnegative irreducible matrix by shifted power
/// iteration.
///
/// Each step multiplies by `X + s I` where `s` is the midpoint of the current
/// Collatz-Wielandt bracket `min_i (Xv)_i / v_i <= lambda <= max_i (Xv)_i / v_i`.
/// The positive shift makes the iteration matrix primitive, so periodic
/// inputs converge, and keeps the contraction ratio away from one when
/// `lambda` is small compared with the unit shift. The iteration stops once
/// the bracket is narrower than `tol` relative to its upper end.
pub fn spectral_radius_with(x: &DMatrix<f64>, opts: PowerIterOptions) -> Result<SpectralResult> {
    let n = check_square_nonnegative(x)?;
    if !is_irreducible(x) {
        return Err(Error::NotIrreducible);
    }

    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    for it in 0..=opts.max_iter {
        let xv = x * &v;
        let (lo, hi) = collatz_wielandt(&xv, &v);
        if hi - lo <= opts.tol * hi {
            let radius = 0.5 * (lo + hi);
            return Ok(SpectralResult {
                radius,
                eigvec: v,
                iterations: it,
                converged: true,
            });
        }
        let shift = 0.5 * (lo + hi);
        let mut w = xv + &v * shift;
        let norm = w.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical(format!(
                "power iteration produced a degenerate vector at step {it}"
            )));
        }
        w /= norm;
        v = w;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
    })
}

fn collatz_wielandt(xv: &DVector<f64>, v: &DVector<f64>) -> (f64, f64) {
    xv.iter()
        .zip(v.iter())
        .map(|(a, b)| a / b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        })
}

fn check_square_nonnegative(x: &DMatrix<f64>) -> Result<usize> {
    if x.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: x.ncols(),
        });
    }
    if x.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    if x.iter().any(|&e| !(e.is_finite() && e >= 0.0)) {
        return Err(Error::Precondition(
            "matrix must be finite and entry-wise nonnegative".into(),
        ));
    }
    Ok(x.nrows())
}

fn adjacency(x: &DMatrix<f64>) -> Vec<Vec<usize>> {
    (0..x.nrows())
        .map(|i| (0..x.ncols()).filter(|&j| x[(i, j)] > 0.0).collect())
        .collect()
}

fn reachable_from(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Whether the positivity digraph of `x` is strongly connected. A 1x1
/// matrix counts as irreducible.
pub fn is_irreducible(x: &DMatrix<f64>) -> bool {
    let n = x.nrows();
    if n == 0 || n != x.ncols() {
        return false;
    }
    let adj = adjacency(x);
    if !reachable_from(&adj, 0).into_iter().all(|s| s) {
        return false;
    }
    let mut rev = vec![Vec::new(); n];
    for (u, outs) in adj.iter().enumerate() {
        for &w in outs {
            rev[w].push(u);
        }
    }
    reachable_from(&rev, 0).into_iter().all(|s| s)
}

/// Period of an irreducible matrix: the gcd of its directed cycle lengths.
/// `None` when `x` is reducible. A 1x1 zero matrix has no cycles and
/// reports period 0.
pub fn period(x: &DMatrix<f64>) -> Option<usize> {
    if !is_irreducible(x) {
        return None;
    }
    let adj = adjacency(x);
    let n = adj.len();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if level[w] == usize::MAX {
                level[w] = level[u] + 1;
                queue.push_back(w);
            }
        }
    }
    let mut g = 0usize;
    for (u, outs) in adj.iter().enumerate() {
        for &w in outs {
            let d = (level[u] + 1).abs_diff(level[w]);
            g = gcd(g, d);
        }
    }
    Some(g)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Irreducible with aperiodic positivity pattern.
pub fn is_primitive(x: &DMatrix<f64>) -> bool {
    period(x) == Some(1)
}

/// Sufficient test for primitivity of a matrix set: in every matrix, every
/// row and every column has more than half of its entries positive. The
/// empty set passes vacuously. A `false` answer means "unknown", not
/// "not primitive".
pub fn primitive_set_sufficient(zs: &[DMatrix<f64>]) -> bool {
    zs.iter().all(|z| {
        let n = z.nrows();
        let rows_ok = z
            .row_iter()
            .all(|r| 2 * r.iter().filter(|&&e| e > 0.0).count() > n);
        let cols_ok = z
            .column_iter()
            .all(|c| 2 * c.iter().filter(|&&e| e > 0.0).count() > n);
        rows_ok && cols_ok
    })
}

/// Largest spectral radius over every embedded `Z = I - G`, by enumeration.
/// Ties keep the lexicographically first selection.
pub fn max_spectral_radius_bruteforce(
    model: &NetworkModel,
    mu: &SinrTarget,
) -> Result<(f64, EmbeddedSelection)> {
    max_over_selections(model, |k| {
        let z = model.interference_matrix(mu, k)?;
        Ok(spectral_radius(&z)?.radius)
    })
}

/// Maximises `f` over all embedded selections within the enumeration cap.
pub(crate) fn max_over_selections<F>(
    model: &NetworkModel,
    mut f: F,
) -> Result<(f64, EmbeddedSelection)>
where
    F: FnMut(&EmbeddedSelection) -> Result<f64>,
{
    let mut best: Option<(f64, EmbeddedSelection)> = None;
    for k in model.selections()? {
        let value = f(&k)?;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, k));
        }
    }
    Ok(best.expect("at least one embedded selection exists"))
}
