//! Network description and the linear-algebra objects built from it.
//!
//! Receivers are indexed session-major, receiver-minor: row `r` of the gain
//! table (and of the coefficient matrix) belongs to session `i` and receiver
//! `k` with `r = offset(i) + k`. Indices are zero-based throughout the API.

use std::fmt;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default limit on the number of embedded unicast systems a brute-force
/// enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Sessions, receivers, link gains and noise of a multicast network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    receivers_per_session: Vec<usize>,
    offsets: Vec<usize>,
    /// K x N, entry (r, j) is the power gain from transmitter j to receiver r.
    gains: DMatrix<f64>,
    noise_variance: f64,
    relaxed: bool,
}

impl NetworkModel {
    /// Builds a model, requiring every gain and the noise variance to be
    /// strictly positive. `gains` holds one row per receiver in
    /// session-major order, each row with one entry per transmitter.
    pub fn new(
        receivers_per_session: Vec<usize>,
        gains: Vec<Vec<f64>>,
        noise_variance: f64,
    ) -> Result<Self> {
        Self::build(receivers_per_session, gains, noise_variance, false)
    }

    /// Like [`NetworkModel::new`] but accepts zero cross gains. Direct gains
    /// must still be positive. Spectral routines check irreducibility of
    /// every matrix they touch, so reducible instances are reported rather
    /// than silently mis-analysed.
    pub fn new_relaxed(
        receivers_per_session: Vec<usize>,
        gains: Vec<Vec<f64>>,
        noise_variance: f64,
    ) -> Result<Self> {
        Self::build(receivers_per_session, gains, noise_variance, true)
    }

    fn build(
        receivers_per_session: Vec<usize>,
        gains: Vec<Vec<f64>>,
        noise_variance: f64,
        relaxed: bool,
    ) -> Result<Self> {
        let n = receivers_per_session.len();
        if n == 0 {
            return Err(Error::InvalidModel("at least one session is required".into()));
        }
        if let Some(i) = receivers_per_session.iter().position(|&k| k == 0) {
            return Err(Error::InvalidModel(format!(
                "session {} has no receivers",
                i + 1
            )));
        }
        let k_total: usize = receivers_per_session.iter().sum();
        if gains.len() != k_total {
            return Err(Error::InvalidModel(format!(
                "gain table has {} rows but the sessions have {} receivers in total",
                gains.len(),
                k_total
            )));
        }
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(Error::InvalidModel(format!(
                "noise variance must be positive and finite, got {noise_variance}"
            )));
        }

        let mut offsets = Vec::with_capacity(n);
        let mut acc = 0;
        for &k in &receivers_per_session {
            offsets.push(acc);
            acc += k;
        }

        let mut table = DMatrix::zeros(k_total, n);
        for (r, row) in gains.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidModel(format!(
                    "gain row {} has {} entries, expected {}",
                    r + 1,
                    row.len(),
                    n
                )));
            }
            let session = session_of_row(&offsets, r);
            for (j, &g) in row.iter().enumerate() {
                let direct = j == session;
                let ok = g.is_finite() && (g > 0.0 || (relaxed && !direct && g == 0.0));
                if !ok {
                    return Err(Error::InvalidModel(format!(
                        "gain for receiver {} of session {} from transmitter {} must be {}, got {}",
                        r - offsets[session] + 1,
                        session + 1,
                        j + 1,
                        if relaxed && !direct { "non-negative" } else { "positive" },
                        g
                    )));
                }
                table[(r, j)] = g;
            }
        }

        Ok(Self {
            receivers_per_session,
            offsets,
            gains: table,
            noise_variance,
            relaxed,
        })
    }

    pub fn num_sessions(&self) -> usize {
        self.receivers_per_session.len()
    }

    /// Total receiver count `K`.
    pub fn num_receivers(&self) -> usize {
        self.gains.nrows()
    }

    pub fn receivers_per_session(&self) -> &[usize] {
        &self.receivers_per_session
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    /// The K x N gain table.
    pub fn gains(&self) -> &DMatrix<f64> {
        &self.gains
    }

    /// Gain from transmitter `tx` to receiver `receiver` of `session`.
    pub fn gain(&self, session: usize, receiver: usize, tx: usize) -> f64 {
        self.gains[(self.row_index(session, receiver), tx)]
    }

    /// Row position of receiver `receiver` of `session`.
    pub fn row_index(&self, session: usize, receiver: usize) -> usize {
        debug_assert!(receiver < self.receivers_per_session[session]);
        self.offsets[session] + receiver
    }

    /// Rows that belong to `session`.
    pub fn rows_of(&self, session: usize) -> Range<usize> {
        let start = self.offsets[session];
        start..start + self.receivers_per_session[session]
    }

    /// Session owning row `row`.
    pub fn session_of(&self, row: usize) -> usize {
        session_of_row(&self.offsets, row)
    }

    /// Number of embedded unicast systems, `prod K_i`.
    pub fn selection_count(&self) -> u128 {
        self.receivers_per_session
            .iter()
            .fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }

    /// Per-receiver SINR in row order.
    pub fn per_receiver_sinr(&self, p: &PowerVector) -> Result<Vec<f64>> {
        self.check_power(p)?;
        let p = p.as_slice();
        let n = self.num_sessions();
        Ok((0..self.num_receivers())
            .map(|r| {
                let i = self.session_of(r);
                let interference: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.gains[(r, j)] * p[j])
                    .sum();
                self.gains[(r, i)] * p[i] / (interference + self.noise_variance)
            })
            .collect())
    }

    /// Session SINR vector: each session's worst receiver.
    pub fn session_sinr(&self, p: &PowerVector) -> Result<Vec<f64>> {
        let per_rx = self.per_receiver_sinr(p)?;
        Ok((0..self.num_sessions())
            .map(|i| {
                self.rows_of(i)
                    .map(|r| per_rx[r])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect())
    }

    /// Off-diagonal normalised interference coefficient
    /// `mu_i * g(r, t_j) / g(r, t_i)` for row `r` of session `i`.
    fn cross_coefficient(&self, mu_i: f64, row: usize, session: usize, tx: usize) -> f64 {
        mu_i * self.gains[(row, tx)] / self.gains[(row, session)]
    }

    fn noise_coefficient(&self, mu_i: f64, row: usize, session: usize) -> f64 {
        mu_i * self.noise_variance / self.gains[(row, session)]
    }

    /// The stacked constraint system `A(mu) p >= n(mu)`.
    pub fn coefficient_system(&self, mu: &SinrTarget) -> Result<CoefficientSystem> {
        self.check_target(mu)?;
        let n = self.num_sessions();
        let k = self.num_receivers();
        let mut a = DMatrix::zeros(k, n);
        let mut noise = DVector::zeros(k);
        let mut row_index = Vec::with_capacity(k);
        for i in 0..n {
            let mu_i = mu.as_slice()[i];
            for (kr, r) in self.rows_of(i).enumerate() {
                for j in 0..n {
                    a[(r, j)] = if j == i {
                        1.0
                    } else {
                        -self.cross_coefficient(mu_i, r, i, j)
                    };
                }
                noise[r] = self.noise_coefficient(mu_i, r, i);
                row_index.push((i, kr));
            }
        }
        Ok(CoefficientSystem {
            a_matrix: a,
            noise_vec: noise,
            row_index,
        })
    }

    /// The embedded unicast system `(G, n_G)` picked by `k`.
    pub fn embedded_system(
        &self,
        mu: &SinrTarget,
        k: &EmbeddedSelection,
    ) -> Result<(DMatrix<f64>, DVector<f64>)> {
        self.check_target(mu)?;
        self.check_selection(k)?;
        let n = self.num_sessions();
        let mut g = DMatrix::zeros(n, n);
        let mut ng = DVector::zeros(n);
        for i in 0..n {
            let mu_i = mu.as_slice()[i];
            let r = self.row_index(i, k.as_slice()[i]);
            for j in 0..n {
                g[(i, j)] = if j == i {
                    1.0
                } else {
                    -self.cross_coefficient(mu_i, r, i, j)
                };
            }
            ng[i] = self.noise_coefficient(mu_i, r, i);
        }
        Ok((g, ng))
    }

    /// `Z = I - G` for the embedded system picked by `k`.
    pub fn interference_matrix(
        &self,
        mu: &SinrTarget,
        k: &EmbeddedSelection,
    ) -> Result<DMatrix<f64>> {
        self.check_target(mu)?;
        self.check_selection(k)?;
        let n = self.num_sessions();
        let mut z = DMatrix::zeros(n, n);
        for i in 0..n {
            let mu_i = mu.as_slice()[i];
            let r = self.row_index(i, k.as_slice()[i]);
            for j in (0..n).filter(|&j| j != i) {
                z[(i, j)] = self.cross_coefficient(mu_i, r, i, j);
            }
        }
        Ok(z)
    }

    /// Row of `Z` contributed by receiver row `row`, together with its noise
    /// entry `n(mu)[row]`.
    pub(crate) fn interference_row(&self, mu: &[f64], row: usize) -> (Vec<f64>, f64) {
        let i = self.session_of(row);
        let n = self.num_sessions();
        let z = (0..n)
            .map(|j| {
                if j == i {
                    0.0
                } else {
                    self.cross_coefficient(mu[i], row, i, j)
                }
            })
            .collect();
        (z, self.noise_coefficient(mu[i], row, i))
    }

    /// All embedded selections in lexicographic order, refusing when there
    /// are more than [`DEFAULT_ENUMERATION_CAP`].
    pub fn selections(&self) -> Result<Selections> {
        self.selections_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn selections_with_cap(&self, cap: u128) -> Result<Selections> {
        let count = self.selection_count();
        if count > cap {
            return Err(Error::EnumerationCap { count, cap });
        }
        Ok(Selections {
            sizes: self.receivers_per_session.clone(),
            next: Some(vec![0; self.num_sessions()]),
        })
    }

    /// Model with session `session` removed (its receivers' rows and its
    /// transmitter column dropped).
    pub fn without_session(&self, session: usize) -> Result<Self> {
        let n = self.num_sessions();
        if session >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: session + 1,
            });
        }
        if n == 1 {
            return Err(Error::InvalidModel("cannot remove the only session".into()));
        }
        let sizes: Vec<usize> = self
            .receivers_per_session
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != session)
            .map(|(_, &k)| k)
            .collect();
        let rows: Vec<Vec<f64>> = (0..self.num_receivers())
            .filter(|&r| self.session_of(r) != session)
            .map(|r| {
                (0..n)
                    .filter(|&j| j != session)
                    .map(|j| self.gains[(r, j)])
                    .collect()
            })
            .collect();
        Self::build(sizes, rows, self.noise_variance, self.relaxed)
    }

    /// Gain table as nested rows, in the same layout [`NetworkModel::new`]
    /// takes.
    pub fn gain_rows(&self) -> Vec<Vec<f64>> {
        self.gains
            .row_iter()
            .map(|row| row.iter().copied().collect())
            .collect()
    }

    pub(crate) fn check_target(&self, mu: &SinrTarget) -> Result<()> {
        if mu.len() != self.num_sessions() {
            return Err(Error::DimensionMismatch {
                expected: self.num_sessions(),
                found: mu.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_power(&self, p: &PowerVector) -> Result<()> {
        if p.len() != self.num_sessions() {
            return Err(Error::DimensionMismatch {
                expected: self.num_sessions(),
                found: p.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_selection(&self, k: &EmbeddedSelection) -> Result<()> {
        if k.len() != self.num_sessions() {
            return Err(Error::DimensionMismatch {
                expected: self.num_sessions(),
                found: k.len(),
            });
        }
        for (i, (&ki, &size)) in k.as_slice().iter().zip(&self.receivers_per_session).enumerate() {
            if ki >= size {
                return Err(Error::InvalidSelection {
                    session: i,
                    index: ki,
                    receivers: size,
                });
            }
        }
        Ok(())
    }
}

fn session_of_row(offsets: &[usize], row: usize) -> usize {
    offsets.partition_point(|&o| o <= row) - 1
}

/// `A(mu)`, `n(mu)` and the (session, receiver) pair of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSystem {
    pub a_matrix: DMatrix<f64>,
    pub noise_vec: DVector<f64>,
    pub row_index: Vec<(usize, usize)>,
}

impl CoefficientSystem {
    /// Row position of (session, receiver).
    pub fn row_of(&self, session: usize, receiver: usize) -> Option<usize> {
        self.row_index
            .iter()
            .position(|&(i, k)| i == session && k == receiver)
    }

    /// Whether `A p >= n` holds up to a relative slack `tol`.
    pub fn is_satisfied_by(&self, p: &[f64], tol: f64) -> bool {
        let p = DVector::from_column_slice(p);
        let lhs = &self.a_matrix * &p;
        (0..lhs.len()).all(|r| {
            let scale: f64 = 1.0
                + self
                    .a_matrix
                    .row(r)
                    .iter()
                    .zip(p.iter())
                    .map(|(a, x)| (a * x).abs())
                    .sum::<f64>()
                + self.noise_vec[r];
            lhs[r] - self.noise_vec[r] >= -tol * scale
        })
    }
}

/// Target SINR vector; every component strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTarget(Vec<f64>);

impl SinrTarget {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidTarget("empty target".into()));
        }
        if let Some((i, v)) = mu
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidTarget(format!(
                "component {} must be positive and finite, got {} (drop the session instead of targeting zero)",
                i + 1,
                v
            )));
        }
        Ok(Self(mu))
    }

    /// Converts dB values to linear ratios.
    pub fn from_db(db: &[f64]) -> Result<Self> {
        Self::new(db.iter().map(|d| 10f64.powf(d / 10.0)).collect())
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `c * mu`; `c` must be positive.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|m| m * c).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Transmit powers, one per session.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = p
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidPower(format!(
                "component {} must be non-negative and finite, got {}",
                i + 1,
                v
            )));
        }
        Ok(Self(p))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// One receiver index per session, zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EmbeddedSelection(Vec<usize>);

impl EmbeddedSelection {
    pub fn new(k: Vec<usize>) -> Self {
        Self(k)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sessions whose receiver index differs from `other`'s.
    pub fn differing_sessions(&self, other: &Self) -> Vec<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect()
    }
}

impl fmt::Display for EmbeddedSelection {
    /// One-based, e.g. `(1,2)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", k + 1)?;
        }
        write!(f, ")")
    }
}

/// Lexicographic odometer over all embedded selections.
#[derive(Debug, Clone)]
pub struct Selections {
    sizes: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for Selections {
    type Item = EmbeddedSelection;

    fn next(&mut self) -> Option<EmbeddedSelection> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut pos = succ.len();
        let mut advanced = false;
        while pos > 0 {
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.sizes[pos] {
                advanced = true;
                break;
            }
            succ[pos] = 0;
        }
        if advanced {
            self.next = Some(succ);
        }
        Some(EmbeddedSelection(current))
    }
}
