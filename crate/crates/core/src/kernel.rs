//! The absorbing-chain kernel `(Q, r)` on `V ∪ {⊥}`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::realization::RealizationModel;

/// Allowed deviation of a row sum `Σ_j Q_ij + r_i` from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Transient block `Q` (n × n) and leak vector `r` to the absorbing state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRows", into = "KernelRows")]
pub struct AmcKernel {
    q: DMatrix<f64>,
    r: DVector<f64>,
}

/// Row-major serde form: each row lists `n` transient entries then the leak.
#[derive(Serialize, Deserialize)]
struct KernelRows {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<KernelRows> for AmcKernel {
    type Error = Error;

    fn try_from(value: KernelRows) -> Result<Self> {
        AmcKernel::from_rows(&value.rows)
    }
}

impl From<AmcKernel> for KernelRows {
    fn from(k: AmcKernel) -> Self {
        KernelRows { rows: (0..k.n()).map(|i| k.row(i)).collect() }
    }
}

impl AmcKernel {
    pub fn new(q: DMatrix<f64>, r: DVector<f64>) -> Result<Self> {
        let n = r.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "transient block is {}x{} but the leak vector has {n} entries",
                q.nrows(),
                q.ncols()
            )));
        }
        for i in 0..n {
            let row = q.row(i);
            if let Some(x) = row.iter().chain([&r[i]]).find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::InvalidKernel { row: i, reason: format!("entry {x} outside [0, 1]") });
            }
            let total = row.sum() + r[i];
            if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidKernel { row: i, reason: format!("row sums to {total}") });
            }
        }
        Ok(AmcKernel { q, r })
    }

    /// From rows of length `n + 1`, the last entry being the leak.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(i) = rows.iter().position(|row| row.len() != n + 1) {
            return Err(Error::InvalidKernel { row: i, reason: format!("expected {} columns", n + 1) });
        }
        let q = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let r = DVector::from_fn(n, |i, _| rows[i][n]);
        AmcKernel::new(q, r)
    }

    /// Completes `Q` with the leak `r_i = 1 - Σ_j Q_ij`.
    pub fn from_transient(q: DMatrix<f64>) -> Result<Self> {
        let r = DVector::from_fn(q.nrows(), |i, _| {
            let leak = 1.0 - q.row(i).sum();
            // rounding dust only; genuine excess is caught by validation
            if leak < 0.0 && leak > -ROW_SUM_TOLERANCE {
                0.0
            } else {
                leak
            }
        });
        AmcKernel::new(q, r)
    }

    /// The chain that stops with probability `alpha` and otherwise jumps to
    /// an independent draw from `p`, whatever the current state.
    pub fn canonical(alpha: f64, p: &[f64]) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1]")));
        }
        check_distribution(p)?;
        let n = p.len();
        let q = DMatrix::from_fn(n, n, |_, j| (1.0 - alpha) * p[j]);
        AmcKernel::from_transient(q)
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DVector<f64> {
        &self.r
    }

    /// Row `i` over `V ∪ {⊥}`; index `n` is the absorbing state.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let mut row: Vec<f64> = self.q.row(i).iter().copied().collect();
        row.push(self.r[i]);
        row
    }

    pub fn min_leak(&self) -> f64 {
        self.r.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `‖Q‖_∞`, the largest transient row mass.
    pub fn transient_norm(&self) -> f64 {
        (0..self.n()).map(|i| self.q.row(i).sum()).fold(0.0, f64::max)
    }

    /// Continuation law `Q_i· / (1 - r_i)`, or `None` when the row always absorbs.
    pub fn conditional_row(&self, i: usize) -> Option<Vec<f64>> {
        let mass = self.q.row(i).sum();
        (mass > 0.0).then(|| self.q.row(i).iter().map(|x| x / mass).collect())
    }

    /// Dense CSV: a header, then one line per row with `n` transient entries
    /// followed by the leak.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for j in 0..n {
            let _ = write!(out, "{j},");
        }
        out.push_str("absorbed\n");
        for i in 0..n {
            let row = self.row(i);
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })?;
            rows.push(row);
        }
        AmcKernel::from_rows(&rows)
    }
}

/// Checks that `p` is a probability vector to within 1e-12.
pub fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty vector".into()));
    }
    if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("entry {x} is not a nonnegative number")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!("sums to {total}")));
    }
    Ok(())
}

/// Rows whose zero leak was replaced by the floor during estimation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stabilization {
    pub floor: f64,
    pub rows: Vec<usize>,
}

/// A kernel together with how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRecord {
    pub kernel: AmcKernel,
    pub model: Option<RealizationModel>,
    pub master_seed: Option<u64>,
    pub samples_per_row: Option<usize>,
    pub stabilization: Option<Stabilization>,
}

impl KernelRecord {
    pub fn bare(kernel: AmcKernel) -> Self {
        KernelRecord { kernel, model: None, master_seed: None, samples_per_row: None, stabilization: None }
    }
}
