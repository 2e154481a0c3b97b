//! Fundamental matrix, expected visits and the absorbing-frequency profile.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_distribution, AmcKernel};

/// Largest accepted residual of a linear solve, entrywise.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Two conditional rows closer than this in ℓ1 count as equal.
pub const ROW_COINCIDENCE_TOLERANCE: f64 = 1e-9;

/// Initial law `s` over the transient states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct InitialDistribution(Vec<f64>);

impl InitialDistribution {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        check_distribution(&s)?;
        Ok(InitialDistribution(s))
    }

    pub fn uniform(n: usize) -> Self {
        InitialDistribution(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, v: usize) -> Self {
        let mut s = vec![0.0; n];
        s[v] = 1.0;
        InitialDistribution(s)
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
}

impl TryFrom<Vec<f64>> for InitialDistribution {
    type Error = Error;

    fn try_from(s: Vec<f64>) -> Result<Self> {
        InitialDistribution::new(s)
    }
}

impl From<InitialDistribution> for Vec<f64> {
    fn from(s: InitialDistribution) -> Self {
        s.0
    }
}

/// Visits `mu = sN`, the profile `b = mu / (mu·1)` and `E_s[T] = mu·1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfcProfile {
    pub b: Vec<f64>,
    pub mu: Vec<f64>,
    pub expected_t: f64,
}

impl AfcProfile {
    /// Node ids ordered by decreasing mass, ties to the smallest id.
    pub fn ranking(&self) -> Vec<usize> {
        let members: Vec<usize> = (0..self.b.len()).collect();
        crate::centrality::rank_by_score(&self.b, &members, self.b.len())
    }

    pub fn top(&self, k: usize) -> Vec<usize> {
        let mut r = self.ranking();
        r.truncate(k);
        r
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,b,mu\n");
        for (v, (b, mu)) in self.b.iter().zip(&self.mu).enumerate() {
            out.push_str(&format!("{v},{b},{mu}\n"));
        }
        out
    }
}

/// Rows that cannot reach a leaking row through positive transient entries.
/// Such a closed class makes `I - Q` singular.
pub fn trapped_rows(kernel: &AmcKernel) -> Vec<usize> {
    let n = kernel.n();
    let q = kernel.q();
    let mut escapes: Vec<bool> = (0..n).map(|i| kernel.r()[i] > 0.0).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| escapes[i]).collect();
    while let Some(j) = queue.pop_front() {
        for i in 0..n {
            if !escapes[i] && q[(i, j)] > 0.0 {
                escapes[i] = true;
                queue.push_back(i);
            }
        }
    }
    (0..n).filter(|&i| !escapes[i]).collect()
}

fn check_len(kernel: &AmcKernel, s: &InitialDistribution) -> Result<()> {
    if s.len() != kernel.n() {
        return Err(Error::InvalidDistribution(format!(
            "initial law has {} entries for a {}-state kernel",
            s.len(),
            kernel.n()
        )));
    }
    Ok(())
}

fn singular(kernel: &AmcKernel) -> Error {
    let trapped = trapped_rows(kernel);
    let rows = if trapped.is_empty() {
        (0..kernel.n()).filter(|&i| kernel.r()[i] == 0.0).collect()
    } else {
        trapped
    };
    Error::Singular { zero_leak_rows: rows }
}

/// Solves `(I - Q)ᵀ x = sᵀ`, so `x = μ(s)`.
pub fn visits(kernel: &AmcKernel, s: &InitialDistribution) -> Result<Vec<f64>> {
    check_len(kernel, s)?;
    if !trapped_rows(kernel).is_empty() {
        return Err(singular(kernel));
    }
    let n = kernel.n();
    let a = (DMatrix::identity(n, n) - kernel.q()).transpose();
    let rhs = DVector::from_column_slice(s.as_slice());
    let x = a.clone().lu().solve(&rhs).ok_or_else(|| singular(kernel))?;
    let residual = (&a * &x - &rhs).amax();
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Residual { residual });
    }
    Ok(x.iter().copied().collect())
}

pub fn afc(kernel: &AmcKernel, s: &InitialDistribution) -> Result<AfcProfile> {
    let mu = visits(kernel, s)?;
    let expected_t: f64 = mu.iter().sum();
    let b = mu.iter().map(|m| m / expected_t).collect();
    Ok(AfcProfile { b, mu, expected_t })
}

/// `N = (I - Q)^{-1}`, checked against `(I - Q)N = I`.
pub fn fundamental_matrix(kernel: &AmcKernel) -> Result<DMatrix<f64>> {
    if !trapped_rows(kernel).is_empty() {
        return Err(singular(kernel));
    }
    let n = kernel.n();
    let a = DMatrix::identity(n, n) - kernel.q();
    let id = DMatrix::identity(n, n);
    let inv = a.clone().lu().solve(&id).ok_or_else(|| singular(kernel))?;
    let residual = (&a * &inv - id).amax();
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Residual { residual });
    }
    Ok(inv)
}

/// Clips negative rounding dust (above -1e-14) and renormalizes.
fn clean_distribution(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        if *x < 0.0 && *x > -1e-14 {
            *x = 0.0;
        }
    }
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

/// The profile with the initial step removed: `(μ - s) / (E_s[T] - 1)`.
pub fn post_initial_afc(kernel: &AmcKernel, s: &InitialDistribution) -> Result<Vec<f64>> {
    let profile = afc(kernel, s)?;
    if profile.expected_t <= 1.0 + 1e-12 {
        return Err(Error::NoPostInitialSteps { expected_t: profile.expected_t });
    }
    let denom = profile.expected_t - 1.0;
    let raw = profile.mu.iter().zip(s.as_slice()).map(|(m, s)| (m - s) / denom).collect();
    Ok(clean_distribution(raw))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureCheck {
    /// `(1/E_s[T]) s + (1 - 1/E_s[T]) p̂`.
    pub b_mixture: Vec<f64>,
    /// Mean continuation law over the rows that can continue.
    pub p_hat: Vec<f64>,
    /// `max_i ‖Q_i·/(1 - r_i) - p̂‖_1` over those rows.
    pub max_row_divergence: f64,
    /// Whether every continuation row coincides with `p̂`.
    pub applicable: bool,
    pub expected_t: f64,
}

/// Evaluates the mixture formula against the kernel. Rows that always
/// absorb have no continuation law and are left out of `p̂` and the
/// divergence.
pub fn mixture_check(kernel: &AmcKernel, s: &InitialDistribution) -> Result<MixtureCheck> {
    let n = kernel.n();
    let rows: Vec<Vec<f64>> = (0..n).filter_map(|i| kernel.conditional_row(i)).collect();
    if rows.is_empty() {
        return Err(Error::NoContinuation);
    }
    let mut p_hat = vec![0.0; n];
    for row in &rows {
        for (p, x) in p_hat.iter_mut().zip(row) {
            *p += x / rows.len() as f64;
        }
    }
    let max_row_divergence = rows
        .iter()
        .map(|row| row.iter().zip(&p_hat).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let profile = afc(kernel, s)?;
    let w0 = 1.0 / profile.expected_t;
    let b_mixture = s.as_slice().iter().zip(&p_hat).map(|(s, p)| w0 * s + (1.0 - w0) * p).collect();
    Ok(MixtureCheck {
        b_mixture,
        p_hat,
        max_row_divergence,
        applicable: max_row_divergence <= ROW_COINCIDENCE_TOLERANCE,
        expected_t: profile.expected_t,
    })
}

/// Survival-weighted decomposition of the profile: pairs `(w_t, π_t)` with
/// `w_t = sQ^t1 / E_s[T]` and `π_t = sQ^t / sQ^t1`, so `b = Σ_t w_t π_t`.
/// Stops once the remaining survival mass falls below `tail`.
pub fn survival_decomposition(
    kernel: &AmcKernel,
    s: &InitialDistribution,
    tail: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let profile = afc(kernel, s)?;
    let q = kernel.q();
    let mut row = DVector::from_column_slice(s.as_slice()).transpose();
    let mut out = Vec::new();
    let mut remaining = profile.expected_t;
    loop {
        let mass = row.sum();
        if mass <= 0.0 {
            break;
        }
        out.push((mass / profile.expected_t, row.iter().map(|x| x / mass).collect()));
        remaining -= mass;
        if remaining < tail * profile.expected_t || out.len() >= 10_000_000 {
            break;
        }
        row = &row * q;
    }
    Ok(out)
}
