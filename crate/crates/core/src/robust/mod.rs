//! Perturbation analysis of a kernel over row-wise uncertainty sets.

pub mod transport;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::afc::{afc, fundamental_matrix, survival_decomposition, InitialDistribution};
use crate::error::{Error, Result};
use crate::kernel::AmcKernel;
use crate::seed::{Domain, Rng, SeedSpec};

pub use transport::{wasserstein1, GroundMetric};

/// Pseudocount added to both arguments of KL before renormalizing.
pub const KL_PSEUDOCOUNT: f64 = 1e-12;

/// Survival mass below which the decomposition is truncated.
const SURVIVAL_TAIL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Radius {
    /// Entry-wise radii `ε_ij`.
    Additive(DMatrix<f64>),
    /// `ε_ij = δ · Q⁰_ij`.
    Relative(f64),
}

/// Boxes `[(Q⁰_ij - ε_ij)_+, min(Q⁰_ij + ε_ij, 1)]` with a per-row leak floor.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySet {
    nominal: AmcKernel,
    radius: Radius,
    leak_floor: Vec<f64>,
}

impl UncertaintySet {
    pub fn new(nominal: AmcKernel, radius: Radius, leak_floor: Vec<f64>) -> Result<Self> {
        let n = nominal.n();
        if leak_floor.len() != n || leak_floor.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::InvalidParameter("leak floors must be n values in (0, 1]".into()));
        }
        match &radius {
            Radius::Additive(eps) => {
                if eps.nrows() != n || eps.ncols() != n || eps.iter().any(|&e| !(e.is_finite() && e >= 0.0)) {
                    return Err(Error::InvalidParameter("radii must be a nonnegative n x n matrix".into()));
                }
            }
            Radius::Relative(delta) => {
                if !(delta.is_finite() && *delta >= 0.0) {
                    return Err(Error::InvalidParameter(format!("relative radius {delta} must be nonnegative")));
                }
            }
        }
        let set = UncertaintySet { nominal, radius, leak_floor };
        for i in 0..n {
            let lower: f64 = (0..n).map(|j| set.lower(i, j)).sum();
            if lower > 1.0 - set.leak_floor[i] + 1e-15 {
                return Err(Error::InfeasibleRow { row: i });
            }
        }
        Ok(set)
    }

    /// Same radius `eps` on every entry and one floor for every row.
    pub fn additive(nominal: AmcKernel, eps: f64, leak_floor: f64) -> Result<Self> {
        let n = nominal.n();
        UncertaintySet::new(nominal, Radius::Additive(DMatrix::from_element(n, n, eps)), vec![leak_floor; n])
    }

    pub fn relative(nominal: AmcKernel, delta: f64, leak_floor: f64) -> Result<Self> {
        let n = nominal.n();
        UncertaintySet::new(nominal, Radius::Relative(delta), vec![leak_floor; n])
    }

    /// The degenerate set containing only `kernel`, floored at its own leaks.
    pub fn point(kernel: AmcKernel) -> Result<Self> {
        let floor = kernel.r().iter().copied().collect();
        UncertaintySet::new(kernel, Radius::Relative(0.0), floor)
    }

    pub fn nominal(&self) -> &AmcKernel {
        &self.nominal
    }

    pub fn leak_floor(&self) -> &[f64] {
        &self.leak_floor
    }

    pub fn min_leak_floor(&self) -> f64 {
        self.leak_floor.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn eps(&self, i: usize, j: usize) -> f64 {
        match &self.radius {
            Radius::Additive(eps) => eps[(i, j)],
            Radius::Relative(delta) => delta * self.nominal.q()[(i, j)],
        }
    }

    pub fn lower(&self, i: usize, j: usize) -> f64 {
        (self.nominal.q()[(i, j)] - self.eps(i, j)).max(0.0)
    }

    pub fn upper(&self, i: usize, j: usize) -> f64 {
        (self.nominal.q()[(i, j)] + self.eps(i, j)).min(1.0)
    }

    /// `ε̄ = max_i Σ_j ε_ij`.
    pub fn eps_bar(&self) -> f64 {
        let n = self.nominal.n();
        (0..n).map(|i| (0..n).map(|j| self.eps(i, j)).sum::<f64>()).fold(0.0, f64::max)
    }

    /// First row whose nominal leak is below its floor, if any.
    pub fn nominal_violation(&self) -> Option<usize> {
        (0..self.nominal.n()).find(|&i| self.nominal.r()[i] < self.leak_floor[i])
    }

    /// Whether `kernel` lies in the set, up to `tol` on every constraint.
    pub fn contains(&self, kernel: &AmcKernel, tol: f64) -> bool {
        let n = self.nominal.n();
        kernel.n() == n
            && (0..n).all(|i| {
                kernel.r()[i] >= self.leak_floor[i] - tol
                    && (0..n).all(|j| {
                        let q = kernel.q()[(i, j)];
                        q >= self.lower(i, j) - tol && q <= self.upper(i, j) + tol
                    })
            })
    }

    fn sample_row(&self, i: usize, rng: &mut Rng) -> Vec<f64> {
        let n = self.nominal.n();
        let lo: Vec<f64> = (0..n).map(|j| self.lower(i, j)).collect();
        let mut row: Vec<f64> = (0..n)
            .map(|j| {
                let hi = self.upper(i, j);
                if hi > lo[j] {
                    rng.random_range(lo[j]..=hi)
                } else {
                    lo[j]
                }
            })
            .collect();
        let cap = 1.0 - self.leak_floor[i];
        let total: f64 = row.iter().sum();
        if total > cap {
            // pull toward the lower corner, which stays inside every box
            let floor: f64 = lo.iter().sum();
            let lambda = ((cap - floor) / (total - floor)).clamp(0.0, 1.0);
            for (x, l) in row.iter_mut().zip(&lo) {
                *x = l + lambda * (*x - l);
            }
            let total: f64 = row.iter().sum();
            if total > cap {
                let shrink = cap / total;
                row.iter_mut().for_each(|x| *x *= shrink);
            }
        }
        row
    }

    /// One admissible kernel drawn from substreams `(Perturbation, i, sample)`.
    pub fn sample(&self, seed: SeedSpec, sample: u64) -> Result<AmcKernel> {
        self.assemble(|i| self.sample_row(i, &mut seed.stream(Domain::Perturbation, i as u64, sample)))
    }

    // rows that come back unchanged keep the nominal leak bit for bit
    fn assemble(&self, mut row: impl FnMut(usize) -> Vec<f64>) -> Result<AmcKernel> {
        let n = self.nominal.n();
        let mut q = DMatrix::zeros(n, n);
        let mut r = DVector::zeros(n);
        for i in 0..n {
            let values = row(i);
            let unchanged = values.iter().enumerate().all(|(j, &x)| x == self.nominal.q()[(i, j)]);
            r[i] = if unchanged {
                self.nominal.r()[i]
            } else {
                (1.0 - values.iter().sum::<f64>()).max(self.leak_floor[i])
            };
            for (j, x) in values.into_iter().enumerate() {
                q[(i, j)] = x;
            }
        }
        AmcKernel::new(q, r)
    }
}

/// One admissible kernel using a caller-provided generator.
pub fn sample_admissible(uset: &UncertaintySet, rng: &mut Rng) -> Result<AmcKernel> {
    uset.assemble(|i| uset.sample_row(i, rng))
}

/// `KL(p ‖ q)` after adding [`KL_PSEUDOCOUNT`] to both and renormalizing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let zp: f64 = p.iter().map(|x| x + KL_PSEUDOCOUNT).sum();
    let zq: f64 = q.iter().map(|x| x + KL_PSEUDOCOUNT).sum();
    p.iter()
        .zip(q)
        .map(|(a, b)| {
            let a = (a + KL_PSEUDOCOUNT) / zp;
            let b = (b + KL_PSEUDOCOUNT) / zq;
            a * (a / b).ln()
        })
        .sum::<f64>()
        .max(0.0)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * l1(p, q)
}

pub fn l1(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Discrepancy maximized by the adversarial search.
#[derive(Debug, Clone, Copy)]
pub enum Discrepancy<'a> {
    /// `KL(b ‖ b⁰)` of the perturbed profile against the nominal one.
    Kl,
    W1(&'a GroundMetric),
}

impl Discrepancy<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Discrepancy::Kl => "kl",
            Discrepancy::W1(_) => "w1",
        }
    }

    pub fn eval(&self, b: &[f64], nominal: &[f64]) -> Result<f64> {
        match self {
            Discrepancy::Kl => Ok(kl_divergence(b, nominal)),
            Discrepancy::W1(m) => wasserstein1(b, nominal, m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialResult {
    pub metric: String,
    pub samples: usize,
    /// Index of the maximizing sample.
    pub worst_sample: usize,
    pub worst_kernel: AmcKernel,
    pub worst_b: Vec<f64>,
    pub discrepancy: f64,
    pub nominal_b: Vec<f64>,
    /// Per-node minimum and maximum of `b` over the samples.
    pub envelope_min: Vec<f64>,
    pub envelope_max: Vec<f64>,
}

/// Samples admissible kernels and keeps the one whose profile is farthest
/// from the nominal profile. Ties go to the earliest sample.
pub fn adversarial_search(
    uset: &UncertaintySet,
    s: &InitialDistribution,
    metric: Discrepancy,
    n_samples: usize,
    seed: SeedSpec,
) -> Result<AdversarialResult> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    let nominal_b = afc(&uset.nominal, s)?.b;
    let evaluated = (0..n_samples)
        .into_par_iter()
        .map(|m| {
            let kernel = uset.sample(seed, m as u64)?;
            let b = afc(&kernel, s)?.b;
            let d = metric.eval(&b, &nominal_b)?;
            Ok((d, kernel, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = nominal_b.len();
    let mut envelope_min = vec![f64::INFINITY; n];
    let mut envelope_max = vec![f64::NEG_INFINITY; n];
    let mut worst = 0;
    for (m, (d, _, b)) in evaluated.iter().enumerate() {
        if *d > evaluated[worst].0 {
            worst = m;
        }
        for v in 0..n {
            envelope_min[v] = envelope_min[v].min(b[v]);
            envelope_max[v] = envelope_max[v].max(b[v]);
        }
    }
    let (discrepancy, worst_kernel, worst_b) = evaluated.into_iter().nth(worst).expect("nonempty");
    Ok(AdversarialResult {
        metric: metric.name().into(),
        samples: n_samples,
        worst_sample: worst,
        worst_kernel,
        worst_b,
        discrepancy,
        nominal_b,
        envelope_min,
        envelope_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// `u` outranks `v` for every kernel in the set.
    RobustU,
    /// `v` outranks `u` for every kernel in the set.
    RobustV,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitGap {
    pub u: usize,
    pub v: usize,
    /// `μ_u - μ_v` under the nominal kernel.
    pub gap: f64,
    /// `2 ε̄ / r̲_min²`, the largest possible change of the gap over the set.
    pub bound: f64,
    pub certificate: Certificate,
}

pub fn visit_gap(uset: &UncertaintySet, s: &InitialDistribution, u: usize, v: usize) -> Result<VisitGap> {
    let n = uset.nominal.n();
    if u == v || u >= n || v >= n {
        return Err(Error::InvalidParameter(format!("visit gap needs two distinct nodes below {n}, got {u} and {v}")));
    }
    if let Some(row) = uset.nominal_violation() {
        return Err(Error::Inadmissible { row });
    }
    let mu = afc(&uset.nominal, s)?.mu;
    let gap = mu[u] - mu[v];
    let r = uset.min_leak_floor();
    let bound = 2.0 * uset.eps_bar() / (r * r);
    let certificate = if gap > bound {
        Certificate::RobustU
    } else if gap < -bound {
        Certificate::RobustV
    } else {
        Certificate::Inconclusive
    };
    Ok(VisitGap { u, v, gap, bound, certificate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub approx: Vec<f64>,
    pub exact: Vec<f64>,
}

/// First-order change of the profile under `Q⁰ → Q⁰ + E`, next to the
/// exact change. The leak absorbs the row-sum change of `E`.
pub fn first_order_sensitivity(nominal: &AmcKernel, e: &DMatrix<f64>, s: &InitialDistribution) -> Result<Sensitivity> {
    let n = nominal.n();
    if e.nrows() != n || e.ncols() != n {
        return Err(Error::InvalidParameter("perturbation must be n x n".into()));
    }
    let perturbed_q = nominal.q() + e;
    for i in 0..n {
        let row = perturbed_q.row(i);
        if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) || row.sum() > 1.0 + 1e-12 {
            return Err(Error::Inadmissible { row: i });
        }
    }
    let n0 = fundamental_matrix(nominal)?;
    let ne = &n0 * e;
    let norm = (0..n).map(|i| ne.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    if norm >= 1.0 {
        return Err(Error::InvalidParameter(format!("‖N⁰E‖∞ = {norm} is not below 1")));
    }
    let sv = DVector::from_column_slice(s.as_slice()).transpose();
    let mu0 = &sv * &n0;
    let t0 = mu0.sum();
    let x = &sv * &ne * &n0;
    let xs = x.sum();
    let approx: Vec<f64> = (0..n).map(|v| x[v] / t0 - mu0[v] / t0 * xs / t0).collect();
    let b0 = afc(nominal, s)?.b;
    let b1 = afc(&AmcKernel::from_transient(perturbed_q)?, s)?.b;
    let exact = b1.iter().zip(&b0).map(|(a, b)| a - b).collect();
    Ok(Sensitivity { approx, exact })
}

/// Integral probability metrics accepted by the proxy-deviation bound.
#[derive(Debug, Clone, Copy)]
pub enum Ipm<'a> {
    TotalVariation,
    L1,
    W1(&'a GroundMetric),
}

impl Ipm<'_> {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            Ipm::TotalVariation => Ok(total_variation(a, b)),
            Ipm::L1 => Ok(l1(a, b)),
            Ipm::W1(m) => wasserstein1(a, b, m),
        }
    }

    fn diameter(&self) -> f64 {
        match self {
            Ipm::TotalVariation => 1.0,
            Ipm::L1 => 2.0,
            Ipm::W1(m) => m.diameter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyDeviation {
    /// `w₀ s + (1 - w₀) p̄` with `w₀ = 1 / E_s[T]`.
    pub b_proxy: Vec<f64>,
    pub deviation: f64,
    /// `Σ_{t≥1} w_t d(π_t, p̄)` plus the truncated tail mass times the diameter.
    pub bound: f64,
    pub terms: usize,
}

pub fn mixture_proxy_deviation(
    kernel: &AmcKernel,
    s: &InitialDistribution,
    p_bar: &[f64],
    metric: Ipm,
) -> Result<ProxyDeviation> {
    crate::kernel::check_distribution(p_bar)?;
    let b = afc(kernel, s)?.b;
    let parts = survival_decomposition(kernel, s, SURVIVAL_TAIL)?;
    let w0 = parts[0].0;
    let b_proxy: Vec<f64> = s.as_slice().iter().zip(p_bar).map(|(s, p)| w0 * s + (1.0 - w0) * p).collect();
    let deviation = metric.eval(&b, &b_proxy)?;
    let mut bound = 0.0;
    let mut covered = w0;
    for (w, pi) in &parts[1..] {
        bound += w * metric.eval(pi, p_bar)?;
        covered += w;
    }
    bound += (1.0 - covered).max(0.0) * metric.diameter();
    Ok(ProxyDeviation { b_proxy, deviation, bound, terms: parts.len() })
}
