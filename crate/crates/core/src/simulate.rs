//! Trajectory simulation of a kernel: the Monte Carlo counterpart of [`afc`].
//!
//! [`afc`]: crate::afc::afc

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::afc::InitialDistribution;
use crate::error::{Error, Result};
use crate::kernel::AmcKernel;
use crate::seed::{Domain, Rng, SeedSpec};

/// Default bound on a single trajectory's length.
pub const TRAJECTORY_CAP: usize = 1_000_000;

/// Inverse-CDF sampler over `0..len`, with `len` meaning absorption.
#[derive(Debug, Clone)]
pub struct Categorical {
    cumulative: Vec<f64>,
}

impl Categorical {
    pub fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Categorical { cumulative }
    }

    /// Index of the drawn category; `len()` if the draw falls past the mass.
    pub fn sample(&self, rng: &mut Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Samplers for the initial law and every kernel row (index `n` is `⊥`).
#[derive(Debug, Clone)]
pub struct ChainSampler {
    start: Categorical,
    last_start: usize,
    rows: Vec<Categorical>,
    n: usize,
}

impl ChainSampler {
    pub fn new(kernel: &AmcKernel, s: &InitialDistribution) -> Self {
        let n = kernel.n();
        ChainSampler {
            start: Categorical::new(s.as_slice()),
            last_start: s.as_slice().iter().rposition(|&x| x > 0.0).unwrap_or(0),
            rows: (0..n).map(|i| Categorical::new(&kernel.q().row(i).iter().copied().collect::<Vec<_>>())).collect(),
            n,
        }
    }

    /// The visited transient states `X_0, ..., X_{T-1}`.
    pub fn trajectory(&self, rng: &mut Rng, cap: usize) -> Result<Vec<u32>> {
        let mut path = Vec::new();
        let mut x = self.start.sample(rng).min(self.last_start);
        loop {
            if path.len() >= cap {
                return Err(Error::TrajectoryCap { cap });
            }
            path.push(x as u32);
            let next = self.rows[x].sample(rng);
            if next >= self.n {
                return Ok(path);
            }
            x = next;
        }
    }
}

/// Monte Carlo estimates of the profile with per-node standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationEstimate {
    pub trajectories: usize,
    /// `Σ visits / Σ lengths`.
    pub visit_ratio: Vec<f64>,
    pub visit_ratio_se: Vec<f64>,
    /// Empirical law of `X_U` at length-biased uniform steps, one per trajectory.
    pub uniform_step: Vec<f64>,
    pub uniform_step_se: Vec<f64>,
    /// Per-trajectory average of within-path frequencies (not length biased).
    pub within_path: Vec<f64>,
    pub mean_length: f64,
}

pub fn simulate_afc(
    kernel: &AmcKernel,
    s: &InitialDistribution,
    n_traj: usize,
    seed: SeedSpec,
) -> Result<SimulationEstimate> {
    simulate_afc_capped(kernel, s, n_traj, seed, TRAJECTORY_CAP)
}

pub fn simulate_afc_capped(
    kernel: &AmcKernel,
    s: &InitialDistribution,
    n_traj: usize,
    seed: SeedSpec,
    cap: usize,
) -> Result<SimulationEstimate> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("at least one trajectory is required".into()));
    }
    if s.len() != kernel.n() {
        return Err(Error::InvalidDistribution("initial law and kernel sizes differ".into()));
    }
    let n = kernel.n();
    let sampler = ChainSampler::new(kernel, s);
    let paths = (0..n_traj)
        .into_par_iter()
        .map(|t| sampler.trajectory(&mut seed.stream(Domain::Trajectory, 0, t as u64), cap))
        .collect::<Result<Vec<_>>>()?;

    let lengths: Vec<f64> = paths.iter().map(|p| p.len() as f64).collect();
    let total_len: f64 = lengths.iter().sum();
    let sum_len_sq: f64 = lengths.iter().map(|l| l * l).sum();
    let mut visits = vec![0.0; n];
    let mut within_path = vec![0.0; n];
    for path in &paths {
        let t = path.len() as f64;
        for &x in path {
            visits[x as usize] += 1.0;
            within_path[x as usize] += 1.0 / t / n_traj as f64;
        }
    }
    let visit_ratio: Vec<f64> = visits.iter().map(|v| v / total_len).collect();

    // Delta-method variance of a ratio estimator: residuals z = V_v - b_v T.
    // Σ z² = b_v² Σ T² + Σ over visited trajectories of ((c - b T)² - (b T)²).
    let mut z_sq: Vec<f64> = visit_ratio.iter().map(|b| b * b * sum_len_sq).collect();
    let mut counts = vec![0u32; n];
    for path in &paths {
        let t = path.len() as f64;
        for &x in path {
            counts[x as usize] += 1;
        }
        for &x in path {
            let v = x as usize;
            if counts[v] > 0 {
                let c = counts[v] as f64;
                let bt = visit_ratio[v] * t;
                z_sq[v] += (c - bt).powi(2) - bt * bt;
                counts[v] = 0;
            }
        }
    }
    let nt = n_traj as f64;
    let mean_length = total_len / nt;
    let visit_ratio_se: Vec<f64> = z_sq
        .iter()
        .map(|z| (z.max(0.0) / (nt * (nt - 1.0).max(1.0))).sqrt() / mean_length)
        .collect();

    // One uniform position in the pooled visit sequence per trajectory.
    let mut rng = seed.stream(Domain::UniformStep, 0, 0);
    let mut picks: Vec<u64> = (0..n_traj).map(|_| rng.random_range(0..total_len as u64)).collect();
    picks.sort_unstable();
    let mut uniform_counts = vec![0.0; n];
    let mut offset = 0u64;
    let mut cursor = 0;
    for path in &paths {
        let end = offset + path.len() as u64;
        while cursor < picks.len() && picks[cursor] < end {
            uniform_counts[path[(picks[cursor] - offset) as usize] as usize] += 1.0;
            cursor += 1;
        }
        offset = end;
    }
    let uniform_step: Vec<f64> = uniform_counts.iter().map(|c| c / nt).collect();
    let uniform_step_se = uniform_step
        .iter()
        .zip(&visit_ratio_se)
        .map(|(b, se)| (se * se + b * (1.0 - b) / nt).sqrt())
        .collect();

    Ok(SimulationEstimate {
        trajectories: n_traj,
        visit_ratio,
        visit_ratio_se,
        uniform_step,
        uniform_step_se,
        within_path,
        mean_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn immediate_absorption_samples_the_start() {
        let k = AmcKernel::from_transient(DMatrix::zeros(2, 2)).unwrap();
        let s = InitialDistribution::new(vec![0.25, 0.75]).unwrap();
        let est = simulate_afc(&k, &s, 4000, SeedSpec::new(3)).unwrap();
        assert_eq!(est.mean_length, 1.0);
        assert!((est.visit_ratio[1] - 0.75).abs() < 0.03);
        for (a, b) in est.visit_ratio.iter().zip(&est.within_path) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_is_an_error() {
        let k = AmcKernel::from_rows(&[vec![1.0 - 1e-9, 1e-9]]).unwrap();
        let s = InitialDistribution::uniform(1);
        let err = simulate_afc_capped(&k, &s, 1, SeedSpec::new(0), 100).unwrap_err();
        assert_eq!(err, Error::TrajectoryCap { cap: 100 });
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let k = AmcKernel::canonical(0.3, &[0.2, 0.3, 0.5]).unwrap();
        let s = InitialDistribution::uniform(3);
        let a = simulate_afc(&k, &s, 2000, SeedSpec::new(5)).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_afc(&k, &s, 2000, SeedSpec::new(5)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn categorical_edges() {
        let c = Categorical::new(&[0.0, 0.5, 0.0]);
        let mut rng = SeedSpec::new(1).stream(Domain::Trajectory, 0, 0);
        for _ in 0..100 {
            let x = c.sample(&mut rng);
            assert!(x == 1 || x == 3);
        }
    }
}
