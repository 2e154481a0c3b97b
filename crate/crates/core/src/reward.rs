//! Reward-weighted profiles on an unchanged kernel.
//!
//! A step reward `ℓ_i(ω)` only enters through its row means `ψ_i`, and the
//! reward-AFC is `sNψ / sN1`, so every reward reuses the fundamental matrix
//! of the kernel.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::afc::{visits, InitialDistribution};
use crate::builder::StepSource;
use crate::centrality::rank_by_score;
use crate::error::{Error, Result};
use crate::graph::BaseTopology;
use crate::kernel::AmcKernel;
use crate::realization::{Simulator, Step};
use crate::seed::{Domain, SeedSpec};
use crate::simulate::{Categorical, TRAJECTORY_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSpec {
    /// `ℓ_i = f_i` at every visit to `i`.
    Node { f: Vec<f64> },
    /// `η(i, j)` for a move from `i` to `j`; column `n` is absorption.
    Transition { eta: Vec<Vec<f64>> },
    /// Total value `γ` of the realized local Top-k set (empty when absorbed).
    ValuedTopK { k: usize, gamma: Vec<f64> },
    /// As `ValuedTopK`, counting only members of `pool`.
    PoolTopK { k: usize, pool: Vec<usize>, gamma: Vec<f64> },
}

fn check_values(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidParameter(format!("{name} has {} entries, expected {n}", v.len())));
    }
    if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidParameter(format!("{name} has entry {x}; rewards must be nonnegative")));
    }
    Ok(())
}

impl RewardSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            RewardSpec::Node { f } => check_values("f", f, n),
            RewardSpec::Transition { eta } => {
                if eta.len() != n {
                    return Err(Error::InvalidParameter(format!("eta has {} rows, expected {n}", eta.len())));
                }
                eta.iter().try_for_each(|row| check_values("eta row", row, n + 1))
            }
            RewardSpec::ValuedTopK { k, gamma } | RewardSpec::PoolTopK { k, gamma, .. } => {
                if *k == 0 {
                    return Err(Error::InvalidParameter("k must be at least 1".into()));
                }
                if let RewardSpec::PoolTopK { pool, .. } = self {
                    if pool.iter().any(|&v| v >= n) || pool.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::InvalidParameter("pool must be sorted distinct node ids".into()));
                    }
                }
                check_values("gamma", gamma, n)
            }
        }
    }

    /// Ranking depth a step must carry for this reward.
    pub fn depth(&self) -> usize {
        match self {
            RewardSpec::ValuedTopK { k, .. } | RewardSpec::PoolTopK { k, .. } => *k,
            _ => 1,
        }
    }

    /// `ℓ_i(ω)` for a step from `i` that moved to `next` (`None` is `⊥`).
    pub fn step_reward(&self, i: usize, step: &Step, next: Option<usize>) -> f64 {
        match self {
            RewardSpec::Node { f } => f[i],
            RewardSpec::Transition { eta } => eta[i][next.unwrap_or(eta.len())],
            RewardSpec::ValuedTopK { k, gamma } => step.top(*k).iter().map(|&v| gamma[v]).sum(),
            RewardSpec::PoolTopK { k, pool, gamma } => step
                .top(*k)
                .iter()
                .filter(|v| pool.binary_search(v).is_ok())
                .map(|&v| gamma[v])
                .sum(),
        }
    }
}

/// `η(i, j) = 1{j ∈ V, j ≠ i}`: counts moves of the reported center.
pub fn switching_eta(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..=n).map(|j| f64::from(j < n && j != i)).collect()).collect()
}

/// `η(i, j) = max(f_j - f_i, 0)`, and zero on absorption.
pub fn improvement_eta(f: &[f64]) -> Vec<Vec<f64>> {
    let n = f.len();
    (0..n)
        .map(|i| (0..=n).map(|j| if j < n { (f[j] - f[i]).max(0.0) } else { 0.0 }).collect())
        .collect()
}

/// `ψ_i = Σ_j Q_ij η(i, j) + r_i η(i, ⊥)`.
pub fn transition_psi(kernel: &AmcKernel, eta: &[Vec<f64>]) -> Vec<f64> {
    (0..kernel.n())
        .map(|i| kernel.row(i).iter().zip(&eta[i]).map(|(p, e)| p * e).sum())
        .collect()
}

/// Row means `ψ` of the reward. Node rewards return `f`, transition rewards
/// are exact on `kernel`, and Top-k rewards average over the step law.
pub fn estimate_psi<S: StepSource>(spec: &RewardSpec, source: &S, kernel: &AmcKernel) -> Result<Vec<f64>> {
    let n = kernel.n();
    spec.validate(n)?;
    if source.n() != n {
        return Err(Error::InvalidParameter("step source and kernel sizes differ".into()));
    }
    match spec {
        RewardSpec::Node { f } => Ok(f.clone()),
        RewardSpec::Transition { eta } => Ok(transition_psi(kernel, eta)),
        _ => {
            if source.depth() < spec.depth() {
                return Err(Error::InvalidParameter(format!(
                    "steps are ranked to depth {} but the reward needs {}",
                    source.depth(),
                    spec.depth()
                )));
            }
            Ok(source.expectation(|i, step| spec.step_reward(i, step, None)))
        }
    }
}

/// `sNψ / sN1`.
pub fn reward_afc(kernel: &AmcKernel, s: &InitialDistribution, psi: &[f64]) -> Result<f64> {
    check_values("psi", psi, kernel.n())?;
    let mu = visits(kernel, s)?;
    let total: f64 = mu.iter().sum();
    Ok(mu.iter().zip(psi).map(|(m, p)| m * p).sum::<f64>() / total)
}

/// Reward levels decaying geometrically with hop distance from the
/// highest-degree nodes: `f(v) = max_l R_l β^{d(v, h_l)}`, zero when no hub
/// is reachable. Degree ties go to the smallest id.
pub fn reward_f_from_hubs(base: &BaseTopology, levels: &[f64], beta: f64) -> Result<Vec<f64>> {
    if levels.is_empty() || levels.len() > base.n() {
        return Err(Error::InvalidParameter(format!("{} hubs requested on {} nodes", levels.len(), base.n())));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("decay {beta} must lie in (0, 1)")));
    }
    check_values("reward levels", levels, levels.len())?;
    let degrees: Vec<f64> = base.degrees().iter().map(|&d| d as f64).collect();
    let members: Vec<usize> = (0..base.n()).collect();
    let hubs = rank_by_score(&degrees, &members, levels.len());
    let mut f = vec![0.0f64; base.n()];
    for (&hub, &level) in hubs.iter().zip(levels) {
        for (v, d) in base.hop_distances(hub).into_iter().enumerate() {
            if let Some(d) = d {
                f[v] = f[v].max(level * beta.powi(d as i32));
            }
        }
    }
    Ok(f)
}

/// Hub ids chosen by [`reward_f_from_hubs`].
pub fn degree_hubs(base: &BaseTopology, count: usize) -> Vec<usize> {
    let degrees: Vec<f64> = base.degrees().iter().map(|&d| d as f64).collect();
    let members: Vec<usize> = (0..base.n()).collect();
    rank_by_score(&degrees, &members, count)
}

/// Simulator-level estimate of the reward per pre-absorption step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSimulation {
    pub trajectories: usize,
    /// `Σ rewards / Σ lengths`.
    pub rate: f64,
    pub rate_se: f64,
    /// Mean reward at one length-biased uniform step per trajectory.
    pub uniform_step: f64,
    pub uniform_step_se: f64,
    pub mean_length: f64,
}

/// Runs the simulator itself (not a kernel): from `X_t` draw a step, collect
/// `reward(X_t, step, next)`, move to `select(X_t, step)` or stop.
pub fn simulate_reward<S, R>(
    sim: &Simulator,
    s: &InitialDistribution,
    depth: usize,
    select: S,
    reward: R,
    n_traj: usize,
    seed: SeedSpec,
) -> Result<RewardSimulation>
where
    S: Fn(usize, &Step) -> Option<usize> + Sync,
    R: Fn(usize, &Step, Option<usize>) -> f64 + Sync,
{
    if n_traj < 2 {
        return Err(Error::InvalidParameter("at least two trajectories are required".into()));
    }
    let start = Categorical::new(s.as_slice());
    let last = s.as_slice().iter().rposition(|&x| x > 0.0).unwrap_or(0);
    let paths = (0..n_traj)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.stream(Domain::Reward, 0, t as u64);
            let mut x = start.sample(&mut rng).min(last);
            let mut rewards = Vec::new();
            loop {
                if rewards.len() >= TRAJECTORY_CAP {
                    return Err(Error::TrajectoryCap { cap: TRAJECTORY_CAP });
                }
                let step = sim.step(x, depth, &mut rng)?;
                let next = select(x, &step);
                rewards.push(reward(x, &step, next));
                match next {
                    Some(j) => x = j,
                    None => return Ok(rewards),
                }
            }
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;

    let nt = n_traj as f64;
    let total_len: f64 = paths.iter().map(|p| p.len() as f64).sum();
    let sums: Vec<f64> = paths.iter().map(|p| p.iter().sum()).collect();
    let rate = sums.iter().sum::<f64>() / total_len;
    let mean_length = total_len / nt;
    let z_sq: f64 = paths.iter().zip(&sums).map(|(p, r)| (r - rate * p.len() as f64).powi(2)).sum();
    let rate_se = (z_sq / (nt * (nt - 1.0))).sqrt() / mean_length;

    let mut rng = seed.stream(Domain::UniformStep, 1, 0);
    let mut picks: Vec<u64> = (0..n_traj).map(|_| rand::Rng::random_range(&mut rng, 0..total_len as u64)).collect();
    picks.sort_unstable();
    let mut picked = Vec::with_capacity(n_traj);
    let (mut offset, mut cursor) = (0u64, 0usize);
    for path in &paths {
        let end = offset + path.len() as u64;
        while cursor < picks.len() && picks[cursor] < end {
            picked.push(path[(picks[cursor] - offset) as usize]);
            cursor += 1;
        }
        offset = end;
    }
    let uniform_step = picked.iter().sum::<f64>() / nt;
    let var = picked.iter().map(|x| (x - uniform_step).powi(2)).sum::<f64>() / (nt - 1.0);
    let uniform_step_se = (rate_se * rate_se + var / nt).sqrt();

    Ok(RewardSimulation { trajectories: n_traj, rate, rate_se, uniform_step, uniform_step_se, mean_length })
}

/// `η` as a dense `n × (n + 1)` matrix, e.g. for reports.
pub fn eta_matrix(eta: &[Vec<f64>]) -> DMatrix<f64> {
    let n = eta.len();
    DMatrix::from_fn(n, n + 1, |i, j| eta[i][j])
}
