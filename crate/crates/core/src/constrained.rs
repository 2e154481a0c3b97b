//! Top-k selection restricted to a target pool, with optional fallback.
//!
//! From anchor `i`, the constrained selector reports the highest-ranked
//! member of `C_k(i, ω) ∩ W`. When the intersection is empty on a valid
//! step, the hard variant absorbs and the fallback variant moves to a fixed
//! representative node instead.

use serde::{Deserialize, Serialize};

use crate::afc::{afc, trapped_rows, InitialDistribution};
use crate::builder::{KernelEstimate, StepSource};
use crate::error::{Error, Result};
use crate::graph::BaseTopology;
use crate::kernel::{AmcKernel, Stabilization};
use crate::realization::Step;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fallback {
    /// A reserved node set outside the pool; infeasible steps go to
    /// `representative`, and visits to `nodes` can be censored.
    Disjoint { nodes: Vec<usize>, representative: usize },
    /// Infeasible steps go to a pool member (the smallest id of the first
    /// primitive). No node set is reserved, so nothing is censored.
    InPool { representative: usize },
}

impl Fallback {
    pub fn representative(&self) -> usize {
        match self {
            Fallback::Disjoint { representative, .. } | Fallback::InPool { representative } => *representative,
        }
    }

    /// The reserved set `V_fb` (empty for an in-pool fallback).
    pub fn reserved(&self) -> &[usize] {
        match self {
            Fallback::Disjoint { nodes, .. } => nodes,
            Fallback::InPool { .. } => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    Hard,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetPool {
    /// `W`, sorted: the union of the primitives.
    pub members: Vec<usize>,
    pub primitives: Vec<Vec<usize>>,
    pub fallback: Option<Fallback>,
    /// Set when fewer primitives were available than requested.
    pub short: bool,
}

impl TargetPool {
    pub fn new(n: usize, primitives: Vec<Vec<usize>>, fallback: Option<Fallback>) -> Result<Self> {
        let mut members: Vec<usize> = primitives.iter().flatten().copied().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&v) = members.iter().find(|&&v| v >= n) {
            return Err(Error::NodeOutOfRange { node: v, n });
        }
        match &fallback {
            Some(Fallback::Disjoint { nodes, representative }) => {
                if !nodes.contains(representative) {
                    return Err(Error::InvalidParameter("fallback representative is not in the fallback set".into()));
                }
                if let Some(v) = nodes.iter().find(|v| members.binary_search(v).is_ok()) {
                    return Err(Error::InvalidParameter(format!("fallback node {v} is in the pool")));
                }
                if let Some(&v) = nodes.iter().find(|&&v| v >= n) {
                    return Err(Error::NodeOutOfRange { node: v, n });
                }
            }
            Some(Fallback::InPool { representative }) => {
                if members.binary_search(representative).is_err() {
                    return Err(Error::InvalidParameter("in-pool fallback must be a pool member".into()));
                }
            }
            None => {}
        }
        Ok(TargetPool { members, primitives, fallback, short: false })
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    /// The highest-ranked pool member among the first `k` of a step.
    pub fn first_hit(&self, step: &Step, k: usize) -> Option<usize> {
        step.top(k).iter().copied().find(|&v| self.contains(v))
    }

    /// Next state under the constrained selector.
    pub fn select(&self, step: &Step, k: usize, mode: PoolMode) -> Option<usize> {
        match (step, self.first_hit(step, k)) {
            (Step::Absorbed, _) => None,
            (_, Some(v)) => Some(v),
            (_, None) => match mode {
                PoolMode::Hard => None,
                PoolMode::Fallback => self.fallback.as_ref().map(Fallback::representative),
            },
        }
    }
}

/// Triangles of the base topology, by decreasing degree sum with
/// lexicographic ties; the pool is the union of the first `size`.
pub fn enumerate_clique_pool(base: &BaseTopology, size: usize, in_pool_fallback: bool) -> Result<TargetPool> {
    let mut triangles = base.triangles();
    if triangles.is_empty() {
        return Err(Error::NoTriangles);
    }
    let degrees = base.degrees();
    let score = |t: &[usize; 3]| t.iter().map(|&v| degrees[v]).sum::<usize>();
    triangles.sort_by(|a, b| score(b).cmp(&score(a)).then(a.cmp(b)));
    let short = triangles.len() < size;
    triangles.truncate(size);
    let fallback = in_pool_fallback.then(|| Fallback::InPool { representative: triangles[0][0] });
    let primitives = triangles.iter().map(|t| t.to_vec()).collect();
    let mut pool = TargetPool::new(base.n(), primitives, fallback)?;
    pool.short = short;
    Ok(pool)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedKernel {
    pub kernel: AmcKernel,
    pub mode: PoolMode,
    pub k: usize,
    pub stabilization: Option<Stabilization>,
    /// `ξ_i`: probability that the realized Top-k set meets the pool.
    pub xi: Vec<f64>,
    /// Probability that a step from `i` is routed to the fallback.
    pub fallback_rate: Vec<f64>,
}

pub fn build_constrained_kernel<S: StepSource>(
    source: &S,
    pool: &TargetPool,
    k: usize,
    mode: PoolMode,
    stabilize: bool,
) -> Result<ConstrainedKernel> {
    if k == 0 || source.depth() < k {
        return Err(Error::InvalidParameter(format!("k = {k} needs steps ranked to that depth")));
    }
    if mode == PoolMode::Fallback && pool.fallback.is_none() {
        return Err(Error::InvalidParameter("fallback mode needs a fallback in the pool".into()));
    }
    let KernelEstimate { kernel, stabilization } =
        source.kernel_with(|_, step| pool.select(step, k, mode), stabilize)?;
    if !stabilize {
        let trapped = trapped_rows(&kernel);
        if !trapped.is_empty() {
            return Err(Error::Singular { zero_leak_rows: trapped });
        }
    }
    let xi = source.expectation(|_, step| f64::from(pool.first_hit(step, k).is_some()));
    let fallback_rate = match mode {
        PoolMode::Hard => vec![0.0; source.n()],
        PoolMode::Fallback => source.expectation(|_, step| {
            f64::from(matches!(step, Step::Valid { .. }) && pool.first_hit(step, k).is_none())
        }),
    };
    Ok(ConstrainedKernel { kernel, mode, k, stabilization, xi, fallback_rate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolStatistics {
    pub xi: Vec<f64>,
    /// AFC mass on the pool.
    pub m_w: f64,
    /// The profile restricted to the pool members (in `members` order) and
    /// renormalized; empty when the pool carries no mass.
    pub within_pool: Vec<f64>,
    /// Mass outside the reserved fallback set, `c_fb`.
    pub uncensored_mass: f64,
    /// The profile with the reserved set removed and renormalized (zeros on
    /// the reserved set); empty when no mass remains.
    pub censored: Vec<f64>,
    /// Per-step probability of a fallback move, averaged under the profile.
    pub fallback_activation: f64,
    pub b: Vec<f64>,
}

pub fn pool_statistics(
    constrained: &ConstrainedKernel,
    s: &InitialDistribution,
    pool: &TargetPool,
) -> Result<PoolStatistics> {
    let b = afc(&constrained.kernel, s)?.b;
    let m_w: f64 = pool.members.iter().map(|&v| b[v]).sum();
    let within_pool = if m_w > 0.0 { pool.members.iter().map(|&v| b[v] / m_w).collect() } else { Vec::new() };
    let reserved = pool.fallback.as_ref().map_or(&[][..], Fallback::reserved);
    let kept = |v: usize| !reserved.contains(&v);
    let uncensored_mass: f64 = (0..b.len()).filter(|&v| kept(v)).map(|v| b[v]).sum();
    let censored = if uncensored_mass > 0.0 {
        (0..b.len()).map(|v| if kept(v) { b[v] / uncensored_mass } else { 0.0 }).collect()
    } else {
        Vec::new()
    };
    let fallback_activation = b.iter().zip(&constrained.fallback_rate).map(|(b, f)| b * f).sum();
    Ok(PoolStatistics {
        xi: constrained.xi.clone(),
        m_w,
        within_pool,
        uncensored_mass,
        censored,
        fallback_activation,
        b,
    })
}
