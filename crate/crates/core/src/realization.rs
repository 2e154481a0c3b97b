//! The one-step simulator: draw a working graph around an anchor and decide
//! whether the step has a valid continuation.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::centrality::component_ranking;
use crate::error::{Error, Result};
use crate::graph::{BaseTopology, WorkingGraph};
use crate::seed::Rng;

/// How a realization perturbs the base topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Uncertainty {
    /// Keep each base edge independently with probability `p_on`.
    EdgeBernoulli { p_on: f64 },
    /// Keep every edge and resample its weight from a rounded, clipped normal
    /// with mean `w0 + rho_mu (w_max - w0)` and deviation `rho_sigma (w_max - w0)`.
    WeightResample { rho_mu: f64, rho_sigma: f64, w_max: f64 },
    /// Edge retention followed by weight resampling of the kept edges.
    Composite { p_on: f64, rho_mu: f64, rho_sigma: f64, w_max: f64 },
}

impl Uncertainty {
    fn p_on(&self) -> Option<f64> {
        match *self {
            Uncertainty::EdgeBernoulli { p_on } | Uncertainty::Composite { p_on, .. } => Some(p_on),
            Uncertainty::WeightResample { .. } => None,
        }
    }

    fn weights(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Uncertainty::WeightResample { rho_mu, rho_sigma, w_max }
            | Uncertainty::Composite { rho_mu, rho_sigma, w_max, .. } => Some((rho_mu, rho_sigma, w_max)),
            Uncertainty::EdgeBernoulli { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationModel {
    pub uncertainty: Uncertainty,
    /// Exogenous stop probability per step.
    pub alpha: f64,
    /// Anchors whose component is smaller than this have no valid continuation.
    pub k_min: usize,
    /// Restrict each realization to the induced subgraph on the anchor's
    /// hop ball of this radius in the base topology.
    pub r_hop: Option<usize>,
}

impl RealizationModel {
    pub fn edge_bernoulli(p_on: f64, alpha: f64, k_min: usize) -> Self {
        RealizationModel {
            uncertainty: Uncertainty::EdgeBernoulli { p_on },
            alpha,
            k_min,
            r_hop: None,
        }
    }

    pub fn validate(&self, base: &BaseTopology) -> Result<()> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {x} is not a probability")))
            }
        };
        unit("alpha", self.alpha)?;
        if let Some(p_on) = self.uncertainty.p_on() {
            unit("p_on", p_on)?;
        }
        if let Some((rho_mu, rho_sigma, w_max)) = self.uncertainty.weights() {
            unit("rho_mu", rho_mu)?;
            if !(rho_sigma.is_finite() && rho_sigma >= 0.0) {
                return Err(Error::InvalidParameter(format!("rho_sigma = {rho_sigma} must be nonnegative")));
            }
            if !(w_max >= base.max_weight()) {
                return Err(Error::InvalidParameter(format!(
                    "w_max = {w_max} is below the largest base weight {}",
                    base.max_weight()
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one realization draw.
#[derive(Debug, Clone)]
pub enum Realization {
    /// The exogenous stop coin fired; no graph was materialized.
    Stopped,
    Graph(WorkingGraph),
}

/// One simulator step seen from an anchor: either absorbed, or the
/// tie-broken betweenness ordering of the anchor's component truncated to
/// the requested depth (so `ranking[0]` is the local center).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Absorbed,
    Valid { ranking: Vec<usize> },
}

impl Step {
    pub fn center(&self) -> Option<usize> {
        match self {
            Step::Absorbed => None,
            Step::Valid { ranking } => Some(ranking[0]),
        }
    }

    /// The realized candidate set `C_k`: empty on absorbed draws.
    pub fn top(&self, k: usize) -> &[usize] {
        match self {
            Step::Absorbed => &[],
            Step::Valid { ranking } => &ranking[..k.min(ranking.len())],
        }
    }
}

/// Applies the component-size rule and ranks the anchor's component.
pub fn step_from_graph(h: &WorkingGraph, anchor: usize, k_min: usize, depth: usize) -> Step {
    if h.component_of(anchor).len() < k_min.max(1) {
        Step::Absorbed
    } else {
        Step::Valid { ranking: component_ranking(h, anchor, depth.max(1)) }
    }
}

/// A validated model bound to its base topology, with hop balls cached.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    base: &'a BaseTopology,
    model: RealizationModel,
    balls: Option<Vec<Vec<bool>>>,
}

impl<'a> Simulator<'a> {
    pub fn new(model: RealizationModel, base: &'a BaseTopology) -> Result<Self> {
        model.validate(base)?;
        let balls = model
            .r_hop
            .map(|r| (0..base.n()).map(|i| base.hop_ball(i, r)).collect());
        Ok(Simulator { base, model, balls })
    }

    pub fn base(&self) -> &BaseTopology {
        self.base
    }

    pub fn model(&self) -> &RealizationModel {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    fn check(&self, anchor: usize) -> Result<()> {
        if anchor < self.base.n() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: anchor, n: self.base.n() })
        }
    }

    /// Draws the stop coin, then (if still running) one working graph.
    pub fn realize(&self, anchor: usize, rng: &mut Rng) -> Result<Realization> {
        self.check(anchor)?;
        let stop = rng.random::<f64>() < self.model.alpha;
        if stop {
            return Ok(Realization::Stopped);
        }
        Ok(Realization::Graph(self.draw_graph(anchor, rng)))
    }

    fn draw_graph(&self, anchor: usize, rng: &mut Rng) -> WorkingGraph {
        let ball = self.balls.as_ref().map(|b| &b[anchor]);
        let p_on = self.model.uncertainty.p_on();
        let weights = self.model.uncertainty.weights();
        let mut kept = Vec::with_capacity(self.base.edge_count());
        for e in self.base.edges() {
            if let Some(ball) = ball {
                if !(ball[e.u] && ball[e.v]) {
                    continue;
                }
            }
            if let Some(p) = p_on {
                if rng.random::<f64>() >= p {
                    continue;
                }
            }
            let w = match weights {
                Some((rho_mu, rho_sigma, w_max)) => resample_weight(e.w, rho_mu, rho_sigma, w_max, rng),
                None => e.w,
            };
            kept.push((e.u, e.v, w));
        }
        WorkingGraph::new(self.base.n(), kept)
    }

    /// One simulator draw reduced to a [`Step`] with a ranking of `depth` nodes.
    pub fn step(&self, anchor: usize, depth: usize, rng: &mut Rng) -> Result<Step> {
        Ok(match self.realize(anchor, rng)? {
            Realization::Stopped => Step::Absorbed,
            Realization::Graph(h) => step_from_graph(&h, anchor, self.model.k_min, depth),
        })
    }

    /// SampleNext: the next reported center, or `None` for absorption.
    pub fn sample_next(&self, anchor: usize, rng: &mut Rng) -> Result<Option<usize>> {
        Ok(self.step(anchor, 1, rng)?.center())
    }
}

fn resample_weight(w0: f64, rho_mu: f64, rho_sigma: f64, w_max: f64, rng: &mut Rng) -> f64 {
    let mean = w0 + rho_mu * (w_max - w0);
    let sd = rho_sigma * (w_max - w0);
    let x = if sd > 0.0 {
        Normal::new(mean, sd).expect("finite positive deviation").sample(rng)
    } else {
        mean
    };
    x.round().clamp(w0, w_max)
}

/// Free-standing form of [`Simulator::realize`].
pub fn realize(
    model: &RealizationModel,
    base: &BaseTopology,
    anchor: usize,
    rng: &mut Rng,
) -> Result<Realization> {
    Simulator::new(*model, base)?.realize(anchor, rng)
}

/// Free-standing SampleNext.
pub fn sample_next(
    model: &RealizationModel,
    base: &BaseTopology,
    anchor: usize,
    rng: &mut Rng,
) -> Result<Option<usize>> {
    Simulator::new(*model, base)?.sample_next(anchor, rng)
}
