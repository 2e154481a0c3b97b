//! Absorbing-frequency centrality (AFC) for stochastic networks.
//!
//! A one-step simulator reports the betweenness center of the anchor's
//! component in a random realization of the network. Compressing repeated
//! reports into an absorbing Markov chain on `V ∪ {⊥}` gives a kernel
//! `(Q, r)`; the AFC of an initial law `s` is the normalized expected visit
//! vector `sN / sN1` with `N = (I - Q)^{-1}`.

pub mod afc;
pub mod bounds;
pub mod builder;
pub mod centrality;
pub mod constrained;
pub mod error;
pub mod fixtures;
pub mod generate;
pub mod graph;
pub mod ingest;
pub mod kernel;
pub mod realization;
pub mod reward;
pub mod robust;
pub mod seed;
pub mod simulate;

pub use afc::{afc, post_initial_afc, AfcProfile, InitialDistribution};
pub use builder::{draw_steps, estimate_kernel, exact_kernel, exact_law, StepSource};
pub use centrality::{betweenness, local_center, local_topk, shortest_path_counts, BetweennessVector};
pub use constrained::{build_constrained_kernel, enumerate_clique_pool, pool_statistics, PoolMode, TargetPool};
pub use error::{Error, Result};
pub use graph::{BaseTopology, Edge, WorkingGraph};
pub use ingest::{read_graph, GraphFormat};
pub use kernel::AmcKernel;
pub use reward::{estimate_psi, reward_afc, RewardSpec};
pub use robust::{adversarial_search, visit_gap, GroundMetric, UncertaintySet};
pub use realization::{RealizationModel, Simulator, Step, Uncertainty};
pub use seed::{Domain, SeedSpec};
pub use simulate::{simulate_afc, SimulationEstimate};
