//! Random base topologies.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::BaseTopology;
use crate::seed::{Domain, SeedSpec};

/// `G(n, p)`: each unordered pair independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: SeedSpec) -> Result<BaseTopology> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 2")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is not a probability")));
    }
    let mut rng = seed.stream(Domain::Graph, 0, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    BaseTopology::unweighted(n, edges)
}

/// Watts–Strogatz: a ring where each node links to its `ring_degree / 2`
/// nearest neighbours on either side; every lattice edge `(u, u + j)` is
/// then rewired with probability `rewire_p` to a uniform new endpoint that
/// creates neither a self-loop nor a duplicate.
pub fn watts_strogatz(n: usize, ring_degree: usize, rewire_p: f64, seed: SeedSpec) -> Result<BaseTopology> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 2")));
    }
    if !ring_degree.is_multiple_of(2) || ring_degree >= n {
        return Err(Error::InvalidParameter(format!(
            "ring degree {ring_degree} must be even and below n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&rewire_p) {
        return Err(Error::InvalidParameter(format!("rewire_p = {rewire_p} is not a probability")));
    }
    let mut adj = vec![std::collections::BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=ring_degree / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    let mut rng = seed.stream(Domain::Graph, 1, 0);
    for j in 1..=ring_degree / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= rewire_p || adj[u].len() >= n - 1 || !adj[u].contains(&v) {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let edges = (0..n).flat_map(|u| adj[u].iter().filter(move |&&v| v > u).map(move |&v| (u, v)));
    BaseTopology::unweighted(n, edges.collect::<Vec<_>>())
}
