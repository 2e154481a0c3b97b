//! Base topologies and realized working graphs.
//!
//! Node ids are `0..n`. Edges are undirected with strictly positive weights.
//! A [`WorkingGraph`] always carries the full node set, so nodes that lose all
//! their edges in a realization show up as singleton components.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// The fixed base graph `G(V, E)` with positive edge weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseTopology {
    n: usize,
    edges: Vec<Edge>,
}

impl BaseTopology {
    /// Validates and builds a topology. Edge endpoints are stored with `u < v`.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            for x in [a, b] {
                if x >= n {
                    return Err(Error::NodeOutOfRange { node: x, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::NonPositiveWeight { u: a, v: b, w });
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((u, v)) {
                return Err(Error::DuplicateEdge(u, v));
            }
            out.push(Edge { u, v, w });
        }
        Ok(BaseTopology { n, edges: out })
    }

    /// Unit-weight topology.
    pub fn unweighted(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n, edges.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).fold(0.0, f64::max)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Neighbor lists, sorted by node id.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<usize>> {
        hop_distances(&self.adjacency(), source)
    }

    /// Membership mask of the `radius`-hop ball around `anchor`.
    pub fn hop_ball(&self, anchor: usize, radius: usize) -> Vec<bool> {
        self.hop_distances(anchor)
            .into_iter()
            .map(|d| matches!(d, Some(d) if d <= radius))
            .collect()
    }

    /// Stationary law of the simple random walk as exact fractions
    /// `deg(v) / 2|E|`, returned as (numerators, common denominator).
    pub fn degree_stationary(&self) -> (Vec<usize>, usize) {
        (self.degrees(), 2 * self.edges.len())
    }

    /// Same topology with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.n, self.edges.iter().map(|e| (e.u, e.v, e.w * factor)))
    }

    /// The base topology itself as a realized graph.
    pub fn to_working(&self) -> WorkingGraph {
        WorkingGraph::new(self.n, self.edges.iter().map(|e| (e.u, e.v, e.w)))
    }

    /// Triangles as sorted node triples, in lexicographic order.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let adj = self.adjacency();
        let mut out = Vec::new();
        for a in 0..self.n {
            for &b in adj[a].iter().filter(|&&b| b > a) {
                for &c in adj[b].iter().filter(|&&c| c > b) {
                    if adj[a].binary_search(&c).is_ok() {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn hop_distances(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// A realized graph `H` on the full node set with its component partition.
#[derive(Debug, Clone)]
pub struct WorkingGraph {
    adj: Vec<Vec<(usize, f64)>>,
    edge_count: usize,
    component: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl WorkingGraph {
    /// Builds the graph from already-validated edges. Components are labelled
    /// in order of their smallest member, and member lists are sorted.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut edge_count = 0;
        for (u, v, w) in edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
            edge_count += 1;
        }
        let mut component = vec![usize::MAX; n];
        let mut members = Vec::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let label = members.len();
            let mut comp = vec![start];
            component[start] = label;
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &(v, _) in &adj[u] {
                    if component[v] == usize::MAX {
                        component[v] = label;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            members.push(comp);
        }
        WorkingGraph { adj, edge_count, component, members }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    /// Sorted members of `K(i; H)`.
    pub fn component_of(&self, i: usize) -> &[usize] {
        &self.members[self.component[i]]
    }

    pub fn component_label(&self, i: usize) -> usize {
        self.component[i]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.members
    }
}
