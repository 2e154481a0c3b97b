//! Weighted betweenness, tie-broken local centers and local Top-k sets.
//!
//! Betweenness is the non-normalized ordered-pair sum
//! `B_v = Σ_{s≠t, s,t≠v} σ_st(v) / σ_st` over reachable pairs, computed with
//! Brandes' dependency accumulation. Every pair is counted in both
//! directions, so a path `0-1-2` gives `B_1 = 2`.
//!
//! Ties are always broken toward the smallest node index.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::graph::WorkingGraph;

/// Relative tolerance for treating two path lengths as equal.
pub const DISTANCE_TOLERANCE: f64 = 1e-12;

/// Relative tolerance for treating two betweenness values as tied.
pub const SCORE_TOLERANCE: f64 = 1e-9;

/// Non-normalized betweenness indexed by node id.
pub type BetweennessVector = Vec<f64>;

fn same_length(a: f64, b: f64) -> bool {
    b.is_finite() && (a - b).abs() <= DISTANCE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source state reused across Brandes passes.
struct SourcePass {
    dist: Vec<f64>,
    sigma: Vec<f64>,
    preds: Vec<Vec<usize>>,
    order: Vec<usize>,
    delta: Vec<f64>,
}

impl SourcePass {
    fn new(n: usize) -> Self {
        SourcePass {
            dist: vec![f64::INFINITY; n],
            sigma: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            delta: vec![0.0; n],
        }
    }

    fn reset(&mut self, nodes: &[usize]) {
        for &v in nodes {
            self.dist[v] = f64::INFINITY;
            self.sigma[v] = 0.0;
            self.preds[v].clear();
            self.delta[v] = 0.0;
        }
        self.order.clear();
    }

    /// Fills `dist`, `sigma`, `preds` and the settle order from `s`.
    fn run(&mut self, h: &WorkingGraph, s: usize, unit: bool) {
        self.dist[s] = 0.0;
        self.sigma[s] = 1.0;
        if unit {
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                self.order.push(v);
                let next = self.dist[v] + 1.0;
                for &(w, _) in h.neighbors(v) {
                    if self.dist[w].is_infinite() {
                        self.dist[w] = next;
                        queue.push_back(w);
                    }
                    if self.dist[w] == next {
                        self.sigma[w] += self.sigma[v];
                        self.preds[w].push(v);
                    }
                }
            }
            return;
        }
        let mut settled = vec![false; h.n()];
        let mut heap = BinaryHeap::from([HeapEntry { dist: 0.0, node: s }]);
        while let Some(HeapEntry { dist, node: v }) = heap.pop() {
            if settled[v] || dist > self.dist[v] {
                continue;
            }
            settled[v] = true;
            self.order.push(v);
            for &(w, len) in h.neighbors(v) {
                if settled[w] {
                    continue;
                }
                let alt = self.dist[v] + len;
                if same_length(alt, self.dist[w]) {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                } else if alt < self.dist[w] {
                    self.dist[w] = alt;
                    self.sigma[w] = self.sigma[v];
                    self.preds[w].clear();
                    self.preds[w].push(v);
                    heap.push(HeapEntry { dist: alt, node: w });
                }
            }
        }
    }

    fn accumulate(&mut self, s: usize, into: &mut [f64]) {
        while let Some(w) = self.order.pop() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] * coeff;
            }
            if w != s {
                into[w] += self.delta[w];
            }
        }
    }
}

fn has_unit_weights(h: &WorkingGraph, nodes: &[usize]) -> bool {
    nodes
        .iter()
        .all(|&v| h.neighbors(v).iter().all(|&(_, w)| w == 1.0))
}

/// Weighted distances and geodesic counts from `s`.
///
/// Unreachable nodes get distance `∞` and count `0`; `sigma[s] = 1`.
pub fn shortest_path_counts(h: &WorkingGraph, s: usize) -> (Vec<f64>, Vec<f64>) {
    let mut pass = SourcePass::new(h.n());
    let unit = has_unit_weights(h, h.component_of(s));
    pass.run(h, s, unit);
    (pass.dist, pass.sigma)
}

/// Betweenness of every node of `H`.
pub fn betweenness(h: &WorkingGraph) -> BetweennessVector {
    let mut out = vec![0.0; h.n()];
    let mut pass = SourcePass::new(h.n());
    for comp in h.components() {
        accumulate_component(h, comp, &mut pass, &mut out);
    }
    out
}

/// Betweenness restricted to one component. Entries outside `members` are 0.
///
/// Exact for members: pairs with an endpoint outside the component never
/// route through it.
pub fn component_betweenness(h: &WorkingGraph, members: &[usize]) -> BetweennessVector {
    let mut out = vec![0.0; h.n()];
    let mut pass = SourcePass::new(h.n());
    accumulate_component(h, members, &mut pass, &mut out);
    out
}

fn accumulate_component(h: &WorkingGraph, members: &[usize], pass: &mut SourcePass, out: &mut [f64]) {
    if members.len() < 3 {
        return;
    }
    let unit = has_unit_weights(h, members);
    for &s in members {
        pass.reset(members);
        pass.run(h, s, unit);
        pass.accumulate(s, out);
    }
}

/// The first `depth` members ordered by decreasing score, ties to the
/// smallest index. Scores within [`SCORE_TOLERANCE`] count as tied.
pub fn rank_by_score(scores: &[f64], members: &[usize], depth: usize) -> Vec<usize> {
    let depth = depth.min(members.len());
    let mut taken = vec![false; members.len()];
    let mut out = Vec::with_capacity(depth);
    for _ in 0..depth {
        let best = members
            .iter()
            .zip(&taken)
            .filter(|(_, &t)| !t)
            .map(|(&v, _)| scores[v])
            .fold(f64::NEG_INFINITY, f64::max);
        let cut = best - SCORE_TOLERANCE * best.abs().max(1.0);
        // members are sorted, so the first hit is the smallest index
        let pos = members
            .iter()
            .enumerate()
            .position(|(p, &v)| !taken[p] && scores[v] >= cut)
            .expect("an untaken member attains the maximum");
        taken[pos] = true;
        out.push(members[pos]);
    }
    out
}

/// The tie-broken betweenness ordering of `K(i; H)`, truncated to `depth`.
pub fn component_ranking(h: &WorkingGraph, i: usize, depth: usize) -> Vec<usize> {
    let members = h.component_of(i);
    let scores = component_betweenness(h, members);
    rank_by_score(&scores, members, depth)
}

/// `c_loc(i; H)`, or `None` when `|K(i; H)| < k_min`.
pub fn local_center(i: usize, h: &WorkingGraph, k_min: usize) -> Option<usize> {
    local_topk(i, h, 1, k_min).map(|list| list[0])
}

/// `Top_k^loc(i; H)` as an ordered list of `k ∧ |K(i; H)|` nodes, or `None`
/// when `|K(i; H)| < k_min`.
pub fn local_topk(i: usize, h: &WorkingGraph, k: usize, k_min: usize) -> Option<Vec<usize>> {
    if h.component_of(i).len() < k_min.max(1) {
        return None;
    }
    Some(component_ranking(h, i, k.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn path_counts_on_a_path() {
        let h = WorkingGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]);
        let (d, sigma) = shortest_path_counts(&h, 0);
        assert_eq!(d, vec![0.0, 1.0, 2.0]);
        assert_eq!(sigma, vec![1.0, 1.0, 1.0]);
        assert_eq!(betweenness(&h), vec![0.0, 2.0, 0.0]);
    }

    #[test]
    fn four_cycle_has_two_geodesics() {
        let h = WorkingGraph::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]);
        let (_, sigma) = shortest_path_counts(&h, 0);
        assert_eq!(sigma[2], 2.0);
    }

    #[test]
    fn non_integer_weight_ties_are_counted() {
        // 0 -0.1- 1 -0.2- 3 and 0 -0.2- 2 -0.1- 3 have equal float-rounded length
        let h = WorkingGraph::new(4, [(0, 1, 0.1), (1, 3, 0.2), (0, 2, 0.2), (2, 3, 0.1)]);
        let (_, sigma) = shortest_path_counts(&h, 0);
        assert_eq!(sigma[3], 2.0);
    }

    #[test]
    fn unreachable_nodes() {
        let h = WorkingGraph::new(3, [(0, 1, 2.0)]);
        let (d, sigma) = shortest_path_counts(&h, 0);
        assert!(d[2].is_infinite());
        assert_eq!(sigma[2], 0.0);
        assert_eq!(betweenness(&h), vec![0.0; 3]);
    }

    #[test]
    fn fig1_geodesic_between_cliques() {
        let h = fixtures::two_cliques().to_working();
        // 1-based ids 2 and 7 are 1 and 6 here
        let (d, sigma) = shortest_path_counts(&h, 1);
        assert_eq!(sigma[6], 1.0);
        assert_eq!(d[6], 4.0);
    }

    #[test]
    fn fig1_centers_and_topk() {
        let g = fixtures::two_cliques();
        let h = g.to_working();
        assert_eq!(local_center(2, &h, 5), Some(4));
        assert_eq!(local_topk(1, &h, 1, 5), Some(vec![4]));
        assert_eq!(local_topk(1, &h, 3, 5), Some(vec![4, 0, 5]));
        assert_eq!(local_topk(1, &h, 20, 5).map(|v| v.len()), Some(9));

        // drop the bridge edges (1,5) and (5,6)
        let cut = g
            .edges()
            .iter()
            .filter(|e| !((e.u, e.v) == (0, 4) || (e.u, e.v) == (4, 5)))
            .map(|e| (e.u, e.v, e.w));
        let h = WorkingGraph::new(9, cut);
        assert_eq!(local_center(2, &h, 5), None);
    }

    #[test]
    fn isolated_node_is_its_own_center() {
        let h = WorkingGraph::new(3, [(1, 2, 1.0)]);
        assert_eq!(local_center(0, &h, 1), Some(0));
        assert_eq!(local_center(0, &h, 2), None);
        // two-node component: both scores 0, smallest index wins
        assert_eq!(local_center(2, &h, 1), Some(1));
    }

    #[test]
    fn rank_ties_go_to_smallest_index() {
        let scores = vec![1.0, 3.0, 3.0 + 1e-13, 2.0];
        assert_eq!(rank_by_score(&scores, &[0, 1, 2, 3], 4), vec![1, 2, 3, 0]);
    }
}
