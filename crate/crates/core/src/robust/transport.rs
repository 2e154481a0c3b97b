//! Exact 1-Wasserstein distance on a finite metric space.

use crate::centrality::shortest_path_counts;
use crate::error::{Error, Result};
use crate::graph::BaseTopology;

const MASS_EPS: f64 = 1e-15;

/// A finite metric on `0..n`, checked on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundMetric {
    d: Vec<Vec<f64>>,
}

impl GroundMetric {
    pub fn new(d: Vec<Vec<f64>>) -> Result<Self> {
        let n = d.len();
        let bad = |msg: String| Err(Error::InvalidParameter(format!("ground metric: {msg}")));
        for (i, row) in d.iter().enumerate() {
            if row.len() != n {
                return bad(format!("row {i} has {} entries", row.len()));
            }
            if row[i] != 0.0 {
                return bad(format!("nonzero diagonal at {i}"));
            }
            for (j, &x) in row.iter().enumerate() {
                if !(x.is_finite() && x >= 0.0) {
                    return bad(format!("entry ({i}, {j}) = {x}"));
                }
                if x != d[j][i] {
                    return bad(format!("asymmetric at ({i}, {j})"));
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if d[i][j] > via * (1.0 + 1e-12) {
                        return bad(format!("triangle inequality fails for ({i}, {k}, {j})"));
                    }
                }
            }
        }
        Ok(GroundMetric { d })
    }

    /// Weighted shortest-path distance on the base topology. Pairs in
    /// different components sit at one more than the largest finite distance.
    pub fn shortest_path(base: &BaseTopology) -> Result<Self> {
        let h = base.to_working();
        let mut d: Vec<Vec<f64>> = (0..base.n()).map(|s| shortest_path_counts(&h, s).0).collect();
        let far = d.iter().flatten().filter(|x| x.is_finite()).fold(0.0f64, |a, &b| a.max(b)) + 1.0;
        for x in d.iter_mut().flatten() {
            if x.is_infinite() {
                *x = far;
            }
        }
        GroundMetric::new(d)
    }

    /// `|i - j|` on `0..n`.
    pub fn line(n: usize) -> Self {
        GroundMetric { d: (0..n).map(|i| (0..n).map(|j| i.abs_diff(j) as f64).collect()).collect() }
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().flatten().fold(0.0, |a, &b| a.max(b))
    }
}

/// `W1(a, b)` by successive shortest augmenting paths on the
/// transportation network between surplus and deficit nodes.
pub fn wasserstein1(a: &[f64], b: &[f64], metric: &GroundMetric) -> Result<f64> {
    let n = metric.n();
    if a.len() != n || b.len() != n {
        return Err(Error::InvalidDistribution(format!(
            "distributions of length {} and {} on a {n}-point metric",
            a.len(),
            b.len()
        )));
    }
    let mut supply = Vec::new();
    let mut demand = Vec::new();
    for v in 0..n {
        let diff = a[v] - b[v];
        if diff > MASS_EPS {
            supply.push((v, diff));
        } else if diff < -MASS_EPS {
            demand.push((v, -diff));
        }
    }
    if supply.is_empty() || demand.is_empty() {
        return Ok(0.0);
    }

    // nodes: 0 source, 1..=S surplus, S+1..=S+T deficit, S+T+1 sink
    let ns = supply.len();
    let nt = demand.len();
    let size = ns + nt + 2;
    let sink = size - 1;
    let mut cap = vec![vec![0.0f64; size]; size];
    let mut cost = vec![vec![0.0f64; size]; size];
    for (a, &(_, m)) in supply.iter().enumerate() {
        cap[0][1 + a] = m;
    }
    for (b, &(_, m)) in demand.iter().enumerate() {
        cap[1 + ns + b][sink] = m;
    }
    for (a, &(u, _)) in supply.iter().enumerate() {
        for (b, &(v, _)) in demand.iter().enumerate() {
            let (x, y) = (1 + a, 1 + ns + b);
            cap[x][y] = f64::INFINITY;
            cost[x][y] = metric.get(u, v);
            cost[y][x] = -metric.get(u, v);
        }
    }

    let total: f64 = supply.iter().map(|s| s.1).sum::<f64>().min(demand.iter().map(|s| s.1).sum());
    let mut potential = vec![0.0f64; size];
    let mut shipped = 0.0;
    let mut transport_cost = 0.0;
    while total - shipped > MASS_EPS {
        // dense Dijkstra on reduced costs
        let mut dist = vec![f64::INFINITY; size];
        let mut prev = vec![usize::MAX; size];
        let mut done = vec![false; size];
        dist[0] = 0.0;
        loop {
            let mut u = usize::MAX;
            for v in 0..size {
                if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for v in 0..size {
                if done[v] || cap[u][v] <= MASS_EPS {
                    continue;
                }
                let reduced = (cost[u][v] + potential[u] - potential[v]).max(0.0);
                if dist[u] + reduced < dist[v] {
                    dist[v] = dist[u] + reduced;
                    prev[v] = u;
                }
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        for v in 0..size {
            if dist[v].is_finite() {
                potential[v] += dist[v];
            }
        }
        let mut push = total - shipped;
        let mut v = sink;
        while v != 0 {
            let u = prev[v];
            push = push.min(cap[u][v]);
            v = u;
        }
        let mut v = sink;
        while v != 0 {
            let u = prev[v];
            cap[u][v] -= push;
            cap[v][u] += push;
            transport_cost += push * cost[u][v];
            v = u;
        }
        shipped += push;
    }
    Ok(transport_cost.max(0.0))
}
