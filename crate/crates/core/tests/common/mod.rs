#![allow(dead_code)]

use afc_core::seed::Rng;
use afc_core::{AmcKernel, BaseTopology, Domain, SeedSpec, WorkingGraph};
use nalgebra::DMatrix;
use rand::Rng as _;

pub fn rng(seed: u64) -> Rng {
    SeedSpec::new(seed).stream(Domain::Graph, 99, 0)
}

/// All-pairs distances by Floyd–Warshall.
pub fn floyd(h: &WorkingGraph) -> Vec<Vec<f64>> {
    let n = h.n();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for u in 0..n {
        d[u][u] = 0.0;
        for &(v, w) in h.neighbors(u) {
            d[u][v] = d[u][v].min(w);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn tight(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Lists every geodesic from `s` to `t` explicitly.
pub fn geodesics(h: &WorkingGraph, d: &[Vec<f64>], s: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if !d[s][t].is_finite() || s == t {
        return out;
    }
    let mut path = vec![s];
    fn walk(h: &WorkingGraph, d: &[Vec<f64>], t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == t {
            out.push(path.clone());
            return;
        }
        for &(v, w) in h.neighbors(u) {
            // v must lie on a shortest path: d(s,u) + w + d(v,t) = d(s,t)
            if tight(d[path[0]][u] + w + d[v][t], d[path[0]][t]) && tight(d[path[0]][u] + w, d[path[0]][v]) {
                path.push(v);
                walk(h, d, t, path, out);
                path.pop();
            }
        }
    }
    walk(h, d, t, &mut path, &mut out);
    out
}

/// Ordered-pair betweenness from explicit geodesic lists.
pub fn brute_betweenness(h: &WorkingGraph) -> Vec<f64> {
    let n = h.n();
    let d = floyd(h);
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            let paths = geodesics(h, &d, s, t);
            if paths.is_empty() {
                continue;
            }
            let total = paths.len() as f64;
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count() as f64;
                b[v] += through / total;
            }
        }
    }
    b
}

/// Smallest index among the maximizers, exact comparison within 1e-9.
pub fn argmax_smallest(scores: &[f64], members: &[usize]) -> usize {
    let best = members.iter().map(|&v| scores[v]).fold(f64::NEG_INFINITY, f64::max);
    *members.iter().find(|&&v| scores[v] >= best - 1e-9 * best.abs().max(1.0)).unwrap()
}

pub fn random_graph(n: usize, p: f64, weighted: bool, rng: &mut Rng) -> WorkingGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                let w = if weighted { rng.random_range(1..=3) as f64 } else { 1.0 };
                edges.push((u, v, w));
            }
        }
    }
    WorkingGraph::new(n, edges)
}

/// Random kernel with leaks in `[r_lo, r_hi]` and dense random rows.
pub fn random_kernel(n: usize, r_lo: f64, r_hi: f64, rng: &mut Rng) -> AmcKernel {
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        let leak = rng.random_range(r_lo..=r_hi);
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        for j in 0..n {
            q[(i, j)] = raw[j] / total * (1.0 - leak);
        }
    }
    AmcKernel::from_transient(q).unwrap()
}

pub fn random_distribution(n: usize, rng: &mut Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // absorb rounding so the vector sums to 1 within 1e-12
    let drift = 1.0 - p.iter().sum::<f64>();
    p[0] += drift;
    p
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn base_without(base: &BaseTopology, drop: &[(usize, usize)]) -> WorkingGraph {
    WorkingGraph::new(
        base.n(),
        base.edges()
            .iter()
            .filter(|e| !drop.contains(&(e.u, e.v)))
            .map(|e| (e.u, e.v, e.w)),
    )
}
