//! Turning the one-step simulator into a kernel: row-wise Monte Carlo and an
//! exact oracle that enumerates edge subsets.
//!
//! Both sources expose a per-row law of [`Step`]s. A selector maps each step
//! to a next state (or absorption), so the unconstrained kernel, the
//! pool-constrained kernels and the reward vectors all come from one set of
//! draws.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{AmcKernel, Stabilization};
use crate::realization::{step_from_graph, Simulator, Step, Uncertainty};
use crate::graph::WorkingGraph;
use crate::seed::{Domain, SeedSpec};

/// Leak assigned to rows that never absorbed in the sample.
pub const STABILIZATION_FLOOR: f64 = 1e-6;

/// Largest edge count the exact oracle will enumerate.
pub const ENUMERATION_CAP: usize = 20;

/// A kernel estimate and the rows stabilization touched.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    pub kernel: AmcKernel,
    pub stabilization: Option<Stabilization>,
}

/// A per-row law over simulator steps, sampled or exact.
pub trait StepSource: Sync {
    fn n(&self) -> usize;

    /// Number of ranked nodes kept per valid step.
    fn depth(&self) -> usize;

    /// Weighted outcomes of row `i`; weights sum to 1.
    fn outcomes(&self, i: usize) -> Vec<(f64, &Step)>;

    /// Kernel induced by `select` (`None` means absorption).
    fn kernel_with<F>(&self, select: F, stabilize: bool) -> Result<KernelEstimate>
    where
        F: Fn(usize, &Step) -> Option<usize> + Sync,
    {
        let n = self.n();
        let rows: Vec<(Vec<f64>, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; n];
                let mut leak = 0.0;
                for (w, step) in self.outcomes(i) {
                    match select(i, step) {
                        Some(j) => row[j] += w,
                        None => leak += w,
                    }
                }
                (row, leak)
            })
            .collect();
        let mut touched = Vec::new();
        let mut q = DMatrix::zeros(n, n);
        for (i, (mut row, leak)) in rows.into_iter().enumerate() {
            if stabilize && leak == 0.0 {
                touched.push(i);
                row.iter_mut().for_each(|x| *x *= 1.0 - STABILIZATION_FLOOR);
            }
            for (j, x) in row.into_iter().enumerate() {
                q[(i, j)] = x;
            }
        }
        let kernel = AmcKernel::from_transient(q)?;
        let stabilization = stabilize.then_some(Stabilization { floor: STABILIZATION_FLOOR, rows: touched });
        Ok(KernelEstimate { kernel, stabilization })
    }

    /// Kernel whose next state is the local center.
    fn kernel(&self, stabilize: bool) -> Result<KernelEstimate> {
        self.kernel_with(|_, step| step.center(), stabilize)
    }

    /// Row-wise expectation of `f` over the step law.
    fn expectation<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(usize, &Step) -> f64 + Sync,
    {
        (0..self.n())
            .into_par_iter()
            .map(|i| self.outcomes(i).into_iter().map(|(w, step)| w * f(i, step)).sum())
            .collect()
    }
}

/// `M` simulator draws per row, each from substream `(Kernel, i, m)`.
#[derive(Debug, Clone)]
pub struct StepDraws {
    pub samples: usize,
    pub depth: usize,
    rows: Vec<Vec<Step>>,
}

impl StepDraws {
    pub fn row(&self, i: usize) -> &[Step] {
        &self.rows[i]
    }
}

impl StepSource for StepDraws {
    fn n(&self) -> usize {
        self.rows.len()
    }

    fn depth(&self) -> usize {
        self.depth
    }

    fn outcomes(&self, i: usize) -> Vec<(f64, &Step)> {
        let w = 1.0 / self.samples as f64;
        self.rows[i].iter().map(|s| (w, s)).collect()
    }

    // counts are summed before dividing so estimates are exact multiples of 1/M
    fn kernel_with<F>(&self, select: F, stabilize: bool) -> Result<KernelEstimate>
    where
        F: Fn(usize, &Step) -> Option<usize> + Sync,
    {
        let n = self.n();
        let m = self.samples as f64;
        let mut touched = Vec::new();
        let mut q = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut counts = vec![0usize; n];
            let mut absorbed = 0usize;
            for step in &self.rows[i] {
                match select(i, step) {
                    Some(j) => counts[j] += 1,
                    None => absorbed += 1,
                }
            }
            let scale = if stabilize && absorbed == 0 {
                touched.push(i);
                1.0 - STABILIZATION_FLOOR
            } else {
                1.0
            };
            for j in 0..n {
                q[(i, j)] = counts[j] as f64 / m * scale;
            }
        }
        let kernel = AmcKernel::from_transient(q)?;
        let stabilization = stabilize.then_some(Stabilization { floor: STABILIZATION_FLOOR, rows: touched });
        Ok(KernelEstimate { kernel, stabilization })
    }
}

/// Draws `samples` steps per row, each ranked to `depth` nodes.
pub fn draw_steps(sim: &Simulator, samples: usize, seed: SeedSpec, depth: usize) -> Result<StepDraws> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples per row must be at least 1".into()));
    }
    let rows = (0..sim.n())
        .into_par_iter()
        .map(|i| {
            (0..samples)
                .map(|m| {
                    let mut rng = seed.stream(Domain::Kernel, i as u64, m as u64);
                    sim.step(i, depth, &mut rng)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StepDraws { samples, depth, rows })
}

/// Algorithm-2 estimate of the center kernel.
pub fn estimate_kernel(sim: &Simulator, samples: usize, seed: SeedSpec, stabilize: bool) -> Result<KernelEstimate> {
    draw_steps(sim, samples, seed, 1)?.kernel(stabilize)
}

/// The exact step law of every row, by enumerating retained-edge subsets.
#[derive(Debug, Clone)]
pub struct ExactLaw {
    pub depth: usize,
    rows: Vec<Vec<(f64, Step)>>,
}

impl StepSource for ExactLaw {
    fn n(&self) -> usize {
        self.rows.len()
    }

    fn depth(&self) -> usize {
        self.depth
    }

    fn outcomes(&self, i: usize) -> Vec<(f64, &Step)> {
        self.rows[i].iter().map(|(w, s)| (*w, s)).collect()
    }
}

/// Enumerates the edge-retention model exactly. Only edges inside the
/// anchor's hop ball (all edges when no radius is set) are enumerated, and
/// that count must not exceed [`ENUMERATION_CAP`].
pub fn exact_law(sim: &Simulator, depth: usize) -> Result<ExactLaw> {
    let model = sim.model();
    let Uncertainty::EdgeBernoulli { p_on } = model.uncertainty else {
        return Err(Error::InvalidParameter("exact enumeration needs the edge-retention model".into()));
    };
    let base = sim.base();
    let n = base.n();
    let rows = (0..n)
        .into_par_iter()
        .map(|anchor| {
            let ball = model.r_hop.map(|r| base.hop_ball(anchor, r));
            let edges: Vec<_> = base
                .edges()
                .iter()
                .filter(|e| ball.as_ref().is_none_or(|b| b[e.u] && b[e.v]))
                .collect();
            if edges.len() > ENUMERATION_CAP {
                return Err(Error::EnumerationCap { edges: edges.len(), cap: ENUMERATION_CAP });
            }
            let mut law: Vec<(f64, Step)> = Vec::new();
            if model.alpha > 0.0 {
                law.push((model.alpha, Step::Absorbed));
            }
            for mask in 0u32..(1u32 << edges.len()) {
                let kept = mask.count_ones() as i32;
                let w = (1.0 - model.alpha)
                    * p_on.powi(kept)
                    * (1.0 - p_on).powi(edges.len() as i32 - kept);
                if w == 0.0 {
                    continue;
                }
                let h = WorkingGraph::new(
                    n,
                    edges
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, e)| (e.u, e.v, e.w)),
                );
                let step = step_from_graph(&h, anchor, model.k_min, depth);
                match law.iter_mut().find(|(_, s)| *s == step) {
                    Some(slot) => slot.0 += w,
                    None => law.push((w, step)),
                }
            }
            Ok(law)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExactLaw { depth, rows })
}

/// The exact center kernel of the edge-retention model.
pub fn exact_kernel(sim: &Simulator) -> Result<AmcKernel> {
    Ok(exact_law(sim, 1)?.kernel(false)?.kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::realization::RealizationModel;

    #[test]
    fn full_retention_is_deterministic() {
        let g = fixtures::two_cliques();
        let sim = Simulator::new(RealizationModel::edge_bernoulli(1.0, 0.15, 5), &g).unwrap();
        let k = exact_kernel(&sim).unwrap();
        for i in 0..9 {
            assert!((k.q()[(i, 4)] - 0.85).abs() < 1e-15);
            assert!((k.r()[i] - 0.15).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_retention_absorbs() {
        let g = fixtures::kite();
        let sim = Simulator::new(RealizationModel::edge_bernoulli(0.0, 0.15, 2), &g).unwrap();
        let k = exact_kernel(&sim).unwrap();
        assert!(k.r().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn triangle_by_hand() {
        let g = fixtures::triangle();
        let sim = Simulator::new(RealizationModel::edge_bernoulli(0.5, 0.15, 2), &g).unwrap();
        let k = exact_kernel(&sim).unwrap();
        // anchor 0, subsets of (01, 12, 02): {} {12} absorb; {01} -> 0; {02} -> 0;
        // {01,12} -> 1; {01,02} -> 0; {12,02} -> 2; {all} -> 0
        let row = k.row(0);
        let c = 0.85 / 8.0;
        let want = [4.0 * c, c, c, 0.15 + 2.0 * c];
        for (got, want) in row.iter().zip(want) {
            assert!((got - want).abs() < 1e-15, "{row:?}");
        }
    }

    #[test]
    fn single_sample_is_a_unit_row() {
        let g = fixtures::kite();
        let sim = Simulator::new(RealizationModel::edge_bernoulli(1.0, 0.0, 1), &g).unwrap();
        let est = estimate_kernel(&sim, 1, SeedSpec::new(1), false).unwrap();
        let k = est.kernel;
        for i in 0..5 {
            assert_eq!(k.q().row(i).iter().filter(|&&x| x == 1.0).count(), 1);
        }
        assert!(est.stabilization.is_none());
    }

    #[test]
    fn stabilization_floors_zero_leaks() {
        let g = fixtures::kite();
        let sim = Simulator::new(RealizationModel::edge_bernoulli(1.0, 0.0, 1), &g).unwrap();
        let est = estimate_kernel(&sim, 10, SeedSpec::new(1), true).unwrap();
        assert_eq!(est.stabilization.unwrap().rows, vec![0, 1, 2, 3, 4]);
        assert!(est.kernel.min_leak() >= STABILIZATION_FLOOR * (1.0 - 1e-9));
    }

    #[test]
    fn rows_are_order_independent() {
        let g = fixtures::two_cliques();
        let sim = Simulator::new(RealizationModel::edge_bernoulli(0.85, 0.15, 5), &g).unwrap();
        let a = estimate_kernel(&sim, 200, SeedSpec::new(9), true).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| estimate_kernel(&sim, 200, SeedSpec::new(9), true).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn enumeration_cap() {
        let g = fixtures::les_miserables();
        let sim = Simulator::new(RealizationModel::edge_bernoulli(0.5, 0.1, 2), &g).unwrap();
        assert!(matches!(exact_law(&sim, 1), Err(Error::EnumerationCap { .. })));
    }
}
