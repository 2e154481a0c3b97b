mod common;

use afc_core::afc::{fundamental_matrix, mixture_check, survival_decomposition};
use afc_core::centrality::betweenness;
use afc_core::robust::{mixture_proxy_deviation, Ipm};
use afc_core::simulate::simulate_afc;
use afc_core::{afc, estimate_kernel, fixtures, post_initial_afc, AmcKernel, InitialDistribution};
use afc_core::{RealizationModel, SeedSpec, Simulator, WorkingGraph};
use common::*;

#[test]
fn canonical_simulation_hits_closed_form() {
    let third = 1.0 / 3.0;
    let k = AmcKernel::canonical(0.5, &[third; 3]).unwrap();
    let s = InitialDistribution::point(3, 0);
    let est = simulate_afc(&k, &s, 500_000, SeedSpec::new(1)).unwrap();
    let want = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
    assert!(max_abs_diff(&est.visit_ratio, &want) < 0.01);
    assert!(max_abs_diff(&est.uniform_step, &want) < 0.01);
}

#[test]
fn estimated_fig1_kernel_against_trajectories() {
    let g = fixtures::two_cliques();
    let sim = Simulator::new(RealizationModel::edge_bernoulli(0.85, 0.15, 5), &g).unwrap();
    let k = estimate_kernel(&sim, 2000, SeedSpec::new(5), true).unwrap().kernel;
    let s = InitialDistribution::uniform(9);
    let b = afc(&k, &s).unwrap().b;
    let est = simulate_afc(&k, &s, 200_000, SeedSpec::new(6)).unwrap();
    for v in 0..9 {
        // 99% two-sided normal quantile
        assert!((est.visit_ratio[v] - b[v]).abs() <= 2.576 * est.visit_ratio_se[v] + 1e-12, "node {v}");
    }
}

/// One-shot law of the global center, by enumerating edge subsets.
fn oneshot_law(g: &afc_core::BaseTopology, p_on: f64) -> Vec<f64> {
    let m = g.edge_count();
    let mut p = vec![0.0; g.n()];
    for mask in 0u32..(1 << m) {
        let kept = mask.count_ones() as i32;
        let w = p_on.powi(kept) * (1.0 - p_on).powi(m as i32 - kept);
        let h = WorkingGraph::new(
            g.n(),
            g.edges().iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, e)| (e.u, e.v, e.w)),
        );
        let all: Vec<usize> = (0..g.n()).collect();
        let total = betweenness(&h);
        p[argmax_smallest(&total, &all)] += w;
    }
    p
}

#[test]
fn iid_center_chain_post_initial_is_the_oneshot_law() {
    let g = fixtures::kite();
    let p = oneshot_law(&g, 0.7);
    let k = AmcKernel::canonical(0.15, &p).unwrap();
    for v in 0..5 {
        let s = InitialDistribution::point(5, v);
        let plus = post_initial_afc(&k, &s).unwrap();
        assert!(max_abs_diff(&plus, &p) < 1e-12);
        let profile = afc(&k, &s).unwrap();
        let want: Vec<f64> = (0..5).map(|j| 0.15 * s.as_slice()[j] + 0.85 * p[j]).collect();
        assert!(max_abs_diff(&profile.b, &want) < 1e-12);
    }
}

#[test]
fn identical_rows_give_identical_post_initial_profiles() {
    let k = AmcKernel::from_rows(&[
        vec![0.1, 0.3, 0.4, 0.2],
        vec![0.1, 0.3, 0.4, 0.2],
        vec![0.5, 0.2, 0.0, 0.3],
    ])
    .unwrap();
    let a = post_initial_afc(&k, &InitialDistribution::point(3, 0)).unwrap();
    let b = post_initial_afc(&k, &InitialDistribution::point(3, 1)).unwrap();
    assert!(max_abs_diff(&a, &b) < 1e-14);
    assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

/// `E[(1/T) Σ_t 1{X_t = v}]` summed over all trajectories up to `horizon`.
fn within_path_expectation(k: &AmcKernel, start: usize, horizon: usize) -> Vec<f64> {
    let n = k.n();
    // state: (current node, visit counts) with probability mass
    let mut frontier: Vec<(usize, Vec<u32>, f64)> = vec![(start, { let mut c = vec![0; n]; c[start] = 1; c }, 1.0)];
    let mut out = vec![0.0; n];
    for len in 1..=horizon {
        let mut next = Vec::new();
        for (x, counts, mass) in frontier {
            let absorb = mass * k.r()[x];
            for v in 0..n {
                out[v] += absorb * counts[v] as f64 / len as f64;
            }
            for y in 0..n {
                let p = k.q()[(x, y)];
                if p > 0.0 {
                    let mut c = counts.clone();
                    c[y] += 1;
                    next.push((y, c, mass * p));
                }
            }
        }
        // merge identical count vectors to keep the frontier small
        next.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        let mut merged: Vec<(usize, Vec<u32>, f64)> = Vec::new();
        for item in next {
            match merged.last_mut() {
                Some(last) if last.0 == item.0 && last.1 == item.1 => last.2 += item.2,
                _ => merged.push(item),
            }
        }
        frontier = merged;
    }
    out
}

#[test]
fn within_path_averaging_is_biased() {
    let k = AmcKernel::from_rows(&[vec![0.0, 0.9, 0.1], vec![0.0, 0.5, 0.5]]).unwrap();
    let s = InitialDistribution::point(2, 0);
    let b = afc(&k, &s).unwrap().b;
    let brute = within_path_expectation(&k, 0, 30);
    let est = simulate_afc(&k, &s, 200_000, SeedSpec::new(9)).unwrap();
    // the within-path estimator converges to the brute-force value, not to b
    assert!((est.within_path[0] - brute[0]).abs() < 0.01);
    assert!((brute[0] - b[0]).abs() > 10.0 * est.visit_ratio_se[0]);
    assert!((est.visit_ratio[0] - b[0]).abs() < 4.0 * est.visit_ratio_se[0]);
}

#[test]
fn mixture_formula_deviation_is_bounded() {
    let k = AmcKernel::from_rows(&[
        vec![0.1, 0.6, 0.1, 0.2],
        vec![0.5, 0.1, 0.2, 0.2],
        vec![0.2, 0.2, 0.4, 0.2],
    ])
    .unwrap();
    let s = InitialDistribution::point(3, 0);
    let m = mixture_check(&k, &s).unwrap();
    assert!(!m.applicable);
    let b = afc(&k, &s).unwrap().b;
    assert!(max_abs_diff(&m.b_mixture, &b) > 1e-3);
    for metric in [Ipm::TotalVariation, Ipm::L1] {
        let dev = mixture_proxy_deviation(&k, &s, &m.p_hat, metric).unwrap();
        assert!(dev.deviation <= dev.bound + 1e-12, "{dev:?}");
        assert!(dev.deviation > 0.0);
    }
}

#[test]
fn geometric_stopping() {
    let p = [0.1, 0.2, 0.3, 0.4];
    let k = AmcKernel::canonical(0.15, &p).unwrap();
    let s = InitialDistribution::new(vec![0.25; 4]).unwrap();
    let b = afc(&k, &s).unwrap().b;
    let want: Vec<f64> = (0..4).map(|j| 0.15 * 0.25 + 0.85 * p[j]).collect();
    assert!(max_abs_diff(&b, &want) < 1e-12);
    let m = mixture_check(&k, &s).unwrap();
    assert!(m.applicable && m.max_row_divergence < 1e-12);
    assert!(max_abs_diff(&m.b_mixture, &b) < 1e-12);
}

#[test]
fn fundamental_matrix_residual_on_random_kernels() {
    let mut rng = rng(3);
    for _ in 0..20 {
        let k = random_kernel(12, 0.02, 0.3, &mut rng);
        let n = fundamental_matrix(&k).unwrap();
        let back = (nalgebra::DMatrix::identity(12, 12) - k.q()) * n;
        assert!((back - nalgebra::DMatrix::<f64>::identity(12, 12)).amax() < 1e-9);
    }
}

#[test]
fn survival_weights_sum_to_one() {
    let mut rng = rng(4);
    let k = random_kernel(6, 0.1, 0.4, &mut rng);
    let s = InitialDistribution::new(random_distribution(6, &mut rng)).unwrap();
    let parts = survival_decomposition(&k, &s, 1e-13).unwrap();
    let total: f64 = parts.iter().map(|p| p.0).sum();
    assert!((total - 1.0).abs() < 1e-12);
}
