//! Runs a configured experiment: builds the graph, estimates the kernel once,
//! and feeds it to every enabled analysis.

use std::path::{Path, PathBuf};
use std::time::Instant;

use afc_core::builder::StepDraws;
use afc_core::constrained::Fallback;
use afc_core::generate::{erdos_renyi, watts_strogatz};
use afc_core::kernel::KernelRecord;
use afc_core::reward::{degree_hubs, improvement_eta, switching_eta, transition_psi};
use afc_core::robust::{Certificate, Discrepancy};
use afc_core::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, ExperimentConfig, FileFormat, GraphSource, MetricName};
use crate::report::{bar_csv, bar_svg, order_desc, ranking_csv, sha256_hex, OutputDir};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// A library error; see [`RunError::exit_code`] for how it is classified.
    Core(afc_core::Error),
    Io(std::io::Error),
    /// A reproduced result lacks an expected property.
    Check(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Core(e) => e.fmt(f),
            RunError::Io(e) => write!(f, "I/O error: {e}"),
            RunError::Check(msg) => write!(f, "property check failed: {msg}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<afc_core::Error> for RunError {
    fn from(e: afc_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl RunError {
    /// 2 for bad input or configuration, 3 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use afc_core::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Io(_) => 1,
            RunError::Check(_) => 3,
            RunError::Core(e) => match e {
                E::Singular { .. }
                | E::Residual { .. }
                | E::TrajectoryCap { .. }
                | E::NoPostInitialSteps { .. }
                | E::NoContinuation
                | E::InfeasibleRow { .. }
                | E::Inadmissible { .. } => 3,
                E::Io(_) => 1,
                _ => 2,
            },
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;

pub fn build_graph(source: &GraphSource, seed: u64) -> RunResult<BaseTopology> {
    Ok(match source {
        GraphSource::ErdosRenyi { n, p } => erdos_renyi(*n, *p, SeedSpec::new(seed))?,
        GraphSource::WattsStrogatz { n, ring_degree, rewire_p } => {
            watts_strogatz(*n, *ring_degree, *rewire_p, SeedSpec::new(seed))?
        }
        GraphSource::File { path, format, weighted } => {
            let format = match format {
                Some(FileFormat::Gml) => GraphFormat::Gml,
                Some(FileFormat::EdgeList) => GraphFormat::EdgeList { weighted: weighted.unwrap_or(true) },
                None => match GraphFormat::from_path(path) {
                    GraphFormat::EdgeList { .. } => GraphFormat::EdgeList { weighted: weighted.unwrap_or(true) },
                    gml => gml,
                },
            };
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("graph file {}: {e}", path.display())))?;
            match format {
                GraphFormat::Gml => ingest::parse_gml(&text)?,
                GraphFormat::EdgeList { weighted } => ingest::parse_edge_list(&text, weighted)?,
            }
        }
        GraphSource::Fixture { name } => match name.as_str() {
            "two_cliques" => fixtures::two_cliques(),
            "les_miserables" => fixtures::les_miserables(),
            other => return Err(ConfigError(format!("unknown fixture {other:?}")).into()),
        },
    })
}

fn initial(config: &ExperimentConfig, n: usize) -> RunResult<InitialDistribution> {
    match &config.initial {
        None => Ok(InitialDistribution::uniform(n)),
        Some(s) if s.len() != n => {
            Err(ConfigError(format!("initial has {} entries for a graph with {n} nodes", s.len())).into())
        }
        Some(s) => Ok(InitialDistribution::new(s.clone())?),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub kernel_sha256: String,
    pub files: Vec<String>,
    pub top: Vec<usize>,
}

/// Runs every enabled analysis and writes the results under `out`. On
/// failure, whatever was written stays in place next to a `FAILED` marker.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> RunResult<RunSummary> {
    config.validate()?;
    let mut dir = OutputDir::create(out)?;
    let _ = std::fs::remove_file(out.join("FAILED"));
    let mut times = Vec::new();
    let mut state = RunState::default();
    let result = run_stages(config, &mut dir, &mut times, &mut state);
    let status = match &result {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("failed: {e}"),
    };
    let manifest = json!({
        "library": "afc-core",
        "version": env!("CARGO_PKG_VERSION"),
        "status": status,
        "master_seed": config.seed,
        "config": config,
        "graph": state.graph,
        "kernel_sha256": state.kernel_sha256,
        "outputs": dir.written.iter().map(|(f, h)| json!({ "file": f, "sha256": h })).collect::<Vec<_>>(),
        "wall_times": times,
    });
    dir.write_json("manifest.json", &manifest)?;
    match result {
        Ok(top) => Ok(RunSummary {
            kernel_sha256: state.kernel_sha256.unwrap_or_default(),
            files: dir.written.iter().map(|w| w.0.clone()).collect(),
            top,
        }),
        Err(e) => {
            std::fs::write(out.join("FAILED"), format!("{e}\n"))?;
            Err(e)
        }
    }
}

#[derive(Default)]
struct RunState {
    graph: Option<serde_json::Value>,
    kernel_sha256: Option<String>,
}

fn timed<T>(times: &mut Vec<StageTime>, stage: &str, f: impl FnOnce() -> RunResult<T>) -> RunResult<T> {
    let start = Instant::now();
    let value = f()?;
    times.push(StageTime { stage: stage.into(), seconds: start.elapsed().as_secs_f64() });
    Ok(value)
}

fn run_stages(
    config: &ExperimentConfig,
    dir: &mut OutputDir,
    times: &mut Vec<StageTime>,
    state: &mut RunState,
) -> RunResult<Vec<usize>> {
    let base = timed(times, "graph", || build_graph(&config.graph, config.seed))?;
    let edge_list = ingest::write_edge_list(&base);
    state.graph = Some(json!({
        "nodes": base.n(),
        "edges": base.edge_count(),
        "max_weight": base.max_weight(),
        "edge_list_sha256": sha256_hex(edge_list.as_bytes()),
    }));
    dir.write("graph.edges", edge_list.as_bytes())?;

    let model = config.model.realization_model(base.max_weight());
    let sim = Simulator::new(model, &base)?;
    let seed = SeedSpec::new(config.seed);
    let depth = config.step_depth();
    let draws = timed(times, "kernel", || Ok(draw_steps(&sim, config.samples, seed, depth)?))?;
    let estimate = draws.kernel(config.stabilize)?;
    let kernel = estimate.kernel.clone();
    let kernel_csv = kernel.to_csv();
    let kernel_sha = dir.write("kernel.csv", kernel_csv.as_bytes())?;
    state.kernel_sha256 = Some(kernel_sha.clone());
    let record = KernelRecord {
        kernel: kernel.clone(),
        model: Some(model),
        master_seed: Some(config.seed),
        samples_per_row: Some(config.samples),
        stabilization: estimate.stabilization.clone(),
    };
    dir.write_json("kernel.json", &json!({ "kernel_sha256": kernel_sha, "record": record }))?;

    let s = initial(config, base.n())?;
    let mut top = Vec::new();
    if config.baseline.enabled {
        top = timed(times, "baseline", || baseline(config, &kernel, &s, &kernel_sha, dir))?;
    }
    if config.robust.enabled {
        timed(times, "robust", || robust(config, &base, &kernel, &s, &kernel_sha, dir))?;
    }
    if config.reward.enabled {
        timed(times, "reward", || reward(config, &base, &draws, &kernel, &s, &kernel_sha, dir))?;
    }
    if config.constrained.enabled {
        timed(times, "constrained", || constrained(config, &base, &draws, &s, &kernel_sha, dir))?;
    }
    Ok(top)
}

fn write_bars(dir: &mut OutputDir, stem: &str, title: &str, values: &[f64], top: usize) -> RunResult<()> {
    let order = order_desc(values);
    dir.write(&format!("plotdata/{stem}.csv"), bar_csv(&order, values, top).as_bytes())?;
    dir.write(&format!("plotdata/{stem}.svg"), bar_svg(title, &order, values, top).as_bytes())?;
    Ok(())
}

/// Profile tables for a kernel; shared with the `afc --kernel` command.
pub fn write_profile(
    kernel: &AmcKernel,
    s: &InitialDistribution,
    top: usize,
    kernel_sha: &str,
    dir: &mut OutputDir,
) -> RunResult<Vec<usize>> {
    let profile = afc(kernel, s)?;
    let ranking = profile.ranking();
    let post_initial = post_initial_afc(kernel, s).ok();
    let mixture = afc_core::afc::mixture_check(kernel, s).ok();
    dir.write_json(
        "afc.json",
        &json!({
            "kernel_sha256": kernel_sha,
            "b": profile.b,
            "b_sum": profile.b.iter().sum::<f64>(),
            "mu": profile.mu,
            "expected_t": profile.expected_t,
            "top": &ranking[..top.min(ranking.len())],
            "post_initial": post_initial,
            "mixture": mixture.map(|m| json!({
                "applicable": m.applicable,
                "max_row_divergence": m.max_row_divergence,
                "b_mixture": m.b_mixture,
            })),
        }),
    )?;
    dir.write("afc.csv", profile.to_csv().as_bytes())?;
    dir.write("topk.csv", ranking_csv(&ranking, &profile.b, top).as_bytes())?;
    write_bars(dir, "afc_top", "AFC, top nodes", &profile.b, top)?;
    Ok(ranking[..top.min(ranking.len())].to_vec())
}

fn baseline(
    config: &ExperimentConfig,
    kernel: &AmcKernel,
    s: &InitialDistribution,
    kernel_sha: &str,
    dir: &mut OutputDir,
) -> RunResult<Vec<usize>> {
    write_profile(kernel, s, config.baseline.top, kernel_sha, dir)
}

fn overlap(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|v| b.contains(v)).count()
}

fn robust(
    config: &ExperimentConfig,
    base: &BaseTopology,
    kernel: &AmcKernel,
    s: &InitialDistribution,
    kernel_sha: &str,
    dir: &mut OutputDir,
) -> RunResult<()> {
    let rc = &config.robust;
    let uset = UncertaintySet::relative(kernel.clone(), rc.delta_rel, rc.leak_floor)?;
    let metric = GroundMetric::shortest_path(base)?;
    let nominal = afc(kernel, s)?;
    let nominal_top = nominal.top(5);
    let mut results = Vec::new();
    let mut tops = Vec::new();
    for name in &rc.metrics {
        let d = match name {
            MetricName::Kl => Discrepancy::Kl,
            MetricName::W1 => Discrepancy::W1(&metric),
        };
        let res = adversarial_search(&uset, s, d, rc.samples, SeedSpec::new(config.seed))?;
        let worst = AfcProfile { b: res.worst_b.clone(), mu: Vec::new(), expected_t: 0.0 };
        let worst_top = worst.top(5);
        write_bars(dir, &format!("robust_{}_top", d.name()), &format!("{} maximizer, top nodes", d.name()), &res.worst_b, config.baseline.top)?;
        results.push(json!({
            "metric": d.name(),
            "samples": res.samples,
            "worst_sample": res.worst_sample,
            "discrepancy": res.discrepancy,
            "top5": worst_top,
            "top5_overlap_with_nominal": overlap(&worst_top, &nominal_top),
            "min_leak": res.worst_kernel.min_leak(),
            "worst_b": res.worst_b,
            "envelope_min": res.envelope_min,
            "envelope_max": res.envelope_max,
        }));
        tops.push(worst_top);
    }
    let certificate = match (nominal.ranking().as_slice(), uset.nominal_violation()) {
        ([u, v, ..], None) => {
            let g = visit_gap(&uset, s, *u, *v)?;
            json!({ "u": g.u, "v": g.v, "gap": g.gap, "bound": g.bound, "certified": g.certificate != Certificate::Inconclusive })
        }
        _ => serde_json::Value::Null,
    };
    let same_top5 = tops.windows(2).all(|w| {
        let (mut a, mut b) = (w[0].clone(), w[1].clone());
        a.sort_unstable();
        b.sort_unstable();
        a == b
    });
    dir.write_json(
        "robust.json",
        &json!({
            "kernel_sha256": kernel_sha,
            "delta_rel": rc.delta_rel,
            "leak_floor": rc.leak_floor,
            "nominal_leak_violation_row": uset.nominal_violation(),
            "nominal_top5": nominal_top,
            "maximizers_share_top5": same_top5,
            "top_two_certificate": certificate,
            "results": results,
        }),
    )?;
    Ok(())
}

fn reward(
    config: &ExperimentConfig,
    base: &BaseTopology,
    draws: &StepDraws,
    kernel: &AmcKernel,
    s: &InitialDistribution,
    kernel_sha: &str,
    dir: &mut OutputDir,
) -> RunResult<()> {
    let rc = &config.reward;
    let n = base.n();
    let f = afc_core::reward::reward_f_from_hubs(base, &rc.levels, rc.beta)?;
    let hubs = degree_hubs(base, rc.levels.len());
    let rate = |psi: &[f64]| reward_afc(kernel, s, psi);
    let switching = transition_psi(kernel, &switching_eta(n));
    let improvement = transition_psi(kernel, &improvement_eta(&f));
    let topk = estimate_psi(&RewardSpec::ValuedTopK { k: rc.k, gamma: f.clone() }, draws, kernel)?;
    let b = afc(kernel, s)?.b;
    let contribution: Vec<f64> = b.iter().zip(&f).map(|(b, f)| b * f).collect();
    write_bars(dir, "reward_contribution_top", "AFC-weighted node reward, top nodes", &contribution, config.baseline.top)?;
    dir.write_json(
        "reward.json",
        &json!({
            "kernel_sha256": kernel_sha,
            "hubs": hubs,
            "levels": rc.levels,
            "beta": rc.beta,
            "f": f,
            "node": { "rate": rate(&f)?, "psi": f },
            "switching": { "rate": rate(&switching)?, "psi": switching },
            "improvement": {
                "rate": rate(&improvement)?,
                "psi": improvement,
                "convention": "max(f(next) - f(current), 0) per move, zero on absorption",
            },
            "valued_top_k": { "k": rc.k, "gamma": "f", "rate": rate(&topk)?, "psi": topk },
        }),
    )?;
    Ok(())
}

fn constrained(
    config: &ExperimentConfig,
    base: &BaseTopology,
    draws: &StepDraws,
    s: &InitialDistribution,
    kernel_sha: &str,
    dir: &mut OutputDir,
) -> RunResult<()> {
    let cc = &config.constrained;
    let pool = enumerate_clique_pool(base, cc.pool_size, cc.mode == PoolMode::Fallback)?;
    let ck = build_constrained_kernel(draws, &pool, cc.k, cc.mode, config.stabilize)?;
    let constrained_sha = sha256_hex(ck.kernel.to_csv().as_bytes());
    let stats = pool_statistics(&ck, s, &pool)?;
    write_bars(dir, "constrained_top", "constrained AFC, top nodes", &stats.b, config.baseline.top)?;
    dir.write_json(
        "constrained.json",
        &json!({
            "kernel_sha256": kernel_sha,
            "constrained_kernel_sha256": constrained_sha,
            "mode": cc.mode,
            "k": cc.k,
            "pool_size": cc.pool_size,
            "pool_short": pool.short,
            "primitives": pool.primitives,
            "members": pool.members,
            "fallback": pool.fallback.as_ref().map(Fallback::representative),
            "stabilized_rows": ck.stabilization.as_ref().map(|st| st.rows.clone()),
            "xi": stats.xi,
            "m_w": stats.m_w,
            "within_pool": stats.within_pool,
            "fallback_rate": ck.fallback_rate,
            "fallback_activation": stats.fallback_activation,
            "uncensored_mass": stats.uncensored_mass,
            "censored": stats.censored,
            "b": stats.b,
        }),
    )?;
    Ok(())
}

/// Reads a kernel CSV and writes its profile tables to `out`.
pub fn afc_from_kernel_file(
    path: &Path,
    initial_dist: Option<Vec<f64>>,
    top: usize,
    out: &Path,
) -> RunResult<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let kernel = AmcKernel::from_csv(&text)?;
    let s = match initial_dist {
        Some(s) => InitialDistribution::new(s)?,
        None => InitialDistribution::uniform(kernel.n()),
    };
    let mut dir = OutputDir::create(out)?;
    write_profile(&kernel, &s, top, &sha256_hex(text.as_bytes()), &mut dir)
}

/// Named preset configurations for `reproduce`.
pub fn preset(name: &str, seed: u64) -> Result<ExperimentConfig, ConfigError> {
    let mut c = ExperimentConfig { seed, ..Default::default() };
    match name {
        "fig1" => {
            c.graph = GraphSource::Fixture { name: "two_cliques".into() };
            c.samples = 2000;
            c.baseline.top = 9;
        }
        "er" | "ws" => {
            if name == "ws" {
                c.graph = GraphSource::WattsStrogatz { n: 100, ring_degree: 6, rewire_p: 0.10 };
            }
            c.robust.enabled = true;
            c.reward.enabled = true;
            c.constrained.enabled = true;
        }
        "lesmis" => {
            c.graph = GraphSource::Fixture { name: "les_miserables".into() };
            c.model.noise = crate::config::NoiseKind::Composite;
            c.model.w_max = Some(31.0);
            c.model.r_hop = Some(2);
            c.reward.enabled = true;
            c.constrained.enabled = true;
        }
        other => return Err(ConfigError(format!("unknown preset {other:?}; expected fig1, er, ws or lesmis"))),
    }
    Ok(c)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail }
}

fn read_json(out: &Path, name: &str) -> RunResult<serde_json::Value> {
    let text = std::fs::read_to_string(out.join(name))?;
    serde_json::from_str(&text).map_err(|e| RunError::Io(std::io::Error::other(e)))
}

fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(|x| x.as_f64()).collect()).unwrap_or_default()
}

/// Runs a preset and checks the qualitative properties it should show.
/// Node identities depend on the seed, so only properties are checked.
pub fn reproduce(name: &str, seed: u64, out: &Path) -> RunResult<Vec<Check>> {
    let config = preset(name, seed)?;
    run_experiment(&config, out)?;
    let afc_json = read_json(out, "afc.json")?;
    let b = floats(&afc_json["b"]);
    let n = b.len();
    let mut checks = vec![check(
        "b sums to 1",
        (b.iter().sum::<f64>() - 1.0).abs() <= 1e-10,
        format!("{:.15}", b.iter().sum::<f64>()),
    )];
    let mut order = order_desc(&b);
    order.truncate(5);
    let top_mean = order.iter().map(|&v| b[v]).sum::<f64>() / 5.0;
    match name {
        "fig1" => {
            let g = fixtures::two_cliques();
            let scores = centrality::betweenness(&g.to_working());
            let center = order_desc(&scores)[0];
            let (deg, total) = g.degree_stationary();
            checks.push(check("unique intermediary is node 4", center == 4 && scores.iter().filter(|&&x| x == scores[4]).count() == 1, format!("argmax {center}")));
            checks.push(check("stationary visit 2/28 vs 4/28", deg[4] == 2 && deg[0] == 4 && deg[5] == 4 && total == 28, format!("{}/{total}, {}/{total}", deg[4], deg[0])));
            checks.push(check("AFC peaks at the intermediary", order[0] == 4, format!("top {:?}", order)));
        }
        "er" | "ws" => {
            checks.push(check("Top-5 mean at least 3x the node mean", top_mean >= 3.0 / n as f64, format!("{top_mean:.4} vs {:.4}", 1.0 / n as f64)));
            let robust = read_json(out, "robust.json")?;
            for r in robust["results"].as_array().into_iter().flatten() {
                let metric = r["metric"].as_str().unwrap_or("?");
                let leak = r["min_leak"].as_f64().unwrap_or(0.0);
                checks.push(check(&format!("{metric} maximizer keeps min leak >= 0.05"), leak >= 0.05 - 1e-12, format!("{leak:.4}")));
                let ov = r["top5_overlap_with_nominal"].as_u64().unwrap_or(0);
                checks.push(check(&format!("{metric} maximizer Top-5 overlap >= 3"), ov >= 3, format!("{ov}")));
            }
            let cons = read_json(out, "constrained.json")?;
            checks.push(check("constrained profile sums to 1", (floats(&cons["b"]).iter().sum::<f64>() - 1.0).abs() <= 1e-10, String::new()));
        }
        "lesmis" => {
            let g = fixtures::les_miserables();
            checks.push(check("77 nodes, 254 edges", g.n() == 77 && g.edge_count() == 254, format!("{} / {}", g.n(), g.edge_count())));
            checks.push(check("weights in [1, 31]", g.edges().iter().all(|e| (1.0..=31.0).contains(&e.w)), format!("max {}", g.max_weight())));
            checks.push(check("Top-5 mean at least 3x the node mean", top_mean >= 3.0 / n as f64, format!("{top_mean:.4} vs {:.4}", 1.0 / n as f64)));
        }
        _ => {}
    }
    let mut dir = OutputDir::create(out)?;
    dir.write_json("checks.json", &checks)?;
    Ok(checks)
}

/// Resolves an output directory, defaulting to `results/<name>`.
pub fn output_dir(out: Option<PathBuf>, name: &str) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from("results").join(name))
}
