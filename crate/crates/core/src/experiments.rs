//! Experiment drivers behind the command-line tool and the examples. Each
//! returns an [`ExperimentReport`]; ground truth (optimal flows and costs)
//! is computed from the known instance and never shown to the algorithms.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::io::Write;
use std::time::Instant;

use crate::enforce::{enforce_flow_observed, EnforcementConfig, EnforcementStatus};
use crate::equilibrium::{solve_equilibrium, system_optimum, wardrop_violation, EqConfig};
use crate::error::{Error, Result};
use crate::game::io::{edge_map, flow_to_json, tolls_to_json};
use crate::game::{acyclic_reduce, FlowVector, RoutingGame, TollVector};
use crate::instances::{generate, InstanceSpec, Topology};
use crate::oracle::{OracleMode, QueryOracle};
use crate::zero_order::{compute_optimal_tolls, OptConfig};

/// Accuracy of the equilibrium oracle the experiments hide games behind.
pub const ORACLE_ACCURACY: f64 = 1e-12;

/// Largest toll-response discrepancy the impossibility demo tolerates.
pub const DEMO_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub instance: String,
    pub command: String,
    pub config: Value,
    pub results: Value,
    pub oracle_queries: usize,
    /// Whether every tolerance the command checks was met.
    pub passed: bool,
    pub wall_clock_ms: f64,
}

impl ExperimentReport {
    fn finish(instance: &str, command: &str, config: Value, results: Value, queries: usize, passed: bool, t: Instant) -> Self {
        ExperimentReport {
            instance: instance.to_string(),
            command: command.to_string(),
            config,
            results,
            oracle_queries: queries,
            passed,
            wall_clock_ms: t.elapsed().as_secs_f64() * 1e3,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Minimum total latency and a flow attaining it, computed with full
/// knowledge of the latencies.
pub fn full_knowledge_optimum(game: &RoutingGame) -> Result<(FlowVector, f64)> {
    let eq = system_optimum(game, &EqConfig::with_accuracy(1e-12))?;
    let cost = game.total_latency(&eq.flow)?;
    Ok((eq.flow, cost))
}

fn write_trace<T: Serialize>(trace: &mut Option<&mut dyn Write>, item: &T) -> Result<()> {
    if let Some(out) = trace.as_mut() {
        let line = serde_json::to_string(item)?;
        writeln!(out, "{line}").map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(())
}

/// Queries the two one-link-different games of the impossibility example on
/// a `resolution × resolution` toll grid over `[0, 2]²` and compares their
/// responses, alongside each game's optimal flow.
pub fn run_impossibility_demo(resolution: usize) -> Result<ExperimentReport> {
    let start = Instant::now();
    if resolution == 0 {
        return Err(Error::BadSpec("grid resolution must be positive".into()));
    }
    let g1 = generate(&InstanceSpec::new(Topology::Fig1L1))?;
    let g2 = generate(&InstanceSpec::new(Topology::Fig1L2))?;
    let mut o1 = QueryOracle::new(g1.clone(), OracleMode::FlowOnly, ORACLE_ACCURACY);
    let mut o2 = QueryOracle::new(g2.clone(), OracleMode::FlowOnly, ORACLE_ACCURACY);
    let ticks: Vec<f64> = if resolution == 1 {
        vec![0.0]
    } else {
        (0..resolution).map(|i| 2.0 * i as f64 / (resolution - 1) as f64).collect()
    };
    let mut discrepancy: f64 = 0.0;
    for &a in &ticks {
        for &b in &ticks {
            let tolls = TollVector::new(vec![a, b])?;
            let f1 = o1.query(&tolls)?.aggregate_flow;
            let f2 = o2.query(&tolls)?.aggregate_flow;
            let gap = f1.iter().zip(&f2).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            discrepancy = discrepancy.max(gap);
        }
    }
    let (opt1, cost1) = full_knowledge_optimum(&g1)?;
    let (opt2, cost2) = full_knowledge_optimum(&g2)?;
    let optima_apart = opt1.aggregate_distance(&opt2);
    let passed = discrepancy <= DEMO_TOLERANCE && optima_apart > 0.1;
    let results = json!({
        "grid_points": ticks.len() * ticks.len(),
        "max_discrepancy": discrepancy,
        "tolerance": DEMO_TOLERANCE,
        "fig1_l1": {"optimal_flow": opt1.aggregate(), "optimal_cost": cost1},
        "fig1_l2": {"optimal_flow": opt2.aggregate(), "optimal_cost": cost2},
        "optimal_flow_distance": optima_apart,
    });
    Ok(ExperimentReport::finish(
        "fig1_l1+fig1_l2",
        "demo-impossibility",
        json!({"grid": resolution, "toll_range": [0.0, 2.0]}),
        results,
        o1.query_count() + o2.query_count(),
        passed,
        start,
    ))
}

/// Solves for the equilibrium of `game` under `tolls` with full knowledge.
pub fn run_solve_eq(instance: &str, game: &RoutingGame, tolls: &TollVector) -> Result<ExperimentReport> {
    let start = Instant::now();
    let eq = solve_equilibrium(game, tolls, &EqConfig::default())?;
    let violation = wardrop_violation(game, tolls, &eq.flow)?;
    let results = json!({
        "flow": flow_to_json(game.network(), &eq.flow),
        "total_latency": game.total_latency(&eq.flow)?,
        "wardrop_violation": violation,
        "beckmann_gap": eq.beckmann_gap,
        "iterations": eq.iterations,
    });
    let config = json!({"tolls": tolls_to_json(game.network(), tolls)});
    Ok(ExperimentReport::finish(instance, "solve-eq", config, results, 0, true, start))
}

/// Enforces `target` (default: the optimal flow) through a flow-only
/// oracle hiding `game`.
pub fn run_enforce(
    instance: &str,
    game: &RoutingGame,
    target: Option<FlowVector>,
    delta: f64,
    max_queries: Option<usize>,
    mut trace: Option<&mut dyn Write>,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let target = match target {
        Some(t) => t,
        None => acyclic_reduce(game.network(), &full_knowledge_optimum(game)?.0)?,
    };
    let mut oracle = QueryOracle::new(game.clone(), OracleMode::FlowOnly, ORACLE_ACCURACY);
    oracle.set_budget(max_queries);
    let cfg = EnforcementConfig::for_oracle(delta, &oracle);
    let mut trace_error = Ok(());
    let result = enforce_flow_observed(&mut oracle, &target, &cfg, |step, _| {
        if trace_error.is_ok() {
            trace_error = write_trace(&mut trace, step);
        }
    })?;
    trace_error?;
    let network = game.network();
    let results = json!({
        "status": result.status,
        "tolls": tolls_to_json(network, &result.tolls),
        "achieved_deviation": result.achieved_deviation,
        "iterations": result.iterations,
        "target": edge_map(network, target.aggregate()),
    });
    let config = json!({
        "delta": delta,
        "eps_query": cfg.eps_query,
        "oracle_accuracy": oracle.accuracy(),
        "max_iterations": cfg.max_iterations,
        "max_queries": max_queries,
    });
    let passed = result.status == EnforcementStatus::Success;
    Ok(ExperimentReport::finish(instance, "enforce", config, results, result.queries_used, passed, start))
}

/// Optimal tolls for a hidden game, compared against the optimum computed
/// with full knowledge. Passes iff the induced cost is within `2ε`.
pub fn run_pipeline(
    instance: &str,
    game: &RoutingGame,
    cfg: &OptConfig,
    max_queries: Option<usize>,
    mut trace: Option<&mut dyn Write>,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let (_, opt) = full_knowledge_optimum(game)?;
    let mut oracle = QueryOracle::new(game.clone(), OracleMode::FlowAndCost, ORACLE_ACCURACY);
    oracle.set_budget(max_queries);
    let out = compute_optimal_tolls(&mut oracle, cfg)?;
    for step in &out.report.iteration_trace {
        write_trace(&mut trace, step)?;
    }
    let network = game.network();
    let gap = out.induced_cost - opt;
    let results = json!({
        "tolls": tolls_to_json(network, &out.tolls),
        "induced_cost": out.induced_cost,
        "optimal_cost": opt,
        "gap": gap,
        "tolerance": 2.0 * cfg.epsilon,
        "best_cost": out.report.best_cost,
        "best_flow": flow_to_json(network, &out.report.best_flow),
        "status": out.report.status,
        "gap_estimate": out.report.gap_estimate,
        "iterations": out.report.iteration_trace.len(),
        "cost_samples": out.report.cost_samples,
        "final_enforcement_deviation": out.enforcement.achieved_deviation,
    });
    let config = serde_json::to_value(cfg)?;
    let passed = gap <= 2.0 * cfg.epsilon;
    Ok(ExperimentReport::finish(
        instance,
        "optimize",
        config,
        results,
        out.report.total_oracle_queries,
        passed,
        start,
    ))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Numbers of parallel links.
    pub sizes: Vec<usize>,
    pub seed: u64,
    /// Enforcement tolerance for the optimal flow.
    pub delta_enforce: f64,
    pub epsilon: f64,
    /// Largest size for which the full optimization is also run.
    pub optimize_up_to: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![2, 4, 8, 16],
            seed: 0,
            delta_enforce: 1e-3,
            epsilon: 0.05,
            optimize_up_to: 8,
        }
    }
}

/// Query counts on random parallel-link games of growing size: enforcing
/// the optimal flow, and (for small sizes) the whole toll optimization.
/// The log-log slopes are informational.
pub fn run_bench(cfg: &BenchConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut enforce_points = Vec::new();
    let mut optimize_points = Vec::new();
    let mut total = 0;
    let mut passed = true;
    for &m in &cfg.sizes {
        let spec = InstanceSpec::new(Topology::Parallel(m)).with_seed(cfg.seed);
        let game = generate(&spec)?;
        let enforce = run_enforce(&spec.id(), &game, None, cfg.delta_enforce, None, None)?;
        total += enforce.oracle_queries;
        passed &= enforce.passed;
        enforce_points.push((m as f64, enforce.oracle_queries as f64));
        let mut row = json!({
            "m": m,
            "instance": spec.id(),
            "enforce_queries": enforce.oracle_queries,
            "enforce_status": enforce.results["status"],
        });
        if m <= cfg.optimize_up_to {
            let opt = run_pipeline(&spec.id(), &game, &OptConfig::new(cfg.epsilon, game.constants()), None, None)?;
            total += opt.oracle_queries;
            passed &= opt.passed;
            optimize_points.push((m as f64, opt.oracle_queries as f64));
            row["optimize_queries"] = json!(opt.oracle_queries);
            row["optimize_gap"] = opt.results["gap"].clone();
        }
        rows.push(row);
    }
    let results = json!({
        "rows": rows,
        "enforce_log_log_slope": log_log_slope(&enforce_points),
        "optimize_log_log_slope": log_log_slope(&optimize_points),
    });
    Ok(ExperimentReport::finish(
        "parallel",
        "bench",
        serde_json::to_value(cfg)?,
        results,
        total,
        passed,
        start,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, 3.0 * x.powi(3))).collect();
        assert!((log_log_slope(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(log_log_slope(&[(2.0, 1.0)]), None);
    }

    #[test]
    fn small_demo_passes() {
        let r = run_impossibility_demo(2).unwrap();
        assert!(r.passed);
        assert_eq!(r.results["grid_points"], 4);
        assert_eq!(r.oracle_queries, 8);
    }
}
