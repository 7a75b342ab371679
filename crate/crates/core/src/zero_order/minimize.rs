use serde::{Deserialize, Serialize};

use super::gradient::{estimate_gradient, GradientEstimate};
use super::sample::{CostOracle, CostOracleSample, EnforcedCostOracle};
use super::space::FlowSpace;
use crate::ellipsoid::Ellipsoid;
use crate::enforce::{enforce_flow, EnforcementConfig, EnforcementResult, EnforcementStatus};
use crate::error::{Error, Result};
use crate::game::{acyclic_reduce, FlowVector, GameConstants, TollVector};
use crate::oracle::QueryOracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    /// Target additive accuracy on the total latency.
    pub epsilon: f64,
    /// Accuracy of each cost sample.
    pub delta: f64,
    /// Central-difference step.
    pub fd_step: f64,
    /// Minimum weight of the reference flow mixed into gradient points.
    pub interior_mix: f64,
    pub max_iterations: usize,
    /// Iterations of the ellipsoid fallback when descent stalls.
    pub fallback_iterations: usize,
}

impl OptConfig {
    /// `δ = ε / (8 N²)` and `h = √δ`.
    pub fn new(epsilon: f64, constants: &GameConstants) -> Self {
        let n = constants.dimension.max(1) as f64;
        let delta = epsilon / (8.0 * n * n);
        OptConfig {
            epsilon,
            delta,
            fd_step: delta.sqrt(),
            interior_mix: 1e-3,
            max_iterations: 200,
            fallback_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptPhase {
    Descent,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OptStatus {
    /// The gap estimate dropped to `ε/2`.
    Converged,
    /// Iteration caps were hit first; the report holds the best flow seen.
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptStep {
    pub iteration: usize,
    pub phase: OptPhase,
    pub cost: f64,
    pub best_cost: f64,
    /// Frank-Wolfe gap of the estimated gradient, if one was computed.
    pub gap_estimate: Option<f64>,
    pub gradient_error_bound: Option<f64>,
    pub step_size: f64,
    pub oracle_queries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_flow: FlowVector,
    pub best_cost: f64,
    /// Tolls from the sample that produced `best_cost`.
    pub final_tolls: Option<TollVector>,
    pub total_oracle_queries: usize,
    pub cost_samples: usize,
    pub status: OptStatus,
    pub gap_estimate: f64,
    pub iteration_trace: Vec<OptStep>,
}

struct Run<'o, O: CostOracle + ?Sized> {
    oracle: &'o mut O,
    space: FlowSpace,
    cfg: OptConfig,
    start_queries: usize,
    samples: usize,
    best: CostOracleSample,
    trace: Vec<OptStep>,
}

impl<O: CostOracle + ?Sized> Run<'_, O> {
    fn sample(&mut self, flow: &FlowVector) -> Result<CostOracleSample> {
        self.samples += 1;
        let s = self.oracle.sample(flow)?;
        if s.observed_cost < self.best.observed_cost {
            self.best = s.clone();
        }
        Ok(s)
    }

    /// Gradient at `x` pulled toward the reference flow far enough that
    /// every difference step stays feasible.
    fn gradient(&mut self, x: &FlowVector) -> Result<GradientEstimate> {
        let margin = self.space.reference_margin();
        let theta = (self.cfg.interior_mix.max(1.01 * self.cfg.fd_step / margin)).min(0.5);
        let z = x.mix(self.space.reference_flow(), 1.0 - theta);
        self.samples += 2 * self.space.dimension();
        estimate_gradient(self.oracle, &self.space, &z, self.cfg.fd_step)
    }

    fn record(&mut self, phase: OptPhase, cost: f64, grad: Option<(&GradientEstimate, f64)>, step_size: f64) {
        self.trace.push(OptStep {
            iteration: self.trace.len(),
            phase,
            cost,
            best_cost: self.best.observed_cost,
            gap_estimate: grad.map(|(_, gap)| gap),
            gradient_error_bound: grad.map(|(g, _)| g.error_bound),
            step_size,
            oracle_queries: self.oracle.queries() - self.start_queries,
        });
    }

    fn descend(&mut self) -> Result<Option<f64>> {
        let eta_cap = 1e6;
        let mut eta = 1.0 / self.oracle.constants().curvature.max(1.0);
        let mut x = self.best.clone();
        for _ in 0..self.cfg.max_iterations {
            let grad = self.gradient(&x.requested_flow)?;
            let gap = self.space.frank_wolfe_gap(&x.requested_flow, &grad.edge_space)?;
            self.record(OptPhase::Descent, x.observed_cost, Some((&grad, gap)), eta);
            if gap <= 0.5 * self.cfg.epsilon {
                return Ok(Some(gap));
            }
            let mut moved = false;
            for _ in 0..12 {
                let point: Vec<Vec<f64>> = x
                    .requested_flow
                    .per_commodity()
                    .iter()
                    .zip(&grad.edge_space)
                    .map(|(row, g)| row.iter().zip(g).map(|(a, b)| a - eta * b).collect())
                    .collect();
                let p = self.space.project(&point)?;
                if p.aggregate_distance(&x.requested_flow) < 1e-12 {
                    eta = (2.0 * eta).min(eta_cap);
                    continue;
                }
                let s = self.sample(&p)?;
                if s.observed_cost < x.observed_cost {
                    x = s;
                    eta = (1.5 * eta).min(eta_cap);
                    moved = true;
                    break;
                }
                eta *= 0.5;
            }
            if !moved {
                return Ok(None);
            }
        }
        Ok(None)
    }

    /// Central-cut ellipsoid method in reduced coordinates around the best
    /// flow: feasibility cuts on negative edge flows, gradient cuts otherwise.
    fn fallback(&mut self) -> Result<Option<f64>> {
        let origin = self.best.requested_flow.clone();
        let network = self.oracle.network();
        let radius = 2.0 * network.num_edges() as f64 * network.total_demand();
        let mut ellipsoid = Ellipsoid::ball(vec![0.0; self.space.dimension()], radius);
        for _ in 0..self.cfg.fallback_iterations {
            let rows = self.space.offset(&origin, ellipsoid.center());
            let worst = rows
                .iter()
                .enumerate()
                .flat_map(|(i, row)| {
                    let usable = self.space.usable(i);
                    row.iter()
                        .enumerate()
                        .filter(move |(e, _)| usable[*e])
                        .map(move |(e, &v)| (i, e, v))
                })
                .min_by(|a, b| a.2.total_cmp(&b.2));
            if let Some((i, e, v)) = worst.filter(|w| w.2 < 0.0) {
                let _ = v;
                let normal: Vec<f64> = self
                    .space
                    .basis()
                    .iter()
                    .map(|(c, b)| if *c == i { b[e] } else { 0.0 })
                    .collect();
                if ellipsoid.cut(&normal).is_err() {
                    break;
                }
                continue;
            }
            let flow = FlowVector::new(rows)?;
            let s = self.sample(&flow)?;
            let grad = self.gradient(&flow)?;
            let gap = self.space.frank_wolfe_gap(&flow, &grad.edge_space)?;
            self.record(OptPhase::Fallback, s.observed_cost, Some((&grad, gap)), 0.0);
            if gap <= 0.5 * self.cfg.epsilon {
                return Ok(Some(gap));
            }
            let normal: Vec<f64> = grad.reduced.iter().map(|g| -g).collect();
            if ellipsoid.cut(&normal).is_err() {
                break;
            }
        }
        Ok(None)
    }
}

/// Projected gradient descent on the total latency reported by `oracle`,
/// with an ellipsoid fallback if descent stalls. The best cost recorded in
/// the trace never increases. When neither phase certifies a gap of `ε/2`
/// the report has status [`OptStatus::NotConverged`] and holds the best flow
/// sampled.
pub fn minimize_with<O: CostOracle + ?Sized>(oracle: &mut O, cfg: &OptConfig) -> Result<OptimizationReport> {
    if !(cfg.epsilon > 0.0 && cfg.fd_step > 0.0) {
        return Err(Error::OracleSampleFailed("epsilon and step must be positive".into()));
    }
    let space = FlowSpace::new(oracle.network())?;
    let start_queries = oracle.queries();
    let first = oracle.sample(space.reference_flow())?;
    let mut run = Run {
        oracle,
        space,
        cfg: *cfg,
        start_queries,
        samples: 1,
        best: first,
        trace: Vec::new(),
    };
    let mut gap = run.descend()?;
    if gap.is_none() && cfg.fallback_iterations > 0 {
        gap = run.fallback()?;
    }
    let last_gap = run.trace.iter().rev().find_map(|s| s.gap_estimate).unwrap_or(f64::INFINITY);
    Ok(OptimizationReport {
        best_flow: run.best.requested_flow.clone(),
        best_cost: run.best.observed_cost,
        final_tolls: run.best.enforcing_tolls.clone(),
        total_oracle_queries: run.oracle.queries() - start_queries,
        cost_samples: run.samples,
        status: if gap.is_some() {
            OptStatus::Converged
        } else {
            OptStatus::NotConverged
        },
        gap_estimate: gap.unwrap_or(last_gap),
        iteration_trace: run.trace,
    })
}

/// [`minimize_with`] using enforced cost samples of accuracy `cfg.delta`.
/// The oracle must run in cost mode.
pub fn minimize_total_latency(oracle: &mut QueryOracle, cfg: &OptConfig) -> Result<OptimizationReport> {
    let mut costs = EnforcedCostOracle::new(oracle, cfg.delta);
    minimize_with(&mut costs, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalTolls {
    pub tolls: TollVector,
    /// Cost of the equilibrium the oracle reported for `tolls`.
    pub induced_cost: f64,
    pub enforcement: EnforcementResult,
    pub report: OptimizationReport,
}

/// Minimizes the total latency, then enforces the best flow to within
/// `ε / (4 m K²)`. The tolls' equilibrium cost is within `2ε` of optimal
/// when the minimizer converged.
pub fn compute_optimal_tolls(oracle: &mut QueryOracle, cfg: &OptConfig) -> Result<OptimalTolls> {
    let mut report = minimize_total_latency(oracle, cfg)?;
    let c = *oracle.constants();
    let m = oracle.num_edges() as f64;
    let delta = cfg.epsilon / (4.0 * m * c.latency_bound * c.latency_bound);
    let before = oracle.query_count();
    let target = acyclic_reduce(oracle.network(), &report.best_flow)?;
    let enforcement = enforce_flow(oracle, &target, &EnforcementConfig::for_oracle(delta, oracle))?;
    if enforcement.status != EnforcementStatus::Success {
        return Err(Error::OracleSampleFailed(format!(
            "best flow not enforceable to {:.3e} (closest {:.3e})",
            2.0 * delta,
            enforcement.achieved_deviation
        )));
    }
    report.total_oracle_queries += oracle.query_count() - before;
    let induced_cost = oracle
        .log()
        .last()
        .and_then(|r| r.cost)
        .ok_or_else(|| Error::OracleSampleFailed("oracle does not report costs".into()))?;
    Ok(OptimalTolls {
        tolls: enforcement.tolls.clone(),
        induced_cost,
        enforcement,
        report,
    })
}
