//! Toll enforcement: find tolls whose induced equilibrium is within `2δ` of a
//! target flow, using only equilibrium queries.
//!
//! The search is a central-cut ellipsoid method over toll space, started
//! from the ball circumscribing `[0, T_max]^m`. A center outside the box is
//! cut back with a coordinate half-space. A center inside the box is queried;
//! if the response `f` is not close enough to the target `f*`, the
//! half-space `{τ′ : (f − f*)·τ′ ≥ (f − f*)·τ}` is kept.
//!
//! That cut never discards a toll vector `τ*` that induces `f*` exactly.
//! The equilibrium at `τ` satisfies `(l(f) + τ)·(f* − f) ≥ 0` and the one at
//! `τ*` satisfies `(l(f*) + τ*)·(f − f*) ≥ 0`. Adding the two and using
//! `(l(f) − l(f*))·(f − f*) ≥ 0` (latencies are nondecreasing) leaves
//! `(f − f*)·τ* ≥ (f − f*)·τ`.
//!
//! Without a lower bound on how fast latencies grow there is no certificate
//! that a target is not enforceable; the search gives up with
//! [`EnforcementStatus::NotFound`] once the ellipsoid is smaller than a ball
//! of radius `δ / (4 m K)` or the iteration cap is reached.

use serde::{Deserialize, Serialize};

use crate::ellipsoid::Ellipsoid;
use crate::error::{Error, Result};
use crate::game::flow::{has_cycle, sup_distance};
use crate::game::{is_feasible, FlowVector, GameConstants, TollVector, FEASIBILITY_TOL};
use crate::oracle::QueryOracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnforcementConfig {
    /// Target tolerance; success means deviation at most `2δ`.
    pub delta: f64,
    /// Oracle accuracy the guarantee assumes: `δ² / (K m k Σ d_i)`.
    pub eps_query: f64,
    pub max_iterations: usize,
    /// Natural log of the volume below which the search stops.
    pub log_volume_floor: f64,
}

impl EnforcementConfig {
    pub fn new(delta: f64, constants: &GameConstants, m: usize) -> Self {
        let k = (constants.dimension / m.max(1)).max(1) as f64;
        let big_k = constants.latency_bound;
        let mf = m.max(1) as f64;
        let eps_query = delta * delta / (big_k * mf * k * constants.total_demand.max(f64::MIN_POSITIVE));
        let max_iterations = (16.0 * mf * mf * (constants.toll_cap * mf * big_k / delta).ln().max(1.0)).ceil() as usize;
        let floor_radius = delta / (4.0 * mf * big_k);
        let log_volume_floor = Ellipsoid::ball(vec![0.0; m.max(1)], floor_radius).log_volume();
        EnforcementConfig {
            delta,
            eps_query,
            max_iterations,
            log_volume_floor,
        }
    }

    /// Defaults sized from the oracle's public constants.
    pub fn for_oracle(delta: f64, oracle: &QueryOracle) -> Self {
        EnforcementConfig::new(delta, oracle.constants(), oracle.num_edges())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EnforcementStatus {
    Success,
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnforcementResult {
    /// On success the qualifying tolls; otherwise the closest ones seen.
    pub tolls: TollVector,
    pub achieved_deviation: f64,
    pub queries_used: usize,
    pub iterations: usize,
    pub status: EnforcementStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    /// Center left the toll box; a coordinate half-space was kept.
    Box,
    /// Center was queried and the separation cut was kept.
    Separation,
    /// Center was queried and met the tolerance.
    Accepted,
}

/// One iteration of the search, as emitted to traces and observers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnforcementStep {
    pub iteration: usize,
    pub center: Vec<f64>,
    pub deviation: Option<f64>,
    pub log_volume: f64,
    pub cut: CutKind,
}

/// Separation cut normal `g = f_observed − f_target`; the kept half-space is
/// `{τ′ : g·τ′ ≥ g·τ_queried}`.
pub fn separation_cut(f_observed: &[f64], f_target: &[f64]) -> Result<Vec<f64>> {
    let g: Vec<f64> = f_observed.iter().zip(f_target).map(|(a, b)| a - b).collect();
    let norm = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if norm < 1e-15 {
        return Err(Error::DegenerateCut(norm));
    }
    Ok(g)
}

pub fn enforce_flow(oracle: &mut QueryOracle, target: &FlowVector, cfg: &EnforcementConfig) -> Result<EnforcementResult> {
    enforce_flow_observed(oracle, target, cfg, |_, _| {})
}

/// [`enforce_flow`] that reports every iteration, with the ellipsoid after
/// that iteration's cut, to `observer`.
pub fn enforce_flow_observed<F>(
    oracle: &mut QueryOracle,
    target: &FlowVector,
    cfg: &EnforcementConfig,
    mut observer: F,
) -> Result<EnforcementResult>
where
    F: FnMut(&EnforcementStep, &Ellipsoid),
{
    let network = oracle.network();
    if !is_feasible(network, target, FEASIBILITY_TOL) {
        return Err(Error::TargetInfeasible("target violates flow conservation".into()));
    }
    if let Some(i) = (0..target.num_commodities()).find(|&i| has_cycle(network, target.commodity(i))) {
        return Err(Error::TargetCyclic(i));
    }
    if oracle.accuracy() > cfg.eps_query {
        log::warn!(
            "oracle accuracy {:e} is coarser than the {:e} the 2δ guarantee assumes",
            oracle.accuracy(),
            cfg.eps_query
        );
    }

    let m = oracle.num_edges();
    let cap = oracle.toll_cap();
    let goal = target.aggregate().to_vec();
    let start = oracle.query_count();
    let mut ellipsoid = Ellipsoid::ball(vec![0.5 * cap; m], 0.5 * cap * (m as f64).sqrt());
    let mut best: Option<(f64, TollVector)> = None;

    let finish = |oracle: &QueryOracle, status, best: Option<(f64, TollVector)>, iterations| {
        let (achieved_deviation, tolls) = best.unwrap_or((f64::INFINITY, TollVector::zeros(m)));
        EnforcementResult {
            tolls,
            achieved_deviation,
            queries_used: oracle.query_count() - start,
            iterations,
            status,
        }
    };

    for iteration in 0..cfg.max_iterations {
        if ellipsoid.log_volume() < cfg.log_volume_floor {
            return Ok(finish(oracle, EnforcementStatus::NotFound, best, iteration));
        }
        let center = ellipsoid.center().to_vec();

        let outside = center
            .iter()
            .enumerate()
            .map(|(j, &c)| (j, (-c).max(c - cap)))
            .filter(|&(_, violation)| violation > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, _)) = outside {
            let mut g = vec![0.0; m];
            g[j] = if center[j] < 0.0 { 1.0 } else { -1.0 };
            if ellipsoid.cut(&g).is_err() {
                return Ok(finish(oracle, EnforcementStatus::NotFound, best, iteration));
            }
            let step = EnforcementStep {
                iteration,
                center,
                deviation: None,
                log_volume: ellipsoid.log_volume(),
                cut: CutKind::Box,
            };
            observer(&step, &ellipsoid);
            continue;
        }

        let tolls = TollVector::clamped(&center, cap);
        let response = oracle.query(&tolls)?;
        let deviation = sup_distance(&response.aggregate_flow, &goal);
        if best.as_ref().map_or(true, |(d, _)| deviation < *d) {
            best = Some((deviation, tolls.clone()));
        }
        if deviation <= 2.0 * cfg.delta {
            let step = EnforcementStep {
                iteration,
                center,
                deviation: Some(deviation),
                log_volume: ellipsoid.log_volume(),
                cut: CutKind::Accepted,
            };
            observer(&step, &ellipsoid);
            let result = EnforcementResult {
                tolls,
                achieved_deviation: deviation,
                queries_used: oracle.query_count() - start,
                iterations: iteration + 1,
                status: EnforcementStatus::Success,
            };
            return Ok(result);
        }
        let g = separation_cut(&response.aggregate_flow, &goal)?;
        if ellipsoid.cut(&g).is_err() {
            return Ok(finish(oracle, EnforcementStatus::NotFound, best, iteration + 1));
        }
        let step = EnforcementStep {
            iteration,
            center,
            deviation: Some(deviation),
            log_volume: ellipsoid.log_volume(),
            cut: CutKind::Separation,
        };
        observer(&step, &ellipsoid);
    }
    Ok(finish(oracle, EnforcementStatus::NotFound, best, cfg.max_iterations))
}
