use serde::{Deserialize, Serialize};

use crate::enforce::{enforce_flow, EnforcementConfig, EnforcementStatus};
use crate::error::{Error, Result};
use crate::game::{acyclic_reduce, FlowVector, GameConstants, Network, RoutingGame, TollVector};
use crate::oracle::QueryOracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostOracleSample {
    pub requested_flow: FlowVector,
    /// Tolls whose equilibrium produced the cost; `None` for oracles that
    /// evaluate the cost directly.
    pub enforcing_tolls: Option<TollVector>,
    pub observed_cost: f64,
    pub queries_spent: usize,
}

/// Noisy evaluations of the total latency `C(f)`.
pub trait CostOracle {
    /// `observed_cost` is within [`CostOracle::accuracy`] of `C(flow)`.
    fn sample(&mut self, flow: &FlowVector) -> Result<CostOracleSample>;
    fn accuracy(&self) -> f64;
    fn network(&self) -> &Network;
    fn constants(&self) -> &GameConstants;
    /// Equilibrium queries spent so far.
    fn queries(&self) -> usize;
}

/// One zero-order sample through the query oracle: enforce `flow` to
/// within `δ / (4 m K²)` and return the reported cost of the equilibrium the
/// accepted query produced. The oracle must run in cost mode.
pub fn zero_order_cost_oracle(oracle: &mut QueryOracle, flow: &FlowVector, delta: f64) -> Result<CostOracleSample> {
    let c = *oracle.constants();
    let m = oracle.num_edges() as f64;
    let delta_enforce = delta / (4.0 * m * c.latency_bound * c.latency_bound);
    let target = acyclic_reduce(oracle.network(), flow)?;
    let cfg = EnforcementConfig::for_oracle(delta_enforce, oracle);
    let result = enforce_flow(oracle, &target, &cfg)?;
    if result.status != EnforcementStatus::Success {
        return Err(Error::OracleSampleFailed(format!(
            "could not enforce the requested flow (closest deviation {:.3e}, needed {:.3e})",
            result.achieved_deviation,
            2.0 * delta_enforce
        )));
    }
    let cost = oracle
        .log()
        .last()
        .and_then(|r| r.cost)
        .ok_or_else(|| Error::OracleSampleFailed("oracle does not report costs".into()))?;
    Ok(CostOracleSample {
        requested_flow: flow.clone(),
        enforcing_tolls: Some(result.tolls),
        observed_cost: cost,
        queries_spent: result.queries_used,
    })
}

/// [`CostOracle`] backed by a [`QueryOracle`] via [`zero_order_cost_oracle`].
pub struct EnforcedCostOracle<'a> {
    oracle: &'a mut QueryOracle,
    delta: f64,
}

impl<'a> EnforcedCostOracle<'a> {
    pub fn new(oracle: &'a mut QueryOracle, delta: f64) -> Self {
        EnforcedCostOracle { oracle, delta }
    }

    pub fn oracle(&mut self) -> &mut QueryOracle {
        self.oracle
    }
}

impl CostOracle for EnforcedCostOracle<'_> {
    fn sample(&mut self, flow: &FlowVector) -> Result<CostOracleSample> {
        zero_order_cost_oracle(self.oracle, flow, self.delta)
    }

    fn accuracy(&self) -> f64 {
        self.delta
    }

    fn network(&self) -> &Network {
        self.oracle.network()
    }

    fn constants(&self) -> &GameConstants {
        self.oracle.constants()
    }

    fn queries(&self) -> usize {
        self.oracle.query_count()
    }
}

/// Evaluates `C(f)` from known latencies. Spends no queries.
#[derive(Debug, Clone)]
pub struct ExactCostOracle {
    game: RoutingGame,
    samples: usize,
}

impl ExactCostOracle {
    pub fn new(game: RoutingGame) -> Self {
        ExactCostOracle { game, samples: 0 }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }
}

impl CostOracle for ExactCostOracle {
    fn sample(&mut self, flow: &FlowVector) -> Result<CostOracleSample> {
        self.samples += 1;
        Ok(CostOracleSample {
            requested_flow: flow.clone(),
            enforcing_tolls: None,
            observed_cost: self.game.total_latency(flow)?,
            queries_spent: 0,
        })
    }

    fn accuracy(&self) -> f64 {
        0.0
    }

    fn network(&self) -> &Network {
        self.game.network()
    }

    fn constants(&self) -> &GameConstants {
        self.game.constants()
    }

    fn queries(&self) -> usize {
        0
    }
}
