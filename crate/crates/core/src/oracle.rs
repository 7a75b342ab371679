//! The query boundary: tolls go in, the induced equilibrium comes out.
//!
//! A [`QueryOracle`] owns a routing game whose latency functions callers
//! never see. It exposes only the network skeleton and the public constants
//! (`K`, `T_max`), answers toll queries with the aggregate equilibrium flow
//! and, in [`OracleMode::FlowAndCost`], the total latency of that flow.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::io::Write;

use crate::equilibrium::{solve_equilibrium, EqConfig};
use crate::error::{Error, Result};
use crate::game::io::{edge_map, format_decimal};
use crate::game::{GameConstants, Network, RoutingGame, TollVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OracleMode {
    FlowOnly,
    FlowAndCost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResponse {
    pub aggregate_flow: Vec<f64>,
    /// Present iff the oracle runs in [`OracleMode::FlowAndCost`].
    pub total_cost: Option<f64>,
    /// 1-based position of this query since the last reset.
    pub query_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub index: usize,
    pub tolls: Vec<f64>,
    pub flow: Vec<f64>,
    pub cost: Option<f64>,
}

/// Smallest equilibrium accuracy the oracle asks of its solver; below this
/// the path-cost comparisons are dominated by rounding.
pub const MIN_SOLVER_ACCURACY: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct QueryOracle {
    game: RoutingGame,
    mode: OracleMode,
    accuracy: f64,
    solver: EqConfig,
    budget: Option<usize>,
    log: Vec<QueryRecord>,
}

impl QueryOracle {
    /// Hides `game` behind an oracle whose responses are within `accuracy`
    /// of the exact equilibrium in `‖·‖_∞`.
    pub fn new(game: RoutingGame, mode: OracleMode, accuracy: f64) -> Self {
        let solver_accuracy = (accuracy / 4.0).min(1e-8).max(MIN_SOLVER_ACCURACY);
        QueryOracle {
            game,
            mode,
            accuracy,
            solver: EqConfig::with_accuracy(solver_accuracy),
            budget: None,
            log: Vec::new(),
        }
    }

    /// Caps the number of queries between resets.
    pub fn with_budget(mut self, max_queries: usize) -> Self {
        self.budget = Some(max_queries);
        self
    }

    pub fn set_budget(&mut self, max_queries: Option<usize>) {
        self.budget = max_queries;
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn network(&self) -> &Network {
        self.game.network()
    }

    pub fn constants(&self) -> &GameConstants {
        self.game.constants()
    }

    pub fn num_edges(&self) -> usize {
        self.game.num_edges()
    }

    pub fn toll_cap(&self) -> f64 {
        self.game.constants().toll_cap
    }

    pub fn query_count(&self) -> usize {
        self.log.len()
    }

    pub fn remaining_budget(&self) -> Option<usize> {
        self.budget.map(|b| b.saturating_sub(self.log.len()))
    }

    pub fn log(&self) -> &[QueryRecord] {
        &self.log
    }

    pub fn query(&mut self, tolls: &TollVector) -> Result<OracleResponse> {
        let cap = self.toll_cap();
        if tolls.len() != self.num_edges() {
            return Err(Error::Dimension(format!("{} tolls for {} edges", tolls.len(), self.num_edges())));
        }
        if let Some((edge, &value)) = tolls
            .values()
            .iter()
            .enumerate()
            .find(|(_, &t)| !(0.0..=cap).contains(&t))
        {
            return Err(Error::TollOutOfRange { edge, value, cap });
        }
        if let Some(budget) = self.budget {
            if self.log.len() >= budget {
                return Err(Error::OracleBudgetExceeded(budget));
            }
        }
        let eq = solve_equilibrium(&self.game, tolls, &self.solver)?;
        let flow = eq.flow.aggregate().to_vec();
        let cost = match self.mode {
            OracleMode::FlowOnly => None,
            OracleMode::FlowAndCost => Some(self.game.cost_of_aggregate(&flow)),
        };
        let index = self.log.len() + 1;
        self.log.push(QueryRecord {
            index,
            tolls: tolls.values().to_vec(),
            flow: flow.clone(),
            cost,
        });
        Ok(OracleResponse {
            aggregate_flow: flow,
            total_cost: cost,
            query_index: index,
        })
    }

    /// Clears the counter and the log.
    pub fn reset_counter(&mut self) {
        self.log.clear();
    }

    /// One JSON object per query:
    /// `{"index", "tolls": {edge: val}, "flow": {edge: val}, "cost": val | null}`.
    pub fn write_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in &self.log {
            let line = self.record_json(record);
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    fn record_json(&self, record: &QueryRecord) -> Value {
        json!({
            "index": record.index,
            "tolls": edge_map(self.network(), &record.tolls),
            "flow": edge_map(self.network(), &record.flow),
            "cost": record.cost.map(|c| Value::String(format_decimal(c))),
        })
    }

    /// The hidden game. Only for computing ground truth in tests.
    #[cfg(feature = "test-backdoor")]
    pub fn hidden_game(&self) -> &RoutingGame {
        &self.game
    }
}
