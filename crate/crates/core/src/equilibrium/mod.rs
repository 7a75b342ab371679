//! Wardrop equilibria with tolls.
//!
//! Equilibria are the minimizers of the Beckmann potential
//! `Σ_e ∫_0^{x_e} (l_e(t) + τ_e) dt` over feasible flows. The solver is a
//! pairwise conditional-gradient method over path flows: every sweep asks the
//! shortest-path oracle for the cheapest path of each commodity and moves
//! flow onto it from each costlier path with an exact line search.

mod shortest_path;
mod solver;

pub use shortest_path::{dag_shortest_path, shortest_path, topological_order, ShortestPath};
pub use solver::{solve_equilibrium, EqConfig, EquilibriumResult};

use crate::error::{Error, Result};
use crate::game::{is_feasible, path_decomposition, FlowVector, RoutingGame, TollVector, FEASIBILITY_TOL};

/// Beckmann potential of a feasible flow under tolls.
pub fn beckmann_potential(game: &RoutingGame, tolls: &TollVector, flow: &FlowVector) -> Result<f64> {
    if !is_feasible(game.network(), flow, FEASIBILITY_TOL) {
        return Err(Error::Infeasible("beckmann potential of an infeasible flow".into()));
    }
    Ok(game
        .latencies()
        .iter()
        .zip(flow.aggregate())
        .zip(tolls.values())
        .map(|((l, &x), &t)| l.integral(x) + t * x)
        .sum())
}

/// Tolled edge costs `l_e(x_e) + τ_e`.
pub fn tolled_costs(game: &RoutingGame, tolls: &TollVector, aggregate: &[f64]) -> Vec<f64> {
    game.latencies()
        .iter()
        .zip(aggregate)
        .zip(tolls.values())
        .map(|((l, &x), &t)| l.eval(x) + t)
        .collect()
}

/// Largest gap between a flow-carrying path and the cheapest path of the
/// same commodity, both priced at the loads of `flow`. Paths come from a
/// decomposition of each commodity; those carrying under `1e-12 · d_i` are
/// ignored.
pub fn wardrop_violation(game: &RoutingGame, tolls: &TollVector, flow: &FlowVector) -> Result<f64> {
    let network = game.network();
    if !is_feasible(network, flow, FEASIBILITY_TOL) {
        return Err(Error::Infeasible("wardrop violation of an infeasible flow".into()));
    }
    let costs = tolled_costs(game, tolls, flow.aggregate());
    let mut worst: f64 = 0.0;
    for (i, c) in network.commodities().iter().enumerate() {
        let best = shortest_path(network, &costs, c.source, c.sink)?.distance;
        for path in path_decomposition(network, flow, i, 1e-12 * c.demand)? {
            let length: f64 = path.edges.iter().map(|&e| costs[e]).sum();
            worst = worst.max(length - best);
        }
    }
    Ok(worst)
}

/// Minimum-latency flow, found as the equilibrium of the marginal-cost game.
pub fn system_optimum(game: &RoutingGame, cfg: &EqConfig) -> Result<EquilibriumResult> {
    solve_equilibrium(&game.marginal_cost_game(), &TollVector::zeros(game.num_edges()), cfg)
}

/// Marginal-cost tolls `τ_e = x_e l_e'(x_e)`. At the minimum-latency flow
/// they induce that flow as an equilibrium.
pub fn marginal_cost_tolls(game: &RoutingGame, flow: &FlowVector) -> TollVector {
    let tolls = game
        .latencies()
        .iter()
        .zip(flow.aggregate())
        .map(|(l, &x)| x * l.derivative(x))
        .collect();
    TollVector::new(tolls).expect("marginal-cost tolls are nonnegative")
}
