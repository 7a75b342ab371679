//! Finds tolls that make a chosen flow the equilibrium, using nothing but
//! equilibrium queries to a game whose latencies stay hidden.

use oracle_tolls::enforce::{enforce_flow, EnforcementConfig};
use oracle_tolls::experiments::full_knowledge_optimum;
use oracle_tolls::instances::{generate, InstanceSpec, Topology};
use oracle_tolls::oracle::{OracleMode, QueryOracle};

fn main() -> oracle_tolls::Result<()> {
    let game = generate(&InstanceSpec::new(Topology::Grid { width: 3, height: 3 }).with_seed(11))?;
    // The target is computed here with full knowledge; the search never sees it
    // except as the flow it must reproduce.
    let (target, cost) = full_knowledge_optimum(&game)?;
    let mut oracle = QueryOracle::new(game, OracleMode::FlowOnly, 1e-12);

    let cfg = EnforcementConfig::for_oracle(1e-4, &oracle);
    let result = enforce_flow(&mut oracle, &target, &cfg)?;
    println!("target (optimal, cost {cost:.6}): {:?}", target.aggregate());
    println!("status: {:?}", result.status);
    println!("tolls: {:?}", result.tolls.values());
    println!(
        "deviation {:.2e} (allowed {:.2e}) after {} queries",
        result.achieved_deviation,
        2.0 * cfg.delta,
        result.queries_used
    );
    Ok(())
}
