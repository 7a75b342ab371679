//! End to end: near-optimal tolls for hidden games from equilibrium flows
//! and their total latencies.

use oracle_tolls::experiments::full_knowledge_optimum;
use oracle_tolls::instances::{generate, InstanceSpec, Topology};
use oracle_tolls::oracle::{OracleMode, QueryOracle};
use oracle_tolls::zero_order::{compute_optimal_tolls, OptConfig};

fn main() -> oracle_tolls::Result<()> {
    let epsilon = 0.02;
    for topology in [Topology::Pigou, Topology::Braess, Topology::Parallel(4)] {
        let game = generate(&InstanceSpec::new(topology).with_seed(1))?;
        let (_, opt) = full_knowledge_optimum(&game)?;
        let cfg = OptConfig::new(epsilon, game.constants());
        let mut oracle = QueryOracle::new(game, OracleMode::FlowAndCost, 1e-12);
        let out = compute_optimal_tolls(&mut oracle, &cfg)?;
        println!("{topology}");
        println!("  tolls: {:?}", out.tolls.values());
        println!("  induced cost {:.6}, optimum {opt:.6}", out.induced_cost);
        println!(
            "  {} queries, {} cost samples, {:?}",
            out.report.total_oracle_queries, out.report.cost_samples, out.report.status
        );
    }
    Ok(())
}
