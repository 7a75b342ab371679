//! Equilibria, the system optimum and marginal-cost tolls on the Braess
//! network, computed with full knowledge of the latencies.

use oracle_tolls::equilibrium::{marginal_cost_tolls, solve_equilibrium, system_optimum, wardrop_violation, EqConfig};
use oracle_tolls::instances::{generate, InstanceSpec, Topology};
use oracle_tolls::TollVector;

fn main() -> oracle_tolls::Result<()> {
    let game = generate(&InstanceSpec::new(Topology::Braess))?;
    let ids: Vec<&str> = game.network().edges().iter().map(|e| e.id.as_str()).collect();
    let cfg = EqConfig::default();

    let untolled = solve_equilibrium(&game, &TollVector::zeros(game.num_edges()), &cfg)?;
    println!("edges: {ids:?}");
    println!("equilibrium flow: {:?}", untolled.flow.aggregate());
    println!("equilibrium cost: {:.6}", game.total_latency(&untolled.flow)?);

    let opt = system_optimum(&game, &cfg)?;
    println!("optimal flow: {:?}", opt.flow.aggregate());
    println!("optimal cost: {:.6}", game.total_latency(&opt.flow)?);

    let tolls = marginal_cost_tolls(&game, &opt.flow);
    let tolled = solve_equilibrium(&game, &tolls, &cfg)?;
    println!("marginal-cost tolls: {:?}", tolls.values());
    println!(
        "tolled equilibrium cost: {:.6} (Wardrop violation {:.1e})",
        game.total_latency(&tolled.flow)?,
        wardrop_violation(&game, &tolls, &tolled.flow)?
    );
    Ok(())
}
