//! Instance generation and the JSON game format.

use oracle_tolls::game::io::{game_from_json, game_to_json};
use oracle_tolls::instances::{generate, InstanceSpec};

fn main() -> oracle_tolls::Result<()> {
    for topology in ["fig1_l2", "parallel:3", "grid:2x2", "random_dag:5:0.5"] {
        let spec = InstanceSpec::new(topology.parse()?).with_seed(7).with_degree(2);
        let game = generate(&spec)?;
        let c = game.constants();
        println!(
            "{}: {} edges, K = {:.3}, T_max = {:.3}",
            spec.id(),
            game.num_edges(),
            c.latency_bound,
            c.toll_cap
        );
        let text = game_to_json(&game);
        assert_eq!(game_from_json(&text)?, game);
    }
    let two = generate(&"grid:3x3".parse().map(InstanceSpec::new)?.with_commodities(2))?;
    println!("{}", game_to_json(&two));
    Ok(())
}
