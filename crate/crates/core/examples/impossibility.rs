//! Two games that answer every toll query identically but have different
//! optimal flows, so no toll-querying algorithm can find optimal tolls
//! from flow responses alone.

use oracle_tolls::experiments::run_impossibility_demo;

fn main() -> oracle_tolls::Result<()> {
    let report = run_impossibility_demo(21)?;
    let r = &report.results;
    println!("toll grid points queried: {}", r["grid_points"]);
    println!("largest response discrepancy: {:e}", r["max_discrepancy"].as_f64().unwrap());
    for game in ["fig1_l1", "fig1_l2"] {
        println!(
            "{game}: optimal flow {}, optimal cost {}",
            r[game]["optimal_flow"], r[game]["optimal_cost"]
        );
    }
    println!("indistinguishable with different optima: {}", report.passed);
    Ok(())
}
