//! How query counts grow with the number of parallel links.

use oracle_tolls::experiments::{run_bench, BenchConfig};

fn main() -> oracle_tolls::Result<()> {
    let cfg = BenchConfig {
        optimize_up_to: 4,
        ..BenchConfig::default()
    };
    let report = run_bench(&cfg)?;
    for row in report.results["rows"].as_array().unwrap() {
        println!(
            "m = {:>2}: enforce {:>5} queries, optimize {} queries",
            row["m"],
            row["enforce_queries"],
            row.get("optimize_queries").map_or("-".to_string(), |q| q.to_string())
        );
    }
    println!("enforcement log-log slope: {}", report.results["enforce_log_log_slope"]);
    println!("optimization log-log slope: {}", report.results["optimize_log_log_slope"]);
    Ok(())
}
