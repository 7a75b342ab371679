//! One test per acceptance criterion, with the tolerances pinned.

mod common;

use std::time::{Duration, Instant};

use common::*;
use oracle_tolls::ellipsoid::Ellipsoid;
use oracle_tolls::enforce::{enforce_flow_observed, CutKind, EnforcementConfig, EnforcementStatus};
use oracle_tolls::equilibrium::{marginal_cost_tolls, solve_equilibrium, system_optimum, EqConfig};
use oracle_tolls::experiments::{run_bench, run_impossibility_demo, BenchConfig};
use oracle_tolls::instances::{generate, InstanceSpec};
use oracle_tolls::oracle::{OracleMode, QueryOracle};
use oracle_tolls::zero_order::{compute_optimal_tolls, estimate_gradient, zero_order_cost_oracle, ExactCostOracle, FlowSpace, OptConfig};
use oracle_tolls::{FlowVector, RoutingGame, TollVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn game(t: &str, degree: usize, commodities: usize, seed: u64) -> RoutingGame {
    generate(&InstanceSpec::new(t.parse().unwrap()).with_degree(degree).with_commodities(commodities).with_seed(seed)).unwrap()
}

#[test]
fn ac1_impossibility_demo() {
    let start = Instant::now();
    let r = run_impossibility_demo(21).unwrap();
    assert!(start.elapsed() < Duration::from_secs(10));
    assert!(r.passed);
    assert_eq!(r.results["grid_points"], 441);
    assert!(r.results["max_discrepancy"].as_f64().unwrap() <= 1e-6);

    let flow = |k: &str| -> Vec<f64> {
        r.results[k]["optimal_flow"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect()
    };
    let cost = |k: &str| r.results[k]["optimal_cost"].as_f64().unwrap();
    assert!(sup(&flow("fig1_l1"), &[0.0, 1.0]) <= 1e-6);
    assert!(sup(&flow("fig1_l2"), &[0.5, 0.5]) <= 1e-6);
    assert!(cost("fig1_l1").abs() <= 1e-9);
    assert!((cost("fig1_l2") - 0.75).abs() <= 1e-9);
    // Independent check of the two optima on a fine split grid.
    assert!(brute_force_optimum(&fig1_l1(), 1000).abs() <= 1e-9);
    assert!((brute_force_optimum(&fig1_l2(), 1000) - 0.75).abs() <= 1e-9);
}

#[test]
fn ac2_equilibrium_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..100 {
        let m = 2 + case % 3;
        let g = game(&format!("parallel:{m}"), 1 + (case / 3) % 3, 1, 1000 + case as u64);
        let t: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let eq = solve_equilibrium(&g, &TollVector::new(t.clone()).unwrap(), &EqConfig::default()).unwrap();
        let expected = parallel_equilibrium(&g, &t);
        assert!(sup(eq.flow.aggregate(), &expected) <= 1e-6, "case {case}");
    }
    let g = braess();
    let eq = solve_equilibrium(&g, &TollVector::zeros(g.num_edges()), &EqConfig::default()).unwrap();
    assert!((g.total_latency(&eq.flow).unwrap() - 2.0).abs() <= 1e-6);
}

/// Enforcement counting cuts that exclude the certificate.
fn enforce_with_certificate(g: RoutingGame, target: &FlowVector, certificate: &TollVector, delta: f64) -> usize {
    let mut o = QueryOracle::new(g, OracleMode::FlowOnly, 1e-12);
    let cfg = EnforcementConfig::for_oracle(delta, &o);
    let mut violations = 0;
    let r = enforce_flow_observed(&mut o, target, &cfg, |step, e| {
        if step.cut != CutKind::Accepted && e.normalized_radius(certificate.values()) > 1.0 + 1e-6 {
            violations += 1;
        }
    })
    .unwrap();
    assert_eq!(r.status, EnforcementStatus::Success);
    assert!(r.achieved_deviation <= 2.0 * delta);
    let again = o.query(&r.tolls).unwrap();
    assert!(sup(&again.aggregate_flow, target.aggregate()) <= 2.0 * delta);
    violations
}

#[test]
fn ac3_enforcement() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let single = ["parallel:3", "parallel:8", "parallel:16", "braess", "grid:3x3", "grid:2x4", "random_dag:6:0.5"];
    let multi = ["grid:3x3", "grid:2x3", "random_dag:6:0.6", "random_dag:5:0.7"];
    let delta = 1e-3;
    for case in 0..50u64 {
        let (g, target, certificate) = if case % 2 == 0 {
            let t = single[(case as usize / 2) % single.len()];
            let g = game(t, 1 + case as usize % 3, 1, case);
            let target = random_flow(g.network(), &mut rng);
            let cert = potential_tolls(&g, &target);
            (g, target, cert)
        } else if case % 5 == 1 {
            // The optimum, certified by its marginal-cost tolls.
            let t = single[(case as usize) % single.len()];
            let g = game(t, 2, 1, case);
            let opt = system_optimum(&g, &EqConfig::with_accuracy(1e-12)).unwrap().flow;
            let cert = marginal_cost_tolls(&g, &opt);
            (g, opt, cert)
        } else {
            // Two commodities: the equilibrium at random tolls in [0, mK].
            let t = multi[(case as usize) % multi.len()];
            let g = game(t, 1 + case as usize % 2, 2, case);
            let top = g.num_edges() as f64 * g.constants().latency_bound;
            let tolls = TollVector::new((0..g.num_edges()).map(|_| rng.gen_range(0.0..top)).collect()).unwrap();
            let eq = solve_equilibrium(&g, &tolls, &EqConfig::with_accuracy(1e-12)).unwrap();
            (g, eq.flow, tolls)
        };
        assert!(g.num_edges() <= 16 && g.num_commodities() <= 2);
        assert_eq!(enforce_with_certificate(g, &target, &certificate, delta), 0, "case {case}");
    }
    assert!(start.elapsed() < Duration::from_secs(60));
}

#[test]
fn ac4_cost_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let topologies = ["pigou", "braess", "parallel:4", "grid:2x3", "grid:3x3", "random_dag:6:0.5"];
    for trial in 0..100 {
        let t = topologies[trial % topologies.len()];
        let g = game(t, 1 + trial % 3, 1, trial as u64);
        let flow = random_flow(g.network(), &mut rng);
        let mut o = QueryOracle::new(g, OracleMode::FlowAndCost, 1e-12);
        let s = zero_order_cost_oracle(&mut o, &flow, 0.01).unwrap();
        let exact = o.hidden_game().total_latency(&flow).unwrap();
        assert!((s.observed_cost - exact).abs() <= 0.01, "{t}: {} vs {exact}", s.observed_cost);
    }
}

#[test]
fn ac5_optimal_tolls() {
    let start = Instant::now();
    let eps = 0.02;
    let mut games = vec![pigou(), fig1_l2(), braess()];
    for i in 0..10u64 {
        let t = ["parallel:3", "parallel:5", "grid:2x2", "grid:2x3", "grid:3x2"][i as usize % 5];
        games.push(game(t, 1 + i as usize % 3, 1, 100 + i));
    }
    for g in games {
        let opt = system_optimum(&g, &EqConfig::with_accuracy(1e-12)).unwrap();
        let opt_cost = g.total_latency(&opt.flow).unwrap();
        if all_paths(g.network(), 0).len() <= 3 {
            assert!((brute_force_optimum(&g, 400) - opt_cost).abs() <= 1e-3);
        }
        let mut o = QueryOracle::new(g.clone(), OracleMode::FlowAndCost, 1e-12);
        let cfg = OptConfig::new(eps, o.constants());
        let out = compute_optimal_tolls(&mut o, &cfg).unwrap();
        // The cost of the equilibrium those tolls actually induce.
        let induced = solve_equilibrium(&g, &out.tolls, &EqConfig::with_accuracy(1e-12)).unwrap();
        let cost = g.total_latency(&induced.flow).unwrap();
        assert!(cost <= opt_cost + 2.0 * eps, "{cost} vs {opt_cost}");
        assert!((cost - out.induced_cost).abs() <= 1e-6);
    }
    assert!(start.elapsed() < Duration::from_secs(300));
}

fn volume_ratio(d: usize) -> f64 {
    let d = d as f64;
    d / (d + 1.0) * (d * d / (d * d - 1.0)).powf((d - 1.0) / 2.0)
}

#[test]
fn ac6_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    // Convexity of total latency.
    let pool: Vec<RoutingGame> = (0..20)
        .map(|i| {
            let t = ["parallel:4", "braess", "grid:2x3", "random_dag:5:0.6"][i % 4];
            let k = if t == "braess" || t.starts_with("parallel") { 1 } else { 1 + i % 2 };
            game(t, 1 + i % 3, k, i as u64)
        })
        .collect();
    for trial in 0..10_000 {
        let g = &pool[trial % pool.len()];
        let f = random_flow(g.network(), &mut rng);
        let h = random_flow(g.network(), &mut rng);
        let lambda = rng.gen_range(0.0..=1.0);
        let lhs = g.total_latency(&f.mix(&h, lambda)).unwrap();
        let rhs = lambda * g.total_latency(&f).unwrap() + (1.0 - lambda) * g.total_latency(&h).unwrap();
        assert!(lhs <= rhs + 1e-9);
    }

    // Central-cut volume ratio.
    for d in 2..=12 {
        for _ in 0..10 {
            let a: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut shape = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    shape[i * d + j] = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum::<f64>() + if i == j { 0.25 } else { 0.0 };
                }
            }
            let e = Ellipsoid::from_shape(vec![0.0; d], &shape).unwrap();
            let g: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ratio = (e.update(&g).unwrap().log_volume() - e.log_volume()).exp();
            assert!((ratio - volume_ratio(d)).abs() <= 1e-9, "d = {d}");
        }
    }

    // Finite-difference gradient against the analytic one.
    for (i, t) in ["pigou", "braess", "parallel:5", "grid:3x2"].iter().enumerate() {
        let g = game(t, 1 + i % 3, 1, 40 + i as u64);
        let space = FlowSpace::new(g.network()).unwrap();
        let h = 1e-3;
        let tol = (1e-4f64).max(g.constants().curvature * h);
        let mut o = ExactCostOracle::new(g.clone());
        for _ in 0..10 {
            let f = random_flow(g.network(), &mut rng).mix(space.reference_flow(), 0.5);
            let est = estimate_gradient(&mut o, &space, &f, h).unwrap();
            let exact = space.restrict(&[marginal_costs(&g, f.aggregate())]);
            for (a, b) in est.reduced.iter().zip(&exact) {
                assert!((a - b).abs() <= tol, "{t}: {a} vs {b}");
            }
        }
    }

    // Query growth, recorded only.
    let bench = run_bench(&BenchConfig {
        sizes: vec![2, 4, 8],
        optimize_up_to: 4,
        ..BenchConfig::default()
    })
    .unwrap();
    eprintln!(
        "enforce slope {}, optimize slope {}",
        bench.results["enforce_log_log_slope"], bench.results["optimize_log_log_slope"]
    );
}
