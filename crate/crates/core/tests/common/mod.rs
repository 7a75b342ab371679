#![allow(dead_code)]

use oracle_tolls::instances::{generate, InstanceSpec, Topology};
use oracle_tolls::{FlowVector, Network, RoutingGame, TollVector};
use rand::Rng;

pub fn fixed(topology: Topology) -> RoutingGame {
    generate(&InstanceSpec::new(topology)).unwrap()
}

pub fn pigou() -> RoutingGame {
    fixed(Topology::Pigou)
}

pub fn fig1_l1() -> RoutingGame {
    fixed(Topology::Fig1L1)
}

pub fn fig1_l2() -> RoutingGame {
    fixed(Topology::Fig1L2)
}

pub fn braess() -> RoutingGame {
    fixed(Topology::Braess)
}

pub fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Equilibrium of a parallel-link game with strictly increasing latencies:
/// every used link has tolled latency equal to a common level `L`, found by
/// bisection on total flow.
pub fn parallel_equilibrium(game: &RoutingGame, tolls: &[f64]) -> Vec<f64> {
    let d = game.network().commodities()[0].demand;
    let load_at = |level: f64| -> Vec<f64> {
        game.latencies()
            .iter()
            .zip(tolls)
            .map(|(l, t)| {
                if l.eval(0.0) + t >= level {
                    0.0
                } else {
                    bisect(0.0, d, |x| l.eval(x) + t - level)
                }
            })
            .collect()
    };
    let top = game
        .latencies()
        .iter()
        .zip(tolls)
        .map(|(l, t)| l.eval(d) + t)
        .fold(0.0, f64::max);
    let level = bisect(0.0, top + 1.0, |lv| load_at(lv).iter().sum::<f64>() - d);
    load_at(level)
}

/// All simple source-sink paths of commodity `i`, as edge lists.
pub fn all_paths(network: &Network, i: usize) -> Vec<Vec<usize>> {
    let c = &network.commodities()[i];
    let mut out = Vec::new();
    let mut stack = vec![(c.source, Vec::<usize>::new(), vec![c.source])];
    while let Some((v, path, seen)) = stack.pop() {
        if v == c.sink {
            out.push(path);
            continue;
        }
        for &e in network.out_edges(v) {
            let w = network.edge(e).head;
            if !seen.contains(&w) {
                let mut p = path.clone();
                p.push(e);
                let mut s = seen.clone();
                s.push(w);
                stack.push((w, p, s));
            }
        }
    }
    out.sort();
    out
}

pub fn path_flow(network: &Network, i: usize, paths: &[Vec<usize>], weights: &[f64]) -> Vec<f64> {
    let d = network.commodities()[i].demand;
    let total: f64 = weights.iter().sum();
    let mut x = vec![0.0; network.num_edges()];
    for (p, w) in paths.iter().zip(weights) {
        for &e in p {
            x[e] += d * w / total;
        }
    }
    x
}

/// Random acyclic feasible flow: each commodity spreads its demand over a
/// random nonempty subset of its simple paths with random weights.
pub fn random_flow<R: Rng>(network: &Network, rng: &mut R) -> FlowVector {
    let rows = (0..network.num_commodities())
        .map(|i| {
            let paths = all_paths(network, i);
            let mut weights: Vec<f64> = paths
                .iter()
                .map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.05..1.0) } else { 0.0 })
                .collect();
            if weights.iter().all(|&w| w == 0.0) {
                let j = rng.gen_range(0..weights.len());
                weights[j] = 1.0;
            }
            path_flow(network, i, &paths, &weights)
        })
        .collect();
    FlowVector::new(rows).unwrap()
}

/// Tolls under which a single-commodity acyclic flow `f` is an exact
/// equilibrium. With `π` the longest-path distance from the source over the
/// support under weights `l_e(f_e)`, support edges get `π_head − π_tail − l_e`
/// (so every support path costs `π_sink`) and the other edges get `T_max`.
pub fn potential_tolls(game: &RoutingGame, f: &FlowVector) -> TollVector {
    let network = game.network();
    assert_eq!(network.num_commodities(), 1);
    let x = f.aggregate();
    let cap = game.constants().toll_cap;
    let lat = game.edge_latencies(x);
    let support: Vec<bool> = x.iter().map(|&v| v > 1e-12).collect();
    let n = network.num_vertices();
    let mut pi = vec![f64::NEG_INFINITY; n];
    pi[network.commodities()[0].source] = 0.0;
    // Bellman-Ford style relaxation; the support is acyclic.
    for _ in 0..n {
        for (e, edge) in network.edges().iter().enumerate() {
            if support[e] && pi[edge.tail].is_finite() {
                pi[edge.head] = pi[edge.head].max(pi[edge.tail] + lat[e]);
            }
        }
    }
    let tolls = network
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            if support[e] {
                (pi[edge.head] - pi[edge.tail] - lat[e]).max(0.0)
            } else {
                cap
            }
        })
        .collect();
    TollVector::new(tolls).unwrap()
}

/// Minimum cost over a grid of path splits with step `1/steps` (up to three
/// paths).
pub fn brute_force_optimum(game: &RoutingGame, steps: usize) -> f64 {
    let network = game.network();
    let paths = all_paths(network, 0);
    assert!(paths.len() <= 3 && network.num_commodities() == 1);
    let mut best = f64::INFINITY;
    let s = steps as f64;
    for a in 0..=steps {
        for b in 0..=(steps - a) {
            let c = steps - a - b;
            let w = [a as f64 / s, b as f64 / s, c as f64 / s];
            if paths.len() < 3 && c > 0 || paths.len() < 2 && b > 0 {
                continue;
            }
            let x = path_flow(network, 0, &paths, &w[..paths.len()]);
            best = best.min(game.cost_of_aggregate(&x));
        }
    }
    best
}

/// Analytic gradient of the total latency: `l_e(x_e) + x_e l_e'(x_e)`.
pub fn marginal_costs(game: &RoutingGame, aggregate: &[f64]) -> Vec<f64> {
    game.latencies()
        .iter()
        .zip(aggregate)
        .map(|(l, &x)| l.eval(x) + x * l.derivative(x))
        .collect()
}
