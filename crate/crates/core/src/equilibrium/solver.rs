use serde::{Deserialize, Serialize};

use super::shortest_path::shortest_path;
use crate::error::{Error, Result};
use crate::game::{FlowVector, RoutingGame, TollVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqConfig {
    /// Target for both the Beckmann duality gap and the largest used-path
    /// cost excess.
    pub accuracy: f64,
    pub max_iterations: usize,
}

impl Default for EqConfig {
    fn default() -> Self {
        EqConfig {
            accuracy: 1e-10,
            max_iterations: 20_000,
        }
    }
}

impl EqConfig {
    pub fn with_accuracy(accuracy: f64) -> Self {
        EqConfig {
            accuracy,
            ..EqConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub flow: FlowVector,
    pub beckmann_gap: f64,
    pub wardrop_violation: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
struct Path {
    edges: Vec<usize>,
    flow: f64,
}

struct State<'a> {
    game: &'a RoutingGame,
    tolls: &'a [f64],
    load: Vec<f64>,
    cost: Vec<f64>,
}

impl State<'_> {
    fn refresh(&mut self, e: usize) {
        self.cost[e] = self.game.latency(e).eval(self.load[e]) + self.tolls[e];
    }

    fn path_cost(&self, edges: &[usize]) -> f64 {
        edges.iter().map(|&e| self.cost[e]).sum()
    }

    /// Moves up to `available` units from the edges in `away` onto the
    /// edges in `toward` (the symmetric difference of two paths), stopping
    /// where the potential along the move is minimal. Returns the amount.
    fn pairwise_step(&mut self, toward: &[usize], away: &[usize], available: f64) -> f64 {
        let slope = |s: &State, alpha: f64| -> (f64, f64) {
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            for &e in toward {
                let l = s.game.latency(e);
                let x = s.load[e] + alpha;
                d1 += l.eval(x) + s.tolls[e];
                d2 += l.derivative(x);
            }
            for &e in away {
                let l = s.game.latency(e);
                let x = (s.load[e] - alpha).max(0.0);
                d1 -= l.eval(x) + s.tolls[e];
                d2 += l.derivative(x);
            }
            (d1, d2)
        };
        let (d0, _) = slope(self, 0.0);
        if d0 >= 0.0 {
            return 0.0;
        }
        let (d_end, _) = slope(self, available);
        let alpha = if d_end <= 0.0 {
            available
        } else {
            let (mut lo, mut hi) = (0.0, available);
            let mut alpha = 0.5 * available;
            for _ in 0..200 {
                let (d1, d2) = slope(self, alpha);
                if d1 == 0.0 {
                    break;
                }
                if d1 < 0.0 {
                    lo = alpha;
                } else {
                    hi = alpha;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
                let newton = alpha - d1 / d2;
                alpha = if d2 > 0.0 && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
            }
            alpha
        };
        for &e in toward {
            self.load[e] += alpha;
            self.refresh(e);
        }
        for &e in away {
            self.load[e] = (self.load[e] - alpha).max(0.0);
            self.refresh(e);
        }
        alpha
    }
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let only_a = a.iter().copied().filter(|e| !b.contains(e)).collect();
    let only_b = b.iter().copied().filter(|e| !a.contains(e)).collect();
    (only_a, only_b)
}

/// Equilibrium flow under `tolls`, to within `cfg.accuracy` in Beckmann gap
/// and in used-path cost excess.
///
/// The result depends only on `(game, tolls, cfg)`: paths are generated by
/// the tie-broken shortest-path oracle and visited in insertion order.
pub fn solve_equilibrium(game: &RoutingGame, tolls: &TollVector, cfg: &EqConfig) -> Result<EquilibriumResult> {
    let network = game.network();
    let m = network.num_edges();
    if tolls.len() != m {
        return Err(Error::Dimension(format!("{} tolls for {m} edges", tolls.len())));
    }
    let mut state = State {
        game,
        tolls: tolls.values(),
        load: vec![0.0; m],
        cost: vec![0.0; m],
    };
    for e in 0..m {
        state.refresh(e);
    }

    let mut paths: Vec<Vec<Path>> = Vec::with_capacity(network.num_commodities());
    for c in network.commodities() {
        let sp = shortest_path(network, &state.cost, c.source, c.sink)?;
        for &e in &sp.edges {
            state.load[e] += c.demand;
            state.refresh(e);
        }
        paths.push(vec![Path {
            edges: sp.edges,
            flow: c.demand,
        }]);
    }

    let mut iterations = 0;
    loop {
        // Convergence measures, path based so they stay accurate near zero.
        let mut gap = 0.0;
        let mut excess: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for (c, set) in network.commodities().iter().zip(&paths) {
            let best = shortest_path(network, &state.cost, c.source, c.sink)?.distance;
            for p in set.iter().filter(|p| p.flow > 0.0) {
                let cost = state.path_cost(&p.edges);
                scale = scale.max(cost);
                gap += p.flow * (cost - best).max(0.0);
                excess = excess.max(cost - best);
            }
        }
        let floor = 64.0 * f64::EPSILON * scale;
        let target = cfg.accuracy.max(floor);
        if gap <= target && excess <= target {
            return Ok(finish(network.num_commodities(), m, paths, gap, excess, iterations));
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::NoConvergence { iterations, gap });
        }
        iterations += 1;

        for (i, c) in network.commodities().iter().enumerate() {
            let sp = shortest_path(network, &state.cost, c.source, c.sink)?;
            let target_idx = match paths[i].iter().position(|p| p.edges == sp.edges) {
                Some(idx) => idx,
                None => {
                    paths[i].push(Path {
                        edges: sp.edges.clone(),
                        flow: 0.0,
                    });
                    paths[i].len() - 1
                }
            };
            for idx in 0..paths[i].len() {
                if idx == target_idx || paths[i][idx].flow <= 0.0 {
                    continue;
                }
                let (toward, away) = symmetric_difference(&paths[i][target_idx].edges, &paths[i][idx].edges);
                let available = paths[i][idx].flow;
                let moved = state.pairwise_step(&toward, &away, available);
                if moved > 0.0 {
                    paths[i][idx].flow = if moved >= available { 0.0 } else { available - moved };
                    paths[i][target_idx].flow += moved;
                }
            }
            let target_edges = paths[i][target_idx].edges.clone();
            paths[i].retain(|p| p.flow > 0.0 || p.edges == target_edges);
        }
        // Rebuild loads from path flows so rounding does not accumulate.
        state.load.iter_mut().for_each(|x| *x = 0.0);
        for set in &paths {
            for p in set {
                for &e in &p.edges {
                    state.load[e] += p.flow;
                }
            }
        }
        for e in 0..m {
            state.refresh(e);
        }
    }
}

fn finish(k: usize, m: usize, paths: Vec<Vec<Path>>, gap: f64, excess: f64, iterations: usize) -> EquilibriumResult {
    let mut per_commodity = vec![vec![0.0; m]; k];
    for (row, set) in per_commodity.iter_mut().zip(&paths) {
        for p in set {
            for &e in &p.edges {
                row[e] += p.flow;
            }
        }
    }
    EquilibriumResult {
        flow: FlowVector::new(per_commodity).expect("path flows are nonnegative"),
        beckmann_gap: gap,
        wardrop_violation: excess.max(0.0),
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Commodity, Edge, Network, PolyLatency};

    fn two_links(a: PolyLatency, b: PolyLatency) -> RoutingGame {
        let network = Network::new(
            vec!["s".into(), "t".into()],
            vec![
                Edge { id: "a".into(), tail: 0, head: 1 },
                Edge { id: "b".into(), tail: 0, head: 1 },
            ],
            vec![Commodity { source: 0, sink: 1, demand: 1.0 }],
        )
        .unwrap();
        RoutingGame::new(network, vec![a, b]).unwrap()
    }

    #[test]
    fn pigou_all_on_variable_link() {
        let g = two_links(PolyLatency::identity(), PolyLatency::constant(1.0));
        let r = solve_equilibrium(&g, &TollVector::zeros(2), &EqConfig::default()).unwrap();
        assert!((r.flow.aggregate()[0] - 1.0).abs() < 1e-12);
        assert!(r.wardrop_violation < 1e-10);
    }

    #[test]
    fn fig1_l1_with_and_without_tolls() {
        let g = two_links(PolyLatency::identity(), PolyLatency::constant(0.0));
        let r = solve_equilibrium(&g, &TollVector::zeros(2), &EqConfig::default()).unwrap();
        assert_eq!(r.flow.aggregate(), &[0.0, 1.0]);
        let tolls = TollVector::new(vec![0.0, 0.4]).unwrap();
        let r = solve_equilibrium(&g, &tolls, &EqConfig::default()).unwrap();
        assert!((r.flow.aggregate()[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let g = two_links(PolyLatency::identity(), PolyLatency::new(vec![0.0, 2.0]));
        let cfg = EqConfig {
            accuracy: 1e-12,
            max_iterations: 0,
        };
        assert!(matches!(
            solve_equilibrium(&g, &TollVector::zeros(2), &cfg),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn wrong_toll_length() {
        let g = two_links(PolyLatency::identity(), PolyLatency::identity());
        assert!(matches!(
            solve_equilibrium(&g, &TollVector::zeros(3), &EqConfig::default()),
            Err(Error::Dimension(_))
        ));
    }
}
