//! Routing games: networks, latencies, flows, tolls and the constants
//! derived from them.

pub(crate) mod flow;
pub mod io;
mod latency;

pub use flow::{acyclic_reduce, is_feasible, path_decomposition, FlowVector, PathFlow, TollVector};
pub use latency::PolyLatency;

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Default absolute tolerance for flow conservation checks.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Commodity {
    pub source: usize,
    pub sink: usize,
    pub demand: f64,
}

/// Directed multigraph plus commodities: everything about a routing game
/// except its latency functions. This is what an oracle user gets to see.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    commodities: Vec<Commodity>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>, commodities: Vec<Commodity>) -> Result<Self> {
        let n = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if vertices[..i].contains(v) {
                return Err(Error::InvalidGame(format!("duplicate vertex id {v}")));
            }
        }
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (e, edge) in edges.iter().enumerate() {
            if edge.tail >= n || edge.head >= n {
                return Err(Error::InvalidGame(format!("edge {} has an unknown endpoint", edge.id)));
            }
            if edge.tail == edge.head {
                return Err(Error::InvalidGame(format!("edge {} is a self-loop", edge.id)));
            }
            if edges[..e].iter().any(|other| other.id == edge.id) {
                return Err(Error::InvalidGame(format!("duplicate edge id {}", edge.id)));
            }
            out_edges[edge.tail].push(e);
            in_edges[edge.head].push(e);
        }
        let network = Network {
            vertices,
            edges,
            commodities,
            out_edges,
            in_edges,
        };
        for (i, c) in network.commodities.iter().enumerate() {
            if c.source >= n || c.sink >= n {
                return Err(Error::InvalidGame(format!("commodity {i} has an unknown terminal")));
            }
            if c.source == c.sink {
                return Err(Error::InvalidGame(format!("commodity {i} has source = sink")));
            }
            if !(c.demand.is_finite() && c.demand > 0.0) {
                return Err(Error::InvalidGame(format!(
                    "commodity {i} has non-positive demand {}",
                    c.demand
                )));
            }
            if !network.reachable_from(c.source)[c.sink] {
                return Err(Error::InvalidGame(format!(
                    "sink {} unreachable from source {} (commodity {i})",
                    network.vertices[c.sink], network.vertices[c.source]
                )));
            }
        }
        Ok(network)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_commodities(&self) -> usize {
        self.commodities.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn total_demand(&self) -> f64 {
        self.commodities.iter().map(|c| c.demand).sum()
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Vertices reachable from `v` along directed edges.
    pub fn reachable_from(&self, v: usize) -> Vec<bool> {
        self.search(v, |e| self.edges[e].head, &self.out_edges)
    }

    /// Vertices from which `v` is reachable.
    pub fn reaching(&self, v: usize) -> Vec<bool> {
        self.search(v, |e| self.edges[e].tail, &self.in_edges)
    }

    fn search(&self, start: usize, next: impl Fn(usize) -> usize, adj: &[Vec<usize>]) -> Vec<bool> {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &e in &adj[u] {
                let w = next(e);
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Edges lying on at least one source-sink path of commodity `i`.
    pub fn usable_edges(&self, i: usize) -> Vec<bool> {
        let c = self.commodities[i];
        let from_source = self.reachable_from(c.source);
        let to_sink = self.reaching(c.sink);
        self.edges
            .iter()
            .map(|e| from_source[e.tail] && to_sink[e.head])
            .collect()
    }
}

/// Bounds that every algorithm in the crate sizes its tolerances with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConstants {
    /// Upper bound on `l_e(x)` and `x l_e'(x)` over feasible loads.
    pub latency_bound: f64,
    /// Toll cap `2 m K`.
    pub toll_cap: f64,
    pub total_demand: f64,
    /// Search dimension `m k`.
    pub dimension: usize,
    /// Upper bound on `(x l_e(x))''` over feasible loads.
    pub curvature: f64,
    pub coefficient_bound: f64,
    pub max_degree: usize,
}

impl GameConstants {
    /// `K = max(1, max(r + 1, r (r + 1) / 2) · U · D^r)` with
    /// `D = max(1, Σ d_i)`; `T_max = 2 m K`; `N = m k`.
    pub fn derive(coefficient_bound: f64, max_degree: usize, total_demand: f64, m: usize, k: usize) -> Self {
        let r = max_degree;
        let load = total_demand.max(1.0);
        let spread = ((r + 1).max(r * (r + 1) / 2)) as f64;
        let latency_bound = (spread * coefficient_bound * load.powi(r as i32)).max(1.0);
        let curvature = coefficient_bound
            * (1..=r)
                .map(|j| (j * (j + 1)) as f64 * load.powi(j as i32 - 1))
                .sum::<f64>();
        GameConstants {
            latency_bound,
            toll_cap: 2.0 * m as f64 * latency_bound,
            total_demand,
            dimension: m * k,
            curvature,
            coefficient_bound,
            max_degree,
        }
    }
}

/// A validated nonatomic routing game: network, latencies and constants.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingGame {
    network: Network,
    latencies: Vec<PolyLatency>,
    constants: GameConstants,
}

impl RoutingGame {
    /// Validates latencies against the network and derives the constants.
    pub fn new(network: Network, latencies: Vec<PolyLatency>) -> Result<Self> {
        if latencies.len() != network.num_edges() {
            return Err(Error::InvalidGame(format!(
                "{} latencies for {} edges",
                latencies.len(),
                network.num_edges()
            )));
        }
        for (e, lat) in latencies.iter().enumerate() {
            lat.check()
                .map_err(|msg| Error::InvalidGame(format!("edge {}: {msg}", network.edge(e).id)))?;
        }
        let coefficient_bound = latencies
            .iter()
            .flat_map(|l| l.coeffs().iter().copied())
            .fold(0.0, f64::max);
        let max_degree = latencies.iter().map(PolyLatency::degree).max().unwrap_or(0);
        let constants = GameConstants::derive(
            coefficient_bound,
            max_degree,
            network.total_demand(),
            network.num_edges(),
            network.num_commodities(),
        );
        Ok(RoutingGame {
            network,
            latencies,
            constants,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn latencies(&self) -> &[PolyLatency] {
        &self.latencies
    }

    pub fn latency(&self, e: usize) -> &PolyLatency {
        &self.latencies[e]
    }

    pub fn constants(&self) -> &GameConstants {
        &self.constants
    }

    pub fn num_edges(&self) -> usize {
        self.network.num_edges()
    }

    pub fn num_commodities(&self) -> usize {
        self.network.num_commodities()
    }

    /// Crude input size: vertices, edges, commodities and coefficients.
    pub fn input_size(&self) -> usize {
        self.network.num_vertices()
            + self.network.num_edges()
            + self.network.num_commodities()
            + self.latencies.iter().map(|l| l.coeffs().len()).sum::<usize>()
    }

    /// Per-edge latency at the given aggregate loads.
    pub fn edge_latencies(&self, aggregate: &[f64]) -> Vec<f64> {
        self.latencies
            .iter()
            .zip(aggregate)
            .map(|(l, &x)| l.eval(x))
            .collect()
    }

    /// `Σ_e x_e l_e(x_e)` without a feasibility check.
    pub fn cost_of_aggregate(&self, aggregate: &[f64]) -> f64 {
        self.latencies
            .iter()
            .zip(aggregate)
            .map(|(l, &x)| x * l.eval(x))
            .sum()
    }

    /// Total latency `cost(f, l) = Σ_e f_e l_e(f_e)` of a feasible flow.
    pub fn total_latency(&self, flow: &FlowVector) -> Result<f64> {
        if !is_feasible(&self.network, flow, FEASIBILITY_TOL) {
            return Err(Error::Infeasible("total latency of an infeasible flow".into()));
        }
        Ok(self.cost_of_aggregate(flow.aggregate()))
    }

    /// Same network with every latency replaced by its marginal latency.
    /// Equilibria of that game are the minimum-latency flows of this one.
    pub fn marginal_cost_game(&self) -> RoutingGame {
        let latencies: Vec<PolyLatency> = self.latencies.iter().map(PolyLatency::marginal).collect();
        RoutingGame::new(self.network.clone(), latencies).expect("marginal latencies stay valid")
    }
}
