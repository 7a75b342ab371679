use serde::{Deserialize, Serialize};

use super::Network;
use crate::error::{Error, Result};

/// Per-commodity edge flows (`k × m`) and their column sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowVector {
    per_commodity: Vec<Vec<f64>>,
    aggregate: Vec<f64>,
}

impl FlowVector {
    /// Entries in `[-1e-12, 0)` are rounding noise and are set to zero;
    /// anything more negative is rejected.
    pub fn new(mut per_commodity: Vec<Vec<f64>>) -> Result<Self> {
        let m = per_commodity.first().map_or(0, Vec::len);
        for (i, row) in per_commodity.iter_mut().enumerate() {
            if row.len() != m {
                return Err(Error::Dimension(format!("commodity {i} has {} edges, expected {m}", row.len())));
            }
            for (e, x) in row.iter_mut().enumerate() {
                if !x.is_finite() || *x < -1e-12 {
                    return Err(Error::Infeasible(format!("flow {x} on edge {e} of commodity {i}")));
                }
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
        let aggregate = (0..m).map(|e| per_commodity.iter().map(|row| row[e]).sum()).collect();
        Ok(FlowVector {
            per_commodity,
            aggregate,
        })
    }

    /// Single-commodity flow.
    pub fn single(edge_flows: Vec<f64>) -> Result<Self> {
        FlowVector::new(vec![edge_flows])
    }

    pub fn zeros(k: usize, m: usize) -> Self {
        FlowVector {
            per_commodity: vec![vec![0.0; m]; k],
            aggregate: vec![0.0; m],
        }
    }

    pub fn per_commodity(&self) -> &[Vec<f64>] {
        &self.per_commodity
    }

    pub fn commodity(&self, i: usize) -> &[f64] {
        &self.per_commodity[i]
    }

    pub fn aggregate(&self) -> &[f64] {
        &self.aggregate
    }

    pub fn num_commodities(&self) -> usize {
        self.per_commodity.len()
    }

    pub fn num_edges(&self) -> usize {
        self.aggregate.len()
    }

    /// `λ self + (1 − λ) other`.
    pub fn mix(&self, other: &FlowVector, lambda: f64) -> FlowVector {
        let per_commodity = self
            .per_commodity
            .iter()
            .zip(&other.per_commodity)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect())
            .collect();
        FlowVector::new(per_commodity).expect("convex combination of flows")
    }

    /// `‖aggregate(self) − aggregate(other)‖_∞`.
    pub fn aggregate_distance(&self, other: &FlowVector) -> f64 {
        sup_distance(&self.aggregate, &other.aggregate)
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Nonnegative per-edge tolls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TollVector(Vec<f64>);

impl TollVector {
    pub fn new(tolls: Vec<f64>) -> Result<Self> {
        if let Some((edge, &value)) = tolls.iter().enumerate().find(|(_, t)| !t.is_finite() || **t < 0.0) {
            return Err(Error::TollOutOfRange {
                edge,
                value,
                cap: f64::INFINITY,
            });
        }
        Ok(TollVector(tolls))
    }

    pub fn zeros(m: usize) -> Self {
        TollVector(vec![0.0; m])
    }

    /// Projects each entry onto `[0, cap]`.
    pub fn clamped(tolls: &[f64], cap: f64) -> Self {
        TollVector(tolls.iter().map(|t| t.clamp(0.0, cap)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Conservation check for every commodity: net outflow `d_i` at the source,
/// `−d_i` at the sink, zero elsewhere, nonnegative entries, all within `tol`.
pub fn is_feasible(network: &Network, flow: &FlowVector, tol: f64) -> bool {
    if flow.num_commodities() != network.num_commodities()
        || (flow.num_commodities() > 0 && flow.num_edges() != network.num_edges())
    {
        return false;
    }
    network.commodities().iter().enumerate().all(|(i, c)| {
        let x = flow.commodity(i);
        if x.iter().any(|&v| v < -tol) {
            return false;
        }
        (0..network.num_vertices()).all(|v| {
            let out: f64 = network.out_edges(v).iter().map(|&e| x[e]).sum();
            let inn: f64 = network.in_edges(v).iter().map(|&e| x[e]).sum();
            let want = if v == c.source {
                c.demand
            } else if v == c.sink {
                -c.demand
            } else {
                0.0
            };
            (out - inn - want).abs() <= tol
        })
    })
}

/// Finds a directed cycle among edges with positive flow, as a list of edges.
fn find_cycle(network: &Network, x: &[f64]) -> Option<Vec<usize>> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let n = network.num_vertices();
    let mut color = vec![WHITE; n];
    let mut via = vec![usize::MAX; n];
    for root in 0..n {
        if color[root] != WHITE {
            continue;
        }
        // (vertex, next out-edge position)
        let mut stack = vec![(root, 0usize)];
        color[root] = GREY;
        while let Some(&mut (u, ref mut pos)) = stack.last_mut() {
            let outs = network.out_edges(u);
            if *pos == outs.len() {
                color[u] = BLACK;
                stack.pop();
                continue;
            }
            let e = outs[*pos];
            *pos += 1;
            if x[e] <= 0.0 {
                continue;
            }
            let w = network.edge(e).head;
            match color[w] {
                WHITE => {
                    color[w] = GREY;
                    via[w] = e;
                    stack.push((w, 0));
                }
                GREY => {
                    let mut cycle = vec![e];
                    let mut v = u;
                    while v != w {
                        let pe = via[v];
                        cycle.push(pe);
                        v = network.edge(pe).tail;
                    }
                    cycle.reverse();
                    return Some(cycle);
                }
                _ => {}
            }
        }
    }
    None
}

/// Cancels every directed cycle in each commodity's support. The result is
/// feasible, edgewise no larger than `flow`, and (with nondecreasing
/// latencies) no more costly.
pub fn acyclic_reduce(network: &Network, flow: &FlowVector) -> Result<FlowVector> {
    if !is_feasible(network, flow, super::FEASIBILITY_TOL) {
        return Err(Error::Infeasible("acyclic_reduce on an infeasible flow".into()));
    }
    let mut per_commodity = flow.per_commodity().to_vec();
    for x in per_commodity.iter_mut() {
        while let Some(cycle) = find_cycle(network, x) {
            let bottleneck = cycle.iter().map(|&e| x[e]).fold(f64::INFINITY, f64::min);
            for &e in &cycle {
                x[e] = if x[e] <= bottleneck { 0.0 } else { x[e] - bottleneck };
            }
        }
    }
    FlowVector::new(per_commodity)
}

pub(crate) fn has_cycle(network: &Network, x: &[f64]) -> bool {
    find_cycle(network, x).is_some()
}

/// A source-sink path (as edge indices) and the flow it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFlow {
    pub edges: Vec<usize>,
    pub flow: f64,
}

/// Decomposes commodity `i` of `flow` into source-sink paths after cycle
/// cancellation. Paths carrying less than `min_flow` are dropped.
pub fn path_decomposition(network: &Network, flow: &FlowVector, i: usize, min_flow: f64) -> Result<Vec<PathFlow>> {
    let reduced = acyclic_reduce(network, flow)?;
    let mut x = reduced.commodity(i).to_vec();
    let c = network.commodities()[i];
    let mut paths = Vec::new();
    let mut remaining = c.demand;
    while remaining > min_flow.max(0.0) {
        let mut edges = Vec::new();
        let mut v = c.source;
        while v != c.sink {
            let best = network
                .out_edges(v)
                .iter()
                .copied()
                .filter(|&e| x[e] > 0.0)
                .max_by(|&a, &b| x[a].total_cmp(&x[b]));
            match best {
                Some(e) => {
                    edges.push(e);
                    v = network.edge(e).head;
                }
                None => break,
            }
        }
        if v != c.sink || edges.is_empty() {
            break;
        }
        let bottleneck = edges.iter().map(|&e| x[e]).fold(f64::INFINITY, f64::min);
        for &e in &edges {
            x[e] = if x[e] <= bottleneck { 0.0 } else { x[e] - bottleneck };
        }
        remaining -= bottleneck;
        if bottleneck >= min_flow {
            paths.push(PathFlow {
                edges,
                flow: bottleneck,
            });
        }
    }
    Ok(paths)
}
