use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::game::Network;

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    pub edges: Vec<usize>,
    pub distance: f64,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra under nonnegative `edge_costs`. Among equal-distance
/// predecessors of a vertex the lowest edge id wins, so the returned path is
/// a deterministic function of the costs.
pub fn shortest_path(network: &Network, edge_costs: &[f64], source: usize, sink: usize) -> Result<ShortestPath> {
    debug_assert!(edge_costs.iter().all(|&c| c >= 0.0));
    let n = network.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, u)) = heap.pop() {
        if settled[u] || d > dist[u] {
            continue;
        }
        settled[u] = true;
        if u == sink {
            break;
        }
        for &e in network.out_edges(u) {
            let v = network.edge(e).head;
            if settled[v] {
                continue;
            }
            let nd = d + edge_costs[e];
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = e;
                heap.push(Entry(nd, v));
            } else if nd == dist[v] && e < pred[v] {
                pred[v] = e;
            }
        }
    }
    if !dist[sink].is_finite() {
        return Err(Error::Unreachable {
            origin: network.vertices()[source].clone(),
            sink: network.vertices()[sink].clone(),
        });
    }
    Ok(ShortestPath {
        edges: trace_back(network, &pred, source, sink),
        distance: dist[sink],
    })
}

fn trace_back(network: &Network, pred: &[usize], source: usize, sink: usize) -> Vec<usize> {
    let mut edges = Vec::new();
    let mut v = sink;
    while v != source {
        let e = pred[v];
        edges.push(e);
        v = network.edge(e).tail;
    }
    edges.reverse();
    edges
}

/// Topological order of the subgraph formed by `allowed` edges, or `None`
/// if that subgraph has a directed cycle.
pub fn topological_order(network: &Network, allowed: &[bool]) -> Option<Vec<usize>> {
    let n = network.num_vertices();
    let mut indegree = vec![0usize; n];
    for (e, edge) in network.edges().iter().enumerate() {
        if allowed[e] {
            indegree[edge.head] += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut next = 0;
    while next < order.len() {
        let u = order[next];
        next += 1;
        for &e in network.out_edges(u) {
            if allowed[e] {
                let v = network.edge(e).head;
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    order.push(v);
                }
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Shortest path with arbitrary-sign costs over the acyclic subgraph of
/// `allowed` edges, given its topological `order`.
pub fn dag_shortest_path(
    network: &Network,
    allowed: &[bool],
    order: &[usize],
    edge_costs: &[f64],
    source: usize,
    sink: usize,
) -> Result<ShortestPath> {
    let n = network.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    dist[source] = 0.0;
    for &u in order {
        if !dist[u].is_finite() {
            continue;
        }
        for &e in network.out_edges(u) {
            if !allowed[e] {
                continue;
            }
            let v = network.edge(e).head;
            let nd = dist[u] + edge_costs[e];
            if nd < dist[v] || (nd == dist[v] && e < pred[v]) {
                dist[v] = nd;
                pred[v] = e;
            }
        }
    }
    if !dist[sink].is_finite() {
        return Err(Error::Unreachable {
            origin: network.vertices()[source].clone(),
            sink: network.vertices()[sink].clone(),
        });
    }
    Ok(ShortestPath {
        edges: trace_back(network, &pred, source, sink),
        distance: dist[sink],
    })
}
