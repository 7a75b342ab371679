use std::collections::VecDeque;

use crate::equilibrium::{dag_shortest_path, topological_order};
use crate::error::{Error, Result};
use crate::game::{FlowVector, Network};

/// Geometry of the feasible-flow polytope of a network: which edges each
/// commodity can use, an orthonormal basis of the polytope's affine hull,
/// a strictly positive reference flow, and Euclidean projection.
#[derive(Debug, Clone)]
pub struct FlowSpace {
    network: Network,
    usable: Vec<Vec<bool>>,
    order: Vec<Vec<usize>>,
    /// `(commodity, edge-space direction)`, orthonormal within a commodity.
    basis: Vec<(usize, Vec<f64>)>,
    reference: FlowVector,
}

/// Orthonormal basis of `{x : A x = 0, x_e = 0 for unusable e}`.
fn null_space_basis(network: &Network, usable: &[bool]) -> Vec<Vec<f64>> {
    let m = network.num_edges();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for v in 0..network.num_vertices() {
        let mut row = vec![0.0; m];
        for &e in network.out_edges(v) {
            if usable[e] {
                row[e] += 1.0;
            }
        }
        for &e in network.in_edges(v) {
            if usable[e] {
                row[e] -= 1.0;
            }
        }
        rows.push(row);
    }
    for (e, &ok) in usable.iter().enumerate() {
        if !ok {
            let mut row = vec![0.0; m];
            row[e] = 1.0;
            rows.push(row);
        }
    }

    fn reduce(v: &mut [f64], against: &[Vec<f64>]) {
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for q in against {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
            }
        }
    }
    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    let mut row_space: Vec<Vec<f64>> = Vec::new();
    for mut row in rows {
        reduce(&mut row, &row_space);
        let n = norm(&row);
        if n > 1e-9 {
            row.iter_mut().for_each(|a| *a /= n);
            row_space.push(row);
        }
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in 0..m {
        if row_space.len() + basis.len() == m {
            break;
        }
        let mut v = vec![0.0; m];
        v[j] = 1.0;
        reduce(&mut v, &row_space);
        reduce(&mut v, &basis);
        let n = norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|a| {
                *a /= n;
                if a.abs() < 1e-15 {
                    *a = 0.0;
                }
            });
            basis.push(v);
        }
    }
    basis
}

/// Fewest-edge path from `from` to `to` over usable edges.
fn hop_path(network: &Network, usable: &[bool], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut via = vec![usize::MAX; network.num_vertices()];
    let mut seen = vec![false; network.num_vertices()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &e in network.out_edges(u) {
            let w = network.edge(e).head;
            if usable[e] && !seen[w] {
                seen[w] = true;
                via[w] = e;
                queue.push_back(w);
            }
        }
    }
    if !seen[to] {
        return None;
    }
    let mut path = Vec::new();
    let mut v = to;
    while v != from {
        path.push(via[v]);
        v = network.edge(via[v]).tail;
    }
    path.reverse();
    Some(path)
}

struct Active {
    edges: Vec<usize>,
    weight: f64,
}

impl FlowSpace {
    /// Fails with [`Error::CyclicNetwork`] if some commodity's usable edges
    /// contain a directed cycle; the polytope is then unbounded.
    pub fn new(network: &Network) -> Result<Self> {
        let m = network.num_edges();
        let k = network.num_commodities();
        let mut usable = Vec::with_capacity(k);
        let mut order = Vec::with_capacity(k);
        let mut basis = Vec::new();
        let mut reference = vec![vec![0.0; m]; k];
        for (i, c) in network.commodities().iter().enumerate() {
            let ok = network.usable_edges(i);
            let topo = topological_order(network, &ok).ok_or(Error::CyclicNetwork(i))?;
            for v in null_space_basis(network, &ok) {
                basis.push((i, v));
            }
            let mut paths: Vec<Vec<usize>> = Vec::new();
            for e in (0..m).filter(|&e| ok[e]) {
                let edge = network.edge(e);
                let mut path = hop_path(network, &ok, c.source, edge.tail).expect("usable edge reachable");
                path.push(e);
                path.extend(hop_path(network, &ok, edge.head, c.sink).expect("usable edge reaches sink"));
                if !paths.contains(&path) {
                    paths.push(path);
                }
            }
            let share = c.demand / paths.len() as f64;
            for p in &paths {
                for &e in p {
                    reference[i][e] += share;
                }
            }
            usable.push(ok);
            order.push(topo);
        }
        Ok(FlowSpace {
            network: network.clone(),
            usable,
            order,
            basis,
            reference: FlowVector::new(reference)?,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Dimension of the polytope's affine hull.
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Basis directions as `(commodity, edge-space vector)`.
    pub fn basis(&self) -> &[(usize, Vec<f64>)] {
        &self.basis
    }

    /// Strictly positive on every usable edge.
    pub fn reference_flow(&self) -> &FlowVector {
        &self.reference
    }

    /// Smallest reference flow on a usable edge.
    pub fn reference_margin(&self) -> f64 {
        self.reference
            .per_commodity()
            .iter()
            .zip(&self.usable)
            .flat_map(|(row, ok)| row.iter().zip(ok).filter(|(_, &u)| u).map(|(&x, _)| x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn usable(&self, i: usize) -> &[bool] {
        &self.usable[i]
    }

    /// `flow + Σ_j coords_j b_j`, without a feasibility check.
    pub fn offset(&self, flow: &FlowVector, coords: &[f64]) -> Vec<Vec<f64>> {
        let mut out = flow.per_commodity().to_vec();
        for ((i, b), &c) in self.basis.iter().zip(coords) {
            if c != 0.0 {
                out[*i].iter_mut().zip(b).for_each(|(x, v)| *x += c * v);
            }
        }
        out
    }

    /// Maps reduced coordinates to a per-commodity edge-space vector.
    pub fn lift(&self, coords: &[f64]) -> Vec<Vec<f64>> {
        let m = self.network.num_edges();
        let mut out = vec![vec![0.0; m]; self.network.num_commodities()];
        for ((i, b), &c) in self.basis.iter().zip(coords) {
            out[*i].iter_mut().zip(b).for_each(|(x, v)| *x += c * v);
        }
        out
    }

    /// Reduced coordinates `Bᵀ v` of a per-commodity edge-space vector.
    pub fn restrict(&self, v: &[Vec<f64>]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|(i, b)| b.iter().zip(&v[*i]).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Frank-Wolfe gap `max_s g·(flow − s)` over feasible `s`: an upper
    /// bound on `F(flow) − min F` when `g` is the gradient of a convex `F`.
    pub fn frank_wolfe_gap(&self, flow: &FlowVector, gradient: &[Vec<f64>]) -> Result<f64> {
        let mut gap = 0.0;
        for (i, c) in self.network.commodities().iter().enumerate() {
            let along: f64 = gradient[i].iter().zip(flow.commodity(i)).map(|(g, x)| g * x).sum();
            let best = dag_shortest_path(
                &self.network,
                &self.usable[i],
                &self.order[i],
                &gradient[i],
                c.source,
                c.sink,
            )?;
            gap += along - c.demand * best.distance;
        }
        Ok(gap)
    }

    /// Euclidean projection of `point` (one row per commodity) onto the
    /// feasible-flow polytope, by away-step conditional gradient over path
    /// flows run to duality gap `1e-10`.
    pub fn project(&self, point: &[Vec<f64>]) -> Result<FlowVector> {
        const GAP: f64 = 1e-10;
        const MAX_ITERATIONS: usize = 100_000;
        let m = self.network.num_edges();
        let mut rows = Vec::with_capacity(point.len());
        for (i, c) in self.network.commodities().iter().enumerate() {
            let target = &point[i];
            let d = c.demand;
            let start = path_decomposition_of(&self.network, self.reference.commodity(i), c.source, c.sink);
            let mut active: Vec<Active> = start
                .into_iter()
                .map(|(edges, w)| Active { edges, weight: w / d })
                .collect();
            let mut x = vec![0.0; m];
            rebuild(&mut x, &active, d);
            let mut converged = false;
            for _ in 0..MAX_ITERATIONS {
                let r: Vec<f64> = x.iter().zip(target).map(|(a, b)| a - b).collect();
                let fw = dag_shortest_path(&self.network, &self.usable[i], &self.order[i], &r, c.source, c.sink)?;
                let rx: f64 = r.iter().zip(&x).map(|(a, b)| a * b).sum();
                let gap = rx - d * fw.distance;
                if gap <= GAP {
                    converged = true;
                    break;
                }
                let path_cost = |edges: &[usize]| edges.iter().map(|&e| r[e]).sum::<f64>();
                let (away_idx, away_cost) = active
                    .iter()
                    .enumerate()
                    .map(|(idx, p)| (idx, path_cost(&p.edges)))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("active set is never empty");
                let away_gap = d * away_cost - rx;
                // direction = target vertex − x (frank-wolfe) or x − away vertex
                let (dir, max_step, toward_fw) = if gap >= away_gap || active.len() == 1 {
                    let mut dir: Vec<f64> = x.iter().map(|v| -v).collect();
                    for &e in &fw.edges {
                        dir[e] += d;
                    }
                    (dir, 1.0, true)
                } else {
                    let mut dir = x.clone();
                    for &e in &active[away_idx].edges {
                        dir[e] -= d;
                    }
                    let w = active[away_idx].weight;
                    (dir, w / (1.0 - w), false)
                };
                let slope: f64 = r.iter().zip(&dir).map(|(a, b)| a * b).sum();
                let curvature: f64 = dir.iter().map(|v| v * v).sum();
                if curvature <= 0.0 {
                    converged = true;
                    break;
                }
                let step = (-slope / curvature).clamp(0.0, max_step);
                if step == 0.0 {
                    converged = true;
                    break;
                }
                if toward_fw {
                    active.iter_mut().for_each(|p| p.weight *= 1.0 - step);
                    match active.iter_mut().find(|p| p.edges == fw.edges) {
                        Some(p) => p.weight += step,
                        None => active.push(Active {
                            edges: fw.edges.clone(),
                            weight: step,
                        }),
                    }
                    if step >= 1.0 {
                        active.retain(|p| p.edges == fw.edges);
                        active[0].weight = 1.0;
                    }
                } else {
                    active.iter_mut().for_each(|p| p.weight *= 1.0 + step);
                    active[away_idx].weight -= step;
                    if step >= max_step {
                        active.remove(away_idx);
                    }
                }
                active.retain(|p| p.weight > 0.0);
                rebuild(&mut x, &active, d);
            }
            if !converged {
                return Err(Error::NoConvergence {
                    iterations: MAX_ITERATIONS,
                    gap: f64::NAN,
                });
            }
            rows.push(x);
        }
        FlowVector::new(rows)
    }
}

fn rebuild(x: &mut [f64], active: &[Active], demand: f64) {
    x.iter_mut().for_each(|v| *v = 0.0);
    let total: f64 = active.iter().map(|p| p.weight).sum();
    for p in active {
        for &e in &p.edges {
            x[e] += demand * p.weight / total;
        }
    }
}

fn path_decomposition_of(network: &Network, flow: &[f64], source: usize, sink: usize) -> Vec<(Vec<usize>, f64)> {
    let mut x = flow.to_vec();
    let mut out = Vec::new();
    loop {
        let mut edges = Vec::new();
        let mut v = source;
        while v != sink {
            match network
                .out_edges(v)
                .iter()
                .copied()
                .filter(|&e| x[e] > 1e-15)
                .max_by(|&a, &b| x[a].total_cmp(&x[b]))
            {
                Some(e) => {
                    edges.push(e);
                    v = network.edge(e).head;
                }
                None => break,
            }
        }
        if v != sink || edges.is_empty() {
            break;
        }
        let bottleneck = edges.iter().map(|&e| x[e]).fold(f64::INFINITY, f64::min);
        for &e in &edges {
            x[e] -= bottleneck;
        }
        out.push((edges, bottleneck));
    }
    out
}
