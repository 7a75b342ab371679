use serde::{Deserialize, Serialize};

use super::sample::CostOracle;
use super::space::FlowSpace;
use crate::error::{Error, Result};
use crate::game::FlowVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    /// Directional derivatives along the basis of the affine hull.
    pub reduced: Vec<f64>,
    /// The same gradient as a per-commodity edge-space vector.
    pub edge_space: Vec<Vec<f64>>,
    /// Difference step used along each direction; shorter than requested
    /// only when the polytope boundary is closer.
    pub steps: Vec<f64>,
    /// Per-coordinate bound `δ/h + K″h` for the smallest step used.
    pub error_bound: f64,
    pub queries_spent: usize,
}

/// Central-difference gradient of the total latency at `flow` along the
/// basis of `space`, with step `h`.
pub fn estimate_gradient<O: CostOracle + ?Sized>(
    oracle: &mut O,
    space: &FlowSpace,
    flow: &FlowVector,
    h: f64,
) -> Result<GradientEstimate> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::OracleSampleFailed(format!("bad difference step {h}")));
    }
    let mut reduced = Vec::with_capacity(space.dimension());
    let mut steps = Vec::with_capacity(space.dimension());
    let mut queries = 0;
    for (i, b) in space.basis() {
        let room = flow
            .commodity(*i)
            .iter()
            .zip(b)
            .filter(|(_, v)| v.abs() > 0.0)
            .map(|(x, v)| x / v.abs())
            .fold(f64::INFINITY, f64::min);
        let step = h.min(0.999 * room);
        if !(step > 0.0) {
            return Err(Error::OracleSampleFailed("gradient point touches the polytope boundary".into()));
        }
        let shifted = |sign: f64| -> Result<FlowVector> {
            let mut rows = flow.per_commodity().to_vec();
            rows[*i].iter_mut().zip(b).for_each(|(x, v)| *x += sign * step * v);
            FlowVector::new(rows)
        };
        let plus = oracle.sample(&shifted(1.0)?)?;
        let minus = oracle.sample(&shifted(-1.0)?)?;
        queries += plus.queries_spent + minus.queries_spent;
        reduced.push((plus.observed_cost - minus.observed_cost) / (2.0 * step));
        steps.push(step);
    }
    let h_min = steps.iter().copied().fold(h, f64::min);
    let error_bound = oracle.accuracy() / h_min + oracle.constants().curvature * h_min;
    Ok(GradientEstimate {
        edge_space: space.lift(&reduced),
        reduced,
        steps,
        error_bound,
        queries_spent: queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Commodity, Edge, Network, PolyLatency, RoutingGame};
    use crate::zero_order::ExactCostOracle;

    fn pigou() -> RoutingGame {
        let network = Network::new(
            vec!["s".into(), "t".into()],
            vec![
                Edge { id: "a".into(), tail: 0, head: 1 },
                Edge { id: "b".into(), tail: 0, head: 1 },
            ],
            vec![Commodity { source: 0, sink: 1, demand: 1.0 }],
        )
        .unwrap();
        RoutingGame::new(network, vec![PolyLatency::identity(), PolyLatency::constant(1.0)]).unwrap()
    }

    #[test]
    fn pigou_gradient_vanishes_at_optimum() {
        let game = pigou();
        let space = FlowSpace::new(game.network()).unwrap();
        let mut oracle = ExactCostOracle::new(game);
        let g = estimate_gradient(&mut oracle, &space, &FlowVector::single(vec![0.5, 0.5]).unwrap(), 0.01).unwrap();
        assert!(g.reduced[0].abs() < 1e-12);
        assert_eq!(oracle.samples(), 2);
    }

    #[test]
    fn pigou_gradient_at_three_quarters() {
        // C(x) = x² + 1 − x along (1, −1)/√2: slope (2·0.75 − 1)/√2.
        let game = pigou();
        let space = FlowSpace::new(game.network()).unwrap();
        let mut oracle = ExactCostOracle::new(game);
        let g = estimate_gradient(&mut oracle, &space, &FlowVector::single(vec![0.75, 0.25]).unwrap(), 0.01).unwrap();
        assert!((g.reduced[0] - 0.5 / 2f64.sqrt()).abs() < 1e-9);
        assert!((g.reduced[0] - 0.3536).abs() < 1e-4);
    }

    #[test]
    fn step_shrinks_near_boundary() {
        let game = pigou();
        let space = FlowSpace::new(game.network()).unwrap();
        let mut oracle = ExactCostOracle::new(game);
        let g = estimate_gradient(&mut oracle, &space, &FlowVector::single(vec![0.995, 0.005]).unwrap(), 0.1).unwrap();
        assert!(g.steps[0] < 0.01);
        assert!((g.reduced[0] - 0.99 / 2f64.sqrt()).abs() < 1e-9);
    }
}
