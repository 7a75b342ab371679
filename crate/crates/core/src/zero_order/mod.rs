//! Minimizing total latency with only equilibrium queries.
//!
//! Every feasible, acyclic flow is enforceable by some tolls, so the oracle
//! can be turned into a noisy zero-order oracle for the total latency
//! `C(f) = Σ_e f_e l_e(f_e)`: enforce `f` to high accuracy and read the cost of
//! the equilibrium the oracle reports. [`minimize_total_latency`] runs a
//! projected gradient method on `C` over the feasible-flow polytope with
//! central-difference gradients along an orthonormal basis of the polytope's
//! affine hull, and [`compute_optimal_tolls`] enforces the flow it finds.

mod gradient;
mod minimize;
mod sample;
mod space;

pub use gradient::{estimate_gradient, GradientEstimate};
pub use minimize::{
    compute_optimal_tolls, minimize_total_latency, minimize_with, OptConfig, OptPhase, OptStatus, OptStep,
    OptimalTolls, OptimizationReport,
};
pub use sample::{zero_order_cost_oracle, CostOracle, CostOracleSample, EnforcedCostOracle, ExactCostOracle};
pub use space::FlowSpace;
