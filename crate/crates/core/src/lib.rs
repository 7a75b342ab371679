pub mod ellipsoid;
pub mod enforce;
pub mod equilibrium;
pub mod experiments;
pub mod error;
pub mod game;
pub mod instances;
pub mod oracle;
pub mod zero_order;

pub use error::{Error, Result};
pub use game::{Commodity, Edge, FlowVector, GameConstants, Network, PolyLatency, RoutingGame, TollVector};
