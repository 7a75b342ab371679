//! Deterministic instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::game::{Commodity, Edge, Network, PolyLatency, RoutingGame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// `p` parallel links between two vertices.
    Parallel(usize),
    /// Links `x` and `1`.
    Pigou,
    /// `s→v: x, s→w: 1, v→t: 1, w→t: x, v→w: 0`.
    Braess,
    /// Links `x` and `0`.
    Fig1L1,
    /// Links `1` and `x`.
    Fig1L2,
    /// `width × height` vertex grid with rightward and downward edges.
    Grid { width: usize, height: usize },
    /// Random DAG on `vertices` vertices: a Hamiltonian chain plus each
    /// forward pair with probability `density`.
    RandomDag { vertices: usize, density: f64 },
}

impl FromStr for Topology {
    type Err = Error;

    /// `pigou`, `braess`, `fig1_l1`, `fig1_l2`, `parallel:P`, `grid:WxH`,
    /// `random_dag:N:DENSITY`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadSpec(format!("unknown topology {s:?}"));
        let mut parts = s.trim().split(':');
        let head = parts.next().ok_or_else(bad)?.to_ascii_lowercase();
        let rest: Vec<&str> = parts.collect();
        let parse_usize = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let topology = match (head.as_str(), rest.as_slice()) {
            ("pigou", []) => Topology::Pigou,
            ("braess", []) => Topology::Braess,
            ("fig1_l1", []) => Topology::Fig1L1,
            ("fig1_l2", []) => Topology::Fig1L2,
            ("parallel", [p]) => Topology::Parallel(parse_usize(p)?),
            ("grid", [dims]) => {
                let (w, h) = dims.split_once('x').ok_or_else(bad)?;
                Topology::Grid {
                    width: parse_usize(w)?,
                    height: parse_usize(h)?,
                }
            }
            ("random_dag", [n, density]) => Topology::RandomDag {
                vertices: parse_usize(n)?,
                density: density.trim().parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        Ok(topology)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Parallel(p) => write!(f, "parallel:{p}"),
            Topology::Pigou => write!(f, "pigou"),
            Topology::Braess => write!(f, "braess"),
            Topology::Fig1L1 => write!(f, "fig1_l1"),
            Topology::Fig1L2 => write!(f, "fig1_l2"),
            Topology::Grid { width, height } => write!(f, "grid:{width}x{height}"),
            Topology::RandomDag { vertices, density } => write!(f, "random_dag:{vertices}:{density}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub topology: Topology,
    /// Latency degree `r` for randomly drawn latencies.
    pub degree: usize,
    /// Coefficient bound `U` for randomly drawn latencies.
    pub coefficient_bound: f64,
    /// Number of commodities (random topologies only; at most 2).
    pub commodities: usize,
    /// Demand of each commodity (random topologies only).
    pub demand: f64,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(topology: Topology) -> Self {
        InstanceSpec {
            topology,
            degree: 1,
            coefficient_bound: 1.0,
            commodities: 1,
            demand: 1.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_commodities(mut self, commodities: usize) -> Self {
        self.commodities = commodities;
        self
    }

    pub fn with_demand(mut self, demand: f64) -> Self {
        self.demand = demand;
        self
    }

    /// Short identifier used in reports.
    pub fn id(&self) -> String {
        match self.topology {
            Topology::Pigou | Topology::Braess | Topology::Fig1L1 | Topology::Fig1L2 => self.topology.to_string(),
            _ => format!("{}/r{}/k{}/seed{}", self.topology, self.degree, self.commodities, self.seed),
        }
    }
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn edge(id: impl Into<String>, tail: usize, head: usize) -> Edge {
    Edge {
        id: id.into(),
        tail,
        head,
    }
}

fn two_links(a: PolyLatency, b: PolyLatency) -> Result<RoutingGame> {
    let network = Network::new(
        vec!["s".into(), "t".into()],
        vec![edge("e0", 0, 1), edge("e1", 0, 1)],
        vec![Commodity {
            source: 0,
            sink: 1,
            demand: 1.0,
        }],
    )?;
    RoutingGame::new(network, vec![a, b])
}

fn braess() -> Result<RoutingGame> {
    let network = Network::new(
        vec!["s".into(), "v".into(), "w".into(), "t".into()],
        vec![
            edge("sv", 0, 1),
            edge("sw", 0, 2),
            edge("vt", 1, 3),
            edge("wt", 2, 3),
            edge("vw", 1, 2),
        ],
        vec![Commodity {
            source: 0,
            sink: 3,
            demand: 1.0,
        }],
    )?;
    RoutingGame::new(
        network,
        vec![
            PolyLatency::identity(),
            PolyLatency::constant(1.0),
            PolyLatency::constant(1.0),
            PolyLatency::identity(),
            PolyLatency::constant(0.0),
        ],
    )
}

/// Random polynomial with `a_1 ≥ U/10`, so every drawn latency is strictly
/// increasing with slope bounded away from zero.
fn random_latency(rng: &mut ChaCha8Rng, degree: usize, bound: f64) -> PolyLatency {
    let mut coeffs = Vec::with_capacity(degree + 1);
    coeffs.push(bound * rng.gen::<f64>());
    for j in 1..=degree.max(1) {
        let a = if j == 1 {
            bound * (0.1 + 0.9 * rng.gen::<f64>())
        } else {
            bound * rng.gen::<f64>()
        };
        coeffs.push(a);
    }
    PolyLatency::new(coeffs)
}

/// Builds the game described by `spec`; the same spec always yields the
/// same game.
pub fn generate(spec: &InstanceSpec) -> Result<RoutingGame> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.commodities;
    let random = !matches!(
        spec.topology,
        Topology::Pigou | Topology::Braess | Topology::Fig1L1 | Topology::Fig1L2
    );
    if random {
        if !(1..=2).contains(&k) {
            return Err(Error::BadSpec(format!("{k} commodities; supported: 1 or 2")));
        }
        if !(spec.demand > 0.0 && spec.coefficient_bound > 0.0) {
            return Err(Error::BadSpec("demand and coefficient bound must be positive".into()));
        }
    }
    let commodity = |source, sink| Commodity {
        source,
        sink,
        demand: spec.demand,
    };
    let (vertices, edges, commodities) = match spec.topology {
        Topology::Pigou => return two_links(PolyLatency::identity(), PolyLatency::constant(1.0)),
        Topology::Fig1L1 => return two_links(PolyLatency::identity(), PolyLatency::constant(0.0)),
        Topology::Fig1L2 => return two_links(PolyLatency::constant(1.0), PolyLatency::identity()),
        Topology::Braess => return braess(),
        Topology::Parallel(p) => {
            if p == 0 {
                return Err(Error::BadSpec("parallel needs at least one link".into()));
            }
            let edges = (0..p).map(|e| edge(format!("e{e}"), 0, 1)).collect();
            (vec!["s".into(), "t".into()], edges, vec![commodity(0, 1); k])
        }
        Topology::Grid { width, height } => {
            if width * height < 2 || (k == 2 && width < 2 && height < 3) {
                return Err(Error::BadSpec(format!("grid {width}x{height} too small")));
            }
            let at = |r: usize, c: usize| r * width + c;
            let mut edges = Vec::new();
            for r in 0..height {
                for c in 0..width {
                    if c + 1 < width {
                        edges.push(edge(format!("r{r}c{c}>"), at(r, c), at(r, c + 1)));
                    }
                    if r + 1 < height {
                        edges.push(edge(format!("r{r}c{c}v"), at(r, c), at(r + 1, c)));
                    }
                }
            }
            let sink = at(height - 1, width - 1);
            let mut commodities = vec![commodity(0, sink)];
            if k == 2 {
                let second = if width > 1 { at(0, 1) } else { at(1, 0) };
                commodities.push(commodity(second, sink));
            }
            let vertices = (0..height)
                .flat_map(|r| (0..width).map(move |c| format!("r{r}c{c}")))
                .collect();
            (vertices, edges, commodities)
        }
        Topology::RandomDag { vertices: n, density } => {
            if n < 2 || (k == 2 && n < 3) || !(0.0..=1.0).contains(&density) {
                return Err(Error::BadSpec(format!("random_dag:{n}:{density}")));
            }
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if v == u + 1 || rng.gen::<f64>() < density {
                        edges.push(edge(format!("v{u}>v{v}"), u, v));
                    }
                }
            }
            let mut commodities = vec![commodity(0, n - 1)];
            if k == 2 {
                commodities.push(commodity(1, n - 1));
            }
            (ids("v", n), edges, commodities)
        }
    };
    let latencies = (0..edges.len())
        .map(|_| random_latency(&mut rng, spec.degree, spec.coefficient_bound))
        .collect();
    RoutingGame::new(Network::new(vertices, edges, commodities)?, latencies)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_coefficients() {
        let l1 = generate(&InstanceSpec::new(Topology::Fig1L1)).unwrap();
        let coeffs: Vec<&[f64]> = l1.latencies().iter().map(|l| l.coeffs()).collect();
        assert_eq!(coeffs, vec![&[0.0, 1.0][..], &[0.0][..]]);
        let l2 = generate(&InstanceSpec::new(Topology::Fig1L2)).unwrap();
        let coeffs: Vec<&[f64]> = l2.latencies().iter().map(|l| l.coeffs()).collect();
        assert_eq!(coeffs, vec![&[1.0][..], &[0.0, 1.0][..]]);
        assert_eq!(l2.network().num_vertices(), 2);
        assert_eq!(l2.network().total_demand(), 1.0);
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let spec = InstanceSpec::new(Topology::Parallel(3)).with_seed(7);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = InstanceSpec::new(Topology::Parallel(3)).with_seed(8);
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn parses_topologies() {
        for text in ["pigou", "braess", "fig1_l1", "fig1_l2", "parallel:4", "grid:2x3", "random_dag:6:0.5"] {
            let t: Topology = text.parse().unwrap();
            assert_eq!(t.to_string(), text);
        }
        assert!("grid:2".parse::<Topology>().is_err());
        assert!("hexagon".parse::<Topology>().is_err());
    }

    #[test]
    fn grid_shape() {
        let g = generate(&InstanceSpec::new(Topology::Grid { width: 3, height: 2 })).unwrap();
        assert_eq!(g.network().num_vertices(), 6);
        assert_eq!(g.num_edges(), 7);
        let two = generate(&InstanceSpec::new(Topology::Grid { width: 3, height: 2 }).with_commodities(2)).unwrap();
        assert_eq!(two.num_commodities(), 2);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate(&InstanceSpec::new(Topology::Parallel(0))).is_err());
        assert!(generate(&InstanceSpec::new(Topology::Parallel(2)).with_commodities(3)).is_err());
        assert!(generate(&InstanceSpec::new(Topology::RandomDag { vertices: 5, density: 1.5 })).is_err());
    }
}
