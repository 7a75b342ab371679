//! JSON formats for games, flows and tolls.
//!
//! Numbers are written as decimal strings; both strings and plain JSON
//! numbers are accepted on input. Flows and tolls are maps keyed by edge id.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use std::collections::BTreeMap;

use super::{Commodity, Edge, FlowVector, Network, PolyLatency, RoutingGame, TollVector};
use crate::error::{Error, Result};

/// A number stored as a decimal string on the wire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decimal(pub f64);

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_decimal(self.0))
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => n
                .as_f64()
                .map(Decimal)
                .ok_or_else(|| serde::de::Error::custom("number out of range")),
            Value::String(s) => parse_decimal(&s).map(Decimal).map_err(serde::de::Error::custom),
            other => Err(serde::de::Error::custom(format!("expected a number, got {other}"))),
        }
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_decimal(x: f64) -> String {
    format!("{x}")
}

pub fn parse_decimal(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: f64 = num.trim().parse().map_err(|_| format!("bad fraction {s}"))?;
        let den: f64 = den.trim().parse().map_err(|_| format!("bad fraction {s}"))?;
        return Ok(num / den);
    }
    s.parse().map_err(|_| format!("bad decimal {s}"))
}

fn id_string(v: &Value) -> std::result::Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(format!("bad id {other}")),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EdgeRecord {
    id: Value,
    tail: Value,
    head: Value,
    coeffs: Vec<Decimal>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    constant: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CommodityRecord {
    source: Value,
    sink: Value,
    demand: Decimal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GameRecord {
    vertices: Vec<Value>,
    edges: Vec<EdgeRecord>,
    commodities: Vec<CommodityRecord>,
}

pub fn game_from_json(text: &str) -> Result<RoutingGame> {
    let record: GameRecord = serde_json::from_str(text)?;
    let vertices = record
        .vertices
        .iter()
        .map(id_string)
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(Error::InvalidGame)?;
    let lookup = |v: &Value| -> Result<usize> {
        let id = id_string(v).map_err(Error::InvalidGame)?;
        vertices
            .iter()
            .position(|w| *w == id)
            .ok_or_else(|| Error::InvalidGame(format!("unknown vertex {id}")))
    };
    let mut edges = Vec::with_capacity(record.edges.len());
    let mut latencies = Vec::with_capacity(record.edges.len());
    for e in &record.edges {
        edges.push(Edge {
            id: id_string(&e.id).map_err(Error::InvalidGame)?,
            tail: lookup(&e.tail)?,
            head: lookup(&e.head)?,
        });
        let coeffs: Vec<f64> = e.coeffs.iter().map(|c| c.0).collect();
        latencies.push(if e.constant {
            if coeffs.len() > 1 && coeffs[1..].iter().any(|&a| a != 0.0) {
                return Err(Error::InvalidGame(format!("constant edge {} has load terms", edges.last().unwrap().id)));
            }
            PolyLatency::constant(coeffs.first().copied().unwrap_or(0.0))
        } else {
            PolyLatency::new(coeffs)
        });
    }
    let commodities = record
        .commodities
        .iter()
        .map(|c| {
            Ok(Commodity {
                source: lookup(&c.source)?,
                sink: lookup(&c.sink)?,
                demand: c.demand.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RoutingGame::new(Network::new(vertices, edges, commodities)?, latencies)
}

pub fn game_to_json(game: &RoutingGame) -> String {
    let net = game.network();
    let record = GameRecord {
        vertices: net.vertices().iter().cloned().map(Value::String).collect(),
        edges: net
            .edges()
            .iter()
            .zip(game.latencies())
            .map(|(e, l)| EdgeRecord {
                id: Value::String(e.id.clone()),
                tail: Value::String(net.vertices()[e.tail].clone()),
                head: Value::String(net.vertices()[e.head].clone()),
                coeffs: l.coeffs().iter().map(|&a| Decimal(a)).collect(),
                constant: l.is_constant(),
            })
            .collect(),
        commodities: net
            .commodities()
            .iter()
            .map(|c| CommodityRecord {
                source: Value::String(net.vertices()[c.source].clone()),
                sink: Value::String(net.vertices()[c.sink].clone()),
                demand: Decimal(c.demand),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&record).expect("game serializes")
}

/// Edge-id-keyed map of decimal strings.
pub fn edge_map(network: &Network, values: &[f64]) -> Value {
    let map: Map<String, Value> = network
        .edges()
        .iter()
        .zip(values)
        .map(|(e, &v)| (e.id.clone(), Value::String(format_decimal(v))))
        .collect();
    Value::Object(map)
}

fn read_edge_map(network: &Network, value: &Value) -> Result<Vec<f64>> {
    let map: BTreeMap<String, Decimal> = serde_json::from_value(value.clone())?;
    let mut out = vec![0.0; network.num_edges()];
    for (id, v) in map {
        let e = network
            .edge_index(&id)
            .ok_or_else(|| Error::Format(format!("unknown edge {id}")))?;
        out[e] = v.0;
    }
    Ok(out)
}

pub fn tolls_to_json(network: &Network, tolls: &TollVector) -> Value {
    edge_map(network, tolls.values())
}

/// Missing edges get a zero toll.
pub fn tolls_from_json(network: &Network, value: &Value) -> Result<TollVector> {
    TollVector::new(read_edge_map(network, value)?)
}

/// `{"per_commodity": [{edge: flow}], "aggregate": {edge: flow}}`.
pub fn flow_to_json(network: &Network, flow: &FlowVector) -> Value {
    serde_json::json!({
        "per_commodity": flow
            .per_commodity()
            .iter()
            .map(|row| edge_map(network, row))
            .collect::<Vec<_>>(),
        "aggregate": edge_map(network, flow.aggregate()),
    })
}

/// Accepts the full flow object or, for single-commodity networks, a bare
/// edge map.
pub fn flow_from_json(network: &Network, value: &Value) -> Result<FlowVector> {
    match value.get("per_commodity") {
        Some(Value::Array(rows)) => {
            let rows = rows
                .iter()
                .map(|row| read_edge_map(network, row))
                .collect::<Result<Vec<_>>>()?;
            FlowVector::new(rows)
        }
        _ if network.num_commodities() == 1 => FlowVector::single(read_edge_map(network, value)?),
        _ => Err(Error::Format("flow JSON needs a per_commodity array".into())),
    }
}
