//! Header encoding, forwarding simulation, and the packet wire format.
//!
//! A header is the concatenation of the port labels along a route. Each
//! switch consumes its own label from the front of the unread remainder, so
//! the packet needs no other routing state than the bits plus a read
//! pointer. [`PortLabels`] is the serializable artifact mapping each vertex
//! to its labeled out-ports; [`SwitchTable`] is the validated, indexed form
//! the forwarding functions run on.
//!
//! On the wire a packet is
//!
//! ```text
//! +---------+---------+--------------------+
//! | pointer | length  | header bits        |
//! | u16 BE  | u16 BE  | MSB-first, padded  |
//! +---------+---------+--------------------+
//! ```
//!
//! with `pointer` and `length` counted in bits and the final byte padded
//! with zeros.

use std::collections::BTreeMap;
use std::error::Error;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::topology::ProblemInstance;

/// One labeled out-port of a vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    /// Target vertex id.
    pub to: String,
    /// Binary label, possibly empty.
    pub label: String,
}

/// Per-vertex port labels; the artifact a run produces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortLabels {
    /// Keyed by vertex id; ports keep arc declaration order.
    pub vertices: BTreeMap<String, Vec<Port>>,
}

impl PortLabels {
    /// Bundles per-arc labels into the serializable artifact.
    pub fn from_arc_labels(instance: &ProblemInstance, labels: &[String]) -> Self {
        let g = instance.graph();
        let mut vertices = BTreeMap::new();
        for v in g.vertices() {
            let ports = g
                .out_arcs(v)
                .iter()
                .map(|&a| Port {
                    to: g.name(g.arc(a).1).to_string(),
                    label: labels[a].clone(),
                })
                .collect();
            vertices.insert(g.name(v).to_string(), ports);
        }
        PortLabels { vertices }
    }
}

/// Errors from table construction, encoding, forwarding, or the wire
/// format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecError {
    /// A label contains characters other than '0' and '1'.
    BadLabel { vertex: String, label: String },
    /// One label is a prefix of (or equal to) another at the same vertex.
    PrefixConflict { vertex: String, first: String, second: String },
    /// Two ports of one vertex point at the same target.
    DuplicatePort { vertex: String, to: String },
    /// A route names a vertex the table does not know.
    UnknownVertex { name: String },
    /// A route uses a hop with no port.
    NoPort { from: String, to: String },
    /// The route ends at a vertex whose empty-label port would keep the
    /// packet moving.
    AmbiguousTermination { vertex: String },
    /// Unread header bits match no port.
    NoMatchingPort { vertex: String },
    /// The step budget ran out; the table contains a zero-bit cycle.
    ForwardingLoop,
    /// The packet exceeds what the 16-bit wire fields can carry.
    PacketTooLong,
    /// A byte buffer is not a well-formed packet.
    Malformed(String),
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::BadLabel { vertex, label } => {
                write!(f, "vertex {vertex}: label {label:?} is not binary")
            }
            CodecError::PrefixConflict { vertex, first, second } => {
                write!(f, "vertex {vertex}: label {first:?} prefixes {second:?}")
            }
            CodecError::DuplicatePort { vertex, to } => {
                write!(f, "vertex {vertex}: duplicate port toward {to}")
            }
            CodecError::UnknownVertex { name } => write!(f, "unknown vertex {name:?}"),
            CodecError::NoPort { from, to } => write!(f, "no port from {from} to {to}"),
            CodecError::AmbiguousTermination { vertex } => {
                write!(f, "route ends at {vertex}, whose empty label would forward further")
            }
            CodecError::NoMatchingPort { vertex } => {
                write!(f, "no port at {vertex} matches the unread header bits")
            }
            CodecError::ForwardingLoop => write!(f, "forwarding did not terminate"),
            CodecError::PacketTooLong => write!(f, "packet exceeds 65535 bits"),
            CodecError::Malformed(m) => write!(f, "malformed packet: {m}"),
        }
    }
}

impl Error for CodecError {}

/// Validated, indexed forwarding tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchTable {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    /// Per vertex: (label bits, next vertex), in port declaration order.
    ports: Vec<Vec<(Vec<bool>, usize)>>,
}

fn label_bits(vertex: &str, label: &str) -> Result<Vec<bool>, CodecError> {
    label
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CodecError::BadLabel { vertex: vertex.to_string(), label: label.to_string() }),
        })
        .collect()
}

impl SwitchTable {
    /// Indexes the labels and checks each vertex's ports are binary,
    /// target-distinct, and prefix-free.
    pub fn new(labels: &PortLabels) -> Result<Self, CodecError> {
        let mut index = BTreeMap::new();
        let mut names = Vec::new();
        let add = |name: &str, index: &mut BTreeMap<String, usize>, names: &mut Vec<String>| {
            if !index.contains_key(name) {
                index.insert(name.to_string(), names.len());
                names.push(name.to_string());
            }
        };
        for (v, ports) in &labels.vertices {
            add(v, &mut index, &mut names);
            for port in ports {
                add(&port.to, &mut index, &mut names);
            }
        }
        let mut table = vec![Vec::new(); names.len()];
        for (v, ports) in &labels.vertices {
            let vi = index[v];
            for (i, port) in ports.iter().enumerate() {
                if ports[..i].iter().any(|p| p.to == port.to) {
                    return Err(CodecError::DuplicatePort {
                        vertex: v.clone(),
                        to: port.to.clone(),
                    });
                }
                for other in &ports[..i] {
                    let (short, long) = if other.label.len() <= port.label.len() {
                        (&other.label, &port.label)
                    } else {
                        (&port.label, &other.label)
                    };
                    if long.starts_with(short.as_str()) {
                        return Err(CodecError::PrefixConflict {
                            vertex: v.clone(),
                            first: short.clone(),
                            second: long.clone(),
                        });
                    }
                }
                table[vi].push((label_bits(v, &port.label)?, index[&port.to]));
            }
        }
        Ok(SwitchTable { names, index, ports: table })
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    fn port_toward(&self, from: usize, to: usize) -> Option<&(Vec<bool>, usize)> {
        self.ports[from].iter().find(|(_, next)| *next == to)
    }

    fn has_empty_port(&self, v: usize) -> bool {
        self.ports[v].iter().any(|(bits, _)| bits.is_empty())
    }
}

/// A header in flight: the bits plus how many have been consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPath {
    pub bits: Vec<bool>,
    pub pointer: usize,
}

impl EncodedPath {
    /// Builds a packet from a string of '0'/'1' with its pointer at zero.
    pub fn from_bit_str(s: &str) -> Result<Self, CodecError> {
        Ok(EncodedPath { bits: label_bits("<packet>", s)?, pointer: 0 })
    }

    /// The header as a '0'/'1' string.
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pointer
    }
}

/// Concatenates the port labels along `route` into a fresh packet.
///
/// Fails if a hop has no port, or if the route stops at a vertex whose
/// empty-label port would forward the packet past its destination.
pub fn encode_path(table: &SwitchTable, route: &[String]) -> Result<EncodedPath, CodecError> {
    let resolve = |name: &String| {
        table
            .vertex_index(name)
            .ok_or_else(|| CodecError::UnknownVertex { name: name.clone() })
    };
    let mut bits = Vec::new();
    for pair in route.windows(2) {
        let from = resolve(&pair[0])?;
        let to = resolve(&pair[1])?;
        let (label, _) = table.port_toward(from, to).ok_or_else(|| CodecError::NoPort {
            from: pair[0].clone(),
            to: pair[1].clone(),
        })?;
        bits.extend_from_slice(label);
    }
    if let Some(last) = route.last() {
        let v = resolve(last)?;
        if table.has_empty_port(v) {
            return Err(CodecError::AmbiguousTermination { vertex: last.clone() });
        }
    }
    Ok(EncodedPath { bits, pointer: 0 })
}

/// Advances a packet one hop.
///
/// Returns the next vertex after consuming the matching label, or `None`
/// when the packet has been delivered (no bits left and no empty-label
/// port to take).
pub fn forward_step(
    table: &SwitchTable,
    vertex: usize,
    packet: &mut EncodedPath,
) -> Result<Option<usize>, CodecError> {
    let rest = &packet.bits[packet.pointer..];
    for (label, next) in &table.ports[vertex] {
        if label.len() <= rest.len() && rest[..label.len()] == label[..] {
            packet.pointer += label.len();
            return Ok(Some(*next));
        }
    }
    if rest.is_empty() {
        Ok(None)
    } else {
        Err(CodecError::NoMatchingPort { vertex: table.vertex_name(vertex).to_string() })
    }
}

/// Runs a packet from `start` until delivery, returning the visited vertex
/// ids. A step budget of `bits + vertices + 1` unmasks zero-bit forwarding
/// cycles.
pub fn simulate(
    table: &SwitchTable,
    start: &str,
    packet: &mut EncodedPath,
) -> Result<Vec<String>, CodecError> {
    let mut v = table
        .vertex_index(start)
        .ok_or_else(|| CodecError::UnknownVertex { name: start.to_string() })?;
    let mut route = vec![table.vertex_name(v).to_string()];
    let budget = packet.bits.len() + table.vertex_count() + 1;
    for _ in 0..budget {
        match forward_step(table, v, packet)? {
            Some(next) => {
                v = next;
                route.push(table.vertex_name(v).to_string());
            }
            None => return Ok(route),
        }
    }
    Err(CodecError::ForwardingLoop)
}

/// Serializes a packet: pointer, bit length, then padded header bytes.
pub fn pack(packet: &EncodedPath) -> Result<Vec<u8>, CodecError> {
    if packet.bits.len() > u16::MAX as usize || packet.pointer > packet.bits.len() {
        return Err(CodecError::PacketTooLong);
    }
    let len = packet.bits.len() as u16;
    let ptr = packet.pointer as u16;
    let mut out = Vec::with_capacity(4 + packet.bits.len().div_ceil(8));
    out.extend_from_slice(&ptr.to_be_bytes());
    out.extend_from_slice(&len.to_be_bytes());
    let mut byte = 0u8;
    for (i, &bit) in packet.bits.iter().enumerate() {
        if bit {
            byte |= 1 << (7 - i % 8);
        }
        if i % 8 == 7 {
            out.push(byte);
            byte = 0;
        }
    }
    if !packet.bits.len().is_multiple_of(8) {
        out.push(byte);
    }
    Ok(out)
}

/// Deserializes a packet, insisting on an exact byte count, zero padding,
/// and a pointer within the header.
pub fn unpack(bytes: &[u8]) -> Result<EncodedPath, CodecError> {
    if bytes.len() < 4 {
        return Err(CodecError::Malformed(format!(
            "{} bytes is shorter than the 4-byte header",
            bytes.len()
        )));
    }
    let ptr = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
    let len = u16::from_be_bytes([bytes[2], bytes[3]]) as usize;
    let expected = 4 + len.div_ceil(8);
    if bytes.len() != expected {
        return Err(CodecError::Malformed(format!(
            "expected {expected} bytes for {len} header bits, got {}",
            bytes.len()
        )));
    }
    if ptr > len {
        return Err(CodecError::Malformed(format!(
            "pointer {ptr} runs past the {len}-bit header"
        )));
    }
    let mut bits = Vec::with_capacity(len);
    for i in 0..len {
        bits.push(bytes[4 + i / 8] >> (7 - i % 8) & 1 == 1);
    }
    for i in len..bytes[4..].len() * 8 {
        if bytes[4 + i / 8] >> (7 - i % 8) & 1 == 1 {
            return Err(CodecError::Malformed("padding bits must be zero".into()));
        }
    }
    Ok(EncodedPath { bits, pointer: ptr })
}
