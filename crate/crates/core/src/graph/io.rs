//! Canonical JSON encoding of mall graphs.
//!
//! Keys are emitted in sorted order and floats in their shortest round-trip
//! form, so structurally equal graphs serialize to identical bytes. Edge
//! lengths are never stored.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate, GraphError, MallGraph, NodeKind, Result};
use crate::fsutil::write_atomic;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    edges: Vec<EdgeRecord>,
    mall_id: String,
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: usize,
    kind: NodeKind,
    pos: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    u: usize,
    v: usize,
}

pub fn to_json_string(graph: &MallGraph) -> String {
    let file = GraphFile {
        edges: graph.edges().iter().map(|e| EdgeRecord { u: e.u, v: e.v }).collect(),
        mall_id: graph.mall_id().to_string(),
        nodes: graph
            .nodes()
            .iter()
            .map(|n| NodeRecord { id: n.id, kind: n.kind, pos: n.pos })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("graph serialization cannot fail");
    s.push('\n');
    s
}

/// Parses and validates a graph. `origin` names the source in diagnostics.
pub fn from_json_str(text: &str, origin: &str) -> Result<MallGraph> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| GraphError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for (i, n) in file.nodes.iter().enumerate() {
        if n.id != i {
            return Err(GraphError::Malformed(format!(
                "{origin}: node at position {i} has id {}, ids must be 0..V-1 in order",
                n.id
            )));
        }
        nodes.push((n.kind, n.pos));
    }
    let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e.u, e.v)).collect();
    let graph = MallGraph::new(file.mall_id, nodes, &edges)?;
    let violations = validate(&graph);
    if !violations.is_empty() {
        return Err(GraphError::InvariantViolation {
            mall_id: graph.mall_id().to_string(),
            violations,
        });
    }
    Ok(graph)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<MallGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json_str(&text, &path.display().to_string())
}

pub fn save_graph(graph: &MallGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_atomic(path, to_json_string(graph).as_bytes()).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}
