//! Heterogeneous mall graphs.
//!
//! A [`MallGraph`] is a Euclidean graph whose nodes are shops, corridor
//! junctions and entrances. Edges follow corridors and are undirected; their
//! lengths are always derived from the endpoint positions. Shops hang off the
//! corridor network by a single edge each.

mod generate;
mod io;
mod paths;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate_mall, CorridorStyle, MallSpec};
pub use io::{from_json_str, load_graph, save_graph, to_json_string};
pub use paths::{
    count_shortest_paths, edge_betweenness, shortest_path, PathCounts, ShortestPathDag,
    TIE_TOLERANCE,
};
pub use validate::{validate, Violation};

/// Dense node index.
pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {target} is unreachable from node {from}")]
    Unreachable { from: NodeId, target: NodeId },
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("infeasible mall spec: {0}")]
    InfeasibleSpec(String),
    #[error("malformed graph: {0}")]
    Malformed(String),
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("mall {mall_id} violates graph invariants: {}", join_violations(.violations))]
    InvariantViolation {
        mall_id: String,
        violations: Vec<Violation>,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, GraphError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Shop,
    Corridor,
    Entrance,
}

impl NodeKind {
    /// Corridor and entrance nodes together form the non-shop type.
    pub fn is_shop(self) -> bool {
        matches!(self, NodeKind::Shop)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Shop => "shop",
            NodeKind::Corridor => "corridor",
            NodeKind::Entrance => "entrance",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Position in meters.
    pub pos: [f64; 2],
}

/// Undirected edge stored with `u < v` whenever the endpoints differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub length: f64,
}

impl Edge {
    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Whether an edge joins two non-shop nodes or a shop and a non-shop node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeType {
    NonShopNonShop,
    ShopNonShop,
    /// Forbidden; only exists in graphs that fail validation.
    ShopShop,
}

#[derive(Debug, Clone)]
pub struct MallGraph {
    mall_id: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(NodeId, usize)>>,
    canonical: Vec<usize>,
    canonical_pos: Vec<usize>,
}

impl PartialEq for MallGraph {
    fn eq(&self, other: &Self) -> bool {
        self.mall_id == other.mall_id && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl MallGraph {
    /// Builds a graph from node kinds/positions and endpoint pairs.
    ///
    /// Only structural problems that prevent indexing (out-of-range endpoints)
    /// are rejected here; everything else is reported by [`validate`].
    pub fn new(
        mall_id: impl Into<String>,
        nodes: Vec<(NodeKind, [f64; 2])>,
        edges: &[(NodeId, NodeId)],
    ) -> Result<Self> {
        let nodes: Vec<Node> = nodes
            .into_iter()
            .enumerate()
            .map(|(id, (kind, pos))| Node { id, kind, pos })
            .collect();
        let n = nodes.len();
        let mut stored = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::Malformed(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            let (u, v) = if a <= b { (a, b) } else { (b, a) };
            let length = distance(nodes[u].pos, nodes[v].pos);
            stored.push(Edge { u, v, length });
        }
        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in stored.iter().enumerate() {
            adjacency[e.u].push((e.v, k));
            if e.u != e.v {
                adjacency[e.v].push((e.u, k));
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let mut g = MallGraph {
            mall_id: mall_id.into(),
            nodes,
            edges: stored,
            adjacency,
            canonical: Vec::new(),
            canonical_pos: Vec::new(),
        };
        let mut order: Vec<usize> = (0..g.edges.len()).collect();
        order.sort_by_key(|&k| {
            let e = g.edges[k];
            (g.edge_type(k), e.u, e.v, k)
        });
        let mut pos = vec![0; order.len()];
        for (slot, &k) in order.iter().enumerate() {
            pos[k] = slot;
        }
        g.canonical = order;
        g.canonical_pos = pos;
        Ok(g)
    }

    pub fn mall_id(&self) -> &str {
        &self.mall_id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id).ok_or(GraphError::UnknownNode(id))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted `(neighbor, edge index)` pairs of a node.
    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, usize)] {
        &self.adjacency[id]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency[id].len()
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id].kind
    }

    pub fn edge_type(&self, k: usize) -> EdgeType {
        let e = self.edges[k];
        match (self.kind(e.u).is_shop(), self.kind(e.v).is_shop()) {
            (false, false) => EdgeType::NonShopNonShop,
            (true, true) => EdgeType::ShopShop,
            _ => EdgeType::ShopNonShop,
        }
    }

    /// Edge indices in canonical order: non-shop/non-shop edges first, then
    /// shop/non-shop, each group sorted by `(min id, max id)`.
    pub fn canonical_order(&self) -> &[usize] {
        &self.canonical
    }

    /// Position of stored edge `k` within [`canonical_order`](Self::canonical_order).
    pub fn canonical_position(&self, k: usize) -> usize {
        self.canonical_pos[k]
    }

    pub fn canonical_edge(&self, slot: usize) -> &Edge {
        &self.edges[self.canonical[slot]]
    }

    pub fn ids_of(&self, kind: NodeKind) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.kind == kind).map(|n| n.id).collect()
    }

    pub fn shop_ids(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Shop)
    }

    /// Corridor and entrance nodes in ascending id order.
    pub fn nonshop_ids(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| !n.kind.is_shop()).map(|n| n.id).collect()
    }

    pub fn entrance_ids(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Entrance)
    }

    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Index of the edge joining `a` and `b`, if any.
    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<usize> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by(|&(n, _)| n.cmp(&b))
            .ok()
            .map(|i| list[i].1)
    }

    /// Number of nodes with degree 1, 2, 3 and at least 4.
    pub fn degree_histogram(&self) -> [usize; 4] {
        let mut b = [0usize; 4];
        for id in 0..self.num_nodes() {
            match self.degree(id) {
                0 => {}
                d => b[d.min(4) - 1] += 1,
            }
        }
        b
    }
}

pub fn degree_histogram(graph: &MallGraph) -> [usize; 4] {
    graph.degree_histogram()
}

pub(crate) fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
