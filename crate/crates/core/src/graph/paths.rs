//! Exact shortest-path machinery: single deterministic routes, all-path
//! counting, and edge betweenness.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::validate::reachable_from;
use super::{GraphError, MallGraph, NodeId, Result};

/// Relative tolerance under which two path lengths are considered equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    node: NodeId,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest-path structure.
///
/// `preds[v]` lists every `(u, edge)` whose relaxation reaches `v` at its
/// shortest distance (within [`TIE_TOLERANCE`]), sorted by `u`. The first
/// entry is the tie-break predecessor used for single routes.
#[derive(Debug, Clone)]
pub struct ShortestPathDag {
    source: NodeId,
    dist: Vec<f64>,
    preds: Vec<Vec<(NodeId, usize)>>,
    /// Reachable nodes in non-decreasing distance order.
    order: Vec<NodeId>,
    sigma: Vec<u64>,
}

impl ShortestPathDag {
    pub fn new(graph: &MallGraph, source: NodeId) -> Result<Self> {
        graph.node(source)?;
        let n = graph.num_nodes();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Frontier { dist: 0.0, node: source });
        let mut order = Vec::new();
        while let Some(Frontier { dist: d, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            order.push(node);
            for &(m, k) in graph.neighbors(node) {
                let nd = d + graph.edges()[k].length;
                if nd < dist[m] {
                    dist[m] = nd;
                    heap.push(Frontier { dist: nd, node: m });
                }
            }
        }

        let mut preds = vec![Vec::new(); n];
        for &v in &order {
            if v == source {
                continue;
            }
            for &(u, k) in graph.neighbors(v) {
                if dist[u] < dist[v] && approx_eq(dist[u] + graph.edges()[k].length, dist[v]) {
                    preds[v].push((u, k));
                }
            }
        }

        let mut sigma = vec![0u64; n];
        sigma[source] = 1;
        for &v in &order {
            for &(u, _) in &preds[v] {
                sigma[v] += sigma[u];
            }
        }
        Ok(ShortestPathDag { source, dist, preds, order, sigma })
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn distance(&self, target: NodeId) -> f64 {
        self.dist[target]
    }

    pub fn is_reachable(&self, target: NodeId) -> bool {
        self.dist[target].is_finite()
    }

    /// Number of distinct shortest paths from the source to `target`.
    pub fn path_count(&self, target: NodeId) -> u64 {
        self.sigma[target]
    }

    fn check_target(&self, target: NodeId) -> Result<()> {
        if target >= self.dist.len() {
            return Err(GraphError::UnknownNode(target));
        }
        if !self.is_reachable(target) {
            return Err(GraphError::Unreachable { from: self.source, target });
        }
        Ok(())
    }

    /// The tie-broken route to `target` as node ids, source first.
    pub fn route(&self, target: NodeId) -> Result<Vec<NodeId>> {
        self.check_target(target)?;
        let mut path = vec![target];
        let mut v = target;
        while v != self.source {
            v = self.preds[v][0].0;
            path.push(v);
        }
        path.reverse();
        Ok(path)
    }

    /// Edge indices along [`route`](Self::route), source side first.
    pub fn route_edges(&self, target: NodeId) -> Result<Vec<usize>> {
        self.check_target(target)?;
        let mut edges = Vec::new();
        let mut v = target;
        while v != self.source {
            let (u, k) = self.preds[v][0];
            edges.push(k);
            v = u;
        }
        edges.reverse();
        Ok(edges)
    }

    /// Per-node and per-edge counts of the shortest paths to `target` that
    /// pass through each element.
    pub fn counts_to(&self, graph: &MallGraph, target: NodeId) -> Result<PathCounts> {
        self.check_target(target)?;
        let mut tau = vec![0u64; self.dist.len()];
        tau[target] = 1;
        let mut through_edge = vec![0u64; graph.num_edges()];
        for &w in self.order.iter().rev() {
            if tau[w] == 0 {
                continue;
            }
            for &(u, k) in &self.preds[w] {
                tau[u] += tau[w];
                through_edge[k] += self.sigma[u] * tau[w];
            }
        }
        let through_node = self.sigma.iter().zip(&tau).map(|(s, t)| s * t).collect();
        Ok(PathCounts {
            count: self.sigma[target],
            length: self.dist[target],
            through_node,
            through_edge,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathCounts {
    pub count: u64,
    pub length: f64,
    /// Indexed by node id.
    pub through_node: Vec<u64>,
    /// Indexed by stored edge index.
    pub through_edge: Vec<u64>,
}

/// One minimum-length route from `source` to `target`.
///
/// Among equal-length alternatives the predecessor with the smaller node id
/// is preferred at every step, walking back from the target.
pub fn shortest_path(graph: &MallGraph, source: NodeId, target: NodeId) -> Result<Vec<NodeId>> {
    graph.node(target)?;
    ShortestPathDag::new(graph, source)?.route(target)
}

pub fn count_shortest_paths(graph: &MallGraph, source: NodeId, target: NodeId) -> Result<PathCounts> {
    graph.node(target)?;
    ShortestPathDag::new(graph, source)?.counts_to(graph, target)
}

/// Edge betweenness `c_k = 2/(V(V-1)) * sum over unordered pairs of the
/// number of shortest paths through edge k`, in canonical edge order.
pub fn edge_betweenness(graph: &MallGraph) -> Result<Vec<f64>> {
    let n = graph.num_nodes();
    if n == 0 {
        return Ok(Vec::new());
    }
    if reachable_from(graph, 0).iter().any(|r| !r) {
        return Err(GraphError::DisconnectedGraph);
    }
    let mut acc = vec![0u64; graph.num_edges()];
    let mut rho = vec![0u64; n];
    for s in 0..n {
        let dag = ShortestPathDag::new(graph, s)?;
        for (v, r) in rho.iter_mut().enumerate() {
            *r = u64::from(v > s);
        }
        for &w in dag.order.iter().rev() {
            for &(u, k) in &dag.preds[w] {
                rho[u] += rho[w];
                acc[k] += dag.sigma[u] * rho[w];
            }
        }
    }
    let scale = if n > 1 { 2.0 / (n as f64 * (n as f64 - 1.0)) } else { 0.0 };
    Ok(graph
        .canonical_order()
        .iter()
        .map(|&k| scale * acc[k] as f64)
        .collect())
}
