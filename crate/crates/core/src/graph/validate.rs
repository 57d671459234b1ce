use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use super::{EdgeType, MallGraph, NodeId};

/// One violated graph invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SelfLoop { edge: usize, node: NodeId },
    DuplicateEdge { edge: usize, u: NodeId, v: NodeId },
    ShopShopEdge { edge: usize, u: NodeId, v: NodeId },
    NonPositiveLength { edge: usize, u: NodeId, v: NodeId },
    NonFinitePosition { node: NodeId },
    ShopDegree { shop: NodeId, degree: usize },
    NoEntrance,
    UnreachableShop { shop: NodeId, entrance: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { edge, node } => write!(f, "edge {edge} is a self-loop on node {node}"),
            Violation::DuplicateEdge { edge, u, v } => {
                write!(f, "edge {edge} duplicates the pair ({u}, {v})")
            }
            Violation::ShopShopEdge { edge, u, v } => {
                write!(f, "edge {edge} joins two shops ({u}, {v})")
            }
            Violation::NonPositiveLength { edge, u, v } => {
                write!(f, "edge {edge} ({u}, {v}) has non-positive length")
            }
            Violation::NonFinitePosition { node } => {
                write!(f, "node {node} has a non-finite position")
            }
            Violation::ShopDegree { shop, degree } => {
                write!(f, "shop {shop} has degree {degree}, expected 1")
            }
            Violation::NoEntrance => write!(f, "graph has no entrance node"),
            Violation::UnreachableShop { shop, entrance } => {
                write!(f, "shop {shop} is unreachable from entrance {entrance}")
            }
        }
    }
}

/// Reports every violated invariant; an empty report means the graph is valid.
pub fn validate(graph: &MallGraph) -> Vec<Violation> {
    let mut report = Vec::new();

    for node in graph.nodes() {
        if !node.pos.iter().all(|c| c.is_finite()) {
            report.push(Violation::NonFinitePosition { node: node.id });
        }
    }

    let mut seen = BTreeSet::new();
    for (k, e) in graph.edges().iter().enumerate() {
        if e.u == e.v {
            report.push(Violation::SelfLoop { edge: k, node: e.u });
            continue;
        }
        if !seen.insert((e.u, e.v)) {
            report.push(Violation::DuplicateEdge { edge: k, u: e.u, v: e.v });
        }
        if graph.edge_type(k) == EdgeType::ShopShop {
            report.push(Violation::ShopShopEdge { edge: k, u: e.u, v: e.v });
        }
        if !(e.length > 0.0) {
            report.push(Violation::NonPositiveLength { edge: k, u: e.u, v: e.v });
        }
    }

    for shop in graph.shop_ids() {
        let degree = graph.degree(shop);
        if degree != 1 {
            report.push(Violation::ShopDegree { shop, degree });
        }
    }

    let entrances = graph.entrance_ids();
    if entrances.is_empty() {
        report.push(Violation::NoEntrance);
    }
    let shops = graph.shop_ids();
    for &entrance in &entrances {
        let reached = reachable_from(graph, entrance);
        for &shop in &shops {
            if !reached[shop] {
                report.push(Violation::UnreachableShop { shop, entrance });
            }
        }
    }
    report
}

/// Breadth-first reachability.
pub(crate) fn reachable_from(graph: &MallGraph, start: NodeId) -> Vec<bool> {
    let mut seen = vec![false; graph.num_nodes()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(n) = queue.pop_front() {
        for &(m, _) in graph.neighbors(n) {
            if !seen[m] {
                seen[m] = true;
                queue.push_back(m);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::chain;
    use super::super::NodeKind;
    use super::*;

    #[test]
    fn minimal_chain_is_valid() {
        assert!(validate(&chain()).is_empty());
    }

    #[test]
    fn shop_shop_edge_is_named() {
        let g = MallGraph::new(
            "ss",
            vec![
                (NodeKind::Entrance, [0.0, 0.0]),
                (NodeKind::Shop, [1.0, 0.0]),
                (NodeKind::Shop, [2.0, 0.0]),
            ],
            &[(0, 1), (1, 2)],
        )
        .unwrap();
        let report = validate(&g);
        assert!(report.contains(&Violation::ShopShopEdge { edge: 1, u: 1, v: 2 }));
        assert!(report.iter().any(|v| v.to_string().contains("(1, 2)")));
    }

    #[test]
    fn shop_with_degree_two_is_named() {
        let g = MallGraph::new(
            "deg",
            vec![
                (NodeKind::Entrance, [0.0, 0.0]),
                (NodeKind::Corridor, [1.0, 0.0]),
                (NodeKind::Shop, [0.5, 1.0]),
            ],
            &[(0, 1), (0, 2), (1, 2)],
        )
        .unwrap();
        let report = validate(&g);
        assert_eq!(report, vec![Violation::ShopDegree { shop: 2, degree: 2 }]);
    }

    #[test]
    fn duplicate_and_degenerate_edges() {
        let g = MallGraph::new(
            "dup",
            vec![
                (NodeKind::Entrance, [0.0, 0.0]),
                (NodeKind::Corridor, [0.0, 0.0]),
                (NodeKind::Shop, [1.0, 0.0]),
            ],
            &[(0, 1), (1, 0), (1, 2)],
        )
        .unwrap();
        let report = validate(&g);
        assert!(report.contains(&Violation::DuplicateEdge { edge: 1, u: 0, v: 1 }));
        assert!(report.contains(&Violation::NonPositiveLength { edge: 0, u: 0, v: 1 }));
    }

    #[test]
    fn isolated_shop_and_missing_entrance() {
        let g = MallGraph::new(
            "iso",
            vec![
                (NodeKind::Corridor, [0.0, 0.0]),
                (NodeKind::Corridor, [1.0, 0.0]),
                (NodeKind::Shop, [5.0, 5.0]),
            ],
            &[(0, 1)],
        )
        .unwrap();
        let report = validate(&g);
        assert!(report.contains(&Violation::NoEntrance));
        assert!(report.contains(&Violation::ShopDegree { shop: 2, degree: 0 }));
    }

    #[test]
    fn unreachable_shop_is_reported_per_entrance() {
        let g = MallGraph::new(
            "split",
            vec![
                (NodeKind::Entrance, [0.0, 0.0]),
                (NodeKind::Corridor, [1.0, 0.0]),
                (NodeKind::Corridor, [5.0, 0.0]),
                (NodeKind::Shop, [6.0, 0.0]),
            ],
            &[(0, 1), (2, 3)],
        )
        .unwrap();
        assert_eq!(
            validate(&g),
            vec![Violation::UnreachableShop { shop: 3, entrance: 0 }]
        );
    }
}
