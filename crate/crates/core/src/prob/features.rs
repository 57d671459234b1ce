use super::{ClassCounts, Result, RoutingTable, ShopAssignment, CATEGORIES};
use crate::graph::{MallGraph, NodeKind};

/// Width of every node feature row.
pub const NODE_FEATURES: usize = 2 * CATEGORIES;
/// Width of the graph-level feature vector.
pub const GRAPH_FEATURES: usize = 3 + CATEGORIES * CATEGORIES + 4;

/// Per non-shop node (ascending id order): for each area category, the
/// number of entrance-to-shop shortest paths through the node summed over
/// shops of that category, divided by the category's shop count; then the
/// same over usage categories.
pub fn nonshop_features(graph: &MallGraph, assignment: &ShopAssignment) -> Result<Vec<[f64; NODE_FEATURES]>> {
    RoutingTable::new(graph)?.nonshop_features(assignment)
}

impl RoutingTable {
    pub fn nonshop_features(&self, assignment: &ShopAssignment) -> Result<Vec<[f64; NODE_FEATURES]>> {
        if assignment.shops() != self.shops() {
            return Err(super::ProbError::InvalidAssignment(
                "assignment does not cover this mall's shops".into(),
            ));
        }
        let counts = assignment.counts();
        let area_n = counts.area_marginal();
        let usage_n = counts.usage_marginal();
        let mut acc = vec![[0u64; NODE_FEATURES]; self.num_nonshop()];
        for e in 0..self.entrances().len() {
            for (s, pair) in assignment.pairs().iter().enumerate() {
                let a = pair.area() - 1;
                let u = CATEGORIES + pair.usage() - 1;
                for &(row, c) in self.through(e, s) {
                    acc[row as usize][a] += c;
                    acc[row as usize][u] += c;
                }
            }
        }
        let norm = |m: usize| {
            let n = if m < CATEGORIES { area_n[m] } else { usage_n[m - CATEGORIES] };
            if n == 0 { 0.0 } else { 1.0 / n as f64 }
        };
        Ok(acc
            .into_iter()
            .map(|row| {
                let mut f = [0.0; NODE_FEATURES];
                for m in 0..NODE_FEATURES {
                    f[m] = row[m] as f64 * norm(m);
                }
                f
            })
            .collect())
    }
}

/// `[V_s, V_ns, V_e]`, the 25 cell counts (area-major), then how many nodes
/// have degree 1, 2, 3 and 4 or more.
pub fn graph_features(graph: &MallGraph, counts: &ClassCounts) -> [f64; GRAPH_FEATURES] {
    let mut f = [0.0; GRAPH_FEATURES];
    let n_shop = graph.count_kind(NodeKind::Shop);
    f[0] = n_shop as f64;
    f[1] = (graph.num_nodes() - n_shop) as f64;
    f[2] = graph.count_kind(NodeKind::Entrance) as f64;
    for (c, &n) in counts.flatten().iter().enumerate() {
        f[3 + c] = n as f64;
    }
    for (d, &n) in graph.degree_histogram().iter().enumerate() {
        f[3 + CATEGORIES * CATEGORIES + d] = n as f64;
    }
    f
}

#[cfg(test)]
mod tests {
    use super::super::{assign_features, class_counts, AttractionParams, CategoryPair};
    use super::*;
    use crate::graph::{count_shortest_paths, fixtures, generate_mall, CorridorStyle, MallSpec};

    #[test]
    fn chain_features() {
        let g = fixtures::chain();
        let a = ShopAssignment::from_pairs(&g, &[(2, CategoryPair::new(2, 4).unwrap())]).unwrap();
        let f = nonshop_features(&g, &a).unwrap();
        let expected = [0., 1., 0., 0., 0., 0., 0., 0., 1., 0.];
        assert_eq!(f, vec![expected, expected]);

        let gf = graph_features(&g, &a.counts());
        let mut want = [0.0; 32];
        want[..3].copy_from_slice(&[1., 2., 1.]);
        want[3 + 5 + 3] = 1.0;
        want[28..].copy_from_slice(&[2., 1., 0., 0.]);
        assert_eq!(gf, want);
    }

    #[test]
    fn off_path_node_is_zero() {
        let g = MallGraph::new(
            "spur",
            vec![
                (NodeKind::Entrance, [0.0, 0.0]),
                (NodeKind::Corridor, [1.0, 0.0]),
                (NodeKind::Corridor, [2.0, 0.0]),
                (NodeKind::Shop, [1.0, 1.0]),
            ],
            &[(0, 1), (1, 2), (1, 3)],
        )
        .unwrap();
        let a = ShopAssignment::from_pairs(&g, &[(3, CategoryPair::new(1, 1).unwrap())]).unwrap();
        let f = nonshop_features(&g, &a).unwrap();
        assert_eq!(f[2], [0.0; 10]);
        assert!(f[1][0] == 1.0 && f[1][5] == 1.0);
        // Categories with no shops carry zero.
        assert!(f[1][1..5].iter().all(|&x| x == 0.0));
    }

    /// Independent recomputation straight from per-pair path counts.
    #[test]
    fn matches_direct_path_counts() {
        let g = generate_mall(&MallSpec::new(24, 3, CorridorStyle::Grid, 4)).unwrap();
        let counts = class_counts(24, &AttractionParams::default());
        let a = assign_features(&g, &counts, 11).unwrap();
        let f = nonshop_features(&g, &a).unwrap();
        let nonshops = g.nonshop_ids();
        let (an, un) = (counts.area_marginal(), counts.usage_marginal());
        for (row, &l) in nonshops.iter().enumerate() {
            for m in 0..10 {
                let mut total = 0u64;
                for &e in &g.entrance_ids() {
                    for (&s, p) in a.shops().iter().zip(a.pairs()) {
                        let hit = if m < 5 { p.area() == m + 1 } else { p.usage() == m - 4 };
                        if hit {
                            total += count_shortest_paths(&g, e, s).unwrap().through_node[l];
                        }
                    }
                }
                let n = if m < 5 { an[m] } else { un[m - 5] };
                let want = if n == 0 { 0.0 } else { total as f64 / n as f64 };
                assert!((f[row][m] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn graph_features_vary_only_in_counts() {
        let g = generate_mall(&MallSpec::new(20, 2, CorridorStyle::Loop, 2)).unwrap();
        let c = class_counts(20, &AttractionParams::default());
        let mut c2 = c;
        c2.counts[2][2] -= 1;
        c2.counts[0][0] += 1;
        let (f1, f2) = (graph_features(&g, &c), graph_features(&g, &c2));
        assert_eq!(f1.len(), GRAPH_FEATURES);
        assert_eq!(f1[..3], f2[..3]);
        assert_eq!(f1[28..], f2[28..]);
        assert_ne!(f1[3..28], f2[3..28]);
    }
}
