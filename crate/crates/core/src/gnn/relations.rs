use std::sync::Arc;

use crate::autodiff::SegmentIndex;
use crate::graph::{MallGraph, NodeKind};

/// Message-passing structure of one mall, or of a disjoint union of malls.
///
/// Node rows are local per type: shop `r` is the `r`-th shop by ascending
/// id, likewise for non-shops. Edge endpoints index the stacked matrix
/// `[H_ns; H_s]`, so a shop row `r` appears as `n_nonshop + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationGraph {
    n_shop: usize,
    n_nonshop: usize,
    s2ns: Arc<SegmentIndex>,
    ns2s: Arc<SegmentIndex>,
    ns2ns: Arc<SegmentIndex>,
    edge_u: Arc<[usize]>,
    edge_v: Arc<[usize]>,
    edge_sample: Arc<[usize]>,
    sample_edges: Vec<usize>,
}

fn sorted_by_dst(mut pairs: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    pairs.sort_unstable_by_key(|&(s, d)| (d, s));
    pairs
}

fn index(pairs: Vec<(usize, usize)>, n_src: usize, n_dst: usize) -> Arc<SegmentIndex> {
    Arc::new(SegmentIndex::new(sorted_by_dst(pairs), n_src, n_dst).expect("local indices are in range"))
}

impl RelationGraph {
    pub fn new(graph: &MallGraph) -> Self {
        let mut local = vec![0usize; graph.num_nodes()];
        let (mut n_shop, mut n_nonshop) = (0, 0);
        for n in graph.nodes() {
            if n.kind == NodeKind::Shop {
                local[n.id] = n_shop;
                n_shop += 1;
            } else {
                local[n.id] = n_nonshop;
                n_nonshop += 1;
            }
        }
        let stacked = |id: usize| {
            if graph.kind(id).is_shop() {
                n_nonshop + local[id]
            } else {
                local[id]
            }
        };
        let (mut s2ns, mut ns2s, mut ns2ns) = (Vec::new(), Vec::new(), Vec::new());
        let (mut edge_u, mut edge_v) = (Vec::new(), Vec::new());
        for slot in 0..graph.num_edges() {
            let e = graph.canonical_edge(slot);
            let (us, vs) = (graph.kind(e.u).is_shop(), graph.kind(e.v).is_shop());
            let (lu, lv) = (local[e.u], local[e.v]);
            match (us, vs) {
                (false, false) => {
                    ns2ns.push((lu, lv));
                    ns2ns.push((lv, lu));
                }
                (true, false) => {
                    s2ns.push((lu, lv));
                    ns2s.push((lv, lu));
                }
                (false, true) => {
                    s2ns.push((lv, lu));
                    ns2s.push((lu, lv));
                }
                // Rejected by validation; excluded from message passing.
                (true, true) => {}
            }
            edge_u.push(stacked(e.u));
            edge_v.push(stacked(e.v));
        }
        let n_edges = edge_u.len();
        RelationGraph {
            n_shop,
            n_nonshop,
            s2ns: index(s2ns, n_shop, n_nonshop),
            ns2s: index(ns2s, n_nonshop, n_shop),
            ns2ns: index(ns2ns, n_nonshop, n_nonshop),
            edge_u: edge_u.into(),
            edge_v: edge_v.into(),
            edge_sample: vec![0; n_edges].into(),
            sample_edges: vec![n_edges],
        }
    }

    /// Disjoint union; node and edge blocks keep the order of `parts`.
    pub fn union(parts: &[&RelationGraph]) -> Self {
        let n_shop: usize = parts.iter().map(|p| p.n_shop).sum();
        let n_nonshop: usize = parts.iter().map(|p| p.n_nonshop).sum();
        let (mut s2ns, mut ns2s, mut ns2ns) = (Vec::new(), Vec::new(), Vec::new());
        let (mut edge_u, mut edge_v, mut edge_sample) = (Vec::new(), Vec::new(), Vec::new());
        let mut sample_edges = Vec::new();
        let (mut so, mut no, mut sample) = (0, 0, 0);
        for p in parts {
            s2ns.extend(p.s2ns.pairs().iter().map(|&(s, d)| (s + so, d + no)));
            ns2s.extend(p.ns2s.pairs().iter().map(|&(s, d)| (s + no, d + so)));
            ns2ns.extend(p.ns2ns.pairs().iter().map(|&(s, d)| (s + no, d + no)));
            let remap = |x: usize| {
                if x < p.n_nonshop {
                    x + no
                } else {
                    n_nonshop + so + (x - p.n_nonshop)
                }
            };
            edge_u.extend(p.edge_u.iter().map(|&x| remap(x)));
            edge_v.extend(p.edge_v.iter().map(|&x| remap(x)));
            for (k, &count) in p.sample_edges.iter().enumerate() {
                edge_sample.extend(std::iter::repeat_n(sample + k, count));
                sample_edges.push(count);
            }
            so += p.n_shop;
            no += p.n_nonshop;
            sample += p.sample_edges.len();
        }
        RelationGraph {
            n_shop,
            n_nonshop,
            s2ns: index(s2ns, n_shop, n_nonshop),
            ns2s: index(ns2s, n_nonshop, n_shop),
            ns2ns: index(ns2ns, n_nonshop, n_nonshop),
            edge_u: edge_u.into(),
            edge_v: edge_v.into(),
            edge_sample: edge_sample.into(),
            sample_edges,
        }
    }

    pub fn num_shop(&self) -> usize {
        self.n_shop
    }

    pub fn num_nonshop(&self) -> usize {
        self.n_nonshop
    }

    pub fn num_edges(&self) -> usize {
        self.edge_u.len()
    }

    /// Number of graphs in the union.
    pub fn num_samples(&self) -> usize {
        self.sample_edges.len()
    }

    /// Edge count of each graph in the union, in order.
    pub fn sample_edges(&self) -> &[usize] {
        &self.sample_edges
    }

    pub fn shop_to_nonshop(&self) -> &Arc<SegmentIndex> {
        &self.s2ns
    }

    pub fn nonshop_to_shop(&self) -> &Arc<SegmentIndex> {
        &self.ns2s
    }

    pub fn nonshop_to_nonshop(&self) -> &Arc<SegmentIndex> {
        &self.ns2ns
    }

    /// Stacked-row endpoints of every edge, canonical order within a graph.
    pub fn edge_u(&self) -> &Arc<[usize]> {
        &self.edge_u
    }

    pub fn edge_v(&self) -> &Arc<[usize]> {
        &self.edge_v
    }

    /// Graph index of each edge row.
    pub fn edge_sample(&self) -> &Arc<[usize]> {
        &self.edge_sample
    }

    #[cfg(test)]
    pub(crate) fn with_swapped_endpoints(&self) -> Self {
        RelationGraph {
            edge_u: self.edge_v.clone(),
            edge_v: self.edge_u.clone(),
            ..self.clone()
        }
    }
}

/// Relation index sets of `graph`.
pub fn build_relations(graph: &MallGraph) -> RelationGraph {
    RelationGraph::new(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fixtures, generate_mall, CorridorStyle, MallSpec};

    #[test]
    fn chain_relations() {
        // Non-shops E=0, C=1 are local rows 0 and 1; the shop is local row 0.
        let r = build_relations(&fixtures::chain());
        assert_eq!(r.shop_to_nonshop().pairs(), &[(0, 1)]);
        assert_eq!(r.nonshop_to_shop().pairs(), &[(1, 0)]);
        assert_eq!(r.nonshop_to_nonshop().pairs(), &[(1, 0), (0, 1)]);
        assert_eq!(&*r.edge_u, &[0, 1]);
        assert_eq!(&*r.edge_v, &[1, 2]);
    }

    #[test]
    fn star_has_no_nonshop_pairs() {
        let g = MallGraph::new(
            "star",
            vec![
                (NodeKind::Entrance, [0.0, 0.0]),
                (NodeKind::Shop, [1.0, 0.0]),
                (NodeKind::Shop, [0.0, 1.0]),
            ],
            &[(0, 1), (0, 2)],
        )
        .unwrap();
        let r = build_relations(&g);
        assert!(r.nonshop_to_nonshop().pairs().is_empty());
        assert_eq!(r.shop_to_nonshop().pairs().len(), 2);
    }

    #[test]
    fn transpose_and_symmetry_on_generated_malls() {
        for style in [CorridorStyle::Loop, CorridorStyle::Grid, CorridorStyle::Spine] {
            for seed in 0..4 {
                let g = generate_mall(&MallSpec::new(25, 3, style, seed)).unwrap();
                let r = build_relations(&g);
                let mut fwd: Vec<_> = r.shop_to_nonshop().pairs().to_vec();
                let mut back: Vec<_> = r.nonshop_to_shop().pairs().iter().map(|&(a, b)| (b, a)).collect();
                fwd.sort_unstable();
                back.sort_unstable();
                assert_eq!(fwd, back);
                let nn = r.nonshop_to_nonshop().pairs();
                for &(a, b) in nn {
                    assert!(nn.contains(&(b, a)));
                }
                assert!(nn.windows(2).all(|w| (w[0].1, w[0].0) < (w[1].1, w[1].0)));
                assert_eq!(r.num_edges(), g.num_edges());
            }
        }
    }

    #[test]
    fn union_offsets() {
        let a = build_relations(&fixtures::chain());
        let u = RelationGraph::union(&[&a, &a]);
        assert_eq!((u.num_shop(), u.num_nonshop(), u.num_edges()), (2, 4, 4));
        // Stacked rows: non-shops 0..4, shops 4..6.
        assert_eq!(&*u.edge_u, &[0, 1, 2, 3]);
        assert_eq!(&*u.edge_v, &[1, 4, 3, 5]);
        assert_eq!(&*u.edge_sample, &[0, 0, 1, 1]);
        assert_eq!(u.shop_to_nonshop().pairs(), &[(0, 1), (1, 3)]);
        assert_eq!(u.sample_edges(), &[2, 2]);
    }
}
