//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use mallflow::graph::{
    count_shortest_paths, edge_betweenness, shortest_path, MallGraph, NodeKind, ShortestPathDag, TIE_TOLERANCE,
};

/// Connected graph on `n` distinct points of a 4x4 integer lattice. Lattice
/// lengths make equal-length alternatives common.
pub fn random_lattice_graph<R: Rng>(rng: &mut R, n: usize) -> MallGraph {
    assert!((2..=16).contains(&n));
    let mut cells: Vec<(i32, i32)> = (0..4).flat_map(|x| (0..4).map(move |y| (x, y))).collect();
    cells.shuffle(rng);
    let nodes: Vec<(NodeKind, [f64; 2])> = cells[..n]
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let kind = if i == 0 { NodeKind::Entrance } else { NodeKind::Corridor };
            (kind, [x as f64, y as f64])
        })
        .collect();
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    for _ in 0..rng.gen_range(0..=n) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let e = (a.min(b), a.max(b));
        if a != b && !edges.iter().any(|&(u, v)| (u.min(v), u.max(v)) == e) {
            edges.push(e);
        }
    }
    MallGraph::new("lattice", nodes, &edges).expect("valid lattice graph")
}

/// Every simple path from `s` to `t` as (length, nodes, edge indices).
pub fn simple_paths(g: &MallGraph, s: usize, t: usize) -> Vec<(f64, Vec<usize>, Vec<usize>)> {
    fn walk(
        g: &MallGraph,
        t: usize,
        nodes: &mut Vec<usize>,
        edges: &mut Vec<usize>,
        len: f64,
        seen: &mut [bool],
        out: &mut Vec<(f64, Vec<usize>, Vec<usize>)>,
    ) {
        let v = *nodes.last().unwrap();
        if v == t {
            out.push((len, nodes.clone(), edges.clone()));
            return;
        }
        for &(w, k) in g.neighbors(v) {
            if seen[w] {
                continue;
            }
            seen[w] = true;
            nodes.push(w);
            edges.push(k);
            walk(g, t, nodes, edges, len + g.edges()[k].length, seen, out);
            nodes.pop();
            edges.pop();
            seen[w] = false;
        }
    }
    let mut seen = vec![false; g.num_nodes()];
    seen[s] = true;
    let mut out = Vec::new();
    walk(g, t, &mut vec![s], &mut Vec::new(), 0.0, &mut seen, &mut out);
    out
}

/// The minimum-length simple paths from `s` to `t`, using the library's
/// relative tie tolerance.
pub fn brute_shortest(g: &MallGraph, s: usize, t: usize) -> (f64, Vec<(Vec<usize>, Vec<usize>)>) {
    let all = simple_paths(g, s, t);
    let best = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let shortest = all
        .into_iter()
        .filter(|p| p.0 - best <= TIE_TOLERANCE * p.0.max(best))
        .map(|(_, n, e)| (n, e))
        .collect();
    (best, shortest)
}

/// Brute-force edge betweenness in canonical order, plus the raw integer
/// path-through counts it is built from.
pub fn brute_betweenness(g: &MallGraph) -> (Vec<f64>, Vec<u64>) {
    let n = g.num_nodes();
    let mut acc = vec![0u64; g.num_edges()];
    for s in 0..n {
        for t in s + 1..n {
            for (_, edges) in brute_shortest(g, s, t).1 {
                for k in edges {
                    acc[k] += 1;
                }
            }
        }
    }
    let scale = 2.0 / (n as f64 * (n as f64 - 1.0));
    let canon: Vec<u64> = g.canonical_order().iter().map(|&k| acc[k]).collect();
    (canon.iter().map(|&c| scale * c as f64).collect(), canon)
}

/// Lexicographically smallest reversed path: the route chosen by always
/// taking the smallest-id predecessor from the target back.
fn tie_broken(paths: &[(Vec<usize>, Vec<usize>)]) -> Vec<usize> {
    paths
        .iter()
        .map(|(n, _)| n.iter().rev().copied().collect::<Vec<_>>())
        .min()
        .map(|mut r| {
            r.reverse();
            r
        })
        .unwrap()
}

/// Returns how many (s, t) pairs had more than one shortest path.
pub fn check_graph(seed: u64, n: usize) -> usize {
    let mut ties = 0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let g = random_lattice_graph(&mut rng, n);
    for s in 0..n {
        let dag = ShortestPathDag::new(&g, s).unwrap();
        for t in 0..n {
            let (best, paths) = brute_shortest(&g, s, t);
            assert!((dag.distance(t) - best).abs() <= 1e-12 * best.max(1.0), "seed {seed} {s}->{t}");
            let pc = count_shortest_paths(&g, s, t).unwrap();
            assert_eq!(pc.count, paths.len() as u64, "seed {seed} {s}->{t}");
            ties += usize::from(paths.len() > 1);
            let mut through = vec![0u64; g.num_edges()];
            let mut through_node = vec![0u64; n];
            for (nodes, edges) in &paths {
                for &k in edges {
                    through[k] += 1;
                }
                for &v in nodes {
                    through_node[v] += 1;
                }
            }
            assert_eq!(pc.through_edge, through, "seed {seed} {s}->{t}");
            assert_eq!(pc.through_node, through_node, "seed {seed} {s}->{t}");
            assert_eq!(shortest_path(&g, s, t).unwrap(), tie_broken(&paths), "seed {seed} {s}->{t}");
        }
    }
    let (want, raw) = brute_betweenness(&g);
    let got = edge_betweenness(&g).unwrap();
    let pairs = (n * (n - 1) / 2) as f64;
    for (k, (&c, &w)) in got.iter().zip(&want).enumerate() {
        assert_eq!((c * pairs).round() as u64, raw[k], "seed {seed} edge {k}");
        assert!((c - w).abs() <= 1e-12, "seed {seed} edge {k}: {c} vs {w}");
    }
    ties
}
