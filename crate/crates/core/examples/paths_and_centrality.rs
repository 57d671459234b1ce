//! Shortest routes, path counts and the most central corridor edges of a mall.

use mallflow::graph::{count_shortest_paths, edge_betweenness, generate_mall, shortest_path, CorridorStyle, MallSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = generate_mall(&MallSpec::new(16, 2, CorridorStyle::Grid, 4))?;
    let entrance = g.entrance_ids()[0];
    for &shop in g.shop_ids().iter().take(4) {
        let route = shortest_path(&g, entrance, shop)?;
        let counts = count_shortest_paths(&g, entrance, shop)?;
        println!(
            "entrance {entrance} -> shop {shop}: length {:.2} m, {} shortest paths, route {route:?}",
            counts.length, counts.count
        );
    }

    let c = edge_betweenness(&g)?;
    let mut ranked: Vec<usize> = (0..c.len()).collect();
    ranked.sort_by(|&a, &b| c[b].total_cmp(&c[a]));
    println!("most central edges (canonical slot, endpoints, c_k):");
    for &k in ranked.iter().take(5) {
        let e = g.canonical_edge(k);
        println!("  {k:>3} ({:>2}, {:>2}) {:.4}", e.u, e.v, c[k]);
    }
    Ok(())
}
