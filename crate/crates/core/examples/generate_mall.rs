//! Generates one mall per corridor style, validates it and prints its JSON size.
//!
//! cargo run --example generate_mall -- [shops] [entrances] [seed]

use mallflow::graph::{generate_mall, to_json_string, validate, CorridorStyle, MallSpec, NodeKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let shops = args.first().copied().unwrap_or(30) as usize;
    let entrances = args.get(1).copied().unwrap_or(2) as usize;
    let seed = args.get(2).copied().unwrap_or(0);

    for style in [CorridorStyle::Loop, CorridorStyle::Grid, CorridorStyle::Spine] {
        let g = generate_mall(&MallSpec::new(shops, entrances, style, seed))?;
        assert!(validate(&g).is_empty());
        println!(
            "{:<24} {:>3} shops {:>3} corridors {:>2} entrances {:>3} edges, degrees {:?}, {} bytes of JSON",
            g.mall_id(),
            g.count_kind(NodeKind::Shop),
            g.count_kind(NodeKind::Corridor),
            g.count_kind(NodeKind::Entrance),
            g.num_edges(),
            g.degree_histogram(),
            to_json_string(&g).len()
        );
    }
    Ok(())
}
