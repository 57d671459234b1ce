//! Draws a mall with edges coloured by their usage probability.
//!
//! cargo run --example render_svg -- [out.svg]

use mallflow::graph::{generate_mall, CorridorStyle, MallSpec};
use mallflow::prob::{assign_features, class_counts, compute_targets, AttractionParams};
use mallflow::report::render_svg;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "mall.svg".into());
    let params = AttractionParams::default();
    let g = generate_mall(&MallSpec::new(30, 3, CorridorStyle::Grid, 2))?;
    let a = assign_features(&g, &class_counts(g.shop_ids().len(), &params), 0)?;
    let t = compute_targets(&g, &a, &params)?;
    std::fs::write(&out, render_svg(&g, Some(&t.t)))?;
    println!("{out}: {} edges coloured from blue (least used) to red (most used)", t.len());
    Ok(())
}
