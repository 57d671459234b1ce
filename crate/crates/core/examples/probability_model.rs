//! Attraction probabilities, class counts, a seeded shop assignment, and the
//! resulting per-edge usage targets and non-shop features.

use mallflow::graph::{generate_mall, CorridorStyle, MallSpec};
use mallflow::prob::{
    area_probability, assign_features, bin_masses, class_counts, compute_targets, nonshop_features,
    usage_probability, AttractionParams, CATEGORIES,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = AttractionParams::default();
    let pa: Vec<String> = (1..=CATEGORIES)
        .map(|i| format!("{:.4}", area_probability(i, params.m_a).unwrap()))
        .collect();
    let pu: Vec<String> = (1..=CATEGORIES)
        .map(|j| format!("{:.4}", usage_probability(j, params.m_u).unwrap()))
        .collect();
    println!("area probabilities  {}", pa.join(" "));
    println!("usage probabilities {}", pu.join(" "));
    println!("bin masses at sigma {}: {:.4?}", params.sigma_a, bin_masses(params.sigma_a));

    let g = generate_mall(&MallSpec::new(40, 2, CorridorStyle::Loop, 1))?;
    let counts = class_counts(g.shop_ids().len(), &params);
    println!("area marginal {:?}, usage marginal {:?}", counts.area_marginal(), counts.usage_marginal());

    let a = assign_features(&g, &counts, 7)?;
    let t = compute_targets(&g, &a, &params)?;
    let busiest = t.t.iter().copied().fold(0.0, f64::max);
    println!(
        "{} edge targets, sum {:.3}, busiest edge {:.4}",
        t.len(),
        t.t.iter().sum::<f64>(),
        busiest
    );
    let f = nonshop_features(&g, &a)?;
    println!("first non-shop feature row {:.3?}", f[0]);
    Ok(())
}
