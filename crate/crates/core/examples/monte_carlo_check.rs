//! Simulated shoppers against the closed-form edge usage, at growing walker counts.

use mallflow::graph::{generate_mall, CorridorStyle, MallSpec};
use mallflow::prob::{assign_features, binomial_agreement, class_counts, AttractionParams, RoutingTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = AttractionParams::default();
    let g = generate_mall(&MallSpec::new(40, 3, CorridorStyle::Grid, 5))?;
    let routing = RoutingTable::new(&g)?;
    let a = assign_features(&g, &class_counts(routing.shops().len(), &params), 11)?;
    let exact = routing.targets(&a, &params)?;
    for walkers in [100, 1_000, 10_000, 100_000] {
        let mc = routing.monte_carlo(&a, &params, walkers, 3)?;
        let agree = binomial_agreement(&exact, &mc, walkers);
        println!(
            "{walkers:>7} walkers: max |t_hat - t| {:.5}, within 3 sigma {}/{} edges",
            agree.max_abs_diff, agree.n_within, agree.n_edges
        );
    }
    Ok(())
}
