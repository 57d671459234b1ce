//! Finite-difference check of the full model gradient on a small mall.

use mallflow::autodiff::{gradient_check, BnMode, GradCheck, Tensor};
use mallflow::gnn::{forward, init_params, GnnError, ModelConfig, ModelInput};
use mallflow::graph::{generate_mall, CorridorStyle, MallSpec};
use mallflow::pipeline::build_dataset;
use mallflow::prob::{AttractionParams, CountMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = generate_mall(&MallSpec::new(6, 1, CorridorStyle::Spine, 3))?;
    let data = build_dataset(vec![g], 1, &AttractionParams::default(), 0, CountMode::Expected)?;
    let s = &data.samples[0];
    let config = ModelConfig::default();
    let store = init_params(&config, 1)?;
    let y = Tensor::from_vec(s.num_edges(), 1, s.targets.clone())?;
    let report = gradient_check(
        &store,
        |tape, st| {
            let input = ModelInput {
                rel: &s.rel,
                shop_x: &s.shop_x,
                nonshop_x: &s.nonshop_x,
                graph_x: Some(&s.graph_x),
            };
            let f = forward(tape, st, &config, input, BnMode::Train).map_err(|e| match e {
                GnnError::Autodiff(a) => a,
                other => panic!("{other}"),
            })?;
            let target = tape.leaf(y.clone());
            tape.l1_loss(f.prediction, target)
        },
        &GradCheck::default(),
    )?;
    println!(
        "{} parameter tensors, {} scalars: {} coordinates checked, {} skipped on kinks, max relative error {:.2e} at {:?}",
        store.len(),
        store.scalar_count(),
        report.n_checked,
        report.n_excluded,
        report.max_rel_error,
        report.worst
    );
    Ok(())
}
