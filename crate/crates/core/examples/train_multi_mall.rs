//! Trains on three malls with and without graph-level features and saves the
//! better checkpoint.
//!
//! cargo run --release --example train_multi_mall -- [samples] [epochs] [batch]

use mallflow::gnn::{Checkpoint, ModelConfig};
use mallflow::graph::{generate_mall, CorridorStyle, MallSpec};
use mallflow::pipeline::{build_dataset, default_train_count, evaluate, train, TrainConfig};
use mallflow::prob::{AttractionParams, CountMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let samples = args.first().copied().unwrap_or(200);
    let epochs = args.get(1).copied().unwrap_or(20);
    let batch = args.get(2).copied().unwrap_or(4);

    let malls = vec![
        generate_mall(&MallSpec::new(40, 2, CorridorStyle::Loop, 0))?,
        generate_mall(&MallSpec::new(50, 3, CorridorStyle::Grid, 1))?,
        generate_mall(&MallSpec::new(60, 2, CorridorStyle::Spine, 2))?,
    ];
    let mut data = build_dataset(malls, samples, &AttractionParams::default(), 0, CountMode::Expected)?;
    let split = data.split(default_train_count(samples), 0)?;
    let cfg = TrainConfig {
        epochs,
        batch,
        ..Default::default()
    };

    let mut best: Option<(f64, Checkpoint)> = None;
    for model in [ModelConfig::default(), ModelConfig::default().without_graph_features()] {
        let out = train(&data.samples, &split.train, &split.test, &model, &cfg, None)?;
        let m = evaluate(&data.samples, &split.test, &out.store, &model)?.metrics;
        println!(
            "graph features {:<5}: test mae {:.4}, r {:.4}",
            model.include_graph_features, m.mae, m.pearson_r
        );
        if best.as_ref().is_none_or(|(r, _)| m.pearson_r > *r) {
            best = Some((
                m.pearson_r,
                Checkpoint {
                    config: model,
                    store: out.store,
                },
            ));
        }
    }
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.json");
    best.expect("two runs").1.save(&path)?;
    println!("best checkpoint: {} bytes", std::fs::metadata(&path)?.len());
    Ok(())
}
