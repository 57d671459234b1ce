//! Trains on one generated mall and reports test metrics.
//!
//! cargo run --release --example train_single_mall -- [shops] [samples] [epochs] [batch]

use std::time::Instant;

use mallflow::gnn::ModelConfig;
use mallflow::graph::{generate_mall, CorridorStyle, MallSpec};
use mallflow::pipeline::{build_dataset, default_train_count, evaluate, train, TrainConfig};
use mallflow::prob::{AttractionParams, CountMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let shops = args.first().copied().unwrap_or(50);
    let samples = args.get(1).copied().unwrap_or(200);
    let epochs = args.get(2).copied().unwrap_or(20);
    let batch = args.get(3).copied().unwrap_or(4);

    let start = Instant::now();
    let mall = generate_mall(&MallSpec::new(shops, 2, CorridorStyle::Loop, 0))?;
    println!("mall {}: {} nodes, {} edges", mall.mall_id(), mall.num_nodes(), mall.num_edges());
    let mut data = build_dataset(vec![mall], samples, &AttractionParams::default(), 0, CountMode::Expected)?;
    let split = data.split(default_train_count(samples), 0)?;

    let model = ModelConfig::default().without_graph_features();
    let cfg = TrainConfig {
        epochs,
        batch,
        ..Default::default()
    };
    let out = train(&data.samples, &split.train, &split.test, &model, &cfg, None)?;
    for p in &out.curve {
        println!("epoch {:>3}  train {:.5}  test {:.5}", p.epoch, p.train_l1, p.test_l1.unwrap_or(f64::NAN));
    }
    let eval = evaluate(&data.samples, &split.test, &out.store, &model)?;
    println!("test mae {:.5}  r {:.4}  ({:.1?})", eval.metrics.mae, eval.metrics.pearson_r, start.elapsed());
    Ok(())
}
