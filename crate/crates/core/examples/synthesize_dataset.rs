//! Builds, splits and saves a three-mall dataset, then reloads it.
//!
//! cargo run --release --example synthesize_dataset -- [out_dir]

use mallflow::graph::{generate_mall, CorridorStyle, MallSpec};
use mallflow::pipeline::{build_dataset, default_train_count, Dataset};
use mallflow::prob::{AttractionParams, CountMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| tmp.path().join("dataset"));
    let malls = vec![
        generate_mall(&MallSpec::new(20, 2, CorridorStyle::Loop, 0))?,
        generate_mall(&MallSpec::new(25, 3, CorridorStyle::Grid, 1))?,
        generate_mall(&MallSpec::new(30, 2, CorridorStyle::Spine, 2))?,
    ];
    let samples = 50;
    let mut data = build_dataset(malls, samples, &AttractionParams::default(), 42, CountMode::Expected)?;
    let split = data.split(default_train_count(samples), 42)?;
    data.save(&out)?;
    println!(
        "{}: {} samples, {} train / {} test",
        out.display(),
        data.samples.len(),
        split.train.len(),
        split.test.len()
    );
    let back = Dataset::load(&out)?;
    assert_eq!(back, data);
    println!("reloaded dataset is identical");
    Ok(())
}
