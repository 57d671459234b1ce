//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mallflow::autodiff::{gradient_check, BnMode, GradCheck};
use mallflow::gnn::{forward, init_params, parameter_count, GnnError, ModelConfig, ModelInput};
use mallflow::graph::{generate_mall, CorridorStyle, MallGraph, MallSpec};
use mallflow::pipeline::{build_dataset, evaluate, train, TrainConfig};
use mallflow::prob::{
    area_probability, assign_features, attraction, binomial_agreement, class_counts, usage_probability,
    AttractionParams, CategoryPair, CountMode, RoutingTable, CATEGORIES,
};
use mallflow::seed::{derive_seed, tag};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, start: Instant, o: Outcome) -> Outcome {
    let t = start.elapsed();
    if t > limit {
        outcome(false, format!("{}; took {t:.1?}, limit {limit:?}", o.detail))
    } else {
        o
    }
}

fn normalization() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m_a = 10f64.powf(rng.gen_range(-2.0..2.0));
        let m_u = 10f64.powf(rng.gen_range(-2.0..2.0));
        let params = AttractionParams {
            m_a,
            m_u,
            ..Default::default()
        };
        let sa: f64 = (1..=CATEGORIES).map(|i| area_probability(i, m_a).unwrap()).sum();
        let su: f64 = (1..=CATEGORIES).map(|j| usage_probability(j, m_u).unwrap()).sum();
        let sp: f64 = (1..=CATEGORIES)
            .flat_map(|i| (1..=CATEGORIES).map(move |j| (i, j)))
            .map(|(i, j)| attraction(CategoryPair::new(i, j).unwrap(), &params).unwrap())
            .sum();
        worst = worst.max((sa - 1.0).abs()).max((su - 1.0).abs()).max((sp - 1.0).abs());
    }
    within(
        Duration::from_secs(1),
        start,
        outcome(worst <= 1e-12, format!("max |sum - 1| = {worst:.2e} over 100 slope pairs")),
    )
}

fn five_malls() -> Vec<MallGraph> {
    [
        (20, 2, CorridorStyle::Loop),
        (30, 3, CorridorStyle::Grid),
        (40, 2, CorridorStyle::Spine),
        (50, 4, CorridorStyle::Loop),
        (60, 3, CorridorStyle::Grid),
    ]
    .iter()
    .enumerate()
    .map(|(p, &(s, e, style))| generate_mall(&MallSpec::new(s, e, style, p as u64)).unwrap())
    .collect()
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let params = AttractionParams::default();
    let walkers = 100_000;
    let mut lines = Vec::new();
    let mut pass = true;
    for (p, g) in five_malls().iter().enumerate() {
        let routing = RoutingTable::new(g).unwrap();
        let counts = class_counts(routing.shops().len(), &params);
        let a = assign_features(g, &counts, derive_seed(0, p as u64, 0)).unwrap();
        let exact = routing.targets(&a, &params).unwrap();
        let mc = routing
            .monte_carlo(&a, &params, walkers, derive_seed(0, p as u64, tag::MONTE_CARLO))
            .unwrap();
        let agree = binomial_agreement(&exact, &mc, walkers);
        pass &= agree.passes(0.99);
        lines.push(format!("{}/{}", agree.n_within, agree.n_edges));
    }
    within(
        Duration::from_secs(60),
        start,
        outcome(pass, format!("edges within 3-sigma bound per mall: {}", lines.join(", "))),
    )
}

fn entrance_flow() -> Outcome {
    let start = Instant::now();
    let malls = five_malls();
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for q in 0..50 {
        let g = &malls[q % malls.len()];
        let entrances = g.entrance_ids();
        // Every tenth sample uses a random entrance prior.
        let params = if q % 10 == 9 {
            let raw: Vec<f64> = entrances.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            AttractionParams {
                entrance_weights: Some(raw.iter().map(|w| w / s).collect()),
                ..Default::default()
            }
        } else {
            AttractionParams::default()
        };
        let weights = params.weights_for(entrances.len()).unwrap();
        let routing = RoutingTable::new(g).unwrap();
        let counts = class_counts(routing.shops().len(), &params);
        let a = assign_features(g, &counts, derive_seed(9, q as u64, 0)).unwrap();
        let t = routing.targets(&a, &params).unwrap().t;
        for (&e, &w) in entrances.iter().zip(&weights) {
            if g.degree(e) != 1 {
                continue;
            }
            let k = g.neighbors(e)[0].1;
            worst = worst.max((t[g.canonical_position(k)] - w).abs());
            checked += 1;
        }
    }
    within(
        Duration::from_secs(30),
        start,
        outcome(
            checked > 0 && worst <= 1e-12,
            format!("{checked} entrance edges over 50 samples, max |t - w| = {worst:.2e}"),
        ),
    )
}

fn path_oracle() -> Outcome {
    let start = Instant::now();
    let mut ties = 0;
    for seed in 0..100u64 {
        ties += common::check_graph(1000 + seed, 2 + (seed as usize % 11));
    }
    within(
        Duration::from_secs(30),
        start,
        outcome(true, format!("100 graphs of 2-12 nodes agree; {ties} pairs with tied shortest paths")),
    )
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let g = generate_mall(&MallSpec::new(6, 1, CorridorStyle::Spine, 3)).unwrap();
    let n_nodes = g.num_nodes();
    let data = build_dataset(vec![g], 1, &AttractionParams::default(), 0, CountMode::Expected).unwrap();
    let s = &data.samples[0];
    let config = ModelConfig::default();
    let store = init_params(&config, 1).unwrap();
    let targets = mallflow::autodiff::Tensor::from_vec(s.num_edges(), 1, s.targets.clone()).unwrap();
    let cfg = GradCheck {
        max_coords: 240,
        ..Default::default()
    };
    let report = gradient_check(
        &store,
        |t, st| {
            let input = ModelInput {
                rel: &s.rel,
                shop_x: &s.shop_x,
                nonshop_x: &s.nonshop_x,
                graph_x: Some(&s.graph_x),
            };
            let f = forward(t, st, &config, input, BnMode::Train).map_err(|e| match e {
                GnnError::Autodiff(a) => a,
                other => panic!("{other}"),
            })?;
            let y = t.leaf(targets.clone());
            t.l1_loss(f.prediction, y)
        },
        &cfg,
    )
    .unwrap();
    within(
        Duration::from_secs(30),
        start,
        outcome(
            n_nodes == 10 && report.n_checked >= 200 && report.max_rel_error < 1e-4,
            format!(
                "{n_nodes}-node mall, {} coordinates checked ({} on kinks skipped), max relative error {:.2e}",
                report.n_checked, report.n_excluded, report.max_rel_error
            ),
        ),
    )
}

fn overfit() -> Outcome {
    let start = Instant::now();
    let g = generate_mall(&MallSpec::new(12, 2, CorridorStyle::Loop, 0)).unwrap();
    let data = build_dataset(vec![g], 1, &AttractionParams::default(), 0, CountMode::Expected).unwrap();
    let cfg = TrainConfig {
        epochs: 500,
        batch: 1,
        lr: 1e-3,
        seed: 0,
    };
    let out = train(&data.samples, &[0], &[], &ModelConfig::default(), &cfg, None).unwrap();
    let last = out.curve.last().unwrap().train_l1;
    within(
        Duration::from_secs(120),
        start,
        outcome(last < 0.01, format!("train L1 after 500 epochs = {last:.5}")),
    )
}

/// Shared protocol for the training criteria: S = 200, 160/40 split, 20
/// epochs of Adam at lr 1e-3 over batches of 4 graphs. Returns (r, test L1
/// after epoch 1, final test L1).
fn protocol(malls: Vec<MallGraph>, model: &ModelConfig) -> (f64, f64, f64) {
    let mut data = build_dataset(malls, 200, &AttractionParams::default(), 0, CountMode::Expected).unwrap();
    let split = data.split(160, 0).unwrap();
    let cfg = TrainConfig {
        epochs: 20,
        batch: 4,
        lr: 1e-3,
        seed: 0,
    };
    let out = train(&data.samples, &split.train, &split.test, model, &cfg, None).unwrap();
    let ev = evaluate(&data.samples, &split.test, &out.store, model).unwrap();
    (ev.metrics.pearson_r, out.curve[0].test_l1.unwrap(), ev.metrics.mae)
}

fn single_mall() -> Outcome {
    let start = Instant::now();
    let g = generate_mall(&MallSpec::new(50, 2, CorridorStyle::Loop, 0)).unwrap();
    let (r, first, last) = protocol(vec![g], &ModelConfig::default().without_graph_features());
    within(
        Duration::from_secs(600),
        start,
        outcome(
            r >= 0.9 && last < 0.5 * first,
            format!("test r = {r:.4}, test L1 {first:.4} after epoch 1 -> {last:.4}"),
        ),
    )
}

fn multi_mall() -> Outcome {
    let start = Instant::now();
    let malls = || {
        vec![
            generate_mall(&MallSpec::new(40, 2, CorridorStyle::Loop, 0)).unwrap(),
            generate_mall(&MallSpec::new(50, 3, CorridorStyle::Grid, 1)).unwrap(),
            generate_mall(&MallSpec::new(60, 2, CorridorStyle::Spine, 2)).unwrap(),
        ]
    };
    let (r_with, ..) = protocol(malls(), &ModelConfig::default());
    let (r_without, ..) = protocol(malls(), &ModelConfig::default().without_graph_features());
    within(
        Duration::from_secs(1800),
        start,
        outcome(
            r_with >= 0.85 && r_without <= r_with,
            format!("test r = {r_with:.4} with graph features, {r_without:.4} without"),
        ),
    )
}

fn parameters() -> Outcome {
    let config = ModelConfig::default();
    let count = parameter_count(&config);
    let stored = init_params(&config, 0).unwrap().scalar_count();
    let range = if (18_000..=200_000).contains(&count) {
        "inside"
    } else {
        "below"
    };
    outcome(
        count == 17_745 && stored == count,
        format!("{count} parameters, {stored} stored scalars ({range} the 18,000-200,000 range quoted for the reference models)"),
    )
}

fn run_cli(dir: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_mallflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.code().is_some_and(|c| c <= 1),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn pipeline_outputs(dir: &Path) {
    run_cli(dir, &["gen", "--malls", "2", "--shops", "12", "--style", "grid", "--seed", "3", "-o", "malls"]);
    run_cli(dir, &["synth", "--malls", "malls", "--samples", "10", "--seed", "4", "-o", "data"]);
    run_cli(dir, &["synth", "--malls", "malls", "--samples", "4", "--counts", "sampled", "-o", "data_s"]);
    run_cli(dir, &["train", "--dataset", "data", "--epochs", "3", "--batch", "4", "--seed", "5"]);
    run_cli(dir, &["eval", "--model", "model.json", "--dataset", "data"]);
    let mall = "malls/grid-s12-e2-seed3.json";
    run_cli(dir, &["centrality", "--mall", mall, "-o", "c.csv"]);
    run_cli(dir, &["mc-check", "--mall", mall, "--walkers", "5000", "--report", "mc.json"]);
    run_cli(dir, &["render", "--mall", mall, "--values", "c.csv", "-o", "c.svg"]);
}

/// Every file under `dir`, run manifests with their timing removed.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p.strip_prefix(dir).unwrap().display().to_string();
            let mut bytes = std::fs::read(&p).unwrap();
            if rel.ends_with("run.json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                v.as_object_mut().unwrap().remove("duration_s");
                bytes = v.to_string().into_bytes();
            }
            out.insert(rel, bytes);
        }
    }
    out
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline_outputs(a.path());
    pipeline_outputs(b.path());
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    let differing: Vec<&String> = sa.keys().filter(|k| sa.get(*k) != sb.get(*k)).collect();
    outcome(
        sa.len() == sb.len() && differing.is_empty() && sa.len() > 30,
        if differing.is_empty() {
            format!("{} output files identical across two runs of 8 commands", sa.len())
        } else {
            format!("differing outputs: {differing:?}")
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("probability normalization", normalization),
        ("targets match Monte Carlo walkers", monte_carlo),
        ("entrance edges carry the entrance weight", entrance_flow),
        ("shortest paths and betweenness match enumeration", path_oracle),
        ("gradients match central differences", gradients),
        ("single-sample overfit", overfit),
        ("single-mall training", single_mall),
        ("multi-mall training with graph features", multi_mall),
        ("parameter count", parameters),
        ("CLI outputs are reproducible", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {:>2} {name}: {} [{:.1?}]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
