use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde::Serialize;

use super::{
    CentralityArgs, EvalArgs, ExitContext, Failure, GenArgs, McCheckArgs, RenderArgs, SplitArg, SynthArgs, TrainArgs,
    EXIT_CHECK, EXIT_DATA, EXIT_MISMATCH, EXIT_USAGE,
};
use crate::fsutil::write_atomic;
use crate::gnn::{Checkpoint, GnnError, ModelConfig};
use crate::graph::{self, edge_betweenness, generate_mall, GraphError, MallGraph, MallSpec};
use crate::pipeline::{
    build_dataset, default_train_count, evaluate, train as train_model, write_curve, write_json, write_predictions,
    Dataset, PipelineError, TrainConfig,
};
use crate::prob::{assign_features, binomial_agreement, class_counts, AttractionParams, RoutingTable};
use crate::report::render_svg;

/// Everything needed to repeat a run.
#[derive(Serialize)]
struct RunManifest<'a, A: Serialize> {
    command: &'a str,
    duration_s: f64,
    flags: &'a A,
    inputs: Vec<String>,
    outputs: Vec<String>,
    seeds: BTreeMap<&'static str, u64>,
    version: &'static str,
}

struct Run<'a, A: Serialize> {
    command: &'a str,
    flags: &'a A,
    start: Instant,
    inputs: Vec<String>,
    outputs: Vec<String>,
    seeds: BTreeMap<&'static str, u64>,
}

impl<'a, A: Serialize> Run<'a, A> {
    fn new(command: &'a str, flags: &'a A) -> Self {
        Run {
            command,
            flags,
            start: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seeds: BTreeMap::new(),
        }
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    fn finish(self, path: &Path) -> Result<(), Failure> {
        let m = RunManifest {
            command: self.command,
            duration_s: self.start.elapsed().as_secs_f64(),
            flags: self.flags,
            inputs: self.inputs,
            outputs: self.outputs,
            seeds: self.seeds,
            version: env!("CARGO_PKG_VERSION"),
        };
        write_json(path, &m).or_exit(EXIT_DATA)
    }
}

/// `<path>.run.json`, the manifest beside a single-file output.
fn manifest_for(path: &Path) -> PathBuf {
    let mut s = OsString::from(path.as_os_str());
    s.push(".run.json");
    PathBuf::from(s)
}

fn pipeline_code(e: &PipelineError) -> u8 {
    match e {
        PipelineError::Gnn(g) => gnn_code(g),
        PipelineError::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn gnn_code(e: &GnnError) -> u8 {
    match e {
        GnnError::ParamMismatch(_)
        | GnnError::Config(_)
        | GnnError::InputShape { .. }
        | GnnError::MissingGraphFeatures
        | GnnError::Autodiff(_) => EXIT_MISMATCH,
        GnnError::Parse(_) | GnnError::Io { .. } => EXIT_DATA,
    }
}

fn pipeline<T>(r: Result<T, PipelineError>) -> Result<T, Failure> {
    r.map_err(|e| Failure {
        code: pipeline_code(&e),
        error: e.into(),
    })
}

fn attraction(ma: f64, mu: f64, sigma: f64) -> Result<AttractionParams, Failure> {
    let params = AttractionParams {
        entrance_weights: None,
        m_a: ma,
        m_u: mu,
        sigma_a: sigma,
        sigma_u: sigma,
    };
    params.check().map_err(|e| Failure::usage(format!("--ma/--mu/--sigma: {e}")))?;
    Ok(params)
}

fn load_mall(path: &Path) -> Result<MallGraph, Failure> {
    graph::load_graph(path).or_exit(EXIT_DATA)
}

/// Mall files named by `path`: the file itself, or every `.json` file in the
/// directory except run manifests, in name order.
fn mall_files(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))
        .or_exit(EXIT_DATA)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            p.is_file() && name.ends_with(".json") && !name.ends_with("run.json")
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure {
            code: EXIT_DATA,
            error: anyhow!("no mall files in {}", path.display()),
        });
    }
    Ok(files)
}

pub(super) fn gen(name: &str, a: &GenArgs) -> Result<u8, Failure> {
    let mut run = Run::new(name, a);
    run.seeds.insert("seed", a.seed);
    for p in 0..a.malls {
        let spec = MallSpec::new(a.shops as usize, a.entrances as usize, a.style.into(), a.seed.wrapping_add(p));
        let g = generate_mall(&spec).map_err(|e| Failure {
            code: if matches!(e, GraphError::InfeasibleSpec(_)) { EXIT_DATA } else { EXIT_USAGE },
            error: e.into(),
        })?;
        let path = a.out.join(format!("{}.json", g.mall_id()));
        graph::save_graph(&g, &path).or_exit(EXIT_DATA)?;
        println!("{}: {} nodes, {} edges", path.display(), g.num_nodes(), g.num_edges());
        run.output(&path);
    }
    run.finish(&a.out.join("run.json"))?;
    Ok(0)
}

pub(super) fn synth(name: &str, a: &SynthArgs) -> Result<u8, Failure> {
    let mut run = Run::new(name, a);
    run.seeds.insert("seed", a.seed);
    let params = attraction(a.ma, a.mu, a.sigma)?;
    let samples = a.samples as usize;
    let n_train = a.train_per_mall.unwrap_or_else(|| default_train_count(samples));
    if n_train > samples {
        return Err(Failure::usage(format!(
            "--train-per-mall {n_train} exceeds --samples {samples}"
        )));
    }
    let mut malls = Vec::new();
    for f in mall_files(&a.malls)? {
        malls.push(load_mall(&f)?);
        run.input(&f);
    }
    let mut ids: Vec<&str> = malls.iter().map(|g| g.mall_id()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Failure {
            code: EXIT_DATA,
            error: anyhow!("mall id {} appears more than once", w[0]),
        });
    }
    let mut data = pipeline(build_dataset(malls, samples, &params, a.seed, a.counts.into()))?;
    pipeline(data.split(n_train, a.seed))?;
    pipeline(data.save(&a.out))?;
    println!(
        "{}: {} malls, {} samples ({} train / {} test per mall)",
        a.out.display(),
        data.malls.len(),
        data.samples.len(),
        n_train,
        samples - n_train
    );
    run.output(&a.out);
    run.finish(&a.out.join("run.json"))?;
    Ok(0)
}

fn load_dataset(dir: &Path) -> Result<Dataset, Failure> {
    pipeline(Dataset::load(dir)).map_err(|f| Failure {
        error: f.error.context(format!("loading dataset {}", dir.display())),
        ..f
    })
}

pub(super) fn train(name: &str, a: &TrainArgs) -> Result<u8, Failure> {
    let mut run = Run::new(name, a);
    run.seeds.insert("seed", a.seed);
    let model = ModelConfig {
        n_blocks: a.blocks as usize,
        n_h: a.hidden as usize,
        include_graph_features: !a.no_graph_features,
        ..ModelConfig::default()
    };
    model.check().map_err(Failure::usage)?;
    let cfg = TrainConfig {
        batch: a.batch as usize,
        epochs: a.epochs as usize,
        lr: a.lr,
        seed: a.seed,
    };
    cfg.check().map_err(|e| Failure::usage(format!("--lr: {e}")))?;
    let data = load_dataset(&a.dataset)?;
    run.input(&a.dataset);
    let split = pipeline(data.recorded_split())?;
    let out = pipeline(train_model(&data.samples, &split.train, &split.test, &model, &cfg, None))?;
    let ckpt = Checkpoint {
        config: model,
        store: out.store,
    };
    ckpt.save(&a.out).map_err(|e| Failure {
        code: gnn_code(&e),
        error: e.into(),
    })?;
    pipeline(write_curve(&a.curve, &out.curve))?;
    if let Some(last) = out.curve.last() {
        match last.test_l1 {
            Some(t) => println!("epoch {}: train_l1 {:.6}, test_l1 {:.6}", last.epoch, last.train_l1, t),
            None => println!("epoch {}: train_l1 {:.6}", last.epoch, last.train_l1),
        }
    }
    run.output(&a.out);
    run.output(&a.curve);
    run.finish(&manifest_for(&a.out))?;
    Ok(0)
}

pub(super) fn eval(name: &str, a: &EvalArgs) -> Result<u8, Failure> {
    let mut run = Run::new(name, a);
    let ckpt = Checkpoint::load(&a.model).map_err(|e| Failure {
        code: gnn_code(&e),
        error: anyhow::Error::from(e).context(format!("loading model {}", a.model.display())),
    })?;
    run.input(&a.model);
    let data = load_dataset(&a.dataset)?;
    run.input(&a.dataset);
    let idx: Vec<usize> = match a.split {
        SplitArg::All => (0..data.samples.len()).collect(),
        SplitArg::Train => pipeline(data.recorded_split())?.train,
        SplitArg::Test => pipeline(data.recorded_split())?.test,
    };
    let ev = pipeline(evaluate(&data.samples, &idx, &ckpt.store, &ckpt.config))?;
    pipeline(write_predictions(&a.out, &ev.rows))?;
    pipeline(write_json(&a.metrics, &ev.metrics))?;
    let m = &ev.metrics;
    println!(
        "{} edges: mae {:.6}, l1 {:.6}, pearson_r {:.4}{}",
        m.n_edges,
        m.mae,
        m.l1,
        m.pearson_r,
        if m.pearson_defined { "" } else { " (undefined, constant input)" }
    );
    run.output(&a.out);
    run.output(&a.metrics);
    run.finish(&manifest_for(&a.out))?;
    Ok(0)
}

pub(super) fn centrality(name: &str, a: &CentralityArgs) -> Result<u8, Failure> {
    let mut run = Run::new(name, a);
    let g = load_mall(&a.mall)?;
    run.input(&a.mall);
    let c = edge_betweenness(&g).or_exit(EXIT_DATA)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let table = (|| -> csv::Result<Vec<u8>> {
        w.write_record(["edge_k", "u", "v", "betweenness"])?;
        for (k, &ck) in c.iter().enumerate() {
            let e = g.canonical_edge(k);
            w.write_record([k.to_string(), e.u.to_string(), e.v.to_string(), ck.to_string()])?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    })()
    .or_exit(EXIT_DATA)?;
    write_atomic(&a.out, &table)
        .with_context(|| format!("writing {}", a.out.display()))
        .or_exit(EXIT_DATA)?;
    println!("{}: {} edges", a.out.display(), c.len());
    run.output(&a.out);
    run.finish(&manifest_for(&a.out))?;
    Ok(0)
}

#[derive(Serialize)]
struct McReport {
    fraction_within: f64,
    max_abs_diff: f64,
    max_bound: f64,
    n_edges: usize,
    n_within: usize,
    passed: bool,
    walkers: u64,
}

pub(super) fn mc_check(name: &str, a: &McCheckArgs) -> Result<u8, Failure> {
    let mut run = Run::new(name, a);
    run.seeds.insert("sample_seed", a.sample_seed);
    run.seeds.insert("seed", a.seed);
    if !(0.0..=1.0).contains(&a.min_fraction) {
        return Err(Failure::usage("--min-fraction must lie in [0, 1]"));
    }
    let params = attraction(a.ma, a.mu, a.sigma)?;
    let g = load_mall(&a.mall)?;
    run.input(&a.mall);
    let routing = RoutingTable::new(&g)
        .with_context(|| format!("mall {}", g.mall_id()))
        .or_exit(EXIT_DATA)?;
    let counts = class_counts(routing.shops().len(), &params);
    let assignment = assign_features(&g, &counts, a.sample_seed).or_exit(EXIT_DATA)?;
    let exact = routing.targets(&assignment, &params).or_exit(EXIT_DATA)?;
    let mc = routing
        .monte_carlo(&assignment, &params, a.walkers as usize, a.seed)
        .or_exit(EXIT_DATA)?;
    let agree = binomial_agreement(&exact, &mc, a.walkers as usize);
    let passed = agree.passes(a.min_fraction);
    println!("max |t_hat - t| = {:.6e}", agree.max_abs_diff);
    println!("max 3-sigma bound = {:.6e}", agree.max_bound);
    println!(
        "{}/{} edges within bound ({:.2}%): {}",
        agree.n_within,
        agree.n_edges,
        100.0 * agree.fraction_within,
        if passed { "pass" } else { "FAIL" }
    );
    if let Some(path) = &a.report {
        let report = McReport {
            fraction_within: agree.fraction_within,
            max_abs_diff: agree.max_abs_diff,
            max_bound: agree.max_bound,
            n_edges: agree.n_edges,
            n_within: agree.n_within,
            passed,
            walkers: a.walkers,
        };
        pipeline(write_json(path, &report))?;
        run.output(path);
        run.finish(&manifest_for(path))?;
    }
    Ok(if passed { 0 } else { EXIT_CHECK })
}

/// One column of a headed CSV as numbers.
fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>, Failure> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))
        .or_exit(EXIT_DATA)?;
    let headers = r.headers().or_exit(EXIT_DATA)?.clone();
    let col = match column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::usage(format!("--column: {} has no column '{name}'", path.display())))?,
        None => headers
            .len()
            .checked_sub(1)
            .ok_or_else(|| Failure::usage(format!("--values: {} has no columns", path.display())))?,
    };
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.or_exit(EXIT_DATA)?;
        let cell = rec.get(col).unwrap_or("");
        let v: f64 = cell
            .trim()
            .parse()
            .map_err(|_| anyhow!("{}: row {}: '{cell}' is not a number", path.display(), i + 1))
            .or_exit(EXIT_DATA)?;
        out.push(v);
    }
    Ok(out)
}

pub(super) fn render(name: &str, a: &RenderArgs) -> Result<u8, Failure> {
    let mut run = Run::new(name, a);
    let g = load_mall(&a.mall)?;
    run.input(&a.mall);
    let values = match &a.values {
        Some(p) => {
            let v = read_column(p, a.column.as_deref())?;
            if v.len() != g.num_edges() {
                return Err(Failure::usage(format!(
                    "--values: {} has {} rows but mall {} has {} edges",
                    p.display(),
                    v.len(),
                    g.mall_id(),
                    g.num_edges()
                )));
            }
            run.input(p);
            Some(v)
        }
        None => None,
    };
    let svg = render_svg(&g, values.as_deref());
    write_atomic(&a.out, svg.as_bytes())
        .with_context(|| format!("writing {}", a.out.display()))
        .or_exit(EXIT_DATA)?;
    println!("{}", a.out.display());
    run.output(&a.out);
    run.finish(&manifest_for(&a.out))?;
    Ok(0)
}
