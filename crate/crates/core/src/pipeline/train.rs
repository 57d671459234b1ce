use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::Statistics;

use super::{PipelineError, Result, Sample};
use crate::autodiff::{AdamConfig, BnMode, ParamStore, Tape, Tensor};
use crate::gnn::{apply_bn_updates, forward, init_params, ModelConfig, ModelInput, RelationGraph};
use crate::seed::{derive_seed, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch: 16,
            epochs: 20,
            lr: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(PipelineError::Config("epochs must be at least 1".into()));
        }
        if self.batch == 0 {
            return Err(PipelineError::Config("batch must be at least 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(PipelineError::Config(format!("invalid learning rate {}", self.lr)));
        }
        Ok(())
    }
}

/// Several samples stacked into one disjoint-union graph.
pub struct Batch {
    pub rel: RelationGraph,
    pub shop_x: Tensor,
    pub nonshop_x: Tensor,
    pub graph_x: Tensor,
    pub targets: Tensor,
}

fn stack<'a>(parts: impl Iterator<Item = &'a Tensor>, cols: usize) -> Tensor {
    let mut data = Vec::new();
    let mut rows = 0;
    for t in parts {
        rows += t.rows();
        data.extend_from_slice(t.data());
    }
    Tensor::from_vec(rows, cols, data).expect("stacked rows")
}

impl Batch {
    pub fn new(samples: &[&Sample]) -> Self {
        let rels: Vec<&RelationGraph> = samples.iter().map(|s| s.rel.as_ref()).collect();
        let cols = |t: &Tensor| t.cols();
        let first = samples[0];
        let targets: Vec<f64> = samples.iter().flat_map(|s| s.targets.iter().copied()).collect();
        let n = targets.len();
        Batch {
            rel: RelationGraph::union(&rels),
            shop_x: stack(samples.iter().map(|s| &s.shop_x), cols(&first.shop_x)),
            nonshop_x: stack(samples.iter().map(|s| &s.nonshop_x), cols(&first.nonshop_x)),
            graph_x: stack(samples.iter().map(|s| &s.graph_x), cols(&first.graph_x)),
            targets: Tensor::from_vec(n, 1, targets).expect("target column"),
        }
    }

    pub fn input(&self, config: &ModelConfig) -> ModelInput<'_> {
        ModelInput {
            rel: &self.rel,
            shop_x: &self.shop_x,
            nonshop_x: &self.nonshop_x,
            graph_x: config.include_graph_features.then_some(&self.graph_x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub epoch: usize,
    pub train_l1: f64,
    /// `None` when the test split is empty.
    pub test_l1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub store: ParamStore,
    pub curve: Vec<CurvePoint>,
}

/// Fresh parameters for a training run seeded by `train.seed`.
pub fn initial_params(model: &ModelConfig, train: &TrainConfig) -> Result<ParamStore> {
    Ok(init_params(model, derive_seed(train.seed, 0, tag::INIT))?)
}

/// Adam on edge-mean L1 over minibatches of whole graphs. Every epoch
/// reshuffles the training samples and ends with an eval-mode pass over the
/// test samples.
pub fn train(
    samples: &[Sample],
    train_idx: &[usize],
    test_idx: &[usize],
    model: &ModelConfig,
    cfg: &TrainConfig,
    store: Option<ParamStore>,
) -> Result<TrainOutcome> {
    cfg.check()?;
    if train_idx.is_empty() {
        return Err(PipelineError::EmptyTrainSplit);
    }
    let mut store = match store {
        Some(s) => s,
        None => initial_params(model, cfg)?,
    };
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut order = train_idx.to_vec();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch as u64, tag::SHUFFLE));
        order.shuffle(&mut rng);
        let (mut loss_sum, mut edges) = (0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch).enumerate() {
            let members: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let batch = Batch::new(&members);
            let mut tape = Tape::new();
            let f = forward(&mut tape, &store, model, batch.input(model), BnMode::Train)?;
            let y = tape.leaf(batch.targets.clone());
            let loss = tape.l1_loss(f.prediction, y)?;
            let value = tape.value(loss).get(0, 0);
            if !value.is_finite() {
                return Err(PipelineError::NonFiniteLoss { epoch, batch: b + 1 });
            }
            let grads = tape.backward(loss)?.params(&store);
            store.set_grads(grads)?;
            store.adam_step(&adam)?;
            apply_bn_updates(&mut store, f.encoded.bn_updates);
            let n = batch.targets.rows();
            loss_sum += value * n as f64;
            edges += n;
        }
        let test_l1 = if test_idx.is_empty() {
            None
        } else {
            Some(evaluate(samples, test_idx, &store, model)?.metrics.mae)
        };
        curve.push(CurvePoint {
            epoch,
            train_l1: loss_sum / edges as f64,
            test_l1,
        });
    }
    Ok(TrainOutcome { store, curve })
}

/// One row of the per-edge prediction table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub mall_id: String,
    pub sample: usize,
    pub edge_k: usize,
    pub edge_u: usize,
    pub edge_v: usize,
    pub predicted: f64,
    pub actual: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean of the per-sample mean absolute errors.
    pub l1: f64,
    /// Mean absolute error over all edges.
    pub mae: f64,
    pub n_edges: usize,
    pub pearson_r: f64,
    /// False when either side has zero variance; `pearson_r` is then 0.
    pub pearson_defined: bool,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub rows: Vec<PredictionRow>,
}

/// Pearson correlation, or `None` when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let (sx, sy) = (x.std_dev(), y.std_dev());
    if !(sx > 0.0 && sy > 0.0) {
        return None;
    }
    Some((x.covariance(y) / (sx * sy)).clamp(-1.0, 1.0))
}

/// Metrics over explicit prediction rows.
pub fn metrics_from_rows(rows: &[PredictionRow]) -> Metrics {
    let n = rows.len();
    let mae = if n == 0 { 0.0 } else { rows.iter().map(|r| r.abs_error).sum::<f64>() / n as f64 };
    let mut per_sample: Vec<(f64, usize)> = Vec::new();
    let mut last: Option<(&str, usize)> = None;
    for r in rows {
        if last != Some((r.mall_id.as_str(), r.sample)) {
            per_sample.push((0.0, 0));
            last = Some((r.mall_id.as_str(), r.sample));
        }
        let s = per_sample.last_mut().expect("pushed");
        s.0 += r.abs_error;
        s.1 += 1;
    }
    let l1 = if per_sample.is_empty() {
        0.0
    } else {
        per_sample.iter().map(|(s, c)| s / *c as f64).sum::<f64>() / per_sample.len() as f64
    };
    let p: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    let a: Vec<f64> = rows.iter().map(|r| r.actual).collect();
    let r = pearson(&p, &a);
    Metrics {
        l1,
        mae,
        n_edges: n,
        pearson_r: r.unwrap_or(0.0),
        pearson_defined: r.is_some(),
    }
}

const EVAL_CHUNK: usize = 16;

/// Eval-mode predictions for the given samples. Eval-mode batch norm uses
/// running statistics only, so grouping does not change any prediction.
pub fn predict(samples: &[Sample], idx: &[usize], store: &ParamStore, model: &ModelConfig) -> Result<Vec<Vec<f64>>> {
    let chunks: Vec<&[usize]> = idx.chunks(EVAL_CHUNK).collect();
    let out = chunks
        .par_iter()
        .map(|chunk| {
            let members: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let batch = Batch::new(&members);
            let mut tape = Tape::new();
            let f = forward(&mut tape, store, model, batch.input(model), BnMode::Eval)?;
            let pred = tape.value(f.prediction).data();
            let mut at = 0;
            Ok(members
                .iter()
                .map(|s| {
                    let p = pred[at..at + s.num_edges()].to_vec();
                    at += s.num_edges();
                    p
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Predictions, per-edge table and metrics over `idx`.
pub fn evaluate(samples: &[Sample], idx: &[usize], store: &ParamStore, model: &ModelConfig) -> Result<Evaluation> {
    let preds = predict(samples, idx, store, model)?;
    let mut rows = Vec::new();
    for (&i, pred) in idx.iter().zip(preds) {
        let s = &samples[i];
        let (eu, ev) = (s.rel.edge_u(), s.rel.edge_v());
        let ids = NodeIds::new(s);
        for (k, (&p, &t)) in pred.iter().zip(&s.targets).enumerate() {
            rows.push(PredictionRow {
                mall_id: s.mall_id.clone(),
                sample: s.sample_index,
                edge_k: k,
                edge_u: ids.get(eu[k]),
                edge_v: ids.get(ev[k]),
                predicted: p,
                actual: t,
                abs_error: (p - t).abs(),
            });
        }
    }
    Ok(Evaluation {
        metrics: metrics_from_rows(&rows),
        rows,
    })
}

/// Maps stacked rows `[non-shops; shops]` back to node ids.
struct NodeIds {
    ids: Vec<usize>,
}

impl NodeIds {
    fn new(s: &Sample) -> Self {
        let mut nonshop: Vec<usize> = Vec::new();
        let shops = s.assignment.shops();
        let n_total = s.rel.num_nonshop() + s.rel.num_shop();
        let mut is_shop = vec![false; n_total];
        for &id in shops {
            is_shop[id] = true;
        }
        for (id, &shop) in is_shop.iter().enumerate() {
            if !shop {
                nonshop.push(id);
            }
        }
        nonshop.extend_from_slice(shops);
        NodeIds { ids: nonshop }
    }

    fn get(&self, row: usize) -> usize {
        self.ids[row]
    }
}
