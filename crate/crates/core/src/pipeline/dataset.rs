use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{io_err, PipelineError, Result};
use crate::autodiff::Tensor;
use crate::gnn::{build_relations, RelationGraph};
use crate::graph::{self, MallGraph};
use crate::prob::{
    assign_features, class_counts, class_counts_sampled, graph_features, AttractionParams, CategoryPair,
    CountMode, RoutingTable, ShopAssignment, GRAPH_FEATURES, NODE_FEATURES,
};
use crate::seed::{derive_seed, tag};

/// One featured instance of one mall.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub mall: usize,
    pub mall_id: String,
    pub sample_index: usize,
    pub assignment: ShopAssignment,
    pub shop_x: Tensor,
    pub nonshop_x: Tensor,
    pub graph_x: Tensor,
    pub targets: Vec<f64>,
    pub rel: Arc<RelationGraph>,
}

impl Sample {
    /// File stem and manifest key, `<mall_id>__<q:04>`.
    pub fn key(&self) -> String {
        sample_key(&self.mall_id, self.sample_index)
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len()
    }
}

fn sample_key(mall_id: &str, q: usize) -> String {
    format!("{mall_id}__{q:04}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentRecord {
    i: usize,
    j: usize,
    shop: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleFile {
    assignment: Vec<AssignmentRecord>,
    graph_features: Vec<f64>,
    mall_id: String,
    nonshop_features: Vec<Vec<f64>>,
    sample_index: usize,
    shop_features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

/// Train/test membership by sample key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRecord {
    pub n_train_per_mall: usize,
    pub seed: u64,
    pub test: Vec<String>,
    pub train: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub count_mode: CountMode,
    /// Mall files relative to the dataset directory.
    pub malls: Vec<String>,
    pub master_seed: u64,
    pub params: AttractionParams,
    pub samples_per_mall: usize,
    pub split: Option<SplitRecord>,
}

/// Indices into [`Dataset::samples`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub malls: Vec<MallGraph>,
    pub samples: Vec<Sample>,
    pub params: AttractionParams,
    pub master_seed: u64,
    pub samples_per_mall: usize,
    pub count_mode: CountMode,
    pub split: Option<SplitRecord>,
}

fn rows_tensor<R: AsRef<[f64]>>(rows: &[R], width: usize) -> Tensor {
    if rows.is_empty() {
        return Tensor::zeros(0, width);
    }
    Tensor::from_rows(rows)
}

fn make_sample(
    graph: &MallGraph,
    p: usize,
    q: usize,
    routing: &RoutingTable,
    rel: &Arc<RelationGraph>,
    params: &AttractionParams,
    master_seed: u64,
    mode: CountMode,
) -> Result<Sample> {
    let tagged = |source| PipelineError::Sample {
        mall_id: graph.mall_id().to_string(),
        sample: q,
        source,
    };
    let seed = derive_seed(master_seed, p as u64, q as u64);
    let n_shops = routing.shops().len();
    let counts = match mode {
        CountMode::Expected => class_counts(n_shops, params),
        CountMode::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 1));
            class_counts_sampled(n_shops, params, &mut rng)
        }
    };
    let assignment = assign_features(graph, &counts, seed).map_err(tagged)?;
    let targets = routing.targets(&assignment, params).map_err(tagged)?.t;
    let nonshop = routing.nonshop_features(&assignment).map_err(tagged)?;
    Ok(Sample {
        mall: p,
        mall_id: graph.mall_id().to_string(),
        sample_index: q,
        shop_x: rows_tensor(&assignment.shop_features(), NODE_FEATURES),
        nonshop_x: rows_tensor(&nonshop, NODE_FEATURES),
        graph_x: Tensor::from_rows(&[graph_features(graph, &assignment.counts())]),
        targets,
        assignment,
        rel: rel.clone(),
    })
}

/// `samples_per_mall` featured samples of every mall. Sample `(p, q)` draws
/// from its own derived seed, so samples are built in parallel and each can
/// be regenerated alone.
pub fn build_dataset(
    malls: Vec<MallGraph>,
    samples_per_mall: usize,
    params: &AttractionParams,
    master_seed: u64,
    mode: CountMode,
) -> Result<Dataset> {
    params.check().map_err(|e| PipelineError::Config(e.to_string()))?;
    for g in &malls {
        let report = graph::validate(g);
        if !report.is_empty() {
            return Err(PipelineError::Graph(graph::GraphError::InvariantViolation {
                mall_id: g.mall_id().to_string(),
                violations: report,
            }));
        }
    }
    let routing: Vec<RoutingTable> = malls
        .par_iter()
        .map(|g| {
            RoutingTable::new(g).map_err(|source| PipelineError::Mall {
                mall_id: g.mall_id().to_string(),
                source,
            })
        })
        .collect::<Result<_>>()?;
    let rels: Vec<Arc<RelationGraph>> = malls.iter().map(|g| Arc::new(build_relations(g))).collect();
    let jobs: Vec<(usize, usize)> = (0..malls.len())
        .flat_map(|p| (0..samples_per_mall).map(move |q| (p, q)))
        .collect();
    let samples = jobs
        .par_iter()
        .map(|&(p, q)| make_sample(&malls[p], p, q, &routing[p], &rels[p], params, master_seed, mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        malls,
        samples,
        params: params.clone(),
        master_seed,
        samples_per_mall,
        count_mode: mode,
        split: None,
    })
}

impl Dataset {
    /// Per-mall uniform random split: `n_train_per_mall` training samples,
    /// the rest test. Records the membership on the dataset.
    pub fn split(&mut self, n_train_per_mall: usize, seed: u64) -> Result<Split> {
        let mut per_mall: Vec<Vec<usize>> = vec![Vec::new(); self.malls.len()];
        for (i, s) in self.samples.iter().enumerate() {
            per_mall[s.mall].push(i);
        }
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (p, idx) in per_mall.iter_mut().enumerate() {
            if idx.len() < n_train_per_mall {
                return Err(PipelineError::InsufficientSamples {
                    mall_id: self.malls[p].mall_id().to_string(),
                    have: idx.len(),
                    need: n_train_per_mall,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, p as u64, tag::SPLIT));
            idx.shuffle(&mut rng);
            let (a, b) = idx.split_at(n_train_per_mall);
            train.extend_from_slice(a);
            test.extend_from_slice(b);
        }
        train.sort_unstable();
        test.sort_unstable();
        self.split = Some(SplitRecord {
            n_train_per_mall,
            seed,
            train: train.iter().map(|&i| self.samples[i].key()).collect(),
            test: test.iter().map(|&i| self.samples[i].key()).collect(),
        });
        Ok(Split { train, test })
    }

    /// Membership recorded on the dataset, as sample indices.
    pub fn recorded_split(&self) -> Result<Split> {
        let rec = self
            .split
            .as_ref()
            .ok_or_else(|| PipelineError::Config("dataset has no recorded split".into()))?;
        let keys: std::collections::HashMap<String, usize> =
            self.samples.iter().enumerate().map(|(i, s)| (s.key(), i)).collect();
        let resolve = |names: &[String]| {
            names
                .iter()
                .map(|n| {
                    keys.get(n)
                        .copied()
                        .ok_or_else(|| PipelineError::InvalidDataset(format!("split names unknown sample {n}")))
                })
                .collect::<Result<Vec<_>>>()
        };
        Ok(Split {
            train: resolve(&rec.train)?,
            test: resolve(&rec.test)?,
        })
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            count_mode: self.count_mode,
            malls: self.malls.iter().map(|g| format!("malls/{}.json", g.mall_id())).collect(),
            master_seed: self.master_seed,
            params: self.params.clone(),
            samples_per_mall: self.samples_per_mall,
            split: self.split.clone(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        for g in &self.malls {
            graph::save_graph(g, dir.join("malls").join(format!("{}.json", g.mall_id())))?;
        }
        let written: Vec<Result<()>> = self
            .samples
            .par_iter()
            .map(|s| {
                let path = dir.join("samples").join(format!("{}.json", s.key()));
                write_json(&path, &sample_file(s))
            })
            .collect();
        written.into_iter().collect::<Result<()>>()?;
        write_json(&dir.join("manifest.json"), &self.manifest())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: DatasetManifest = read_json(&dir.join("manifest.json"))?;
        let malls = manifest
            .malls
            .iter()
            .map(|f| graph::load_graph(dir.join(f)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let rels: Vec<Arc<RelationGraph>> = malls.iter().map(|g| Arc::new(build_relations(g))).collect();
        let jobs: Vec<(usize, usize)> = (0..malls.len())
            .flat_map(|p| (0..manifest.samples_per_mall).map(move |q| (p, q)))
            .collect();
        let samples = jobs
            .par_iter()
            .map(|&(p, q)| {
                let path = dir.join("samples").join(format!("{}.json", sample_key(malls[p].mall_id(), q)));
                let file: SampleFile = read_json(&path)?;
                sample_from_file(file, p, &malls[p], &rels[p], &path)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            malls,
            samples,
            params: manifest.params,
            master_seed: manifest.master_seed,
            samples_per_mall: manifest.samples_per_mall,
            count_mode: manifest.count_mode,
            split: manifest.split,
        })
    }
}

fn sample_file(s: &Sample) -> SampleFile {
    let rows = |t: &Tensor| (0..t.rows()).map(|r| t.row(r).to_vec()).collect();
    SampleFile {
        assignment: s
            .assignment
            .shops()
            .iter()
            .zip(s.assignment.pairs())
            .map(|(&shop, p)| AssignmentRecord {
                i: p.area(),
                j: p.usage(),
                shop,
            })
            .collect(),
        graph_features: s.graph_x.data().to_vec(),
        mall_id: s.mall_id.clone(),
        nonshop_features: rows(&s.nonshop_x),
        sample_index: s.sample_index,
        shop_features: rows(&s.shop_x),
        targets: s.targets.clone(),
    }
}

fn sample_from_file(
    f: SampleFile,
    p: usize,
    graph: &MallGraph,
    rel: &Arc<RelationGraph>,
    path: &Path,
) -> Result<Sample> {
    let bad = |msg: String| PipelineError::InvalidDataset(format!("{}: {msg}", path.display()));
    if f.mall_id != graph.mall_id() {
        return Err(bad(format!("mall_id {} does not match {}", f.mall_id, graph.mall_id())));
    }
    let entries = f
        .assignment
        .iter()
        .map(|a| CategoryPair::new(a.i, a.j).map(|p| (a.shop, p)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| bad(e.to_string()))?;
    let assignment = ShopAssignment::from_pairs(graph, &entries).map_err(|e| bad(e.to_string()))?;
    let check_rows = |rows: &[Vec<f64>], n: usize, what: &str| {
        if rows.len() != n || rows.iter().any(|r| r.len() != NODE_FEATURES) {
            return Err(bad(format!("{what} must be {n} rows of {NODE_FEATURES}")));
        }
        Ok(())
    };
    check_rows(&f.shop_features, rel.num_shop(), "shop_features")?;
    check_rows(&f.nonshop_features, rel.num_nonshop(), "nonshop_features")?;
    if f.graph_features.len() != GRAPH_FEATURES {
        return Err(bad(format!("graph_features must have {GRAPH_FEATURES} entries")));
    }
    if f.targets.len() != graph.num_edges() {
        return Err(bad(format!("targets must have {} entries", graph.num_edges())));
    }
    Ok(Sample {
        mall: p,
        mall_id: f.mall_id,
        sample_index: f.sample_index,
        assignment,
        shop_x: rows_tensor(&f.shop_features, NODE_FEATURES),
        nonshop_x: rows_tensor(&f.nonshop_features, NODE_FEATURES),
        graph_x: Tensor::from_rows(&[f.graph_features]),
        targets: f.targets,
        rel: rel.clone(),
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    // Going through `Value` sorts every object's keys.
    let tree = serde_json::to_value(value).expect("serializable");
    let mut s = serde_json::to_string_pretty(&tree).expect("serializable");
    s.push('\n');
    crate::fsutil::write_atomic(path, s.as_bytes()).map_err(|e| io_err(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
