use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GnnError, ModelConfig, RelationGraph, Result};
use crate::autodiff::{BnMode, BnState, ParamStore, Tape, Tensor, Var};
use crate::prob::GRAPH_FEATURES;

/// The three message relations: name, and whether source and destination
/// are shops.
const RELATIONS: [(&str, bool, bool); 3] = [("ns2ns", false, false), ("ns2s", false, true), ("s2ns", true, false)];

fn conv_name(block: usize, rel: &str, part: &str) -> String {
    format!("enc.b{block}.{rel}.{part}")
}

fn bn_name(block: usize, shop: bool) -> String {
    format!("enc.b{block}.bn_{}", if shop { "shop" } else { "nonshop" })
}

/// Every trainable tensor of `config` as `(name, rows, cols, is_matrix)`.
fn layout(config: &ModelConfig) -> Vec<(String, usize, usize, bool)> {
    let mut out = Vec::new();
    for b in 0..config.n_blocks {
        let n_in = if b == 0 { config.n_in } else { config.n_h };
        for (rel, _, _) in RELATIONS {
            out.push((conv_name(b, rel, "self"), n_in, config.n_h, true));
            out.push((conv_name(b, rel, "neigh"), n_in, config.n_h, true));
            out.push((conv_name(b, rel, "bias"), 1, config.n_h, false));
        }
        for shop in [false, true] {
            out.push((format!("{}.gamma", bn_name(b, shop)), 1, config.n_h, false));
            out.push((format!("{}.beta", bn_name(b, shop)), 1, config.n_h, false));
        }
    }
    let widths = config.decoder_widths();
    for (l, w) in widths.windows(2).enumerate() {
        out.push((format!("dec.l{l}.weight"), w[0], w[1], true));
        out.push((format!("dec.l{l}.bias"), 1, w[1], false));
    }
    out
}

/// Fresh parameters: matrices uniform in `±sqrt(6 / (fan_in + fan_out))`,
/// biases and batch-norm shifts zero, batch-norm scales one.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ParamStore> {
    config.check().map_err(GnnError::Config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    for (name, r, c, matrix) in layout(config) {
        let t = if matrix {
            let a = (6.0 / (r + c) as f64).sqrt();
            Tensor::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-a..=a)).collect())?
        } else if name.ends_with(".gamma") {
            Tensor::filled(r, c, 1.0)
        } else {
            Tensor::zeros(r, c)
        };
        store.insert(name, t)?;
    }
    for b in 0..config.n_blocks {
        for shop in [false, true] {
            store.insert_bn(bn_name(b, shop), BnState::new(config.n_h));
        }
    }
    Ok(store)
}

/// Checks that `store` holds exactly the tensors `config` calls for.
pub fn check_params(config: &ModelConfig, store: &ParamStore) -> Result<()> {
    let want = layout(config);
    if want.len() != store.len() {
        return Err(GnnError::ParamMismatch(format!(
            "expected {} tensors, found {}",
            want.len(),
            store.len()
        )));
    }
    for (name, r, c, _) in want {
        let t = store
            .get(&name)
            .map_err(|_| GnnError::ParamMismatch(format!("missing {name}")))?;
        if t.shape() != (r, c) {
            return Err(GnnError::ParamMismatch(format!(
                "{name} is {}x{}, expected {r}x{c}",
                t.rows(),
                t.cols()
            )));
        }
    }
    for b in 0..config.n_blocks {
        for shop in [false, true] {
            let name = bn_name(b, shop);
            let st = store
                .bn(&name)
                .map_err(|_| GnnError::ParamMismatch(format!("missing {name}")))?;
            if st.running_mean.len() != config.n_h || st.running_var.len() != config.n_h {
                return Err(GnnError::ParamMismatch(format!("{name} has the wrong width")));
            }
        }
    }
    Ok(())
}

/// Hidden node features and the batch-norm statistics a train-mode pass
/// produced; apply the latter with [`apply_bn_updates`].
#[derive(Debug)]
pub struct Encoded {
    pub shop: Var,
    pub nonshop: Var,
    pub bn_updates: Vec<(String, BnState)>,
}

fn expect_width(what: &'static str, t: &Tensor, rows: usize, cols: usize) -> Result<()> {
    if t.shape() != (rows, cols) {
        return Err(GnnError::InputShape {
            what,
            expected: (rows, cols),
            got: t.shape(),
        });
    }
    Ok(())
}

/// Message-passing encoder. Each block sums, per destination type, the
/// relation convolutions `x_dst W_self + mean(x_src) W_neigh + b`, then
/// applies batch norm and ReLU. Blocks after the first add their input.
pub fn encode(
    tape: &mut Tape,
    store: &ParamStore,
    config: &ModelConfig,
    rel: &RelationGraph,
    shop_x: Var,
    nonshop_x: Var,
    mode: BnMode,
) -> Result<Encoded> {
    expect_width("shop features", tape.value(shop_x), rel.num_shop(), config.n_in)?;
    expect_width("non-shop features", tape.value(nonshop_x), rel.num_nonshop(), config.n_in)?;
    let (mut xs, mut xn) = (shop_x, nonshop_x);
    let mut bn_updates = Vec::new();
    for b in 0..config.n_blocks {
        let mut into: [Option<Var>; 2] = [None, None];
        for (name, src_shop, dst_shop) in RELATIONS {
            let index = match name {
                "ns2ns" => rel.nonshop_to_nonshop(),
                "ns2s" => rel.nonshop_to_shop(),
                _ => rel.shop_to_nonshop(),
            };
            let src = if src_shop { xs } else { xn };
            let dst = if dst_shop { xs } else { xn };
            let w_self = tape.param(store, &conv_name(b, name, "self"))?;
            let w_neigh = tape.param(store, &conv_name(b, name, "neigh"))?;
            let bias = tape.param(store, &conv_name(b, name, "bias"))?;
            let agg = tape.segment_mean(src, index.clone())?;
            let a = tape.matmul(dst, w_self)?;
            let n = tape.matmul(agg, w_neigh)?;
            let s = tape.add(a, n)?;
            let msg = tape.add_bias(s, bias)?;
            let slot = &mut into[dst_shop as usize];
            *slot = Some(match *slot {
                Some(acc) => tape.add(acc, msg)?,
                None => msg,
            });
        }
        let mut outs = [xn, xs];
        for shop in [false, true] {
            let name = bn_name(b, shop);
            let gamma = tape.param(store, &format!("{name}.gamma"))?;
            let beta = tape.param(store, &format!("{name}.beta"))?;
            let mut state = store.bn(&name)?.clone();
            let z = into[shop as usize].expect("every type receives a relation");
            let y = tape.batch_norm(z, gamma, beta, mode, &mut state)?;
            if mode == BnMode::Train {
                bn_updates.push((name, state));
            }
            let h = tape.relu(y);
            let prev = outs[shop as usize];
            outs[shop as usize] = if b > 0 { tape.add(h, prev)? } else { h };
        }
        xn = outs[0];
        xs = outs[1];
    }
    Ok(Encoded {
        shop: xs,
        nonshop: xn,
        bn_updates,
    })
}

/// Per-edge predictions (`E × 1`, canonical order within each graph) from
/// the endpoint mean, the endpoint product and, when enabled, the graph's
/// 32 global features.
pub fn decode_edges(
    tape: &mut Tape,
    store: &ParamStore,
    config: &ModelConfig,
    rel: &RelationGraph,
    hidden_shop: Var,
    hidden_nonshop: Var,
    graph_x: Option<Var>,
) -> Result<Var> {
    let h = tape.concat_rows(&[hidden_nonshop, hidden_shop])?;
    let hu = tape.gather_rows(h, rel.edge_u().clone())?;
    let hv = tape.gather_rows(h, rel.edge_v().clone())?;
    let mean = tape.mean_pair(hu, hv)?;
    let prod = tape.mul(hu, hv)?;
    let mut z = match (config.include_graph_features, graph_x) {
        (true, Some(gx)) => {
            expect_width("graph features", tape.value(gx), rel.num_samples(), GRAPH_FEATURES)?;
            let per_edge = tape.gather_rows(gx, rel.edge_sample().clone())?;
            tape.concat_cols(&[mean, prod, per_edge])?
        }
        (true, None) => return Err(GnnError::MissingGraphFeatures),
        (false, _) => tape.concat_cols(&[mean, prod])?,
    };
    let n_layers = config.decoder_widths().len() - 1;
    for l in 0..n_layers {
        let w = tape.param(store, &format!("dec.l{l}.weight"))?;
        let b = tape.param(store, &format!("dec.l{l}.bias"))?;
        let y = tape.matmul(z, w)?;
        let y = tape.add_bias(y, b)?;
        z = if l + 1 < n_layers { tape.relu(y) } else { y };
    }
    Ok(z)
}

/// Feature matrices for one graph or one disjoint union of graphs.
#[derive(Debug, Clone, Copy)]
pub struct ModelInput<'a> {
    pub rel: &'a RelationGraph,
    pub shop_x: &'a Tensor,
    pub nonshop_x: &'a Tensor,
    /// One row of graph-level features per graph in the union.
    pub graph_x: Option<&'a Tensor>,
}

#[derive(Debug)]
pub struct Forward {
    pub prediction: Var,
    pub encoded: Encoded,
}

/// Encoder followed by the edge decoder.
pub fn forward(
    tape: &mut Tape,
    store: &ParamStore,
    config: &ModelConfig,
    input: ModelInput<'_>,
    mode: BnMode,
) -> Result<Forward> {
    let xs = tape.leaf(input.shop_x.clone());
    let xn = tape.leaf(input.nonshop_x.clone());
    let gx = input.graph_x.map(|g| tape.leaf(g.clone()));
    let encoded = encode(tape, store, config, input.rel, xs, xn, mode)?;
    let prediction = decode_edges(tape, store, config, input.rel, encoded.shop, encoded.nonshop, gx)?;
    Ok(Forward { prediction, encoded })
}

pub fn apply_bn_updates(store: &mut ParamStore, updates: Vec<(String, BnState)>) {
    for (name, st) in updates {
        store.insert_bn(name, st);
    }
}
