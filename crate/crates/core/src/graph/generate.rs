//! Procedural mall floorplans.
//!
//! A corridor skeleton (loop, grid or spine) is laid out with jittered
//! positions, entrances hang off perimeter corridor nodes and every shop is
//! attached to one corridor node by its own edge.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{validate, GraphError, MallGraph, NodeKind, Result};

const SPACING: f64 = 10.0;
const JITTER: f64 = 2.0;
const ENTRANCE_OFFSET: f64 = 5.0;
const SHOP_OFFSET: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorridorStyle {
    Loop,
    Grid,
    Spine,
}

impl fmt::Display for CorridorStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorridorStyle::Loop => "loop",
            CorridorStyle::Grid => "grid",
            CorridorStyle::Spine => "spine",
        })
    }
}

impl FromStr for CorridorStyle {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "loop" => Ok(CorridorStyle::Loop),
            "grid" => Ok(CorridorStyle::Grid),
            "spine" => Ok(CorridorStyle::Spine),
            other => Err(format!("unknown corridor style '{other}' (expected loop, grid or spine)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MallSpec {
    pub n_shops: usize,
    pub n_entrances: usize,
    pub style: CorridorStyle,
    pub seed: u64,
}

impl MallSpec {
    pub fn new(n_shops: usize, n_entrances: usize, style: CorridorStyle, seed: u64) -> Self {
        MallSpec { n_shops, n_entrances, style, seed }
    }

    pub fn mall_id(&self) -> String {
        format!("{}-s{}-e{}-seed{}", self.style, self.n_shops, self.n_entrances, self.seed)
    }
}

struct Skeleton {
    pos: Vec<[f64; 2]>,
    edges: Vec<(usize, usize)>,
    perimeter: Vec<usize>,
}

fn jitter(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-JITTER..JITTER)
}

fn skeleton(style: CorridorStyle, wanted: usize, rng: &mut ChaCha8Rng) -> Skeleton {
    match style {
        CorridorStyle::Spine => {
            let n = wanted.max(1);
            let pos = (0..n)
                .map(|i| [i as f64 * SPACING + jitter(rng), jitter(rng) * 0.5])
                .collect();
            let edges = (1..n).map(|i| (i - 1, i)).collect();
            Skeleton { pos, edges, perimeter: (0..n).collect() }
        }
        CorridorStyle::Loop => {
            let n = wanted.max(3);
            let radius = SPACING * n as f64 / TAU;
            let pos = (0..n)
                .map(|i| {
                    let a = TAU * i as f64 / n as f64;
                    [1.5 * radius * a.cos() + jitter(rng), radius * a.sin() + jitter(rng)]
                })
                .collect();
            let edges = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Skeleton { pos, edges, perimeter: (0..n).collect() }
        }
        CorridorStyle::Grid => {
            let cols = ((wanted as f64).sqrt().ceil() as usize).max(2);
            let rows = wanted.div_ceil(cols).max(2);
            let mut pos = Vec::with_capacity(rows * cols);
            let mut edges = Vec::new();
            let mut perimeter = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let id = r * cols + c;
                    pos.push([c as f64 * SPACING + jitter(rng), r as f64 * SPACING + jitter(rng)]);
                    if c + 1 < cols {
                        edges.push((id, id + 1));
                    }
                    if r + 1 < rows {
                        edges.push((id, id + cols));
                    }
                    if r == 0 || c == 0 || r + 1 == rows || c + 1 == cols {
                        perimeter.push(id);
                    }
                }
            }
            Skeleton { pos, edges, perimeter }
        }
    }
}

/// Picks `count` new spoke directions, each bisecting the widest free gap.
fn free_directions(used: &[f64], count: usize) -> Vec<f64> {
    let mut taken: Vec<f64> = used.iter().map(|a| a.rem_euclid(TAU)).collect();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        if taken.is_empty() {
            taken.push(PI / 2.0);
            out.push(PI / 2.0);
            continue;
        }
        taken.sort_by(f64::total_cmp);
        let mut best = (0.0, 0.0);
        for (i, &a) in taken.iter().enumerate() {
            let next = if i + 1 < taken.len() { taken[i + 1] } else { taken[0] + TAU };
            if next - a > best.0 {
                best = (next - a, a);
            }
        }
        let dir = (best.1 + best.0 / 2.0).rem_euclid(TAU);
        taken.push(dir);
        out.push(dir);
    }
    out
}

fn angle(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

/// Generates a valid mall graph. Identical specs yield identical graphs.
pub fn generate_mall(spec: &MallSpec) -> Result<MallGraph> {
    if spec.n_shops == 0 {
        return Err(GraphError::InfeasibleSpec("at least one shop is required".into()));
    }
    if spec.n_entrances == 0 {
        return Err(GraphError::InfeasibleSpec("at least one entrance is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let wanted = spec.n_shops.div_ceil(2);
    let sk = skeleton(spec.style, wanted, &mut rng);
    let n_corr = sk.pos.len();
    if spec.n_entrances > sk.perimeter.len() {
        return Err(GraphError::InfeasibleSpec(format!(
            "{} entrances requested but the {} corridor has only {} perimeter nodes",
            spec.n_entrances,
            spec.style,
            sk.perimeter.len()
        )));
    }

    let centroid = {
        let (sx, sy) = sk.pos.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
        [sx / n_corr as f64, sy / n_corr as f64]
    };

    let mut kinds: Vec<(NodeKind, [f64; 2])> =
        sk.pos.iter().map(|&p| (NodeKind::Corridor, p)).collect();
    let mut edges = sk.edges.clone();
    let mut spokes: Vec<Vec<f64>> = vec![Vec::new(); n_corr];
    for &(a, b) in &sk.edges {
        spokes[a].push(angle(sk.pos[a], sk.pos[b]));
        spokes[b].push(angle(sk.pos[b], sk.pos[a]));
    }

    // Entrances, spread evenly along the perimeter from a random start.
    let per = sk.perimeter.len();
    let start = rng.gen_range(0..per);
    for i in 0..spec.n_entrances {
        let anchor = sk.perimeter[(start + i * per / spec.n_entrances) % per];
        let p = sk.pos[anchor];
        let outward = if spec.style == CorridorStyle::Spine || n_corr == 1 {
            -PI / 2.0
        } else {
            angle(centroid, p)
        };
        let id = kinds.len();
        kinds.push((
            NodeKind::Entrance,
            [p[0] + ENTRANCE_OFFSET * outward.cos(), p[1] + ENTRANCE_OFFSET * outward.sin()],
        ));
        spokes[anchor].push(outward);
        edges.push((anchor, id));
    }

    // Shops on random corridor nodes, capped per node so they spread out.
    let cap = spec.n_shops.div_ceil(n_corr) + 1;
    let mut load = vec![0usize; n_corr];
    for _ in 0..spec.n_shops {
        let open: Vec<usize> = (0..n_corr).filter(|&c| load[c] < cap).collect();
        let c = open[rng.gen_range(0..open.len())];
        load[c] += 1;
    }
    for c in 0..n_corr {
        for dir in free_directions(&spokes[c], load[c]) {
            let r = SHOP_OFFSET + rng.gen_range(0.0..1.0);
            let id = kinds.len();
            let p = sk.pos[c];
            kinds.push((NodeKind::Shop, [p[0] + r * dir.cos(), p[1] + r * dir.sin()]));
            edges.push((c, id));
        }
    }

    let graph = MallGraph::new(spec.mall_id(), kinds, &edges)?;
    let report = validate(&graph);
    if !report.is_empty() {
        return Err(GraphError::InvariantViolation {
            mall_id: graph.mall_id().to_string(),
            violations: report,
        });
    }
    Ok(graph)
}
