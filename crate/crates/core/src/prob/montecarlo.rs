use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AttractionParams, ProbError, Result, RoutingTable, ShopAssignment, TargetVector, CATEGORIES};
use crate::graph::MallGraph;

/// Simulates `n_walkers` shoppers. Each picks an entrance by weight, a cell
/// by renormalized attraction, and a shop uniformly inside the cell, then
/// walks the deterministic shortest route.
pub fn monte_carlo_usage(
    graph: &MallGraph,
    assignment: &ShopAssignment,
    params: &AttractionParams,
    n_walkers: usize,
    seed: u64,
) -> Result<TargetVector> {
    RoutingTable::new(graph)?.monte_carlo(assignment, params, n_walkers, seed)
}

impl RoutingTable {
    pub fn monte_carlo(
        &self,
        assignment: &ShopAssignment,
        params: &AttractionParams,
        n_walkers: usize,
        seed: u64,
    ) -> Result<TargetVector> {
        if n_walkers == 0 {
            return Err(ProbError::InvalidParams("need at least one walker".into()));
        }
        params.check()?;
        let entrance_w = params.weights_for(self.entrances().len())?;
        let (cell_mass, _) = self.shop_weights(assignment, params)?;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); CATEGORIES * CATEGORIES];
        for (s, p) in assignment.pairs().iter().enumerate() {
            members[p.cell()].push(s);
        }
        let pick_entrance = WeightedIndex::new(&entrance_w)
            .map_err(|e| ProbError::InvalidParams(format!("entrance weights: {e}")))?;
        let pick_cell = WeightedIndex::new(cell_mass).expect("some cell is nonempty");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = vec![0u64; self.num_edges()];
        for _ in 0..n_walkers {
            let e = pick_entrance.sample(&mut rng);
            let cell = &members[pick_cell.sample(&mut rng)];
            let s = cell[rng.gen_range(0..cell.len())];
            for &slot in self.route(e, s) {
                hits[slot as usize] += 1;
            }
        }
        let n = n_walkers as f64;
        Ok(TargetVector {
            t: hits.into_iter().map(|h| h as f64 / n).collect(),
        })
    }
}

/// How closely an empirical estimate from `n` walkers tracks exact targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub n_edges: usize,
    pub n_within: usize,
    pub fraction_within: f64,
    pub max_abs_diff: f64,
    /// Largest 3-sigma binomial half-width over all edges.
    pub max_bound: f64,
}

impl Agreement {
    pub fn passes(&self, min_fraction: f64) -> bool {
        self.fraction_within >= min_fraction
    }
}

/// Counts edges with `|t_hat - t| <= 3 sqrt(t (1 - t) / n)`. A slack of
/// 1e-12 absorbs rounding where the bound is zero.
pub fn binomial_agreement(exact: &TargetVector, empirical: &TargetVector, n: usize) -> Agreement {
    assert_eq!(exact.len(), empirical.len(), "target vectors differ in length");
    let mut n_within = 0;
    let mut max_abs_diff = 0.0f64;
    let mut max_bound = 0.0f64;
    for (&t, &h) in exact.t.iter().zip(&empirical.t) {
        let bound = 3.0 * (t * (1.0 - t) / n as f64).max(0.0).sqrt();
        let d = (h - t).abs();
        if d <= bound + 1e-12 {
            n_within += 1;
        }
        max_abs_diff = max_abs_diff.max(d);
        max_bound = max_bound.max(bound);
    }
    let n_edges = exact.len();
    Agreement {
        n_edges,
        n_within,
        fraction_within: if n_edges == 0 { 1.0 } else { n_within as f64 / n_edges as f64 },
        max_abs_diff,
        max_bound,
    }
}
