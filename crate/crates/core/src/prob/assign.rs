use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{attraction, AttractionParams, CategoryPair, ClassCounts, ProbError, Result, CATEGORIES};
use crate::graph::{MallGraph, NodeId};

/// Category pair of every shop in one sample, aligned with the ascending
/// shop-id order of the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShopAssignment {
    shops: Vec<NodeId>,
    pairs: Vec<CategoryPair>,
}

impl ShopAssignment {
    /// Builds an assignment from explicit `(shop, pair)` entries. Every shop
    /// of the graph must appear exactly once.
    pub fn from_pairs(graph: &MallGraph, entries: &[(NodeId, CategoryPair)]) -> Result<Self> {
        let shops = graph.shop_ids();
        let mut pairs: Vec<Option<CategoryPair>> = vec![None; shops.len()];
        for &(shop, pair) in entries {
            let row = shops
                .binary_search(&shop)
                .map_err(|_| ProbError::InvalidAssignment(format!("node {shop} is not a shop")))?;
            if pairs[row].replace(pair).is_some() {
                return Err(ProbError::InvalidAssignment(format!("shop {shop} assigned twice")));
            }
        }
        let pairs = pairs
            .into_iter()
            .zip(&shops)
            .map(|(p, &s)| p.ok_or_else(|| ProbError::InvalidAssignment(format!("shop {s} unassigned"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(ShopAssignment { shops, pairs })
    }

    pub fn shops(&self) -> &[NodeId] {
        &self.shops
    }

    pub fn pairs(&self) -> &[CategoryPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.shops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shops.is_empty()
    }

    pub fn pair_of(&self, shop: NodeId) -> Option<CategoryPair> {
        self.shops.binary_search(&shop).ok().map(|r| self.pairs[r])
    }

    /// Realized per-cell tallies.
    pub fn counts(&self) -> ClassCounts {
        let mut flat = [0usize; CATEGORIES * CATEGORIES];
        for p in &self.pairs {
            flat[p.cell()] += 1;
        }
        ClassCounts::from_flat(&flat)
    }

    /// One-hot shop features, one row per shop.
    pub fn shop_features(&self) -> Vec<[f64; 2 * CATEGORIES]> {
        self.pairs.iter().map(|p| p.one_hot()).collect()
    }

    /// Attraction probability `p_ij` of each shop.
    pub fn attractions(&self, params: &AttractionParams) -> Result<Vec<f64>> {
        self.pairs.iter().map(|&p| attraction(p, params)).collect()
    }
}

/// Assigns categories to shops cell by cell in row-major order, drawing each
/// cell's shops uniformly without replacement from those still unassigned.
pub fn assign_features(graph: &MallGraph, counts: &ClassCounts, seed: u64) -> Result<ShopAssignment> {
    let shops = graph.shop_ids();
    if counts.total() != shops.len() {
        return Err(ProbError::CountMismatch {
            counts: counts.total(),
            shops: shops.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = shops.clone();
    let mut entries = Vec::with_capacity(shops.len());
    for (cell, &n) in counts.flatten().iter().enumerate() {
        let pair = CategoryPair::from_cell(cell);
        for _ in 0..n {
            let pick = rng.gen_range(0..pool.len());
            entries.push((pool.swap_remove(pick), pair));
        }
    }
    ShopAssignment::from_pairs(graph, &entries)
}
