//! How many shops fall in each (area, usage) cell.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{AttractionParams, CategoryPair, CATEGORIES};

/// Whether cell counts are the rounded expectation or a multinomial draw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    #[default]
    Expected,
    Sampled,
}

/// 5x5 shop counts; `counts[i-1][j-1]` is the number of shops in cell (i, j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub counts: [[usize; CATEGORIES]; CATEGORIES],
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, pair: CategoryPair) -> usize {
        self.counts[pair.area() - 1][pair.usage() - 1]
    }

    /// Row-major, area index outermost.
    pub fn flatten(&self) -> [usize; CATEGORIES * CATEGORIES] {
        let mut out = [0; CATEGORIES * CATEGORIES];
        for (c, slot) in out.iter_mut().enumerate() {
            *slot = self.counts[c / CATEGORIES][c % CATEGORIES];
        }
        out
    }

    pub fn from_flat(flat: &[usize]) -> Self {
        let mut counts = [[0; CATEGORIES]; CATEGORIES];
        for (c, &n) in flat.iter().enumerate().take(CATEGORIES * CATEGORIES) {
            counts[c / CATEGORIES][c % CATEGORIES] = n;
        }
        ClassCounts { counts }
    }

    pub fn area_marginal(&self) -> [usize; CATEGORIES] {
        let mut m = [0; CATEGORIES];
        for (i, row) in self.counts.iter().enumerate() {
            m[i] = row.iter().sum();
        }
        m
    }

    pub fn usage_marginal(&self) -> [usize; CATEGORIES] {
        let mut m = [0; CATEGORIES];
        for row in &self.counts {
            for (j, &n) in row.iter().enumerate() {
                m[j] += n;
            }
        }
        m
    }
}

/// Probability mass of N(3, sigma) over the bins `x<1.5`, `[1.5,2.5)`,
/// `[2.5,3.5)`, `[3.5,4.5)`, `x>=4.5`. Computed from lower-tail CDF values
/// only, so the result is exactly symmetric.
pub fn bin_masses(sigma: f64) -> [f64; CATEGORIES] {
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let outer = std.cdf(-1.5 / sigma);
    let inner = std.cdf(-0.5 / sigma);
    let q2 = inner - outer;
    [outer, q2, 1.0 - 2.0 * inner, q2, outer]
}

/// Integer apportionment of `n` by largest remainder. Remainders equal within
/// 1e-12 go to the lower index first.
pub fn largest_remainder(masses: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = masses.iter().sum();
    let quotas: Vec<f64> = masses.iter().map(|m| m / total * n as f64).collect();
    let mut out: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut idx: Vec<usize> = (0..masses.len()).collect();
    idx.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        if (ra - rb).abs() <= 1e-12 {
            a.cmp(&b)
        } else {
            rb.total_cmp(&ra)
        }
    });
    for &k in idx.iter().take(n.saturating_sub(assigned)) {
        out[k] += 1;
    }
    out
}

fn cell_masses(params: &AttractionParams) -> [f64; CATEGORIES * CATEGORIES] {
    let qa = bin_masses(params.sigma_a);
    let qu = bin_masses(params.sigma_u);
    let mut m = [0.0; CATEGORIES * CATEGORIES];
    for (c, slot) in m.iter_mut().enumerate() {
        *slot = qa[c / CATEGORIES] * qu[c % CATEGORIES];
    }
    m
}

/// Expected cell counts: product-of-marginals masses rounded by largest
/// remainder over the 25 cells.
pub fn class_counts(n_shops: usize, params: &AttractionParams) -> ClassCounts {
    ClassCounts::from_flat(&largest_remainder(&cell_masses(params), n_shops))
}

/// Multinomial draw of `n_shops` shops over the same cell masses.
pub fn class_counts_sampled<R: Rng>(n_shops: usize, params: &AttractionParams, rng: &mut R) -> ClassCounts {
    let dist = WeightedIndex::new(cell_masses(params)).expect("positive masses");
    let mut flat = [0usize; CATEGORIES * CATEGORIES];
    for _ in 0..n_shops {
        flat[dist.sample(rng)] += 1;
    }
    ClassCounts::from_flat(&flat)
}
