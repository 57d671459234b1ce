//! The shopper probability model.
//!
//! Shops carry an area category `i` and a usage-density category `j`, both
//! in `1..=5`. Their attraction probability is the product of two linear
//! marginals. Shopper routes run from entrances to shops along single
//! shortest paths; the fraction of shoppers crossing an edge is that edge's
//! usage probability `t_k`.

mod assign;
mod counts;
mod features;
mod montecarlo;
mod targets;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, NodeId};

pub use assign::{assign_features, ShopAssignment};
pub use counts::{bin_masses, class_counts, class_counts_sampled, largest_remainder, ClassCounts, CountMode};
pub use features::{graph_features, nonshop_features, GRAPH_FEATURES, NODE_FEATURES};
pub use montecarlo::{binomial_agreement, monte_carlo_usage, Agreement};
pub use targets::{compute_targets, RoutingTable, TargetVector};

pub const CATEGORIES: usize = 5;

#[derive(Debug, Error)]
pub enum ProbError {
    #[error("category {0} is outside 1..=5")]
    CategoryOutOfRange(usize),
    #[error("class counts total {counts} but the graph has {shops} shops")]
    CountMismatch { counts: usize, shops: usize },
    #[error("shop {shop} is unreachable from entrance {entrance}")]
    Unreachable { entrance: NodeId, shop: NodeId },
    #[error("graph has no shops")]
    NoShops,
    #[error("graph has no entrances")]
    NoEntrances,
    #[error("invalid attraction parameters: {0}")]
    InvalidParams(String),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, ProbError>;

/// Slopes and spreads of the attraction model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractionParams {
    /// Per-entrance prior in ascending entrance-id order; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entrance_weights: Option<Vec<f64>>,
    pub m_a: f64,
    pub m_u: f64,
    pub sigma_a: f64,
    pub sigma_u: f64,
}

impl Default for AttractionParams {
    fn default() -> Self {
        AttractionParams {
            entrance_weights: None,
            m_a: 1.0,
            m_u: 0.5,
            sigma_a: 1.1,
            sigma_u: 1.1,
        }
    }
}

impl AttractionParams {
    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("m_a", self.m_a),
            ("m_u", self.m_u),
            ("sigma_a", self.sigma_a),
            ("sigma_u", self.sigma_u),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ProbError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(w) = &self.entrance_weights {
            if w.iter().any(|&x| !(x >= 0.0)) {
                return Err(ProbError::InvalidParams("entrance weights must be nonnegative".into()));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(ProbError::InvalidParams(format!(
                    "entrance weights sum to {s}, expected 1"
                )));
            }
        }
        Ok(())
    }

    /// Entrance weights for a graph with `n` entrances.
    pub fn weights_for(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(ProbError::NoEntrances);
        }
        match &self.entrance_weights {
            None => Ok(vec![1.0 / n as f64; n]),
            Some(w) if w.len() == n => Ok(w.clone()),
            Some(w) => Err(ProbError::InvalidParams(format!(
                "{} entrance weights given for {n} entrances",
                w.len()
            ))),
        }
    }
}

/// Area category `i` and usage-density category `j`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CategoryPair {
    i: u8,
    j: u8,
}

impl CategoryPair {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        for c in [i, j] {
            if !(1..=CATEGORIES).contains(&c) {
                return Err(ProbError::CategoryOutOfRange(c));
            }
        }
        Ok(CategoryPair { i: i as u8, j: j as u8 })
    }

    pub fn area(self) -> usize {
        self.i as usize
    }

    pub fn usage(self) -> usize {
        self.j as usize
    }

    /// Row-major cell index in `0..25`, area outermost.
    pub fn cell(self) -> usize {
        (self.area() - 1) * CATEGORIES + self.usage() - 1
    }

    pub fn from_cell(cell: usize) -> Self {
        CategoryPair {
            i: (cell / CATEGORIES + 1) as u8,
            j: (cell % CATEGORIES + 1) as u8,
        }
    }

    /// One-hot area block followed by one-hot usage block.
    pub fn one_hot(self) -> [f64; 2 * CATEGORIES] {
        let mut f = [0.0; 2 * CATEGORIES];
        f[self.area() - 1] = 1.0;
        f[CATEGORIES + self.usage() - 1] = 1.0;
        f
    }
}

fn linear_probability(c: usize, slope: f64) -> Result<f64> {
    if !(1..=CATEGORIES).contains(&c) {
        return Err(ProbError::CategoryOutOfRange(c));
    }
    if !(slope > 0.0) {
        return Err(ProbError::InvalidParams(format!("slope must be positive, got {slope}")));
    }
    Ok((1.0 + slope * c as f64) / (5.0 + 15.0 * slope))
}

/// `p_i = (1 + m_a i) / (5 + 15 m_a)`.
pub fn area_probability(i: usize, m_a: f64) -> Result<f64> {
    linear_probability(i, m_a)
}

/// `p_j = (1 + m_u j) / (5 + 15 m_u)`.
pub fn usage_probability(j: usize, m_u: f64) -> Result<f64> {
    linear_probability(j, m_u)
}

pub fn attraction(pair: CategoryPair, params: &AttractionParams) -> Result<f64> {
    Ok(area_probability(pair.area(), params.m_a)? * usage_probability(pair.usage(), params.m_u)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_probability_endpoints() {
        assert!((area_probability(1, 1.0).unwrap() - 0.10).abs() < 1e-15);
        assert!((area_probability(5, 1.0).unwrap() - 0.30).abs() < 1e-15);
        assert!(matches!(area_probability(0, 1.0), Err(ProbError::CategoryOutOfRange(0))));
        assert!(matches!(area_probability(6, 1.0), Err(ProbError::CategoryOutOfRange(6))));
    }

    #[test]
    fn usage_probability_endpoints() {
        assert!((usage_probability(1, 0.5).unwrap() - 0.12).abs() < 1e-15);
        assert!((usage_probability(5, 0.5).unwrap() - 0.28).abs() < 1e-15);
    }

    #[test]
    fn attraction_products() {
        let d = AttractionParams::default();
        let p33 = attraction(CategoryPair::new(3, 3).unwrap(), &d).unwrap();
        let p55 = attraction(CategoryPair::new(5, 5).unwrap(), &d).unwrap();
        assert!((p33 - 0.04).abs() < 1e-15);
        assert!((p55 - 0.084).abs() < 1e-15);
        let total: f64 = (0..25)
            .map(|c| attraction(CategoryPair::from_cell(c), &d).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_hot_layout() {
        let f = CategoryPair::new(2, 4).unwrap().one_hot();
        assert_eq!(f, [0., 1., 0., 0., 0., 0., 0., 0., 1., 0.]);
        for c in 0..25 {
            assert_eq!(CategoryPair::from_cell(c).cell(), c);
        }
    }

    #[test]
    fn params_checks() {
        assert!(AttractionParams::default().check().is_ok());
        let bad = AttractionParams { m_a: 0.0, ..Default::default() };
        assert!(bad.check().is_err());
        let w = AttractionParams { entrance_weights: Some(vec![0.5, 0.4]), ..Default::default() };
        assert!(w.check().is_err());
        let w = AttractionParams { entrance_weights: Some(vec![0.25, 0.75]), ..Default::default() };
        assert!(w.check().is_ok());
        assert!(w.weights_for(3).is_err());
        assert_eq!(AttractionParams::default().weights_for(4).unwrap(), vec![0.25; 4]);
    }

    proptest::proptest! {
        #[test]
        fn marginals_normalize_and_increase(m_a in 1e-3f64..50.0, m_u in 1e-3f64..50.0) {
            let pa: Vec<f64> = (1..=5).map(|i| area_probability(i, m_a).unwrap()).collect();
            let pu: Vec<f64> = (1..=5).map(|j| usage_probability(j, m_u).unwrap()).collect();
            proptest::prop_assert!((pa.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            proptest::prop_assert!((pu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            proptest::prop_assert!(pa.windows(2).all(|w| w[0] < w[1]));
            proptest::prop_assert!(pu.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
