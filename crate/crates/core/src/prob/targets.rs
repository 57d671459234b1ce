use super::{AttractionParams, ProbError, Result, ShopAssignment, CATEGORIES};
use crate::graph::{MallGraph, NodeId, ShortestPathDag};

/// Per-edge usage probabilities in canonical edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetVector {
    pub t: Vec<f64>,
}

impl TargetVector {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Entrance-to-shop routing facts of one mall, independent of any
/// assignment: the single tie-broken route of every pair (as canonical edge
/// slots) and every non-shop node's count of all shortest paths of that pair.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    entrances: Vec<NodeId>,
    shops: Vec<NodeId>,
    n_nonshop: usize,
    n_edges: usize,
    routes: Vec<Vec<Vec<u32>>>,
    through: Vec<Vec<Vec<(u32, u64)>>>,
}

impl RoutingTable {
    pub fn new(graph: &MallGraph) -> Result<Self> {
        let entrances = graph.entrance_ids();
        let shops = graph.shop_ids();
        if shops.is_empty() {
            return Err(ProbError::NoShops);
        }
        if entrances.is_empty() {
            return Err(ProbError::NoEntrances);
        }
        let nonshops = graph.nonshop_ids();
        let mut nonshop_row = vec![u32::MAX; graph.num_nodes()];
        for (r, &n) in nonshops.iter().enumerate() {
            nonshop_row[n] = r as u32;
        }
        let mut routes = Vec::with_capacity(entrances.len());
        let mut through = Vec::with_capacity(entrances.len());
        for &e in &entrances {
            let dag = ShortestPathDag::new(graph, e)?;
            let mut er = Vec::with_capacity(shops.len());
            let mut et = Vec::with_capacity(shops.len());
            for &s in &shops {
                if !dag.is_reachable(s) {
                    return Err(ProbError::Unreachable { entrance: e, shop: s });
                }
                let slots = dag
                    .route_edges(s)?
                    .into_iter()
                    .map(|k| graph.canonical_position(k) as u32)
                    .collect();
                let counts = dag.counts_to(graph, s)?;
                let on_path = counts
                    .through_node
                    .iter()
                    .enumerate()
                    .filter(|&(n, &c)| c > 0 && nonshop_row[n] != u32::MAX)
                    .map(|(n, &c)| (nonshop_row[n], c))
                    .collect();
                er.push(slots);
                et.push(on_path);
            }
            routes.push(er);
            through.push(et);
        }
        Ok(RoutingTable {
            entrances,
            shops,
            n_nonshop: nonshops.len(),
            n_edges: graph.num_edges(),
            routes,
            through,
        })
    }

    pub fn entrances(&self) -> &[NodeId] {
        &self.entrances
    }

    pub fn shops(&self) -> &[NodeId] {
        &self.shops
    }

    pub fn num_nonshop(&self) -> usize {
        self.n_nonshop
    }

    pub fn num_edges(&self) -> usize {
        self.n_edges
    }

    /// Canonical edge slots on the route from entrance row `e` to shop row `s`.
    pub fn route(&self, e: usize, s: usize) -> &[u32] {
        &self.routes[e][s]
    }

    /// `(non-shop row, shortest-path count)` for nodes on any shortest path.
    pub fn through(&self, e: usize, s: usize) -> &[(u32, u64)] {
        &self.through[e][s]
    }

    fn check(&self, assignment: &ShopAssignment) -> Result<()> {
        if assignment.shops() != self.shops.as_slice() {
            return Err(ProbError::InvalidAssignment(
                "assignment does not cover this mall's shops".into(),
            ));
        }
        Ok(())
    }

    /// Attraction mass renormalized over nonempty cells, split evenly among
    /// the cell's shops. Returns `(per-cell mass, per-shop weight)`.
    pub(crate) fn shop_weights(
        &self,
        assignment: &ShopAssignment,
        params: &AttractionParams,
    ) -> Result<([f64; CATEGORIES * CATEGORIES], Vec<f64>)> {
        self.check(assignment)?;
        let counts = assignment.counts().flatten();
        let mut cell_mass = [0.0; CATEGORIES * CATEGORIES];
        for (c, m) in cell_mass.iter_mut().enumerate() {
            if counts[c] > 0 {
                *m = super::attraction(super::CategoryPair::from_cell(c), params)?;
            }
        }
        let total: f64 = cell_mass.iter().sum();
        for m in &mut cell_mass {
            *m /= total;
        }
        let weights = assignment
            .pairs()
            .iter()
            .map(|p| cell_mass[p.cell()] / counts[p.cell()] as f64)
            .collect();
        Ok((cell_mass, weights))
    }

    /// Closed-form usage probabilities for one assignment.
    pub fn targets(&self, assignment: &ShopAssignment, params: &AttractionParams) -> Result<TargetVector> {
        params.check()?;
        let entrance_w = params.weights_for(self.entrances.len())?;
        let (_, shop_w) = self.shop_weights(assignment, params)?;
        let mut t = vec![0.0; self.n_edges];
        for (e, &we) in entrance_w.iter().enumerate() {
            for (s, &ws) in shop_w.iter().enumerate() {
                let w = we * ws;
                for &slot in self.route(e, s) {
                    t[slot as usize] += w;
                }
            }
        }
        for x in &mut t {
            *x = x.clamp(0.0, 1.0);
        }
        Ok(TargetVector { t })
    }
}

/// Usage probability of every edge: the expected fraction of entrants whose
/// route crosses it.
pub fn compute_targets(
    graph: &MallGraph,
    assignment: &ShopAssignment,
    params: &AttractionParams,
) -> Result<TargetVector> {
    RoutingTable::new(graph)?.targets(assignment, params)
}
