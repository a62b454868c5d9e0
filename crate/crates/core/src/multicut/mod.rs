//! Minimum-cost multicut over a [`TrajectoryGraph`].
//!
//! The objective of a multicut `y` is `sum_e c_e * y_e`; a multicut is
//! feasible when it is exactly the set of edges between the connected
//! components left after removing it.

mod exact;
mod gaec;

pub use exact::{solve_exact, EXACT_VERTEX_LIMIT};
pub use gaec::{solve_gaec, solve_gaec_with, GaecOptions};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Multicut, Partition, TrajectoryGraph, VertexId};
use crate::scalar::Scalar;

/// One contraction performed by the greedy solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contraction<W> {
    /// Surviving representative (the smaller vertex id).
    pub a: VertexId,
    /// Vertex merged into `a`.
    pub b: VertexId,
    pub weight: W,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult<W> {
    pub partition: Partition,
    pub multicut: Multicut,
    /// `objective_of` evaluated on the input graph.
    pub objective: W,
    pub components: usize,
    pub contractions: Vec<Contraction<W>>,
}

/// Sorted vertex ids with their dense indices.
pub(crate) struct VertexIndex {
    pub ids: Vec<VertexId>,
    pub index: HashMap<VertexId, usize>,
}

impl VertexIndex {
    pub fn new<W: Scalar>(g: &TrajectoryGraph<W>) -> Self {
        let ids: Vec<VertexId> = g.vertices().collect();
        let index = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        VertexIndex { ids, index }
    }

    pub fn edge_ends(&self, u: VertexId, v: VertexId) -> (usize, usize) {
        (self.index[&u], self.index[&v])
    }
}

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins two sets, keeping the smaller root.
    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn check_len<W: Scalar>(g: &TrajectoryGraph<W>, y: &Multicut) -> Result<()> {
    if y.cut.len() != g.edge_count() {
        return Err(Error::CutLengthMismatch {
            expected: g.edge_count(),
            got: y.cut.len(),
        });
    }
    Ok(())
}

/// `sum_e c_e * y_e`.
pub fn objective_of<W: Scalar>(g: &TrajectoryGraph<W>, y: &Multicut) -> Result<W> {
    check_len(g, y)?;
    Ok(g.edges()
        .iter()
        .zip(&y.cut)
        .filter(|(_, &c)| c)
        .fold(W::zero(), |acc, (e, _)| acc + e.weight))
}

fn uncut_components<W: Scalar>(
    g: &TrajectoryGraph<W>,
    y: &Multicut,
    idx: &VertexIndex,
) -> DisjointSets {
    let mut sets = DisjointSets::new(idx.ids.len());
    for (e, &c) in g.edges().iter().zip(&y.cut) {
        if !c {
            let (a, b) = idx.edge_ends(e.u, e.v);
            sets.union(a, b);
        }
    }
    sets
}

fn first_infeasible<W: Scalar>(
    g: &TrajectoryGraph<W>,
    y: &Multicut,
    idx: &VertexIndex,
    sets: &mut DisjointSets,
) -> Option<usize> {
    g.edges()
        .iter()
        .zip(&y.cut)
        .enumerate()
        .find(|(_, (e, &c))| {
            let (a, b) = idx.edge_ends(e.u, e.v);
            c && sets.find(a) == sets.find(b)
        })
        .map(|(i, _)| i)
}

/// True when no cut edge joins two vertices that stay connected through
/// uncut edges.
pub fn is_feasible<W: Scalar>(g: &TrajectoryGraph<W>, y: &Multicut) -> bool {
    if y.cut.len() != g.edge_count() {
        return false;
    }
    let idx = VertexIndex::new(g);
    let mut sets = uncut_components(g, y, &idx);
    first_infeasible(g, y, &idx, &mut sets).is_none()
}

/// Connected components over uncut edges, labeled in order of each
/// component's smallest vertex id.
pub fn components_of<W: Scalar>(g: &TrajectoryGraph<W>, y: &Multicut) -> Result<Partition> {
    check_len(g, y)?;
    let idx = VertexIndex::new(g);
    let mut sets = uncut_components(g, y, &idx);
    if let Some(e) = first_infeasible(g, y, &idx, &mut sets) {
        return Err(Error::InfeasibleMulticut(e));
    }
    Ok(Partition::from_labels(
        (0..idx.ids.len()).map(|i| (idx.ids[i], sets.find(i))),
    ))
}

fn finish<W: Scalar>(
    g: &TrajectoryGraph<W>,
    partition: Partition,
    contractions: Vec<Contraction<W>>,
) -> Result<SolveResult<W>> {
    let multicut = crate::model::partition_to_multicut(g, &partition)?;
    let objective = objective_of(g, &multicut)?;
    Ok(SolveResult {
        components: partition.num_segments(),
        partition,
        multicut,
        objective,
        contractions,
    })
}
