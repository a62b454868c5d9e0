//! Exhaustive search over all set partitions, for small test instances.

use super::gaec::check_solvable;
use super::{finish, SolveResult, VertexIndex};
use crate::error::{Error, Result};
use crate::model::{Partition, TrajectoryGraph};
use crate::scalar::Scalar;

/// Largest vertex count accepted by [`solve_exact`] (Bell(10) = 115975).
pub const EXACT_VERTEX_LIMIT: usize = 10;

struct Search<'a, W> {
    lower: &'a [Vec<(usize, W)>],
    labels: Vec<usize>,
    best: Option<(W, usize, Vec<usize>)>,
}

impl<W: Scalar> Search<'_, W> {
    // Labels are restricted growth strings visited in lexicographic order,
    // so the first optimum found at a given component count is the
    // lexicographically smallest one.
    fn descend(&mut self, i: usize, used: usize, cost: W) {
        if i == self.labels.len() {
            let better = match &self.best {
                None => true,
                Some((c, k, _)) => cost < *c || (cost == *c && used < *k),
            };
            if better {
                self.best = Some((cost, used, self.labels.clone()));
            }
            return;
        }
        for l in 0..=used {
            let added = self.lower[i]
                .iter()
                .filter(|(j, _)| self.labels[*j] != l)
                .fold(W::zero(), |acc, (_, w)| acc + *w);
            self.labels[i] = l;
            self.descend(i + 1, used.max(l + 1), cost + added);
        }
    }
}

/// Minimum-objective partition by enumeration. Ties go to fewer components,
/// then to the lexicographically smallest label vector over vertices in id
/// order.
pub fn solve_exact<W: Scalar>(g: &TrajectoryGraph<W>) -> Result<SolveResult<W>> {
    let n = g.vertex_count();
    if n > EXACT_VERTEX_LIMIT {
        return Err(Error::TooLargeForExact(n));
    }
    check_solvable(g)?;
    let idx = VertexIndex::new(g);
    let mut lower: Vec<Vec<(usize, W)>> = vec![Vec::new(); n];
    for e in g.edges() {
        let (u, v) = idx.edge_ends(e.u, e.v);
        lower[u.max(v)].push((u.min(v), e.weight));
    }
    let mut search = Search {
        lower: &lower,
        labels: vec![0; n],
        best: None,
    };
    search.descend(0, 0, W::zero());
    let labels = search.best.map(|(_, _, l)| l).unwrap_or_default();
    let partition = Partition::from_labels((0..n).map(|i| (idx.ids[i], labels[i])));
    finish(g, partition, Vec::new())
}
