//! Greedy additive edge contraction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use super::{components_of, finish, objective_of, Contraction, DisjointSets, SolveResult, VertexIndex};
use crate::error::{Error, Result};
use crate::model::{partition_to_multicut, Partition, TrajectoryGraph, Violation};
use crate::scalar::{cmp_weights, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaecOptions {
    /// Run single-vertex label moves after contraction.
    pub local_moves: bool,
    pub max_sweeps: usize,
}

impl Default for GaecOptions {
    fn default() -> Self {
        GaecOptions {
            local_moves: false,
            max_sweeps: 5,
        }
    }
}

struct Candidate<W> {
    weight: W,
    a: usize,
    b: usize,
}

impl<W: Scalar> PartialEq for Candidate<W> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<W: Scalar> Eq for Candidate<W> {}

impl<W: Scalar> PartialOrd for Candidate<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<W: Scalar> Ord for Candidate<W> {
    // Max-heap: heaviest first, then the smallest endpoint pair.
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_weights(&self.weight, &other.weight)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

/// Self loops, parallel edges and non-finite weights are rejected; the
/// solver itself does not need the graph to be bipartite.
pub(super) fn check_solvable<W: Scalar>(g: &TrajectoryGraph<W>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for (i, e) in g.edges().iter().enumerate() {
        let violation = if e.u == e.v {
            Some(Violation::SelfLoop { edge: i })
        } else if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
            Some(Violation::DuplicateEdge { edge: i })
        } else if !e.weight.is_finite_weight() {
            Some(Violation::NonFiniteWeight { edge: i })
        } else {
            None
        };
        if let Some(v) = violation {
            return Err(Error::Invariant(v.to_string()));
        }
    }
    Ok(())
}

pub fn solve_gaec<W: Scalar>(g: &TrajectoryGraph<W>) -> Result<SolveResult<W>> {
    solve_gaec_with(g, &GaecOptions::default())
}

pub fn solve_gaec_with<W: Scalar>(
    g: &TrajectoryGraph<W>,
    options: &GaecOptions,
) -> Result<SolveResult<W>> {
    check_solvable(g)?;
    let idx = VertexIndex::new(g);
    let n = idx.ids.len();

    let mut adj: Vec<HashMap<usize, W>> = vec![HashMap::new(); n];
    let mut heap = BinaryHeap::new();
    for e in g.edges() {
        let (u, v) = idx.edge_ends(e.u, e.v);
        adj[u].insert(v, e.weight);
        adj[v].insert(u, e.weight);
        if e.weight.is_positive_weight() {
            heap.push(Candidate {
                weight: e.weight,
                a: u.min(v),
                b: u.max(v),
            });
        }
    }

    let mut sets = DisjointSets::new(n);
    let mut alive = vec![true; n];
    let mut contractions = Vec::new();

    while let Some(Candidate { weight, a, b }) = heap.pop() {
        if !weight.is_positive_weight() {
            break;
        }
        // Stale entries: an endpoint was merged away or the weight changed.
        if !alive[a] || !alive[b] || adj[a].get(&b) != Some(&weight) {
            continue;
        }
        contractions.push(Contraction {
            a: idx.ids[a],
            b: idx.ids[b],
            weight,
        });
        adj[a].remove(&b);
        let moved = std::mem::take(&mut adj[b]);
        for (c, w_bc) in moved {
            if c == a {
                continue;
            }
            adj[c].remove(&b);
            let merged = match adj[a].get(&c) {
                Some(&w_ac) => w_ac + w_bc,
                None => w_bc,
            };
            adj[a].insert(c, merged);
            adj[c].insert(a, merged);
            if merged.is_positive_weight() {
                heap.push(Candidate {
                    weight: merged,
                    a: a.min(c),
                    b: a.max(c),
                });
            }
        }
        alive[b] = false;
        sets.union(a, b);
    }

    let labels: Vec<usize> = (0..n).map(|i| sets.find(i)).collect();
    let partition = if options.local_moves {
        let improved = local_moves(g, &idx, labels, options.max_sweeps);
        let p = Partition::from_labels((0..n).map(|i| (idx.ids[i], improved[i])));
        // A moved vertex can disconnect its old label; split into components.
        components_of(g, &partition_to_multicut(g, &p)?)?
    } else {
        Partition::from_labels((0..n).map(|i| (idx.ids[i], labels[i])))
    };
    let result = finish(g, partition, contractions)?;
    debug_assert_eq!(
        objective_of(g, &result.multicut).ok(),
        Some(result.objective)
    );
    Ok(result)
}

/// Moves single vertices to the label that lowers the objective most,
/// accepting only strict improvements.
fn local_moves<W: Scalar>(
    g: &TrajectoryGraph<W>,
    idx: &VertexIndex,
    mut labels: Vec<usize>,
    max_sweeps: usize,
) -> Vec<usize> {
    let n = labels.len();
    let mut nbrs: Vec<Vec<(usize, W)>> = vec![Vec::new(); n];
    for e in g.edges() {
        let (u, v) = idx.edge_ends(e.u, e.v);
        nbrs[u].push((v, e.weight));
        nbrs[v].push((u, e.weight));
    }
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for &l in &labels {
        *sizes.entry(l).or_insert(0) += 1;
    }
    let mut fresh = n;

    for _ in 0..max_sweeps {
        let mut improved = false;
        for v in 0..n {
            let own = labels[v];
            let mut toward: BTreeMap<usize, W> = BTreeMap::new();
            for &(u, w) in &nbrs[v] {
                let e = toward.entry(labels[u]).or_insert_with(W::zero);
                *e = *e + w;
            }
            let own_weight = toward.get(&own).copied().unwrap_or_else(W::zero);
            // Moving v from `own` to L changes the objective by
            // own_weight - weight(v, L).
            let mut best: Option<(W, usize)> = None;
            for (&l, &w) in &toward {
                if l == own {
                    continue;
                }
                let delta = own_weight - w;
                if best.is_none_or(|(d, _)| cmp_weights(&delta, &d) == Ordering::Less) {
                    best = Some((delta, l));
                }
            }
            if sizes[&own] > 1
                && best.is_none_or(|(d, _)| cmp_weights(&own_weight, &d) == Ordering::Less)
            {
                best = Some((own_weight, fresh));
            }
            if let Some((delta, target)) = best {
                if delta < W::zero() {
                    *sizes.get_mut(&own).unwrap() -= 1;
                    *sizes.entry(target).or_insert(0) += 1;
                    if target == fresh {
                        fresh += 1;
                    }
                    labels[v] = target;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    labels
}
