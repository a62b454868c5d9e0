//! Incremental construction of the trajectory/box graph and the bias that
//! controls segment size.
//!
//! A [`GraphBuilder`] consumes one frame at a time. Each frame carries the
//! current image position of every live track and the object boxes detected
//! in that frame. A trajectory that is not updated in a frame is retired and
//! its id may not come back. An edge joins a trajectory and a box whenever
//! the trajectory's point in the box's frame lies inside the box.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_graph, FrameId, ImageExtent, ObjectBox, PointTrajectory, TrackSample, TrajectoryGraph,
    VertexId,
};
use crate::scalar::{cmp_weights, Scalar};

/// How repeated trajectory/box co-occurrences are weighted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AffinityMode {
    /// Every edge has weight 1.
    #[default]
    Unit,
    /// Weight counts the frames in which the pair co-occurred (only differs
    /// from `Unit` when a box id spans several frames).
    CovisibilityCount,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuilderConfig {
    pub affinity: AffinityMode,
    /// Fraction `q` selecting the bias rank statistic.
    pub bias_fraction: f64,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig {
            affinity: AffinityMode::Unit,
            bias_fraction: 0.2,
        }
    }
}

/// One track position reported in a frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackUpdate {
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

/// Inclusive point-in-box test.
pub fn membership_test(point: (f64, f64), object_box: &ObjectBox) -> bool {
    object_box.bbox.contains(point.0, point.1)
}

pub struct GraphBuilder<W> {
    extent: ImageExtent,
    config: BuilderConfig,
    last_frame: Option<FrameId>,
    live: HashMap<u64, Vec<TrackSample>>,
    retired: HashSet<u64>,
    finished: Vec<PointTrajectory>,
    boxes: Vec<ObjectBox>,
    graph: TrajectoryGraph<W>,
    edge_index: HashMap<(VertexId, VertexId), usize>,
}

/// Output of a finished build.
#[derive(Clone, Debug)]
pub struct BuiltGraph<W> {
    pub graph: TrajectoryGraph<W>,
    /// All trajectories, sorted by id.
    pub trajectories: Vec<PointTrajectory>,
    pub boxes: Vec<ObjectBox>,
}

impl<W: Scalar> GraphBuilder<W> {
    pub fn new(extent: ImageExtent, config: BuilderConfig) -> Self {
        GraphBuilder {
            extent,
            config,
            last_frame: None,
            live: HashMap::new(),
            retired: HashSet::new(),
            finished: Vec::new(),
            boxes: Vec::new(),
            graph: TrajectoryGraph::new(),
            edge_index: HashMap::new(),
        }
    }

    pub fn config(&self) -> &BuilderConfig {
        &self.config
    }

    pub fn graph(&self) -> &TrajectoryGraph<W> {
        &self.graph
    }

    pub fn live_track_count(&self) -> usize {
        self.live.len()
    }

    /// Adds one frame of measurements. On error the builder is unchanged.
    pub fn ingest_frame(
        &mut self,
        frame: FrameId,
        updates: &[TrackUpdate],
        boxes: &[ObjectBox],
    ) -> Result<()> {
        if let Some(prev) = self.last_frame {
            if frame <= prev {
                return Err(Error::OutOfOrderFrame {
                    frame: frame.0,
                    previous: prev.0,
                });
            }
        }
        let contiguous = self.last_frame.is_some_and(|p| p.0 + 1 == frame.0);

        let mut seen = HashSet::with_capacity(updates.len());
        for u in updates {
            if !self.extent.contains(u.x, u.y) {
                return Err(Error::PointOutsideImage {
                    id: u.id,
                    x: u.x,
                    y: u.y,
                    width: self.extent.width,
                    height: self.extent.height,
                });
            }
            if !seen.insert(u.id) {
                return Err(Error::DuplicateUpdate {
                    id: u.id,
                    frame: frame.0,
                });
            }
            if self.retired.contains(&u.id) || (!contiguous && self.live.contains_key(&u.id)) {
                return Err(Error::RetiredTrajectory(u.id));
            }
        }
        let mut frame_boxes = HashSet::with_capacity(boxes.len());
        for b in boxes {
            let checked = ObjectBox::new(b.id, b.frame, b.bbox, &self.extent)?;
            if checked.frame != frame {
                return Err(Error::InvalidBox {
                    id: b.id,
                    reason: format!("box belongs to frame {} not {}", b.frame.0, frame.0),
                });
            }
            if !frame_boxes.insert(b.id) {
                return Err(Error::InvalidBox {
                    id: b.id,
                    reason: format!("box id repeated within frame {}", frame.0),
                });
            }
        }

        // Tracks missing from this frame are lost for good.
        let lost: Vec<u64> = self
            .live
            .keys()
            .filter(|id| !seen.contains(id))
            .copied()
            .collect();
        for id in lost {
            let samples = self.live.remove(&id).expect("live track");
            self.retire(id, samples);
        }

        for u in updates {
            self.graph.add_vertex(VertexId::trajectory(u.id));
            self.live.entry(u.id).or_default().push(TrackSample {
                frame,
                x: u.x,
                y: u.y,
            });
        }

        for b in boxes {
            let bv = VertexId::object_box(b.id);
            self.graph.add_vertex(bv);
            self.boxes.push(*b);
            for u in updates {
                if !membership_test((u.x, u.y), b) {
                    continue;
                }
                let tv = VertexId::trajectory(u.id);
                match self.edge_index.get(&(tv, bv)) {
                    Some(&e) => {
                        if self.config.affinity == AffinityMode::CovisibilityCount {
                            let w = &mut self.graph.edges_mut()[e].weight;
                            *w = *w + W::one();
                        }
                    }
                    None => {
                        let e = self.graph.add_edge(tv, bv, W::one());
                        self.edge_index.insert((tv, bv), e);
                    }
                }
            }
        }

        self.last_frame = Some(frame);
        debug_assert!(validate_graph(&self.graph).is_ok());
        Ok(())
    }

    fn retire(&mut self, id: u64, samples: Vec<TrackSample>) {
        self.retired.insert(id);
        let t = PointTrajectory::new(id, samples, &self.extent)
            .expect("samples were validated on ingest");
        self.finished.push(t);
    }

    pub fn finish(mut self) -> BuiltGraph<W> {
        let live: Vec<(u64, Vec<TrackSample>)> = self.live.drain().collect();
        for (id, samples) in live {
            self.retire(id, samples);
        }
        self.finished.sort_by_key(|t| t.id);
        BuiltGraph {
            graph: self.graph,
            trajectories: self.finished,
            boxes: self.boxes,
        }
    }
}

/// Summary of the bias selection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasReport<W> {
    pub c_o: W,
    pub fraction: f64,
    pub edge_count: usize,
    /// True when all weights were equal and the fallback rule was used.
    pub degenerate: bool,
    pub min_weight: W,
    pub max_weight: W,
    /// Number of edges per distinct pre-bias weight, ascending by weight
    /// (weights rendered with `{:?}`).
    pub histogram: BTreeMap<String, usize>,
}

fn rank_for(fraction: f64, n: usize) -> usize {
    // Guard the ceiling against representation error, e.g. 0.1 * 30.
    let k = (fraction * n as f64 - 1e-9).ceil() as usize;
    k.clamp(1, n)
}

/// Bias `c_o`: the weight at rank `ceil(q * |E|)` in descending order, or
/// `q` times the common weight when all weights are equal.
pub fn compute_bias<W: Scalar>(weights: &[W], fraction: f64) -> Result<W> {
    if weights.is_empty() {
        return Err(Error::EmptyWeights);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::BadFraction(fraction));
    }
    let first = weights[0];
    if weights.iter().all(|w| *w == first) {
        let q = W::from_f64(fraction)
            .ok_or_else(|| Error::Config(format!("fraction {fraction} not representable")))?;
        return Ok(q * first);
    }
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| cmp_weights(b, a));
    Ok(sorted[rank_for(fraction, sorted.len()) - 1])
}

pub fn bias_report<W: Scalar>(weights: &[W], fraction: f64) -> Result<BiasReport<W>> {
    let c_o = compute_bias(weights, fraction)?;
    let degenerate = weights.iter().all(|w| *w == weights[0]);
    let mut sorted = weights.to_vec();
    sorted.sort_by(cmp_weights);
    let mut histogram = BTreeMap::new();
    for w in &sorted {
        *histogram.entry(format!("{w:?}")).or_insert(0) += 1;
    }
    Ok(BiasReport {
        c_o,
        fraction,
        edge_count: weights.len(),
        degenerate,
        min_weight: sorted[0],
        max_weight: sorted[sorted.len() - 1],
        histogram,
    })
}

/// Subtracts `c_o` from every edge weight.
pub fn apply_bias<W: Scalar>(g: &TrajectoryGraph<W>, c_o: W) -> TrajectoryGraph<W> {
    g.map_weights(|w| w - c_o)
}
