//! Shared domain types: trajectories, object boxes, the trajectory graph,
//! partitions, multicuts, mined segments and pose logs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Frame number within a view sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameId(pub u64);

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

const BOX_TAG: u64 = 1 << 63;

/// Graph vertex id. Trajectory and box ids occupy disjoint halves of the
/// `u64` range (the top bit marks boxes), so every trajectory vertex sorts
/// before every box vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexKind {
    Trajectory,
    ObjectBox,
}

impl VertexId {
    pub fn trajectory(id: u64) -> Self {
        assert!(id < BOX_TAG, "trajectory id {id} exceeds the id range");
        VertexId(id)
    }

    pub fn object_box(id: u64) -> Self {
        assert!(id < BOX_TAG, "box id {id} exceeds the id range");
        VertexId(id | BOX_TAG)
    }

    pub fn kind(self) -> VertexKind {
        if self.0 & BOX_TAG == 0 {
            VertexKind::Trajectory
        } else {
            VertexKind::ObjectBox
        }
    }

    pub fn is_trajectory(self) -> bool {
        self.kind() == VertexKind::Trajectory
    }

    /// The trajectory or box id without the kind tag.
    pub fn raw(self) -> u64 {
        self.0 & !BOX_TAG
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            VertexKind::Trajectory => write!(f, "t{}", self.raw()),
            VertexKind::ObjectBox => write!(f, "b{}", self.raw()),
        }
    }
}

/// Image size in pixels. Valid coordinates are `0 <= x <= width`,
/// `0 <= y <= height`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageExtent {
    pub width: f64,
    pub height: f64,
}

impl ImageExtent {
    pub fn new(width: f64, height: f64) -> Self {
        ImageExtent { width, height }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn full_box(&self) -> BBox {
        BBox::new(0.0, 0.0, self.width, self.height)
    }
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// Degenerate box around one point.
    pub fn point(x: f64, y: f64) -> Self {
        BBox::new(x, y, x, y)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    /// Inclusive containment test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x_min <= x && x <= self.x_max && self.y_min <= y && y <= self.y_max
    }

    pub fn expand_to(&mut self, x: f64, y: f64) {
        self.x_min = self.x_min.min(x);
        self.y_min = self.y_min.min(y);
        self.x_max = self.x_max.max(x);
        self.y_max = self.y_max.max(y);
    }

    pub fn clipped(&self, extent: &ImageExtent) -> BBox {
        BBox::new(
            self.x_min.clamp(0.0, extent.width),
            self.y_min.clamp(0.0, extent.height),
            self.x_max.clamp(0.0, extent.width),
            self.y_max.clamp(0.0, extent.height),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub frame: FrameId,
    pub x: f64,
    pub y: f64,
}

/// A tracked feature: one image point per frame over a contiguous frame range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTrajectory {
    pub id: u64,
    samples: Vec<TrackSample>,
}

impl PointTrajectory {
    pub fn new(id: u64, samples: Vec<TrackSample>, extent: &ImageExtent) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Invariant(format!("trajectory {id} has no samples")));
        }
        for pair in samples.windows(2) {
            if pair[1].frame.0 != pair[0].frame.0 + 1 {
                return Err(Error::Invariant(format!(
                    "trajectory {id} jumps from frame {} to frame {}",
                    pair[0].frame.0, pair[1].frame.0
                )));
            }
        }
        if let Some(s) = samples.iter().find(|s| !extent.contains(s.x, s.y)) {
            return Err(Error::PointOutsideImage {
                id,
                x: s.x,
                y: s.y,
                width: extent.width,
                height: extent.height,
            });
        }
        Ok(PointTrajectory { id, samples })
    }

    pub fn samples(&self) -> &[TrackSample] {
        &self.samples
    }

    pub fn first_frame(&self) -> FrameId {
        self.samples[0].frame
    }

    pub fn last_frame(&self) -> FrameId {
        self.samples[self.samples.len() - 1].frame
    }

    pub fn point_at(&self, frame: FrameId) -> Option<(f64, f64)> {
        let offset = frame.0.checked_sub(self.first_frame().0)? as usize;
        self.samples.get(offset).map(|s| (s.x, s.y))
    }
}

/// A class-agnostic object proposal in one frame. Several records may share
/// an id when an upstream tracker associates boxes across frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectBox {
    pub id: u64,
    pub frame: FrameId,
    pub bbox: BBox,
}

impl ObjectBox {
    pub fn new(id: u64, frame: FrameId, bbox: BBox, extent: &ImageExtent) -> Result<Self> {
        let reason = if !(bbox.x_min < bbox.x_max) {
            Some("x_min must be below x_max")
        } else if !(bbox.y_min < bbox.y_max) {
            Some("y_min must be below y_max")
        } else if !extent.contains(bbox.x_min, bbox.y_min) || !extent.contains(bbox.x_max, bbox.y_max)
        {
            Some("box leaves the image extent")
        } else {
            None
        };
        match reason {
            Some(r) => Err(Error::InvalidBox {
                id,
                reason: r.to_string(),
            }),
            None => Ok(ObjectBox { id, frame, bbox }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge<W> {
    pub u: VertexId,
    pub v: VertexId,
    pub weight: W,
}

/// Weighted graph over trajectory and box vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryGraph<W> {
    vertices: BTreeSet<VertexId>,
    edges: Vec<Edge<W>>,
}

impl<W: Scalar> Default for TrajectoryGraph<W> {
    fn default() -> Self {
        Self::new()
    }
}

impl<W: Scalar> TrajectoryGraph<W> {
    pub fn new() -> Self {
        TrajectoryGraph {
            vertices: BTreeSet::new(),
            edges: Vec::new(),
        }
    }

    pub fn add_vertex(&mut self, v: VertexId) -> bool {
        self.vertices.insert(v)
    }

    /// Appends an edge, adding missing endpoints. No invariant checks; see
    /// [`validate_graph`].
    pub fn add_edge(&mut self, u: VertexId, v: VertexId, weight: W) -> usize {
        self.vertices.insert(u);
        self.vertices.insert(v);
        self.edges.push(Edge { u, v, weight });
        self.edges.len() - 1
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn trajectory_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|v| v.is_trajectory())
    }

    pub fn box_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|v| !v.is_trajectory())
    }

    pub fn edges(&self) -> &[Edge<W>] {
        &self.edges
    }

    pub fn edges_mut(&mut self) -> &mut [Edge<W>] {
        &mut self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> Vec<W> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// Returns a copy with every weight mapped through `f`.
    pub fn map_weights<V: Scalar>(&self, mut f: impl FnMut(W) -> V) -> TrajectoryGraph<V> {
        TrajectoryGraph {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    u: e.u,
                    v: e.v,
                    weight: f(e.weight),
                })
                .collect(),
        }
    }
}

/// First invariant a graph breaks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NonBipartite { edge: usize },
    DuplicateEdge { edge: usize },
    NonFiniteWeight { edge: usize },
    SelfLoop { edge: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonBipartite { edge } => write!(f, "non-bipartite edge (edge {edge})"),
            Violation::DuplicateEdge { edge } => write!(f, "duplicate edge (edge {edge})"),
            Violation::NonFiniteWeight { edge } => write!(f, "non-finite weight (edge {edge})"),
            Violation::SelfLoop { edge } => write!(f, "self loop (edge {edge})"),
        }
    }
}

pub fn validate_graph<W: Scalar>(g: &TrajectoryGraph<W>) -> std::result::Result<(), Violation> {
    let mut seen = HashSet::with_capacity(g.edge_count());
    for (i, e) in g.edges().iter().enumerate() {
        if e.u == e.v {
            return Err(Violation::SelfLoop { edge: i });
        }
        if e.u.kind() == e.v.kind() {
            return Err(Violation::NonBipartite { edge: i });
        }
        if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
            return Err(Violation::DuplicateEdge { edge: i });
        }
        if !e.weight.is_finite_weight() {
            return Err(Violation::NonFiniteWeight { edge: i });
        }
    }
    Ok(())
}

/// Vertex-to-segment labeling. Labels are kept canonical: contiguous
/// `0..C`, numbered in order of each segment's smallest vertex id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    labels: BTreeMap<VertexId, usize>,
    count: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels; only the grouping matters.
    pub fn from_labels<L: Ord + Copy>(labels: impl IntoIterator<Item = (VertexId, L)>) -> Self {
        let raw: BTreeMap<VertexId, L> = labels.into_iter().collect();
        let mut remap: BTreeMap<L, usize> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for (v, l) in raw {
            let next = remap.len();
            let c = *remap.entry(l).or_insert(next);
            out.insert(v, c);
        }
        Partition {
            count: remap.len(),
            labels: out,
        }
    }

    pub fn label(&self, v: VertexId) -> Option<usize> {
        self.labels.get(&v).copied()
    }

    pub fn labels(&self) -> &BTreeMap<VertexId, usize> {
        &self.labels
    }

    pub fn num_segments(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Members of each segment, indexed by label, each sorted by vertex id.
    pub fn groups(&self) -> Vec<Vec<VertexId>> {
        let mut groups = vec![Vec::new(); self.count];
        for (&v, &l) in &self.labels {
            groups[l].push(v);
        }
        groups
    }
}

/// Cut indicator per edge index; `true` means the edge is cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multicut {
    pub cut: Vec<bool>,
}

impl Multicut {
    pub fn none(edge_count: usize) -> Self {
        Multicut {
            cut: vec![false; edge_count],
        }
    }

    pub fn all(edge_count: usize) -> Self {
        Multicut {
            cut: vec![true; edge_count],
        }
    }

    pub fn is_cut(&self, edge: usize) -> bool {
        self.cut[edge]
    }

    pub fn cut_count(&self) -> usize {
        self.cut.iter().filter(|&&c| c).count()
    }
}

/// Cuts exactly the edges whose endpoints carry different labels.
pub fn partition_to_multicut<W: Scalar>(g: &TrajectoryGraph<W>, p: &Partition) -> Result<Multicut> {
    if let Some(v) = g.vertices().find(|&v| p.label(v).is_none()) {
        return Err(Error::UnlabeledVertex(v.raw()));
    }
    let cut = g
        .edges()
        .iter()
        .map(|e| p.label(e.u) != p.label(e.v))
        .collect();
    Ok(Multicut { cut })
}

/// A mined place class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSegment {
    pub id: u64,
    pub trajectory_ids: BTreeSet<u64>,
    pub box_ids: BTreeSet<u64>,
    /// Bounding box of member trajectory points in each frame they appear.
    pub frame_boxes: BTreeMap<FrameId, BBox>,
    /// Travel distances (meters) of the frames where the segment is observed.
    pub viewpoint_span: Vec<f64>,
}

impl MapSegment {
    pub fn frames(&self) -> impl Iterator<Item = FrameId> + '_ {
        self.frame_boxes.keys().copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub frame: FrameId,
    /// Travel distance along the sequence, meters.
    pub s: f64,
    /// Ground-truth world position, meters.
    pub x: f64,
    pub y: f64,
}

/// Per-frame travel distance and ground-truth position.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PoseLog {
    records: Vec<PoseRecord>,
    by_frame: HashMap<FrameId, usize>,
}

impl PoseLog {
    pub fn new(records: Vec<PoseRecord>) -> Result<Self> {
        for pair in records.windows(2) {
            if pair[1].frame <= pair[0].frame {
                return Err(Error::Invariant(format!(
                    "pose frames must increase: {} follows {}",
                    pair[1].frame, pair[0].frame
                )));
            }
            if pair[1].s < pair[0].s {
                return Err(Error::Invariant(format!(
                    "travel distance decreases at frame {}",
                    pair[1].frame
                )));
            }
        }
        let by_frame = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.frame, i))
            .collect();
        Ok(PoseLog { records, by_frame })
    }

    pub fn records(&self) -> &[PoseRecord] {
        &self.records
    }

    pub fn get(&self, frame: FrameId) -> Option<&PoseRecord> {
        self.by_frame.get(&frame).map(|&i| &self.records[i])
    }

    pub fn require(&self, frame: FrameId) -> Result<&PoseRecord> {
        self.get(frame).ok_or(Error::MissingPose(frame.0))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Travel distance covered between the first and last record.
    pub fn travel_length(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.s - a.s,
            _ => 0.0,
        }
    }
}
