//! Turning a partition into mined map segments, plus the map-maintenance
//! and cross-season statistics computed over them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BBox, FrameId, ImageExtent, MapSegment, Partition, PointTrajectory, PoseLog, TrajectoryGraph,
    VertexId,
};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub min_trajectories_per_segment: usize,
    pub min_boxes_per_segment: usize,
    /// Frame boxes narrower or shorter than this are not exported.
    pub bbox_min_pixels: f64,
    pub grid_cell_meters: f64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            min_trajectories_per_segment: 5,
            min_boxes_per_segment: 1,
            bbox_min_pixels: 100.0,
            grid_cell_meters: 10.0,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_trajectories_per_segment == 0
            || self.min_boxes_per_segment == 0
            || !(self.bbox_min_pixels > 0.0)
            || !(self.grid_cell_meters > 0.0)
        {
            return Err(Error::Config("mining thresholds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mined {
    /// Segments with ids `0..C` in order of their smallest vertex id.
    pub segments: Vec<MapSegment>,
    /// Vertices of every component that did not qualify.
    pub discarded: BTreeSet<VertexId>,
}

/// Keeps the components with enough trajectory and box vertices.
pub fn mine_segments<W: Scalar>(
    g: &TrajectoryGraph<W>,
    partition: &Partition,
    trajectories: &[PointTrajectory],
    poses: &PoseLog,
    cfg: &MiningConfig,
) -> Result<Mined> {
    cfg.validate()?;
    if let Some(v) = g.vertices().find(|&v| partition.label(v).is_none()) {
        return Err(Error::UnlabeledVertex(v.raw()));
    }
    let by_id: HashMap<u64, &PointTrajectory> = trajectories.iter().map(|t| (t.id, t)).collect();

    let mut segments = Vec::new();
    let mut discarded = BTreeSet::new();
    for group in partition.groups() {
        let (tracks, boxes): (Vec<VertexId>, Vec<VertexId>) =
            group.iter().partition(|v| v.is_trajectory());
        if tracks.len() < cfg.min_trajectories_per_segment
            || boxes.len() < cfg.min_boxes_per_segment
        {
            discarded.extend(group);
            continue;
        }
        let mut frame_boxes: BTreeMap<FrameId, BBox> = BTreeMap::new();
        for v in &tracks {
            let t = by_id.get(&v.raw()).ok_or_else(|| {
                Error::Invariant(format!("no samples supplied for trajectory {}", v.raw()))
            })?;
            for s in t.samples() {
                frame_boxes
                    .entry(s.frame)
                    .and_modify(|b| b.expand_to(s.x, s.y))
                    .or_insert_with(|| BBox::point(s.x, s.y));
            }
        }
        let viewpoint_span = frame_boxes
            .keys()
            .map(|&f| poses.require(f).map(|p| p.s))
            .collect::<Result<Vec<f64>>>()?;
        segments.push(MapSegment {
            id: segments.len() as u64,
            trajectory_ids: tracks.iter().map(|v| v.raw()).collect(),
            box_ids: boxes.iter().map(|v| v.raw()).collect(),
            frame_boxes,
            viewpoint_span,
        });
    }
    Ok(Mined {
        segments,
        discarded,
    })
}

/// Area of the union of axis-aligned rectangles, by coordinate compression
/// along x and interval merging along y.
pub fn union_area(boxes: &[BBox]) -> f64 {
    let boxes: Vec<&BBox> = boxes.iter().filter(|b| b.area() > 0.0).collect();
    let mut xs: Vec<f64> = boxes.iter().flat_map(|b| [b.x_min, b.x_max]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut total = 0.0;
    for slab in xs.windows(2) {
        let (x0, x1) = (slab[0], slab[1]);
        let mut spans: Vec<(f64, f64)> = boxes
            .iter()
            .filter(|b| b.x_min <= x0 && b.x_max >= x1)
            .map(|b| (b.y_min, b.y_max))
            .collect();
        if spans.is_empty() {
            continue;
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut covered = 0.0;
        let (mut lo, mut hi) = spans[0];
        for &(a, b) in &spans[1..] {
            if a > hi {
                covered += hi - lo;
                lo = a;
                hi = b;
            } else {
                hi = hi.max(b);
            }
        }
        covered += hi - lo;
        total += covered * (x1 - x0);
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub classes: usize,
    pub trajectories_per_class_mean: f64,
    pub trajectories_per_class_std: f64,
    /// Fraction of map frames with at least one segment frame box.
    pub retained_image_ratio: f64,
    /// Fraction of all map pixels covered by segment frame boxes.
    pub retained_pixel_ratio: f64,
    /// Over retained frames only: covered fraction of each image.
    pub retained_pixels_per_image_mean: f64,
    pub retained_pixels_per_image_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn compute_stats(
    segments: &[MapSegment],
    map_frames: &[FrameId],
    extent: &ImageExtent,
) -> SegmentStats {
    let counts: Vec<f64> = segments
        .iter()
        .map(|s| s.trajectory_ids.len() as f64)
        .collect();
    let (tmean, tstd) = mean_std(&counts);

    let mut per_frame: BTreeMap<FrameId, Vec<BBox>> = BTreeMap::new();
    for s in segments {
        for (&f, b) in &s.frame_boxes {
            per_frame.entry(f).or_default().push(b.clipped(extent));
        }
    }
    let frames: BTreeSet<FrameId> = map_frames.iter().copied().collect();
    let mut retained = 0usize;
    let mut fractions = Vec::new();
    for f in &frames {
        if let Some(boxes) = per_frame.get(f) {
            retained += 1;
            fractions.push(union_area(boxes) / extent.area());
        }
    }
    let (pmean, pstd) = mean_std(&fractions);
    let n = frames.len().max(1) as f64;
    SegmentStats {
        classes: segments.len(),
        trajectories_per_class_mean: tmean,
        trajectories_per_class_std: tstd,
        retained_image_ratio: retained as f64 / n,
        retained_pixel_ratio: fractions.iter().sum::<f64>() / n,
        retained_pixels_per_image_mean: pmean,
        retained_pixels_per_image_std: pstd,
    }
}

pub type Cell = (i64, i64);

/// Half-open grid cell `[k*cell, (k+1)*cell)` containing a world point.
pub fn cell_of(x: f64, y: f64, cell: f64) -> Cell {
    ((x / cell).floor() as i64, (y / cell).floor() as i64)
}

/// Grid cells of the viewpoints from which a segment is observed.
pub fn segment_cells(segment: &MapSegment, poses: &PoseLog, cell: f64) -> Result<BTreeSet<Cell>> {
    segment
        .frames()
        .map(|f| poses.require(f).map(|p| cell_of(p.x, p.y, cell)))
        .collect()
}

/// `|A ∩ B| / |A ∪ B|`, taken as 0 when both sets are empty.
pub fn jaccard(a: &BTreeSet<Cell>, b: &BTreeSet<Cell>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentMatch {
    pub query_segment: u64,
    pub best_reference: Option<u64>,
    pub similarity: f64,
    /// The query segment had no cells; its similarity is 0 by convention.
    pub empty: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JaccardSummary {
    pub queries: usize,
    pub zero_ratio: f64,
    pub nonzero_max: Option<f64>,
    pub nonzero_mean: Option<f64>,
    pub nonzero_median: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JaccardReport {
    pub matches: Vec<SegmentMatch>,
    pub summary: JaccardSummary,
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

/// Best-matching reference segment for every query segment.
pub fn jaccard_cross_season(
    query: &[MapSegment],
    query_poses: &PoseLog,
    reference: &[MapSegment],
    reference_poses: &PoseLog,
    cell: f64,
) -> Result<JaccardReport> {
    let refs = reference
        .iter()
        .map(|s| segment_cells(s, reference_poses, cell).map(|c| (s.id, c)))
        .collect::<Result<Vec<_>>>()?;
    let mut matches = Vec::with_capacity(query.len());
    for q in query {
        let cells = segment_cells(q, query_poses, cell)?;
        let mut best: (Option<u64>, f64) = (None, 0.0);
        if !cells.is_empty() {
            for (id, rc) in &refs {
                let j = jaccard(&cells, rc);
                if j > best.1 {
                    best = (Some(*id), j);
                }
            }
        }
        matches.push(SegmentMatch {
            query_segment: q.id,
            best_reference: best.0,
            similarity: best.1,
            empty: cells.is_empty(),
        });
    }
    let mut nonzero: Vec<f64> = matches
        .iter()
        .map(|m| m.similarity)
        .filter(|&s| s > 0.0)
        .collect();
    nonzero.sort_by(f64::total_cmp);
    let queries = matches.len();
    let summary = JaccardSummary {
        queries,
        zero_ratio: if queries == 0 {
            0.0
        } else {
            (queries - nonzero.len()) as f64 / queries as f64
        },
        nonzero_max: nonzero.last().copied(),
        nonzero_mean: (!nonzero.is_empty())
            .then(|| nonzero.iter().sum::<f64>() / nonzero.len() as f64),
        nonzero_median: median(&nonzero),
    };
    Ok(JaccardReport { matches, summary })
}

/// Splits the travel axis into consecutive pieces of `length` meters. The
/// last piece absorbs the remainder and is closed at the end of the map.
pub fn baseline_equal_length(
    poses: &PoseLog,
    trajectories: &[PointTrajectory],
    extent: &ImageExtent,
    length: f64,
) -> Result<Vec<MapSegment>> {
    if !(length > 0.0) {
        return Err(Error::Config(format!("segment length {length} must be positive")));
    }
    let records = poses.records();
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    let count = ((poses.travel_length() / length - 1e-9).ceil() as usize).max(1);
    let mut segments: Vec<MapSegment> = (0..count)
        .map(|k| MapSegment {
            id: k as u64,
            trajectory_ids: BTreeSet::new(),
            box_ids: BTreeSet::new(),
            frame_boxes: BTreeMap::new(),
            viewpoint_span: Vec::new(),
        })
        .collect();
    let mut frame_segment: HashMap<FrameId, usize> = HashMap::new();
    for r in records {
        let k = (((r.s - first.s) / length).floor() as usize).min(count - 1);
        segments[k].frame_boxes.insert(r.frame, extent.full_box());
        segments[k].viewpoint_span.push(r.s);
        frame_segment.insert(r.frame, k);
    }
    for t in trajectories {
        for s in t.samples() {
            if let Some(&k) = frame_segment.get(&s.frame) {
                segments[k].trajectory_ids.insert(t.id);
            }
        }
    }
    Ok(segments)
}

/// Self-supervised box annotation for one training image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub frame: FrameId,
    pub class_id: u64,
    pub bbox: BBox,
}

/// One record per (segment, frame), skipping boxes narrower or shorter than
/// `bbox_min_pixels`.
pub fn export_obb_annotations(segments: &[MapSegment], bbox_min_pixels: f64) -> Vec<Annotation> {
    segments
        .iter()
        .flat_map(|s| {
            s.frame_boxes.iter().map(move |(&frame, &bbox)| Annotation {
                frame,
                class_id: s.id,
                bbox,
            })
        })
        .filter(|a| a.bbox.width() >= bbox_min_pixels && a.bbox.height() >= bbox_min_pixels)
        .collect()
}
