//! Deterministic synthetic seasons with planted landmark clusters.
//!
//! The world is planar. A camera drives along the x axis at constant speed,
//! looking forward, and each season shifts the path sideways. Landmark
//! clusters are groups of 3D points beside the path; each point projects to
//! an image track while it is in range and in view, and a box is drawn around
//! each visible cluster. Clutter tracks fill the rest of the image up to a
//! target feature count and never enter a landmark's image region. Frame
//! descriptors are cluster prototypes shifted by a per-season offset, plus
//! random clutter vectors.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    BoxRecord, DatasetHeader, DescriptorRecord, SeasonData, TrackRecord, TruthRecord,
};
use crate::error::{Error, Result};
use crate::model::{BBox, FrameId, ImageExtent, MapSegment, PoseRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    /// World position `[x, y]` of the cluster center, meters.
    pub position: [f64; 2],
    pub points: usize,
    /// Half-width of the square footprint the points are spread over.
    pub spread: f64,
    /// Points lie between `-height` and `+height` relative to the camera.
    pub height: f64,
    /// Whether the cluster exists in each season; missing entries mean present.
    pub present: Vec<bool>,
}

impl ClusterSpec {
    pub fn present_in(&self, season: u32) -> bool {
        self.present.get(season as usize).copied().unwrap_or(true)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub seed: u64,
    pub seasons: u32,
    pub map_length: f64,
    /// Travel per frame, meters.
    pub frame_step: f64,
    pub image_width: f64,
    pub image_height: f64,
    pub horizontal_fov_deg: f64,
    pub clusters: Vec<ClusterSpec>,
    /// Farthest forward distance at which a point is tracked.
    pub sensing_range: f64,
    /// Per-frame feature count the clutter tops up to.
    pub target_features: usize,
    /// Fraction of the missing features that clutter actually fills.
    pub clutter_rate: f64,
    pub clutter_loss_prob: f64,
    pub landmark_loss_prob: f64,
    pub box_miss_prob: f64,
    /// Pixels added around the visible points of a cluster.
    pub box_margin: f64,
    /// Pixels around a cluster box in which clutter cannot live.
    pub occlusion_margin: f64,
    pub pixel_noise: f64,
    pub descriptor_dim: usize,
    pub prototypes_per_cluster: usize,
    pub prototype_visibility: f64,
    pub clutter_descriptors: usize,
    pub observation_noise: f64,
    /// Standard deviation of the per-season prototype offset.
    pub season_noise: f64,
    /// Sideways shift of the camera path per season, meters.
    pub season_lateral_step: f64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        let mut spec = WorldSpec::planted(7, 5, 500.0, 0.2);
        spec.clusters[1].present = vec![true, true, true, false];
        spec
    }
}

impl WorldSpec {
    /// `count` clusters evenly spaced along the path on alternating sides.
    /// `coverage` is the share of the path from which a cluster is visible.
    pub fn planted(seed: u64, count: usize, map_length: f64, coverage: f64) -> Self {
        let lateral = 8.0;
        let spacing = map_length / count.max(1) as f64;
        let clusters = (0..count)
            .map(|k| ClusterSpec {
                position: [
                    (k as f64 + 0.5) * spacing,
                    if k % 2 == 0 { lateral } else { -lateral },
                ],
                points: 40,
                spread: 2.0,
                height: 3.0,
                present: Vec::new(),
            })
            .collect();
        WorldSpec {
            seed,
            seasons: 4,
            map_length,
            frame_step: 1.0,
            image_width: 1232.0,
            image_height: 1616.0,
            horizontal_fov_deg: 90.0,
            clusters,
            sensing_range: lateral + coverage * spacing,
            target_features: 1500,
            clutter_rate: 1.0,
            clutter_loss_prob: 0.05,
            landmark_loss_prob: 0.01,
            box_miss_prob: 0.1,
            box_margin: 5.0,
            occlusion_margin: 15.0,
            pixel_noise: 0.5,
            descriptor_dim: 32,
            prototypes_per_cluster: 8,
            prototype_visibility: 0.7,
            clutter_descriptors: 10,
            observation_noise: 0.15,
            season_noise: 2.0,
            season_lateral_step: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("clutter_rate", self.clutter_rate),
            ("clutter_loss_prob", self.clutter_loss_prob),
            ("landmark_loss_prob", self.landmark_loss_prob),
            ("box_miss_prob", self.box_miss_prob),
            ("prototype_visibility", self.prototype_visibility),
        ];
        if let Some((name, v)) = probs.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config(format!("{name} = {v} is outside [0, 1]")));
        }
        let positive = [
            self.map_length,
            self.frame_step,
            self.image_width,
            self.image_height,
            self.sensing_range,
        ];
        if positive.iter().any(|v| !(*v > 0.0))
            || !(self.horizontal_fov_deg > 0.0 && self.horizontal_fov_deg < 180.0)
        {
            return Err(Error::Config("world dimensions must be positive".into()));
        }
        if self.seasons == 0 || self.descriptor_dim == 0 || self.prototypes_per_cluster == 0 {
            return Err(Error::Config("counts must be positive".into()));
        }
        if self.clusters.iter().any(|c| c.points == 0) {
            return Err(Error::Config("every cluster needs at least one point".into()));
        }
        let sigmas = [
            self.pixel_noise,
            self.observation_noise,
            self.season_noise,
            self.box_margin,
            self.occlusion_margin,
        ];
        if sigmas.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("noise levels and margins must be non-negative".into()));
        }
        Ok(())
    }

    pub fn focal_length(&self) -> f64 {
        0.5 * self.image_width / (0.5 * self.horizontal_fov_deg.to_radians()).tan()
    }

    pub fn extent(&self) -> ImageExtent {
        ImageExtent::new(self.image_width, self.image_height)
    }

    pub fn frame_count(&self) -> u64 {
        (self.map_length / self.frame_step + 1e-9).floor() as u64 + 1
    }
}

/// Planted labels of one season.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GroundTruth {
    /// Trajectory id to cluster index; `None` is clutter.
    pub trajectories: BTreeMap<u64, Option<u32>>,
    /// True travel distance of every frame.
    pub travel: BTreeMap<FrameId, f64>,
}

impl GroundTruth {
    pub fn records(&self) -> Vec<TruthRecord> {
        self.trajectories
            .iter()
            .map(|(&id, &cluster)| TruthRecord { id, cluster })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedSeason {
    pub data: SeasonData,
    pub truth: GroundTruth,
}

/// Season-independent part of the world, drawn from the world seed.
struct World {
    points: Vec<Vec<[f64; 3]>>,
    prototypes: Vec<Vec<Vec<f64>>>,
}

fn world_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal_vec(rng: &mut ChaCha8Rng, dim: usize, sigma: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * sigma
        })
        .collect()
}

fn build_world(spec: &WorldSpec) -> World {
    let mut rng = world_rng(spec.seed, 0);
    let points = spec
        .clusters
        .iter()
        .map(|c| {
            (0..c.points)
                .map(|_| {
                    [
                        c.position[0] + rng.random_range(-c.spread..=c.spread),
                        c.position[1] + rng.random_range(-c.spread..=c.spread),
                        rng.random_range(-c.height..=c.height),
                    ]
                })
                .collect()
        })
        .collect();
    let prototypes = spec
        .clusters
        .iter()
        .map(|_| {
            (0..spec.prototypes_per_cluster)
                .map(|_| normal_vec(&mut rng, spec.descriptor_dim, 1.0))
                .collect()
        })
        .collect();
    World { points, prototypes }
}

struct Clutter {
    id: u64,
    u: f64,
    v: f64,
    du: f64,
    dv: f64,
}

fn occluded(regions: &[BBox], u: f64, v: f64) -> bool {
    regions.iter().any(|r| r.contains(u, v))
}

/// Generates one season. Identical specs give identical output.
pub fn generate_season(spec: &WorldSpec, season: u32) -> Result<GeneratedSeason> {
    spec.validate()?;
    let world = build_world(spec);
    generate_from(spec, &world, season)
}

/// All seasons of the world, generated in parallel.
pub fn generate_world(spec: &WorldSpec) -> Result<Vec<GeneratedSeason>> {
    spec.validate()?;
    let world = build_world(spec);
    (0..spec.seasons)
        .into_par_iter()
        .map(|s| generate_from(spec, &world, s))
        .collect()
}

fn generate_from(spec: &WorldSpec, world: &World, season: u32) -> Result<GeneratedSeason> {
    let mut rng = world_rng(spec.seed, 1 + season as u64);
    let extent = spec.extent();
    let f = spec.focal_length();
    let (cu, cv) = (spec.image_width / 2.0, spec.image_height / 2.0);
    let pixel = Normal::new(0.0, spec.pixel_noise).map_err(|e| Error::Config(e.to_string()))?;
    let cam_y = spec.season_lateral_step * season as f64;

    let offsets: Vec<Vec<Vec<f64>>> = world
        .prototypes
        .iter()
        .map(|protos| {
            protos
                .iter()
                .map(|_| normal_vec(&mut rng, spec.descriptor_dim, spec.season_noise))
                .collect()
        })
        .collect();

    let mut data = SeasonData {
        header: Some(DatasetHeader {
            width: spec.image_width,
            height: spec.image_height,
            frame_count: spec.frame_count(),
            map_length: spec.map_length,
            season: format!("season-{season}"),
        }),
        ..Default::default()
    };
    let mut truth = GroundTruth::default();
    let mut next_track = 0u64;
    let mut next_box = 0u64;
    let mut landmark_ids: Vec<Vec<Option<u64>>> =
        world.points.iter().map(|p| vec![None; p.len()]).collect();
    let mut clutter: Vec<Clutter> = Vec::new();

    for frame in 0..spec.frame_count() {
        let s = frame as f64 * spec.frame_step;
        data.poses.push(PoseRecord {
            frame: FrameId(frame),
            s,
            x: s,
            y: cam_y,
        });
        truth.travel.insert(FrameId(frame), s);

        let mut tracks: Vec<TrackRecord> = Vec::new();
        let mut regions: Vec<BBox> = Vec::new();
        for (k, cluster) in spec.clusters.iter().enumerate() {
            let ids = &mut landmark_ids[k];
            if !cluster.present_in(season) {
                ids.iter_mut().for_each(|id| *id = None);
                continue;
            }
            let mut visible: Vec<(f64, f64)> = Vec::new();
            for (i, p) in world.points[k].iter().enumerate() {
                let dx = p[0] - s;
                let projected = (dx > 0.5 && dx <= spec.sensing_range).then(|| {
                    (
                        cu - f * (p[1] - cam_y) / dx + pixel.sample(&mut rng),
                        cv - f * p[2] / dx + pixel.sample(&mut rng),
                    )
                });
                let Some((u, v)) = projected.filter(|&(u, v)| extent.contains(u, v)) else {
                    ids[i] = None;
                    continue;
                };
                let lost = rng.random::<f64>() < spec.landmark_loss_prob;
                let id = match ids[i] {
                    Some(id) if !lost => id,
                    _ => {
                        let id = next_track;
                        next_track += 1;
                        truth.trajectories.insert(id, Some(k as u32));
                        id
                    }
                };
                ids[i] = Some(id);
                tracks.push(TrackRecord { id, frame, x: u, y: v });
                visible.push((u, v));
            }
            if visible.len() < 3 {
                continue;
            }
            let mut b = BBox::point(visible[0].0, visible[0].1);
            for &(u, v) in &visible[1..] {
                b.expand_to(u, v);
            }
            let m = spec.box_margin;
            let boxed = BBox::new(b.x_min - m, b.y_min - m, b.x_max + m, b.y_max + m).clipped(&extent);
            let o = spec.occlusion_margin + m;
            regions.push(BBox::new(b.x_min - o, b.y_min - o, b.x_max + o, b.y_max + o));
            let missed = rng.random::<f64>() < spec.box_miss_prob;
            if !missed && boxed.x_min < boxed.x_max && boxed.y_min < boxed.y_max {
                data.boxes.push(BoxRecord {
                    id: next_box,
                    frame,
                    x_min: boxed.x_min,
                    y_min: boxed.y_min,
                    x_max: boxed.x_max,
                    y_max: boxed.y_max,
                });
                next_box += 1;
            }
            for (p, proto) in world.prototypes[k].iter().enumerate() {
                if rng.random::<f64>() < spec.prototype_visibility {
                    let noise = normal_vec(&mut rng, spec.descriptor_dim, spec.observation_noise);
                    let vec = proto
                        .iter()
                        .zip(&offsets[k][p])
                        .zip(noise)
                        .map(|((a, b), c)| a + b + c)
                        .collect();
                    data.descriptors.push(DescriptorRecord { frame, vec });
                }
            }
        }

        let landmark_count = tracks.len();
        let mut survivors = Vec::with_capacity(clutter.len());
        for mut c in clutter.drain(..) {
            c.u += c.du;
            c.v += c.dv;
            let dropped = rng.random::<f64>() < spec.clutter_loss_prob;
            if !dropped && extent.contains(c.u, c.v) && !occluded(&regions, c.u, c.v) {
                survivors.push(c);
            }
        }
        clutter = survivors;
        let wanted = (spec.clutter_rate
            * spec.target_features.saturating_sub(landmark_count) as f64)
            .round() as usize;
        let mut attempts = 0;
        while clutter.len() < wanted && attempts < 20 * wanted.max(1) {
            attempts += 1;
            let u = rng.random_range(0.0..spec.image_width);
            let v = rng.random_range(0.0..spec.image_height);
            let du = rng.random_range(-3.0..3.0);
            let dv = rng.random_range(-1.0..1.0);
            if occluded(&regions, u, v) {
                continue;
            }
            truth.trajectories.insert(next_track, None);
            clutter.push(Clutter {
                id: next_track,
                u,
                v,
                du,
                dv,
            });
            next_track += 1;
        }
        tracks.extend(clutter.iter().map(|c| TrackRecord {
            id: c.id,
            frame,
            x: c.u,
            y: c.v,
        }));
        tracks.sort_by_key(|t| t.id);
        data.tracks.extend(tracks);

        for _ in 0..spec.clutter_descriptors {
            let vec = normal_vec(&mut rng, spec.descriptor_dim, 1.0);
            data.descriptors.push(DescriptorRecord { frame, vec });
        }
    }
    Ok(GeneratedSeason { data, truth })
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same items, by the
/// contingency-table formula. Two trivial identical groupings score 1.
pub fn adjusted_rand_index<A: Ord, B: Ord>(labels: impl IntoIterator<Item = (A, B)>) -> f64 {
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut a_ids: BTreeMap<A, usize> = BTreeMap::new();
    let mut b_ids: BTreeMap<B, usize> = BTreeMap::new();
    let mut n = 0u64;
    for (a, b) in labels {
        let next_a = a_ids.len();
        let ia = *a_ids.entry(a).or_insert(next_a);
        let next_b = b_ids.len();
        let ib = *b_ids.entry(b).or_insert(next_b);
        *table.entry((ia, ib)).or_insert(0) += 1;
        n += 1;
    }
    let mut row = vec![0u64; a_ids.len()];
    let mut col = vec![0u64; b_ids.len()];
    for (&(i, j), &c) in &table {
        row[i] += c;
        col[j] += c;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_a: f64 = row.iter().map(|&c| pairs(c)).sum();
    let sum_b: f64 = col.iter().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return if index == max { 1.0 } else { 0.0 };
    }
    (index - expected) / (max - expected)
}

/// ARI between the mined grouping (one group per segment, all discarded
/// trajectories in one more group) and the planted clusters.
pub fn planted_ari(segments: &[MapSegment], truth: &GroundTruth) -> f64 {
    let mut mined: BTreeMap<u64, u64> = BTreeMap::new();
    for s in segments {
        for &t in &s.trajectory_ids {
            mined.insert(t, s.id);
        }
    }
    adjusted_rand_index(
        truth
            .trajectories
            .iter()
            .map(|(id, planted)| (mined.get(id).copied(), *planted)),
    )
}
