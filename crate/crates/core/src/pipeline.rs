//! End-to-end stages over recorded seasons: segmentation of a map season
//! and cross-season localization with a chosen place classifier.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::SeasonData;
use crate::error::{Error, Result};
use crate::mcl::{
    evaluate_topx, filter_test_sequences, run_localization, spans_from_samples, Hypothesis, Interval, MclConfig,
    OverlapThresholds, PerceptionOutcome, RankedHypotheses, Step, TopXTable,
};
use crate::model::{FrameId, MapSegment, PoseLog};
use crate::multicut::{solve_gaec_with, GaecOptions};
use crate::placeclass::{
    assemble_training_set, build_bow, build_class_index, predict_class, score_bow,
    score_class_index, token_bits, BowModel, Codebook, CropVariant, PlacePrediction,
};
use crate::segments::{
    baseline_equal_length, cell_of, compute_stats, export_obb_annotations, mine_segments,
    segment_cells, Annotation, Cell, MiningConfig, SegmentStats,
};
use crate::trackgraph::{apply_bias, bias_report, BiasReport, BuilderConfig, GraphBuilder};

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SegmentConfig {
    pub builder: BuilderConfig,
    pub mining: MiningConfig,
    pub gaec: GaecOptions,
    /// Replace the multicut by equal-length pieces of this many meters.
    pub baseline_length: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphSummary {
    pub trajectories: usize,
    pub boxes: usize,
    pub vertices: usize,
    pub edges: usize,
    pub bias: Option<BiasReport<f64>>,
    /// Objective of the greedy multicut on the biased graph.
    pub objective: f64,
    pub components: usize,
    pub cut_edges: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentOutput {
    pub summary: GraphSummary,
    pub segments: Vec<MapSegment>,
    pub discarded_vertices: usize,
    pub stats: SegmentStats,
    pub annotations: Vec<Annotation>,
}

/// Graph build, bias, greedy multicut and mining for one season.
pub fn segment_season(data: &SeasonData, cfg: &SegmentConfig) -> Result<SegmentOutput> {
    let header = data.header()?;
    header.validate()?;
    cfg.mining.validate()?;
    let extent = header.extent();
    let poses = data.pose_log()?;

    let mut builder: GraphBuilder<f64> = GraphBuilder::new(extent, cfg.builder);
    for m in data.frames()? {
        builder.ingest_frame(m.frame, &m.updates, &m.boxes)?;
    }
    let built = builder.finish();
    let g = &built.graph;
    let mut summary = GraphSummary {
        trajectories: built.trajectories.len(),
        boxes: built.boxes.len(),
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        bias: None,
        objective: 0.0,
        components: g.vertex_count(),
        cut_edges: 0,
    };

    let (segments, discarded_vertices) = if let Some(length) = cfg.baseline_length {
        let segs = baseline_equal_length(&poses, &built.trajectories, &extent, length)?;
        (segs, 0)
    } else {
        let biased = if g.edge_count() == 0 {
            g.clone()
        } else {
            let report = bias_report(&g.weights(), cfg.builder.bias_fraction)?;
            let biased = apply_bias(g, report.c_o);
            summary.bias = Some(report);
            biased
        };
        let solved = solve_gaec_with(&biased, &cfg.gaec)?;
        summary.objective = solved.objective;
        summary.components = solved.components;
        summary.cut_edges = solved.multicut.cut_count();
        let mined = mine_segments(
            &biased,
            &solved.partition,
            &built.trajectories,
            &poses,
            &cfg.mining,
        )?;
        (mined.segments, mined.discarded.len())
    };

    let frames: Vec<FrameId> = poses.records().iter().map(|p| p.frame).collect();
    let stats = compute_stats(&segments, &frames, &extent);
    let annotations = export_obb_annotations(&segments, cfg.mining.bbox_min_pixels);
    Ok(SegmentOutput {
        summary,
        segments,
        discarded_vertices,
        stats,
        annotations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bow,
    ClassIndex,
    /// All score on the segment whose map span holds the query's true
    /// travel distance.
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Bow => "bow",
            Method::ClassIndex => "class-index",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BowConfig {
    pub proj_dim: usize,
    pub words: usize,
    pub kmeans_iterations: usize,
    pub ratio_test: Option<f64>,
    pub seed: u64,
    /// Training frames whose segment box is smaller are skipped.
    pub bbox_min_pixels: f64,
}

impl Default for BowConfig {
    fn default() -> Self {
        BowConfig {
            proj_dim: 16,
            words: 64,
            kmeans_iterations: 10,
            ratio_test: Some(0.8),
            seed: 0,
            bbox_min_pixels: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub method: Method,
    pub d_norm: f64,
    pub correct_radius: f64,
    pub nms_radius: f64,
    pub start_spacing: f64,
    pub top_x: Vec<usize>,
    pub overlap: OverlapThresholds,
    pub grid_cell_meters: f64,
    /// Viewpoint samples closer than this are joined into one span.
    pub span_merge_gap: f64,
    pub bow: BowConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let mcl = MclConfig::new(1.0);
        EvalConfig {
            method: Method::Bow,
            d_norm: mcl.d_norm,
            correct_radius: mcl.correct_radius,
            nms_radius: mcl.nms_radius,
            start_spacing: mcl.start_spacing,
            top_x: mcl.top_x,
            overlap: OverlapThresholds::default(),
            grid_cell_meters: 10.0,
            span_merge_gap: 2.0,
            bow: BowConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn mcl(&self, map_length: f64) -> MclConfig {
        MclConfig {
            map_length,
            d_norm: self.d_norm,
            correct_radius: self.correct_radius,
            nms_radius: self.nms_radius,
            start_spacing: self.start_spacing,
            top_x: self.top_x.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub start: f64,
    pub start_frame: u64,
    pub goal_frame: u64,
    pub truth_s: f64,
    pub retained: bool,
    pub updates: usize,
    pub skipped_updates: usize,
    /// Largest deviation of an applied increment sum from 1.
    pub max_delta_error: f64,
    pub hypotheses: Vec<Hypothesis>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub method: Method,
    pub classes: usize,
    pub token_bits: Option<u32>,
    pub map_length: f64,
    pub particles: usize,
    pub runs_total: usize,
    pub runs_retained: usize,
    pub topx: TopXTable,
    pub runs: Vec<RunReport>,
}

/// A trained bag-of-words classifier over mined segments.
pub struct BowClassifier {
    pub codebook: Codebook,
    pub model: BowModel,
    pub ratio_test: Option<f64>,
}

impl BowClassifier {
    pub fn train(
        map: &SeasonData,
        segments: &[MapSegment],
        cfg: &BowConfig,
    ) -> Result<Option<BowClassifier>> {
        let extent = map.header()?.extent();
        let descs = map.descriptors_by_frame();
        if descs.is_empty() {
            return Err(Error::Config("map season has no descriptors".into()));
        }
        let mut training: BTreeMap<u64, Vec<Vec<f64>>> = BTreeMap::new();
        for s in assemble_training_set(segments, &extent, CropVariant::Whole, cfg.bbox_min_pixels) {
            if let Some(d) = descs.get(&s.frame) {
                training.entry(s.class_id).or_default().extend(d.iter().cloned());
            }
        }
        let samples: Vec<Vec<f64>> = training.values().flatten().cloned().collect();
        if samples.len() < 2 {
            return Ok(None);
        }
        let mut codebook = Codebook::from_samples(&samples, cfg.proj_dim, cfg.words, cfg.seed)?;
        codebook.refine(&samples, cfg.kmeans_iterations)?;
        let model = build_bow(&training, &codebook)?;
        Ok(Some(BowClassifier {
            codebook,
            model,
            ratio_test: cfg.ratio_test,
        }))
    }

    pub fn score(&self, descriptors: &[Vec<f64>]) -> Result<BTreeMap<u64, f64>> {
        score_bow(descriptors, &self.codebook, &self.model, self.ratio_test)
    }
}

/// Raw class scores for every query frame, plus the spans of the score keys.
struct Scorer {
    scores: BTreeMap<FrameId, BTreeMap<u64, f64>>,
    spans: BTreeMap<u64, Vec<Interval>>,
    token_bits: Option<u32>,
}

fn class_spans(segments: &[MapSegment], cfg: &EvalConfig) -> BTreeMap<u64, Vec<Interval>> {
    segments
        .iter()
        .map(|s| {
            (
                s.id,
                spans_from_samples(&s.viewpoint_span, cfg.span_merge_gap, cfg.d_norm / 2.0),
            )
        })
        .collect()
}

fn build_scorer(
    map: &SeasonData,
    segments: &[MapSegment],
    query: &SeasonData,
    query_poses: &PoseLog,
    cfg: &EvalConfig,
) -> Result<Scorer> {
    match cfg.method {
        Method::Oracle => {
            let exact: Vec<(u64, Vec<Interval>)> = segments
                .iter()
                .map(|s| (s.id, spans_from_samples(&s.viewpoint_span, cfg.span_merge_gap, 0.0)))
                .collect();
            let scores = query_poses
                .records()
                .iter()
                .map(|p| {
                    let hit = exact
                        .iter()
                        .filter(|(_, ivs)| ivs.iter().any(|iv| iv.contains(p.s)))
                        .map(|(id, _)| (*id, 1.0))
                        .collect();
                    (p.frame, hit)
                })
                .collect();
            Ok(Scorer {
                scores,
                spans: class_spans(segments, cfg),
                token_bits: None,
            })
        }
        Method::Bow | Method::ClassIndex => {
            let query_descs = query.descriptors_by_frame();
            if query_descs.is_empty() {
                return Err(Error::Config("query season has no descriptors".into()));
            }
            let classifier = BowClassifier::train(map, segments, &cfg.bow)?;
            let mut scores = BTreeMap::new();
            let Some(classifier) = classifier else {
                return Ok(Scorer {
                    scores,
                    spans: BTreeMap::new(),
                    token_bits: (cfg.method == Method::ClassIndex)
                        .then(|| token_bits(segments.len() as u64)),
                });
            };
            if cfg.method == Method::Bow {
                for (f, d) in &query_descs {
                    scores.insert(*f, classifier.score(d)?);
                }
                return Ok(Scorer {
                    scores,
                    spans: class_spans(segments, cfg),
                    token_bits: None,
                });
            }
            let map_poses = map.pose_log()?;
            let mut predictions = Vec::new();
            let mut spans = BTreeMap::new();
            for (f, d) in &map.descriptors_by_frame() {
                let Some(c) = predict_class(&classifier.score(d)?) else {
                    continue;
                };
                let s = map_poses.require(*f)?.s;
                predictions.push(PlacePrediction {
                    place: f.0,
                    frame: *f,
                    tokens: vec![c],
                });
                let half = cfg.d_norm / 2.0;
                spans.insert(f.0, vec![Interval { lo: s - half, hi: s + half }]);
            }
            let index = build_class_index(segments.len() as u64, &predictions)?;
            for (f, d) in &query_descs {
                let tokens: Vec<u64> = predict_class(&classifier.score(d)?).into_iter().collect();
                scores.insert(*f, score_class_index(&tokens, &index));
            }
            Ok(Scorer {
                scores,
                spans,
                token_bits: Some(index.token_bits),
            })
        }
    }
}

/// Localizes the query season against the map's mined segments from every
/// start location and scores the runs that pass the overlap filters.
pub fn evaluate(
    map: &SeasonData,
    segments: &[MapSegment],
    query: &SeasonData,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let header = map.header()?;
    header.validate()?;
    let mcl = cfg.mcl(header.map_length);
    mcl.validate()?;
    let map_poses = map.pose_log()?;
    let query_poses = query.pose_log()?;
    if query_poses.is_empty() {
        return Err(Error::Config("query season has no poses".into()));
    }
    let scorer = build_scorer(map, segments, query, &query_poses, cfg)?;

    let cell = cfg.grid_cell_meters;
    let map_cells: BTreeSet<Cell> = map_poses
        .records()
        .iter()
        .map(|p| cell_of(p.x, p.y, cell))
        .collect();
    let mut seg_cells: BTreeSet<Cell> = BTreeSet::new();
    for s in segments {
        seg_cells.extend(segment_cells(s, &map_poses, cell)?);
    }

    let records = query_poses.records();
    let goal = records[records.len() - 1];
    let starts: Vec<(f64, usize)> = mcl
        .start_locations()
        .into_iter()
        .filter_map(|start| {
            let i = records.partition_point(|p| p.s < start - 1e-9);
            (i < records.len()).then_some((start, i))
        })
        .collect();
    let run_cells: Vec<BTreeSet<Cell>> = starts
        .iter()
        .map(|&(_, i)| records[i..].iter().map(|p| cell_of(p.x, p.y, cell)).collect())
        .collect();
    let retained: BTreeSet<usize> =
        filter_test_sequences(&run_cells, &map_cells, &seg_cells, &cfg.overlap)
            .into_iter()
            .collect();

    let empty = BTreeMap::new();
    let runs: Vec<RunReport> = starts
        .par_iter()
        .enumerate()
        .map(|(k, &(start, i))| {
            let kept = retained.contains(&k);
            let mut report = RunReport {
                start,
                start_frame: records[i].frame.0,
                goal_frame: goal.frame.0,
                truth_s: goal.s.min(mcl.map_length),
                retained: kept,
                updates: 0,
                skipped_updates: 0,
                max_delta_error: 0.0,
                hypotheses: Vec::new(),
            };
            if !kept {
                return report;
            }
            let steps = records[i..].iter().enumerate().map(|(j, p)| Step {
                ds: if j == 0 { 0.0 } else { p.s - records[i + j - 1].s },
                scores: scorer.scores.get(&p.frame).unwrap_or(&empty).clone(),
            });
            let trace = run_localization(&mcl, &scorer.spans, steps);
            report.updates = trace.outcomes.len();
            for o in &trace.outcomes {
                match o {
                    PerceptionOutcome::Applied { delta_sum } => {
                        report.max_delta_error = report.max_delta_error.max((delta_sum - 1.0).abs());
                    }
                    PerceptionOutcome::Skipped => report.skipped_updates += 1,
                }
            }
            report.hypotheses = trace.ranked.hypotheses;
            report
        })
        .collect();

    let scored: Vec<(RankedHypotheses, f64)> = runs
        .iter()
        .filter(|r| r.retained)
        .map(|r| {
            (
                RankedHypotheses {
                    hypotheses: r.hypotheses.clone(),
                },
                r.truth_s,
            )
        })
        .collect();
    let topx = evaluate_topx(&scored, &mcl);
    Ok(EvalReport {
        method: cfg.method,
        classes: segments.len(),
        token_bits: scorer.token_bits,
        map_length: mcl.map_length,
        particles: mcl.particle_count(),
        runs_total: runs.len(),
        runs_retained: scored.len(),
        topx,
        runs,
    })
}
