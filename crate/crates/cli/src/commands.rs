//! The four pipeline stages, each reading and writing files.

use std::path::{Path, PathBuf};

use mapseg::dataset::TruthRecord;
use mapseg::model::{MapSegment, PoseLog, PoseRecord};
use mapseg::pipeline::{evaluate, segment_season, EvalConfig, EvalReport, SegmentConfig, SegmentOutput};
use mapseg::segments::{jaccard_cross_season, JaccardReport, SegmentStats};
use mapseg::synth::{generate_world, planted_ari, GroundTruth, WorldSpec};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::{
    create_dir, load_season, load_truth, read_json, read_jsonl, save_season, season_dir,
    write_json, write_jsonl,
};

pub const GRAPH: &str = "graph.json";
pub const SEGMENTS: &str = "segments.json";
pub const STATS: &str = "stats.json";
pub const ANNOTATIONS: &str = "annotations.jsonl";
pub const TOPX: &str = "topx.json";
pub const EVAL_REPORT: &str = "eval_report.json";
pub const RUNS: &str = "runs.jsonl";
pub const SPEC: &str = "spec.json";

/// Writes one directory per season plus the resolved spec.
pub fn cmd_synth(spec: Option<&Path>, out: &Path, seed: Option<u64>) -> CliResult<Vec<PathBuf>> {
    let mut spec: WorldSpec = match spec {
        Some(p) => read_json(p)?,
        None => WorldSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate().map_err(|e| CliError::Input(format!("invalid world spec: {e}")))?;
    create_dir(out)?;
    write_json(&out.join(SPEC), &spec)?;
    let seasons = generate_world(&spec)?;
    let mut dirs = Vec::with_capacity(seasons.len());
    for (i, season) in seasons.iter().enumerate() {
        let dir = season_dir(out, i as u32);
        save_season(&dir, season)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

#[derive(Serialize)]
struct StatsFile<'a> {
    #[serde(flatten)]
    stats: &'a SegmentStats,
    discarded_vertices: usize,
    /// Present when the dataset ships planted labels.
    planted_ari: Option<f64>,
}

fn truth_from(records: Vec<TruthRecord>) -> GroundTruth {
    GroundTruth {
        trajectories: records.into_iter().map(|r| (r.id, r.cluster)).collect(),
        travel: Default::default(),
    }
}

pub fn cmd_segment(data: &Path, out: &Path, cfg: &SegmentConfig) -> CliResult<SegmentOutput> {
    let season = load_season(data)?;
    let truth = load_truth(data)?;
    let result = segment_season(&season, cfg)?;
    let ari = truth.map(|t| planted_ari(&result.segments, &truth_from(t)));
    create_dir(out)?;
    write_json(&out.join(GRAPH), &result.summary)?;
    write_json(&out.join(SEGMENTS), &result.segments)?;
    write_json(
        &out.join(STATS),
        &StatsFile {
            stats: &result.stats,
            discarded_vertices: result.discarded_vertices,
            planted_ari: ari,
        },
    )?;
    write_jsonl(&out.join(ANNOTATIONS), &result.annotations)?;
    Ok(result)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    method: &'static str,
    classes: usize,
    token_bits: Option<u32>,
    map_length: f64,
    particles: usize,
    runs_total: usize,
    runs_retained: usize,
    topx: &'a std::collections::BTreeMap<usize, f64>,
}

pub fn cmd_eval(
    map: &Path,
    query: &Path,
    segments: &Path,
    cfg: &EvalConfig,
    out: &Path,
) -> CliResult<EvalReport> {
    let map_data = load_season(map)?;
    let query_data = load_season(query)?;
    let segs: Vec<MapSegment> = read_json(segments)?;
    let report = evaluate(&map_data, &segs, &query_data, cfg)?;
    create_dir(out)?;
    write_json(&out.join(TOPX), &report.topx.accuracy)?;
    write_json(
        &out.join(EVAL_REPORT),
        &ReportFile {
            method: report.method.name(),
            classes: report.classes,
            token_bits: report.token_bits,
            map_length: report.map_length,
            particles: report.particles,
            runs_total: report.runs_total,
            runs_retained: report.runs_retained,
            topx: &report.topx.accuracy,
        },
    )?;
    write_jsonl(&out.join(RUNS), &report.runs)?;
    Ok(report)
}

fn load_poses(path: &Path) -> CliResult<PoseLog> {
    let records: Vec<PoseRecord> = read_jsonl(path)?;
    PoseLog::new(records).map_err(|e| CliError::Data {
        file: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

/// Cross-season Jaccard: every segment of `a` against its best match in `b`.
pub fn cmd_metrics(
    segments_a: &Path,
    poses_a: &Path,
    segments_b: &Path,
    poses_b: &Path,
    cell: f64,
    out: &Path,
) -> CliResult<JaccardReport> {
    let a: Vec<MapSegment> = read_json(segments_a)?;
    let b: Vec<MapSegment> = read_json(segments_b)?;
    let report = jaccard_cross_season(&a, &load_poses(poses_a)?, &b, &load_poses(poses_b)?, cell)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_json(out, &report)?;
    Ok(report)
}
