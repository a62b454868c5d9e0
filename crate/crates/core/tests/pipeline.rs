use mapseg::mcl::MclConfig;
use mapseg::pipeline::{evaluate, segment_season, EvalConfig, Method, SegmentConfig};
use mapseg::synth::{generate_season, planted_ari, WorldSpec};

fn small_world() -> WorldSpec {
    let mut spec = WorldSpec::planted(5, 3, 300.0, 0.2);
    spec.seasons = 2;
    spec.target_features = 300;
    spec
}

#[test]
fn clean_world_recovers_every_cluster() {
    let mut spec = small_world();
    spec.box_miss_prob = 0.0;
    spec.clutter_rate = 0.0;
    spec.landmark_loss_prob = 0.0;
    let g = generate_season(&spec, 0).unwrap();
    let out = segment_season(&g.data, &SegmentConfig::default()).unwrap();
    assert_eq!(out.segments.len(), 3);
    assert_eq!(planted_ari(&out.segments, &g.truth), 1.0);
}

#[test]
fn default_noise_levels_keep_quality() {
    let spec = small_world();
    for season in 0..2 {
        let g = generate_season(&spec, season).unwrap();
        let out = segment_season(&g.data, &SegmentConfig::default()).unwrap();
        assert!(planted_ari(&out.segments, &g.truth) >= 0.9);
        assert!(out.stats.retained_pixel_ratio <= out.stats.retained_image_ratio);
    }
}

#[test]
fn missing_boxes_mine_nothing() {
    let mut spec = small_world();
    spec.box_miss_prob = 1.0;
    let g = generate_season(&spec, 0).unwrap();
    let out = segment_season(&g.data, &SegmentConfig::default()).unwrap();
    assert!(out.segments.is_empty());
    assert_eq!(out.stats.retained_image_ratio, 0.0);
    assert!(out.summary.bias.is_none());
}

#[test]
fn baseline_tiles_the_map() {
    let g = generate_season(&small_world(), 0).unwrap();
    let cfg = SegmentConfig {
        baseline_length: Some(10.0),
        ..Default::default()
    };
    let out = segment_season(&g.data, &cfg).unwrap();
    assert_eq!(out.segments.len(), 30);
    assert_eq!(out.stats.retained_image_ratio, 1.0);
}

#[test]
fn oracle_localizes_every_run() {
    let spec = small_world();
    let map = generate_season(&spec, 0).unwrap();
    let query = generate_season(&spec, 1).unwrap();
    let segs = segment_season(&map.data, &SegmentConfig::default()).unwrap().segments;
    let cfg = EvalConfig {
        method: Method::Oracle,
        ..Default::default()
    };
    let r = evaluate(&map.data, &segs, &query.data, &cfg).unwrap();
    assert_eq!(r.particles, MclConfig::new(300.0).particle_count());
    assert!(r.runs_retained > 0);
    for run in r.runs.iter().filter(|r| r.retained) {
        assert!((run.hypotheses[0].s - run.truth_s).abs() < cfg.correct_radius);
        assert!(run.max_delta_error < 1e-9);
    }
    assert_eq!(r.topx.accuracy[&10], 1.0);
}

#[test]
fn bow_topx_is_monotone_and_class_index_reports_bits() {
    let spec = small_world();
    let map = generate_season(&spec, 0).unwrap();
    let query = generate_season(&spec, 1).unwrap();
    let segs = segment_season(&map.data, &SegmentConfig::default()).unwrap().segments;
    for method in [Method::Bow, Method::ClassIndex] {
        let cfg = EvalConfig {
            method,
            ..Default::default()
        };
        let r = evaluate(&map.data, &segs, &query.data, &cfg).unwrap();
        let acc: Vec<f64> = r.topx.accuracy.values().copied().collect();
        assert!(acc.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(r.token_bits.is_some(), method == Method::ClassIndex);
    }
}

#[test]
fn bow_needs_descriptors() {
    let spec = small_world();
    let map = generate_season(&spec, 0).unwrap();
    let mut query = generate_season(&spec, 1).unwrap();
    query.data.descriptors.clear();
    let segs = segment_season(&map.data, &SegmentConfig::default()).unwrap().segments;
    let cfg = EvalConfig::default();
    assert!(evaluate(&map.data, &segs, &query.data, &cfg).is_err());
}
