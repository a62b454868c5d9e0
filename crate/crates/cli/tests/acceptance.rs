//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use mapseg::model::{TrajectoryGraph, VertexId};
use mapseg::multicut::{is_feasible, solve_exact, solve_gaec};
use mapseg::pipeline::{evaluate, segment_season, EvalConfig, Method, SegmentConfig};
use mapseg::placeclass::token_bits;
use mapseg::synth::{generate_season, generate_world, planted_ari, WorldSpec};
use mapseg::trackgraph::BuilderConfig;
use mapseg_cli::commands::{cmd_eval, cmd_segment, cmd_synth};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: u64, density: f64) -> TrajectoryGraph<f64> {
    let mut g = TrajectoryGraph::new();
    for i in 0..n {
        g.add_vertex(VertexId::trajectory(i));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < density {
                let w = rng.random_range(-1.0..=1.0);
                g.add_edge(VertexId::trajectory(a), VertexId::trajectory(b), w);
            }
        }
    }
    g
}

fn feasibility_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let g = random_graph(&mut rng, n, 0.3);
        let r = solve_gaec(&g).expect("solvable graph");
        if !is_feasible(&g, &r.multicut) {
            violations += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        violations == 0 && t < Duration::from_secs(10),
        format!("1000 graphs, {violations} violations, {:.2} s", t.as_secs_f64()),
    )
}

fn oracle_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let (mut dominated, mut equal) = (0, 0);
    for _ in 0..200 {
        let n = rng.random_range(2..=7);
        let g = random_graph(&mut rng, n, 0.5);
        let greedy = solve_gaec(&g).unwrap().objective;
        let exact = solve_exact(&g).unwrap().objective;
        if greedy >= exact - 1e-12 {
            dominated += 1;
        }
        if (greedy - exact).abs() <= 1e-12 {
            equal += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        dominated == 200 && t < Duration::from_secs(30),
        format!(
            "greedy >= exact on {dominated}/200, equal on {:.1}%, {:.2} s",
            equal as f64 / 2.0,
            t.as_secs_f64()
        ),
    )
}

fn triangle() -> Outcome {
    let mut g = TrajectoryGraph::new();
    let v = |i| VertexId::trajectory(i);
    g.add_edge(v(0), v(1), 1.0);
    g.add_edge(v(0), v(2), 1.0);
    g.add_edge(v(1), v(2), -3.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [solve_gaec(&g).unwrap(), solve_exact(&g).unwrap()] {
        let mut sizes: Vec<usize> = r.partition.groups().iter().map(Vec::len).collect();
        sizes.sort();
        ok &= r.objective == -2.0 && sizes == [1, 2];
        parts.push(format!("{} {:?}", r.objective, sizes));
    }
    outcome(ok, format!("gaec {}, exact {}", parts[0], parts[1]))
}

fn planted_cliques() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut summary = Vec::new();
    let mut ok = true;
    for k in [3u64, 4, 5] {
        let mut recovered = 0;
        for _ in 0..50 {
            let mut ids: Vec<u64> = (0..2 * k).map(|i| i * 7 + 1).collect();
            ids.shuffle(&mut rng);
            let mut pairs = Vec::new();
            for a in 0..2 * k {
                for b in a + 1..2 * k {
                    pairs.push((a, b));
                }
            }
            pairs.shuffle(&mut rng);
            let mut g = TrajectoryGraph::new();
            for (a, b) in pairs {
                let w = if (a < k) == (b < k) { 1.0 } else { -1.0 };
                g.add_edge(
                    VertexId::trajectory(ids[a as usize]),
                    VertexId::trajectory(ids[b as usize]),
                    w,
                );
            }
            let r = solve_gaec(&g).unwrap();
            let label = |i: u64| r.partition.label(VertexId::trajectory(ids[i as usize]));
            let same_inside = (0..2 * k).all(|i| label(i) == label(if i < k { 0 } else { k }));
            if r.components == 2 && same_inside && label(0) != label(k) {
                recovered += 1;
            }
        }
        ok &= recovered == 50;
        summary.push(format!("k={k}: {recovered}/50"));
    }
    outcome(ok, summary.join(", "))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    r
}

/// Spearman correlation; `None` when either side is constant.
fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn bias_spearman(retention: &mut Vec<(f64, f64)>) -> Outcome {
    let qs = [0.05, 0.1, 0.2, 0.4, 0.8];
    let mut ok = true;
    let mut per_seed = Vec::new();
    for seed in 0..10u64 {
        let spec = WorldSpec {
            seed,
            ..Default::default()
        };
        let season = generate_season(&spec, 0).unwrap();
        let medians: Vec<f64> = qs
            .iter()
            .map(|&q| {
                let cfg = SegmentConfig {
                    builder: BuilderConfig {
                        bias_fraction: q,
                        ..Default::default()
                    },
                    ..Default::default()
                };
                let out = segment_season(&season.data, &cfg).unwrap();
                retention.push((out.stats.retained_image_ratio, out.stats.retained_pixel_ratio));
                median(out.segments.iter().map(|s| s.trajectory_ids.len() as f64).collect())
            })
            .collect();
        match spearman(&qs, &medians) {
            Some(rho) => {
                ok &= rho <= 0.0;
                per_seed.push(format!("{rho:.2}"));
            }
            None => per_seed.push(format!("const({})", medians[0])),
        }
    }
    outcome(
        ok,
        format!(
            "rho per seed [{}]; constant medians count as rho = 0",
            per_seed.join(", ")
        ),
    )
}

fn segmentation_quality(
    world: &[mapseg::synth::GeneratedSeason],
    retention: &mut Vec<(f64, f64)>,
    map_ratios: &mut Vec<f64>,
    segments: &mut Vec<Vec<mapseg::model::MapSegment>>,
) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, s) in world.iter().enumerate() {
        let frames = s.data.poses.len() as f64;
        let per_frame = s.data.tracks.len() as f64 / frames;
        let start = Instant::now();
        let out = segment_season(&s.data, &SegmentConfig::default()).unwrap();
        let t = start.elapsed();
        let ari = planted_ari(&out.segments, &s.truth);
        ok &= ari >= 0.9 && per_frame >= 300.0 && t < Duration::from_secs(60);
        parts.push(format!(
            "s{i}: ARI {ari:.4}, {per_frame:.0} tracks/frame, {:.2} s",
            t.as_secs_f64()
        ));
        retention.push((out.stats.retained_image_ratio, out.stats.retained_pixel_ratio));
        map_ratios.push(out.stats.retained_image_ratio);
        segments.push(out.segments);
    }
    outcome(ok, parts.join("; "))
}

fn mcl_oracle() -> Outcome {
    let start = Instant::now();
    let spec = WorldSpec::planted(21, 10, 1000.0, 0.2);
    let map = generate_season(&spec, 0).unwrap();
    let query = generate_season(&spec, 1).unwrap();
    let segs = segment_season(&map.data, &SegmentConfig::default()).unwrap().segments;
    let cfg = EvalConfig {
        method: Method::Oracle,
        ..Default::default()
    };
    let r = evaluate(&map.data, &segs, &query.data, &cfg).unwrap();
    let t = start.elapsed();
    let delta = r.runs.iter().map(|x| x.max_delta_error).fold(0.0, f64::max);
    let spaced = r.runs.iter().all(|run| {
        run.hypotheses.iter().enumerate().all(|(i, a)| {
            run.hypotheses[i + 1..]
                .iter()
                .all(|b| (a.s - b.s).abs() >= cfg.nms_radius)
        })
    });
    let top1 = r
        .runs
        .iter()
        .filter(|x| x.retained)
        .all(|x| (x.hypotheses[0].s - x.truth_s).abs() < cfg.correct_radius);
    let top10 = r.topx.accuracy[&10];
    outcome(
        r.particles == 1000
            && r.runs_retained == 10
            && top10 == 1.0
            && delta <= 1e-9
            && spaced
            && t < Duration::from_secs(60),
        format!(
            "{} particles, {}/{} runs retained, Top-10 {:.1}%, top-1 correct on all: {top1}, max |sum dL - 1| {delta:.1e}, NMS spacing ok: {spaced}, {:.2} s",
            r.particles,
            r.runs_retained,
            r.runs_total,
            100.0 * top10,
            t.as_secs_f64()
        ),
    )
}

fn bow_cross_season(
    world: &[mapseg::synth::GeneratedSeason],
    segments: &[Vec<mapseg::model::MapSegment>],
) -> Outcome {
    let mut pooled: BTreeMap<usize, f64> = BTreeMap::new();
    let mut runs = 0;
    for m in 0..world.len() {
        for q in 0..world.len() {
            if m == q {
                continue;
            }
            let r = evaluate(&world[m].data, &segments[m], &world[q].data, &EvalConfig::default())
                .unwrap();
            runs += r.runs_retained;
            for (x, a) in &r.topx.accuracy {
                *pooled.entry(*x).or_insert(0.0) += a * r.runs_retained as f64;
            }
        }
    }
    let acc: Vec<(usize, f64)> = pooled
        .into_iter()
        .map(|(x, s)| (x, 100.0 * s / runs.max(1) as f64))
        .collect();
    let monotone = acc.windows(2).all(|w| w[0].1 <= w[1].1);
    let top10 = acc.iter().find(|(x, _)| *x == 10).map(|p| p.1).unwrap_or(0.0);
    let top200 = acc.iter().find(|(x, _)| *x == 200).map(|p| p.1).unwrap_or(0.0);
    let row: Vec<String> = acc.iter().map(|(x, a)| format!("Top-{x} {a:.1}")).collect();
    outcome(
        runs > 0 && monotone && top200 >= top10 + 10.0,
        format!("{runs} runs over 12 season pairs: {}", row.join(", ")),
    )
}

fn retention(map_ratios: &[f64], all: &[(f64, f64)]) -> Outcome {
    let in_band = map_ratios.iter().all(|r| (0.1..=0.3).contains(r));
    let ordered = all.iter().all(|(ri, rp)| rp <= ri);
    let shown: Vec<String> = map_ratios.iter().map(|r| format!("{:.1}%", 100.0 * r)).collect();
    outcome(
        in_band && ordered,
        format!(
            "R_i per season [{}]; R_p <= R_i on {}/{} runs",
            shown.join(", "),
            all.iter().filter(|(ri, rp)| rp <= ri).count(),
            all.len()
        ),
    )
}

fn token_widths() -> Outcome {
    let got: Vec<u32> = [64, 94, 256].iter().map(|&c| token_bits(c)).collect();
    outcome(got == [6, 7, 8], format!("C = 64, 94, 256 -> {got:?} bits"))
}

fn collect_files(root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    let mut entries: Vec<_> = fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, out);
        } else {
            out.insert(p.display().to_string(), fs::read(&p).unwrap());
        }
    }
}

fn determinism() -> Outcome {
    let spec = WorldSpec {
        target_features: 300,
        ..Default::default()
    };
    let runs: Vec<BTreeMap<String, Vec<u8>>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let root = dir.path();
            let spec_path = root.join("spec-in.json");
            fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
            cmd_synth(Some(&spec_path), &root.join("world"), Some(5)).unwrap();
            let s0 = root.join("world/season-0");
            let s1 = root.join("world/season-1");
            cmd_segment(&s0, &root.join("seg"), &SegmentConfig::default()).unwrap();
            for method in [Method::Bow, Method::ClassIndex, Method::Oracle] {
                let cfg = EvalConfig {
                    method,
                    ..Default::default()
                };
                let out = root.join(format!("eval-{}", method.name()));
                cmd_eval(&s0, &s1, &root.join("seg/segments.json"), &cfg, &out).unwrap();
            }
            let mut files = BTreeMap::new();
            collect_files(root, &mut files);
            files
                .into_iter()
                .map(|(k, v)| (k.strip_prefix(&root.display().to_string()).unwrap().to_string(), v))
                .collect()
        })
        .collect();
    let differing: Vec<&String> = runs[0]
        .iter()
        .filter(|(k, v)| runs[1].get(*k) != Some(v))
        .map(|(k, _)| k)
        .collect();
    outcome(
        differing.is_empty() && runs[0].len() == runs[1].len(),
        format!(
            "{} files compared across two runs, {} differ",
            runs[0].len(),
            differing.len()
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("multicut feasibility fuzz", feasibility_fuzz()),
        ("oracle dominance", oracle_dominance()),
        ("exact triangle", triangle()),
        ("planted clique recovery", planted_cliques()),
    ];

    let mut ratios = Vec::new();
    let bias = bias_spearman(&mut ratios);
    results.push(("bias behavior", bias));

    let world = generate_world(&WorldSpec::default()).unwrap();
    let mut map_ratios = Vec::new();
    let mut segments = Vec::new();
    let quality = segmentation_quality(&world, &mut ratios, &mut map_ratios, &mut segments);
    results.push(("end-to-end segmentation quality", quality));
    results.push(("MCL oracle sanity", mcl_oracle()));
    results.push(("BOW cross-season", bow_cross_season(&world, &segments)));
    results.push(("retention analog", retention(&map_ratios, &ratios)));
    results.push(("token width", token_widths()));
    results.push(("determinism golden", determinism()));

    let mut failed = 0;
    for (name, o) in &results {
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
