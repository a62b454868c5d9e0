//! Topometric Monte Carlo localization along the map's travel axis.
//!
//! Particles are travel distances along the map trajectory. The motion model
//! is drift-free: every particle advances by exactly the odometry step. A
//! perception step spreads the classifier's raw class scores over the
//! particles inside each class's viewpoint spans, normalizes the increments
//! to sum to one and adds them to the accumulated likelihoods. There is no
//! resampling.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segments::Cell;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MclConfig {
    /// Map length `D` in meters.
    pub map_length: f64,
    /// Particle spacing normalizer `D_o`; `N = floor(D / D_o)`.
    pub d_norm: f64,
    pub correct_radius: f64,
    pub nms_radius: f64,
    pub start_spacing: f64,
    pub top_x: Vec<usize>,
}

impl MclConfig {
    pub fn new(map_length: f64) -> Self {
        MclConfig {
            map_length,
            d_norm: 1.0,
            correct_radius: 10.0,
            nms_radius: 10.0,
            start_spacing: 100.0,
            top_x: vec![10, 20, 50, 100, 200],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.map_length,
            self.d_norm,
            self.correct_radius,
            self.nms_radius,
            self.start_spacing,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || self.top_x.contains(&0) {
            return Err(Error::Config("MCL parameters must be positive".into()));
        }
        Ok(())
    }

    pub fn particle_count(&self) -> usize {
        ((self.map_length / self.d_norm + 1e-9).floor() as usize).max(1)
    }

    /// Start locations `k * start_spacing` for `k < floor(D / spacing)`.
    pub fn start_locations(&self) -> Vec<f64> {
        let n = ((self.map_length / self.start_spacing + 1e-9).floor() as usize).max(1);
        (0..n).map(|k| k as f64 * self.start_spacing).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub s: f64,
    pub likelihood: f64,
}

/// `N` particles at the centers of `N` equal cells of `[0, D]`, all with
/// zero likelihood.
pub fn init_particles(cfg: &MclConfig) -> Vec<Particle> {
    let n = cfg.particle_count();
    let step = cfg.map_length / n as f64;
    (0..n)
        .map(|i| Particle {
            s: (i as f64 + 0.5) * step,
            likelihood: 0.0,
        })
        .collect()
}

/// Advances every particle by `ds`, clamped to the map end.
pub fn motion_update(particles: &mut [Particle], ds: f64, map_length: f64) {
    for p in particles {
        p.s = (p.s + ds).min(map_length);
    }
}

/// Closed travel-distance interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, s: f64) -> bool {
        self.lo <= s && s <= self.hi
    }
}

/// Merges sorted travel-distance samples into intervals, joining samples
/// closer than `merge_gap` and padding each interval by `pad` on both sides.
pub fn spans_from_samples(samples: &[f64], merge_gap: f64, pad: f64) -> Vec<Interval> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<Interval> = Vec::new();
    for s in sorted {
        match out.last_mut() {
            Some(last) if s - (last.hi - pad) <= merge_gap => last.hi = s + pad,
            _ => out.push(Interval {
                lo: s - pad,
                hi: s + pad,
            }),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PerceptionOutcome {
    /// Sum of the normalized increments that were added.
    Applied { delta_sum: f64 },
    /// No positive score reached any particle.
    Skipped,
}

/// Index range of the particles (sorted by `s`) inside `iv`.
fn particle_range(particles: &[Particle], iv: &Interval) -> std::ops::Range<usize> {
    let lo = particles.partition_point(|p| p.s < iv.lo);
    let hi = particles.partition_point(|p| p.s <= iv.hi);
    lo..hi.max(lo)
}

/// Spreads each class's raw score uniformly over the particles in its spans,
/// normalizes the increments to sum to one and adds them. `particles` must
/// be sorted by `s`, which every update here preserves.
pub fn perception_update(
    particles: &mut [Particle],
    scores: &BTreeMap<u64, f64>,
    spans: &BTreeMap<u64, Vec<Interval>>,
) -> PerceptionOutcome {
    debug_assert!(particles.windows(2).all(|w| w[0].s <= w[1].s));
    let mut delta = vec![0.0; particles.len()];
    for (class, &score) in scores {
        if !(score > 0.0) {
            continue;
        }
        let Some(ivs) = spans.get(class) else {
            continue;
        };
        let mut members: BTreeSet<usize> = BTreeSet::new();
        for iv in ivs {
            members.extend(particle_range(particles, iv));
        }
        if members.is_empty() {
            continue;
        }
        let share = score / members.len() as f64;
        for i in members {
            delta[i] += share;
        }
    }
    let total: f64 = delta.iter().sum();
    if !(total > 0.0) {
        return PerceptionOutcome::Skipped;
    }
    let mut applied = 0.0;
    for (p, d) in particles.iter_mut().zip(&delta) {
        let d = d / total;
        p.likelihood += d;
        applied += d;
    }
    PerceptionOutcome::Applied { delta_sum: applied }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub s: f64,
    pub likelihood: f64,
}

/// Hypotheses by descending likelihood, ties broken by smaller `s`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedHypotheses {
    pub hypotheses: Vec<Hypothesis>,
}

/// Greedy non-maximum suppression: a hypothesis is kept only if it lies at
/// least `radius` away from every hypothesis already kept.
pub fn rank_and_nms(particles: &[Particle], radius: f64) -> RankedHypotheses {
    let mut order: Vec<Hypothesis> = particles
        .iter()
        .map(|p| Hypothesis {
            s: p.s,
            likelihood: p.likelihood,
        })
        .collect();
    order.sort_by(|a, b| {
        b.likelihood
            .total_cmp(&a.likelihood)
            .then(a.s.total_cmp(&b.s))
    });
    let mut kept: Vec<Hypothesis> = Vec::new();
    for h in order {
        if kept.iter().all(|k| (h.s - k.s).abs() >= radius) {
            kept.push(h);
        }
    }
    RankedHypotheses { hypotheses: kept }
}

/// Accuracy per `X`: the fraction of runs with a hypothesis among their top
/// `X` that is nearer than the correct radius to the ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopXTable {
    pub runs: usize,
    pub accuracy: BTreeMap<usize, f64>,
}

pub fn evaluate_topx(runs: &[(RankedHypotheses, f64)], cfg: &MclConfig) -> TopXTable {
    let accuracy = cfg
        .top_x
        .iter()
        .map(|&x| {
            let correct = runs
                .iter()
                .filter(|(ranked, truth)| {
                    ranked
                        .hypotheses
                        .iter()
                        .take(x)
                        .any(|h| (h.s - truth).abs() < cfg.correct_radius)
                })
                .count();
            let acc = if runs.is_empty() {
                0.0
            } else {
                correct as f64 / runs.len() as f64
            };
            (x, acc)
        })
        .collect();
    TopXTable {
        runs: runs.len(),
        accuracy,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapThresholds {
    /// Minimum share of a run's cells that the map has seen.
    pub min_map_overlap: f64,
    /// Minimum share of a run's cells covered by mined segments.
    pub min_segment_overlap: f64,
}

impl Default for OverlapThresholds {
    fn default() -> Self {
        OverlapThresholds {
            min_map_overlap: 0.8,
            min_segment_overlap: 0.10,
        }
    }
}

fn overlap(run: &BTreeSet<Cell>, other: &BTreeSet<Cell>) -> f64 {
    if run.is_empty() {
        0.0
    } else {
        run.intersection(other).count() as f64 / run.len() as f64
    }
}

/// Indices of the runs that clear both overlap thresholds.
pub fn filter_test_sequences(
    runs: &[BTreeSet<Cell>],
    map_cells: &BTreeSet<Cell>,
    segment_cells: &BTreeSet<Cell>,
    thresholds: &OverlapThresholds,
) -> Vec<usize> {
    runs.iter()
        .enumerate()
        .filter(|(_, cells)| {
            overlap(cells, map_cells) >= thresholds.min_map_overlap
                && overlap(cells, segment_cells) >= thresholds.min_segment_overlap
        })
        .map(|(i, _)| i)
        .collect()
}

/// One odometry step followed by the classifier's raw scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub ds: f64,
    pub scores: BTreeMap<u64, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub ranked: RankedHypotheses,
    pub outcomes: Vec<PerceptionOutcome>,
}

/// Runs the filter from a uniform prior over a sequence of steps and ranks
/// the particles at the end.
pub fn run_localization(
    cfg: &MclConfig,
    spans: &BTreeMap<u64, Vec<Interval>>,
    steps: impl IntoIterator<Item = Step>,
) -> RunTrace {
    let mut particles = init_particles(cfg);
    let mut outcomes = Vec::new();
    for step in steps {
        motion_update(&mut particles, step.ds, cfg.map_length);
        outcomes.push(perception_update(&mut particles, &step.scores, spans));
    }
    RunTrace {
        ranked: rank_and_nms(&particles, cfg.nms_radius),
        outcomes,
    }
}
