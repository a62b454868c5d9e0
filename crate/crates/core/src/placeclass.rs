//! Place classifiers built from mined segments.
//!
//! * A bag-of-words scorer: every segment is a document of visual words,
//!   scored against a query with TF-IDF.
//! * A segment-class inverted file: each map place is indexed by the bag
//!   of segment-class tokens predicted for it, `ceil(log2 C)` bits each.
//!
//! Scores are raw; normalization happens in the localization filter.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, FrameId, ImageExtent, MapSegment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CropVariant {
    /// Train on the full image.
    Whole,
    /// Train on the segment's frame box only.
    Part,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub class_id: u64,
    pub frame: FrameId,
    pub crop: BBox,
}

/// Training images per class. A (segment, frame) pair is dropped in both
/// variants when its frame box is below `bbox_min_pixels` in either side.
pub fn assemble_training_set(
    segments: &[MapSegment],
    extent: &ImageExtent,
    variant: CropVariant,
    bbox_min_pixels: f64,
) -> Vec<TrainingSample> {
    let mut out = Vec::new();
    for s in segments {
        for (&frame, b) in &s.frame_boxes {
            if b.width() < bbox_min_pixels || b.height() < bbox_min_pixels {
                continue;
            }
            let crop = match variant {
                CropVariant::Whole => extent.full_box(),
                CropVariant::Part => *b,
            };
            out.push(TrainingSample {
                class_id: s.id,
                frame,
                crop,
            });
        }
    }
    out
}

pub type WordId = u32;

/// Quantization of one descriptor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantized {
    pub word: WordId,
    pub nearest: f64,
    pub second: f64,
}

impl Quantized {
    /// Nearest-to-second distance ratio test.
    pub fn passes_ratio(&self, ratio: f64) -> bool {
        self.second > 0.0 && self.nearest / self.second < ratio
    }
}

/// Random projection followed by a nearest-centroid lookup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    dim: usize,
    projection: Vec<Vec<f64>>,
    centroids: Vec<Vec<f64>>,
}

fn projection_matrix(dim: usize, proj_dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let scale = 1.0 / (proj_dim as f64).sqrt();
    (0..proj_dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * scale
                })
                .collect()
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Codebook {
    /// Centroids drawn from a standard normal in the projected space.
    pub fn random(dim: usize, proj_dim: usize, words: usize, seed: u64) -> Result<Self> {
        if dim == 0 || proj_dim == 0 || words < 2 {
            return Err(Error::Config(
                "codebook needs positive dimensions and at least two words".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let projection = projection_matrix(dim, proj_dim, &mut rng);
        let centroids = (0..words)
            .map(|_| {
                (0..proj_dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect()
            })
            .collect();
        Ok(Codebook {
            dim,
            projection,
            centroids,
        })
    }

    /// Centroids are a seeded sample of the projected training descriptors.
    pub fn from_samples(
        samples: &[Vec<f64>],
        proj_dim: usize,
        words: usize,
        seed: u64,
    ) -> Result<Self> {
        let dim = samples
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Config("codebook needs training descriptors".into()))?;
        if proj_dim == 0 || words < 2 {
            return Err(Error::Config(
                "codebook needs positive dimensions and at least two words".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let projection = projection_matrix(dim, proj_dim, &mut rng);
        let mut book = Codebook {
            dim,
            projection,
            centroids: Vec::new(),
        };
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(&mut rng);
        let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(words);
        for i in order {
            if centroids.len() == words {
                break;
            }
            let p = book.project(&samples[i])?;
            if !centroids.iter().any(|c| c == &p) {
                centroids.push(p);
            }
        }
        if centroids.len() < 2 {
            return Err(Error::Config(
                "need at least two distinct training descriptors".into(),
            ));
        }
        book.centroids = centroids;
        Ok(book)
    }

    /// Lloyd iterations over the projected samples. A centroid that attracts
    /// no sample stays where it is.
    pub fn refine(&mut self, samples: &[Vec<f64>], iterations: usize) -> Result<()> {
        let projected = samples
            .iter()
            .map(|s| self.project(s))
            .collect::<Result<Vec<_>>>()?;
        let k = self.centroids.len();
        let pd = self.projection.len();
        for _ in 0..iterations {
            let mut sums = vec![vec![0.0; pd]; k];
            let mut counts = vec![0usize; k];
            for p in &projected {
                let best = self
                    .centroids
                    .iter()
                    .map(|c| sq_dist(p, c))
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                counts[best] += 1;
                for (s, x) in sums[best].iter_mut().zip(p) {
                    *s += x;
                }
            }
            let mut moved = false;
            for ((c, sum), &n) in self.centroids.iter_mut().zip(&sums).zip(&counts) {
                if n == 0 {
                    continue;
                }
                let next: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
                moved |= next != *c;
                *c = next;
            }
            if !moved {
                break;
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> usize {
        self.centroids.len()
    }

    fn project(&self, desc: &[f64]) -> Result<Vec<f64>> {
        if desc.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: desc.len(),
            });
        }
        Ok(self
            .projection
            .iter()
            .map(|row| row.iter().zip(desc).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn quantize(&self, desc: &[f64]) -> Result<Quantized> {
        let p = self.project(desc)?;
        let (mut best, mut d1, mut d2) = (0usize, f64::INFINITY, f64::INFINITY);
        for (i, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(&p, c);
            if d < d1 {
                d2 = d1;
                d1 = d;
                best = i;
            } else if d < d2 {
                d2 = d;
            }
        }
        Ok(Quantized {
            word: best as WordId,
            nearest: d1.sqrt(),
            second: d2.sqrt(),
        })
    }
}

/// Visual-word histogram of one place class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualWordDoc {
    pub class_id: u64,
    pub histogram: BTreeMap<WordId, u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BowModel {
    pub docs: Vec<VisualWordDoc>,
    /// Number of classes containing each word.
    pub df: BTreeMap<WordId, u32>,
    postings: BTreeMap<WordId, Vec<(usize, u32)>>,
}

impl BowModel {
    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn idf(&self, word: WordId) -> f64 {
        self.idf_with(word, self.docs.len())
    }

    /// `ln(num_docs / df)`, or 0 for a word no class contains.
    pub fn idf_with(&self, word: WordId, num_docs: usize) -> f64 {
        match self.df.get(&word) {
            Some(&df) if df > 0 => (num_docs as f64 / df as f64).ln(),
            _ => 0.0,
        }
    }
}

/// Builds one document per class from its training descriptors.
pub fn build_bow(
    training: &BTreeMap<u64, Vec<Vec<f64>>>,
    codebook: &Codebook,
) -> Result<BowModel> {
    let mut docs = Vec::with_capacity(training.len());
    let mut df: BTreeMap<WordId, u32> = BTreeMap::new();
    let mut postings: BTreeMap<WordId, Vec<(usize, u32)>> = BTreeMap::new();
    for (&class_id, descs) in training {
        if descs.is_empty() {
            return Err(Error::EmptyClass(class_id));
        }
        let mut histogram: BTreeMap<WordId, u32> = BTreeMap::new();
        for d in descs {
            *histogram.entry(codebook.quantize(d)?.word).or_insert(0) += 1;
        }
        for (&w, &tf) in &histogram {
            *df.entry(w).or_insert(0) += 1;
            postings.entry(w).or_default().push((docs.len(), tf));
        }
        docs.push(VisualWordDoc {
            class_id,
            histogram,
        });
    }
    Ok(BowModel {
        docs,
        df,
        postings,
    })
}

/// `score(c) = sum_w tf_q(w) * tf_c(w) * idf(w)^2` for every class.
pub fn score_histogram(query: &BTreeMap<WordId, f64>, model: &BowModel) -> BTreeMap<u64, f64> {
    score_histogram_with(query, model, model.num_docs())
}

/// [`score_histogram`] with the document count in the idf fixed by the
/// caller.
pub fn score_histogram_with(
    query: &BTreeMap<WordId, f64>,
    model: &BowModel,
    num_docs: usize,
) -> BTreeMap<u64, f64> {
    let mut scores: BTreeMap<u64, f64> = model.docs.iter().map(|d| (d.class_id, 0.0)).collect();
    for (&w, &tfq) in query {
        let idf = model.idf_with(w, num_docs);
        if idf == 0.0 {
            continue;
        }
        for &(doc, tfc) in model.postings.get(&w).into_iter().flatten() {
            *scores.get_mut(&model.docs[doc].class_id).unwrap() += tfq * tfc as f64 * idf * idf;
        }
    }
    scores
}

/// Word histogram of a query; descriptors failing the ratio test (when one
/// is given) do not vote.
pub fn query_histogram(
    descriptors: &[Vec<f64>],
    codebook: &Codebook,
    ratio_test: Option<f64>,
) -> Result<BTreeMap<WordId, f64>> {
    let mut hist = BTreeMap::new();
    for d in descriptors {
        let q = codebook.quantize(d)?;
        if ratio_test.is_none_or(|r| q.passes_ratio(r)) {
            *hist.entry(q.word).or_insert(0.0) += 1.0;
        }
    }
    Ok(hist)
}

pub fn score_bow(
    descriptors: &[Vec<f64>],
    codebook: &Codebook,
    model: &BowModel,
    ratio_test: Option<f64>,
) -> Result<BTreeMap<u64, f64>> {
    Ok(score_histogram(
        &query_histogram(descriptors, codebook, ratio_test)?,
        model,
    ))
}

/// Highest-scoring class, if any score is positive. Ties go to the smaller id.
pub fn predict_class(scores: &BTreeMap<u64, f64>) -> Option<u64> {
    let mut best: Option<(u64, f64)> = None;
    for (&c, &s) in scores {
        if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
            best = Some((c, s));
        }
    }
    best.map(|(c, _)| c)
}

/// Bits per token for `classes` distinct classes: `ceil(log2 classes)`.
pub fn token_bits(classes: u64) -> u32 {
    if classes <= 1 {
        0
    } else {
        u64::BITS - (classes - 1).leading_zeros()
    }
}

/// Predicted segment-class tokens for one map place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacePrediction {
    pub place: u64,
    pub frame: FrameId,
    pub tokens: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentClassIndex {
    pub classes: u64,
    pub token_bits: u32,
    /// Class token to sorted `(place, frame)` list.
    pub postings: BTreeMap<u64, Vec<(u64, FrameId)>>,
    bags: BTreeMap<u64, BTreeMap<u64, u32>>,
}

pub fn build_class_index(
    classes: u64,
    predictions: &[PlacePrediction],
) -> Result<SegmentClassIndex> {
    let mut postings: BTreeMap<u64, Vec<(u64, FrameId)>> = BTreeMap::new();
    let mut bags: BTreeMap<u64, BTreeMap<u64, u32>> = BTreeMap::new();
    for p in predictions {
        let bag = bags.entry(p.place).or_default();
        for &t in &p.tokens {
            if t >= classes {
                return Err(Error::TokenOutOfRange { token: t, classes });
            }
            *bag.entry(t).or_insert(0) += 1;
            postings.entry(t).or_default().push((p.place, p.frame));
        }
    }
    for list in postings.values_mut() {
        list.sort();
        list.dedup();
    }
    Ok(SegmentClassIndex {
        classes,
        token_bits: token_bits(classes),
        postings,
        bags,
    })
}

impl SegmentClassIndex {
    pub fn places(&self) -> impl Iterator<Item = u64> + '_ {
        self.bags.keys().copied()
    }
}

/// Multiset intersection size between the query bag and each indexed
/// place that shares at least one token.
pub fn score_class_index(query: &[u64], index: &SegmentClassIndex) -> BTreeMap<u64, f64> {
    let mut qbag: BTreeMap<u64, u32> = BTreeMap::new();
    for &t in query {
        *qbag.entry(t).or_insert(0) += 1;
    }
    let mut scores: BTreeMap<u64, f64> = BTreeMap::new();
    for (&t, &qn) in &qbag {
        let Some(list) = index.postings.get(&t) else {
            continue;
        };
        let mut places: Vec<u64> = list.iter().map(|&(p, _)| p).collect();
        places.dedup();
        for p in places {
            let pn = index.bags[&p].get(&t).copied().unwrap_or(0);
            *scores.entry(p).or_insert(0.0) += qn.min(pn) as f64;
        }
    }
    scores
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn seg(id: u64, frame: u64, b: BBox) -> MapSegment {
        MapSegment {
            id,
            trajectory_ids: BTreeSet::new(),
            box_ids: BTreeSet::new(),
            frame_boxes: [(FrameId(frame), b)].into_iter().collect(),
            viewpoint_span: vec![],
        }
    }

    #[test]
    fn training_set_variants() {
        let ext = ImageExtent::new(640.0, 480.0);
        let b = BBox::new(10.0, 10.0, 210.0, 210.0);
        let part = assemble_training_set(&[seg(3, 5, b)], &ext, CropVariant::Part, 100.0);
        assert_eq!(
            part,
            vec![TrainingSample {
                class_id: 3,
                frame: FrameId(5),
                crop: b
            }]
        );
        let whole = assemble_training_set(&[seg(3, 5, b)], &ext, CropVariant::Whole, 100.0);
        assert_eq!(whole[0].crop, ext.full_box());
        let thin = BBox::new(0.0, 0.0, 80.0, 200.0);
        for v in [CropVariant::Whole, CropVariant::Part] {
            assert!(assemble_training_set(&[seg(0, 1, thin)], &ext, v, 100.0).is_empty());
        }
    }

    /// Codebook whose words are the identity-projected unit vectors e_0..e_3.
    fn axis_codebook() -> Codebook {
        let samples: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut cb = Codebook::from_samples(&samples, 4, 4, 1).unwrap();
        cb.projection = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        cb.centroids = samples;
        cb
    }

    fn unit(i: usize) -> Vec<f64> {
        (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn document_frequencies() {
        let cb = axis_codebook();
        let one: BTreeMap<u64, Vec<Vec<f64>>> = [(0, vec![unit(0), unit(0)])].into_iter().collect();
        let m = build_bow(&one, &cb).unwrap();
        assert_eq!(m.df.get(&0), Some(&1));
        assert_eq!(m.docs[0].histogram.get(&0), Some(&2));

        let two: BTreeMap<u64, Vec<Vec<f64>>> =
            [(0, vec![unit(0)]), (1, vec![unit(0), unit(1)])].into_iter().collect();
        let m = build_bow(&two, &cb).unwrap();
        assert_eq!(m.df.get(&0), Some(&2));
        assert_eq!(m.df.get(&3), None);
        assert_eq!(m.idf(3), 0.0);

        let empty: BTreeMap<u64, Vec<Vec<f64>>> = [(4, vec![])].into_iter().collect();
        assert_eq!(build_bow(&empty, &cb), Err(Error::EmptyClass(4)));
    }

    #[test]
    fn tfidf_contribution() {
        let cb = axis_codebook();
        let training: BTreeMap<u64, Vec<Vec<f64>>> = [
            (0, vec![unit(0)]),
            (1, vec![unit(1)]),
            (2, vec![unit(2)]),
            (3, vec![unit(3)]),
        ]
        .into_iter()
        .collect();
        let m = build_bow(&training, &cb).unwrap();
        let s = score_bow(&[unit(0), unit(0)], &cb, &m, None).unwrap();
        let expected = 2.0 * 1.0 * 4f64.ln().powi(2);
        assert!((s[&0] - expected).abs() < 1e-12);
        assert_eq!(s[&1], 0.0);
    }

    #[test]
    fn no_shared_words_scores_zero() {
        let cb = axis_codebook();
        let training: BTreeMap<u64, Vec<Vec<f64>>> =
            [(0, vec![unit(0)]), (1, vec![unit(1)])].into_iter().collect();
        let m = build_bow(&training, &cb).unwrap();
        let s = score_bow(&[unit(3)], &cb, &m, None).unwrap();
        assert!(s.values().all(|&v| v == 0.0));
        assert_eq!(predict_class(&s), None);
    }

    #[test]
    fn identical_classes_tie() {
        let cb = axis_codebook();
        let training: BTreeMap<u64, Vec<Vec<f64>>> = [
            (0, vec![unit(0)]),
            (1, vec![unit(0)]),
            (2, vec![unit(1)]),
        ]
        .into_iter()
        .collect();
        let m = build_bow(&training, &cb).unwrap();
        let s = score_bow(&[unit(0)], &cb, &m, None).unwrap();
        assert_eq!(s[&0], s[&1]);
        assert!(s[&0] > 0.0);
        assert_eq!(predict_class(&s), Some(0));
    }

    #[test]
    fn ratio_test_rejects_ambiguous_descriptors() {
        let cb = axis_codebook();
        // Equidistant from e0 and e1.
        let q = cb.quantize(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(!q.passes_ratio(0.8));
        assert!(cb.quantize(&unit(2)).unwrap().passes_ratio(0.8));
        let h = query_histogram(&[vec![0.5, 0.5, 0.0, 0.0]], &cb, Some(0.8)).unwrap();
        assert!(h.is_empty());
    }

    #[test]
    fn codebook_is_deterministic() {
        let samples: Vec<Vec<f64>> = (0..50)
            .map(|i| (0..8).map(|j| ((i * 7 + j * 3) % 11) as f64).collect())
            .collect();
        let a = Codebook::from_samples(&samples, 4, 16, 9).unwrap();
        let b = Codebook::from_samples(&samples, 4, 16, 9).unwrap();
        assert_eq!(a, b);
        for s in &samples {
            assert_eq!(a.quantize(s).unwrap(), b.quantize(s).unwrap());
        }
        assert!(matches!(
            a.quantize(&[1.0]),
            Err(Error::DimensionMismatch { expected: 8, got: 1 })
        ));
        let r = Codebook::random(8, 4, 16, 2).unwrap();
        assert_eq!(r.words(), 16);
        assert_eq!(r, Codebook::random(8, 4, 16, 2).unwrap());
    }

    #[test]
    fn token_widths() {
        assert_eq!(token_bits(94), 7);
        assert_eq!(token_bits(64), 6);
        assert_eq!(token_bits(256), 8);
        assert_eq!(token_bits(65), 7);
        assert_eq!(token_bits(2), 1);
    }

    fn pred(place: u64, tokens: &[u64]) -> PlacePrediction {
        PlacePrediction {
            place,
            frame: FrameId(place),
            tokens: tokens.to_vec(),
        }
    }

    #[test]
    fn class_index_postings() {
        let idx = build_class_index(94, &[pred(3, &[7])]).unwrap();
        assert_eq!(idx.postings[&7], vec![(3, FrameId(3))]);
        assert_eq!(idx.token_bits, 7);
        assert_eq!(
            build_class_index(94, &[pred(0, &[94])]),
            Err(Error::TokenOutOfRange {
                token: 94,
                classes: 94
            })
        );
    }

    #[test]
    fn class_index_scores() {
        let idx = build_class_index(10, &[pred(1, &[3, 7]), pred(2, &[1]), pred(5, &[7, 7, 7])])
            .unwrap();
        let s = score_class_index(&[7], &idx);
        assert_eq!(s.get(&1), Some(&1.0));
        assert_eq!(s.get(&2), None);
        let s = score_class_index(&[7, 7], &idx);
        assert_eq!(s.get(&5), Some(&2.0));
        assert!(score_class_index(&[9], &idx).is_empty());
    }

    #[test]
    fn refine_separates_blobs() {
        let mut samples = Vec::new();
        for i in 0..20 {
            let e = 0.01 * i as f64;
            samples.push(vec![5.0 + e, 5.0, 5.0, 5.0]);
            samples.push(vec![-5.0, -5.0 - e, -5.0, -5.0]);
        }
        let mut cb = Codebook::from_samples(&samples, 3, 2, 1).unwrap();
        cb.refine(&samples, 10).unwrap();
        let a = cb.quantize(&samples[0]).unwrap().word;
        let b = cb.quantize(&samples[1]).unwrap().word;
        assert_ne!(a, b);
        for (k, s) in samples.iter().enumerate() {
            let w = cb.quantize(s).unwrap().word;
            assert_eq!(w, if k % 2 == 0 { a } else { b });
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn model(classes: &[Vec<usize>]) -> (Codebook, BowModel) {
            let cb = axis_codebook();
            let training = classes
                .iter()
                .enumerate()
                .map(|(i, ws)| (i as u64, ws.iter().map(|&w| unit(w)).collect()))
                .collect();
            let m = build_bow(&training, &cb).unwrap();
            (cb, m)
        }

        proptest! {
            #[test]
            fn scores_scale_with_query(
                classes in prop::collection::vec(prop::collection::vec(0usize..4, 1..6), 1..5),
                query in prop::collection::btree_map(0u32..4, 1u32..5, 1..4),
                k in 0.1f64..10.0,
            ) {
                let (_, m) = model(&classes);
                let q: BTreeMap<WordId, f64> = query.iter().map(|(&w, &c)| (w, c as f64)).collect();
                let qk: BTreeMap<WordId, f64> = q.iter().map(|(&w, &c)| (w, c * k)).collect();
                let a = score_histogram(&q, &m);
                let b = score_histogram(&qk, &m);
                for (c, s) in &a {
                    prop_assert!(*s >= 0.0);
                    prop_assert!((b[c] - k * s).abs() <= 1e-9 * (1.0 + s.abs() * k));
                }
            }

            #[test]
            fn unrelated_class_leaves_scores_unchanged(
                classes in prop::collection::vec(prop::collection::vec(0usize..3, 1..6), 1..5),
                query in prop::collection::btree_map(0u32..3, 1u32..5, 1..3),
            ) {
                let (_, m) = model(&classes);
                let mut more = classes.clone();
                more.push(vec![3, 3]);
                let (_, m2) = model(&more);
                let q: BTreeMap<WordId, f64> = query.iter().map(|(&w, &c)| (w, c as f64)).collect();
                let n = m2.num_docs();
                let a = score_histogram_with(&q, &m, n);
                let b = score_histogram_with(&q, &m2, n);
                for (c, s) in &a {
                    prop_assert_eq!(b[c], *s);
                }
                prop_assert_eq!(b[&(classes.len() as u64)], 0.0);
            }

            #[test]
            fn own_bag_ranks_highest(
                bags in prop::collection::vec(prop::collection::vec(0u64..6, 1..5), 2..6),
                pick in 0usize..6,
            ) {
                let preds: Vec<PlacePrediction> = bags
                    .iter()
                    .enumerate()
                    .map(|(i, b)| pred(i as u64, b))
                    .collect();
                let idx = build_class_index(6, &preds).unwrap();
                let pick = pick % bags.len();
                let s = score_class_index(&bags[pick], &idx);
                let own = s[&(pick as u64)];
                for v in s.values() {
                    prop_assert!(*v <= own);
                }
            }
        }
    }
}
