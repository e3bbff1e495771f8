//! Cosine nearest-neighbor classification and sub-video majority voting.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::linalg::{dot, norm};
use crate::scalar::Real;
use crate::video::VideoVolume;

/// Labeled reference features.
#[derive(Debug, Clone)]
pub struct GallerySet<S> {
    features: Vec<FeatureVector<S>>,
    labels: Vec<u32>,
    norms: Vec<S>,
}

impl<S: Real> GallerySet<S> {
    pub fn new(features: Vec<FeatureVector<S>>, labels: Vec<u32>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} features vs {} labels",
                features.len(),
                labels.len()
            )));
        }
        if features.is_empty() {
            return Err(Error::EmptyInput("gallery has no entries".into()));
        }
        let norms: Vec<S> = features.iter().map(|f| norm(f.values())).collect();
        if norms.iter().any(|&n| n <= S::zero()) {
            return Err(Error::ZeroNormFeature);
        }
        Ok(GallerySet {
            features,
            labels,
            norms,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }
}

/// One classification outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<S> {
    pub label: u32,
    pub similarity: S,
}

/// Label of the gallery entry with the highest cosine similarity to the
/// probe; ties go to the lowest gallery index.
pub fn nn_cosine<S: Real>(
    gallery: &GallerySet<S>,
    probe: &FeatureVector<S>,
) -> Result<Prediction<S>> {
    let pn = norm(probe.values());
    if pn <= S::zero() {
        return Err(Error::ZeroNormFeature);
    }
    let dim = gallery.features[0].len();
    if probe.len() != dim {
        return Err(Error::DimMismatch {
            expected: dim,
            got: probe.len(),
        });
    }
    let mut best = Prediction {
        label: gallery.labels[0],
        similarity: S::neg_infinity(),
    };
    for i in 0..gallery.len() {
        let sim = dot(gallery.features[i].values(), probe.values()) / (gallery.norms[i] * pn);
        if sim > best.similarity {
            best = Prediction {
                label: gallery.labels[i],
                similarity: sim,
            };
        }
    }
    Ok(best)
}

/// Majority vote over sub-video predictions. Ties break to the highest mean
/// similarity among tied labels, then to the lowest label id.
pub fn vote_subvideos<S: Real>(predictions: &[Prediction<S>]) -> Result<u32> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("no sub-video predictions".into()));
    }
    let mut tally: BTreeMap<u32, (usize, S)> = BTreeMap::new();
    for p in predictions {
        let e = tally.entry(p.label).or_insert((0, S::zero()));
        e.0 += 1;
        e.1 = e.1 + p.similarity;
    }
    let mut best_label = 0u32;
    let mut best_count = 0usize;
    let mut best_mean = S::neg_infinity();
    // BTreeMap iterates labels in ascending order, so the lowest label wins
    // remaining ties
    for (&label, &(count, sim_sum)) in &tally {
        let mean = sim_sum / S::from_f64_lossy(count as f64);
        if count > best_count || (count == best_count && mean > best_mean) {
            best_label = label;
            best_count = count;
            best_mean = mean;
        }
    }
    Ok(best_label)
}

/// Split into consecutive non-overlapping temporal blocks starting at frame
/// 0; surplus trailing frames are dropped.
pub fn split_subvideos(
    v: &VideoVolume,
    n_subs: usize,
    frames_each: usize,
) -> Result<Vec<VideoVolume>> {
    if n_subs * frames_each > v.frames() || n_subs == 0 || frames_each == 0 {
        return Err(Error::InsufficientData(format!(
            "{} frames cannot be split into {n_subs} sub-videos of {frames_each}",
            v.frames()
        )));
    }
    let plane = v.height() * v.width();
    let mut out = Vec::with_capacity(n_subs);
    for s in 0..n_subs {
        let start = s * frames_each * plane;
        let end = (s + 1) * frames_each * plane;
        out.push(VideoVolume::new(
            frames_each,
            v.height(),
            v.width(),
            v.data()[start..end].to_vec(),
        ));
    }
    Ok(out)
}
