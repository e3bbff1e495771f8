//! Experiment protocols, model-bundle persistence, metrics, and the LBP-TOP
//! baseline.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::classify::{nn_cosine, split_subvideos, vote_subvideos, GallerySet, Prediction};
use crate::codebook::{fit_codebook, Codebook};
use crate::error::{Error, Result};
use crate::features::{
    encode_video, fit_pca, project, EncodeOptions, FeatureVector, PcaModel, ScaleModel,
    ScaleModels,
};
use crate::hash::{binarize, train_hash, HashModel, Lambdas, TrainOptions};
use crate::linalg::Matrix;
use crate::pdv::{extract_pdvs, PdvMatrix};
use crate::scalar::Real;
use crate::video::{load_volume, DatasetManifest, VideoVolume};

/// Evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Stratified 50/50 split, repeated; the DynTex++ setting.
    Dyntex5050,
    /// Per-class round-robin k-fold cross-validation; the 50-scene setting.
    Ucla50,
    /// Stratified 50/50 split, repeated, with 5×15-frame sub-video voting.
    Ucla9,
    /// Stratified 50/50 split on a synthetic dataset.
    Synth,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Dyntex5050 => "dyntex-5050",
            Protocol::Ucla50 => "ucla-50",
            Protocol::Ucla9 => "ucla-9",
            Protocol::Synth => "synth",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dyntex-5050" => Ok(Protocol::Dyntex5050),
            "ucla-50" => Ok(Protocol::Ucla50),
            "ucla-9" => Ok(Protocol::Ucla9),
            "synth" => Ok(Protocol::Synth),
            other => Err(Error::BadConfig(format!("unknown protocol `{other}`"))),
        }
    }
}

/// Everything a protocol run needs besides the data.
#[derive(Debug, Clone)]
pub struct ExperimentConfig<S> {
    pub protocol: Protocol,
    pub scales: Vec<usize>,
    pub bits: usize,
    pub lambdas: Lambdas<S>,
    pub dict_size: usize,
    pub pca_dim: usize,
    pub repeats: usize,
    pub folds: usize,
    pub seed: u64,
    pub train_sample_cap: usize,
    pub encode_sample_cap: usize,
    pub train_stride: (usize, usize, usize),
    pub encode_stride: (usize, usize, usize),
    pub hash_iterations: usize,
    pub kmeans_iterations: usize,
    /// Crop every loaded volume to this (T, H, W) motion window.
    pub crop: Option<(usize, usize, usize)>,
    /// Reuse hash projections and codebooks from this bundle instead of
    /// training them; PCA and the gallery are still fit on the target
    /// training split.
    pub transfer: Option<PathBuf>,
}

impl<S: Real> ExperimentConfig<S> {
    pub fn new(protocol: Protocol, seed: u64) -> Self {
        let repeats = match protocol {
            Protocol::Dyntex5050 => 5,
            Protocol::Ucla50 => 1,
            Protocol::Ucla9 => 20,
            Protocol::Synth => 1,
        };
        ExperimentConfig {
            protocol,
            scales: vec![3, 5],
            bits: 15,
            lambdas: Lambdas::default(),
            dict_size: 1500,
            pca_dim: 500,
            repeats,
            folds: 4,
            seed,
            train_sample_cap: 200_000,
            encode_sample_cap: 50_000,
            train_stride: (1, 1, 1),
            encode_stride: (1, 1, 1),
            hash_iterations: 20,
            kmeans_iterations: 100,
            crop: None,
            transfer: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats < 1 {
            return Err(Error::BadConfig("repeats must be at least 1".into()));
        }
        if self.scales.is_empty() {
            return Err(Error::BadConfig("at least one scale required".into()));
        }
        for &p in &self.scales {
            if p < 3 || p % 2 == 0 {
                return Err(Error::BadNeighborhoodSize(p));
            }
        }
        if self.pca_dim < 1 {
            return Err(Error::BadConfig("pca_dim must be at least 1".into()));
        }
        if self.folds < 2 && self.protocol == Protocol::Ucla50 {
            return Err(Error::BadConfig("cross-validation needs at least 2 folds".into()));
        }
        Ok(())
    }

    /// Flat `key = value` snapshot, stable key order.
    pub fn snapshot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "protocol = {}", self.protocol.name());
        let scales: Vec<String> = self.scales.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(s, "scales = {}", scales.join(","));
        let _ = writeln!(s, "bits = {}", self.bits);
        let _ = writeln!(s, "lambda1 = {}", self.lambdas.quantization.to_f64_lossy());
        let _ = writeln!(s, "lambda2 = {}", self.lambdas.balance.to_f64_lossy());
        let _ = writeln!(s, "lambda3 = {}", self.lambdas.variance.to_f64_lossy());
        let _ = writeln!(s, "dict_size = {}", self.dict_size);
        let _ = writeln!(s, "pca_dim = {}", self.pca_dim);
        let _ = writeln!(s, "repeats = {}", self.repeats);
        let _ = writeln!(s, "folds = {}", self.folds);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "train_cap = {}", self.train_sample_cap);
        let _ = writeln!(s, "encode_cap = {}", self.encode_sample_cap);
        let (a, b, c) = self.train_stride;
        let _ = writeln!(s, "train_stride = {a},{b},{c}");
        let (a, b, c) = self.encode_stride;
        let _ = writeln!(s, "encode_stride = {a},{b},{c}");
        let _ = writeln!(s, "hash_iterations = {}", self.hash_iterations);
        let _ = writeln!(s, "kmeans_iterations = {}", self.kmeans_iterations);
        if let Some((t, h, w)) = self.crop {
            let _ = writeln!(s, "crop = {t},{h},{w}");
        }
        s
    }

    /// Apply `key = value` lines from a flat config file.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::BadConfig(format!("line {}: expected `key = value`", idx + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::BadConfig(format!("line {}: bad {what}", idx + 1));
            match key {
                "protocol" => self.protocol = value.parse()?,
                "scales" => {
                    self.scales = value
                        .split(',')
                        .map(|t| t.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("scales"))?;
                }
                "bits" => self.bits = value.parse().map_err(|_| bad("bits"))?,
                "lambda1" => {
                    self.lambdas.quantization =
                        S::from_f64_lossy(value.parse().map_err(|_| bad("lambda1"))?)
                }
                "lambda2" => {
                    self.lambdas.balance =
                        S::from_f64_lossy(value.parse().map_err(|_| bad("lambda2"))?)
                }
                "lambda3" => {
                    self.lambdas.variance =
                        S::from_f64_lossy(value.parse().map_err(|_| bad("lambda3"))?)
                }
                "dict_size" => self.dict_size = value.parse().map_err(|_| bad("dict_size"))?,
                "pca_dim" => self.pca_dim = value.parse().map_err(|_| bad("pca_dim"))?,
                "repeats" => self.repeats = value.parse().map_err(|_| bad("repeats"))?,
                "folds" => self.folds = value.parse().map_err(|_| bad("folds"))?,
                "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
                "train_cap" => {
                    self.train_sample_cap = value.parse().map_err(|_| bad("train_cap"))?
                }
                "encode_cap" => {
                    self.encode_sample_cap = value.parse().map_err(|_| bad("encode_cap"))?
                }
                "train_stride" => self.train_stride = parse_triple(value).ok_or_else(|| bad("train_stride"))?,
                "encode_stride" => self.encode_stride = parse_triple(value).ok_or_else(|| bad("encode_stride"))?,
                "hash_iterations" => {
                    self.hash_iterations = value.parse().map_err(|_| bad("hash_iterations"))?
                }
                "kmeans_iterations" => {
                    self.kmeans_iterations = value.parse().map_err(|_| bad("kmeans_iterations"))?
                }
                "crop" => self.crop = Some(parse_triple(value).ok_or_else(|| bad("crop"))?),
                "transfer" => self.transfer = Some(PathBuf::from(value)),
                other => {
                    return Err(Error::BadConfig(format!(
                        "line {}: unknown key `{other}`",
                        idx + 1
                    )))
                }
            }
        }
        Ok(())
    }
}

fn parse_triple(value: &str) -> Option<(usize, usize, usize)> {
    let parts: Vec<usize> = value
        .split(',')
        .map(|t| t.trim().parse::<usize>().ok())
        .collect::<Option<_>>()?;
    if parts.len() == 3 {
        Some((parts[0], parts[1], parts[2]))
    } else {
        None
    }
}

/// What produces per-video features during a protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    /// The learned pipeline: hashed PDVs, dictionary histograms, PCA.
    Learned,
    /// The LBP-TOP baseline histogram (radius 1, 8 neighbors), no training.
    LbpTop,
}

/// One train/test round.
#[derive(Debug, Clone)]
pub struct RepeatResult {
    pub repeat: usize,
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Per-probe outcome for the prediction CSV.
#[derive(Debug, Clone)]
pub struct PredictionRecord {
    pub video_path: String,
    pub true_label: u32,
    pub predicted_label: u32,
    pub similarity: f64,
}

/// Full protocol outcome.
#[derive(Debug, Clone)]
pub struct ProtocolReport {
    pub protocol: Protocol,
    pub seed: u64,
    pub repeats: Vec<RepeatResult>,
    pub predictions: Vec<PredictionRecord>,
}

impl ProtocolReport {
    pub fn mean_accuracy(&self) -> f64 {
        self.repeats.iter().map(|r| r.accuracy).sum::<f64>() / self.repeats.len() as f64
    }

    pub fn std_accuracy(&self) -> f64 {
        let m = self.mean_accuracy();
        let n = self.repeats.len() as f64;
        (self.repeats.iter().map(|r| (r.accuracy - m).powi(2)).sum::<f64>() / n).sqrt()
    }

    /// `protocol,repeat,accuracy,n_train,n_test,seed`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("protocol,repeat,accuracy,n_train,n_test,seed\n");
        for r in &self.repeats {
            let _ = writeln!(
                out,
                "{},{},{:.6},{},{},{}",
                self.protocol.name(),
                r.repeat,
                r.accuracy,
                r.n_train,
                r.n_test,
                self.seed
            );
        }
        out
    }

    /// `video_path,true_label,predicted_label,similarity`
    pub fn predictions_csv(&self) -> String {
        let mut out = String::from("video_path,true_label,predicted_label,similarity\n");
        for p in &self.predictions {
            let _ = writeln!(
                out,
                "{},{},{},{:.6}",
                p.video_path, p.true_label, p.predicted_label, p.similarity
            );
        }
        out
    }

    pub fn human_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "protocol: {}  seed: {}", self.protocol.name(), self.seed);
        let _ = writeln!(out, "{:>7}  {:>9}  {:>7}  {:>6}", "repeat", "accuracy", "train", "test");
        for r in &self.repeats {
            let _ = writeln!(
                out,
                "{:>7}  {:>9.4}  {:>7}  {:>6}",
                r.repeat, r.accuracy, r.n_train, r.n_test
            );
        }
        let _ = writeln!(
            out,
            "mean accuracy: {:.4}  (std {:.4})",
            self.mean_accuracy(),
            self.std_accuracy()
        );
        out
    }
}

fn mix_seed(seed: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(salt.wrapping_mul(0xbf58_476d_1ce4_e5b9))
}

/// Per-class indices grouped by label.
fn group_by_class(labels: &[u32]) -> Vec<Vec<usize>> {
    let classes = labels.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut groups = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        groups[l as usize].push(i);
    }
    groups
}

/// Stratified split: per class, shuffle and take ⌈n/2⌉ for training.
fn stratified_half_split(labels: &[u32], rng: &mut ChaCha12Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut group in group_by_class(labels) {
        group.shuffle(rng);
        let n_train = group.len().div_ceil(2);
        train.extend_from_slice(&group[..n_train]);
        test.extend_from_slice(&group[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Round-robin fold assignment within each class; every video lands in
/// exactly one test fold.
fn class_balanced_folds(
    labels: &[u32],
    folds: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<Vec<usize>>> {
    let mut fold_sets = vec![Vec::new(); folds];
    for (class, mut group) in group_by_class(labels).into_iter().enumerate() {
        if group.len() < folds {
            return Err(Error::InsufficientData(format!(
                "class {class} has {} videos for {folds} folds",
                group.len()
            )));
        }
        group.shuffle(rng);
        for (i, idx) in group.into_iter().enumerate() {
            fold_sets[i % folds].push(idx);
        }
    }
    for f in &mut fold_sets {
        f.sort_unstable();
    }
    Ok(fold_sets)
}

/// Trained per-scale models plus their training provenance.
type VideoEncoder<'a, S> = Box<dyn Fn(&VideoVolume) -> Result<Vec<S>> + 'a>;

pub struct TrainedModels<S> {
    pub scales: ScaleModels<S>,
    pub warnings: Vec<String>,
}

/// Train hash projections and codebooks for every configured scale from the
/// given training volumes.
pub fn train_scale_models<S: Real>(
    volumes: &[&VideoVolume],
    config: &ExperimentConfig<S>,
) -> Result<TrainedModels<S>> {
    let mut scale_models = Vec::new();
    let mut warnings = Vec::new();
    for &p in &config.scales {
        let seed = mix_seed(config.seed, p as u64);
        // the corpus-level cap is split evenly across videos so the full
        // uncapped PDV set is never materialized
        let per_video_cap = config.train_sample_cap.div_ceil(volumes.len().max(1));
        let mut batches = Vec::with_capacity(volumes.len());
        for (i, v) in volumes.iter().enumerate() {
            batches.push(extract_pdvs::<S>(
                v,
                p,
                config.train_stride,
                per_video_cap,
                mix_seed(seed, i as u64),
            )?);
        }
        let all = PdvMatrix::concat(&batches)?;
        let pdvs = all.subsample(config.train_sample_cap, seed);

        let opts = TrainOptions {
            bits: config.bits,
            lambdas: config.lambdas,
            iterations: config.hash_iterations,
            seed,
            cayley: false,
        };
        let report = train_hash(&pdvs, &opts)?;
        warnings.extend(report.warnings);

        let codes = binarize(&report.model, &pdvs)?;
        let fit = fit_codebook::<S>(&codes, config.dict_size, seed, config.kmeans_iterations)?;
        warnings.extend(fit.warnings);
        scale_models.push(ScaleModel {
            hash: report.model,
            codebook: fit.codebook.with_scale(p),
        });
    }
    Ok(TrainedModels {
        scales: ScaleModels::new(scale_models),
        warnings,
    })
}

/// Run the configured protocol over the manifest.
pub fn run_protocol<S: Real>(
    config: &ExperimentConfig<S>,
    manifest: &DatasetManifest,
    mode: FeatureMode,
) -> Result<ProtocolReport> {
    config.validate()?;
    let _classes = manifest.class_count()?;
    let labels: Vec<u32> = manifest.entries.iter().map(|e| e.label).collect();
    let names: Vec<String> = manifest
        .entries
        .iter()
        .map(|e| e.path.display().to_string())
        .collect();

    let mut volumes = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let mut v = load_volume(&e.path)?;
        if let Some((t, h, w)) = config.crop {
            v = crate::video::crop_motion_window(&v, t, h, w)?;
        }
        volumes.push(v);
    }

    let transfer_models: Option<ScaleModels<S>> = match &config.transfer {
        Some(path) => {
            let bundle = load_bundle::<S>(path)?;
            Some(bundle.scale_models()?)
        }
        None => None,
    };

    // baseline features never depend on the split, compute once
    let baseline_features: Option<Vec<Vec<S>>> = match (mode, config.protocol) {
        (FeatureMode::LbpTop, Protocol::Ucla9) => None,
        (FeatureMode::LbpTop, _) => Some(
            volumes
                .iter()
                .map(|v| lbp_top_baseline::<S>(v, 1, 8))
                .collect::<Result<_>>()?,
        ),
        _ => None,
    };

    let splits: Vec<(Vec<usize>, Vec<usize>)> = match config.protocol {
        Protocol::Ucla50 => {
            let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(config.seed, 0));
            let folds = class_balanced_folds(&labels, config.folds, &mut rng)?;
            let all: Vec<usize> = (0..labels.len()).collect();
            folds
                .into_iter()
                .map(|test| {
                    let train: Vec<usize> =
                        all.iter().copied().filter(|i| !test.contains(i)).collect();
                    (train, test)
                })
                .collect()
        }
        _ => (0..config.repeats)
            .map(|r| {
                let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(config.seed, r as u64 + 1));
                stratified_half_split(&labels, &mut rng)
            })
            .collect(),
    };

    let mut repeats = Vec::with_capacity(splits.len());
    let mut predictions = Vec::new();
    for (round, (train_idx, test_idx)) in splits.iter().enumerate() {
        let (correct, total, mut round_preds) = match config.protocol {
            Protocol::Ucla9 => run_subvideo_round(
                config,
                &volumes,
                &labels,
                &names,
                train_idx,
                test_idx,
                transfer_models.as_ref(),
                mode,
            )?,
            _ => run_whole_video_round(
                config,
                &volumes,
                &labels,
                &names,
                train_idx,
                test_idx,
                transfer_models.as_ref(),
                baseline_features.as_deref(),
                mode,
            )?,
        };
        predictions.append(&mut round_preds);
        repeats.push(RepeatResult {
            repeat: round,
            accuracy: correct as f64 / total as f64,
            n_train: train_idx.len(),
            n_test: test_idx.len(),
        });
    }

    Ok(ProtocolReport {
        protocol: config.protocol,
        seed: config.seed,
        repeats,
        predictions,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_whole_video_round<S: Real>(
    config: &ExperimentConfig<S>,
    volumes: &[VideoVolume],
    labels: &[u32],
    names: &[String],
    train_idx: &[usize],
    test_idx: &[usize],
    transfer: Option<&ScaleModels<S>>,
    baseline_features: Option<&[Vec<S>]>,
    mode: FeatureMode,
) -> Result<(usize, usize, Vec<PredictionRecord>)> {
    let features: Vec<FeatureVector<S>> = match mode {
        FeatureMode::LbpTop => baseline_features
            .expect("baseline features precomputed")
            .iter()
            .map(|f| FeatureVector::new(f.clone()))
            .collect(),
        FeatureMode::Learned => {
            let models = match transfer {
                Some(m) => m.clone(),
                None => {
                    let train_vols: Vec<&VideoVolume> =
                        train_idx.iter().map(|&i| &volumes[i]).collect();
                    train_scale_models(&train_vols, config)?.scales
                }
            };
            let opts = EncodeOptions {
                stride: config.encode_stride,
                sample_cap: config.encode_sample_cap,
                seed: config.seed,
            };
            let raw: Vec<Vec<S>> = volumes
                .iter()
                .map(|v| encode_video(v, &models, &opts))
                .collect::<Result<_>>()?;
            let train_raw: Vec<Vec<S>> = train_idx.iter().map(|&i| raw[i].clone()).collect();
            let pca = fit_pca(&train_raw, config.pca_dim)?.model;
            raw.iter()
                .map(|r| project(&pca, r))
                .collect::<Result<_>>()?
        }
    };

    let gallery = GallerySet::new(
        train_idx.iter().map(|&i| features[i].clone()).collect(),
        train_idx.iter().map(|&i| labels[i]).collect(),
    )?;

    let mut correct = 0usize;
    let mut records = Vec::with_capacity(test_idx.len());
    for &i in test_idx {
        let pred = nn_cosine(&gallery, &features[i])?;
        if pred.label == labels[i] {
            correct += 1;
        }
        records.push(PredictionRecord {
            video_path: names[i].clone(),
            true_label: labels[i],
            predicted_label: pred.label,
            similarity: pred.similarity.to_f64_lossy(),
        });
    }
    Ok((correct, test_idx.len(), records))
}

const SUBVIDEO_COUNT: usize = 5;
const SUBVIDEO_FRAMES: usize = 15;

#[allow(clippy::too_many_arguments)]
fn run_subvideo_round<S: Real>(
    config: &ExperimentConfig<S>,
    volumes: &[VideoVolume],
    labels: &[u32],
    names: &[String],
    train_idx: &[usize],
    test_idx: &[usize],
    transfer: Option<&ScaleModels<S>>,
    mode: FeatureMode,
) -> Result<(usize, usize, Vec<PredictionRecord>)> {
    // sub-videos on both sides: gallery entries are training sub-videos
    // carrying their parent label
    let subs: Vec<Vec<VideoVolume>> = volumes
        .iter()
        .map(|v| split_subvideos(v, SUBVIDEO_COUNT, SUBVIDEO_FRAMES))
        .collect::<Result<_>>()?;

    let encode_one: VideoEncoder<S> = match mode {
        FeatureMode::LbpTop => Box::new(|v: &VideoVolume| lbp_top_baseline::<S>(v, 1, 8)),
        FeatureMode::Learned => {
            let models = match transfer {
                Some(m) => m.clone(),
                None => {
                    let train_vols: Vec<&VideoVolume> =
                        train_idx.iter().map(|&i| &volumes[i]).collect();
                    train_scale_models(&train_vols, config)?.scales
                }
            };
            let opts = EncodeOptions {
                stride: config.encode_stride,
                sample_cap: config.encode_sample_cap,
                seed: config.seed,
            };
            Box::new(move |v: &VideoVolume| encode_video(v, &models, &opts))
        }
    };

    let mut raw_subs: Vec<Vec<Vec<S>>> = Vec::with_capacity(volumes.len());
    for video_subs in &subs {
        raw_subs.push(
            video_subs
                .iter()
                .map(&encode_one)
                .collect::<Result<_>>()?,
        );
    }

    let features: Vec<Vec<FeatureVector<S>>> = match mode {
        FeatureMode::LbpTop => raw_subs
            .iter()
            .map(|rs| rs.iter().map(|r| FeatureVector::new(r.clone())).collect())
            .collect(),
        FeatureMode::Learned => {
            let train_raw: Vec<Vec<S>> = train_idx
                .iter()
                .flat_map(|&i| raw_subs[i].iter().cloned())
                .collect();
            let pca = fit_pca(&train_raw, config.pca_dim)?.model;
            raw_subs
                .iter()
                .map(|rs| rs.iter().map(|r| project(&pca, r)).collect::<Result<_>>())
                .collect::<Result<_>>()?
        }
    };

    let mut gallery_feats = Vec::new();
    let mut gallery_labels = Vec::new();
    for &i in train_idx {
        for f in &features[i] {
            gallery_feats.push(f.clone());
            gallery_labels.push(labels[i]);
        }
    }
    let gallery = GallerySet::new(gallery_feats, gallery_labels)?;

    let mut correct = 0usize;
    let mut records = Vec::with_capacity(test_idx.len());
    for &i in test_idx {
        let preds: Vec<Prediction<S>> = features[i]
            .iter()
            .map(|f| nn_cosine(&gallery, f))
            .collect::<Result<_>>()?;
        let label = vote_subvideos(&preds)?;
        if label == labels[i] {
            correct += 1;
        }
        let mean_sim = preds
            .iter()
            .map(|p| p.similarity.to_f64_lossy())
            .sum::<f64>()
            / preds.len() as f64;
        records.push(PredictionRecord {
            video_path: names[i].clone(),
            true_label: labels[i],
            predicted_label: label,
            similarity: mean_sim,
        });
    }
    Ok((correct, test_idx.len(), records))
}

/// Concatenated XY/XT/YT local-binary-pattern histograms.
///
/// Each plane type uses `neighbors` samples on a radius-`radius` circle,
/// rounded to integer offsets (radius 1 with 8 neighbors gives the classic
/// 8-neighborhood). A bit is 1 when the neighbor is ≥ the center. Per-plane
/// histograms are L2-normalized, then the concatenation is normalized again.
pub fn lbp_top_baseline<S: Real>(
    v: &VideoVolume,
    radius: usize,
    neighbors: usize,
) -> Result<Vec<S>> {
    assert!((2..=24).contains(&neighbors), "unreasonable neighbor count");
    let (tt, hh, ww) = v.dims();
    let r = radius;
    if tt <= 2 * r || hh <= 2 * r || ww <= 2 * r {
        return Err(Error::VolumeTooSmall {
            dims: v.dims(),
            p: 2 * r + 1,
        });
    }

    let offsets: Vec<(isize, isize)> = (0..neighbors)
        .map(|p| {
            let angle = std::f64::consts::TAU * p as f64 / neighbors as f64;
            (
                (radius as f64 * angle.sin()).round() as isize,
                (radius as f64 * angle.cos()).round() as isize,
            )
        })
        .collect();
    let bins_per_plane = 1usize << neighbors;
    let mut hist = vec![0u64; 3 * bins_per_plane];

    let code_at = |center: u8, sample: &dyn Fn(isize, isize) -> u8| -> usize {
        let mut code = 0usize;
        for (bit, &(da, db)) in offsets.iter().enumerate() {
            if sample(da, db) >= center {
                code |= 1 << bit;
            }
        }
        code
    };

    // XY planes, one per frame
    for t in 0..tt {
        for y in r..hh - r {
            for x in r..ww - r {
                let sample = |dy: isize, dx: isize| {
                    v.get(t, (y as isize + dy) as usize, (x as isize + dx) as usize)
                };
                hist[code_at(v.get(t, y, x), &sample)] += 1;
            }
        }
    }
    // XT planes, one per row y
    for y in 0..hh {
        for t in r..tt - r {
            for x in r..ww - r {
                let sample = |dt: isize, dx: isize| {
                    v.get((t as isize + dt) as usize, y, (x as isize + dx) as usize)
                };
                hist[bins_per_plane + code_at(v.get(t, y, x), &sample)] += 1;
            }
        }
    }
    // YT planes, one per column x
    for x in 0..ww {
        for t in r..tt - r {
            for y in r..hh - r {
                let sample = |dt: isize, dy: isize| {
                    v.get((t as isize + dt) as usize, (y as isize + dy) as usize, x)
                };
                hist[2 * bins_per_plane + code_at(v.get(t, y, x), &sample)] += 1;
            }
        }
    }

    let mut out = vec![S::zero(); 3 * bins_per_plane];
    for plane in 0..3 {
        let slice = &hist[plane * bins_per_plane..(plane + 1) * bins_per_plane];
        let norm = (slice.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>()).sqrt();
        for (i, &c) in slice.iter().enumerate() {
            out[plane * bins_per_plane + i] = S::from_f64_lossy(c as f64 / norm);
        }
    }
    let total = out.iter().fold(S::zero(), |a, &b| a + b * b).sqrt();
    for o in &mut out {
        *o = *o / total;
    }
    Ok(out)
}

const BUNDLE_MAGIC: &[u8; 4] = b"PHDM";
const BUNDLE_VERSION: u32 = 1;

/// Everything needed to encode new videos: per-scale hash models and
/// codebooks, optional PCA, and the config snapshot they were trained under.
#[derive(Debug, Clone)]
pub struct ModelBundle<S> {
    pub scales: Vec<ScaleModel<S>>,
    pub pca: Option<PcaModel<S>>,
    pub config_snapshot: String,
}

impl<S: Real> ModelBundle<S> {
    pub fn scale_models(&self) -> Result<ScaleModels<S>> {
        if self.scales.is_empty() {
            return Err(Error::BadConfig("bundle has no scale sections".into()));
        }
        Ok(ScaleModels::new(self.scales.clone()))
    }
}

fn push_f64<S: Real>(buf: &mut Vec<u8>, v: S) {
    buf.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
}

/// Write a bundle: magic "PHDM", u32 version, u32 section count, then tagged
/// sections (HASH/CDBK/PCA0/CONF), each tag followed by a u64 byte length.
pub fn save_bundle<S: Real>(bundle: &ModelBundle<S>, path: &Path) -> Result<()> {
    let mut sections: Vec<([u8; 4], Vec<u8>)> = Vec::new();
    for sm in &bundle.scales {
        let mut payload = Vec::new();
        let w = sm.hash.projections();
        payload.extend_from_slice(&(sm.hash.scale() as u32).to_le_bytes());
        payload.extend_from_slice(&(sm.hash.bits() as u32).to_le_bytes());
        let l = sm.hash.lambdas();
        push_f64(&mut payload, l.quantization);
        push_f64(&mut payload, l.balance);
        push_f64(&mut payload, l.variance);
        // column-major: w_1 first
        for c in 0..w.cols() {
            for r in 0..w.rows() {
                push_f64(&mut payload, w.get(r, c));
            }
        }
        sections.push((*b"HASH", payload));

        let mut payload = Vec::new();
        let cb = &sm.codebook;
        payload.extend_from_slice(&(cb.scale() as u32).to_le_bytes());
        payload.extend_from_slice(&(cb.size() as u32).to_le_bytes());
        payload.extend_from_slice(&(cb.bits() as u32).to_le_bytes());
        for &v in cb.centroids().data() {
            push_f64(&mut payload, v);
        }
        sections.push((*b"CDBK", payload));
    }
    if let Some(pca) = &bundle.pca {
        let mut payload = Vec::new();
        payload.extend_from_slice(&(pca.input_dim() as u32).to_le_bytes());
        payload.extend_from_slice(&(pca.output_dim() as u32).to_le_bytes());
        for &m in pca.mean() {
            push_f64(&mut payload, m);
        }
        for c in 0..pca.output_dim() {
            for r in 0..pca.input_dim() {
                push_f64(&mut payload, pca.basis().get(r, c));
            }
        }
        sections.push((*b"PCA0", payload));
    }
    sections.push((*b"CONF", bundle.config_snapshot.as_bytes().to_vec()));

    let mut f = fs::File::create(path)?;
    f.write_all(BUNDLE_MAGIC)?;
    f.write_all(&BUNDLE_VERSION.to_le_bytes())?;
    f.write_all(&(sections.len() as u32).to_le_bytes())?;
    for (tag, payload) in &sections {
        f.write_all(tag)?;
        f.write_all(&(payload.len() as u64).to_le_bytes())?;
        f.write_all(payload)?;
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::TruncatedPayload {
                path: self.path.to_path_buf(),
                expected: self.pos + n,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64<S: Real>(&mut self) -> Result<S> {
        Ok(S::from_f64_lossy(f64::from_le_bytes(
            self.take(8)?.try_into().unwrap(),
        )))
    }
}

pub fn load_bundle<S: Real>(path: &Path) -> Result<ModelBundle<S>> {
    let bytes = fs::read(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if cur.take(4)? != BUNDLE_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: "PHDM".into(),
        });
    }
    let version = cur.u32()?;
    if version != BUNDLE_VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found: version,
            expected: BUNDLE_VERSION,
        });
    }
    let section_count = cur.u32()? as usize;

    let mut hashes: Vec<HashModel<S>> = Vec::new();
    let mut codebooks: Vec<Codebook<S>> = Vec::new();
    let mut pca = None;
    let mut config_snapshot = String::new();
    for _ in 0..section_count {
        let tag: [u8; 4] = cur.take(4)?.try_into().unwrap();
        let len = cur.u64()? as usize;
        let start = cur.pos;
        match &tag {
            b"HASH" => {
                let p = cur.u32()? as usize;
                let k = cur.u32()? as usize;
                let lambdas = Lambdas {
                    quantization: cur.f64()?,
                    balance: cur.f64()?,
                    variance: cur.f64()?,
                };
                let dim = p * p * p - 1;
                let mut w = Matrix::zeros(dim, k);
                for c in 0..k {
                    for r in 0..dim {
                        w.set(r, c, cur.f64()?);
                    }
                }
                hashes.push(HashModel::new(p, w, lambdas));
            }
            b"CDBK" => {
                let p = cur.u32()? as usize;
                let d = cur.u32()? as usize;
                let k = cur.u32()? as usize;
                let mut data = Vec::with_capacity(d * k);
                for _ in 0..d * k {
                    data.push(cur.f64()?);
                }
                codebooks.push(Codebook::new(0, Matrix::from_vec(d, k, data)).with_scale(p));
            }
            b"PCA0" => {
                let input = cur.u32()? as usize;
                let output = cur.u32()? as usize;
                let mut mean = Vec::with_capacity(input);
                for _ in 0..input {
                    mean.push(cur.f64()?);
                }
                let mut basis = Matrix::zeros(input, output);
                for c in 0..output {
                    for r in 0..input {
                        basis.set(r, c, cur.f64()?);
                    }
                }
                pca = Some(PcaModel::new(mean, basis));
            }
            b"CONF" => {
                config_snapshot = String::from_utf8_lossy(cur.take(len)?).into_owned();
            }
            other => {
                return Err(Error::MalformedHeader {
                    path: path.to_path_buf(),
                    detail: format!("unknown section tag {:?}", String::from_utf8_lossy(other)),
                });
            }
        }
        if cur.pos != start + len {
            return Err(Error::MalformedHeader {
                path: path.to_path_buf(),
                detail: format!(
                    "section {} length {} does not match payload",
                    String::from_utf8_lossy(&tag),
                    len
                ),
            });
        }
    }

    let mut scales = Vec::new();
    for hash in hashes {
        let codebook = codebooks
            .iter()
            .find(|cb| cb.scale() == hash.scale())
            .cloned()
            .ok_or_else(|| Error::MalformedHeader {
                path: path.to_path_buf(),
                detail: format!("no codebook section for scale {}", hash.scale()),
            })?;
        scales.push(ScaleModel { hash, codebook });
    }
    Ok(ModelBundle {
        scales,
        pca,
        config_snapshot,
    })
}

/// Human-readable section listing for `bundle inspect`.
pub fn describe_bundle<S: Real>(bundle: &ModelBundle<S>) -> String {
    let mut out = String::new();
    for sm in &bundle.scales {
        let _ = writeln!(
            out,
            "HASH  P={} K={} lambdas=({}, {}, {})",
            sm.hash.scale(),
            sm.hash.bits(),
            sm.hash.lambdas().quantization.to_f64_lossy(),
            sm.hash.lambdas().balance.to_f64_lossy(),
            sm.hash.lambdas().variance.to_f64_lossy(),
        );
        let _ = writeln!(
            out,
            "CDBK  P={} D={} K={}",
            sm.codebook.scale(),
            sm.codebook.size(),
            sm.codebook.bits()
        );
    }
    if let Some(pca) = &bundle.pca {
        let _ = writeln!(
            out,
            "PCA0  input_dim={} output_dim={}",
            pca.input_dim(),
            pca.output_dim()
        );
    }
    let _ = writeln!(out, "CONF  {} bytes", bundle.config_snapshot.len());
    out
}

/// Feature export CSV: `video_path,label,f0,f1,…`.
pub fn features_csv<S: Real>(
    names: &[String],
    labels: &[u32],
    features: &[FeatureVector<S>],
) -> String {
    let mut out = String::new();
    let width = features.first().map(|f| f.len()).unwrap_or(0);
    out.push_str("video_path,label");
    for i in 0..width {
        let _ = write!(out, ",f{i}");
    }
    out.push('\n');
    for ((name, &label), f) in names.iter().zip(labels).zip(features) {
        let _ = write!(out, "{name},{label}");
        for v in f.values() {
            let _ = write!(out, ",{:.10e}", v.to_f64_lossy());
        }
        out.push('\n');
    }
    out
}
