//! Per-video feature production: PDV extraction, hashing, histogram
//! encoding per scale, PCA compression, and multi-scale concatenation.

use crate::codebook::{encode_histogram, Codebook};
use crate::error::{Error, Result};
use crate::hash::{binarize, HashModel};
use crate::linalg::{self, Matrix};
use crate::pdv::extract_pdvs;
use crate::scalar::Real;
use crate::video::VideoVolume;

/// Mean-centering linear projection onto the top principal components.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<S> {
    mean: Vec<S>,
    /// input_dim × output_dim, orthonormal columns in descending eigenvalue
    /// order.
    basis: Matrix<S>,
}

impl<S: Real> PcaModel<S> {
    pub fn new(mean: Vec<S>, basis: Matrix<S>) -> Self {
        assert_eq!(mean.len(), basis.rows());
        PcaModel { mean, basis }
    }

    pub fn input_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn mean(&self) -> &[S] {
        &self.mean
    }

    pub fn basis(&self) -> &Matrix<S> {
        &self.basis
    }
}

/// Final per-video descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<S> {
    values: Vec<S>,
}

impl<S: Real> FeatureVector<S> {
    pub fn new(values: Vec<S>) -> Self {
        assert!(values.iter().all(|v| v.is_finite()), "non-finite feature");
        FeatureVector { values }
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-scale trained models, kept in ascending-P order.
#[derive(Debug, Clone)]
pub struct ScaleModels<S> {
    pub scales: Vec<ScaleModel<S>>,
}

#[derive(Debug, Clone)]
pub struct ScaleModel<S> {
    pub hash: HashModel<S>,
    pub codebook: Codebook<S>,
}

impl<S: Real> ScaleModels<S> {
    pub fn new(mut scales: Vec<ScaleModel<S>>) -> Self {
        scales.sort_by_key(|s| s.hash.scale());
        ScaleModels { scales }
    }

    pub fn feature_len(&self) -> usize {
        self.scales.iter().map(|s| s.codebook.size()).sum()
    }
}

/// Options controlling encode-time PDV sampling.
#[derive(Debug, Clone, Copy)]
pub struct EncodeOptions {
    pub stride: (usize, usize, usize),
    /// Per-video, per-scale cap on PDVs used for encoding.
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            stride: (1, 1, 1),
            sample_cap: 50_000,
            seed: 0,
        }
    }
}

/// Encode one video into the concatenation of its per-scale codeword
/// histograms (each L2-normalized), scales in ascending-P order.
pub fn encode_video<S: Real>(
    v: &VideoVolume,
    models: &ScaleModels<S>,
    opts: &EncodeOptions,
) -> Result<Vec<S>> {
    if models.scales.is_empty() {
        return Err(Error::BadConfig("no scale models configured".into()));
    }
    let mut out = Vec::with_capacity(models.feature_len());
    for sm in &models.scales {
        let p = sm.hash.scale();
        let pdvs = extract_pdvs::<S>(v, p, opts.stride, opts.sample_cap, opts.seed)?;
        let codes = binarize(&sm.hash, &pdvs)?;
        let hist = encode_histogram(&sm.codebook, &codes)?;
        out.extend_from_slice(hist.bins());
    }
    Ok(out)
}

/// Fit PCA on training feature rows. `output_dim` is clamped to the sample
/// rank with a warning.
pub struct PcaFit<S> {
    pub model: PcaModel<S>,
    /// Variance captured by each kept component.
    pub eigenvalues: Vec<S>,
    pub warnings: Vec<String>,
}

pub fn fit_pca<S: Real>(rows: &[Vec<S>], output_dim: usize) -> Result<PcaFit<S>> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "PCA needs at least 2 training vectors".into(),
        ));
    }
    let dim = rows[0].len();
    for r in rows {
        if r.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                got: r.len(),
            });
        }
    }
    let mut warnings = Vec::new();

    let inv_n = S::one() / S::from_f64_lossy(n as f64);
    let mut mean = vec![S::zero(); dim];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m = *m + v;
        }
    }
    for m in &mut mean {
        *m = *m * inv_n;
    }

    let mut centered = Matrix::zeros(n, dim);
    for (i, r) in rows.iter().enumerate() {
        for (dst, (&v, &m)) in centered.row_mut(i).iter_mut().zip(r.iter().zip(&mean)) {
            *dst = v - m;
        }
    }
    let mut cov = centered.transpose_matmul(&centered);
    cov.scale_in_place(S::one() / S::from_f64_lossy((n - 1) as f64));

    let (vals, vecs) = linalg::symmetric_eigen(&cov);
    let tol = vals[0].abs().max(S::from_f64_lossy(1e-12)) * S::from_f64_lossy(1e-10);
    let rank = vals.iter().filter(|v| **v > tol).count().min(n - 1);
    let keep = if output_dim > rank {
        warnings.push(format!(
            "requested {output_dim} components but sample rank is {rank}; clamping"
        ));
        rank.max(1)
    } else {
        output_dim.max(1)
    };

    let mut basis = Matrix::zeros(dim, keep);
    for c in 0..keep {
        for r in 0..dim {
            basis.set(r, c, vecs.get(r, c));
        }
    }
    Ok(PcaFit {
        model: PcaModel { mean, basis },
        eigenvalues: vals[..keep].to_vec(),
        warnings,
    })
}

/// Project a raw feature: basisᵀ·(raw − mean).
pub fn project<S: Real>(pca: &PcaModel<S>, raw: &[S]) -> Result<FeatureVector<S>> {
    if raw.len() != pca.input_dim() {
        return Err(Error::DimMismatch {
            expected: pca.input_dim(),
            got: raw.len(),
        });
    }
    let centered: Vec<S> = raw.iter().zip(&pca.mean).map(|(&r, &m)| r - m).collect();
    let mut out = vec![S::zero(); pca.output_dim()];
    for r in 0..pca.input_dim() {
        let x = centered[r];
        if x == S::zero() {
            continue;
        }
        let brow = pca.basis.row(r);
        for (o, &b) in out.iter_mut().zip(brow) {
            *o = *o + x * b;
        }
    }
    Ok(FeatureVector::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::{Lambdas, TrainOptions};
    use crate::video::{synth_dataset, SynthConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn tiny_models(seed: u64) -> (Vec<crate::video::SynthVideo>, ScaleModels<f64>) {
        let cfg = SynthConfig {
            classes: 2,
            videos_per_class: 3,
            frames: 12,
            height: 12,
            width: 12,
            noise: 2.0,
        };
        let vids = synth_dataset(&cfg, seed).unwrap();
        let mut scales = Vec::new();
        for &p in &[3usize, 5] {
            let batches: Vec<_> = vids
                .iter()
                .map(|v| extract_pdvs::<f64>(&v.volume, p, (2, 2, 2), 400, seed).unwrap())
                .collect();
            let all = crate::pdv::PdvMatrix::concat(&batches).unwrap();
            let mut opts = TrainOptions::new(6);
            opts.iterations = 5;
            opts.lambdas = Lambdas::default();
            let hash = crate::hash::train_hash(&all, &opts).unwrap().model;
            let codes = binarize(&hash, &all).unwrap();
            let book = crate::codebook::fit_codebook::<f64>(&codes, 8, seed, 50)
                .unwrap()
                .codebook
                .with_scale(p);
            scales.push(ScaleModel {
                hash,
                codebook: book,
            });
        }
        (vids, ScaleModels::new(scales))
    }

    #[test]
    fn concatenated_length_is_sum_of_dictionary_sizes() {
        let (vids, models) = tiny_models(5);
        let raw = encode_video(&vids[0].volume, &models, &EncodeOptions::default()).unwrap();
        assert_eq!(raw.len(), 16);
        assert_eq!(models.feature_len(), 16);
        // per-scale blocks are unit norm
        let b1: f64 = raw[..8].iter().map(|x| x * x).sum();
        let b2: f64 = raw[8..].iter().map(|x| x * x).sum();
        assert!((b1 - 1.0).abs() < 1e-10);
        assert!((b2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn single_scale_output_is_that_histogram() {
        let (vids, models) = tiny_models(6);
        let single = ScaleModels {
            scales: vec![models.scales[0].clone()],
        };
        let raw = encode_video(&vids[0].volume, &single, &EncodeOptions::default()).unwrap();
        let full = encode_video(&vids[0].volume, &models, &EncodeOptions::default()).unwrap();
        assert_eq!(raw.as_slice(), &full[..8]);
    }

    #[test]
    fn encoding_is_deterministic_across_runs() {
        let (vids, models) = tiny_models(7);
        let opts = EncodeOptions {
            stride: (1, 1, 1),
            sample_cap: 300,
            seed: 7,
        };
        let first = encode_video(&vids[0].volume, &models, &opts).unwrap();
        for _ in 0..4 {
            let again = encode_video(&vids[0].volume, &models, &opts).unwrap();
            assert_eq!(first, again);
        }
    }

    #[test]
    fn volume_too_small_for_largest_scale() {
        let (_, models) = tiny_models(8);
        let v = VideoVolume::new(4, 4, 4, vec![0; 64]);
        assert!(matches!(
            encode_video(&v, &models, &EncodeOptions::default()),
            Err(Error::VolumeTooSmall { .. })
        ));
    }

    #[test]
    fn pca_projects_mean_to_zero_and_basis_to_unit() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..6).map(|_| rng.gen::<f64>() * 10.0).collect())
            .collect();
        let fit = fit_pca(&rows, 3).unwrap();
        let pca = fit.model;

        let z = project(&pca, pca.mean()).unwrap();
        assert!(z.values().iter().all(|v| v.abs() < 1e-9));

        for j in 0..pca.output_dim() {
            let raw: Vec<f64> = (0..pca.input_dim())
                .map(|i| pca.mean()[i] + pca.basis().get(i, j))
                .collect();
            let proj = project(&pca, &raw).unwrap();
            for (i, &v) in proj.values().iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-8, "component {i}: {v}");
            }
        }
    }

    #[test]
    fn pca_recovers_planar_data_exactly() {
        // mean-zero data confined to a 2-D subspace of R^5
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let u = [1.0, 0.0, 1.0, 0.0, 1.0].map(|v: f64| v / 3.0f64.sqrt());
        let w = [0.0, 1.0, 0.0, -1.0, 0.0].map(|v: f64| v / 2.0f64.sqrt());
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for _ in 0..15 {
            let (a, b) = (rng.gen::<f64>() - 0.5, (rng.gen::<f64>() - 0.5) * 0.3);
            rows.push((0..5).map(|i| a * u[i] + b * w[i]).collect());
            rows.push((0..5).map(|i| -a * u[i] - b * w[i]).collect());
        }
        let fit = fit_pca(&rows, 2).unwrap();
        let pca = fit.model;
        for r in &rows {
            let proj = project(&pca, r).unwrap();
            // reconstruct and compare
            let mut recon = pca.mean().to_vec();
            for i in 0..5 {
                for j in 0..2 {
                    recon[i] += pca.basis().get(i, j) * proj.values()[j];
                }
            }
            for i in 0..5 {
                assert!((recon[i] - r[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pca_clamps_output_dim_to_rank() {
        let rows: Vec<Vec<f64>> = vec![vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], vec![2.0, 0.0, 0.0, 0.0]];
        let fit = fit_pca(&rows, 4).unwrap();
        assert_eq!(fit.model.output_dim(), 1);
        assert!(!fit.warnings.is_empty());
    }

    #[test]
    fn pca_basis_is_orthonormal() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..8).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let fit = fit_pca(&rows, 5).unwrap();
        let b = fit.model.basis();
        for i in 0..5 {
            for j in 0..5 {
                let d = linalg::dot(&b.col(i), &b.col(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-8);
            }
        }
    }

    /// Cross-check: variance of the projected data along each component
    /// equals the eigenvalue from an independent power-iteration routine.
    #[test]
    fn pca_variances_match_power_iteration_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(123);
        let n = 50;
        let d = 12;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let base = rng.gen::<f64>() * 4.0;
                (0..d)
                    .map(|j| base * (j as f64 * 0.43).sin() + rng.gen::<f64>())
                    .collect()
            })
            .collect();
        let fit = fit_pca(&rows, 4).unwrap();

        // independent oracle: covariance by direct loops + power iteration
        // with deflation
        let mean: Vec<f64> = (0..d)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        let mut cov = vec![vec![0.0f64; d]; d];
        for r in &rows {
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n as f64 - 1.0);
                }
            }
        }
        let mut deflated = cov.clone();
        for c in 0..4 {
            let mut v = vec![1.0f64; d];
            for _ in 0..2000 {
                let mut nv = vec![0.0; d];
                for i in 0..d {
                    for j in 0..d {
                        nv[i] += deflated[i][j] * v[j];
                    }
                }
                let norm = nv.iter().map(|x| x * x).sum::<f64>().sqrt();
                for x in &mut nv {
                    *x /= norm;
                }
                v = nv;
            }
            let mut lambda = 0.0;
            for i in 0..d {
                for j in 0..d {
                    lambda += v[i] * deflated[i][j] * v[j];
                }
            }
            let got = fit.eigenvalues[c];
            assert!(
                (got - lambda).abs() <= 1e-8 * (1.0 + lambda.abs()),
                "component {c}: {got} vs {lambda}"
            );
            for i in 0..d {
                for j in 0..d {
                    deflated[i][j] -= lambda * v[i] * v[j];
                }
            }
        }
    }

    #[test]
    fn projection_matches_naive_matmul_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..25)
            .map(|_| (0..7).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let fit = fit_pca(&rows, 3).unwrap();
        let pca = fit.model;
        for _ in 0..100 {
            let raw: Vec<f64> = (0..7).map(|_| rng.gen::<f64>() * 5.0).collect();
            let got = project(&pca, &raw).unwrap();
            for j in 0..3 {
                let mut expect = 0.0;
                for i in 0..7 {
                    expect += pca.basis().get(i, j) * (raw[i] - pca.mean()[i]);
                }
                assert!((got.values()[j] - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn reconstruction_error_non_increasing_in_output_dim() {
        let mut rng = ChaCha12Rng::seed_from_u64(55);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..10).map(|_| rng.gen::<f64>() * 3.0).collect())
            .collect();
        let mut prev_err = f64::INFINITY;
        for dim in 1..=6 {
            let fit = fit_pca(&rows, dim).unwrap();
            let pca = &fit.model;
            let mut err = 0.0;
            for r in &rows {
                let proj = project(pca, r).unwrap();
                for i in 0..10 {
                    let mut recon = pca.mean()[i];
                    for j in 0..pca.output_dim() {
                        recon += pca.basis().get(i, j) * proj.values()[j];
                    }
                    err += (recon - r[i]) * (recon - r[i]);
                }
            }
            assert!(err <= prev_err + 1e-9, "dim {dim}: {err} > {prev_err}");
            prev_err = err;
        }
    }

    #[test]
    fn pca_dimension_mismatch_errors() {
        let rows: Vec<Vec<f64>> = vec![vec![0.0; 3], vec![1.0; 3]];
        let fit = fit_pca(&rows, 1).unwrap();
        assert!(matches!(
            project(&fit.model, &[0.0; 5]),
            Err(Error::DimMismatch { .. })
        ));
        assert!(fit_pca::<f64>(&[vec![1.0]], 1).is_err());
    }
}
