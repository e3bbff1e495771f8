//! Dictionary learning over binary codes: k-means clustering and histogram
//! encoding.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::hash::BinaryCodeSet;
use crate::linalg::{squared_distance, Matrix};
use crate::scalar::Real;

/// D codeword centroids over K-bit codes, for one neighborhood scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<S> {
    scale: usize,
    /// D×K, each row a centroid with entries in [0,1].
    centroids: Matrix<S>,
}

impl<S: Real> Codebook<S> {
    pub fn new(scale: usize, centroids: Matrix<S>) -> Self {
        assert!(centroids.rows() >= 1);
        Codebook { scale, centroids }
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn size(&self) -> usize {
        self.centroids.rows()
    }

    pub fn bits(&self) -> usize {
        self.centroids.cols()
    }

    pub fn centroids(&self) -> &Matrix<S> {
        &self.centroids
    }

    pub fn centroid(&self, d: usize) -> &[S] {
        self.centroids.row(d)
    }

    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn assign(&self, code: &[S]) -> usize {
        let mut best = 0usize;
        let mut best_d = squared_distance(self.centroid(0), code);
        for d in 1..self.size() {
            let dist = squared_distance(self.centroid(d), code);
            if dist < best_d {
                best_d = dist;
                best = d;
            }
        }
        best
    }
}

/// L2-normalized codeword histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<S> {
    bins: Vec<S>,
}

impl<S: Real> Histogram<S> {
    pub fn bins(&self) -> &[S] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn into_bins(self) -> Vec<S> {
        self.bins
    }
}

/// Result of fitting: the codebook, the recorded within-cluster sum of
/// squares per iteration, and any warnings.
#[derive(Debug, Clone)]
pub struct CodebookFit<S> {
    pub codebook: Codebook<S>,
    pub wcss_trace: Vec<S>,
    pub warnings: Vec<String>,
}

fn codes_as_rows<S: Real>(codes: &BinaryCodeSet) -> Matrix<S> {
    let data = codes
        .codes()
        .iter()
        .map(|&b| S::from_f64_lossy(b as f64))
        .collect();
    Matrix::from_vec(codes.count(), codes.bits(), data)
}

/// k-means with k-means++ seeding on codes viewed as real vectors.
///
/// Empty clusters are reseeded to the point farthest from its assigned
/// centroid. If there are fewer distinct codes than requested codewords, the
/// dictionary shrinks to the distinct-code count with a warning.
pub fn fit_codebook<S: Real>(
    codes: &BinaryCodeSet,
    d: usize,
    seed: u64,
    max_iters: usize,
) -> Result<CodebookFit<S>> {
    if d < 1 {
        return Err(Error::BadConfig("dictionary size must be at least 1".into()));
    }
    if codes.count() < d {
        return Err(Error::InsufficientData(format!(
            "{} codes for a dictionary of {d}",
            codes.count()
        )));
    }
    let mut warnings = Vec::new();
    let points = codes_as_rows::<S>(codes);
    let n = points.rows();
    let k = points.cols();

    let distinct = count_distinct(codes);
    let d = if distinct < d {
        warnings.push(format!(
            "only {distinct} distinct codes; reducing dictionary size from {d}"
        ));
        distinct
    } else {
        d
    };

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seed(&points, d, &mut rng);

    let mut assignment = vec![0usize; n];
    let mut wcss_trace = Vec::new();
    for _ in 0..max_iters {
        // assignment step
        let book = Codebook {
            scale: 0,
            centroids: centroids.clone(),
        };
        let mut wcss = S::zero();
        for i in 0..n {
            let a = book.assign(points.row(i));
            assignment[i] = a;
            wcss = wcss + squared_distance(points.row(i), book.centroid(a));
        }
        wcss_trace.push(wcss);
        if wcss_trace.len() >= 2 {
            let prev = wcss_trace[wcss_trace.len() - 2];
            if prev - wcss <= S::from_f64_lossy(1e-12) * prev.max(S::one()) {
                break;
            }
        }

        // update step, fixed reduction order
        let mut sums: Matrix<S> = Matrix::zeros(d, k);
        let mut counts = vec![0usize; d];
        for i in 0..n {
            let a = assignment[i];
            counts[a] += 1;
            let srow = sums.row_mut(a);
            for (s, &p) in srow.iter_mut().zip(points.row(i)) {
                *s = *s + p;
            }
        }
        for c in 0..d {
            if counts[c] == 0 {
                // reseed to the point farthest from its current centroid
                let mut far_i = 0usize;
                let mut far_d = S::neg_infinity();
                for i in 0..n {
                    let dist = squared_distance(points.row(i), centroids.row(assignment[i]));
                    if dist > far_d {
                        far_d = dist;
                        far_i = i;
                    }
                }
                for (dst, &src) in centroids.row_mut(c).iter_mut().zip(points.row(far_i)) {
                    *dst = src;
                }
                assignment[far_i] = c;
            } else {
                let inv = S::one() / S::from_f64_lossy(counts[c] as f64);
                for (dst, &s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
    }

    // the caller attaches the neighborhood scale via with_scale; the code
    // set itself does not know which P produced it
    Ok(CodebookFit {
        codebook: Codebook {
            scale: 0,
            centroids,
        },
        wcss_trace,
        warnings,
    })
}

impl<S: Real> Codebook<S> {
    pub fn with_scale(mut self, scale: usize) -> Self {
        self.scale = scale;
        self
    }
}

fn count_distinct(codes: &BinaryCodeSet) -> usize {
    let mut seen: Vec<&[u8]> = (0..codes.count()).map(|i| codes.code(i)).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

fn plus_plus_seed<S: Real>(points: &Matrix<S>, d: usize, rng: &mut ChaCha12Rng) -> Matrix<S> {
    let n = points.rows();
    let k = points.cols();
    let mut centroids = Matrix::zeros(d, k);
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));

    let mut min_d: Vec<S> = (0..n)
        .map(|i| squared_distance(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..d {
        let total: S = min_d.iter().copied().sum();
        let chosen = if total <= S::zero() {
            // all remaining points coincide with a centroid
            rng.gen_range(0..n)
        } else {
            let weights: Vec<f64> = min_d.iter().map(|&x| x.to_f64_lossy().max(0.0)).collect();
            match WeightedIndex::new(&weights) {
                Ok(dist) => dist.sample(rng),
                Err(_) => rng.gen_range(0..n),
            }
        };
        centroids.row_mut(c).copy_from_slice(points.row(chosen));
        for i in 0..n {
            let dist = squared_distance(points.row(i), centroids.row(c));
            if dist < min_d[i] {
                min_d[i] = dist;
            }
        }
    }
    centroids
}

/// Map each code to its nearest codeword and return the L2-normalized bin
/// counts.
pub fn encode_histogram<S: Real>(book: &Codebook<S>, codes: &BinaryCodeSet) -> Result<Histogram<S>> {
    if codes.bits() != book.bits() {
        return Err(Error::DimMismatch {
            expected: book.bits(),
            got: codes.bits(),
        });
    }
    if codes.count() == 0 {
        return Err(Error::EmptyInput("no codes to encode".into()));
    }
    let points = codes_as_rows::<S>(codes);
    let mut bins = vec![S::zero(); book.size()];
    for i in 0..points.rows() {
        let a = book.assign(points.row(i));
        bins[a] = bins[a] + S::one();
    }
    let norm = bins.iter().fold(S::zero(), |a, &b| a + b * b).sqrt();
    for b in &mut bins {
        *b = *b / norm;
    }
    Ok(Histogram { bins })
}
