//! Jointly optimized hash projections and binary codes.
//!
//! PDVs are mapped to K-bit codes by sign-thresholded linear projections.
//! The projections are trained by alternating minimization of a four-term
//! objective: code uniformity, quantization loss, bit balance, and (negated)
//! per-bit code variance. The bit-update step is the closed-form threshold;
//! the projection step is gradient descent on a relaxation where the shifted
//! bit is replaced by the projection value in the terms that would otherwise
//! be non-differentiable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::pdv::PdvMatrix;
use crate::scalar::Real;

/// Weights of the quantization, balance, and variance terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambdas<S> {
    pub quantization: S,
    pub balance: S,
    pub variance: S,
}

impl<S: Real> Default for Lambdas<S> {
    fn default() -> Self {
        Lambdas {
            quantization: S::from_f64_lossy(1000.0),
            balance: S::from_f64_lossy(100.0),
            variance: S::from_f64_lossy(1_000_000.0),
        }
    }
}

/// K linear hash functions for one neighborhood scale.
#[derive(Debug, Clone, PartialEq)]
pub struct HashModel<S> {
    scale: usize,
    /// (P³−1)×K; column k is the projection of the k-th hash function.
    projections: Matrix<S>,
    lambdas: Lambdas<S>,
}

impl<S: Real> HashModel<S> {
    pub fn new(scale: usize, projections: Matrix<S>, lambdas: Lambdas<S>) -> Self {
        assert_eq!(projections.rows(), scale * scale * scale - 1);
        assert!(projections.data().iter().all(|v| v.is_finite()));
        HashModel {
            scale,
            projections,
            lambdas,
        }
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn bits(&self) -> usize {
        self.projections.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.projections.rows()
    }

    pub fn projections(&self) -> &Matrix<S> {
        &self.projections
    }

    pub fn lambdas(&self) -> Lambdas<S> {
        self.lambdas
    }
}

/// Binary codes for a batch of PDVs, with per-bit means.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodeSet {
    bits: usize,
    count: usize,
    /// count×bits, row-major, each entry 0 or 1.
    codes: Vec<u8>,
}

impl BinaryCodeSet {
    pub fn new(bits: usize, count: usize, codes: Vec<u8>) -> Self {
        assert_eq!(codes.len(), bits * count);
        assert!(codes.iter().all(|&b| b <= 1));
        BinaryCodeSet { bits, count, codes }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn code(&self, n: usize) -> &[u8] {
        &self.codes[n * self.bits..(n + 1) * self.bits]
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    /// Mean of each bit over all codes.
    pub fn bit_means<S: Real>(&self) -> Vec<S> {
        let mut means = vec![S::zero(); self.bits];
        for n in 0..self.count {
            let row = self.code(n);
            for k in 0..self.bits {
                means[k] = means[k] + S::from_f64_lossy(row[k] as f64);
            }
        }
        let inv = S::one() / S::from_f64_lossy(self.count as f64);
        for m in &mut means {
            *m = *m * inv;
        }
        means
    }
}

/// The four objective terms and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms<S> {
    /// Weighted total: uniformity + λ₁·quantization + λ₂·balance − λ₃·variance.
    pub total: S,
    pub uniformity: S,
    pub quantization: S,
    pub balance: S,
    pub variance: S,
}

/// Threshold projections into bits: bit = 1 iff wₖᵀxₙ ≥ 0.
pub fn binarize<S: Real>(model: &HashModel<S>, x: &PdvMatrix<S>) -> Result<BinaryCodeSet> {
    if x.dim() != model.input_dim() {
        return Err(Error::DimMismatch {
            expected: model.input_dim(),
            got: x.dim(),
        });
    }
    let v = x.values().matmul(&model.projections);
    Ok(binarize_projected(&v))
}

fn binarize_projected<S: Real>(v: &Matrix<S>) -> BinaryCodeSet {
    let codes = v
        .data()
        .iter()
        .map(|&p| if p >= S::zero() { 1u8 } else { 0u8 })
        .collect();
    BinaryCodeSet::new(v.cols(), v.rows(), codes)
}

/// The exact objective at binary codes `b` and projections `model`.
pub fn eval_objective<S: Real>(
    model: &HashModel<S>,
    x: &PdvMatrix<S>,
    b: &BinaryCodeSet,
) -> Result<ObjectiveTerms<S>> {
    check_shapes(model, x, b)?;
    let v = x.values().matmul(&model.projections);
    let (n, k) = (b.count(), b.bits());
    let half = S::from_f64_lossy(0.5);
    let means: Vec<S> = b.bit_means();

    let mut uniformity = S::zero();
    let mut quantization = S::zero();
    let mut variance = S::zero();
    let mut balance_sums = vec![S::zero(); k];
    for row in 0..n {
        let code = b.code(row);
        let vrow = v.row(row);
        let mut transitions = S::zero();
        for i in 0..k {
            let bit = S::from_f64_lossy(code[i] as f64);
            if i + 1 < k {
                let d = bit - S::from_f64_lossy(code[i + 1] as f64);
                transitions = transitions + d * d;
            }
            let q = (bit - half) - vrow[i];
            quantization = quantization + q * q;
            let dv = bit - means[i];
            variance = variance + dv * dv;
            balance_sums[i] = balance_sums[i] + (bit - half);
        }
        let u = transitions - S::one();
        uniformity = uniformity + u * u;
    }
    let balance = balance_sums.iter().fold(S::zero(), |acc, &s| acc + s * s);
    let l = model.lambdas;
    let total = uniformity + l.quantization * quantization + l.balance * balance
        - l.variance * variance;
    Ok(ObjectiveTerms {
        total,
        uniformity,
        quantization,
        balance,
        variance,
    })
}

/// The relaxed objective J̃(W): the projection value stands in for the shifted
/// bit in the uniformity, balance, and variance terms; the quantization term
/// keeps `b` fixed at its current binary values.
pub fn relaxed_objective<S: Real>(
    model: &HashModel<S>,
    x: &PdvMatrix<S>,
    b: &BinaryCodeSet,
) -> Result<S> {
    check_shapes(model, x, b)?;
    let v = x.values().matmul(&model.projections);
    Ok(relaxed_objective_projected(&v, b, model.lambdas))
}

fn relaxed_objective_projected<S: Real>(
    v: &Matrix<S>,
    b: &BinaryCodeSet,
    lambdas: Lambdas<S>,
) -> S {
    let (n, k) = (v.rows(), v.cols());
    let half = S::from_f64_lossy(0.5);
    let inv_n = S::one() / S::from_f64_lossy(n as f64);

    let mut col_sums = vec![S::zero(); k];
    let mut uniformity = S::zero();
    let mut quantization = S::zero();
    for row in 0..n {
        let vrow = v.row(row);
        let code = b.code(row);
        let mut transitions = S::zero();
        for i in 0..k {
            if i + 1 < k {
                let d = vrow[i] - vrow[i + 1];
                transitions = transitions + d * d;
            }
            let q = (S::from_f64_lossy(code[i] as f64) - half) - vrow[i];
            quantization = quantization + q * q;
            col_sums[i] = col_sums[i] + vrow[i];
        }
        let u = transitions - S::one();
        uniformity = uniformity + u * u;
    }
    let balance = col_sums.iter().fold(S::zero(), |acc, &s| acc + s * s);
    let mut variance = S::zero();
    for row in 0..n {
        let vrow = v.row(row);
        for i in 0..k {
            let d = vrow[i] - col_sums[i] * inv_n;
            variance = variance + d * d;
        }
    }
    uniformity + lambdas.quantization * quantization + lambdas.balance * balance
        - lambdas.variance * variance
}

/// Gradient of the relaxed objective with respect to the projections.
pub fn relaxed_gradient<S: Real>(
    model: &HashModel<S>,
    x: &PdvMatrix<S>,
    b: &BinaryCodeSet,
) -> Result<Matrix<S>> {
    check_shapes(model, x, b)?;
    let v = x.values().matmul(&model.projections);
    let gv = relaxed_gradient_projected(&v, b, model.lambdas);
    // chain rule: dJ/dW = Xᵀ · dJ/dV
    Ok(x.values().transpose_matmul(&gv))
}

/// dJ̃/dV, where V = XW holds the projection values.
fn relaxed_gradient_projected<S: Real>(
    v: &Matrix<S>,
    b: &BinaryCodeSet,
    lambdas: Lambdas<S>,
) -> Matrix<S> {
    let (n, k) = (v.rows(), v.cols());
    let half = S::from_f64_lossy(0.5);
    let two = S::from_f64_lossy(2.0);
    let four = S::from_f64_lossy(4.0);
    let inv_n = S::one() / S::from_f64_lossy(n as f64);

    let mut col_sums = vec![S::zero(); k];
    for row in 0..n {
        let vrow = v.row(row);
        for i in 0..k {
            col_sums[i] = col_sums[i] + vrow[i];
        }
    }

    let mut g = Matrix::zeros(n, k);
    for row in 0..n {
        let vrow = v.row(row);
        let code = b.code(row);
        let mut transitions = S::zero();
        for i in 0..k - 1 {
            let d = vrow[i] - vrow[i + 1];
            transitions = transitions + d * d;
        }
        let slack = transitions - S::one();
        let grow = g.row_mut(row);
        for i in 0..k {
            let d_right = if i + 1 < k { vrow[i] - vrow[i + 1] } else { S::zero() };
            let d_left = if i > 0 { vrow[i - 1] - vrow[i] } else { S::zero() };
            let uniform = four * slack * (d_right - d_left);
            let quant =
                two * (vrow[i] - (S::from_f64_lossy(code[i] as f64) - half));
            let balance = two * col_sums[i];
            let variance = two * (vrow[i] - col_sums[i] * inv_n);
            grow[i] = uniform + lambdas.quantization * quant + lambdas.balance * balance
                - lambdas.variance * variance;
        }
    }
    g
}

fn check_shapes<S: Real>(model: &HashModel<S>, x: &PdvMatrix<S>, b: &BinaryCodeSet) -> Result<()> {
    if x.dim() != model.input_dim() {
        return Err(Error::DimMismatch {
            expected: model.input_dim(),
            got: x.dim(),
        });
    }
    if b.bits() != model.bits() || b.count() != x.count() {
        return Err(Error::ShapeMismatch(format!(
            "codes are {}x{}, expected {}x{}",
            b.count(),
            b.bits(),
            x.count(),
            model.bits()
        )));
    }
    Ok(())
}

/// Options for [`train_hash`].
#[derive(Debug, Clone)]
pub struct TrainOptions<S> {
    pub bits: usize,
    pub lambdas: Lambdas<S>,
    pub iterations: usize,
    pub seed: u64,
    /// Use the orthogonality-preserving Cayley-transform update for the
    /// projection step instead of the unconstrained gradient step.
    pub cayley: bool,
}

impl<S: Real> TrainOptions<S> {
    pub fn new(bits: usize) -> Self {
        TrainOptions {
            bits,
            lambdas: Lambdas::default(),
            iterations: 20,
            seed: 0,
            cayley: false,
        }
    }
}

/// Result of training: the model plus the relaxed-objective value recorded
/// before and after each projection step.
#[derive(Debug, Clone)]
pub struct TrainReport<S> {
    pub model: HashModel<S>,
    pub trace: Vec<IterationTrace<S>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct IterationTrace<S> {
    pub before_step: S,
    pub after_step: S,
}

const ARMIJO_C1: f64 = 1e-4;
const ARMIJO_SHRINK: f64 = 0.5;
const ARMIJO_MAX_BACKTRACKS: usize = 30;

/// Alternating optimization: initialize projections from the top-K
/// eigenvectors of the PDV covariance, then repeat {threshold bits, descend
/// on the relaxed objective with Armijo backtracking}.
pub fn train_hash<S: Real>(x: &PdvMatrix<S>, opts: &TrainOptions<S>) -> Result<TrainReport<S>> {
    let k = opts.bits;
    let n = x.count();
    if k < 2 {
        return Err(Error::BadConfig("need at least 2 hash bits".into()));
    }
    if n < k {
        return Err(Error::InsufficientData(format!(
            "{n} PDVs for {k} hash bits"
        )));
    }

    let mut warnings = Vec::new();
    let mut w = eigen_init(x, k, opts.seed, &mut warnings);
    let mut trace = Vec::with_capacity(opts.iterations);

    for _ in 0..opts.iterations {
        // B-step: closed-form thresholding
        let v = x.values().matmul(&w);
        let b = binarize_projected(&v);

        // W-step: one Armijo-backtracked descent step on the relaxation
        let before = relaxed_objective_projected(&v, &b, opts.lambdas);
        let gv = relaxed_gradient_projected(&v, &b, opts.lambdas);
        let grad = x.values().transpose_matmul(&gv);
        let direction = if opts.cayley {
            cayley_direction(&w, &grad)
        } else {
            let mut d = grad.clone();
            d.scale_in_place(-S::one());
            d
        };
        let dir_dot_grad = linalg::dot(direction.data(), grad.data());
        let mut after = before;
        if dir_dot_grad < S::zero() {
            // V moves linearly with the step, so each trial is O(N·K)
            let xd = x.values().matmul(&direction);
            let mut step = S::one();
            let c1 = S::from_f64_lossy(ARMIJO_C1);
            let shrink = S::from_f64_lossy(ARMIJO_SHRINK);
            for _ in 0..ARMIJO_MAX_BACKTRACKS {
                let mut v_trial = v.clone();
                for (vt, &d) in v_trial.data_mut().iter_mut().zip(xd.data()) {
                    *vt = *vt + step * d;
                }
                let f_trial = relaxed_objective_projected(&v_trial, &b, opts.lambdas);
                if f_trial <= before + c1 * step * dir_dot_grad {
                    for (wi, &d) in w.data_mut().iter_mut().zip(direction.data()) {
                        *wi = *wi + step * d;
                    }
                    after = f_trial;
                    break;
                }
                step = step * shrink;
            }
        }
        trace.push(IterationTrace {
            before_step: before,
            after_step: after,
        });
    }

    Ok(TrainReport {
        model: HashModel::new(x.scale(), w, opts.lambdas),
        trace,
        warnings,
    })
}

/// Steepest descent in the tangent space of the orthogonality constraint,
/// projected via W(WᵀG)ᵀ − G(WᵀW)... reduced here to the skew-projected
/// direction A·W with A = GWᵀ − WGᵀ, the first-order Cayley-flow direction.
fn cayley_direction<S: Real>(w: &Matrix<S>, grad: &Matrix<S>) -> Matrix<S> {
    let gwt = grad.matmul(&w.transpose()); // dim×dim
    let wgt = w.matmul(&grad.transpose());
    let mut a = Matrix::zeros(gwt.rows(), gwt.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            a.set(i, j, gwt.get(i, j) - wgt.get(i, j));
        }
    }
    let mut d = a.matmul(w);
    d.scale_in_place(-S::one());
    d
}

/// Top-K eigenvectors of XᵀX (the PDV covariance without centering), columns
/// in descending eigenvalue order, signs fixed. Rank-deficient columns are
/// replaced by seeded random unit vectors.
fn eigen_init<S: Real>(
    x: &PdvMatrix<S>,
    k: usize,
    seed: u64,
    warnings: &mut Vec<String>,
) -> Matrix<S> {
    let dim = x.dim();
    let cov = x.values().transpose_matmul(x.values());
    let (vals, vecs) = linalg::symmetric_eigen(&cov);
    let tol = vals[0].abs().max(S::one()) * S::from_f64_lossy(1e-10);
    let rank = vals.iter().take(k.min(dim)).filter(|v| v.abs() > tol).count();

    let mut w = Matrix::zeros(dim, k);
    for c in 0..k.min(dim).min(rank) {
        for r in 0..dim {
            w.set(r, c, vecs.get(r, c));
        }
    }
    if rank < k {
        warnings.push(format!(
            "PDV covariance rank {rank} < {k} hash bits; padding with random unit vectors"
        ));
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5eed_1e11);
        for c in rank..k {
            let mut col: Vec<S> = (0..dim)
                .map(|_| S::from_f64_lossy(rng.gen::<f64>() * 2.0 - 1.0))
                .collect();
            let nrm = linalg::norm(&col);
            for v in &mut col {
                *v = *v / nrm;
            }
            for r in 0..dim {
                w.set(r, c, col[r]);
            }
        }
    }
    w
}
