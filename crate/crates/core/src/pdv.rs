//! Pixel difference vectors: the P³−1 neighbor-minus-center differences of a
//! P×P×P volume neighborhood.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::video::VideoVolume;

/// A batch of pixel difference vectors, one per row, each of length P³−1.
#[derive(Debug, Clone, PartialEq)]
pub struct PdvMatrix<S> {
    scale: usize,
    values: Matrix<S>,
}

impl<S: Real> PdvMatrix<S> {
    pub fn new(scale: usize, values: Matrix<S>) -> Self {
        assert_eq!(values.cols(), scale * scale * scale - 1);
        PdvMatrix { scale, values }
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn count(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Matrix<S> {
        &self.values
    }

    pub fn row(&self, n: usize) -> &[S] {
        self.values.row(n)
    }

    /// Concatenate batches in the given order.
    pub fn concat(parts: &[PdvMatrix<S>]) -> Result<PdvMatrix<S>> {
        let first = parts
            .first()
            .ok_or_else(|| Error::EmptyInput("no PDV batches to concatenate".into()))?;
        let dim = first.dim();
        let scale = first.scale;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            data.extend_from_slice(p.values.data());
            rows += p.count();
        }
        Ok(PdvMatrix::new(scale, Matrix::from_vec(rows, dim, data)))
    }

    /// Keep at most `cap` rows, uniformly sampled without replacement.
    pub fn subsample(&self, cap: usize, seed: u64) -> PdvMatrix<S> {
        if self.count() <= cap {
            return self.clone();
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..self.count()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(cap);
        idx.sort_unstable();
        let mut data = Vec::with_capacity(cap * self.dim());
        for &i in &idx {
            data.extend_from_slice(self.values.row(i));
        }
        PdvMatrix::new(self.scale, Matrix::from_vec(cap, self.dim(), data))
    }
}

/// Extract PDVs at every interior center on the stride grid, neighbors in
/// raster (t, y, x) order with the center skipped. If the grid yields more
/// than `sample_cap` vectors, a seeded uniform subsample of exactly
/// `sample_cap` is kept.
pub fn extract_pdvs<S: Real>(
    v: &VideoVolume,
    p: usize,
    stride: (usize, usize, usize),
    sample_cap: usize,
    seed: u64,
) -> Result<PdvMatrix<S>> {
    if p < 3 || p.is_multiple_of(2) {
        return Err(Error::BadNeighborhoodSize(p));
    }
    let (tt, hh, ww) = v.dims();
    if tt < p || hh < p || ww < p {
        return Err(Error::VolumeTooSmall { dims: v.dims(), p });
    }
    let (st, sy, sx) = stride;
    assert!(st >= 1 && sy >= 1 && sx >= 1, "stride must be positive");
    let r = (p - 1) / 2;
    let dim = p * p * p - 1;

    // neighbor offsets relative to the center, raster order, center skipped
    let mut offsets = Vec::with_capacity(dim);
    for dt in 0..p {
        for dy in 0..p {
            for dx in 0..p {
                if dt == r && dy == r && dx == r {
                    continue;
                }
                offsets.push((dt as isize - r as isize, dy as isize - r as isize, dx as isize - r as isize));
            }
        }
    }

    let mut data: Vec<S> = Vec::new();
    let mut count = 0usize;
    let mut ct = r;
    while ct + r < tt {
        let mut cy = r;
        while cy + r < hh {
            let mut cx = r;
            while cx + r < ww {
                let center = v.get(ct, cy, cx) as i16;
                for &(dt, dy, dx) in &offsets {
                    let val = v.get(
                        (ct as isize + dt) as usize,
                        (cy as isize + dy) as usize,
                        (cx as isize + dx) as usize,
                    ) as i16;
                    data.push(S::from_f64_lossy((val - center) as f64));
                }
                count += 1;
                cx += sx;
            }
            cy += sy;
        }
        ct += st;
    }

    let pdvs = PdvMatrix::new(p, Matrix::from_vec(count, dim, data));
    Ok(pdvs.subsample(sample_cap, seed))
}

const PDV_MAGIC: &[u8; 4] = b"PDV1";

/// Debug dump: magic "PDV1", u32 dim, u64 count, then row-major f64 LE.
pub fn save_pdvs<S: Real>(pdvs: &PdvMatrix<S>, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(PDV_MAGIC)?;
    f.write_all(&(pdvs.dim() as u32).to_le_bytes())?;
    f.write_all(&(pdvs.count() as u64).to_le_bytes())?;
    for &v in pdvs.values().data() {
        f.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

pub fn load_pdvs<S: Real>(path: &Path, scale: usize) -> Result<PdvMatrix<S>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|_| Error::MissingFile(path.to_path_buf()))?
        .read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[0..4] != PDV_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: "PDV1".into(),
        });
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let expected = 16 + dim * count * 8;
    if bytes.len() < expected {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected: expected - 16,
            found: bytes.len() - 16,
        });
    }
    let mut data = Vec::with_capacity(dim * count);
    for chunk in bytes[16..expected].chunks_exact(8) {
        data.push(S::from_f64_lossy(f64::from_le_bytes(chunk.try_into().unwrap())));
    }
    Ok(PdvMatrix::new(scale, Matrix::from_vec(count, dim, data)))
}
