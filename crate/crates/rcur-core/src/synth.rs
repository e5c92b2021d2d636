//! Seeded generators for ground-truth problem instances: incoherent
//! low-rank matrices with prescribed condition number, sparse outlier
//! matrices with hard per-row/per-column caps, and a synthetic video with
//! a known foreground mask.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::DenseMatrix;
use crate::sampling::{rng_from_seed, split_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub kappa: f64,
    pub alpha: f64,
    /// Outlier magnitude as a multiple of the mean |L| entry.
    pub outlier_magnitude: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > self.m.min(self.n) {
            return Err(Error::RankOutOfRange {
                k: self.r,
                rows: self.m,
                cols: self.n,
            });
        }
        if self.kappa < 1.0 {
            return Err(Error::InvalidParameter("kappa must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A generated instance with its exact decomposition retained.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub l: DenseMatrix,
    pub s: DenseMatrix,
    pub d: DenseMatrix,
    /// Per-pixel foreground indicator, video variant only.
    pub foreground_mask: Option<Vec<Vec<bool>>>,
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn orthonormalize(a: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_na(&a.to_na().qr().q())
}

/// Incoherent rank-r matrix with geometrically spaced singular values from
/// 1 down to 1/kappa.
pub fn gen_lowrank(m: usize, n: usize, r: usize, kappa: f64, seed: u64) -> Result<DenseMatrix> {
    if r == 0 || r > m.min(n) {
        return Err(Error::RankOutOfRange { k: r, rows: m, cols: n });
    }
    if kappa < 1.0 {
        return Err(Error::InvalidParameter("kappa must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let w = orthonormalize(&DenseMatrix::from_fn(m, r, |_, _| gaussian(&mut rng)));
    let v = orthonormalize(&DenseMatrix::from_fn(n, r, |_, _| gaussian(&mut rng)));
    let sigma: Vec<f64> = (0..r)
        .map(|i| {
            if r == 1 {
                1.0
            } else {
                kappa.powf(-(i as f64) / (r as f64 - 1.0))
            }
        })
        .collect();
    let scaled_vt = DenseMatrix::from_fn(r, n, |i, j| sigma[i] * v.get(j, i));
    w.matmul(&scaled_vt)
}

/// Sparse outlier matrix whose support respects ceil(alpha*n) nonzeros per
/// row and ceil(alpha*m) per column by construction. Values are uniform on
/// +-[0.5, 1.5] * magnitude_range * reference_scale with random sign.
pub fn gen_sparse(
    m: usize,
    n: usize,
    alpha: f64,
    magnitude_range: f64,
    seed: u64,
    reference_scale: f64,
) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter("alpha must lie in [0, 1]".into()));
    }
    if alpha == 0.0 {
        return Ok(DenseMatrix::zeros(m, n));
    }
    if (alpha * n as f64) < 1.0 || (alpha * m as f64) < 1.0 {
        return Err(Error::InfeasibleSparsity { alpha, rows: m, cols: n });
    }
    let row_cap = (alpha * n as f64).ceil() as usize;
    let col_cap = (alpha * m as f64).ceil() as usize;
    let mut rng = rng_from_seed(seed);
    let mut out = DenseMatrix::zeros(m, n);
    // Columns still below their cap; rows draw distinct columns from this
    // pool, so both caps hold exactly with no unbounded rejection loop.
    let mut fills = vec![0usize; n];
    let mut available: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let take = row_cap.min(available.len());
        // Partial shuffle of the availability pool.
        for t in 0..take {
            let j = rng.gen_range(t..available.len());
            available.swap(t, j);
        }
        let chosen: Vec<usize> = available[..take].to_vec();
        for &col in &chosen {
            let mag = rng.gen_range(0.5..1.5) * magnitude_range * reference_scale;
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            out.set(i, col, sign * mag);
            fills[col] += 1;
        }
        available.retain(|&c| fills[c] < col_cap);
    }
    Ok(out)
}

/// D = L + S with both parts retained exactly.
pub fn generate(config: &SynthConfig) -> Result<GroundTruth> {
    config.validate()?;
    let l = gen_lowrank(config.m, config.n, config.r, config.kappa, config.seed)?;
    let mean_abs = l.data().iter().map(|x| x.abs()).sum::<f64>() / l.data().len() as f64;
    let s = gen_sparse(
        config.m,
        config.n,
        config.alpha,
        config.outlier_magnitude,
        split_seed(config.seed, 1),
        mean_abs,
    )?;
    let d = l.add(&s)?;
    Ok(GroundTruth {
        l,
        s,
        d,
        foreground_mask: None,
    })
}

/// Synthetic video: a rank-r static-ish background built from r smooth 2-D
/// basis images with per-frame mixing weights, plus a rectangular blob
/// walking a seeded path as additive sparse foreground. Columns are
/// vectorized frames (row-major pixels); the mask marks blob pixels.
pub fn gen_video(
    frames: usize,
    height: usize,
    width: usize,
    r: usize,
    alpha: f64,
    blob_size: usize,
    seed: u64,
) -> Result<GroundTruth> {
    let pixels = height * width;
    if r == 0 || r > frames.min(pixels) {
        return Err(Error::RankOutOfRange { k: r, rows: pixels, cols: frames });
    }
    if (blob_size * blob_size) as f64 > alpha * pixels as f64 {
        return Err(Error::InfeasibleSparsity { alpha, rows: pixels, cols: frames });
    }
    let mut rng = rng_from_seed(seed);

    // Smooth low-frequency basis images: products of sinusoids over the grid.
    let mut basis = Vec::with_capacity(r);
    for b in 0..r {
        let fy = (b % 3 + 1) as f64;
        let fx = (b / 3 + 1) as f64;
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let img = DenseMatrix::from_fn(pixels, 1, |p, _| {
            let y = (p / width) as f64 / height as f64;
            let x = (p % width) as f64 / width as f64;
            100.0 + 50.0 * (std::f64::consts::TAU * fy * y + phase).sin()
                * (std::f64::consts::TAU * fx * x).cos()
        });
        basis.push(img);
    }
    let weights: Vec<Vec<f64>> = (0..frames)
        .map(|_| (0..r).map(|_| 0.8 + 0.4 * rng.gen::<f64>()).collect())
        .collect();
    let mut l = DenseMatrix::zeros(pixels, frames);
    for (j, w) in weights.iter().enumerate() {
        for (b, img) in basis.iter().enumerate() {
            for p in 0..pixels {
                let cur = l.get(p, j);
                l.set(p, j, cur + w[b] * img.get(p, 0));
            }
        }
    }

    // Blob random walk with reflection at the borders.
    let mut s = DenseMatrix::zeros(pixels, frames);
    let mut mask = vec![vec![false; frames]; pixels];
    let max_y = height.saturating_sub(blob_size);
    let max_x = width.saturating_sub(blob_size);
    let mut y = rng.gen_range(0..=max_y) as i64;
    let mut x = rng.gen_range(0..=max_x) as i64;
    let offset = 120.0;
    for j in 0..frames {
        for dy in 0..blob_size {
            for dx in 0..blob_size {
                let p = (y as usize + dy) * width + (x as usize + dx);
                s.set(p, j, offset);
                mask[p][j] = true;
            }
        }
        let step = |v: i64, hi: i64, rng: &mut dyn rand::RngCore| -> i64 {
            let d = (rand::Rng::gen_range(rng, 0..7) as i64) - 3;
            (v + d).clamp(0, hi)
        };
        y = step(y, max_y as i64, &mut rng);
        x = step(x, max_x as i64, &mut rng);
    }

    let d = l.add(&s)?;
    Ok(GroundTruth {
        l,
        s,
        d,
        foreground_mask: Some(mask),
    })
}
