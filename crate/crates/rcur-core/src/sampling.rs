//! Index selection: seeded uniform sampling, sample-size heuristics, and
//! the deterministic greedy removal algorithm for column subset selection.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{DenseMatrix, IndexSet, Select};
use crate::svd::full_svd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    WithReplacement,
    WithoutReplacement,
}

/// Sample-size heuristics, all of the form ceil(c * ... * ln(...)),
/// capped at the universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeVariant {
    /// c * mu * r * ln(universe)
    LogN,
    /// c * mu * r * ln(r * universe)
    LogRn,
    /// c * r * ln(universe), no incoherence factor
    RLogN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeSpec {
    Count(usize),
    Heuristic { c: f64, variant: SizeVariant },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub mode: SampleMode,
    pub seed: u64,
    pub size: SizeSpec,
}

impl SampleConfig {
    pub fn counted(count: usize, seed: u64) -> Self {
        Self {
            mode: SampleMode::WithoutReplacement,
            seed,
            size: SizeSpec::Count(count),
        }
    }

    /// Resolves the size spec to a concrete count for the given universe.
    pub fn resolve_size(&self, universe: usize, r: usize, mu: f64) -> Result<usize> {
        match self.size {
            SizeSpec::Count(c) => Ok(c),
            SizeSpec::Heuristic { c, variant } => sample_size(universe, r, mu, c, variant),
        }
    }
}

/// SplitMix64 finalizer; derives reproducible per-trial seeds from a master
/// seed so parallel trial batches stay deterministic.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform index draw; deterministic for a fixed seed.
pub fn sample_uniform(
    universe: usize,
    count: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<IndexSet> {
    let mut rng = rng_from_seed(seed);
    let indices = match mode {
        SampleMode::WithReplacement => (0..count).map(|_| rng.gen_range(0..universe)).collect(),
        SampleMode::WithoutReplacement => {
            if count > universe {
                return Err(Error::InsufficientSamples {
                    need: count,
                    got: universe,
                });
            }
            // Partial Fisher-Yates over a dense index pool.
            let mut pool: Vec<usize> = (0..universe).collect();
            let mut out = Vec::with_capacity(count);
            for i in 0..count {
                let j = rng.gen_range(i..universe);
                pool.swap(i, j);
                out.push(pool[i]);
            }
            out
        }
    };
    IndexSet::new(indices, universe)
}

/// ceil of the selected sampling-size formula, capped at the universe.
pub fn sample_size(
    universe: usize,
    r: usize,
    mu: f64,
    c: f64,
    variant: SizeVariant,
) -> Result<usize> {
    if c <= 0.0 {
        return Err(Error::InvalidParameter("heuristic constant c must be > 0".into()));
    }
    if r == 0 || mu < 1.0 {
        return Err(Error::InvalidParameter("need r >= 1 and mu >= 1".into()));
    }
    let n = universe as f64;
    let rf = r as f64;
    let raw = match variant {
        SizeVariant::LogN => c * mu * rf * n.ln(),
        SizeVariant::LogRn => c * mu * rf * (rf * n).ln(),
        SizeVariant::RLogN => c * rf * n.ln(),
    };
    Ok((raw.ceil() as usize).min(universe))
}

/// Per-column removal criterion used by the greedy selection: for column k
/// with right-singular-vector coordinates y_k and singular values sigma,
/// (sum_j (y_kj / sigma_j)^2) / (1 - ||y_k||^2). Columns with
/// ||y_k||^2 >= 1 are not candidates.
fn removal_criteria(x: &DenseMatrix, remaining: &[usize], r: usize) -> Result<Vec<Option<f64>>> {
    let sub_cols = IndexSet::new(remaining.to_vec(), x.cols())?;
    let current = x.submatrix(Select::All, Select::Idx(&sub_cols))?;
    let (_, sigma, vt) = full_svd(&current);
    if sigma.len() < r || sigma[r - 1] <= 1e-10 * sigma[0] {
        return Err(Error::RankDeficientCore {
            sigma_r: sigma.get(r - 1).copied().unwrap_or(0.0),
            sigma_1: sigma[0],
        });
    }
    Ok((0..remaining.len())
        .map(|k| {
            let mut num = 0.0;
            let mut norm_sq = 0.0;
            for j in 0..r {
                let y = vt[(j, k)];
                norm_sq += y * y;
                num += (y / sigma[j]).powi(2);
            }
            if norm_sq < 1.0 {
                Some(num / (1.0 - norm_sq))
            } else {
                None
            }
        })
        .collect())
}

/// Greedy removal subset selection on a full-rank r x m matrix: removes one
/// column per step until k survive; returns the survivors in ascending
/// order. Ties break toward the smallest column index. The SVD is
/// recomputed from scratch after every removal.
pub fn greedy_css(x: &DenseMatrix, k: usize) -> Result<IndexSet> {
    let r = x.rows();
    let m = x.cols();
    if k < r {
        return Err(Error::InvalidParameter(format!(
            "greedy selection needs k >= r ({k} < {r})"
        )));
    }
    if k > m {
        return Err(Error::InsufficientSamples { need: k, got: m });
    }
    let mut remaining: Vec<usize> = (0..m).collect();
    for _ in 0..m - k {
        let crit = removal_criteria(x, &remaining, r)?;
        let best = crit
            .iter()
            .enumerate()
            .filter_map(|(pos, c)| c.map(|v| (pos, v)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .ok_or(Error::DegenerateSelection)?;
        remaining.remove(best.0);
    }
    IndexSet::new(remaining, m)
}
