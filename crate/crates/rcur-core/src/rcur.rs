//! CUR assembly and the two headline pipelines: uniformly sampled robust
//! CUR, and the hybrid variant that reduces the sampled sets to exactly r
//! rows and columns with the greedy deterministic selection.

use crate::error::{Error, Result};
use crate::mat::{DenseMatrix, IndexSet, Select};
use crate::rpca::{self, RpcaConfig, RpcaResult};
use crate::sampling::{self, SampleConfig};
use crate::svd::{self, svd_truncated};

/// Factored approximation L_hat = C_hat * pinv(C_hat(I,:)) * R_hat, stored
/// without materializing the full product.
#[derive(Debug, Clone)]
pub struct CurModel {
    pub c_hat: DenseMatrix,
    pub r_hat: DenseMatrix,
    pub row_indices: IndexSet,
    pub col_indices: IndexSet,
    /// Pseudoinverse of the rank-r truncation of C_hat(I,:).
    pub u_pinv: DenseMatrix,
    pub r: usize,
}

impl CurModel {
    /// Materializes the m x n approximation.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.c_hat
            .matmul(&self.u_pinv)
            .and_then(|cu| cu.matmul(&self.r_hat))
            .expect("model shapes are consistent by construction")
    }

    /// Applies the factored model to a vector without forming L_hat.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let rx = self.r_hat.matvec(x)?;
        let urx = self.u_pinv.matvec(&rx)?;
        self.c_hat.matvec(&urx)
    }
}

#[derive(Debug, Clone)]
pub struct RcurConfig {
    pub rpca: RpcaConfig,
    pub row_sampling: SampleConfig,
    pub col_sampling: SampleConfig,
    pub hybrid: bool,
    pub theory_eps: f64,
    pub theory_delta: f64,
}

impl RcurConfig {
    pub fn new(rpca: RpcaConfig, row_sampling: SampleConfig, col_sampling: SampleConfig) -> Self {
        Self {
            rpca,
            row_sampling,
            col_sampling,
            hybrid: false,
            theory_eps: 0.5,
            theory_delta: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rpca.validate()?;
        if !(0.0 < self.theory_eps && self.theory_eps < 1.0) {
            return Err(Error::InvalidParameter("theory_eps must lie in (0, 1)".into()));
        }
        if !(0.0 < self.theory_delta && self.theory_delta < 1.0) {
            return Err(Error::InvalidParameter(
                "theory_delta must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Stage-1 pipeline output: the model plus both solver traces.
#[derive(Debug, Clone)]
pub struct RcurOutcome {
    pub model: CurModel,
    pub col_rpca: RpcaResult,
    pub row_rpca: RpcaResult,
}

/// Hybrid pipeline output: the compact r x r core model and the stage-1
/// outcome it was distilled from.
#[derive(Debug, Clone)]
pub struct HybridOutcome {
    pub model: CurModel,
    pub stage1: RcurOutcome,
}

/// Right-hand side of the CUR perturbation bound:
/// (7/6 (w + v) + 25/6 w v + 1/6) * perturbation.
pub fn error_bound_rhs(w_pinv_norm: f64, v_pinv_norm: f64, perturbation: f64) -> f64 {
    (7.0 / 6.0 * (w_pinv_norm + v_pinv_norm)
        + 25.0 / 6.0 * w_pinv_norm * v_pinv_norm
        + 1.0 / 6.0)
        * perturbation
}

/// Builds the model from a denoised column matrix, the row index set, and a
/// denoised row matrix. The core is C_hat(I,:) truncated to rank r before
/// pseudoinversion.
pub fn cur_assemble(
    c_hat: &DenseMatrix,
    row_indices: &IndexSet,
    col_indices: &IndexSet,
    r_hat: &DenseMatrix,
    r: usize,
) -> Result<CurModel> {
    if r_hat.rows() != row_indices.len() {
        return Err(Error::DimensionMismatch(format!(
            "R_hat has {} rows but |I| = {}",
            r_hat.rows(),
            row_indices.len()
        )));
    }
    if r > row_indices.len().min(c_hat.cols()) {
        return Err(Error::InsufficientSamples {
            need: r,
            got: row_indices.len().min(c_hat.cols()),
        });
    }
    let u = c_hat.submatrix(Select::Idx(row_indices), Select::All)?;
    let f = svd_truncated(&u, r.min(u.rows().min(u.cols())), 0.0)?;
    let sigma_1 = f.values[0];
    let sigma_r = f.values[r - 1];
    if sigma_r <= 1e-12 * sigma_1 {
        return Err(Error::RankDeficientCore { sigma_r, sigma_1 });
    }
    let u_pinv = truncated_pinv(&f, u.cols())?;
    Ok(CurModel {
        c_hat: c_hat.clone(),
        r_hat: r_hat.clone(),
        row_indices: row_indices.clone(),
        col_indices: col_indices.clone(),
        u_pinv,
        r,
    })
}

/// Pseudoinverse of the rank-r truncation straight from the factors:
/// (U_r Sigma_r V_r^T)^+ = V_r Sigma_r^{-1} U_r^T. Callers check sigma_r
/// against the rank-deficiency cutoff first, so every value is invertible.
fn truncated_pinv(f: &svd::SvdFactors, cols: usize) -> Result<DenseMatrix> {
    let r = f.values.len();
    let v_scaled = DenseMatrix::from_fn(cols, r, |i, j| f.right_t.get(j, i) / f.values[j]);
    v_scaled.matmul(&f.left.transpose())
}

/// Estimates the incoherence pair of D from its rank-r SVD, for resolving
/// heuristic sample sizes on observed data.
pub fn estimate_mu(d: &DenseMatrix, r: usize) -> Result<(f64, f64)> {
    let f = svd_truncated(d, r, 0.0)?;
    let mu1 = rpca::incoherence_of_factor(&f.left, d.rows(), r);
    let mu2 = rpca::incoherence_of_factor(&f.right_t.transpose(), d.cols(), r);
    Ok((mu1, mu2))
}

fn draw_indices(
    d: &DenseMatrix,
    r: usize,
    config: &RcurConfig,
    reseed: Option<u64>,
) -> Result<(IndexSet, IndexSet)> {
    let needs_mu = matches!(config.row_sampling.size, sampling::SizeSpec::Heuristic { .. })
        || matches!(config.col_sampling.size, sampling::SizeSpec::Heuristic { .. });
    let (mu1, mu2) = if needs_mu {
        estimate_mu(d, r)?
    } else {
        (1.0, 1.0)
    };
    let rows = config.row_sampling.resolve_size(d.rows(), r, mu1.max(1.0))?;
    let cols = config.col_sampling.resolve_size(d.cols(), r, mu2.max(1.0))?;
    if rows < r {
        return Err(Error::InsufficientSamples { need: r, got: rows });
    }
    if cols < r {
        return Err(Error::InsufficientSamples { need: r, got: cols });
    }
    let (row_seed, col_seed) = match reseed {
        None => (config.row_sampling.seed, config.col_sampling.seed),
        Some(salt) => (
            sampling::split_seed(config.row_sampling.seed, salt),
            sampling::split_seed(config.col_sampling.seed, salt),
        ),
    };
    let i = sampling::sample_uniform(d.rows(), rows, config.row_sampling.mode, row_seed)?;
    let j = sampling::sample_uniform(d.cols(), cols, config.col_sampling.mode, col_seed)?;
    Ok((i, j))
}

fn solve_both(
    c_tilde: &DenseMatrix,
    r_tilde: &DenseMatrix,
    cfg: &RpcaConfig,
) -> (Result<RpcaResult>, Result<RpcaResult>) {
    #[cfg(feature = "parallel")]
    {
        rayon::join(|| rpca::altproj(c_tilde, cfg), || rpca::altproj(r_tilde, cfg))
    }
    #[cfg(not(feature = "parallel"))]
    {
        (rpca::altproj(c_tilde, cfg), rpca::altproj(r_tilde, cfg))
    }
}

fn rcur_uniform_once(
    d: &DenseMatrix,
    r: usize,
    config: &RcurConfig,
    reseed: Option<u64>,
) -> Result<RcurOutcome> {
    let (i, j) = draw_indices(d, r, config, reseed)?;
    let c_tilde = d.submatrix(Select::All, Select::Idx(&j))?;
    let r_tilde = d.submatrix(Select::Idx(&i), Select::All)?;
    let (col_res, row_res) = solve_both(&c_tilde, &r_tilde, &config.rpca);
    let col_rpca = col_res?;
    let row_rpca = row_res?;
    let model = cur_assemble(&col_rpca.l_hat, &i, &j, &row_rpca.l_hat, r)?;
    Ok(RcurOutcome {
        model,
        col_rpca,
        row_rpca,
    })
}

/// Uniform-sampling robust CUR: draw I and J, denoise D(:,J) and D(I,:)
/// with the alternating-projections solver, and assemble the skeleton. On
/// a rank-deficient core the pipeline retries once with fresh seeds.
pub fn rcur_uniform(d: &DenseMatrix, r: usize, config: &RcurConfig) -> Result<RcurOutcome> {
    config.validate()?;
    match rcur_uniform_once(d, r, config, None) {
        Err(Error::RankDeficientCore { .. }) => rcur_uniform_once(d, r, config, Some(RETRY_SALT)),
        other => other,
    }
}

const RETRY_SALT: u64 = 0x7e7a;

/// Hybrid pipeline: stage 1 as in [`rcur_uniform`], then greedy selection
/// on the top-r right singular vectors of C_hat (picking r columns) and of
/// R_hat^T (picking r rows), and reassembly of the compact r-column,
/// r-row model. Returned index sets are positions in the original matrix.
pub fn rcur_hybrid(d: &DenseMatrix, r: usize, config: &RcurConfig) -> Result<HybridOutcome> {
    config.validate()?;
    let stage1 = rcur_uniform(d, r, config)?;
    let c_hat = &stage1.col_rpca.l_hat;
    let r_hat = &stage1.row_rpca.l_hat;

    let c_right = svd_truncated(c_hat, r, 0.0)?.right_t; // r x |J|
    let j1_local = sampling::greedy_css(&c_right, r)?;
    let rt_right = svd_truncated(&r_hat.transpose(), r, 0.0)?.right_t; // r x |I|
    let i1_local = sampling::greedy_css(&rt_right, r)?;

    let c1 = c_hat.submatrix(Select::All, Select::Idx(&j1_local))?; // m x r
    let r1 = r_hat.submatrix(Select::Idx(&i1_local), Select::All)?; // r x n
    let i1 = i1_local.compose(&stage1.model.row_indices)?;
    let j1 = j1_local.compose(&stage1.model.col_indices)?;

    // Core: C1 restricted to the rows of I1, in I1's order. i1_local holds
    // positions within the stage-1 row draw, so index into the sampled-row
    // restriction of C1 directly.
    let u = c_hat
        .submatrix(Select::Idx(&stage1.model.row_indices), Select::Idx(&j1_local))?
        .submatrix(Select::Idx(&i1_local), Select::All)?;
    let f = svd_truncated(&u, r, 0.0)?;
    if f.values[r - 1] <= 1e-12 * f.values[0] {
        return Err(Error::RankDeficientCore {
            sigma_r: f.values[r - 1],
            sigma_1: f.values[0],
        });
    }
    let u_pinv = truncated_pinv(&f, u.cols())?;
    let model = CurModel {
        c_hat: c1,
        r_hat: r1,
        row_indices: i1,
        col_indices: j1,
        u_pinv,
        r,
    };
    Ok(HybridOutcome { model, stage1 })
}
