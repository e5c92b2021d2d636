//! Measured quantities for the theory-side checks: incoherence, sparsity
//! level, beta conditioning factors, condition numbers, relative errors,
//! and the column-restriction bound chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{DenseMatrix, IndexSet, NormKind, Select};
use crate::svd::{self, svd_truncated};

/// Flat report of everything the bounds consume. Optional fields are
/// omitted from the serialized form when absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub mu1: f64,
    pub mu2: f64,
    pub alpha_row: f64,
    pub alpha_col: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub rank_numeric: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_spectral_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_prime: Option<f64>,
}

/// One evaluated inequality of [`verify_bounds`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

const SLACK: f64 = 1e-8;

fn holds_with_slack(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + SLACK * rhs.abs() + 1e-12
}

fn max_sq_row_norm(factor: &DenseMatrix) -> f64 {
    (0..factor.rows())
        .map(|i| factor.row(i).iter().map(|x| x * x).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Re-orthonormalized one-step subspace refinement of a singular factor
/// basis: orth(A A^T Q). For an (effectively) rank-r input the product
/// maps every basis vector exactly into col(A), scrubbing the component
/// of the SVD's rounding error that lies outside the subspace — the part
/// that perturbs row norms, and with them the incoherence constants.
fn refine_basis(a: &DenseMatrix, q: &DenseMatrix) -> Result<DenseMatrix> {
    let y = a.matmul(&a.transpose().matmul(q)?)?;
    Ok(svd_truncated(&y, q.cols(), 0.0)?.left)
}

/// Tight incoherence constants of the rank-r subspaces of A:
/// mu1 = (m/r) max_i ||W(i,:)||^2, mu2 = (n/r) max_i ||V(i,:)||^2.
pub fn incoherence(a: &DenseMatrix, r: usize) -> Result<(f64, f64)> {
    let f = svd_truncated(a, r, 0.0)?;
    if f.values[r - 1] <= 1e-10 * f.values[0] {
        return Err(Error::RankDeficientCore {
            sigma_r: f.values[r - 1],
            sigma_1: f.values[0],
        });
    }
    let left = refine_basis(a, &f.left)?;
    let right = refine_basis(&a.transpose(), &f.right_t.transpose())?;
    let mu1 = a.rows() as f64 / r as f64 * max_sq_row_norm(&left);
    let mu2 = a.cols() as f64 / r as f64 * max_sq_row_norm(&right);
    Ok((mu1, mu2))
}

/// (max row l0 count / n, max column l0 count / m) with the exact
/// nonzero test |x| > 0.
pub fn sparsity_level(s: &DenseMatrix) -> (f64, f64) {
    sparsity_level_tol(s, 0.0)
}

/// Sparsity with entries |x| <= tol treated as zero; used on thresholded
/// solver outputs where exact zeros are not guaranteed.
pub fn sparsity_level_tol(s: &DenseMatrix, tol: f64) -> (f64, f64) {
    if s.rows() == 0 || s.cols() == 0 {
        return (0.0, 0.0);
    }
    let mut col_counts = vec![0usize; s.cols()];
    let mut max_row = 0usize;
    for i in 0..s.rows() {
        let mut row_count = 0;
        for (j, &x) in s.row(i).iter().enumerate() {
            if x.abs() > tol {
                row_count += 1;
                col_counts[j] += 1;
            }
        }
        max_row = max_row.max(row_count);
    }
    let max_col = col_counts.into_iter().max().unwrap_or(0);
    (
        max_row as f64 / s.cols() as f64,
        max_col as f64 / s.rows() as f64,
    )
}

/// beta = sqrt(|J|/universe) * ||(V(J,:))^dagger||_2 for an orthonormal
/// factor V (universe x r). Rank-deficient selections yield +infinity
/// rather than an error so trial loops can tally them.
pub fn beta_factor(factor: &DenseMatrix, indices: &IndexSet) -> Result<f64> {
    let r = factor.cols();
    if indices.len() < r {
        return Err(Error::InsufficientSamples {
            need: r,
            got: indices.len(),
        });
    }
    let sub = factor.submatrix(Select::Idx(indices), Select::All)?;
    let f = svd_truncated(&sub, r.min(sub.rows()), 0.0)?;
    let sigma_min = f.values[r - 1];
    if sigma_min <= 1e-12 * f.values[0] {
        return Ok(f64::INFINITY);
    }
    let scale = (indices.len() as f64 / factor.rows() as f64).sqrt();
    Ok(scale / sigma_min)
}

/// ||L - L_hat||_2 / ||L||_2.
pub fn relative_error(l: &DenseMatrix, l_hat: &DenseMatrix) -> Result<f64> {
    let denom = l.norm(NormKind::Spectral);
    if denom == 0.0 {
        return Err(Error::InvalidParameter(
            "relative error undefined for zero reference".into(),
        ));
    }
    Ok(l_hat.sub(l)?.norm(NormKind::Spectral) / denom)
}

/// Evaluates the column-restriction bound chain for C = L(:,J): incoherence
/// inheritance, beta-scaled incoherence and conditioning, the spectral-norm
/// bound, and the pseudoinverse-ratio bound. Each entry carries lhs, rhs,
/// and whether lhs <= rhs up to a 1e-8 relative slack.
pub fn verify_bounds(
    l: &DenseMatrix,
    c: &DenseMatrix,
    j: &IndexSet,
    r: usize,
) -> Result<Vec<BoundCheck>> {
    if c.rows() != l.rows() || c.cols() != j.len() {
        return Err(Error::DimensionMismatch(format!(
            "C is {}x{} but L has {} rows and |J| = {}",
            c.rows(),
            c.cols(),
            l.rows(),
            j.len()
        )));
    }
    let fl = svd_truncated(l, r, 0.0)?;
    let fc = svd_truncated(c, r, 0.0)?;
    if fc.values[r - 1] <= 1e-10 * fc.values[0] {
        return Err(Error::RankDeficientCore {
            sigma_r: fc.values[r - 1],
            sigma_1: fc.values[0],
        });
    }
    let (mu1_l, mu2_l) = incoherence(l, r)?;
    let (mu1_c, mu2_c) = incoherence(c, r)?;
    let kappa_l = fl.values[0] / fl.values[r - 1];
    let kappa_c = fc.values[0] / fc.values[r - 1];
    let v_l = fl.right_t.transpose();
    let beta = beta_factor(&v_l, j)?;
    // ||(V_L(J,:))^dagger||_2 alone, without the sqrt(|J|/n) scaling.
    let v_pinv_norm = beta / (j.len() as f64 / l.cols() as f64).sqrt();
    let rf = r as f64;
    let ratio = (j.len() as f64) / (l.cols() as f64);

    let checks = vec![
        ("mu1_inheritance", mu1_c, mu1_l),
        ("mu2_beta_bound", mu2_c, beta * beta * kappa_l * kappa_l * mu2_l),
        ("kappa_bound", kappa_c, beta * (mu2_l * rf).sqrt() * kappa_l),
        (
            "spectral_norm_bound",
            fc.values[0],
            (mu2_l * rf * ratio).sqrt() * fl.values[0],
        ),
        (
            "pinv_ratio_bound",
            fl.values[r - 1] / fc.values[r - 1],
            v_pinv_norm,
        ),
    ];
    Ok(checks
        .into_iter()
        .map(|(name, lhs, rhs)| BoundCheck {
            name: name.into(),
            lhs,
            rhs,
            holds: holds_with_slack(lhs, rhs),
        })
        .collect())
}

/// Full report for an observed pair: mu/kappa/rank measured on `l`,
/// sparsity measured on `s` when provided (else on `l` itself).
pub fn diagnose(l: &DenseMatrix, s: Option<&DenseMatrix>, r: usize) -> Result<DiagnosticsReport> {
    let (mu1, mu2) = incoherence(l, r)?;
    let f = svd_truncated(l, r, 0.0)?;
    let kappa = f.values[0] / f.values[r - 1];
    let rank_numeric = svd::numerical_rank(l, svd::DEFAULT_RANK_TOL);
    let (alpha_row, alpha_col) = sparsity_level(s.unwrap_or(l));
    Ok(DiagnosticsReport {
        mu1,
        mu2,
        alpha_row,
        alpha_col,
        alpha: alpha_row.max(alpha_col),
        kappa,
        rank_numeric,
        rel_spectral_error: None,
        beta: None,
        beta_prime: None,
    })
}
