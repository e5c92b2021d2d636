//! Robust CUR decomposition of low-rank plus sparse matrices.
//!
//! An observed matrix `D = L + S` (low-rank `L`, sparse outliers `S`) is
//! approximated by denoising a sampled column submatrix and a sampled row
//! submatrix with an alternating-projections robust PCA solver, then
//! stitching the results into a CUR skeleton `L_hat = C U^+ R`. Working on
//! thin submatrices instead of all of `D` is what makes the pipeline fast.
//!
//! Module map:
//! - [`mat`]: dense row-major matrices, index sets, norms
//! - [`svd`]: truncated SVD (dense or randomized), pseudoinverse
//! - [`rpca`]: alternating-projections sparse/low-rank splitting
//! - [`sampling`]: seeded uniform draws, size heuristics, greedy CSS
//! - [`rcur`]: CUR assembly, uniform and hybrid pipelines
//! - [`diagnostics`]: incoherence, sparsity, beta factors, bound checks
//! - [`synth`]: seeded ground-truth generators, incl. synthetic video
//! - [`io`]: rcur-bin / CSV matrices, PGM frame sequences
//! - [`bench`]: CUR-vs-RPCA timing and accuracy comparison

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod mat;
pub mod rcur;
pub mod rpca;
pub mod sampling;
pub mod svd;
pub mod synth;

pub use error::{Error, Result};
pub use mat::{DenseMatrix, IndexSet, NormKind, Select};
pub use rcur::{CurModel, HybridOutcome, RcurConfig, RcurOutcome};
pub use rpca::{RpcaConfig, RpcaResult};
pub use synth::{GroundTruth, SynthConfig};
