//! Dense matrix container and the numerical primitives shared by every
//! pipeline: submatrix gathering, products, and the norm family.

use crate::error::{Error, Result};

/// Dense real matrix in row-major order. All entries are finite; the
/// constructors reject NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Row or column selection for [`DenseMatrix::submatrix`].
#[derive(Debug, Clone, Copy)]
pub enum Select<'a> {
    All,
    Idx(&'a IndexSet),
}

/// An ordered list of zero-based indices into a universe of a known size.
/// Duplicates are permitted (sampling with replacement keeps multiplicity).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
    universe: usize,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, universe: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= universe) {
            return Err(Error::IndexOutOfBounds {
                index: bad,
                universe,
            });
        }
        Ok(Self { indices, universe })
    }

    pub fn full(universe: usize) -> Self {
        Self {
            indices: (0..universe).collect(),
            universe,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    /// Maps positions through a parent selection: if `self` indexes into the
    /// positions of `parent`, the result indexes into the parent's universe.
    pub fn compose(&self, parent: &IndexSet) -> Result<IndexSet> {
        let mapped = self
            .indices
            .iter()
            .map(|&p| {
                parent
                    .as_slice()
                    .get(p)
                    .copied()
                    .ok_or(Error::IndexOutOfBounds {
                        index: p,
                        universe: parent.len(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        IndexSet::new(mapped, parent.universe())
    }
}

/// Norm selector for [`DenseMatrix::norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Largest singular value.
    Spectral,
    /// Root sum of squared entries.
    Frobenius,
    /// Largest absolute entry.
    MaxAbsEntry,
    /// Maximum number of exactly-nonzero entries over rows.
    L0RowMax,
    /// Maximum number of exactly-nonzero entries over columns.
    L0ColMax,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "data length {} != {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: if cols == 0 { 0 } else { pos / cols },
                col: if cols == 0 { 0 } else { pos % cols },
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Matrix product; dispatches to the rayon kernel when the `parallel`
    /// feature is enabled.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "inner dims {} vs {}",
                self.cols, other.rows
            )));
        }
        #[cfg(feature = "parallel")]
        {
            Ok(kernels::matmul_par(self, other))
        }
        #[cfg(not(feature = "parallel"))]
        {
            Ok(kernels::matmul_seq(self, other))
        }
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec: {} cols vs vector length {}",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(&a, &b)| a * b)
                    .sum::<f64>()
            })
            .collect())
    }

    /// Gathers rows and columns in the listed order; duplicate indices
    /// produce duplicated rows/columns.
    pub fn submatrix(&self, rows: Select<'_>, cols: Select<'_>) -> Result<DenseMatrix> {
        let check = |sel: &Select<'_>, bound: usize| -> Result<()> {
            if let Select::Idx(set) = sel {
                if set.universe() != bound {
                    return Err(Error::DimensionMismatch(format!(
                        "index set over universe {} applied to dimension {}",
                        set.universe(),
                        bound
                    )));
                }
                if let Some(&bad) = set.as_slice().iter().find(|&&i| i >= bound) {
                    return Err(Error::IndexOutOfBounds {
                        index: bad,
                        universe: bound,
                    });
                }
            }
            Ok(())
        };
        check(&rows, self.rows)?;
        check(&cols, self.cols)?;

        let nr = match rows {
            Select::All => self.rows,
            Select::Idx(s) => s.len(),
        };
        let nc = match cols {
            Select::All => self.cols,
            Select::Idx(s) => s.len(),
        };
        let mut data = Vec::with_capacity(nr * nc);
        let row_at = |a: usize| match rows {
            Select::All => a,
            Select::Idx(s) => s.as_slice()[a],
        };
        for a in 0..nr {
            let src = self.row(row_at(a));
            match cols {
                Select::All => data.extend_from_slice(src),
                Select::Idx(s) => data.extend(s.as_slice().iter().map(|&j| src[j])),
            }
        }
        Ok(DenseMatrix {
            rows: nr,
            cols: nc,
            data,
        })
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Spectral => crate::svd::spectral_norm(self),
            NormKind::Frobenius => self.data.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::MaxAbsEntry => self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs())),
            NormKind::L0RowMax => (0..self.rows)
                .map(|i| self.row(i).iter().filter(|&&x| x != 0.0).count())
                .max()
                .unwrap_or(0) as f64,
            NormKind::L0ColMax => (0..self.cols)
                .map(|j| (0..self.rows).filter(|&i| self.get(i, j) != 0.0).count())
                .max()
                .unwrap_or(0) as f64,
        }
    }

    pub(crate) fn to_na(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_na(m: &nalgebra::DMatrix<f64>) -> Self {
        DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

/// Raw product kernels. Exposed so the bench suite can compare the
/// sequential and data-parallel paths directly.
#[doc(hidden)]
pub mod kernels {
    use super::DenseMatrix;

    fn matmul_row(a_row: &[f64], b: &DenseMatrix, out_row: &mut [f64]) {
        out_row.fill(0.0);
        for (k, &aik) in a_row.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let b_row = b.row(k);
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }

    pub fn matmul_seq(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.rows(), b.cols());
        let cols = b.cols();
        for i in 0..a.rows() {
            let (row_a, out_slice) = (a.row(i), &mut out.data[i * cols..(i + 1) * cols]);
            matmul_row(row_a, b, out_slice);
        }
        out
    }

    #[cfg(feature = "parallel")]
    pub fn matmul_par(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        use rayon::prelude::*;
        let cols = b.cols();
        let mut out = DenseMatrix::zeros(a.rows(), b.cols());
        out.data
            .par_chunks_mut(cols.max(1))
            .enumerate()
            .for_each(|(i, out_row)| matmul_row(a.row(i), b, out_row));
        out
    }
}
