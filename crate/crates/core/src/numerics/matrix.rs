use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square matrix stored row-major, used for covariance matrices.
///
/// Library updates keep the matrix symmetric; [`SymMatrix::from_rows`]
/// rejects inputs that are not symmetric within the scalar's structural
/// tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMatrix<T = f64> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds a matrix from row slices, checking squareness and symmetry.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        let m = Self { dim, data };
        m.check_symmetric()?;
        Ok(m)
    }

    /// Wraps row-major data without a symmetry check.
    pub(crate) fn from_raw(dim: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    /// Sets `(i, j)` and `(j, i)` together.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [T] {
        let d = self.dim;
        &mut self.data[i * d..(i + 1) * d]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Largest `|m_ij - m_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn check_symmetric(&self) -> Result<()> {
        let scale = self.max_abs().max(T::one());
        let asym = self.asymmetry();
        if !(asym <= T::structural_eps() * scale) {
            return Err(Error::invalid(format!(
                "matrix is not symmetric (max |m_ij - m_ji| = {asym:e})"
            )));
        }
        Ok(())
    }

    /// Replaces the matrix by `(m + mᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let v = (self.get(i, j) + self.get(j, i)) * half;
                self.set_sym(i, j, v);
            }
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `vᵀ · m · v`.
    pub fn quadratic_form(&self, v: &[T]) -> T {
        self.mul_vec(v).iter().zip(v).map(|(&a, &b)| a * b).sum()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = vec![T::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] = out[i * d + j] + a * other.get(k, j);
                }
            }
        }
        Self::from_raw(d, out)
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Principal submatrix on the given (ordered) indices.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let k = indices.len();
        let mut out = Self::zeros(k);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }

    /// Determinant by partial-pivot Gaussian elimination.
    pub fn determinant(&self) -> T {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut det = T::one();
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&x, &y| {
                    a[x * d + col]
                        .abs()
                        .partial_cmp(&a[y * d + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if a[pivot * d + col] == T::zero() {
                return T::zero();
            }
            if pivot != col {
                for j in 0..d {
                    a.swap(col * d + j, pivot * d + j);
                }
                det = -det;
            }
            let p = a[col * d + col];
            det = det * p;
            for r in (col + 1)..d {
                let f = a[r * d + col] / p;
                if f == T::zero() {
                    continue;
                }
                for j in col..d {
                    a[r * d + j] = a[r * d + j] - f * a[col * d + j];
                }
            }
        }
        det
    }
}

/// Moore–Penrose pseudoinverse of `π·b·π` with `π = diag(1, 0)`, i.e.
/// `diag(1 / b(1,1), 0)`.
///
/// `index` selects the measured quadrature (1-based); only `1` is supported.
pub fn projected_pseudoinverse<T: Real>(b: &SymMatrix<T>, index: usize) -> Result<SymMatrix<T>> {
    if b.dim() != 2 {
        return Err(Error::invalid(format!(
            "projected pseudoinverse expects a 2x2 block, got {}x{}",
            b.dim(),
            b.dim()
        )));
    }
    if index != 1 {
        return Err(Error::invalid(format!(
            "only the first quadrature can be projected, got index {index}"
        )));
    }
    b.check_symmetric()?;
    let b11 = b.get(0, 0);
    if !(b11 > T::zero()) {
        return Err(Error::DegenerateCovariance { value: b11.as_f64() });
    }
    Ok(SymMatrix::from_diagonal(&[b11.recip(), T::zero()]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_rows() {
        let err = SymMatrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(SymMatrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![2.0]]).is_err());
        assert!(SymMatrix::<f64>::from_rows(&[]).is_err());
    }

    #[test]
    fn determinant_of_known_matrices() {
        let m = SymMatrix::from_rows(&[vec![2.0f64, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((m.determinant() - 3.0).abs() < 1e-14);
        assert_eq!(SymMatrix::<f64>::identity(5).determinant(), 1.0);
    }

    #[test]
    fn pseudoinverse_diagonal_and_identity() {
        let p = projected_pseudoinverse(&SymMatrix::from_diagonal(&[2.0, 5.0]), 1).unwrap();
        assert_eq!(p, SymMatrix::from_diagonal(&[0.5, 0.0]));
        let p = projected_pseudoinverse(&SymMatrix::<f64>::identity(2), 1).unwrap();
        assert_eq!(p, SymMatrix::from_diagonal(&[1.0, 0.0]));
    }

    #[test]
    fn pseudoinverse_correlated_block() {
        // [[1+k², k], [k, 1]] with k = 1: π b π = diag(2, 0), whose
        // Moore-Penrose inverse is diag(1/2, 0).
        let b = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let p = projected_pseudoinverse(&b, 1).unwrap();
        assert_eq!(p, SymMatrix::from_diagonal(&[0.5, 0.0]));
    }

    #[test]
    fn pseudoinverse_degenerate() {
        let b = SymMatrix::from_diagonal(&[0.0, 1.0]);
        assert!(matches!(
            projected_pseudoinverse(&b, 1),
            Err(Error::DegenerateCovariance { .. })
        ));
        let b = SymMatrix::from_diagonal(&[-1.0, 1.0]);
        assert!(projected_pseudoinverse(&b, 1).is_err());
    }

    #[test]
    fn pseudoinverse_wrong_shape_or_index() {
        assert!(projected_pseudoinverse(&SymMatrix::<f64>::identity(3), 1).is_err());
        assert!(projected_pseudoinverse(&SymMatrix::<f64>::identity(2), 2).is_err());
    }

    #[test]
    fn symmetrize_averages() {
        let mut m = SymMatrix::from_raw(2, vec![1.0, 2.0, 4.0, 1.0]);
        m.symmetrize();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
    }
}
