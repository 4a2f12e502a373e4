use crate::error::{Error, Result};
use crate::scalar::Real;

use super::SymMatrix;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen<T = f64> {
    pub values: Vec<T>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<T>>,
}

/// Full eigen-decomposition by cyclic Jacobi rotations.
pub fn sym_eig<T: Real>(m: &SymMatrix<T>) -> Result<SymEigen<T>> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::invalid("eigensolver needs dimension >= 1"));
    }
    m.check_symmetric()?;

    let mut a = m.clone();
    a.symmetrize();
    let mut v = SymMatrix::<T>::identity(n);

    let norm = a.frobenius_norm();
    let tol = (T::epsilon() * norm) * (T::epsilon() * norm);
    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a.get(p, q) * a.get(p, q))
            .sum();
        if off <= tol || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .partial_cmp(&a.get(j, j))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| a.get(k, k)).collect();
    // Eigenvectors are the columns of the accumulated rotation.
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v.get(i, k)).collect())
        .collect();
    Ok(SymEigen { values, vectors })
}

/// Annihilates `a[p][q]` with one plane rotation and accumulates it in `v`.
fn rotate<T: Real>(a: &mut SymMatrix<T>, v: &mut SymMatrix<T>, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == T::zero() {
        return;
    }
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    let theta = (aqq - app) / (T::lit(2.0) * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
    let c = (t * t + T::one()).sqrt().recip();
    let s = t * c;

    let n = a.dim();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set_sym(k, p, c * akp - s * akq);
        a.set_sym(k, q, s * akp + c * akq);
    }
    a.set(p, p, app - t * apq);
    a.set(q, q, aqq + t * apq);
    a.set_sym(p, q, T::zero());

    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

/// Smallest eigenvalue and a unit eigenvector for it.
pub fn sym_eig_min<T: Real>(m: &SymMatrix<T>) -> Result<(T, Vec<T>)> {
    let mut eig = sym_eig(m)?;
    let value = eig.values[0];
    let mut vector = eig.vectors.swap_remove(0);
    let norm = vector.iter().map(|&x| x * x).sum::<T>().sqrt();
    for x in &mut vector {
        *x = *x / norm;
    }
    Ok((value, vector))
}
