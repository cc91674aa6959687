//! Small dense helpers on top of nalgebra. Samples are rows.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Column means of `rows`.
pub fn mean_rows(rows: &DMatrix<f64>) -> DVector<f64> {
    let count = rows.nrows().max(1) as f64;
    rows.row_sum().transpose() / count
}

/// Population covariance `(1/N) sum (x - mean)(x - mean)^T`; zero for fewer
/// than two rows.
pub fn covariance(rows: &DMatrix<f64>) -> DMatrix<f64> {
    let (count, dim) = rows.shape();
    if count < 2 {
        return DMatrix::zeros(dim, dim);
    }
    let mean = mean_rows(rows);
    let mut centered = rows.clone();
    for mut r in centered.row_iter_mut() {
        r -= mean.transpose();
    }
    let mut cov = centered.transpose() * &centered / count as f64;
    symmetrize(&mut cov);
    cov
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenpairs of a symmetric matrix sorted by decreasing eigenvalue.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Symmetric inverse square root of a symmetric positive-definite matrix.
pub fn inverse_sqrt(m: &DMatrix<f64>, min_eigenvalue: f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = sorted_eigen(m);
    if let Some(&smallest) = values.iter().next_back() {
        if !(smallest > min_eigenvalue) {
            return Err(Error::Singular { eigenvalue: smallest });
        }
    }
    let scale = DMatrix::from_diagonal(&values.map(|v| 1.0 / v.sqrt()));
    let mut w = &vectors * scale * vectors.transpose();
    symmetrize(&mut w);
    Ok(w)
}

/// Rows of `m` selected by `keep`.
pub fn select_rows(m: &DMatrix<f64>, keep: impl Fn(usize) -> bool) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..m.nrows()).filter(|&i| keep(i)).collect();
    m.select_rows(&idx)
}

/// `<a, b>` accumulated left to right; the one dot product used wherever
/// fit-time and apply-time values must agree bit for bit.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn covariance_of_two_points() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let c = covariance(&m);
        assert_relative_eq!(c, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(covariance(&m.rows(0, 1).into_owned()), DMatrix::zeros(2, 2));
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 5.0, 3.0]));
        let (v, _) = sorted_eigen(&m);
        assert_eq!(v.as_slice(), &[5.0, 3.0, 1.0]);
    }

    #[test]
    fn inverse_sqrt_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let w = inverse_sqrt(&m, 0.0).unwrap();
        assert_relative_eq!(w, DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0])), epsilon = 1e-15);
        let singular = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.0]));
        assert!(matches!(inverse_sqrt(&singular, 0.0), Err(Error::Singular { .. })));
    }
}
