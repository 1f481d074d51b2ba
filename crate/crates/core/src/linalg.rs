//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};

/// Scales every column to unit Euclidean norm; zero columns are left as zero.
pub fn normalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    out
}

/// Thin QR orthonormalization with the R diagonal sign fixed to be
/// nonnegative, so a Gaussian input yields a Haar-distributed frame.
pub fn orthonormalize_columns(m: DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for i in 0..cols {
        if r[(i, i)] < 0.0 {
            for v in q.column_mut(i).iter_mut() {
                *v = -*v;
            }
        }
    }
    q
}

/// Minimum-norm least-squares solution of `a x = b` via SVD.
///
/// Singular values below `max_sv * max(nrows, ncols) * eps` are treated as
/// zero, which makes rank-deficient systems return the pseudoinverse
/// solution instead of failing.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = max_sv * a.nrows().max(a.ncols()) as f64 * f64::EPSILON;
    svd.solve(b, tol)
        .map(|x| DVector::from_column_slice(x.as_slice()))
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// ascending and eigenvector columns reordered to match.
pub fn symmetric_eigen_ascending(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let se = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Pseudoinverse of a symmetric positive semidefinite matrix; eigenvalues
/// below `rel_tol * max_eigenvalue` are treated as zero.
pub fn pinv_psd(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (values, vectors) = symmetric_eigen_ascending(a.clone());
    let max_ev = values.iter().cloned().fold(0.0, f64::max);
    let cut = max_ev * rel_tol;
    let n = a.nrows();
    let mut scaled = DMatrix::zeros(n, n);
    for i in 0..n {
        let inv = if values[i] > cut { 1.0 / values[i] } else { 0.0 };
        scaled.set_column(i, &(vectors.column(i) * inv));
    }
    scaled * vectors.transpose()
}

/// True when every entry is finite.
pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normalize_handles_zero_columns() {
        let m = DMatrix::from_column_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]);
        let n = normalize_columns(&m);
        assert_abs_diff_eq!(n.column(0).norm(), 1.0, epsilon = 1e-15);
        assert_eq!(n.column(1).norm(), 0.0);
    }

    #[test]
    fn orthonormalize_produces_orthonormal_columns() {
        let mut rng = crate::seed::rng_from_seed(3);
        let m = DMatrix::from_fn(8, 3, |_, _| {
            rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
        });
        let q = orthonormalize_columns(m);
        let g = q.tr_mul(&q);
        assert_abs_diff_eq!(g, DMatrix::identity(3, 3), epsilon = 1e-12);
    }

    #[test]
    fn lstsq_matches_exact_solution() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let x_true = DVector::from_column_slice(&[2.0, -1.0]);
        let b = &a * &x_true;
        let x = min_norm_lstsq(&a, &b);
        assert_abs_diff_eq!(x, x_true, epsilon = 1e-12);
    }

    #[test]
    fn lstsq_rank_deficient_returns_min_norm() {
        // Two identical columns: solutions form a line; the pseudoinverse
        // answer splits the weight evenly.
        let a = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let b = DVector::from_column_slice(&[1.0, 0.0]);
        let x = min_norm_lstsq(&a, &b);
        assert_abs_diff_eq!(x[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn eigen_sorted_and_consistent() {
        let a = DMatrix::from_column_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = symmetric_eigen_ascending(a.clone());
        assert!(vals[0] <= vals[1]);
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        for i in 0..2 {
            let v = vecs.column(i);
            let r = &a * v - v * vals[i];
            assert!(r.norm() < 1e-10);
        }
    }

    #[test]
    fn psd_pinv_inverts_on_range() {
        let b = DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let a = &b * b.transpose();
        let p = pinv_psd(&a, 1e-12);
        assert_abs_diff_eq!(&a * &p * &a, a.clone(), epsilon = 1e-10);
    }
}
