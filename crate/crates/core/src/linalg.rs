//! Dense symmetric helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Smallest eigenvalue of a symmetric matrix (0 for the empty matrix).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

pub fn is_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    is_symmetric(m, 1e-12) && min_eigenvalue(m) >= -tol * m.amax().max(1.0)
}

#[derive(Debug, Clone)]
pub enum GeneralizedEig {
    /// Largest `μ` with `N z = μ G z`, and its eigenvector.
    Max { value: f64, vector: DVector<f64> },
    /// `G` is (numerically) singular; the direction it cannot see.
    Singular { null_direction: DVector<f64>, min_eigenvalue: f64 },
}

/// Largest generalized eigenvalue of the symmetric pencil `(N, G)` with `G`
/// positive definite, i.e. `max_z zᵀNz / zᵀGz`, via `G = LLᵀ`.
pub fn max_generalized_eigenvalue(n: &DMatrix<f64>, g: &DMatrix<f64>, rel_tol: f64) -> GeneralizedEig {
    let eig = SymmetricEigen::new(g.clone());
    let (imin, gmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let gmax = eig.eigenvalues.max();
    if !(gmax > 0.0) || gmin <= rel_tol * gmax {
        return GeneralizedEig::Singular {
            null_direction: eig.eigenvectors.column(imin).into_owned(),
            min_eigenvalue: gmin,
        };
    }
    // G^{-1/2} N G^{-1/2} using the eigendecomposition of G
    let inv_sqrt = DVector::from_iterator(g.nrows(), eig.eigenvalues.iter().map(|v| 1.0 / v.sqrt()));
    let q = &eig.eigenvectors;
    let s = q * DMatrix::from_diagonal(&inv_sqrt);
    let mut reduced = s.transpose() * n * &s;
    reduced = 0.5 * (&reduced + reduced.transpose());
    let re = SymmetricEigen::new(reduced);
    let (imax, vmax) = re
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let y = re.eigenvectors.column(imax).into_owned();
    let z = s * y;
    GeneralizedEig::Max { value: vmax, vector: z.normalize() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_max_on_diagonal_pencil() {
        let n = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        match max_generalized_eigenvalue(&n, &g, 1e-13) {
            GeneralizedEig::Max { value, vector } => {
                assert!((value - 4.0).abs() < 1e-12);
                assert!(vector[1].abs() > 0.999);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singular_gramian_reports_null_direction() {
        let n = DMatrix::identity(2, 2);
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        match max_generalized_eigenvalue(&n, &g, 1e-13) {
            GeneralizedEig::Singular { null_direction, .. } => {
                assert!(null_direction[1].abs() > 0.999)
            }
            other => panic!("{other:?}"),
        }
    }
}
