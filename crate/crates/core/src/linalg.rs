//! Small dense linear-algebra helpers shared by the dynamics and analytic modules.

use nalgebra::DMatrix;

/// Solves the continuous Lyapunov equation `D X + X D^T + T = 0`.
///
/// Returns `None` when the Kronecker system is singular, i.e. when `D` has a pair of
/// eigenvalues summing to zero and the stationary covariance is not unique.
pub fn lyapunov_solve(drift: &DMatrix<f64>, noise: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = drift.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let op = id.kronecker(drift) + drift.kronecker(&id);
    let rhs = -DMatrix::from_column_slice(n * n, 1, noise.as_slice());
    let sol = op.lu().solve(&rhs)?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((&x + x.transpose()) * 0.5)
}

/// The block-diagonal symplectic form `S_N = diag([[0, 1], [-1, 0]], ...)`.
pub fn symplectic_form(dim: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(dim, dim);
    for i in 0..dim / 2 {
        s[(2 * i, 2 * i + 1)] = 1.0;
        s[(2 * i + 1, 2 * i)] = -1.0;
    }
    s
}

/// Symplectic eigenvalues of a covariance matrix, ascending (one per mode).
///
/// Computed as the singular values of the antisymmetric `sigma^{1/2} S sigma^{1/2}`,
/// which avoids a non-symmetric eigensolver. Negative eigenvalues of `sigma` are
/// clamped to zero, so an indefinite matrix shows up as a vanishing eigenvalue.
pub fn symplectic_eigenvalues(sigma: &DMatrix<f64>) -> Vec<f64> {
    let dim = sigma.nrows();
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();
    let k = &root * symplectic_form(dim) * &root;
    let gram = k.transpose() * &k;
    let mut sq: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0)).collect();
    sq.sort_by(f64::total_cmp);
    sq.chunks(2).map(|pair| pair[1].sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lyapunov_residual_vanishes() {
        let d = DMatrix::from_row_slice(4, 4, &[
            -0.3, 1.0, 0.0, 0.2,
            -2.0, -0.3, -0.5, 0.0,
            0.0, 0.3, -0.1, 1.0,
            -0.4, 0.0, -1.5, -0.1,
        ]);
        let t = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.4, 0.9, 0.2, 0.7]));
        let x = lyapunov_solve(&d, &t).unwrap();
        let res = &d * &x + &x * d.transpose() + &t;
        assert!(res.amax() < 1e-12);
    }

    #[test]
    fn singular_lyapunov_is_none() {
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(lyapunov_solve(&d, &DMatrix::identity(2, 2)).is_none());
    }

    #[test]
    fn thermal_symplectic_eigenvalues() {
        let mut sigma = DMatrix::zeros(4, 4);
        sigma[(0, 0)] = 1.5 / 2.0;
        sigma[(1, 1)] = 1.5 * 2.0;
        sigma[(2, 2)] = 0.5 / 0.3;
        sigma[(3, 3)] = 0.5 * 0.3;
        let nu = symplectic_eigenvalues(&sigma);
        assert_relative_eq!(nu[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(nu[1], 1.5, epsilon = 1e-12);
    }
}
