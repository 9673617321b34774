//! Squeezed-bath effective temperatures and two-mode Gaussian entanglement.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use thiserror::Error;

use crate::dynamics::CovarianceState;
use crate::linalg::symplectic_eigenvalues;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntangleError {
    #[error("logarithmic negativity needs a two-mode state, got dimension {0}")]
    NotTwoMode(usize),
    #[error("covariance matrix is unphysical: rescaled symplectic eigenvalue {0} < 1")]
    Unphysical(f64),
}

/// Tolerance below 1 allowed for the rescaled symplectic eigenvalue of a physical state.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Occupation of a squeezed thermal state, `((1 + 2n) cosh 2r - 1) / 2`.
pub fn effective_occupation(n: f64, r: f64) -> f64 {
    if r == 0.0 {
        return n;
    }
    ((1.0 + 2.0 * n) * (2.0 * r).cosh() - 1.0) / 2.0
}

/// Inverse temperature of the thermal state with the occupation of the squeezed one.
pub fn effective_beta(beta: f64, omega: f64, r: f64) -> f64 {
    if r == 0.0 {
        return beta;
    }
    let t2 = r.tanh().powi(2);
    let e = (beta * omega).exp();
    if e.is_infinite() {
        // tanh^2 r * e dominates both numerator and denominator.
        return (1.0 / t2).ln() / omega;
    }
    ((t2 + e) / (1.0 + t2 * e)).ln() / omega
}

/// Symplectic data of a rescaled (`sigma~ = 2 sigma`) two-mode covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticSpectrum {
    pub nu_tilde_plus: f64,
    pub nu_tilde_minus: f64,
    /// `det A`, `det B`, `det C`, `det sigma~`.
    pub invariants: [f64; 4],
    /// `I_1 + I_2 - 2 I_3`.
    pub lambda_tilde: f64,
}

fn invariants(sigma: &DMatrix<f64>) -> Result<[f64; 4], EntangleError> {
    if sigma.nrows() != 4 || sigma.ncols() != 4 {
        return Err(EntangleError::NotTwoMode(sigma.nrows()));
    }
    let s = Matrix4::from_fn(|r, c| 2.0 * sigma[(r, c)]);
    let a = Matrix2::new(s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]);
    let b = Matrix2::new(s[(2, 2)], s[(2, 3)], s[(3, 2)], s[(3, 3)]);
    let c = Matrix2::new(s[(0, 2)], s[(0, 3)], s[(1, 2)], s[(1, 3)]);
    Ok([a.determinant(), b.determinant(), c.determinant(), s.determinant()])
}

/// Symplectic eigenvalues of the partially transposed, rescaled two-mode covariance.
///
/// Partial transposition flips the sign of `p2` (and of `I_3`). Both spectra come from the
/// symmetric eigensolver, which stays accurate when the two eigenvalues nearly coincide.
/// A state with a rescaled symplectic eigenvalue below `1 - PHYSICALITY_TOL` is rejected.
pub fn partial_transpose_spectrum(sigma: &DMatrix<f64>) -> Result<SymplecticSpectrum, EntangleError> {
    let inv = invariants(sigma)?;
    let [i1, i2, i3, _] = inv;
    let nu_min = 2.0 * symplectic_eigenvalues(sigma)[0];
    if nu_min < 1.0 - PHYSICALITY_TOL {
        return Err(EntangleError::Unphysical(nu_min));
    }
    let flip = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
    let nu = symplectic_eigenvalues(&(&flip * sigma * &flip));
    Ok(SymplecticSpectrum {
        nu_tilde_plus: 2.0 * nu[1],
        nu_tilde_minus: 2.0 * nu[0],
        invariants: inv,
        lambda_tilde: i1 + i2 - 2.0 * i3,
    })
}

/// Logarithmic negativity `max(0, -ln nu~_-)` of a two-mode Gaussian state.
pub fn log_negativity(state: &CovarianceState) -> Result<f64, EntangleError> {
    log_negativity_of(&state.sigma)
}

pub fn log_negativity_of(sigma: &DMatrix<f64>) -> Result<f64, EntangleError> {
    let spectrum = partial_transpose_spectrum(sigma)?;
    Ok((-spectrum.nu_tilde_minus.ln()).max(0.0))
}

/// Smallest partially-transposed symplectic eigenvalue of the slow-driving limit cycle for
/// two resonant oscillators with equal bath couplings `g` and thermal baths.
pub fn closed_form_nu_minus(g: f64, lambda: f64, n_c: f64, n_h: f64) -> f64 {
    let g4 = g.powi(4);
    let g8 = g4 * g4;
    let l2 = lambda * lambda;
    let l4 = l2 * l2;
    let s = 1.0 + n_c + n_h;
    let mixed = 2.0 + n_c * (4.0 + n_c) + n_h * (4.0 + n_h) + 6.0 * n_c * n_h;
    let first = g8 * (1.0 + 2.0 * n_c * (1.0 + n_c) + 2.0 * n_h * (1.0 + n_h))
        + 4.0 * g4 * l2 * mixed
        + 16.0 * l4 * s * s;
    let inner = g8 * (n_c - n_h).powi(2) * (g8 * s * s + 4.0 * g4 * l2 * mixed + 16.0 * l4 * s * s);
    (first - 2.0 * inner.sqrt()).max(0.0).sqrt() / (g4 + 4.0 * l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn effective_occupation_examples() {
        assert_eq!(effective_occupation(0.37, 0.0), 0.37);
        // cosh(0.6) = 1.1854652182422676
        assert_relative_eq!(effective_occupation(0.1, 0.3), 0.211_279_130_945_360_55, epsilon = 1e-12);
        assert!(effective_occupation(0.1, 1e-3) > 0.1);
    }

    #[test]
    fn effective_beta_limits() {
        assert_eq!(effective_beta(5.0, 0.5, 0.0), 5.0);
        assert!(effective_beta(5.0, 0.5, 30.0) < 1e-12);
        let b = effective_beta(5.0, 0.5, 0.3);
        let n = 1.0 / (5.0f64 * 0.5).exp_m1();
        let round = 1.0 / (b * 0.5).exp_m1();
        assert_relative_eq!(round, effective_occupation(n, 0.3), max_relative = 1e-12);
    }

    #[test]
    fn effective_beta_survives_huge_exponent() {
        let b = effective_beta(81.5, 40.0, 1.3);
        let t2 = 1.3f64.tanh().powi(2);
        assert_relative_eq!(b, (1.0 / t2).ln() / 40.0, max_relative = 1e-12);
    }

    #[test]
    fn vacuum_is_at_the_bound() {
        let mut sigma = DMatrix::zeros(4, 4);
        let (w1, w2) = (1.3, 0.4);
        sigma[(0, 0)] = 0.5 / w1;
        sigma[(1, 1)] = 0.5 * w1;
        sigma[(2, 2)] = 0.5 / w2;
        sigma[(3, 3)] = 0.5 * w2;
        let spectrum = partial_transpose_spectrum(&sigma).unwrap();
        assert_relative_eq!(spectrum.nu_tilde_minus, 1.0, epsilon = 1e-12);
        assert!(log_negativity_of(&sigma).unwrap() < 1e-12);
    }

    #[test]
    fn two_mode_squeezed_vacuum() {
        // EPR state with squeezing s: nu~_- = exp(-2 s), so E_N = 2 s.
        let s: f64 = 0.4;
        let (c, sh) = ((2.0 * s).cosh() / 2.0, (2.0 * s).sinh() / 2.0);
        let sigma = DMatrix::from_row_slice(4, 4, &[
            c, 0.0, sh, 0.0,
            0.0, c, 0.0, -sh,
            sh, 0.0, c, 0.0,
            0.0, -sh, 0.0, c,
        ]);
        assert_relative_eq!(log_negativity_of(&sigma).unwrap(), 2.0 * s, epsilon = 1e-12);
    }

    #[test]
    fn rejects_unphysical_and_wrong_size() {
        let sigma = DMatrix::identity(4, 4) * 0.2;
        assert!(matches!(partial_transpose_spectrum(&sigma), Err(EntangleError::Unphysical(_))));
        assert!(matches!(
            partial_transpose_spectrum(&DMatrix::identity(2, 2)),
            Err(EntangleError::NotTwoMode(2))
        ));
    }

    #[test]
    fn closed_form_limits() {
        assert_relative_eq!(closed_form_nu_minus(0.7, 1.3, 0.0, 0.0), 1.0, epsilon = 1e-14);
        let (nc, nh) = (0.3, 0.8);
        assert_relative_eq!(closed_form_nu_minus(0.7, 1e6, nc, nh), 1.0 + nc + nh, max_relative = 1e-9);
        assert_relative_eq!(closed_form_nu_minus(0.7, -1e6, nc, nh), 1.0 + nc + nh, max_relative = 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn beta_round_trip(beta in 0.05f64..20.0, omega in 0.05f64..5.0, r in 0.0f64..2.0) {
                let n = 1.0 / (beta * omega).exp_m1();
                let b = effective_beta(beta, omega, r);
                let round = 1.0 / (b * omega).exp_m1();
                let neff = effective_occupation(n, r);
                prop_assert!(((round - neff) / neff).abs() < 1e-12 || (round - neff).abs() < 1e-12);
                prop_assert!(neff >= n);
                prop_assert!(b <= beta);
            }

            #[test]
            fn product_states_are_separable(
                a in (0.0f64..3.0, 0.2f64..3.0, -0.5f64..0.5),
                b in (0.0f64..3.0, 0.2f64..3.0, -0.5f64..0.5),
            ) {
                // Squeezed thermal single-mode blocks with det = (n + 1/2)^2.
                let block = |(n, w, s): (f64, f64, f64)| {
                    let v: f64 = n + 0.5;
                    (v * (2.0 * s).exp() / w, v * (-2.0 * s).exp() * w)
                };
                let (ax, ap) = block(a);
                let (bx, bp) = block(b);
                let mut sigma = DMatrix::zeros(4, 4);
                sigma[(0, 0)] = ax;
                sigma[(1, 1)] = ap;
                sigma[(2, 2)] = bx;
                sigma[(3, 3)] = bp;
                prop_assert_eq!(log_negativity_of(&sigma).unwrap(), 0.0);
            }
        }
    }
}
