//! Dense complex linear-algebra helpers shared across the simulator.
//!
//! Features:
//! - Hermitian structure checks with a relative asymmetry tolerance
//! - extremal Hermitian eigenpairs (dense solver, power-iteration fallback for
//!   very large problems)
//! - column-major vectorization and its inverse
//! - condition-number estimation for pilot sensing matrices

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use num_complex::Complex64;

/// Dense complex matrix used throughout the simulator.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

/// Relative Hermitian-asymmetry tolerance. Assembled quadratic-form matrices
/// accumulate rounding beyond exact symmetry, so the check is relative to the
/// largest entry magnitude.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Problems at or below this dimension use the dense eigensolver; larger ones
/// fall back to shifted power iteration. Sizes in this simulator stay far
/// below the limit, so the dense path is the one that matters in practice.
pub const DENSE_EIGEN_LIMIT: usize = 4096;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix is not Hermitian: relative asymmetry {asymmetry:.3e} exceeds {tol:.3e}")]
    NotHermitian { asymmetry: f64, tol: f64 },
    #[error(
        "eigensolver did not converge in {max_iter} iterations (last residual {residual:.3e})"
    )]
    NoConvergence { max_iter: usize, residual: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Maximum entrywise asymmetry |M[i,j] − conj(M[j,i])|, normalized by
/// (1 + max |entry|).
pub fn hermitian_asymmetry(m: &CMat) -> f64 {
    let scale = 1.0 + m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst / scale
}

fn require_hermitian(m: &CMat) -> Result<(), NumericsError> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::Shape(format!(
            "expected square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > HERMITIAN_TOL {
        return Err(NumericsError::NotHermitian {
            asymmetry,
            tol: HERMITIAN_TOL,
        });
    }
    Ok(())
}

/// Largest eigenvalue and a matching unit-norm eigenvector of a Hermitian
/// matrix.
///
/// The input is rejected if it fails the Hermitian check. The returned pair
/// satisfies |vᴴMv − λ| ≤ tol·(1 + |λ|), which stays second-order accurate
/// even when the leading eigenvalues cluster — there the plain vector
/// residual legitimately inflates, but any vector in the leading eigenspace
/// maximizes the quadratic form equally well, which is all callers use it
/// for. Degenerate spectra may therefore return any leading-subspace vector;
/// compare objective values, not entries.
pub fn hermitian_max_eigenpair(
    m: &CMat,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, CVec), NumericsError> {
    require_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Err(NumericsError::Shape("empty matrix".into()));
    }
    if n <= DENSE_EIGEN_LIMIT {
        let eigen = m.clone().symmetric_eigen();
        let mut best = 0;
        for i in 1..n {
            if eigen.eigenvalues[i] > eigen.eigenvalues[best] {
                best = i;
            }
        }
        let lambda = eigen.eigenvalues[best];
        let mut v: CVec = eigen.eigenvectors.column(best).into_owned();
        v /= Complex64::new(v.norm(), 0.0);
        let drift = (v.dotc(&(m * &v)).re - lambda).abs();
        if drift > tol * (1.0 + lambda.abs()) {
            return Err(NumericsError::NoConvergence {
                max_iter,
                residual: drift,
            });
        }
        Ok((lambda, v))
    } else {
        power_max_eigenpair(&|x| m * x, n, tol, max_iter)
    }
}

/// Shifted power iteration for the largest (signed) eigenvalue of a Hermitian
/// operator given only through matrix–vector products.
///
/// Iterates on M + sI with s chosen from a norm bound so the target eigenvalue
/// becomes dominant in magnitude, and reads λ off the Rayleigh quotient of the
/// current iterate. Exposed separately so the fallback path stays testable at
/// small sizes.
pub fn power_max_eigenpair(
    apply: &dyn Fn(&CVec) -> CVec,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, CVec), NumericsError> {
    // Crude spectral bound ‖M‖ ≤ ‖M e_probe‖-based estimate: use a few probes.
    let mut bound = 0.0f64;
    for k in 0..n.min(4) {
        let mut probe = CVec::zeros(n);
        probe[k * (n / n.clamp(1, 4)).max(1) % n] = Complex64::new(1.0, 0.0);
        bound = bound.max(apply(&probe).norm() * (n as f64).sqrt());
    }
    let shift = Complex64::new(bound + 1.0, 0.0);

    // Deterministic start with all coordinates populated.
    let mut v = CVec::from_fn(n, |i, _| Complex64::new(1.0, (i as f64 * 0.7).sin() * 0.25));
    v /= Complex64::new(v.norm(), 0.0);

    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut w = apply(&v) + &v * shift;
        let norm = w.norm();
        if norm == 0.0 {
            // M = −shift·I exactly; any unit vector is an eigenvector.
            return Ok((-shift.re, v));
        }
        w /= Complex64::new(norm, 0.0);
        let mv = apply(&w);
        let lambda = w.dotc(&mv).re;
        residual = (&mv - &w * Complex64::new(lambda, 0.0)).norm();
        v = w;
        if residual <= tol * (1.0 + lambda.abs()) {
            return Ok((lambda, v));
        }
    }
    Err(NumericsError::NoConvergence { max_iter, residual })
}

/// Stack the columns of `m` into one vector (column-major).
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`]: reshape `v` into a matrix with `rows` rows.
pub fn unvec(v: &CVec, rows: usize) -> Result<CMat, NumericsError> {
    if rows == 0 || !v.len().is_multiple_of(rows) {
        return Err(NumericsError::Shape(format!(
            "cannot reshape length {} into {} rows",
            v.len(),
            rows
        )));
    }
    Ok(CMat::from_column_slice(rows, v.len() / rows, v.as_slice()))
}

/// 2-norm condition number from the singular values of `m`.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    let min = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
