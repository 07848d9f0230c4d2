//! Matrix-level Gaussian state tools: symplectic spectra and the
//! conditional covariance left after homodyne or heterodyne detection.
//!
//! The key-rate code uses closed forms for two-mode states. These routines
//! work on the explicit quadrature covariance matrix `(x1, p1, x2, p2, ...)`
//! and serve as an independent cross-check of those closed forms.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Block-diagonal symplectic form for `modes` modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Symplectic eigenvalues of a positive-definite covariance matrix, ascending.
///
/// With `S = gamma^{1/2}`, the antisymmetric `K = S Omega S` is similar to
/// `Omega gamma`, so the eigenvalues of `K^T K` are the squared symplectic
/// eigenvalues, each appearing twice.
pub fn symplectic_eigenvalues(gamma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = gamma.nrows();
    if !n.is_multiple_of(2) || gamma.ncols() != n {
        return Err(Error::Domain(format!("covariance must be square with even size, got {n}x{}", gamma.ncols())));
    }
    let eig = SymmetricEigen::new(gamma.clone());
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(Error::NonPhysicalCovariance(eig.eigenvalues.min()));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let k = &root * symplectic_form(n / 2) * &root;
    let squared = SymmetricEigen::new(k.transpose() * &k).eigenvalues;
    let mut values: Vec<f64> = squared.iter().map(|v| v.max(0.0).sqrt()).collect();
    values.sort_by(|a, b| a.total_cmp(b));
    Ok(values.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

/// Split `gamma` into the kept block, the measured 2x2 block, and their
/// correlations. `measured` is the mode index of the detected mode.
fn partition(gamma: &DMatrix<f64>, measured: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = gamma.nrows();
    let keep: Vec<usize> = (0..n).filter(|&i| i / 2 != measured).collect();
    let meas = [2 * measured, 2 * measured + 1];
    let rest = DMatrix::from_fn(keep.len(), keep.len(), |i, j| gamma[(keep[i], keep[j])]);
    let block = DMatrix::from_fn(2, 2, |i, j| gamma[(meas[i], meas[j])]);
    let cross = DMatrix::from_fn(keep.len(), 2, |i, j| gamma[(keep[i], meas[j])]);
    (rest, block, cross)
}

/// Covariance of the remaining modes after an x-quadrature homodyne
/// measurement on mode `measured`: `gamma_R - sigma (X gamma_B X)^MP sigma^T`.
pub fn condition_on_homodyne_x(gamma: &DMatrix<f64>, measured: usize) -> DMatrix<f64> {
    let (rest, block, cross) = partition(gamma, measured);
    let col = cross.column(0);
    rest - (col * col.transpose()) / block[(0, 0)]
}

/// Covariance of the remaining modes after heterodyne detection of mode
/// `measured`: `gamma_R - sigma (gamma_B + I)^{-1} sigma^T`.
pub fn condition_on_heterodyne(gamma: &DMatrix<f64>, measured: usize) -> Result<DMatrix<f64>> {
    let (rest, block, cross) = partition(gamma, measured);
    let inv = (block + DMatrix::identity(2, 2))
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular heterodyne block".into()))?;
    Ok(rest - &cross * inv * cross.transpose())
}

/// Two-mode covariance `[[a I, c Z], [c Z, b I]]` with `Z = diag(1, -1)`.
pub fn two_mode_covariance(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(4, 4);
    g[(0, 0)] = a;
    g[(1, 1)] = a;
    g[(2, 2)] = b;
    g[(3, 3)] = b;
    g[(0, 2)] = c;
    g[(2, 0)] = c;
    g[(1, 3)] = -c;
    g[(3, 1)] = -c;
    g
}

/// Apply a beamsplitter of transmissivity `t` between modes `m1` and `m2`:
/// `x1 -> sqrt(t) x1 + sqrt(1-t) x2`, `x2 -> -sqrt(1-t) x1 + sqrt(t) x2`.
pub fn apply_beamsplitter(gamma: &DMatrix<f64>, m1: usize, m2: usize, t: f64) -> DMatrix<f64> {
    let n = gamma.nrows();
    let mut s = DMatrix::<f64>::identity(n, n);
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    for q in 0..2 {
        let (i, j) = (2 * m1 + q, 2 * m2 + q);
        s[(i, i)] = st;
        s[(i, j)] = sr;
        s[(j, i)] = -sr;
        s[(j, j)] = st;
    }
    &s * gamma * s.transpose()
}

/// Direct sum of two covariance matrices.
pub fn direct_sum(first: &DMatrix<f64>, second: &DMatrix<f64>) -> DMatrix<f64> {
    let (n1, n2) = (first.nrows(), second.nrows());
    let mut g = DMatrix::zeros(n1 + n2, n1 + n2);
    g.view_mut((0, 0), (n1, n1)).copy_from(first);
    g.view_mut((n1, n1), (n2, n2)).copy_from(second);
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_and_thermal_spectra() {
        let vac = DMatrix::<f64>::identity(4, 4);
        for v in symplectic_eigenvalues(&vac).unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let th = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 3.0, 5.0, 5.0]));
        let s = symplectic_eigenvalues(&th).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn tmsv_is_pure() {
        let mu: f64 = 31.622_776_601_683_793;
        let g = two_mode_covariance(mu, mu, (mu * mu - 1.0).sqrt());
        for v in symplectic_eigenvalues(&g).unwrap() {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn squeezed_single_mode_is_pure() {
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.1, 10.0]));
        let s = symplectic_eigenvalues(&g).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beamsplitter_preserves_vacuum() {
        let g = DMatrix::<f64>::identity(4, 4);
        let out = apply_beamsplitter(&g, 0, 1, 0.3);
        assert!((out - DMatrix::<f64>::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn rejects_odd_dimension() {
        assert!(symplectic_eigenvalues(&DMatrix::<f64>::identity(3, 3)).is_err());
    }
}
