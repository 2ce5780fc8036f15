//! Dense spectral oracle: eigendecomposition through the complex Schur form.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<Complex64>,
    pub vectors: DMatrix<Complex64>,
    pub inverse: DMatrix<Complex64>,
    /// 2-norm condition number of the eigenvector matrix.
    pub cond: f64,
}

impl Eigen {
    /// `V diag(f(mu)) V^{-1}`
    pub fn apply(&self, f: impl Fn(Complex64) -> Complex64) -> DMatrix<Complex64> {
        let mut scaled = self.vectors.clone();
        for (j, &mu) in self.values.iter().enumerate() {
            let fm = f(mu);
            scaled.column_mut(j).iter_mut().for_each(|v| *v *= fm);
        }
        scaled * &self.inverse
    }
}

pub fn eigen_decompose(a: &DMatrix<Complex64>) -> Result<Eigen> {
    let n = a.nrows();
    // a scalar matrix up to roundoff stalls every Schur sweep, and its
    // eigendecomposition is known anyway
    let mean = a.trace() / n.max(1) as f64;
    if (a - DMatrix::from_diagonal_element(n, n, mean)).norm() <= 64.0 * f64::EPSILON * a.norm() {
        let id = DMatrix::identity(n, n);
        return Ok(Eigen { values: alloc::vec![mean; n], vectors: id.clone(), inverse: id, cond: 1.0 });
    }
    // the tightest deflation threshold can stall on clustered spectra,
    // so loosen it a few times before giving up; a failed
    // attempt stops after 30 sweeps per eigenvalue so the retries stay cheap
    let schur = [1.0, 4.0, 16.0, 64.0]
        .iter()
        .find_map(|k| nalgebra::Schur::try_new(a.clone(), k * f64::EPSILON, 30 * n.max(1)))
        .ok_or_else(|| Error::Linalg("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let tnorm = t.norm().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    // eigenvectors of the triangular factor by back-substitution
    let mut vt = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for k in 0..n {
        vt[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for l in i + 1..=k {
                s += t[(i, l)] * vt[(l, k)];
            }
            let mut d = t[(i, i)] - t[(k, k)];
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            vt[(i, k)] = -s / d;
        }
        let nrm = vt.column(k).norm();
        vt.column_mut(k).iter_mut().for_each(|v| *v /= nrm);
    }
    let vectors = q * vt;
    let inverse = vectors
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Linalg("eigenvector matrix is singular".into()))?;
    let cond = crate::quantize::spectral_norm(&vectors)? * crate::quantize::spectral_norm(&inverse)?;
    Ok(Eigen { values, vectors, inverse, cond })
}

/// Solve `M X = B` by partial-pivot LU.
pub fn solve(m: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    m.clone().lu().solve(b).ok_or_else(|| Error::Linalg("singular system".into()))
}

/// `log det M` from the LU factors: `sum log U_ii` plus `i pi` per odd permutation.
pub fn log_det_lu(m: &DMatrix<Complex64>) -> Complex64 {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..u.nrows() {
        acc += u[(i, i)].ln();
    }
    let sign: Complex64 = lu.p().determinant();
    if sign.re < 0.0 {
        acc += Complex64::new(0.0, core::f64::consts::PI);
    }
    acc
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
