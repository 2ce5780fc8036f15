//! Dense operator matrices for the tau = 0 and tau = 1 quantizations.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::OnceCell;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::grid::TorusGrid;
use crate::spectral::{eigen_decompose, Eigen};
use crate::symbols::SymbolField;

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    grid: TorusGrid,
    mat: DMatrix<Complex64>,
    provenance: String,
    eig: OnceCell<core::result::Result<Eigen, Error>>,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl OperatorMatrix {
    pub fn from_matrix(grid: &TorusGrid, mat: DMatrix<Complex64>, provenance: impl Into<String>) -> Result<Self> {
        let m = grid.points();
        if mat.nrows() != m || mat.ncols() != m {
            return Err(Error::Shape { expected: m * m, got: mat.nrows() * mat.ncols() });
        }
        if mat.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(domain("operator matrix has non-finite entries"));
        }
        Ok(OperatorMatrix { grid: grid.clone(), mat, provenance: provenance.into(), eig: OnceCell::new() })
    }

    pub fn identity(grid: &TorusGrid) -> Self {
        let m = grid.points();
        OperatorMatrix { grid: grid.clone(), mat: DMatrix::identity(m, m), provenance: "identity".into(), eig: OnceCell::new() }
    }

    pub fn scalar(grid: &TorusGrid, c: Complex64) -> Self {
        let m = grid.points();
        let mat = DMatrix::from_diagonal_element(m, m, c);
        OperatorMatrix { grid: grid.clone(), mat, provenance: format!("{c}*I"), eig: OnceCell::new() }
    }

    /// Fourier multiplier: acts on `u_hat(eta)` by `values[eta]`.
    pub fn fourier_multiplier(grid: &TorusGrid, values: &[Complex64], provenance: impl Into<String>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::Shape { expected: grid.points(), got: values.len() });
        }
        let f = fourier_basis(grid);
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(values));
        Self::from_matrix(grid, f.adjoint() * d * &f, provenance)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    fn derived(&self, mat: DMatrix<Complex64>, provenance: String) -> Self {
        OperatorMatrix { grid: self.grid.clone(), mat, provenance, eig: OnceCell::new() }
    }

    pub fn adjoint(&self) -> Self {
        self.derived(self.mat.adjoint(), format!("({})^*", self.provenance))
    }

    pub fn add(&self, o: &Self) -> Self {
        self.derived(&self.mat + &o.mat, format!("{} + {}", self.provenance, o.provenance))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.derived(&self.mat - &o.mat, format!("{} - {}", self.provenance, o.provenance))
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.derived(&self.mat * &o.mat, format!("({})({})", self.provenance, o.provenance))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.derived(&self.mat * c, format!("{c}*({})", self.provenance))
    }

    /// `A - lambda I`
    pub fn shift(&self, lambda: Complex64) -> Self {
        let mut m = self.mat.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= lambda;
        }
        self.derived(m, format!("{} - {lambda}", self.provenance))
    }

    pub fn apply(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        if u.len() != self.mat.ncols() {
            return Err(Error::Shape { expected: self.mat.ncols(), got: u.len() });
        }
        Ok((&self.mat * DVector::from_column_slice(u)).iter().copied().collect())
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn frobenius(&self) -> f64 {
        self.mat.norm()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> Result<f64> {
        spectral_norm(&self.mat)
    }

    /// Discrete `H^s -> H^t` norm: `|| B^t A B^{-s} ||` in the Fourier basis.
    pub fn sobolev_operator_norm(&self, s: f64, t: f64) -> Result<f64> {
        spectral_norm(&self.in_fourier_weighted(s, t))
    }

    /// `diag(<eta>^t) F A F^* diag(<eta>^{-s})`
    pub fn in_fourier_weighted(&self, s: f64, t: f64) -> DMatrix<Complex64> {
        let f = fourier_basis(&self.grid);
        let mut c = &f * &self.mat * f.adjoint();
        let bt = self.grid.bessel_multiplier(t);
        let bs = self.grid.bessel_multiplier(-s);
        for i in 0..c.nrows() {
            for j in 0..c.ncols() {
                c[(i, j)] *= bt[i] * bs[j];
            }
        }
        c
    }

    /// Dense eigendecomposition, computed once per matrix.
    pub fn eigen(&self) -> Result<&Eigen> {
        self.eig.get_or_init(|| eigen_decompose(&self.mat)).as_ref().map_err(|e| e.clone())
    }

    pub fn eigenvalues(&self) -> Result<&[Complex64]> {
        Ok(&self.eigen()?.values)
    }
}

/// Unitary DFT matrix, `F[e, j] = N^{-n/2} exp(-i x_j . eta_e)`.
pub fn fourier_basis(grid: &TorusGrid) -> DMatrix<Complex64> {
    let m = grid.points();
    let s = libm::sqrt(grid.norm_factor());
    DMatrix::from_fn(m, m, |e, j| grid.phase(j, e).conj() * s)
}

pub fn spectral_norm(m: &DMatrix<Complex64>) -> Result<f64> {
    let sv = m.clone().try_svd(false, false, f64::EPSILON, 0).ok_or_else(|| Error::Linalg("SVD did not converge".into()))?;
    Ok(sv.singular_values.iter().fold(0.0f64, |a, &b| a.max(b)))
}

/// `M[j,k] = N^{-n} sum_eta a(x_j, eta) exp(i (x_j - x_k) . eta)`
pub fn op_tau0(s: &SymbolField) -> OperatorMatrix {
    let grid = s.grid();
    let m = grid.points();
    let a = s.samples();
    let nf = grid.norm_factor();
    let mut mat = DMatrix::from_element(m, m, zero());
    let mut b = alloc::vec![zero(); m];
    for j in 0..m {
        // row j = conj(inverse(conj(b))) with b_e = a(x_j, eta_e) e^{i x_j eta_e}
        for e in 0..m {
            b[e] = (a.at(j, e) * grid.phase(j, e)).conj();
        }
        let row = grid.dft_inverse(&b).unwrap();
        for k in 0..m {
            mat[(j, k)] = row[k].conj() * nf;
        }
    }
    OperatorMatrix { grid: grid.clone(), mat, provenance: format!("op_tau0[{}]", s.label()), eig: OnceCell::new() }
}

/// `M[j,k] = N^{-n} sum_eta a(x_k, eta) exp(i (x_j - x_k) . eta)`
pub fn op_tau1(s: &SymbolField) -> OperatorMatrix {
    let grid = s.grid();
    let m = grid.points();
    let a = s.samples();
    let nf = grid.norm_factor();
    let mut mat = DMatrix::from_element(m, m, zero());
    let mut c = alloc::vec![zero(); m];
    for k in 0..m {
        for e in 0..m {
            c[e] = a.at(k, e) * grid.phase(k, e).conj();
        }
        let col = grid.dft_inverse(&c).unwrap();
        for j in 0..m {
            mat[(j, k)] = col[j] * nf;
        }
    }
    OperatorMatrix { grid: grid.clone(), mat, provenance: format!("op_tau1[{}]", s.label()), eig: OnceCell::new() }
}

/// Direct Fourier-sum action `Au(x_j) = sum_eta a(x_j, eta) u_hat(eta) e^{i x_j eta}`.
pub fn apply_direct(s: &SymbolField, u: &[Complex64]) -> Result<Vec<Complex64>> {
    let grid = s.grid();
    let hat = grid.dft_forward(u)?;
    let a = s.samples();
    let m = grid.points();
    Ok((0..m)
        .map(|j| (0..m).fold(zero(), |acc, e| acc + a.at(j, e) * hat[e] * grid.phase(j, e)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{Family, TrigTerm};

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn unit_symbol_is_identity() {
        let g = TorusGrid::new(1, 8).unwrap();
        let one = SymbolField::family(&g, Family::Constant(c(1.0))).unwrap();
        let a = op_tau0(&one);
        assert!((a.matrix() - DMatrix::identity(8, 8)).norm() < 1e-14);
    }

    #[test]
    fn multiplication_operator() {
        let g = TorusGrid::new(1, 8).unwrap();
        let ex = SymbolField::trig(&g, alloc::vec![TrigTerm { k: [1, 0], amp: c(1.0), order: 0.0, tilt: 0.0 }]).unwrap();
        for a in [op_tau0(&ex), op_tau1(&ex)] {
            for j in 0..8 {
                for k in 0..8 {
                    let want = if j == k { Complex64::from_polar(1.0, g.x_point(j)[0]) } else { zero() };
                    assert!((a.matrix()[(j, k)] - want).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn derivative_symbol_differentiates() {
        let g = TorusGrid::new(1, 16).unwrap();
        let d = SymbolField::family(&g, Family::EtaLinear { coef: Complex64::new(0.0, 1.0), axis: 0 }).unwrap();
        let a = op_tau0(&d);
        let u: Vec<Complex64> = (0..16).map(|j| c(libm::sin(g.x_point(j)[0]))).collect();
        let du = a.apply(&u).unwrap();
        for j in 0..16 {
            assert!((du[j] - c(libm::cos(g.x_point(j)[0]))).norm() < 1e-12);
        }
    }

    #[test]
    fn norms_of_simple_operators() {
        let g = TorusGrid::new(1, 8).unwrap();
        assert!((OperatorMatrix::identity(&g).operator_norm().unwrap() - 1.0).abs() < 1e-12);
        let inv: Vec<Complex64> = g.bessel_multiplier(-1.0).into_iter().map(c).collect();
        let b = OperatorMatrix::fourier_multiplier(&g, &inv, "B^-1").unwrap();
        assert!((b.operator_norm().unwrap() - 1.0).abs() < 1e-12);
        let inv2: Vec<Complex64> = g.bessel_multiplier(-2.0).into_iter().map(c).collect();
        let b2 = OperatorMatrix::fourier_multiplier(&g, &inv2, "B^-2").unwrap();
        assert!((b2.sobolev_operator_norm(0.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let id = OperatorMatrix::identity(&g);
        assert!((id.sobolev_operator_norm(1.5, 1.5).unwrap() - 1.0).abs() < 1e-12);
        let lap = op_tau0(&SymbolField::family(&g, Family::BesselPower(2.0)).unwrap());
        assert!((lap.sobolev_operator_norm(2.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_independent_symbols_are_diagonal_in_fourier() {
        let g = TorusGrid::new(2, 4).unwrap();
        let a = op_tau0(&SymbolField::family(&g, Family::LaplacePlusOne).unwrap());
        let c = a.in_fourier_weighted(0.0, 0.0);
        for i in 0..16 {
            for j in 0..16 {
                if i != j {
                    assert!(c[(i, j)].norm() < 1e-10);
                }
            }
        }
        let t1 = op_tau1(&SymbolField::family(&g, Family::LaplacePlusOne).unwrap());
        assert!((a.matrix() - t1.matrix()).norm() < 1e-12);
    }
}
