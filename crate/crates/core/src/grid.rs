//! Discrete torus geometry: grid, frequency lattice, DFTs, spectral
//! x-derivatives, finite differences in eta and Bessel multipliers.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};

#[derive(Debug)]
struct GridData {
    n: usize,
    size: usize,
    // twiddle[j * size + e] = exp(i x_j eta_e) along one axis
    twiddle: Vec<Complex64>,
}

/// Uniform grid on T^n with `size` points per axis and the matching
/// frequency lattice `{-size/2, ..., size/2 - 1}^n`.
#[derive(Debug, Clone)]
pub struct TorusGrid(Arc<GridData>);

impl PartialEq for TorusGrid {
    fn eq(&self, o: &Self) -> bool {
        self.0.n == o.0.n && self.0.size == o.0.size
    }
}

impl TorusGrid {
    pub fn new(n: usize, size: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(domain("torus dimension must be 1 or 2"));
        }
        if size < 4 || size % 2 != 0 {
            return Err(domain("points per axis must be even and at least 4"));
        }
        let half = (size / 2) as i64;
        let mut twiddle = Vec::with_capacity(size * size);
        for j in 0..size {
            for e in 0..size {
                // reduce j*eta mod size before taking the angle to keep it exact
                let k = (j as i64 * (e as i64 - half)).rem_euclid(size as i64);
                let th = 2.0 * PI * k as f64 / size as f64;
                twiddle.push(Complex64::new(libm::cos(th), libm::sin(th)));
            }
        }
        Ok(TorusGrid(Arc::new(GridData { n, size, twiddle })))
    }

    pub fn dim(&self) -> usize {
        self.0.n
    }

    pub fn size(&self) -> usize {
        self.0.size
    }

    /// Number of grid points, which equals the number of lattice frequencies.
    pub fn points(&self) -> usize {
        self.0.size.pow(self.0.n as u32)
    }

    fn split(&self, idx: usize) -> [usize; 2] {
        if self.0.n == 1 {
            [idx, 0]
        } else {
            [idx / self.0.size, idx % self.0.size]
        }
    }

    pub fn x_point(&self, idx: usize) -> [f64; 2] {
        let h = 2.0 * PI / self.0.size as f64;
        let [a, b] = self.split(idx);
        if self.0.n == 1 {
            [h * a as f64, 0.0]
        } else {
            [h * a as f64, h * b as f64]
        }
    }

    pub fn eta_int(&self, idx: usize) -> [i64; 2] {
        let half = (self.0.size / 2) as i64;
        let [a, b] = self.split(idx);
        if self.0.n == 1 {
            [a as i64 - half, 0]
        } else {
            [a as i64 - half, b as i64 - half]
        }
    }

    pub fn eta_point(&self, idx: usize) -> [f64; 2] {
        let [a, b] = self.eta_int(idx);
        [a as f64, b as f64]
    }

    /// Lattice index of an integer frequency, if it lies on the lattice.
    pub fn eta_index(&self, eta: [i64; 2]) -> Option<usize> {
        let half = (self.0.size / 2) as i64;
        let a = eta[0] + half;
        let b = eta[1] + half;
        let s = self.0.size as i64;
        if a < 0 || a >= s {
            return None;
        }
        if self.0.n == 1 {
            return if eta[1] == 0 { Some(a as usize) } else { None };
        }
        if b < 0 || b >= s {
            return None;
        }
        Some((a * s + b) as usize)
    }

    /// `exp(i x_j . eta_e)`.
    pub fn phase(&self, xj: usize, e: usize) -> Complex64 {
        let s = self.0.size;
        let [j1, j2] = self.split(xj);
        let [e1, e2] = self.split(e);
        let p = self.0.twiddle[j1 * s + e1];
        if self.0.n == 1 {
            p
        } else {
            p * self.0.twiddle[j2 * s + e2]
        }
    }

    pub fn norm_factor(&self) -> f64 {
        1.0 / self.points() as f64
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.points() {
            return Err(Error::Shape { expected: self.points(), got: len });
        }
        Ok(())
    }

    // One-axis transform. Forward maps x-index to eta-index with exp(-i x eta),
    // backward maps eta-index to x-index with exp(+i x eta).
    fn axis_pass(&self, data: &[Complex64], axis: usize, forward: bool) -> Vec<Complex64> {
        let s = self.0.size;
        let tw = &self.0.twiddle;
        let lines = if self.0.n == 1 { 1 } else { s };
        let stride = if self.0.n == 2 && axis == 0 { s } else { 1 };
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        for line in 0..lines {
            let base = if self.0.n == 1 { 0 } else if axis == 0 { line } else { line * s };
            for to in 0..s {
                let mut acc = Complex64::new(0.0, 0.0);
                for from in 0..s {
                    let w = if forward { tw[from * s + to].conj() } else { tw[to * s + from] };
                    acc += data[base + from * stride] * w;
                }
                out[base + to * stride] = acc;
            }
        }
        out
    }

    pub fn dft_forward(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(u.len())?;
        let mut d = u.to_vec();
        for axis in 0..self.0.n {
            d = self.axis_pass(&d, axis, true);
        }
        let f = self.norm_factor();
        d.iter_mut().for_each(|v| *v *= f);
        Ok(d)
    }

    pub fn dft_inverse(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(coeffs.len())?;
        let mut d = coeffs.to_vec();
        for axis in 0..self.0.n {
            d = self.axis_pass(&d, axis, false);
        }
        Ok(d)
    }

    /// Exact derivative of the trigonometric interpolant. The unpaired mode
    /// `-N/2` is dropped for odd orders, since the real interpolant carries it
    /// as `cos(N x / 2)`, whose odd derivatives vanish at the nodes.
    pub fn spectral_derivative_x(&self, u: &[Complex64], axis: usize, order: usize) -> Result<Vec<Complex64>> {
        if axis >= self.0.n {
            return Err(domain("derivative axis exceeds torus dimension"));
        }
        let mut hat = self.dft_forward(u)?;
        let nyq = -((self.0.size / 2) as i64);
        for (e, v) in hat.iter_mut().enumerate() {
            let k = self.eta_int(e)[axis];
            if order % 2 == 1 && k == nyq {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::new(0.0, k as f64).powu(order as u32);
            }
        }
        self.dft_inverse(&hat)
    }

    pub fn bessel_multiplier(&self, s: f64) -> Vec<f64> {
        (0..self.points()).map(|e| libm::pow(bracket(&self.eta_point(e)), s)).collect()
    }

    /// `(|lambda|^{1/|k|} + <eta>)^k` on the lattice.
    pub fn param_bessel_multiplier(&self, k: f64, lambda: Complex64) -> Result<Vec<f64>> {
        if k == 0.0 {
            return Err(domain("parameter Bessel order must be nonzero"));
        }
        let lam = if lambda.norm() == 0.0 { 0.0 } else { libm::pow(lambda.norm(), 1.0 / k.abs()) };
        Ok((0..self.points()).map(|e| libm::pow(lam + bracket(&self.eta_point(e)), k)).collect())
    }
}

/// `<eta> = sqrt(1 + |eta|^2)`.
pub fn bracket(eta: &[f64; 2]) -> f64 {
    libm::sqrt(1.0 + eta[0] * eta[0] + eta[1] * eta[1])
}

/// Samples of a function on (x-grid) x (eta-lattice), row-major over x then eta.
#[derive(Debug, Clone)]
pub struct GridField {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

impl GridField {
    pub fn new(grid: &TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        let m = grid.points();
        if values.len() != m * m {
            return Err(Error::Shape { expected: m * m, got: values.len() });
        }
        Ok(GridField { grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &TorusGrid, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let m = grid.points();
        let mut values = Vec::with_capacity(m * m);
        for xi in 0..m {
            for e in 0..m {
                values.push(f(xi, e));
            }
        }
        GridField { grid: grid.clone(), values }
    }

    pub fn constant(grid: &TorusGrid, v: Complex64) -> Self {
        Self::from_fn(grid, |_, _| v)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, xi: usize, e: usize) -> Complex64 {
        self.values[xi * self.grid.points() + e]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        GridField { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip(&self, o: &GridField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        GridField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&o.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Spectral x-derivative applied to every eta-column.
    pub fn derivative_x(&self, axis: usize, order: usize) -> Result<Self> {
        let m = self.grid.points();
        let mut out = vec![Complex64::new(0.0, 0.0); m * m];
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for e in 0..m {
            for xi in 0..m {
                col[xi] = self.values[xi * m + e];
            }
            let d = self.grid.spectral_derivative_x(&col, axis, order)?;
            for xi in 0..m {
                out[xi * m + e] = d[xi];
            }
        }
        Ok(GridField { grid: self.grid.clone(), values: out })
    }
}

/// Fourth-order central difference of `f` in eta along the multi-index
/// `alpha`, with step `1e-3 * max(1, |eta_axis|)` per axis.
pub fn finite_difference_eta(
    f: &dyn Fn([f64; 2]) -> Complex64,
    eta: [f64; 2],
    alpha: [usize; 2],
) -> Result<Complex64> {
    let total = alpha[0] + alpha[1];
    if total > 4 {
        return Err(Error::UnsupportedOrder { order: total, limit: 4 });
    }
    fn stencil(order: usize) -> &'static [(f64, f64)] {
        match order {
            1 => &[(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)],
            2 => &[(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)],
            3 => &[(-3.0, 0.125), (-2.0, -1.0), (-1.0, 1.625), (1.0, -1.625), (2.0, 1.0), (3.0, -0.125)],
            4 => &[
                (-3.0, -1.0 / 6.0),
                (-2.0, 2.0),
                (-1.0, -6.5),
                (0.0, 28.0 / 3.0),
                (1.0, -6.5),
                (2.0, 2.0),
                (3.0, -1.0 / 6.0),
            ],
            _ => &[(0.0, 1.0)],
        }
    }
    let h = [1e-3 * eta[0].abs().max(1.0), 1e-3 * eta[1].abs().max(1.0)];
    let mut acc = Complex64::new(0.0, 0.0);
    for &(o1, w1) in stencil(alpha[0]) {
        for &(o2, w2) in stencil(alpha[1]) {
            acc += f([eta[0] + o1 * h[0], eta[1] + o2 * h[1]]) * (w1 * w2);
        }
    }
    let scale = libm::pow(h[0], alpha[0] as f64) * libm::pow(h[1], alpha[1] as f64);
    Ok(acc / scale)
}
