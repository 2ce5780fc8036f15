//! Parameter-dependent symbol calculus: composition, the resolvent
//! parametrix, its residual, and the operator-level sweeps that measure them.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::grid::{bracket, GridField};
use crate::laurent::ResolventPolynomial;
use crate::quantize::{op_tau0, spectral_norm, OperatorMatrix};
use crate::spectral::{fit_slope, solve};
use crate::symbols::{parameter_ellipticity_check, SectorSpec, SymbolClassSpec, SymbolField};

/// Truncated composition symbol `sum_{|alpha|<=k} (1/alpha!) d_eta^alpha a D_x^alpha b`.
pub fn compose_symbols(a: &Arc<SymbolField>, b: &Arc<SymbolField>, k: usize) -> Result<SymbolField> {
    if a.grid() != b.grid() {
        return Err(domain("symbols live on different grids"));
    }
    let p = ResolventPolynomial::lambda_free(a, a)?;
    let q = ResolventPolynomial::lambda_free(a, b)?;
    let r = p.compose_truncated(&q, k)?;
    let field = match r.coefficient_fields().get(&0) {
        Some(f) => f.clone(),
        None => GridField::constant(a.grid(), Complex64::new(0.0, 0.0)),
    };
    let (ca, cb) = (a.class(), b.class());
    let class = SymbolClassSpec { m: ca.m + cb.m, rho: ca.rho.min(cb.rho), delta: ca.delta.max(cb.delta) };
    SymbolField::sampled(field, class, format!("({})#({})", a.label(), b.label()))
}

/// `|| Op(a # b) - Op(a) Op(b) ||` from `H^{m_a + m_b}` to `L^2`, restricted
/// to input frequencies `|eta_i| <= N/4`. Near the lattice edge the product
/// `Op(a) Op(b)` wraps modes around (e.g. `e^{ix}` sends `N/2 - 1` to `-N/2`),
/// which no symbol expansion can reproduce.
pub fn composition_remainder_norm(a: &Arc<SymbolField>, b: &Arc<SymbolField>, k: usize) -> Result<f64> {
    let c = compose_symbols(a, b, k)?;
    let diff = op_tau0(&c).sub(&op_tau0(a).mul(&op_tau0(b)));
    band_limited_norm(&diff, c.class().m, 0.0, a.grid().size() as i64 / 4)
}

/// Discrete `H^s -> H^t` norm on inputs with `max_i |eta_i| <= band`.
pub fn band_limited_norm(op: &OperatorMatrix, s: f64, t: f64, band: i64) -> Result<f64> {
    let grid = op.grid();
    let mut w = op.in_fourier_weighted(s, t);
    for e in 0..grid.points() {
        let eta = grid.eta_int(e);
        if eta[0].abs() > band || eta[1].abs() > band {
            w.column_mut(e).fill(Complex64::new(0.0, 0.0));
        }
    }
    spectral_norm(&w)
}

#[derive(Debug, Clone)]
pub struct ParametrixExpansion {
    pub base: Arc<SymbolField>,
    pub sector: SectorSpec,
    pub k: usize,
    pub j: usize,
    /// Accumulated parametrix symbol.
    pub terms: ResolventPolynomial,
    /// Neumann order `i` contribution `(-r)^{#i} # b0`, for `i = 0..=j`.
    pub by_order: Vec<ResolventPolynomial>,
    /// Symbol of `A# (A - lambda) - I` at this truncation.
    pub residual: ResolventPolynomial,
    pub ellipticity_constant: f64,
}

/// Left parametrix of `a - lambda`: `b0 = (a - lambda)^{-1}`,
/// `r = b0 # (a - lambda) - 1`, `a# = sum_{i<=j} (-r)^{#i} # b0`.
pub fn build_parametrix(a: &Arc<SymbolField>, sector: &SectorSpec, k: usize, j: usize) -> Result<ParametrixExpansion> {
    if k > 3 || j > 3 {
        return Err(domain("parametrix truncation limited to K, J <= 3"));
    }
    let cert = parameter_ellipticity_check(a, sector, &sector.lambda_samples(), 1.0)
        .map_err(|e| Error::Precondition(format!("ellipticity certificate missing: {e}")))?;
    if !cert.constant.is_finite() {
        return Err(Error::Precondition("ellipticity certificate is not finite".into()));
    }
    let b0 = ResolventPolynomial::from_resolvent(a);
    let shifted = ResolventPolynomial::shifted_base(a);
    let unit = ResolventPolynomial::unit(a);
    let r = b0.compose_truncated(&shifted, k)?.sub(&unit)?;
    let minus_r = r.scale(Complex64::new(-1.0, 0.0));
    let mut e = unit.clone();
    let mut by_order = Vec::with_capacity(j + 1);
    let mut terms = e.compose_truncated(&b0, k)?;
    by_order.push(terms.clone());
    for _ in 1..=j {
        e = e.compose_truncated(&minus_r, k)?;
        let t = e.compose_truncated(&b0, k)?;
        terms = terms.add(&t)?;
        by_order.push(t);
    }
    let residual = terms.compose_truncated(&shifted, k)?.sub(&unit)?;
    Ok(ParametrixExpansion {
        base: a.clone(),
        sector: *sector,
        k,
        j,
        terms,
        by_order,
        residual,
        ellipticity_constant: cert.constant,
    })
}

impl ParametrixExpansion {
    /// Partial sum of the first `upto + 1` Neumann orders.
    pub fn partial(&self, upto: usize) -> Result<ResolventPolynomial> {
        let mut acc = self.by_order[0].clone();
        for t in self.by_order.iter().take(upto + 1).skip(1) {
            acc = acc.add(t)?;
        }
        Ok(acc)
    }

    /// Operator `Op(a#(., ., lambda))` with lambda frozen.
    pub fn operator_at(&self, lambda: Complex64) -> Result<OperatorMatrix> {
        let f = self.terms.eval(lambda);
        let s = SymbolField::sampled(f, *self.base.class(), "parametrix")?;
        Ok(op_tau0(&s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolEstimate {
    pub k0: f64,
    pub k1: f64,
}

/// `sup |d_lambda^k d_eta^alpha d_x^q a#| (|lambda|^{1/m} + <eta>)^{m(k+1)} <eta>^{-delta|q| + rho|alpha|}`
/// for `k = 0, 1`.
pub fn parametrix_symbol_estimates(px: &ParametrixExpansion, lambdas: &[Complex64], alpha: [usize; 2], q: [usize; 2]) -> Result<SymbolEstimate> {
    let total = alpha[0] + alpha[1] + q[0] + q[1];
    if total > 2 {
        return Err(Error::UnsupportedOrder { order: total, limit: 2 });
    }
    let mut p = px.terms.clone();
    for (axis, &n) in alpha.iter().enumerate() {
        for _ in 0..n {
            p = p.deriv_eta(axis)?;
        }
    }
    for (axis, &n) in q.iter().enumerate() {
        for _ in 0..n {
            p = p.deriv_x(axis)?;
        }
    }
    let dl = p.deriv_lambda();
    let c = px.base.class();
    let m = c.m;
    let grid = px.base.grid();
    let pts = grid.points();
    let w = -c.delta * (q[0] + q[1]) as f64 + c.rho * (alpha[0] + alpha[1]) as f64;
    let mut out = SymbolEstimate { k0: 0.0, k1: 0.0 };
    for &lam in lambdas {
        let v0 = p.eval(lam);
        let v1 = dl.eval(lam);
        for xi in 0..pts {
            for e in 0..pts {
                let br = bracket(&grid.eta_point(e));
                let base = if m > 0.0 { libm::pow(lam.norm(), 1.0 / m) + br } else { lam.norm() + 1.0 };
                let mm = if m > 0.0 { m } else { 1.0 };
                let wt = libm::pow(br, w);
                out.k0 = out.k0.max(v0.at(xi, e).norm() * libm::pow(base, mm) * wt);
                out.k1 = out.k1.max(v1.at(xi, e).norm() * libm::pow(base, 2.0 * mm) * wt);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub lambda_modulus: f64,
    /// Residual norm on input frequencies `|eta_i| <= N/4`.
    pub residual_norm: f64,
    /// Residual norm on the whole lattice, including the edge modes that
    /// multiplication by `e^{ikx}` wraps around.
    pub residual_norm_full: f64,
    pub resolvent_norm: f64,
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecaySweep {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log residual_norm` against `log |lambda|`.
    pub slope: f64,
    pub slope_full: f64,
}

fn resolvent(a: &OperatorMatrix, lambda: Complex64) -> Result<DMatrix<Complex64>> {
    let m = a.grid().points();
    solve(a.shift(lambda).matrix(), &DMatrix::identity(m, m)).map_err(|_| Error::SpectrumHit {
        eigenvalue: lambda,
        what: "resolvent sweep".into(),
    })
}

/// `|| Op(a#_lambda)(A - lambda) - I ||` along `lambda = -r`.
pub fn residual_decay_sweep(px: &ParametrixExpansion, moduli: &[f64]) -> Result<DecaySweep> {
    let a = op_tau0(&px.base);
    let m = a.grid().points();
    let mut rows = Vec::with_capacity(moduli.len());
    for &r in moduli {
        let lam = Complex64::new(-r, 0.0);
        let p = px.operator_at(lam)?;
        let res = p.matrix() * a.shift(lam).matrix() - DMatrix::<Complex64>::identity(m, m);
        let res = OperatorMatrix::from_matrix(a.grid(), res, "residual")?;
        let residual_norm_full = res.operator_norm()?;
        let residual_norm = band_limited_norm(&res, 0.0, 0.0, a.grid().size() as i64 / 4)?;
        let resolvent_norm = spectral_norm(&resolvent(&a, lam)?)?;
        rows.push(SweepRow { lambda_modulus: r, residual_norm, residual_norm_full, resolvent_norm, product: r * resolvent_norm });
    }
    let xs: Vec<f64> = rows.iter().map(|r| libm::log(r.lambda_modulus)).collect();
    let fit = |f: &dyn Fn(&SweepRow) -> f64| {
        let ys: Vec<f64> = rows.iter().map(|r| libm::log(f(r).max(f64::MIN_POSITIVE))).collect();
        fit_slope(&xs, &ys)
    };
    let slope = fit(&|r| r.residual_norm);
    let slope_full = fit(&|r| r.residual_norm_full);
    Ok(DecaySweep { rows, slope, slope_full })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCheck {
    pub rows: Vec<SweepRow>,
    pub max_product: f64,
}

/// `|lambda| ||(A - lambda)^{-1}||` along `lambda = -r`.
pub fn ray_minimal_growth_check(a: &OperatorMatrix, moduli: &[f64]) -> Result<GrowthCheck> {
    let mut rows = Vec::with_capacity(moduli.len());
    for &r in moduli {
        let lam = Complex64::new(-r, 0.0);
        let rn = spectral_norm(&resolvent(a, lam)?)?;
        rows.push(SweepRow { lambda_modulus: r, residual_norm: f64::NAN, residual_norm_full: f64::NAN, resolvent_norm: rn, product: r * rn });
    }
    let max_product = rows.iter().fold(0.0f64, |m, r| m.max(r.product));
    Ok(GrowthCheck { rows, max_product })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::symbols::{Family, TrigTerm};
    use core::f64::consts::PI;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn fam(g: &TorusGrid, f: Family) -> Arc<SymbolField> {
        Arc::new(SymbolField::family(g, f).unwrap())
    }

    #[test]
    fn composition_examples() {
        let g = TorusGrid::new(1, 16).unwrap();
        let b1 = fam(&g, Family::BesselPower(1.0));
        let sq = compose_symbols(&b1, &b1, 0).unwrap();
        let want = fam(&g, Family::BesselPower(2.0));
        for (u, v) in sq.samples().values().iter().zip(want.samples().values()) {
            assert!((u - v).norm() < 1e-12 * v.norm());
        }
        let d = fam(&g, Family::EtaLinear { coef: Complex64::new(0.0, 1.0), axis: 0 });
        let ex = Arc::new(SymbolField::trig(&g, alloc::vec![TrigTerm { k: [1, 0], amp: c(1.0), order: 0.0, tilt: 0.0 }]).unwrap());
        assert!(composition_remainder_norm(&d, &ex, 1).unwrap() < 1e-10);
        assert!(composition_remainder_norm(&b1, &b1, 0).unwrap() < 1e-10);
        let one = fam(&g, Family::Constant(c(1.0)));
        let same = compose_symbols(&one, &ex, 2).unwrap();
        for (u, v) in same.samples().values().iter().zip(ex.samples().values()) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn flat_symbol_parametrix_is_exact() {
        let g = TorusGrid::new(1, 16).unwrap();
        let b = fam(&g, Family::BesselPower(2.0));
        let sector = SectorSpec::keyhole(3.0 * PI / 4.0, 0.5).unwrap();
        let px = build_parametrix(&b, &sector, 2, 2).unwrap();
        assert!(px.residual.is_zero());
        assert_eq!(px.terms.terms(), ResolventPolynomial::from_resolvent(&b).terms());
        let sw = residual_decay_sweep(&px, &[10.0, 100.0]).unwrap();
        assert!(sw.rows.iter().all(|r| r.residual_norm_full < 1e-10));
    }

    #[test]
    fn residual_has_no_lambda_free_part() {
        let g = TorusGrid::new(1, 8).unwrap();
        let a = fam(&g, Family::PerturbedElliptic { m: 2.0, rho: 0.5, delta: 0.0, eps0: 0.25 });
        let sector = SectorSpec::keyhole(3.0 * PI / 4.0, 0.5).unwrap();
        let px = build_parametrix(&a, &sector, 1, 1).unwrap();
        assert!(px.residual.lambda_free_part().is_none());
        assert!(px.terms.min_pole().unwrap() >= 1);
    }

    #[test]
    fn identity_growth() {
        let g = TorusGrid::new(1, 8).unwrap();
        let id = OperatorMatrix::identity(&g);
        let gc = ray_minimal_growth_check(&id, &[0.5, 3.0, 1e4]).unwrap();
        for r in &gc.rows {
            assert!((r.product - r.lambda_modulus / (1.0 + r.lambda_modulus)).abs() < 1e-12);
        }
        assert!(gc.max_product < 1.0);
    }

    #[test]
    fn lambda_derivative_estimate_of_constant() {
        let g = TorusGrid::new(1, 8).unwrap();
        let one = fam(&g, Family::Constant(c(1.0)));
        let p = ResolventPolynomial::from_resolvent(&one);
        let lam = c(-2.0);
        let d = p.deriv_lambda().eval(lam);
        assert!(d.values().iter().all(|z| (z - c(1.0) / (c(1.0) - lam).powi(2)).norm() < 1e-15));
    }
}
