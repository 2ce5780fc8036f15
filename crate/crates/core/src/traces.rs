//! Trace functional and its applications: Szegő-type log-determinants, heat
//! traces and spectral zeta values, each on the symbol and operator sides.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::calculus::build_parametrix;
use crate::contour::{ContourSpec, QuadratureSpec};
use crate::error::{domain, Error, Result};
use crate::funcalc::{complex_power, HoloFunction};
use crate::grid::GridField;
use crate::quantize::op_tau0;
use crate::spectral::{fit_slope, log_det_lu};
use crate::symbols::{positive_real_check, SectorSpec, SymbolField};

type C = Complex64;

/// `N^{-n} sum_j sum_eta a(x_j, eta)`, the lattice form of `(2 pi)^{-n} int a`.
pub fn trace_field(f: &GridField) -> C {
    let g = f.grid();
    f.values().iter().sum::<C>() * g.norm_factor()
}

pub fn trace_symbol(s: &SymbolField) -> C {
    trace_field(s.samples())
}

/// `x_j -> N^{-n} sum_eta a(x_j, eta)`; equals the diagonal of `op_tau0(s)`.
pub fn kernel_diagonal(s: &SymbolField) -> Vec<C> {
    let g = s.grid();
    let m = g.points();
    let f = s.samples();
    (0..m).map(|j| (0..m).map(|e| f.at(j, e)).sum::<C>() * g.norm_factor()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub what: String,
    /// Sweep variable (t for heat, z for zeta); a single 0 otherwise.
    pub variable: Vec<C>,
    pub operator_side: Vec<C>,
    pub symbol_leading: Vec<C>,
    /// Leading term plus corrections up to `grade`.
    pub symbol_corrected: Vec<C>,
    pub grade: usize,
    /// `symbol_by_grade[g]` keeps corrections of grade `<= g`.
    pub symbol_by_grade: Vec<Vec<C>>,
    /// Contour-integral values (zeta only).
    pub contour_side: Option<Vec<C>>,
    /// Independent reference where one exists (LU log-determinant for Szegő).
    pub reference: Option<C>,
    /// Symbol side without the `(2 pi)^{-n}` prefactor (zeta only).
    pub unnormalized_symbol: Option<Vec<C>>,
    pub slope_leading: Option<f64>,
    pub slope_corrected: Option<f64>,
}

impl TraceReport {
    pub fn discrepancy_leading(&self) -> Vec<f64> {
        self.symbol_leading.iter().zip(&self.operator_side).map(|(s, o)| (s - o).norm()).collect()
    }

    pub fn discrepancy_corrected(&self) -> Vec<f64> {
        self.symbol_corrected.iter().zip(&self.operator_side).map(|(s, o)| (s - o).norm()).collect()
    }
}

/// Traces of `cauchy_apply(f)` over the expansion truncated at grades `0..=grade`.
fn graded_traces(px: Option<&crate::calculus::ParametrixExpansion>, base: &SymbolField, grade: usize, f: &HoloFunction) -> Vec<C> {
    let mut out = alloc::vec![trace_field(&base.samples().map(|v| f.eval(v)))];
    if let Some(px) = px {
        for g in 1..=grade {
            out.push(trace_field(&px.terms.truncate_grade(g).cauchy_apply(&|p, v| f.taylor(p, v))));
        }
    }
    out
}

fn trace_class_gate(s: &SymbolField, order: f64) -> Result<()> {
    let n = s.grid().dim() as f64;
    if order < -n {
        Ok(())
    } else {
        Err(Error::Gate(format!("order {order} must satisfy order < -n = {}", -n)))
    }
}

/// `log det(I + Op(a))` from the eigenvalues against `tr log(1 + a)` with
/// the first `grade` corrections of the expansion.
pub fn szego_logdet(a: &Arc<SymbolField>, grade: usize) -> Result<TraceReport> {
    trace_class_gate(a, a.class().m)?;
    let op = op_tau0(a);
    let id = crate::quantize::OperatorMatrix::identity(a.grid());
    let ipa = op.add(&id);
    let mut operator = C::new(0.0, 0.0);
    for &mu in op.eigenvalues()? {
        let v = mu + 1.0;
        if v.norm() < 1e-12 {
            return Err(Error::SpectrumHit { eigenvalue: mu, what: "det(I + A) = 0".into() });
        }
        operator += v.ln();
    }
    let reference = log_det_lu(ipa.matrix());
    let b = Arc::new(SymbolField::affine(a, C::new(1.0, 0.0), C::new(1.0, 0.0)));
    let bs = b.samples();
    if bs.values().iter().any(|v| v.re <= 0.0 && v.im.abs() < 1e-12) {
        return Err(Error::Precondition("1 + a meets the cut of log".into()));
    }
    let px = if grade == 0 {
        None
    } else {
        let radius = 2.0 * bs.sup_norm() + 1.0;
        Some(build_parametrix(&b, &SectorSpec::finite_disk(radius)?, grade, grade)?)
    };
    let by_grade = graded_traces(px.as_ref(), &b, grade, &HoloFunction::Log);
    Ok(TraceReport {
        what: format!("szego log det(I + Op({}))", a.label()),
        variable: alloc::vec![C::new(0.0, 0.0)],
        operator_side: alloc::vec![operator],
        symbol_leading: alloc::vec![by_grade[0]],
        symbol_corrected: alloc::vec![by_grade[grade]],
        grade,
        symbol_by_grade: by_grade.iter().map(|v| alloc::vec![*v]).collect(),
        contour_side: None,
        reference: Some(reference),
        unnormalized_symbol: None,
        slope_leading: None,
        slope_corrected: None,
    })
}

fn log_fit(ts: &[f64], ys: &[f64]) -> Option<f64> {
    if ts.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = ts.iter().map(|t| libm::log(*t)).collect();
    let ys: Vec<f64> = ys.iter().map(|y| libm::log(y.max(f64::MIN_POSITIVE))).collect();
    Some(fit_slope(&xs, &ys))
}

/// `tr e^{-tA}` from eigenvalues against the symbol-side heat expansion.
pub fn heat_trace_sweep(a: &Arc<SymbolField>, ts: &[f64], grade: usize) -> Result<TraceReport> {
    if ts.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(domain("heat sweep needs t in (0, 1]"));
    }
    let op = op_tau0(a);
    let pr = positive_real_check(&op)?;
    if !(pr.margin > 0.0) {
        return Err(Error::Precondition(format!("positive-real margin {} is not positive", pr.margin)));
    }
    let eigs = op.eigenvalues()?;
    let px = if grade == 0 {
        None
    } else {
        Some(build_parametrix(a, &SectorSpec::keyhole(3.0 * PI / 4.0, 0.5 * pr.margin.min(1.0))?, grade, grade)?)
    };
    let mut rep = TraceReport {
        what: format!("heat trace of Op({})", a.label()),
        variable: Vec::new(),
        operator_side: Vec::new(),
        symbol_leading: Vec::new(),
        symbol_corrected: Vec::new(),
        grade,
        symbol_by_grade: alloc::vec![Vec::new(); grade + 1],
        contour_side: None,
        reference: None,
        unnormalized_symbol: None,
        slope_leading: None,
        slope_corrected: None,
    };
    for &t in ts {
        let f = HoloFunction::ExpScaled(t);
        rep.variable.push(C::new(t, 0.0));
        rep.operator_side.push(eigs.iter().map(|&l| f.eval(l)).sum());
        let by_grade = graded_traces(px.as_ref(), a, grade, &f);
        rep.symbol_leading.push(by_grade[0]);
        rep.symbol_corrected.push(by_grade[grade]);
        for (g, v) in by_grade.into_iter().enumerate() {
            rep.symbol_by_grade[g].push(v);
        }
    }
    rep.slope_leading = log_fit(ts, &rep.discrepancy_leading());
    rep.slope_corrected = log_fit(ts, &rep.discrepancy_corrected());
    Ok(rep)
}

/// `zeta(z) = tr A^{-z}` by eigenvalues, by the contour power and by the symbol.
pub fn zeta_value(a: &Arc<SymbolField>, z: C, c0: &ContourSpec, q: &QuadratureSpec, grade: usize) -> Result<TraceReport> {
    let n = a.grid().dim() as f64;
    let m = a.class().m;
    if !(z.re * m > n) {
        return Err(Error::Gate(format!("Re(z) m = {} must exceed n = {n}", z.re * m)));
    }
    let op = op_tau0(a);
    let f = HoloFunction::Power(-z);
    let mut operator = C::new(0.0, 0.0);
    for &l in op.eigenvalues()? {
        if l.re <= 0.0 && l.im.abs() <= 1e-12 * l.norm() {
            return Err(Error::SpectrumHit { eigenvalue: l, what: "branch cut of lambda^{-z}".into() });
        }
        operator += f.eval(l);
    }
    let contour = complex_power(&op, -z, c0, q)?.trace();
    let px = if grade == 0 {
        None
    } else {
        Some(build_parametrix(a, &SectorSpec::keyhole(3.0 * PI / 4.0, c0.epsilon)?, grade, grade)?)
    };
    let by_grade = graded_traces(px.as_ref(), a, grade, &f);
    let two_pi_n = libm::pow(2.0 * PI, n);
    Ok(TraceReport {
        what: format!("zeta of Op({}) at z = {z}", a.label()),
        variable: alloc::vec![z],
        operator_side: alloc::vec![operator],
        symbol_leading: alloc::vec![by_grade[0]],
        symbol_corrected: alloc::vec![by_grade[grade]],
        grade,
        symbol_by_grade: by_grade.iter().map(|v| alloc::vec![*v]).collect(),
        contour_side: Some(alloc::vec![contour]),
        reference: None,
        unnormalized_symbol: Some(alloc::vec![by_grade[0] * two_pi_n]),
        slope_leading: None,
        slope_corrected: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::symbols::Family;

    fn c(v: f64) -> C {
        C::new(v, 0.0)
    }

    #[test]
    fn lattice_traces() {
        let g = TorusGrid::new(1, 8).unwrap();
        let one = SymbolField::family(&g, Family::Constant(c(1.0))).unwrap();
        assert!((trace_symbol(&one) - c(8.0)).norm() < 1e-14);
        assert!(kernel_diagonal(&one).iter().all(|v| (v - c(1.0)).norm() < 1e-15));
        let b = SymbolField::family(&g, Family::BesselPower(-2.0)).unwrap();
        let direct: f64 = (-4..4).map(|e: i32| 1.0 / (1.0 + (e * e) as f64)).sum();
        assert!((trace_symbol(&b) - c(direct)).norm() < 1e-14);
        assert!((direct - 2.658_823_5).abs() < 1e-7);
    }

    #[test]
    fn heat_lattice_sum() {
        let g = TorusGrid::new(1, 8).unwrap();
        let a = Arc::new(SymbolField::family(&g, Family::LaplacePlusOne).unwrap());
        let r = heat_trace_sweep(&a, &[1.0], 1).unwrap();
        let e = libm::exp;
        let want = e(-1.0) * (1.0 + 2.0 * e(-1.0) + 2.0 * e(-4.0) + 2.0 * e(-9.0) + e(-16.0));
        assert!((r.operator_side[0] - c(want)).norm() < 1e-12);
        assert!((r.symbol_leading[0] - c(want)).norm() < 1e-12);
        assert!(r.discrepancy_corrected()[0] < 1e-12);
    }

    #[test]
    fn zeta_scalar_and_gate() {
        let g = TorusGrid::new(1, 8).unwrap();
        let k = ContourSpec::keyhole(0.25, None).unwrap();
        let q = QuadratureSpec::default();
        let a = Arc::new(SymbolField::family(&g, Family::Constant(c(2.0))).unwrap());
        // constant symbols have order 0, so the gate refuses them
        assert!(matches!(zeta_value(&a, c(2.0), &k, &q, 0), Err(Error::Gate(_))));
        let l = Arc::new(SymbolField::family(&g, Family::LaplacePlusOne).unwrap());
        assert!(matches!(zeta_value(&l, c(0.5), &k, &q, 0), Err(Error::Gate(_))));
        let r = zeta_value(&l, c(2.0), &k, &q, 1).unwrap();
        let direct: f64 = (-4..4).map(|e: i32| libm::pow(1.0 + (e * e) as f64, -2.0)).sum();
        assert!((r.operator_side[0] - c(direct)).norm() < 1e-12);
        assert!((r.contour_side.as_ref().unwrap()[0] - c(direct)).norm() < 1e-9);
        assert!((r.symbol_corrected[0] - c(direct)).norm() < 1e-12);
    }

    #[test]
    fn szego_gate_and_zero() {
        let g = TorusGrid::new(1, 8).unwrap();
        let a1 = Arc::new(SymbolField::family(&g, Family::BesselPower(-1.0)).unwrap());
        assert!(matches!(szego_logdet(&a1, 0), Err(Error::Gate(_))));
        let z = Arc::new(SymbolField::family(&g, Family::NegativeOrder { order: -2.0, eps0: 0.0 }).unwrap());
        let r = szego_logdet(&z, 1).unwrap();
        let direct: f64 = (-4..4).map(|e: i32| libm::log(1.0 + 1.0 / (1.0 + (e * e) as f64))).sum();
        assert!((r.operator_side[0] - c(direct)).norm() < 1e-10);
        assert!((r.symbol_corrected[0] - c(direct)).norm() < 1e-10);
    }
}
