//! Symbol fields with class metadata, the built-in families and the
//! numerical class and ellipticity certificates.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cell::OnceCell;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::grid::{bracket, finite_difference_eta, GridField, TorusGrid};
use crate::jet::{index_order, DerivIndex, Jet, JetLayout, SymScalar, ETA1, ETA2, X1, X2};
use crate::quantize::OperatorMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolClassSpec {
    pub m: f64,
    pub rho: f64,
    pub delta: f64,
}

impl SymbolClassSpec {
    pub fn new(m: f64, rho: f64, delta: f64) -> Result<Self> {
        if !(0.0 <= delta && delta < rho && rho <= 1.0) {
            return Err(domain(format!("class needs 0 <= delta < rho <= 1, got rho={rho}, delta={delta}")));
        }
        Ok(SymbolClassSpec { m, rho, delta })
    }

    pub fn classical(m: f64) -> Self {
        SymbolClassSpec { m, rho: 1.0, delta: 0.0 }
    }

    /// Order drop of the composition remainder; on the flat torus always rho - delta.
    pub fn remainder_drop(&self) -> f64 {
        self.rho - self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SectorVariant {
    Keyhole,
    RightHalfPlane,
    FiniteDisk { radius: f64 },
}

/// `Lambda = {|arg lambda| >= theta0}` joined with the ball `|lambda| <= epsilon`,
/// or the exterior of a disk for zero-order operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorSpec {
    pub theta0: f64,
    pub epsilon: f64,
    pub variant: SectorVariant,
}

impl SectorSpec {
    pub fn keyhole(theta0: f64, epsilon: f64) -> Result<Self> {
        if !(PI / 2.0 < theta0 && theta0 < PI) || epsilon <= 0.0 {
            return Err(domain("keyhole sector needs pi/2 < theta0 < pi and epsilon > 0"));
        }
        Ok(SectorSpec { theta0, epsilon, variant: SectorVariant::Keyhole })
    }

    pub fn right_half_plane(angle: f64, epsilon: f64) -> Result<Self> {
        if !(0.0 < angle && angle < PI / 2.0) || epsilon <= 0.0 {
            return Err(domain("exponential sector needs 0 < angle < pi/2 and epsilon > 0"));
        }
        Ok(SectorSpec { theta0: angle, epsilon, variant: SectorVariant::RightHalfPlane })
    }

    pub fn finite_disk(radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(domain("disk radius must be positive"));
        }
        Ok(SectorSpec { theta0: 0.0, epsilon: radius, variant: SectorVariant::FiniteDisk { radius } })
    }

    /// 40 log-spaced moduli in `[epsilon, 1e4]` times 9 angles across the
    /// sector, plus 16 points on the epsilon circle.
    pub fn lambda_samples(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        let lo = libm::log10(self.epsilon);
        let hi = 4.0f64.max(lo + 1.0);
        let moduli: Vec<f64> = (0..40).map(|i| libm::pow(10.0, lo + (hi - lo) * i as f64 / 39.0)).collect();
        match self.variant {
            SectorVariant::FiniteDisk { radius } => {
                for &r in &moduli {
                    for k in 0..16 {
                        out.push(Complex64::from_polar(r.max(radius), 2.0 * PI * k as f64 / 16.0));
                    }
                }
            }
            _ => {
                let span = 2.0 * PI - 2.0 * self.theta0;
                for &r in &moduli {
                    for k in 0..9 {
                        out.push(Complex64::from_polar(r, self.theta0 + span * k as f64 / 8.0));
                    }
                }
                for k in 0..16 {
                    out.push(Complex64::from_polar(self.epsilon, 2.0 * PI * k as f64 / 16.0));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Constant(Complex64),
    BesselPower(f64),
    LaplacePlusOne,
    PerturbedElliptic { m: f64, rho: f64, delta: f64, eps0: f64 },
    ZeroOrder { eps0: f64 },
    NegativeOrder { order: f64, eps0: f64 },
    /// `c * eta_axis`
    EtaLinear { coef: Complex64, axis: usize },
}

/// `amp * e^{i k.x} * <eta>^order * (1 + tilt * eta_1 / <eta>)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub k: [i64; 2],
    pub amp: Complex64,
    pub order: f64,
    pub tilt: f64,
}

#[derive(Debug, Clone)]
pub enum SymbolKind {
    Family(Family),
    Trig(Vec<TrigTerm>),
    /// `scale * inner + shift`
    Affine { scale: Complex64, shift: Complex64, inner: Arc<SymbolField> },
    Conj(Arc<SymbolField>),
    /// Lattice samples only; no continuum evaluator or derivatives.
    Sampled(GridField),
}

#[derive(Debug, Clone)]
pub struct SymbolField {
    grid: TorusGrid,
    class: SymbolClassSpec,
    kind: SymbolKind,
    label: String,
    samples: OnceCell<GridField>,
}

pub const MAX_EPS0: f64 = 0.25;

impl SymbolField {
    pub fn new(grid: &TorusGrid, class: SymbolClassSpec, kind: SymbolKind, label: impl Into<String>) -> Result<Self> {
        if let SymbolKind::Sampled(f) = &kind {
            if f.grid() != grid {
                return Err(domain("sampled field lives on a different grid"));
            }
        }
        Ok(SymbolField { grid: grid.clone(), class, kind, label: label.into(), samples: OnceCell::new() })
    }

    pub fn family(grid: &TorusGrid, fam: Family) -> Result<Self> {
        let check_eps = |e: f64| {
            if e.abs() > MAX_EPS0 {
                Err(domain(format!("eps0 = {e} exceeds 1/4 and breaks the positivity margin")))
            } else {
                Ok(())
            }
        };
        let (class, label) = match fam {
            Family::Constant(c) => (SymbolClassSpec::classical(0.0), format!("constant({c})")),
            Family::BesselPower(m) => (SymbolClassSpec::classical(m), format!("bessel_power({m})")),
            Family::LaplacePlusOne => (SymbolClassSpec::classical(2.0), String::from("laplace_plus_one")),
            Family::PerturbedElliptic { m, rho, delta, eps0 } => {
                check_eps(eps0)?;
                if m <= 0.0 {
                    return Err(domain("perturbed_elliptic needs positive order"));
                }
                (SymbolClassSpec::new(m, rho, delta)?, format!("perturbed_elliptic({m},{rho},{delta},{eps0})"))
            }
            Family::ZeroOrder { eps0 } => {
                check_eps(eps0)?;
                (SymbolClassSpec::new(0.0, 0.5, 0.0)?, format!("zero_order({eps0})"))
            }
            Family::NegativeOrder { order, eps0 } => {
                check_eps(eps0)?;
                if order >= 0.0 {
                    return Err(domain("negative_order needs a negative order"));
                }
                (SymbolClassSpec::classical(order), format!("negative_order({order},{eps0})"))
            }
            Family::EtaLinear { axis, .. } => {
                if axis >= grid.dim() {
                    return Err(domain("eta axis exceeds torus dimension"));
                }
                (SymbolClassSpec::classical(1.0), format!("eta_linear(axis {axis})"))
            }
        };
        Self::new(grid, class, SymbolKind::Family(fam), label)
    }

    pub fn trig(grid: &TorusGrid, terms: Vec<TrigTerm>) -> Result<Self> {
        let m = terms.iter().fold(f64::NEG_INFINITY, |a, t| a.max(t.order));
        let m = if terms.is_empty() { 0.0 } else { m };
        Self::new(grid, SymbolClassSpec::classical(m), SymbolKind::Trig(terms), "trig")
    }

    pub fn sampled(field: GridField, class: SymbolClassSpec, label: impl Into<String>) -> Result<Self> {
        let g = field.grid().clone();
        Self::new(&g, class, SymbolKind::Sampled(field), label)
    }

    pub fn affine(inner: &SymbolField, scale: Complex64, shift: Complex64) -> Self {
        let m = if scale.norm() == 0.0 { 0.0 } else if shift.norm() == 0.0 { inner.class.m } else { inner.class.m.max(0.0) };
        let class = SymbolClassSpec { m, ..inner.class };
        SymbolField {
            grid: inner.grid.clone(),
            class,
            kind: SymbolKind::Affine { scale, shift, inner: Arc::new(inner.clone()) },
            label: format!("{scale}*({})+{shift}", inner.label),
            samples: OnceCell::new(),
        }
    }

    pub fn conj(inner: &SymbolField) -> Self {
        SymbolField {
            grid: inner.grid.clone(),
            class: inner.class,
            kind: SymbolKind::Conj(Arc::new(inner.clone())),
            label: format!("conj({})", inner.label),
            samples: OnceCell::new(),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn class(&self) -> &SymbolClassSpec {
        &self.class
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_continuum(&self) -> bool {
        match &self.kind {
            SymbolKind::Sampled(_) => false,
            SymbolKind::Affine { inner, .. } | SymbolKind::Conj(inner) => inner.has_continuum(),
            _ => true,
        }
    }

    /// True when the symbol provably does not depend on x.
    pub fn is_x_independent(&self) -> bool {
        match &self.kind {
            SymbolKind::Family(f) => match *f {
                Family::PerturbedElliptic { eps0, .. } | Family::ZeroOrder { eps0 } | Family::NegativeOrder { eps0, .. } => {
                    eps0 == 0.0
                }
                _ => true,
            },
            SymbolKind::Trig(ts) => ts.iter().all(|t| t.k == [0, 0] || t.amp.norm() == 0.0),
            SymbolKind::Affine { scale, inner, .. } => scale.norm() == 0.0 || inner.is_x_independent(),
            SymbolKind::Conj(inner) => inner.is_x_independent(),
            SymbolKind::Sampled(f) => {
                let m = self.grid.points();
                (0..m).all(|e| (1..m).all(|xi| (f.at(xi, e) - f.at(0, e)).norm() <= 1e-15 * (1.0 + f.at(0, e).norm())))
            }
        }
    }

    /// True when the symbol provably does not depend on eta.
    pub fn is_eta_independent(&self) -> bool {
        match &self.kind {
            SymbolKind::Family(f) => matches!(f, Family::Constant(_)),
            SymbolKind::Trig(ts) => ts.iter().all(|t| t.order == 0.0 && t.tilt == 0.0),
            SymbolKind::Affine { scale, inner, .. } => scale.norm() == 0.0 || inner.is_eta_independent(),
            SymbolKind::Conj(inner) => inner.is_eta_independent(),
            SymbolKind::Sampled(_) => false,
        }
    }

    /// True when `d^g a` is identically zero for structural reasons.
    pub fn derivative_vanishes(&self, g: &DerivIndex) -> bool {
        if self.grid.dim() == 1 && (g[ETA2] > 0 || g[X2] > 0) {
            return true;
        }
        if matches!(self.kind, SymbolKind::Sampled(_)) {
            return false;
        }
        let eta = g[ETA1] + g[ETA2] > 0;
        let x = g[X1] + g[X2] > 0;
        (eta && self.is_eta_independent()) || (x && self.is_x_independent())
    }

    /// Evaluate with any scalar type; `None` for sampled symbols.
    pub fn eval_generic<S: SymScalar>(&self, x: &[S; 2], eta: &[S; 2]) -> Option<S> {
        let one = x[0].real(1.0);
        let br2 = one.clone() + eta[0].clone() * eta[0].clone() + eta[1].clone() * eta[1].clone();
        let v = match &self.kind {
            SymbolKind::Family(f) => match *f {
                Family::Constant(c) => one.lift(c),
                Family::BesselPower(m) => br2.powf(m / 2.0),
                Family::LaplacePlusOne => br2,
                Family::PerturbedElliptic { m, rho, eps0, .. } => {
                    let br = br2.sqrt();
                    let osc = br.powf(1.0 - rho).cos();
                    br2.powf(m / 2.0) * (one.clone() + one.real(eps0) * x[0].sin() * osc)
                }
                Family::ZeroOrder { eps0 } => {
                    let osc = br2.powf(0.25).cos();
                    one.clone() + one.real(eps0) * x[0].sin() * osc
                }
                Family::NegativeOrder { order, eps0 } => {
                    br2.powf(order / 2.0) * (one.clone() + one.real(eps0) * x[0].sin())
                }
                Family::EtaLinear { coef, axis } => one.lift(coef) * eta[axis].clone(),
            },
            SymbolKind::Trig(ts) => {
                let mut acc = one.real(0.0);
                for t in ts {
                    let ph = (x[0].clone() * one.real(t.k[0] as f64) + x[1].clone() * one.real(t.k[1] as f64))
                        * one.lift(Complex64::new(0.0, 1.0));
                    let mut term = one.lift(t.amp) * ph.exp();
                    if t.order != 0.0 {
                        term = term * br2.powf(t.order / 2.0);
                    }
                    if t.tilt != 0.0 {
                        term = term * (one.clone() + one.real(t.tilt) * eta[0].clone() * br2.powf(-0.5));
                    }
                    acc = acc + term;
                }
                acc
            }
            SymbolKind::Affine { scale, shift, inner } => {
                inner.eval_generic(x, eta)? * one.lift(*scale) + one.lift(*shift)
            }
            SymbolKind::Conj(inner) => inner.eval_generic(x, eta)?.conj(),
            SymbolKind::Sampled(_) => return None,
        };
        Some(v)
    }

    /// Point value at real `(x, eta)`; `eta` need not be an integer.
    pub fn eval(&self, x: [f64; 2], eta: [f64; 2]) -> Result<Complex64> {
        let c = |v: f64| Complex64::new(v, 0.0);
        self.eval_generic(&[c(x[0]), c(x[1])], &[c(eta[0]), c(eta[1])])
            .ok_or_else(|| domain("sampled symbol has no continuum evaluator"))
    }

    /// Taylor jet at `(x, eta)` in the layout's variables.
    pub fn jet(&self, x: [f64; 2], eta: [f64; 2], layout: &Arc<JetLayout>) -> Option<Jet> {
        let var = |slot: usize, v: f64| {
            if layout.slots().contains(&slot) {
                Jet::variable(layout, slot, v)
            } else {
                Jet::constant(layout, Complex64::new(v, 0.0))
            }
        };
        let xs = [var(X1, x[0]), var(X2, x[1])];
        let es = [var(ETA1, eta[0]), var(ETA2, eta[1])];
        self.eval_generic(&xs, &es)
    }

    /// Exact mixed partial `d^g a` at `(x, eta)`.
    pub fn derivative(&self, x: [f64; 2], eta: [f64; 2], g: &DerivIndex) -> Result<Complex64> {
        if self.grid.dim() == 1 && (g[ETA2] > 0 || g[X2] > 0) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let layout = JetLayout::for_dimension(self.grid.dim(), index_order(g));
        self.jet(x, eta, &layout)
            .map(|j| j.derivative(g))
            .ok_or_else(|| domain("sampled symbol has no derivative callbacks"))
    }

    /// Lattice samples, computed once.
    pub fn samples(&self) -> &GridField {
        self.samples.get_or_init(|| match &self.kind {
            SymbolKind::Sampled(f) => f.clone(),
            SymbolKind::Affine { scale, shift, inner } => inner.samples().map(|v| v * scale + shift),
            SymbolKind::Conj(inner) => inner.samples().map(|v| v.conj()),
            _ => GridField::from_fn(&self.grid, |xi, e| {
                self.eval(self.grid.x_point(xi), self.grid.eta_point(e)).unwrap()
            }),
        })
    }

    /// `d_eta^alpha a` on the lattice: exact when callbacks exist, else the
    /// fourth-order stencil on the continuum evaluator.
    pub fn finite_difference_eta(&self, alpha: [usize; 2]) -> Result<GridField> {
        if !self.has_continuum() {
            return Err(domain("eta differences need a continuum evaluator"));
        }
        let g = &self.grid;
        let mut vals = Vec::with_capacity(g.points() * g.points());
        for xi in 0..g.points() {
            let x = g.x_point(xi);
            let f = |eta: [f64; 2]| self.eval(x, eta).unwrap();
            for e in 0..g.points() {
                vals.push(finite_difference_eta(&f, g.eta_point(e), alpha)?);
            }
        }
        GridField::new(g, vals)
    }

    /// Field of `d^g a` over the whole grid.
    pub fn derivative_field(&self, g: &DerivIndex) -> Result<GridField> {
        if !self.has_continuum() {
            if g[ETA1] + g[ETA2] > 0 {
                return Err(domain("sampled symbol has no eta derivatives"));
            }
            let mut f = self.samples().clone();
            for (axis, slot) in [(0usize, X1), (1usize, X2)] {
                if g[slot] > 0 {
                    f = f.derivative_x(axis, g[slot] as usize)?;
                }
            }
            return Ok(f);
        }
        let grid = &self.grid;
        let layout = JetLayout::for_dimension(grid.dim(), index_order(g));
        let m = grid.points();
        let mut vals = Vec::with_capacity(m * m);
        for xi in 0..m {
            for e in 0..m {
                let j = self.jet(grid.x_point(xi), grid.eta_point(e), &layout).unwrap();
                vals.push(j.derivative(g));
            }
        }
        GridField::new(grid, vals)
    }
}

/// `sup |d_eta^alpha d_x^q a| <eta>^{-m - delta|q| + rho|alpha|}` over the grid.
pub fn seminorm_estimate(s: &SymbolField, alpha: [usize; 2], q: [usize; 2]) -> Result<f64> {
    let total = alpha[0] + alpha[1] + q[0] + q[1];
    if total > 4 {
        return Err(Error::UnsupportedOrder { order: total, limit: 4 });
    }
    let g: DerivIndex = [alpha[0] as u8, alpha[1] as u8, q[0] as u8, q[1] as u8];
    let f = s.derivative_field(&g)?;
    let c = s.class();
    let w = -c.m - c.delta * (q[0] + q[1]) as f64 + c.rho * (alpha[0] + alpha[1]) as f64;
    let grid = s.grid();
    let m = grid.points();
    let mut sup = 0.0f64;
    for xi in 0..m {
        for e in 0..m {
            sup = sup.max(f.at(xi, e).norm() * libm::pow(bracket(&grid.eta_point(e)), w));
        }
    }
    Ok(sup)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityReport {
    pub constant: f64,
    pub worst_lambda: Complex64,
    pub worst_eta: [f64; 2],
    pub worst_x: [f64; 2],
}

/// `sup |(a - lambda)^{-1}| / bound` with bound `(|lambda|^{1/m} + <eta>)^{-m}`
/// for `m > 0` and `(|lambda| + 1)^{-1}` otherwise, over `|lambda| + <eta> >= c_k`.
pub fn parameter_ellipticity_check(s: &SymbolField, sector: &SectorSpec, lambdas: &[Complex64], c_k: f64) -> Result<EllipticityReport> {
    let _ = sector;
    let grid = s.grid();
    let samp = s.samples();
    let m = s.class().m;
    let pts = grid.points();
    let mut rep = EllipticityReport { constant: 0.0, worst_lambda: Complex64::new(0.0, 0.0), worst_eta: [0.0; 2], worst_x: [0.0; 2] };
    for &lam in lambdas {
        for xi in 0..pts {
            for e in 0..pts {
                let eta = grid.eta_point(e);
                let br = bracket(&eta);
                if lam.norm() + br < c_k {
                    continue;
                }
                let a = samp.at(xi, e);
                let d = a - lam;
                if d.norm() <= 1e-14 * (a.norm() + lam.norm()) {
                    return Err(Error::DegenerateSample { x: grid.x_point(xi), eta, lambda: lam });
                }
                let bound = if m > 0.0 {
                    libm::pow(libm::pow(lam.norm(), 1.0 / m) + br, -m)
                } else {
                    1.0 / (lam.norm() + 1.0)
                };
                let v = 1.0 / (d.norm() * bound);
                if v > rep.constant {
                    rep = EllipticityReport { constant: v, worst_lambda: lam, worst_eta: eta, worst_x: grid.x_point(xi) };
                }
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveReal {
    pub positive: bool,
    pub margin: f64,
}

/// Smallest real part of the spectrum; positive real when `>= -1e-10`.
pub fn positive_real_check(a: &OperatorMatrix) -> Result<PositiveReal> {
    let ev = a.eigenvalues()?;
    let margin = ev.iter().fold(f64::INFINITY, |m, v| m.min(v.re));
    Ok(PositiveReal { positive: margin >= -1e-10, margin })
}
