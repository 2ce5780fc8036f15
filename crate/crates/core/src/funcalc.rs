//! Holomorphic functional calculus: contour quadrature, the spectral oracle
//! and the symbol expansion, plus the named operators built on them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::calculus::ParametrixExpansion;
use crate::contour::{nodes_and_weights, truncation_bound, Branch, ContourKind, ContourSpec, Decay, QuadratureSpec};
use crate::error::{domain, Error, Result};
use crate::quantize::OperatorMatrix;
use crate::spectral::eigen_decompose;
use crate::symbols::{positive_real_check, SymbolClassSpec, SymbolField};

type C = Complex64;

fn c(v: f64) -> C {
    C::new(v, 0.0)
}

/// Functions the calculus can be applied to. Branch cuts sit on `(-inf, 0]`
/// with `arg in (-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub enum HoloFunction {
    Power(C),
    /// `e^{-t lambda}`
    ExpScaled(f64),
    Log,
    /// Coefficients in ascending powers.
    Rational { num: Vec<C>, den: Vec<C> },
    /// `lambda^z log lambda`, the z-derivative of the power family.
    PowerLog(C),
}

/// Growth of `|f|` at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    Power(f64),
    ExpDecay(f64),
    /// Logarithmic factor on top of `|lambda|^s`.
    PowerLog(f64),
}

fn trim(p: &[C]) -> &[C] {
    let mut n = p.len();
    while n > 0 && p[n - 1] == c(0.0) {
        n -= 1;
    }
    &p[..n]
}

fn horner(p: &[C], x: C) -> C {
    p.iter().rev().fold(c(0.0), |acc, &k| acc * x + k)
}

/// Taylor coefficients of `p` around `a`, up to degree `order`.
fn shift_poly(p: &[C], a: C, order: usize) -> Vec<C> {
    let mut work = p.to_vec();
    let mut out = vec![c(0.0); order + 1];
    // repeated synthetic division
    for slot in out.iter_mut() {
        if work.is_empty() {
            break;
        }
        let mut rem = c(0.0);
        let mut q = vec![c(0.0); work.len().saturating_sub(1)];
        for i in (0..work.len()).rev() {
            rem = rem * a + work[i];
            if i > 0 {
                q[i - 1] = rem;
            }
        }
        *slot = rem;
        work = q;
    }
    out
}

fn binom_c(z: C, p: usize) -> C {
    let mut b = c(1.0);
    for i in 0..p {
        b = b * (z - i as f64) / (i + 1) as f64;
    }
    b
}

fn branch_log(l: C, br: Branch) -> C {
    let arg = match br {
        Branch::Principal => l.arg(),
        Branch::Upper => PI,
        Branch::Lower => -PI,
    };
    C::new(libm::log(l.norm()), arg)
}

impl HoloFunction {
    pub fn name(&self) -> String {
        match self {
            HoloFunction::Power(z) => format!("power(z={z})"),
            HoloFunction::ExpScaled(t) => format!("exp(t={t})"),
            HoloFunction::Log => "log".into(),
            HoloFunction::Rational { num, den } => format!("rational(num={num:?}, den={den:?})"),
            HoloFunction::PowerLog(z) => format!("power_log(z={z})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HoloFunction::ExpScaled(t) if !(*t > 0.0) => Err(domain("exp_scaled needs t > 0")),
            HoloFunction::Rational { den, .. } if trim(den).is_empty() => Err(domain("rational denominator is zero")),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, l: C) -> C {
        self.eval_branch(l, Branch::Principal)
    }

    pub fn eval_branch(&self, l: C, br: Branch) -> C {
        match self {
            HoloFunction::Power(z) => {
                if *z == c(0.0) {
                    return c(1.0);
                }
                (z * branch_log(l, br)).exp()
            }
            HoloFunction::ExpScaled(t) => (-l * *t).exp(),
            HoloFunction::Log => branch_log(l, br),
            HoloFunction::Rational { num, den } => horner(num, l) / horner(den, l),
            HoloFunction::PowerLog(z) => {
                let lg = branch_log(l, br);
                (z * lg).exp() * lg
            }
        }
    }

    /// `f^(p)(a) / p!`
    pub fn taylor(&self, p: usize, a: C) -> C {
        match self {
            HoloFunction::Power(z) => binom_c(*z, p) * HoloFunction::Power(z - p as f64).eval(a),
            HoloFunction::ExpScaled(t) => {
                let mut k = (-a * *t).exp();
                for i in 1..=p {
                    k *= -*t / i as f64;
                }
                k
            }
            HoloFunction::Log => {
                if p == 0 {
                    a.ln()
                } else {
                    let s = if p % 2 == 1 { 1.0 } else { -1.0 };
                    c(s) / (a.powu(p as u32) * p as f64)
                }
            }
            HoloFunction::Rational { num, den } => {
                let n = shift_poly(num, a, p);
                let d = shift_poly(den, a, p);
                let mut q = vec![c(0.0); p + 1];
                for k in 0..=p {
                    let mut acc = n[k];
                    for i in 1..=k {
                        acc -= d[i] * q[k - i];
                    }
                    q[k] = acc / d[0];
                }
                q[p]
            }
            HoloFunction::PowerLog(z) => {
                // Cauchy product of lambda^z and log lambda
                let pw = HoloFunction::Power(*z);
                (0..=p).map(|i| pw.taylor(i, a) * HoloFunction::Log.taylor(p - i, a)).sum()
            }
        }
    }

    pub fn derivative(&self, p: usize, a: C) -> C {
        let fact: f64 = (1..=p).map(|i| i as f64).product();
        self.taylor(p, a) * fact
    }

    pub fn growth(&self) -> Growth {
        match self {
            HoloFunction::Power(z) => Growth::Power(z.re),
            HoloFunction::ExpScaled(t) => Growth::ExpDecay(*t),
            HoloFunction::Log => Growth::PowerLog(0.0),
            HoloFunction::Rational { num, den } => Growth::Power(trim(num).len() as f64 - trim(den).len() as f64),
            HoloFunction::PowerLog(z) => Growth::PowerLog(z.re),
        }
    }

    /// True when `f` is cut along `(-inf, 0]`.
    pub fn has_branch_cut(&self) -> bool {
        match self {
            HoloFunction::Power(z) => z.im != 0.0 || z.re.fract() != 0.0,
            HoloFunction::Log | HoloFunction::PowerLog(_) => true,
            _ => false,
        }
    }

    /// Isolated poles.
    pub fn poles(&self) -> Result<Vec<C>> {
        match self {
            HoloFunction::Power(z) if !self.has_branch_cut() && z.re < 0.0 => Ok(vec![c(0.0)]),
            HoloFunction::Rational { den, .. } => polynomial_roots(trim(den)),
            _ => Ok(Vec::new()),
        }
    }

    /// Singular set meets the point `l`.
    fn singular_at(&self, l: C, poles: &[C]) -> bool {
        let on_cut = self.has_branch_cut() && l.re <= 0.0 && l.im.abs() <= 1e-12 * l.norm().max(1e-300);
        on_cut || poles.iter().any(|p| (p - l).norm() <= 1e-12 * (1.0 + p.norm()))
    }
}

/// Roots through the companion matrix.
fn polynomial_roots(p: &[C]) -> Result<Vec<C>> {
    let d = p.len().saturating_sub(1);
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = p[d];
    let comp = DMatrix::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -p[i] / lead
        } else if i == j + 1 {
            c(1.0)
        } else {
            c(0.0)
        }
    });
    Ok(eigen_decompose(&comp)?.values)
}

fn hit(eigenvalue: C, what: impl Into<String>) -> Error {
    Error::SpectrumHit { eigenvalue, what: what.into() }
}

/// Suggested finite loop around the spectrum that stays clear of `(-inf, 0]`.
pub fn auto_loop(eigs: &[C]) -> Result<ContourSpec> {
    if eigs.is_empty() {
        return Err(domain("empty spectrum"));
    }
    let (mut lo, mut hi) = (C::new(f64::INFINITY, f64::INFINITY), C::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for e in eigs {
        lo = C::new(lo.re.min(e.re), lo.im.min(e.im));
        hi = C::new(hi.re.max(e.re), hi.im.max(e.im));
    }
    let center = (lo + hi) * 0.5;
    let spread = eigs.iter().fold(0.0f64, |m, e| m.max((e - center).norm()));
    let clearance = if center.re > 0.0 { center.norm() } else { center.im.abs() };
    if spread >= clearance {
        return Err(hit(eigs[0], "no disk around the spectrum avoids (-inf, 0]"));
    }
    let radius = libm::sqrt(spread.max(1e-3 * clearance) * clearance);
    ContourSpec::finite_loop(center, radius)
}

/// Spectral pre-check and, for rays, the `A^k` split and truncation radius.
struct Plan {
    contour: ContourSpec,
    split: u32,
}

fn plan(eigs: &[C], f: &HoloFunction, c0: &ContourSpec, q: &QuadratureSpec) -> Result<Plan> {
    f.validate()?;
    c0.validate()?;
    let poles = f.poles()?;
    let rho = eigs.iter().fold(0.0f64, |m, e| m.max(e.norm()));
    let ray_plan = |decay: Decay, split: u32| -> Result<Plan> {
        let r = match c0.r_max {
            Some(r) => r,
            None => truncation_bound(c0, decay, q.tail_tol)?.max(4.0 * rho),
        };
        Ok(Plan { contour: c0.with_r_max(r)?, split })
    };
    match c0.kind {
        ContourKind::Keyhole => {
            for &e in eigs {
                if e.norm() <= c0.epsilon || (e.re <= 0.0 && e.im.abs() <= 1e-12 * e.norm()) {
                    return Err(hit(e, format!("keyhole (epsilon = {})", c0.epsilon)));
                }
            }
            // f must be holomorphic to the right of the keyhole
            for &p in &poles {
                let inside = p.norm() < c0.epsilon || (p.re < 0.0 && p.im.abs() <= 1e-12 * p.norm());
                if !inside {
                    return Err(Error::Precondition(format!("pole of f at {p} lies in the region enclosed by the keyhole")));
                }
            }
            let s = match f.growth() {
                Growth::Power(s) => s,
                Growth::PowerLog(_) if matches!(f, HoloFunction::Log) => {
                    return Err(Error::Precondition("log has its branch cut on the keyhole; use a finite loop".into()))
                }
                Growth::PowerLog(s) => s + 0.1,
                Growth::ExpDecay(_) => {
                    return Err(Error::Precondition("f is not power-bounded on the keyhole; use the exponential contour".into()))
                }
            };
            let k = if s > -1.0 { (libm::ceil(s) as i64 + 1).max(1) as u32 } else { 0 };
            ray_plan(Decay::Power(s - k as f64), k)
        }
        ContourKind::Exponential { angle } => {
            for &e in eigs {
                if e.norm() <= c0.epsilon || e.arg().abs() >= angle {
                    return Err(hit(e, format!("exponential contour (angle = {angle})")));
                }
            }
            for &p in &poles {
                if p.norm() > c0.epsilon && p.arg().abs() < angle {
                    return Err(Error::Precondition(format!("pole of f at {p} lies inside the exponential contour")));
                }
            }
            match f.growth() {
                Growth::ExpDecay(t) => ray_plan(Decay::Exp(t), 0),
                Growth::Power(s) if s < 0.0 => ray_plan(Decay::Power(s), 0),
                _ => Err(Error::Precondition(format!("{} does not decay along the exponential rays", f.name()))),
            }
        }
        ContourKind::FiniteLoop { center, radius } => {
            for &e in eigs {
                if (e - center).norm() >= radius {
                    return Err(hit(e, format!("finite loop (center {center}, radius {radius})")));
                }
            }
            if f.has_branch_cut() {
                let clearance = if center.re > 0.0 { center.norm() } else { center.im.abs() };
                if clearance <= radius {
                    return Err(Error::Precondition(format!("loop (center {center}, radius {radius}) crosses the branch cut of {}", f.name())));
                }
            }
            for &p in &poles {
                if (p - center).norm() <= radius {
                    return Err(Error::Precondition(format!("pole of f at {p} lies inside the loop")));
                }
            }
            Ok(Plan { contour: *c0, split: 0 })
        }
    }
}

/// `(1/2 pi i) sum_k w_k f(lambda_k) (A - lambda_k)^{-1}` with dense solves.
pub fn f_of_a_contour(a: &OperatorMatrix, f: &HoloFunction, c0: &ContourSpec, q: &QuadratureSpec) -> Result<OperatorMatrix> {
    let eigs = a.eigenvalues()?;
    let p = plan(eigs, f, c0, q)?;
    let nodes = nodes_and_weights(&p.contour, q)?;
    let k = p.split as i32;
    // coefficients per distinct node; both keyhole rays share lambda = -r
    let mut coeff: BTreeMap<(u64, u64), (C, C)> = BTreeMap::new();
    let two_pi_i = C::new(0.0, 2.0 * PI);
    for n in &nodes {
        let g = f.eval_branch(n.lambda, n.branch) * n.lambda.powi(-k);
        let v = n.weight * g / two_pi_i;
        let e = coeff.entry((n.lambda.re.to_bits(), n.lambda.im.to_bits())).or_insert((n.lambda, c(0.0)));
        e.1 += v;
    }
    let m = a.matrix().nrows();
    let mut acc = DMatrix::from_element(m, m, c(0.0));
    for (_, (lam, w)) in coeff {
        if w == c(0.0) {
            continue;
        }
        let inv = a.shift(lam).into_matrix().lu().try_inverse().ok_or_else(|| hit(lam, "contour node"))?;
        acc += inv * w;
    }
    for _ in 0..k {
        acc = a.matrix() * acc;
    }
    OperatorMatrix::from_matrix(a.grid(), acc, format!("{} via contour", f.name()))
}

/// Oracle `V f(D) V^{-1}`.
pub fn f_of_a_spectral(a: &OperatorMatrix, f: &HoloFunction) -> Result<OperatorMatrix> {
    f.validate()?;
    let poles = f.poles()?;
    let eig = a.eigen()?;
    for &e in &eig.values {
        if f.singular_at(e, &poles) {
            return Err(hit(e, format!("singular set of {}", f.name())));
        }
    }
    OperatorMatrix::from_matrix(a.grid(), eig.apply(|mu| f.eval(mu)), format!("{} via eigendecomposition", f.name()))
}

/// Symbol of `f(A)` keeping the leading term and the first `grade`
/// corrections, where grade counts eta-derivatives (each lowers the order by
/// `rho - delta`). Grade `k` is complete once `K >= k` and `J >= k`.
pub fn f_of_symbol_expansion(px: &ParametrixExpansion, f: &HoloFunction, grade: usize) -> Result<SymbolField> {
    f.validate()?;
    let limit = px.k.min(px.j);
    if grade > limit {
        return Err(Error::UnsupportedOrder { order: grade, limit });
    }
    let terms = px.terms.truncate_grade(grade);
    let field = terms.cauchy_apply(&|p, av| f.taylor(p, av));
    if !field.is_finite() {
        return Err(domain(format!("{} is singular on the range of the symbol", f.name())));
    }
    let base = px.base.class();
    let m = match f {
        HoloFunction::Power(z) => base.m * z.re,
        _ => 0.0,
    };
    let class = SymbolClassSpec::new(m, base.rho, base.delta)?;
    SymbolField::sampled(field, class, format!("{} of {}", f.name(), px.base.label()))
}

/// `A^z` on the keyhole; `Re z >= 0` goes through `A^k A^{z-k}`.
pub fn complex_power(a: &OperatorMatrix, z: C, c0: &ContourSpec, q: &QuadratureSpec) -> Result<OperatorMatrix> {
    f_of_a_contour(a, &HoloFunction::Power(z), c0, q)
}

/// `e^{-tA}` on the exponential contour.
pub fn heat_operator(a: &OperatorMatrix, t: f64, c0: &ContourSpec, q: &QuadratureSpec) -> Result<OperatorMatrix> {
    if !matches!(c0.kind, ContourKind::Exponential { .. }) {
        return Err(domain("heat operator needs an exponential contour"));
    }
    let pr = positive_real_check(a)?;
    if !(pr.margin > 0.0) {
        return Err(Error::Precondition(format!("positive-real margin {} is not positive", pr.margin)));
    }
    f_of_a_contour(a, &HoloFunction::ExpScaled(t), c0, q)
}

pub fn log_operator(a: &OperatorMatrix, loop_spec: &ContourSpec, q: &QuadratureSpec) -> Result<OperatorMatrix> {
    if !matches!(loop_spec.kind, ContourKind::FiniteLoop { .. }) {
        return Err(domain("log operator needs a finite loop"));
    }
    f_of_a_contour(a, &HoloFunction::Log, loop_spec, q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupCheck {
    /// `|A^s A^t - A^{s+t}| / |A^{s+t}|` (Frobenius)
    pub group_residual: f64,
    /// `|A^s A^{-s} - I| / |I|` (Frobenius)
    pub inverse_residual: f64,
}

pub fn power_group_check(a: &OperatorMatrix, s: C, t: C, c0: &ContourSpec, q: &QuadratureSpec) -> Result<GroupCheck> {
    let ps = complex_power(a, s, c0, q)?;
    let pt = complex_power(a, t, c0, q)?;
    let pst = complex_power(a, s + t, c0, q)?;
    let pms = complex_power(a, -s, c0, q)?;
    let id = OperatorMatrix::identity(a.grid());
    let rel = |x: &OperatorMatrix, y: &OperatorMatrix| x.sub(y).frobenius() / y.frobenius();
    Ok(GroupCheck { group_residual: rel(&ps.mul(&pt), &pst), inverse_residual: rel(&ps.mul(&pms), &id) })
}

/// Central difference of `z -> A^z` at `z0` against the contour integral of
/// `lambda^{z0} log lambda`; returns the relative gap.
pub fn power_analyticity_check(a: &OperatorMatrix, z0: C, h: f64, c0: &ContourSpec, q: &QuadratureSpec) -> Result<f64> {
    let up = complex_power(a, z0 + h, c0, q)?;
    let dn = complex_power(a, z0 - h, c0, q)?;
    let fd = up.sub(&dn).scale(c(0.5 / h));
    let exact = f_of_a_contour(a, &HoloFunction::PowerLog(z0), c0, q)?;
    Ok(fd.sub(&exact).frobenius() / exact.frobenius())
}

/// Relative Frobenius distance.
pub fn relative_distance(x: &OperatorMatrix, oracle: &OperatorMatrix) -> f64 {
    x.sub(oracle).frobenius() / oracle.frobenius()
}

/// Diagonal-oracle helper: `f` applied to the Fourier multiplier of an
/// x-independent symbol.
pub fn multiplier_of(s: &Arc<SymbolField>, f: impl Fn(C) -> C) -> Result<OperatorMatrix> {
    if !s.is_x_independent() {
        return Err(domain("diagonal oracle needs an x-independent symbol"));
    }
    let g = s.grid();
    let vals: Vec<C> = (0..g.points()).map(|e| f(s.samples().at(0, e))).collect();
    OperatorMatrix::fourier_multiplier(g, &vals, "diagonal oracle")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::quantize::op_tau0;
    use crate::symbols::Family;

    fn keyhole() -> ContourSpec {
        ContourSpec::keyhole(0.25, None).unwrap()
    }

    fn expo() -> ContourSpec {
        ContourSpec::exponential(0.25, None, PI / 4.0).unwrap()
    }

    #[test]
    fn taylor_matches_finite_differences() {
        let fs = [
            HoloFunction::Power(C::new(-0.5, 0.3)),
            HoloFunction::ExpScaled(0.7),
            HoloFunction::Log,
            HoloFunction::Rational { num: vec![c(1.0), c(2.0)], den: vec![c(1.0), c(0.0), c(1.0)] },
            HoloFunction::PowerLog(c(-1.0)),
        ];
        let pts = [C::new(1.3, 0.2), C::new(2.0, -0.7), C::new(0.6, 0.1)];
        let h = 1e-3;
        for f in &fs {
            for &a in &pts {
                for p in 1..=3 {
                    // fourth-order central difference of f^{(p-1)}
                    let g = |x: C| f.derivative(p - 1, x);
                    let fd = (g(a - 2.0 * h) - g(a + 2.0 * h) + (g(a + h) - g(a - h)) * 8.0) / (12.0 * h);
                    assert!((fd - f.derivative(p, a)).norm() < 1e-6 * (1.0 + fd.norm()), "{} p={p}", f.name());
                }
            }
        }
    }

    #[test]
    fn branches_on_the_cut() {
        let f = HoloFunction::Power(c(0.5));
        assert!((f.eval_branch(c(-4.0), Branch::Upper) - C::new(0.0, 2.0)).norm() < 1e-14);
        assert!((f.eval_branch(c(-4.0), Branch::Lower) - C::new(0.0, -2.0)).norm() < 1e-14);
        assert!((HoloFunction::Log.eval(c(-1.0)) - C::new(0.0, PI)).norm() < 1e-15);
        assert!(HoloFunction::Power(c(-2.0)).poles().unwrap() == vec![c(0.0)]);
    }

    #[test]
    fn scalar_heat() {
        let g = TorusGrid::new(1, 8).unwrap();
        let a = OperatorMatrix::scalar(&g, c(2.5));
        let e = f_of_a_contour(&a, &HoloFunction::ExpScaled(1.0), &expo(), &QuadratureSpec::default()).unwrap();
        let want = OperatorMatrix::scalar(&g, c(libm::exp(-2.5)));
        assert!(e.sub(&want).frobenius() < 1e-8);
    }

    #[test]
    fn bessel_oracles() {
        let g = TorusGrid::new(1, 32).unwrap();
        let s = Arc::new(SymbolField::family(&g, Family::BesselPower(2.0)).unwrap());
        let a = op_tau0(&s);
        let q = QuadratureSpec::default();
        let inv = f_of_a_contour(&a, &HoloFunction::Power(c(-1.0)), &keyhole(), &q).unwrap();
        let mult = OperatorMatrix::fourier_multiplier(&g, &g.bessel_multiplier(-2.0).iter().map(|&v| c(v)).collect::<Vec<_>>(), "b").unwrap();
        assert!(inv.sub(&mult).operator_norm().unwrap() < 1e-7);
        let half = complex_power(&a, c(0.5), &keyhole(), &q).unwrap();
        let want = multiplier_of(&s, |v| v.sqrt()).unwrap();
        assert!(half.sub(&want).operator_norm().unwrap() < 1e-7);
        let heat = heat_operator(&a, 1.0, &expo(), &q).unwrap();
        let want = multiplier_of(&s, |v| (-v).exp()).unwrap();
        assert!(heat.sub(&want).operator_norm().unwrap() < 1e-8);
    }

    #[test]
    fn powers_zero_and_one() {
        let g = TorusGrid::new(1, 16).unwrap();
        let s = SymbolField::family(&g, Family::PerturbedElliptic { m: 2.0, rho: 0.5, delta: 0.0, eps0: 0.25 }).unwrap();
        let a = op_tau0(&s);
        let q = QuadratureSpec::default();
        let p0 = complex_power(&a, c(0.0), &keyhole(), &q).unwrap();
        assert!(p0.sub(&OperatorMatrix::identity(&g)).frobenius() < 1e-8 * (g.points() as f64).sqrt());
        let p1 = complex_power(&a, c(1.0), &keyhole(), &q).unwrap();
        assert!(relative_distance(&p1, &a) < 1e-8);
    }

    #[test]
    fn zero_order_loop() {
        let g = TorusGrid::new(1, 16).unwrap();
        let s = SymbolField::family(&g, Family::ZeroOrder { eps0: 0.25 }).unwrap();
        let a = op_tau0(&s);
        let lp = auto_loop(a.eigenvalues().unwrap()).unwrap();
        let q = QuadratureSpec::default();
        let one = f_of_a_contour(&a, &HoloFunction::Power(c(1.0)), &lp, &q).unwrap();
        assert!(relative_distance(&one, &a) < 1e-8);
        let lg = log_operator(&a, &lp, &q).unwrap();
        let back = OperatorMatrix::from_matrix(&g, lg.eigen().unwrap().apply(|v| v.exp()), "exp").unwrap();
        assert!(relative_distance(&back, &a) < 1e-7);
    }

    #[test]
    fn log_of_multiples_of_identity() {
        let g = TorusGrid::new(1, 8).unwrap();
        let q = QuadratureSpec::default();
        let lp = ContourSpec::finite_loop(c(1.5), 1.0).unwrap();
        let l1 = log_operator(&OperatorMatrix::identity(&g), &lp, &q).unwrap();
        assert!(l1.frobenius() < 1e-9);
        let l2 = log_operator(&OperatorMatrix::scalar(&g, c(2.0)), &lp, &q).unwrap();
        assert!(l2.sub(&OperatorMatrix::scalar(&g, c(libm::log(2.0)))).frobenius() < 1e-9);
    }

    #[test]
    fn spectral_oracle_basics() {
        let g = TorusGrid::new(1, 8).unwrap();
        let mut m = DMatrix::from_element(8, 8, c(0.0));
        for i in 0..8 {
            m[(i, i)] = c(1.0 + (i % 2) as f64);
        }
        let a = OperatorMatrix::from_matrix(&g, m, "diag").unwrap();
        let l = f_of_a_spectral(&a, &HoloFunction::Log).unwrap();
        assert!((l.matrix()[(1, 1)] - c(libm::log(2.0))).norm() < 1e-14);
        assert!(l.matrix()[(0, 0)].norm() < 1e-14);
        let id = f_of_a_spectral(&a, &HoloFunction::Power(c(1.0))).unwrap();
        assert!(id.sub(&a).frobenius() < 1e-12);
        let neg = OperatorMatrix::scalar(&g, c(-1.0));
        assert!(matches!(f_of_a_spectral(&neg, &HoloFunction::Log), Err(Error::SpectrumHit { .. })));
    }

    #[test]
    fn guards() {
        let g = TorusGrid::new(1, 8).unwrap();
        let s = SymbolField::family(&g, Family::BesselPower(2.0)).unwrap();
        let a = op_tau0(&s);
        let q = QuadratureSpec::default();
        assert!(matches!(f_of_a_contour(&a, &HoloFunction::Log, &keyhole(), &q), Err(Error::Precondition(_))));
        assert!(matches!(f_of_a_contour(&a, &HoloFunction::ExpScaled(1.0), &keyhole(), &q), Err(Error::Precondition(_))));
        let big = ContourSpec::keyhole(2.0, None).unwrap();
        assert!(matches!(f_of_a_contour(&a, &HoloFunction::Power(c(-1.0)), &big, &q), Err(Error::SpectrumHit { .. })));
    }

    #[test]
    fn rational_on_keyhole() {
        // (1 + 2 lambda) / lambda^2, pole at 0 inside the small circle
        let g = TorusGrid::new(1, 8).unwrap();
        let s = SymbolField::family(&g, Family::BesselPower(2.0)).unwrap();
        let a = op_tau0(&s);
        let f = HoloFunction::Rational { num: vec![c(1.0), c(2.0)], den: vec![c(0.0), c(0.0), c(1.0)] };
        let k = f_of_a_contour(&a, &f, &keyhole(), &QuadratureSpec::default()).unwrap();
        let o = f_of_a_spectral(&a, &f).unwrap();
        assert!(relative_distance(&k, &o) < 1e-9);
    }
}
