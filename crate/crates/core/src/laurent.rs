//! Symbols of the form `sum_j c_j(x, eta) (a(x, eta) - lambda)^{-j}`.
//!
//! Coefficients are kept exactly, as polynomials in the partial derivatives
//! of a few "atoms" (the base symbol `a`, atom 0, plus any lambda-free symbols
//! that enter a composition). Grid values are produced on demand from exact
//! derivative jets and cached, so evaluation at many lambdas is cheap.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::grid::{GridField, TorusGrid};
use crate::jet::{factorial, index_order, DerivIndex, JetLayout, ETA1, ETA2, X1, X2};
use crate::symbols::SymbolField;

/// A factor `d^g atom`.
pub type Factor = (u8, DerivIndex);
/// Sorted product of factors; the empty monomial is the constant 1.
pub type Monomial = Vec<Factor>;
pub type Poly = BTreeMap<Monomial, Complex64>;

const PRUNE: f64 = 1e-14;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn monomial_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn poly_add_into(dst: &mut Poly, src: &Poly, s: Complex64) {
    for (m, c) in src {
        *dst.entry(m.clone()).or_insert_with(czero) += c * s;
    }
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            *out.entry(monomial_mul(ma, mb)).or_insert_with(czero) += ca * cb;
        }
    }
    out
}

fn prune(p: &mut Poly) {
    p.retain(|_, c| c.norm() >= PRUNE);
}

/// Derivative of a polynomial in `slot` by the product rule.
fn poly_deriv(p: &Poly, slot: usize) -> Poly {
    let mut out = Poly::new();
    for (m, c) in p {
        for i in 0..m.len() {
            // differentiate factor i; skip repeats so each distinct factor counts with multiplicity
            let mut f = m.clone();
            f[i].1[slot] += 1;
            let mut rest: Monomial = f.clone();
            let moved = rest.remove(i);
            let key = monomial_mul(&rest, &vec![moved]);
            *out.entry(key).or_insert_with(czero) += c;
        }
    }
    prune(&mut out);
    out
}

#[derive(Debug, Clone)]
pub struct ResolventPolynomial {
    atoms: Arc<Vec<Arc<SymbolField>>>,
    terms: BTreeMap<i32, Poly>,
    fields: OnceCell<BTreeMap<i32, GridField>>,
}

impl ResolventPolynomial {
    fn with_terms(atoms: Arc<Vec<Arc<SymbolField>>>, mut terms: BTreeMap<i32, Poly>) -> Self {
        for p in terms.values_mut() {
            prune(p);
            p.retain(|m, _| !m.iter().any(|(a, g)| atoms[*a as usize].derivative_vanishes(g)));
        }
        terms.retain(|_, p| !p.is_empty());
        ResolventPolynomial { atoms, terms, fields: OnceCell::new() }
    }

    fn single(base: &Arc<SymbolField>, j: i32) -> Self {
        let atoms = Arc::new(vec![base.clone()]);
        let mut p = Poly::new();
        p.insert(Vec::new(), Complex64::new(1.0, 0.0));
        let mut t = BTreeMap::new();
        t.insert(j, p);
        Self::with_terms(atoms, t)
    }

    /// `(a - lambda)^{-1}`
    pub fn from_resolvent(base: &Arc<SymbolField>) -> Self {
        Self::single(base, 1)
    }

    /// `a - lambda`, pole order -1.
    pub fn shifted_base(base: &Arc<SymbolField>) -> Self {
        Self::single(base, -1)
    }

    /// The lambda-free unit.
    pub fn unit(base: &Arc<SymbolField>) -> Self {
        Self::single(base, 0)
    }

    /// The lambda-free symbol `s`, carried as a new atom next to `base`.
    pub fn lambda_free(base: &Arc<SymbolField>, s: &Arc<SymbolField>) -> Result<Self> {
        if base.grid() != s.grid() {
            return Err(domain("lambda-free symbol lives on a different grid"));
        }
        let atoms = Arc::new(vec![base.clone(), s.clone()]);
        let mut p = Poly::new();
        p.insert(vec![(1u8, [0u8; 4])], Complex64::new(1.0, 0.0));
        let mut t = BTreeMap::new();
        t.insert(0, p);
        Ok(Self::with_terms(atoms, t))
    }

    pub fn base(&self) -> &Arc<SymbolField> {
        &self.atoms[0]
    }

    pub fn grid(&self) -> &TorusGrid {
        self.atoms[0].grid()
    }

    pub fn terms(&self) -> &BTreeMap<i32, Poly> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_pole(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn max_pole(&self) -> Option<i32> {
        self.terms.keys().next_back().copied()
    }

    pub fn monomial_count(&self) -> usize {
        self.terms.values().map(|p| p.len()).sum()
    }

    pub fn lambda_free_part(&self) -> Option<&Poly> {
        self.terms.get(&0)
    }

    /// Highest total derivative order on any factor.
    pub fn max_derivative_order(&self) -> usize {
        self.terms
            .values()
            .flat_map(|p| p.keys())
            .flat_map(|m| m.iter())
            .map(|f| index_order(&f.1))
            .max()
            .unwrap_or(0)
    }

    /// Total number of eta-derivatives in a monomial. In a flat composition
    /// every eta-derivative is paired with an x-derivative, so this counts
    /// the order drops of size `rho - delta`.
    pub fn grade(m: &Monomial) -> usize {
        m.iter().map(|(_, g)| (g[ETA1] + g[ETA2]) as usize).sum()
    }

    /// Keep only monomials of grade `<= k`.
    pub fn truncate_grade(&self, k: usize) -> Self {
        let mut terms = self.terms.clone();
        for p in terms.values_mut() {
            p.retain(|m, _| Self::grade(m) <= k);
        }
        Self::with_terms(self.atoms.clone(), terms)
    }

    pub fn max_grade(&self) -> usize {
        self.terms.values().flat_map(|p| p.keys()).map(Self::grade).max().unwrap_or(0)
    }

    /// Bring `self` and `o` onto one atom table; returns `o`'s terms remapped.
    fn unify(&self, o: &Self) -> Result<(Arc<Vec<Arc<SymbolField>>>, BTreeMap<i32, Poly>)> {
        if Arc::ptr_eq(&self.atoms, &o.atoms) {
            return Ok((self.atoms.clone(), o.terms.clone()));
        }
        if !Arc::ptr_eq(&self.atoms[0], &o.atoms[0]) {
            return Err(domain("resolvent polynomials over different base symbols"));
        }
        let mut atoms: Vec<Arc<SymbolField>> = self.atoms.as_ref().clone();
        let mut remap = Vec::with_capacity(o.atoms.len());
        for a in o.atoms.iter() {
            match atoms.iter().position(|b| Arc::ptr_eq(a, b)) {
                Some(p) => remap.push(p as u8),
                None => {
                    atoms.push(a.clone());
                    remap.push((atoms.len() - 1) as u8);
                }
            }
        }
        let terms = o
            .terms
            .iter()
            .map(|(&j, p)| {
                let q: Poly = p
                    .iter()
                    .map(|(m, &c)| {
                        let mut mm: Monomial = m.iter().map(|&(a, g)| (remap[a as usize], g)).collect();
                        mm.sort();
                        (mm, c)
                    })
                    .collect();
                (j, q)
            })
            .collect();
        let atoms = if atoms.len() == self.atoms.len() { self.atoms.clone() } else { Arc::new(atoms) };
        Ok((atoms, terms))
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.combine(o, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.combine(o, Complex64::new(-1.0, 0.0))
    }

    fn combine(&self, o: &Self, s: Complex64) -> Result<Self> {
        let (atoms, ot) = self.unify(o)?;
        // the unified table extends ours, so our indices stay valid
        let mut terms = self.terms.clone();
        for (j, p) in &ot {
            poly_add_into(terms.entry(*j).or_default(), p, s);
        }
        Ok(Self::with_terms(atoms, terms))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&j, p)| (j, p.iter().map(|(m, &c)| (m.clone(), c * s)).collect()))
            .collect();
        Self::with_terms(self.atoms.clone(), terms)
    }

    /// Pointwise product; pole orders add.
    pub fn multiply(&self, o: &Self) -> Result<Self> {
        let (atoms, ot) = self.unify(o)?;
        let mut terms: BTreeMap<i32, Poly> = BTreeMap::new();
        for (ja, pa) in &self.terms {
            for (jb, pb) in &ot {
                let prod = poly_mul(pa, pb);
                poly_add_into(terms.entry(ja + jb).or_default(), &prod, Complex64::new(1.0, 0.0));
            }
        }
        Ok(Self::with_terms(atoms, terms))
    }

    fn deriv_slot(&self, slot: usize) -> Self {
        let mut terms: BTreeMap<i32, Poly> = BTreeMap::new();
        let mut da = Poly::new();
        let mut g = [0u8; 4];
        g[slot] = 1;
        da.insert(vec![(0u8, g)], Complex64::new(1.0, 0.0));
        for (&j, p) in &self.terms {
            let dp = poly_deriv(p, slot);
            poly_add_into(terms.entry(j).or_default(), &dp, Complex64::new(1.0, 0.0));
            if j != 0 {
                // d (a - lambda)^{-j} = -j (a - lambda)^{-j-1} da
                let chain = poly_mul(p, &da);
                poly_add_into(terms.entry(j + 1).or_default(), &chain, Complex64::new(-(j as f64), 0.0));
            }
        }
        Self::with_terms(self.atoms.clone(), terms)
    }

    pub fn deriv_eta(&self, axis: usize) -> Result<Self> {
        if axis >= self.grid().dim() {
            return Err(domain("eta axis exceeds torus dimension"));
        }
        Ok(self.deriv_slot(if axis == 0 { ETA1 } else { ETA2 }))
    }

    pub fn deriv_x(&self, axis: usize) -> Result<Self> {
        if axis >= self.grid().dim() {
            return Err(domain("x axis exceeds torus dimension"));
        }
        Ok(self.deriv_slot(if axis == 0 { X1 } else { X2 }))
    }

    /// `d/dlambda (a - lambda)^{-j} = j (a - lambda)^{-j-1}`
    pub fn deriv_lambda(&self) -> Self {
        let mut terms: BTreeMap<i32, Poly> = BTreeMap::new();
        for (&j, p) in &self.terms {
            if j != 0 {
                poly_add_into(terms.entry(j + 1).or_default(), p, Complex64::new(j as f64, 0.0));
            }
        }
        Self::with_terms(self.atoms.clone(), terms)
    }

    /// `sum_{|alpha| <= k} (1/alpha!) d_eta^alpha P * D_x^alpha Q`, `D_x = -i d_x`.
    pub fn compose_truncated(&self, q: &Self, k: usize) -> Result<Self> {
        if k > 3 {
            return Err(domain("composition truncation above 3 is unsupported"));
        }
        let n = self.grid().dim();
        let mut acc = self.multiply(q)?;
        for order in 1..=k {
            for a1 in 0..=order {
                let a2 = order - a1;
                if n == 1 && a2 > 0 {
                    continue;
                }
                let mut dp = self.clone();
                let mut dq = q.clone();
                for _ in 0..a1 {
                    dp = dp.deriv_eta(0)?;
                    dq = dq.deriv_x(0)?;
                }
                for _ in 0..a2 {
                    dp = dp.deriv_eta(1)?;
                    dq = dq.deriv_x(1)?;
                }
                if dp.is_zero() || dq.is_zero() {
                    continue;
                }
                // (-i)^|alpha| / alpha!
                let s = Complex64::new(0.0, -1.0).powu(order as u32) / (factorial(a1) * factorial(a2));
                acc = acc.add(&dp.multiply(&dq)?.scale(s))?;
            }
        }
        Ok(acc)
    }

    /// Grid values of every coefficient, computed once.
    pub fn coefficient_fields(&self) -> &BTreeMap<i32, GridField> {
        self.fields.get_or_init(|| self.build_fields())
    }

    fn build_fields(&self) -> BTreeMap<i32, GridField> {
        let grid = self.grid().clone();
        let m = grid.points();
        let mut needed: BTreeMap<Factor, Vec<Complex64>> = BTreeMap::new();
        for p in self.terms.values() {
            for mono in p.keys() {
                for f in mono {
                    needed.entry(*f).or_insert_with(Vec::new);
                }
            }
        }
        for (ai, atom) in self.atoms.iter().enumerate() {
            let wants: Vec<DerivIndex> = needed.keys().filter(|f| f.0 as usize == ai).map(|f| f.1).collect();
            if wants.is_empty() {
                continue;
            }
            if atom.has_continuum() {
                let ord = wants.iter().map(index_order).max().unwrap_or(0);
                let layout = JetLayout::for_dimension(grid.dim(), ord);
                let pos: Vec<usize> = wants.iter().map(|g| layout.position(g).unwrap()).collect();
                let facts: Vec<f64> = wants.iter().map(crate::jet::index_factorial).collect();
                let mut cols: Vec<Vec<Complex64>> = vec![Vec::with_capacity(m * m); wants.len()];
                for xi in 0..m {
                    for e in 0..m {
                        let jet = atom.jet(grid.x_point(xi), grid.eta_point(e), &layout).unwrap();
                        for (w, col) in cols.iter_mut().enumerate() {
                            col.push(jet.coeffs()[pos[w]] * facts[w]);
                        }
                    }
                }
                for (g, col) in wants.iter().zip(cols) {
                    needed.insert((ai as u8, *g), col);
                }
            } else {
                for g in wants {
                    // sampled atoms only carry x-derivatives; eta-derivatives
                    // were rejected when the expression was built
                    let f = atom.derivative_field(&g).expect("derivative of sampled atom");
                    needed.insert((ai as u8, g), f.values().to_vec());
                }
            }
        }
        let mut out = BTreeMap::new();
        for (&j, p) in &self.terms {
            let mut vals = vec![czero(); m * m];
            for (mono, &c) in p {
                for (i, v) in vals.iter_mut().enumerate() {
                    let mut t = c;
                    for f in mono {
                        t *= needed[f][i];
                    }
                    *v += t;
                }
            }
            out.insert(j, GridField::new(&grid, vals).unwrap());
        }
        out
    }

    /// Lattice values at a fixed lambda.
    pub fn eval(&self, lambda: Complex64) -> GridField {
        let fields = self.coefficient_fields();
        let a = self.base().samples();
        let grid = self.grid();
        let m = grid.points();
        let mut vals = vec![czero(); m * m];
        for (&j, f) in fields {
            for i in 0..m * m {
                let r = a.values()[i] - lambda;
                vals[i] += f.values()[i] * r.powi(-j);
            }
        }
        GridField::new(grid, vals).unwrap()
    }

    /// Value at an arbitrary real point `(x, eta)`.
    pub fn eval_point(&self, x: [f64; 2], eta: [f64; 2], lambda: Complex64) -> Result<Complex64> {
        let ord = self.max_derivative_order();
        let layout = JetLayout::for_dimension(self.grid().dim(), ord);
        let mut jets = Vec::with_capacity(self.atoms.len());
        for atom in self.atoms.iter() {
            jets.push(atom.jet(x, eta, &layout).ok_or_else(|| domain("point evaluation needs continuum atoms"))?);
        }
        let a = jets[0].value();
        let mut acc = czero();
        for (&j, p) in &self.terms {
            let mut cj = czero();
            for (mono, &c) in p {
                let mut t = c;
                for (ai, g) in mono {
                    t *= jets[*ai as usize].derivative(g);
                }
                cj += t;
            }
            acc += cj * (a - lambda).powi(-j);
        }
        Ok(acc)
    }

    /// Termwise Cauchy integral against `f`. `taylor(p, a)` must return
    /// `f^(p)(a) / p!`; with the calibrated orientation
    /// `(1/2 pi i) oint f (a - lambda)^{-j} = (-1)^{j-1} f^(j-1)(a) / (j-1)!`,
    /// and lambda-free or polynomial-in-lambda parts integrate to zero.
    pub fn cauchy_apply(&self, taylor: &dyn Fn(usize, Complex64) -> Complex64) -> GridField {
        let fields = self.coefficient_fields();
        let a = self.base().samples();
        let grid = self.grid();
        let m = grid.points();
        let mut vals = vec![czero(); m * m];
        for (&j, f) in fields {
            if j < 1 {
                continue;
            }
            let p = (j - 1) as usize;
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..m * m {
                vals[i] += f.values()[i] * taylor(p, a.values()[i]) * sign;
            }
        }
        GridField::new(grid, vals).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{Family, TrigTerm};

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn pe(g: &TorusGrid) -> Arc<SymbolField> {
        Arc::new(SymbolField::family(g, Family::PerturbedElliptic { m: 2.0, rho: 0.5, delta: 0.0, eps0: 0.25 }).unwrap())
    }

    fn fam(g: &TorusGrid, f: Family) -> Arc<SymbolField> {
        Arc::new(SymbolField::family(g, f).unwrap())
    }

    #[test]
    fn resolvent_values() {
        let g = TorusGrid::new(1, 8).unwrap();
        let one = fam(&g, Family::Constant(c(1.0)));
        let v = ResolventPolynomial::from_resolvent(&one).eval(c(-1.0));
        assert!(v.values().iter().all(|z| (z - c(0.5)).norm() < 1e-15));
        let zero = fam(&g, Family::Constant(c(0.0)));
        let v = ResolventPolynomial::from_resolvent(&zero).eval(Complex64::new(0.0, 2.0));
        assert!(v.values().iter().all(|z| (z - Complex64::new(0.0, 0.5)).norm() < 1e-15));
    }

    #[test]
    fn squares_and_units() {
        let g = TorusGrid::new(1, 8).unwrap();
        let a = pe(&g);
        let p = ResolventPolynomial::from_resolvent(&a);
        let sq = p.multiply(&p).unwrap();
        assert_eq!(sq.terms().len(), 1);
        assert_eq!(sq.terms()[&2][&Vec::new()], c(1.0));
        let u = ResolventPolynomial::unit(&a);
        let same = p.multiply(&u).unwrap();
        assert_eq!(same.terms(), p.terms());
    }

    #[test]
    fn different_bases_rejected() {
        let g = TorusGrid::new(1, 8).unwrap();
        let p = ResolventPolynomial::from_resolvent(&pe(&g));
        let q = ResolventPolynomial::from_resolvent(&pe(&g));
        assert!(p.multiply(&q).is_err());
    }

    #[test]
    fn eta_derivative_of_resolvent() {
        let g = TorusGrid::new(1, 8).unwrap();
        let b = fam(&g, Family::BesselPower(2.0));
        let d = ResolventPolynomial::from_resolvent(&b).deriv_eta(0).unwrap();
        assert_eq!(d.min_pole(), Some(2));
        assert_eq!(d.max_pole(), Some(2));
        let lam = c(-3.0);
        let eta = 1.7;
        let h = 1e-4;
        let f = |e: f64| Complex64::new(1.0, 0.0) / (c(1.0 + e * e) - lam);
        let fd = (f(eta + h) - f(eta - h)) / (2.0 * h);
        let v = d.eval_point([0.3, 0.0], [eta, 0.0], lam).unwrap();
        assert!((v - fd).norm() < 1e-8);
    }

    #[test]
    fn constant_base_has_no_eta_dependence() {
        let g = TorusGrid::new(1, 8).unwrap();
        let k = fam(&g, Family::Constant(c(3.0)));
        let p = ResolventPolynomial::from_resolvent(&k);
        assert!(p.deriv_eta(0).unwrap().is_zero());
        assert!(p.deriv_x(0).unwrap().is_zero());
        let lam = Complex64::new(-1.0, 0.5);
        let d2 = p.deriv_lambda().deriv_lambda().eval(lam);
        let want = c(2.0) / (c(3.0) - lam).powi(3);
        assert!(d2.values().iter().all(|z| (z - want).norm() < 1e-14));
    }

    #[test]
    fn operator_product_example() {
        // P = i eta, Q = e^{ix}, K = 1 gives i (eta + 1) e^{ix}
        let g = TorusGrid::new(1, 8).unwrap();
        let one = fam(&g, Family::Constant(c(1.0)));
        let pe_ = fam(&g, Family::EtaLinear { coef: Complex64::new(0.0, 1.0), axis: 0 });
        let qe = Arc::new(SymbolField::trig(&g, vec![TrigTerm { k: [1, 0], amp: c(1.0), order: 0.0, tilt: 0.0 }]).unwrap());
        let p = ResolventPolynomial::lambda_free(&one, &pe_).unwrap();
        let q = ResolventPolynomial::lambda_free(&one, &qe).unwrap();
        let r = p.compose_truncated(&q, 1).unwrap();
        for (x, eta) in [(0.3, 2.0), (1.1, -3.5)] {
            let v = r.eval_point([x, 0.0], [eta, 0.0], c(7.0)).unwrap();
            let want = Complex64::new(0.0, eta + 1.0) * Complex64::from_polar(1.0, x);
            assert!((v - want).norm() < 1e-13);
        }
        let k0 = p.compose_truncated(&q, 0).unwrap();
        assert_eq!(k0.terms(), p.multiply(&q).unwrap().terms());
    }

    #[test]
    fn cauchy_of_resolvent_is_function_value() {
        let g = TorusGrid::new(1, 8).unwrap();
        let a = pe(&g);
        let p = ResolventPolynomial::from_resolvent(&a);
        let ex = p.cauchy_apply(&|k, z: Complex64| z.exp() / factorial(k));
        for (v, av) in ex.values().iter().zip(a.samples().values()) {
            assert!((v - av.exp()).norm() <= 1e-12 * av.exp().norm());
        }
        // j = 2 with coefficient c, f(lambda) = lambda: the calibrated sign gives -c
        let two = p.multiply(&p).unwrap().scale(c(5.0));
        let lin = two.cauchy_apply(&|k, z| match k {
            0 => z,
            1 => c(1.0),
            _ => c(0.0),
        });
        assert!(lin.values().iter().all(|z| (z - c(-5.0)).norm() < 1e-14));
    }
}
