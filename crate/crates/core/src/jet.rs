//! Truncated multivariate Taylor jets (forward-mode AD).
//!
//! Variables live in four fixed slots `[eta1, eta2, x1, x2]`; a layout only
//! activates the slots a given dimension needs. A jet stores Taylor
//! coefficients `c_gamma` so that `d^gamma f = gamma! * c_gamma`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Multi-index over the slots `[eta1, eta2, x1, x2]`.
pub type DerivIndex = [u8; 4];

pub const ETA1: usize = 0;
pub const ETA2: usize = 1;
pub const X1: usize = 2;
pub const X2: usize = 3;

pub fn index_order(g: &DerivIndex) -> usize {
    g.iter().map(|&v| v as usize).sum()
}

pub fn index_factorial(g: &DerivIndex) -> f64 {
    g.iter().map(|&v| factorial(v as usize)).product()
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, v| acc * v as f64)
}

#[derive(Debug)]
pub struct JetLayout {
    slots: Vec<usize>,
    order: usize,
    exps: Vec<DerivIndex>,
    lookup: BTreeMap<DerivIndex, usize>,
    // (i, j, k): coefficient i times coefficient j lands in k
    triples: Vec<(u32, u32, u32)>,
}

impl JetLayout {
    /// Layout over the given slots, truncated at total order `order`.
    pub fn new(slots: &[usize], order: usize) -> Arc<Self> {
        let mut exps: Vec<DerivIndex> = Vec::new();
        for deg in 0..=order {
            enumerate_degree(slots, deg, &mut exps);
        }
        let lookup: BTreeMap<DerivIndex, usize> =
            exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let mut triples = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            let di = index_order(ei);
            for (j, ej) in exps.iter().enumerate() {
                if di + index_order(ej) > order {
                    continue;
                }
                let mut s = [0u8; 4];
                for t in 0..4 {
                    s[t] = ei[t] + ej[t];
                }
                triples.push((i as u32, j as u32, lookup[&s] as u32));
            }
        }
        Arc::new(JetLayout { slots: slots.to_vec(), order, exps, lookup, triples })
    }

    /// Slots for a torus of dimension `n`.
    pub fn for_dimension(n: usize, order: usize) -> Arc<Self> {
        if n == 1 {
            Self::new(&[ETA1, X1], order)
        } else {
            Self::new(&[ETA1, ETA2, X1, X2], order)
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn position(&self, g: &DerivIndex) -> Option<usize> {
        self.lookup.get(g).copied()
    }
}

fn enumerate_degree(slots: &[usize], deg: usize, out: &mut Vec<DerivIndex>) {
    fn rec(slots: &[usize], left: usize, cur: &mut DerivIndex, out: &mut Vec<DerivIndex>) {
        match slots.split_first() {
            None => {
                if left == 0 {
                    out.push(*cur);
                }
            }
            Some((&s, rest)) => {
                for v in (0..=left).rev() {
                    cur[s] = v as u8;
                    rec(rest, left - v, cur, out);
                }
                cur[s] = 0;
            }
        }
    }
    let mut cur = [0u8; 4];
    rec(slots, deg, &mut cur, out);
}

#[derive(Debug, Clone)]
pub struct Jet {
    layout: Arc<JetLayout>,
    coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn constant(layout: &Arc<JetLayout>, v: Complex64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); layout.len()];
        coeffs[0] = v;
        Jet { layout: layout.clone(), coeffs }
    }

    /// The independent variable in `slot`, expanded at `value`.
    pub fn variable(layout: &Arc<JetLayout>, slot: usize, value: f64) -> Self {
        let mut j = Self::constant(layout, Complex64::new(value, 0.0));
        if layout.order >= 1 {
            let mut g = [0u8; 4];
            g[slot] = 1;
            if let Some(p) = layout.position(&g) {
                j.coeffs[p] = Complex64::new(1.0, 0.0);
            }
        }
        j
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// The partial derivative `d^g` at the expansion point; zero beyond the truncation order.
    pub fn derivative(&self, g: &DerivIndex) -> Complex64 {
        match self.layout.position(g) {
            Some(p) => self.coeffs[p] * index_factorial(g),
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Jet { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `sum_k taylor[k] * (self - self(0))^k`, where `taylor[k] = f^(k)(c0)/k!`.
    pub fn compose(&self, taylor: &[Complex64]) -> Self {
        let mut h = self.clone();
        h.coeffs[0] = Complex64::new(0.0, 0.0);
        let top = taylor.len() - 1;
        let mut acc = Jet::constant(&self.layout, taylor[top]);
        for k in (0..top).rev() {
            acc = &acc * &h;
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    fn degree(&self) -> usize {
        self.layout.order
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        for &(i, j, k) in &self.layout.triples {
            out[k as usize] += self.coeffs[i as usize] * o.coeffs[j as usize];
        }
        Jet { layout: self.layout.clone(), coeffs: out }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        &self + &o
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        &self - &o
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        &self * &o
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Scalar type the built-in symbol formulas are written against, so one
/// formula yields both point values and exact derivative jets.
pub trait SymScalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn lift(&self, v: Complex64) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn recip(&self) -> Self;
    fn conj(&self) -> Self;
    fn sqrt(&self) -> Self {
        self.powf(0.5)
    }
    fn real(&self, v: f64) -> Self {
        self.lift(Complex64::new(v, 0.0))
    }
}

impl SymScalar for Complex64 {
    fn lift(&self, v: Complex64) -> Self {
        v
    }
    fn exp(&self) -> Self {
        Complex64::exp(*self)
    }
    fn ln(&self) -> Self {
        Complex64::ln(*self)
    }
    fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            Complex64::new(1.0, 0.0)
        } else if self.im == 0.0 && self.re > 0.0 {
            Complex64::new(libm::pow(self.re, p), 0.0)
        } else {
            Complex64::powf(*self, p)
        }
    }
    fn sin(&self) -> Self {
        Complex64::sin(*self)
    }
    fn cos(&self) -> Self {
        Complex64::cos(*self)
    }
    fn recip(&self) -> Self {
        Complex64::new(1.0, 0.0) / *self
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
}

impl SymScalar for Jet {
    fn lift(&self, v: Complex64) -> Self {
        Jet::constant(&self.layout, v)
    }

    fn exp(&self) -> Self {
        let e = self.value().exp();
        let t: Vec<Complex64> = (0..=self.degree()).map(|k| e / factorial(k)).collect();
        self.compose(&t)
    }

    fn ln(&self) -> Self {
        let c = self.value();
        let mut t = vec![c.ln()];
        let mut p = Complex64::new(1.0, 0.0);
        for k in 1..=self.degree() {
            p *= c;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(Complex64::new(sign / k as f64, 0.0) / p);
        }
        self.compose(&t)
    }

    fn powf(&self, p: f64) -> Self {
        let c = self.value();
        if p == 0.0 {
            return self.lift(Complex64::new(1.0, 0.0));
        }
        let mut t = vec![SymScalar::powf(&c, p)];
        for k in 1..=self.degree() {
            let prev = t[k - 1];
            t.push(prev * ((p - (k as f64 - 1.0)) / k as f64) / c);
        }
        self.compose(&t)
    }

    fn sin(&self) -> Self {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cyc = [s, c, -s, -c];
        let t: Vec<Complex64> = (0..=self.degree()).map(|k| cyc[k % 4] / factorial(k)).collect();
        self.compose(&t)
    }

    fn cos(&self) -> Self {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cyc = [c, -s, -c, s];
        let t: Vec<Complex64> = (0..=self.degree()).map(|k| cyc[k % 4] / factorial(k)).collect();
        self.compose(&t)
    }

    fn recip(&self) -> Self {
        let c = self.value();
        let inv = Complex64::new(1.0, 0.0) / c;
        let mut t = vec![inv];
        for k in 1..=self.degree() {
            t.push(-t[k - 1] * inv);
        }
        self.compose(&t)
    }

    // Variables are real, so conjugation acts coefficientwise.
    fn conj(&self) -> Self {
        Jet { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }
}
