//! Contours for the Dunford integral and their quadrature rules.
//!
//! Weights already include the orientation, so for every contour kind
//! `(1/2 pi i) sum_k w_k f(lambda_k) (a - lambda_k)^{-1} = f(a)` for a scalar
//! `a` the contour is meant to enclose. Geometrically the nodes follow the
//! keyhole of the calculus: inward along `arg = pi`, around the small circle,
//! outward along `arg = -pi`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContourKind {
    /// Rays collapsed onto the negative axis from both sides.
    Keyhole,
    /// Rays at `+-angle`, enclosing a right half-plane sector.
    Exponential { angle: f64 },
    FiniteLoop { center: Complex64, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub kind: ContourKind,
    /// Small-circle radius (unused for finite loops).
    pub epsilon: f64,
    /// Ray truncation radius; `None` lets the caller derive it from the tail bound.
    pub r_max: Option<f64>,
}

impl ContourSpec {
    pub fn keyhole(epsilon: f64, r_max: Option<f64>) -> Result<Self> {
        let c = ContourSpec { kind: ContourKind::Keyhole, epsilon, r_max };
        c.validate()?;
        Ok(c)
    }

    pub fn exponential(epsilon: f64, r_max: Option<f64>, angle: f64) -> Result<Self> {
        let c = ContourSpec { kind: ContourKind::Exponential { angle }, epsilon, r_max };
        c.validate()?;
        Ok(c)
    }

    pub fn finite_loop(center: Complex64, radius: f64) -> Result<Self> {
        let c = ContourSpec { kind: ContourKind::FiniteLoop { center, radius }, epsilon: radius, r_max: None };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ContourKind::FiniteLoop { radius, .. } => {
                if !(radius > 0.0) {
                    return Err(domain("loop radius must be positive"));
                }
            }
            ContourKind::Keyhole | ContourKind::Exponential { .. } => {
                if !(self.epsilon > 0.0) {
                    return Err(domain("contour epsilon must be positive"));
                }
                if let Some(r) = self.r_max {
                    if !(r > self.epsilon) {
                        return Err(domain("degenerate contour: epsilon >= R"));
                    }
                }
                if let ContourKind::Exponential { angle } = self.kind {
                    if !(0.0 < angle && angle < PI / 2.0) {
                        return Err(domain("exponential rays must lie strictly inside the right half-plane"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn with_r_max(mut self, r: f64) -> Result<Self> {
        self.r_max = Some(r);
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub nodes_per_ray: usize,
    pub nodes_on_circle: usize,
    /// Absolute tail tolerance used to pick `R` automatically.
    pub tail_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes_per_ray: 200, nodes_on_circle: 64, tail_tol: 1e-13 }
    }
}

/// Gauss-Legendre panel size on rays.
pub const PANEL: usize = 10;

/// Which side of the cut a node on the negative axis sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Principal,
    /// `arg lambda = +pi`
    Upper,
    /// `arg lambda = -pi`
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub lambda: Complex64,
    pub weight: Complex64,
    pub branch: Branch,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on the recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss-Legendre on `[a, b]` with at least `min_nodes` nodes.
fn composite(a: f64, b: f64, min_nodes: usize) -> Vec<(f64, f64)> {
    let panels = min_nodes.div_ceil(PANEL).max(1);
    let (gx, gw) = gauss_legendre(PANEL);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * PANEL);
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (x, w) in gx.iter().zip(&gw) {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

fn arc(radius: f64, from: f64, to: f64, n: usize) -> Vec<Node> {
    let (gx, gw) = gauss_legendre(n.max(8));
    let half = 0.5 * (to - from);
    gx.iter()
        .zip(&gw)
        .map(|(x, w)| {
            let th = from + half * (x + 1.0);
            let lam = Complex64::from_polar(radius, th);
            // d lambda = i lambda d theta
            Node { lambda: lam, weight: Complex64::new(0.0, 1.0) * lam * (half * w), branch: Branch::Principal }
        })
        .collect()
}

/// Nodes in traversal order with calibrated weights.
pub fn nodes_and_weights(c: &ContourSpec, q: &QuadratureSpec) -> Result<Vec<Node>> {
    c.validate()?;
    if q.nodes_per_ray < 8 || q.nodes_on_circle < 8 {
        return Err(domain("quadrature needs at least 8 nodes per segment"));
    }
    let mut out = Vec::new();
    match c.kind {
        ContourKind::FiniteLoop { center, radius } => {
            // clockwise trapezoid, which is the calibrated orientation for (a - lambda)^{-1}
            let n = q.nodes_on_circle;
            let h = 2.0 * PI / n as f64;
            for k in 0..n {
                let e = Complex64::from_polar(1.0, -h * k as f64);
                out.push(Node { lambda: center + e * radius, weight: Complex64::new(0.0, -1.0) * e * (radius * h), branch: Branch::Principal });
            }
        }
        ContourKind::Keyhole | ContourKind::Exponential { .. } => {
            let r_max = c.r_max.ok_or_else(|| domain("ray truncation radius not set"))?;
            let phi = match c.kind {
                ContourKind::Exponential { angle } => angle,
                _ => PI,
            };
            let keyhole = matches!(c.kind, ContourKind::Keyhole);
            let ray = composite(libm::log(c.epsilon), libm::log(r_max), q.nodes_per_ray);
            let dir_up = Complex64::from_polar(1.0, phi);
            let dir_dn = Complex64::from_polar(1.0, -phi);
            let pt = |r: f64, d: Complex64| if keyhole { Complex64::new(-r, 0.0) } else { d * r };
            // first ray, inward
            for &(u, wu) in ray.iter().rev() {
                let r = libm::exp(u);
                out.push(Node {
                    lambda: pt(r, dir_up),
                    weight: dir_up * (r * wu),
                    branch: if keyhole { Branch::Upper } else { Branch::Principal },
                });
            }
            // small arc, traversed from +phi down to -phi around the origin
            let mut small = arc(c.epsilon, -phi, phi, q.nodes_on_circle);
            small.reverse();
            out.extend(small);
            // second ray, outward
            for &(u, wu) in ray.iter() {
                let r = libm::exp(u);
                out.push(Node {
                    lambda: pt(r, dir_dn),
                    weight: -dir_dn * (r * wu),
                    branch: if keyhole { Branch::Lower } else { Branch::Principal },
                });
            }
        }
    }
    Ok(out)
}

/// Tail decay of the integrand along the rays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// `|f(lambda)| <= |lambda|^s`, `s < 0`.
    Power(f64),
    /// `|f(lambda)| <= e^{-t Re lambda}`.
    Exp(f64),
}

/// Smallest `R` whose analytic tail bound is below `tol`: `R^s / |s|` for
/// power decay, `e^{-t R cos angle} / (t cos angle)` on exponential rays.
pub fn truncation_bound(c: &ContourSpec, decay: Decay, tol: f64) -> Result<f64> {
    match (c.kind, decay) {
        (ContourKind::FiniteLoop { .. }, _) => Err(domain("finite loops need no truncation")),
        (_, Decay::Power(s)) => {
            if s >= 0.0 {
                return Err(domain("power growth s >= 0 on rays needs the A^k split"));
            }
            Ok(libm::pow(tol * s.abs(), 1.0 / s))
        }
        (ContourKind::Exponential { angle }, Decay::Exp(t)) => {
            if t <= 0.0 {
                return Err(domain("exponential rate must be positive"));
            }
            let k = t * libm::cos(angle);
            Ok((-libm::log(tol * k) / k).max(c.epsilon * 2.0))
        }
        (ContourKind::Keyhole, Decay::Exp(_)) => Err(domain("exponential weights do not decay along the keyhole rays")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calib(nodes: &[Node], a: Complex64, f: impl Fn(&Node) -> Complex64) -> Complex64 {
        let s: Complex64 = nodes.iter().map(|n| n.weight * f(n) / (a - n.lambda)).sum();
        s / Complex64::new(0.0, 2.0 * PI)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn finite_loop_orientation() {
        let c = ContourSpec::finite_loop(Complex64::new(1.0, 0.0), 1.0).unwrap();
        let nodes = nodes_and_weights(&c, &QuadratureSpec::default()).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let enclosed = calib(&nodes, Complex64::new(1.2, 0.1), |_| one);
        assert!((enclosed - one).norm() < 1e-12);
        // with (lambda - 1)^{-1} the sign flips
        let flipped: Complex64 = nodes.iter().map(|n| n.weight / (n.lambda - 1.0)).sum::<Complex64>() / Complex64::new(0.0, 2.0 * PI);
        assert!((flipped + one).norm() < 1e-12);
        let unit: Complex64 = nodes.iter().map(|n| n.weight).sum();
        assert!(unit.norm() < 1e-12);
    }

    #[test]
    fn keyhole_inverse_of_scalar() {
        let q = QuadratureSpec::default();
        let base = ContourSpec::keyhole(0.25, None).unwrap();
        let r = truncation_bound(&base, Decay::Power(-1.0), 1e-9).unwrap();
        let c = base.with_r_max(r).unwrap();
        let nodes = nodes_and_weights(&c, &q).unwrap();
        let v = calib(&nodes, Complex64::new(1.0, 0.0), |n| 1.0 / n.lambda);
        assert!((v - 1.0).norm() < 1e-8, "{v}");
        // branch-sensitive: a^{-1/2}
        let a = Complex64::new(4.0, 1.0);
        let r = truncation_bound(&base, Decay::Power(-0.5), 1e-14).unwrap();
        let nodes = nodes_and_weights(&base.with_r_max(r).unwrap(), &q).unwrap();
        let v = calib(&nodes, a, |n| {
            let arg = match n.branch {
                Branch::Upper => PI,
                Branch::Lower => -PI,
                Branch::Principal => n.lambda.arg(),
            };
            Complex64::from_polar(n.lambda.norm().powf(-0.5), -0.5 * arg)
        });
        assert!((v - a.powf(-0.5)).norm() < 1e-10, "{v}");
    }

    #[test]
    fn exponential_contour_heat_weight() {
        let base = ContourSpec::exponential(0.25, None, PI / 4.0).unwrap();
        let r = truncation_bound(&base, Decay::Exp(1.0), 1e-14).unwrap();
        let nodes = nodes_and_weights(&base.with_r_max(r).unwrap(), &QuadratureSpec::default()).unwrap();
        let a = Complex64::new(3.0, 0.5);
        let v = calib(&nodes, a, |n| (-n.lambda).exp());
        assert!((v - (-a).exp()).norm() < 1e-12);
    }

    #[test]
    fn node_order_follows_keyhole() {
        let c = ContourSpec::keyhole(0.5, Some(100.0)).unwrap();
        let nodes = nodes_and_weights(&c, &QuadratureSpec::default()).unwrap();
        assert_eq!(nodes[0].branch, Branch::Upper);
        assert!(nodes[0].lambda.re < -99.0);
        assert_eq!(nodes.last().unwrap().branch, Branch::Lower);
        assert!(nodes.iter().all(|n| n.weight.re.is_finite() && n.weight.im.is_finite()));
    }

    #[test]
    fn weights_stable_under_refinement() {
        let c = ContourSpec::keyhole(0.5, Some(1e6)).unwrap();
        let s = |n: usize| nodes_and_weights(&c, &QuadratureSpec { nodes_per_ray: n, nodes_on_circle: n, tail_tol: 1e-13 }).unwrap().iter().map(|n| n.weight.norm()).sum::<f64>();
        let (a, b) = (s(100), s(200));
        assert!(b < 2.0 * a && a < 2.0 * b);
    }

    #[test]
    fn truncation_bounds() {
        let k = ContourSpec::keyhole(0.5, None).unwrap();
        let r = truncation_bound(&k, Decay::Power(-1.0), 1e-8).unwrap();
        assert!((r - 1e8).abs() < 1.0);
        let r2 = truncation_bound(&k, Decay::Power(-2.0), 1e-6).unwrap();
        assert!((r2 * r2 / 2.0 * 1e-6 - 1.0).abs() < 1e-9 || (libm::pow(r2, -2.0) / 2.0 - 1e-6).abs() < 1e-15);
        let e = ContourSpec::exponential(0.5, None, PI / 4.0).unwrap();
        let re = truncation_bound(&e, Decay::Exp(1.0), 1e-10).unwrap();
        let k1 = libm::cos(PI / 4.0);
        assert!((libm::exp(-re * k1) / k1 - 1e-10).abs() < 1e-20);
        assert!(truncation_bound(&k, Decay::Power(0.5), 1e-8).is_err());
        assert!(ContourSpec::keyhole(2.0, Some(1.0)).is_err());
    }
}
