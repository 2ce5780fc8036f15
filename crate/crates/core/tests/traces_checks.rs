use std::sync::Arc;

use torus_psido::contour::{ContourSpec, QuadratureSpec};
use torus_psido::traces::*;
use torus_psido::*;

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn all_families() -> Vec<Family> {
    vec![
        Family::Constant(Complex64::new(2.0, -1.0)),
        Family::BesselPower(2.0),
        Family::BesselPower(-1.5),
        Family::LaplacePlusOne,
        Family::PerturbedElliptic { m: 2.0, rho: 0.5, delta: 0.0, eps0: 0.25 },
        Family::PerturbedElliptic { m: 1.0, rho: 1.0, delta: 0.0, eps0: 0.25 },
        Family::ZeroOrder { eps0: 0.25 },
        Family::NegativeOrder { order: -2.0, eps0: 0.25 },
    ]
}

#[test]
fn discrete_trace_identity_for_builtins() {
    for fam in all_families() {
        for (n, size) in [(1usize, 32usize), (2, 16)] {
            let g = TorusGrid::new(n, size).unwrap();
            let s = SymbolField::family(&g, fam).unwrap();
            let (t, m) = (trace_symbol(&s), op_tau0(&s).trace());
            assert!((t - m).norm() <= 1e-12 * m.norm(), "{fam:?} on T^{n}: {t} vs {m}");
        }
    }
}

#[test]
fn szego_operator_side_matches_lu() {
    for (n, size, order) in [(1usize, 32usize, -2.0), (1, 16, -1.5), (2, 8, -3.0)] {
        let g = TorusGrid::new(n, size).unwrap();
        let a = Arc::new(SymbolField::family(&g, Family::NegativeOrder { order, eps0: 0.25 }).unwrap());
        let r = szego_logdet(&a, 0).unwrap();
        let lu = r.reference.unwrap();
        assert!((r.operator_side[0] - lu).norm() <= 1e-8, "T^{n} order {order}: {} vs {lu}", r.operator_side[0]);
    }
}

#[test]
fn trace_class_gates() {
    let g = TorusGrid::new(2, 8).unwrap();
    // order -2 is not below -n on the 2-torus
    let a = Arc::new(SymbolField::family(&g, Family::NegativeOrder { order: -2.0, eps0: 0.25 }).unwrap());
    assert!(matches!(szego_logdet(&a, 0), Err(Error::Gate(_))));
    let l = Arc::new(SymbolField::family(&g, Family::LaplacePlusOne).unwrap());
    let k = ContourSpec::keyhole(0.25, None).unwrap();
    assert!(matches!(zeta_value(&l, c(1.0), &k, &QuadratureSpec::default(), 0), Err(Error::Gate(_))));
    assert!(zeta_value(&l, c(1.1), &k, &QuadratureSpec::default(), 0).is_ok());
}

#[test]
fn heat_trace_decreases_for_real_spectra() {
    let ts: Vec<f64> = (1..=12).map(|i| i as f64 / 12.0).collect();
    for fam in [Family::BesselPower(2.0), Family::LaplacePlusOne, Family::BesselPower(1.0), Family::PerturbedElliptic { m: 2.0, rho: 1.0, delta: 0.0, eps0: 0.25 }] {
        let g = TorusGrid::new(1, 16).unwrap();
        let a = Arc::new(SymbolField::family(&g, fam).unwrap());
        let op = op_tau0(&a);
        let ev = op.eigenvalues().unwrap();
        if ev.iter().any(|v| v.im.abs() > 1e-8 * v.norm()) {
            continue;
        }
        let r = heat_trace_sweep(&a, &ts, 0).unwrap();
        for w in r.operator_side.windows(2) {
            assert!(w[1].re < w[0].re && w[1].im.abs() < 1e-9 * w[1].re, "{fam:?}: {:?}", r.operator_side);
        }
    }
}

#[test]
fn zeta_cross_method_agreement() {
    let k = ContourSpec::keyhole(0.25, None).unwrap();
    let q = QuadratureSpec::default();
    let cases = [
        (1usize, 32usize, Family::BesselPower(2.0), vec![c(1.0), Complex64::new(1.0, 0.5), c(2.0)]),
        (1, 32, Family::LaplacePlusOne, vec![c(0.75)]),
        (2, 8, Family::LaplacePlusOne, vec![c(1.5), Complex64::new(1.25, -1.0)]),
    ];
    for (n, size, fam, zs) in cases {
        let g = TorusGrid::new(n, size).unwrap();
        let a = Arc::new(SymbolField::family(&g, fam).unwrap());
        for z in zs {
            let r = zeta_value(&a, z, &k, &q, 0).unwrap();
            let (o, ct, s) = (r.operator_side[0], r.contour_side.as_ref().unwrap()[0], r.symbol_leading[0]);
            let rel = |x: Complex64, y: Complex64| (x - y).norm() / y.norm();
            assert!(rel(ct, o) <= 1e-6 && rel(s, o) <= 1e-6 && rel(s, ct) <= 1e-6, "{fam:?} T^{n} z={z}: {o} {ct} {s}");
            // the same lattice sum without the normalization
            let un = r.unnormalized_symbol.as_ref().unwrap()[0];
            assert!(rel(un, s * (2.0 * std::f64::consts::PI).powi(n as i32)) <= 1e-12);
        }
    }
}

#[test]
fn kernel_diagonal_sums_to_trace() {
    let g = TorusGrid::new(2, 8).unwrap();
    let s = SymbolField::family(&g, Family::PerturbedElliptic { m: 2.0, rho: 0.5, delta: 0.0, eps0: 0.25 }).unwrap();
    let total: Complex64 = kernel_diagonal(&s).iter().sum();
    assert!((total - trace_symbol(&s)).norm() <= 1e-12 * total.norm());
}
