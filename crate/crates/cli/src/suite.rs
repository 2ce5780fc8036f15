//! The acceptance suite: ten criteria, each run at its stated tolerance and
//! reported as one operation with its diagnostics.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torus_psido::calculus::{build_parametrix, ray_minimal_growth_check, residual_decay_sweep};
use torus_psido::contour::{ContourSpec, QuadratureSpec};
use torus_psido::funcalc::{complex_power, f_of_a_contour, f_of_a_spectral, f_of_symbol_expansion, relative_distance, HoloFunction};
use torus_psido::spectral::fit_slope;
use torus_psido::symbols::positive_real_check;
use torus_psido::traces::{heat_trace_sweep, szego_logdet, trace_symbol, zeta_value};
use torus_psido::{op_tau0, op_tau1, Complex64, Family, OperatorMatrix, SectorSpec, SymbolField, TorusGrid, TrigTerm};

use crate::config::{log_spaced, Tolerances};
use crate::error::Result;
use crate::report::{Operation, Table, CONVERGENCE_HEADER, HEAT_HEADER, RESOLVENT_HEADER, ZETA_HEADER};

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub operation: Operation,
    /// One-line diagnostic.
    pub summary: String,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.operation.passed
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        format!("criterion {:>2} [{verdict}] {}: {}", self.id, self.title, self.summary)
    }
}

pub struct SuiteRun {
    pub criteria: Vec<Criterion>,
    pub tables: Vec<Table>,
}

pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(f64::MIN_POSITIVE).ln()).collect();
    fit_slope(&lx, &ly)
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn family(n: usize, size: usize, f: Family) -> Result<Arc<SymbolField>> {
    Ok(Arc::new(SymbolField::family(&TorusGrid::new(n, size)?, f)?))
}

fn perturbed() -> Family {
    Family::PerturbedElliptic { m: 2.0, rho: 0.5, delta: 0.0, eps0: 0.25 }
}

fn keyhole() -> ContourSpec {
    ContourSpec::keyhole(0.25, None).expect("valid keyhole")
}

fn spectral_norm(a: &OperatorMatrix) -> Result<f64> {
    Ok(a.operator_norm()?)
}

/// A random trig polynomial with one zero mode; the zero mode keeps the trace
/// away from 0 so a relative error is meaningful.
pub fn random_trig(rng: &mut ChaCha8Rng, n: usize) -> Vec<TrigTerm> {
    let amp = |rng: &mut ChaCha8Rng| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut terms = vec![TrigTerm {
        k: [0, 0],
        amp: Complex64::from_polar(rng.random_range(0.5..1.0), rng.random_range(-PI..PI)),
        order: rng.random_range(-2.0..2.0),
        tilt: rng.random_range(-0.5..0.5),
    }];
    for _ in 0..rng.random_range(0..4) {
        let mut k = [rng.random_range(-3..=3), if n == 2 { rng.random_range(-3..=3) } else { 0 }];
        if k == [0, 0] {
            k[0] = 1;
        }
        terms.push(TrigTerm { k, amp: amp(rng), order: rng.random_range(-2.0..2.0), tilt: rng.random_range(-0.5..0.5) });
    }
    terms
}

fn finish(id: u8, title: &'static str, start: Instant, res: Result<(Operation, String)>) -> Criterion {
    let (mut operation, summary) = match res {
        Ok(x) => x,
        Err(e) => {
            let mut op = Operation::new(format!("criterion_{id}"));
            op.fail(format!("did not complete: {e}"));
            (op, format!("did not complete: {e}"))
        }
    };
    operation.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Criterion { id, title, operation, summary }
}

fn c1_trace_identity(tol: &Tolerances, seed: u64) -> Result<(Operation, String)> {
    let start = Instant::now();
    let mut op = Operation::new("criterion_1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (n, size) in [(1usize, 32usize), (2, 16)] {
        let g = TorusGrid::new(n, size)?;
        let mut w: f64 = 0.0;
        for _ in 0..20 {
            let s = SymbolField::trig(&g, random_trig(&mut rng, n))?;
            let m = op_tau0(&s).trace();
            w = w.max((trace_symbol(&s) - m).norm() / m.norm());
        }
        op.metric(format!("max_relative_error_T{n}"), w);
        worst = worst.max(w);
    }
    let secs = start.elapsed().as_secs_f64();
    op.gate_le("max_relative_error", worst, tol.trace_identity);
    op.gate_le("runtime_s", secs, 5.0);
    Ok((op, format!("max rel err {worst:.2e} over 20+20 symbols (tol {:.0e}), {secs:.2}s", tol.trace_identity)))
}

fn c2_oracle_equivalence(tol: &Tolerances) -> Result<(Operation, String)> {
    let start = Instant::now();
    let mut op = Operation::new("criterion_2");
    let a = op_tau0(&*family(1, 32, perturbed())?);
    let q = QuadratureSpec::default();
    let expo = ContourSpec::exponential(0.25, None, PI / 4.0)?;
    let mut parts = Vec::new();
    for (key, f, contour) in [
        ("inverse", HoloFunction::Power(c(-1.0)), keyhole()),
        ("inverse_sqrt", HoloFunction::Power(c(-0.5)), keyhole()),
        ("heat_t1", HoloFunction::ExpScaled(1.0), expo),
    ] {
        let d = relative_distance(&f_of_a_contour(&a, &f, &contour, &q)?, &f_of_a_spectral(&a, &f)?);
        op.gate_le(key, d, tol.cross_method);
        parts.push(format!("{key} {d:.1e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    op.gate_le("runtime_s", secs, 60.0);
    Ok((op, format!("{} (tol {:.0e}), {secs:.2}s", parts.join(", "), tol.cross_method)))
}

fn c3_group_law(tol: &Tolerances) -> Result<(Operation, String)> {
    let mut op = Operation::new("criterion_3");
    let a = op_tau0(&*family(1, 32, perturbed())?);
    let q = QuadratureSpec::default();
    let h = complex_power(&a, c(0.5), &keyhole(), &q)?;
    let sq = spectral_norm(&h.mul(&h).sub(&a))? / spectral_norm(&a)?;
    let z = Complex64::new(0.3, 0.2);
    let p = complex_power(&a, z, &keyhole(), &q)?.mul(&complex_power(&a, -z, &keyhole(), &q)?);
    let inv = spectral_norm(&p.sub(&OperatorMatrix::identity(a.grid())))?;
    op.gate_le("half_squared", sq, tol.group_law);
    op.gate_le("complex_inverse", inv, tol.group_law);
    Ok((op, format!("|A^(1/2)A^(1/2)-A|/|A| {sq:.1e}, |A^z A^-z - I| {inv:.1e} (tol {:.0e})", tol.group_law)))
}

fn c4_minimal_growth(tol: &Tolerances) -> Result<(Operation, String)> {
    let mut op = Operation::new("criterion_4");
    let rs = [10.0, 1e2, 1e3, 1e4];
    let fams = [
        ("constant", Family::Constant(c(1.0))),
        ("bessel_power_1", Family::BesselPower(1.0)),
        ("bessel_power_2", Family::BesselPower(2.0)),
        ("laplace_plus_one", Family::LaplacePlusOne),
        ("perturbed_2_0.5", perturbed()),
        ("perturbed_1_1", Family::PerturbedElliptic { m: 1.0, rho: 1.0, delta: 0.0, eps0: 0.25 }),
        ("zero_order", Family::ZeroOrder { eps0: 0.25 }),
    ];
    let mut worst: f64 = 0.0;
    let mut skipped = Vec::new();
    for (n, size) in [(1usize, 32usize), (2, 16)] {
        for (name, fam) in fams {
            let s = family(n, size, fam)?;
            let a = op_tau0(&s);
            if !positive_real_check(&a)?.positive {
                skipped.push(format!("{name}@T{n}"));
                continue;
            }
            let p = ray_minimal_growth_check(&a, &rs)?.max_product;
            let key = format!("{name}_T{n}");
            op.gate_le(&key, p, tol.growth);
            worst = worst.max(p);
            if s.is_x_independent() {
                // diagonal oracle: r / |a(eta) + r|
                let g = s.grid();
                let diag = rs
                    .iter()
                    .flat_map(|&r| (0..g.points()).map(move |e| (r, e)))
                    .map(|(r, e)| r / (s.samples().at(0, e) + r).norm())
                    .fold(0.0, f64::max);
                op.gate_le(&format!("{key}_x_independent"), p, 1.0 + 1e-12);
                op.gate_le(&format!("{key}_oracle_gap"), (p - diag).abs(), 1e-10 * diag);
            }
        }
    }
    if !skipped.is_empty() {
        op.notes.push(format!("not positive real, skipped: {}", skipped.join(", ")));
    }
    Ok((op, format!("max r|(A+r)^-1| = {worst:.3} over 7 families on T^1 and T^2 (bound {})", tol.growth)))
}

fn c5_residual_decay(tol: &Tolerances, tables: &mut Vec<Table>) -> Result<(Operation, String)> {
    let mut op = Operation::new("criterion_5");
    let s = family(1, 32, perturbed())?;
    let sector = SectorSpec::keyhole(0.75 * PI, 0.5)?;
    let rs = log_spaced(10.0, 1e4, 13);
    let s22 = residual_decay_sweep(&build_parametrix(&s, &sector, 2, 2)?, &rs)?;
    let s11 = residual_decay_sweep(&build_parametrix(&s, &sector, 1, 1)?, &rs)?;
    op.gate_le("slope_22", s22.slope, tol.residual_slope);
    op.metric("slope_11", s11.slope);
    op.gate_le("slope_22_minus_11", s22.slope - s11.slope, 0.0);
    op.metric("slope_full_22", s22.slope_full).metric("slope_full_11", s11.slope_full);
    let mut t = Table::new("acceptance_resolvent_sweep", &RESOLVENT_HEADER);
    for r in &s22.rows {
        t.push(vec![r.lambda_modulus, r.residual_norm, r.resolvent_norm, r.product, s22.slope]);
    }
    tables.push(t);
    Ok((
        op,
        format!(
            "slope (2,2) {:.3}, (1,1) {:.3} on |eta| <= N/4; full lattice {:.3} / {:.3}",
            s22.slope, s11.slope, s22.slope_full, s11.slope_full
        ),
    ))
}

fn c6_expansion_improvement(tol: &Tolerances, tables: &mut Vec<Table>) -> Result<(Operation, String)> {
    let mut op = Operation::new("criterion_6");
    let f = HoloFunction::Power(c(-1.0));
    let sector = SectorSpec::keyhole(0.75 * PI, 0.5)?;
    let mut parts = Vec::new();
    for size in [16usize, 32] {
        let s = family(1, size, perturbed())?;
        let a = op_tau0(&s);
        let oracle = f_of_a_spectral(&a, &f)?;
        let px = build_parametrix(&s, &sector, 2, 2)?;
        let gaps: Vec<f64> = (0..=2)
            .map(|g| Ok(spectral_norm(&op_tau0(&f_of_symbol_expansion(&px, &f, g)?).sub(&oracle))?))
            .collect::<Result<_>>()?;
        for (g, v) in gaps.iter().enumerate() {
            op.metric(format!("gap_N{size}_grade{g}"), *v);
        }
        op.gate_le(&format!("improvement_N{size}"), gaps[1] - gaps[0] * (1.0 - tol.strict_margin), 0.0);
        parts.push(format!("N={size}: {:.6e} -> {:.6e} (grade 2 {:.3e})", gaps[0], gaps[1], gaps[2]));
        if size == 16 {
            // convergence of the contour path on the same operator, for plotting
            let mut t = Table::new("acceptance_funcalc_convergence", &CONVERGENCE_HEADER);
            for n in [10usize, 20, 40, 80, 160, 320] {
                let q = QuadratureSpec { nodes_per_ray: n, nodes_on_circle: n.max(16), ..Default::default() };
                t.push(vec![n as f64, q.nodes_on_circle as f64, relative_distance(&f_of_a_contour(&a, &f, &keyhole(), &q)?, &oracle)]);
            }
            tables.push(t);
        }
    }
    Ok((op, format!("|Op(f_k) - f(A)|, leading -> first correction: {}", parts.join("; "))))
}

fn c7_heat_trace(tol: &Tolerances, tables: &mut Vec<Table>) -> Result<(Operation, String)> {
    let mut op = Operation::new("criterion_7");
    let s = family(1, 8, Family::LaplacePlusOne)?;
    let r = heat_trace_sweep(&s, &[1.0], 0)?;
    let direct: f64 = (-4i32..4).map(|e| (-(1.0 + (e * e) as f64)).exp()).sum();
    let o = r.operator_side[0];
    op.metric("lattice_sum", direct).complex("operator_trace", o);
    op.gate_le("a_operator_vs_lattice", (o - c(direct)).norm(), tol.heat_lattice);
    op.gate_le("a_operator_vs_symbol_leading", (o - r.symbol_leading[0]).norm() / o.norm(), 1e-13);

    let ts = log_spaced(0.05, 0.4, 8);
    let p = family(1, 32, perturbed())?;
    let r = heat_trace_sweep(&p, &ts, 2)?;
    let disc = |g: usize| -> Vec<f64> { r.symbol_by_grade[g].iter().zip(&r.operator_side).map(|(s, o)| (s - o).norm()).collect() };
    let slopes: Vec<f64> = (0..=2).map(|g| log_log_slope(&ts, &disc(g))).collect();
    for (g, v) in slopes.iter().enumerate() {
        op.metric(format!("b_slope_grade{g}"), *v);
    }
    let gain = slopes[1] - slopes[0];
    op.metric("b_order_gain", gain);
    op.metric("b_order_gain_grade2", slopes[2] - slopes[0]);
    if gain < tol.heat_order_gain {
        op.fail(format!("order gain {gain:.3} below {}", tol.heat_order_gain));
    }
    let mut t = Table::new("acceptance_heat_trace", &HEAT_HEADER);
    let (d0, d1) = (disc(0), disc(1));
    for i in 0..ts.len() {
        t.push(vec![ts[i], r.operator_side[i].re, r.symbol_by_grade[0][i].re, r.symbol_by_grade[1][i].re, d0[i], d1[i]]);
    }
    tables.push(t);
    Ok((
        op,
        format!(
            "(a) tr e^-A = {:.6} vs lattice {direct:.6}; (b) slopes grade 0/1/2 = {:.3}/{:.3}/{:.3}, gain {gain:.3} (need >= {})",
            o.re, slopes[0], slopes[1], slopes[2], tol.heat_order_gain
        ),
    ))
}

fn c8_zeta(tol: &Tolerances, tables: &mut Vec<Table>) -> Result<(Operation, String)> {
    let mut op = Operation::new("criterion_8");
    let s = family(1, 32, Family::LaplacePlusOne)?;
    let q = QuadratureSpec::default();
    let mut t = Table::new("acceptance_zeta", &ZETA_HEADER);
    let mut summary = String::new();
    for z in [c(0.75), c(1.0), Complex64::new(1.0, 1.0), c(1.5), c(2.0), c(3.0)] {
        let r = zeta_value(&s, z, &keyhole(), &q, 0)?;
        let (o, ct, sym) = (r.operator_side[0], r.contour_side.as_ref().expect("contour side")[0], r.symbol_leading[0]);
        t.push(vec![z.re, z.im, o.re, ct.re, sym.re]);
        if z == c(2.0) {
            let rel = |x: Complex64, y: Complex64| (x - y).norm() / y.norm();
            op.complex("operator", o).complex("contour", ct).complex("symbol", sym);
            op.gate_le("operator_vs_contour", rel(ct, o), tol.zeta);
            op.gate_le("operator_vs_symbol", rel(sym, o), tol.zeta);
            op.gate_le("contour_vs_symbol", rel(sym, ct), tol.zeta);
            let ratio = (r.unnormalized_symbol.as_ref().expect("unnormalized symbol")[0] / o).re;
            op.metric("unnormalized_over_operator", ratio);
            // reproduce the prefactor discrepancy: without (2 pi)^{-n} the value is off by 2 pi
            op.gate_le("prefactor_reproduced", (ratio - 2.0 * PI).abs(), 1e-9);
            summary = format!(
                "z=2: eigen {:.12}, contour {:.12}, symbol {:.12}; without the (2pi)^-n prefactor the symbol side is {ratio:.6}x too large",
                o.re, ct.re, sym.re
            );
        }
    }
    tables.push(t);
    Ok((op, summary))
}

fn c9_szego(tol: &Tolerances) -> Result<(Operation, String)> {
    let mut op = Operation::new("criterion_9");
    let s = family(1, 32, Family::NegativeOrder { order: -2.0, eps0: 0.25 })?;
    let r = szego_logdet(&s, 2)?;
    let lu = r.reference.expect("LU reference");
    op.complex("lu", lu).complex("operator_side", r.operator_side[0]);
    let d: Vec<f64> = r.symbol_by_grade.iter().map(|v| (v[0] - lu).norm()).collect();
    for (g, v) in d.iter().enumerate() {
        op.metric(format!("discrepancy_grade{g}"), *v);
    }
    let closer = d[1] < d[0] * (1.0 - tol.strict_margin);
    if !closer {
        op.fail(format!("first correction not closer: {:.6e} vs leading {:.6e}", d[1], d[0]));
    }
    let ctl = family(1, 32, Family::NegativeOrder { order: -2.0, eps0: 0.0 })?;
    let rc = szego_logdet(&ctl, 2)?;
    let gap = (rc.symbol_corrected[0] - rc.reference.expect("LU reference")).norm();
    op.gate_le("control_x_independent", gap, tol.szego_control);
    Ok((
        op,
        format!("|S_g - logdet_LU| grade 0/1/2 = {:.3e}/{:.3e}/{:.3e}; x-independent control {gap:.1e}", d[0], d[1], d[2]),
    ))
}

fn c10_quantization(tol: &Tolerances, seed: u64) -> Result<(Operation, String)> {
    let mut op = Operation::new("criterion_10");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let g = TorusGrid::new(1, 32)?;
    let mut worst: f64 = 0.0;
    let mut symbols: Vec<SymbolField> = (0..20).map(|_| SymbolField::trig(&g, random_trig(&mut rng, 1))).collect::<std::result::Result<_, _>>()?;
    for fam in [Family::BesselPower(2.0), perturbed(), Family::ZeroOrder { eps0: 0.25 }, Family::NegativeOrder { order: -2.0, eps0: 0.25 }] {
        symbols.push(SymbolField::family(&g, fam)?);
    }
    let mut direct_gap: f64 = 0.0;
    for s in &symbols {
        let rhs = op_tau0(&SymbolField::conj(s));
        let t1 = op_tau1(s);
        worst = worst.max(t1.adjoint().sub(&rhs).frobenius() / rhs.frobenius());
        // the two FFT assemblies mirror each other bit for bit, so also check
        // the right-quantized matrix against its defining double sum
        let m = g.points();
        let mut d2: f64 = 0.0;
        for j in 0..m {
            for k in 0..m {
                let v: Complex64 = (0..m).map(|e| s.samples().at(k, e) * g.phase(j, e) * g.phase(k, e).conj()).sum::<Complex64>() * g.norm_factor();
                d2 += (t1.matrix()[(j, k)] - v).norm_sqr();
            }
        }
        direct_gap = direct_gap.max(d2.sqrt() / t1.frobenius());
    }
    op.gate_le("adjoint", worst, tol.adjoint);
    op.gate_le("tau1_vs_direct_sum", direct_gap, tol.adjoint);

    let fams = [
        ("bessel_power_2", Family::BesselPower(2.0)),
        ("laplace_plus_one", Family::LaplacePlusOne),
        ("perturbed_2_0.5", perturbed()),
        ("perturbed_1_1", Family::PerturbedElliptic { m: 1.0, rho: 1.0, delta: 0.0, eps0: 0.25 }),
        ("zero_order", Family::ZeroOrder { eps0: 0.25 }),
        ("negative_order", Family::NegativeOrder { order: -2.0, eps0: 0.25 }),
    ];
    let mut spread: f64 = 1.0;
    for (name, fam) in fams {
        let mut norms = Vec::new();
        for size in [8usize, 16, 32] {
            let s = family(1, size, fam)?;
            let cl = s.class();
            let d = op_tau0(&s).sub(&op_tau1(&s));
            norms.push(d.sobolev_operator_norm(0.0, -cl.m + cl.remainder_drop())?);
        }
        let hi = norms.iter().cloned().fold(0.0, f64::max);
        let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        for (size, v) in [8, 16, 32].iter().zip(&norms) {
            op.metric(format!("tau_{name}_N{size}"), *v);
        }
        if hi > 1e-12 {
            op.gate_le(&format!("tau_{name}_ratio"), hi / lo, tol.bounded_ratio);
            spread = spread.max(hi / lo);
        }
    }
    Ok((op, format!("adjoint {worst:.1e}, tau=1 vs double sum {direct_gap:.1e} (tol {:.0e}); tau-difference max/min over N=8,16,32 at most {spread:.3}", tol.adjoint)))
}

pub fn run_all(tol: &Tolerances, seed: u64) -> SuiteRun {
    let mut tables = Vec::new();
    let mut criteria = Vec::new();
    let mut go = |id: u8, title: &'static str, f: &mut dyn FnMut(&mut Vec<Table>) -> Result<(Operation, String)>| {
        let start = Instant::now();
        let res = f(&mut tables);
        criteria.push(finish(id, title, start, res));
    };
    go(1, "discrete trace identity", &mut |_| c1_trace_identity(tol, seed));
    go(2, "contour vs spectral oracle", &mut |_| c2_oracle_equivalence(tol));
    go(3, "power group law", &mut |_| c3_group_law(tol));
    go(4, "ray of minimal growth", &mut |_| c4_minimal_growth(tol));
    go(5, "parametrix residual decay", &mut |t| c5_residual_decay(tol, t));
    go(6, "expansion improvement", &mut |t| c6_expansion_improvement(tol, t));
    go(7, "heat trace", &mut |t| c7_heat_trace(tol, t));
    go(8, "spectral zeta", &mut |t| c8_zeta(tol, t));
    go(9, "Szego log-determinant", &mut |_| c9_szego(tol));
    go(10, "adjoint and tau contracts", &mut |_| c10_quantization(tol, seed));
    SuiteRun { criteria, tables }
}
