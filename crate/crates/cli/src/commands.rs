//! One function per subcommand. Each returns the JSON report plus the CSV
//! tables it produced; writing them out is left to the caller.

use std::sync::Arc;
use std::time::Instant;

use torus_psido::calculus::{build_parametrix, ray_minimal_growth_check, residual_decay_sweep};
use torus_psido::contour::{ContourSpec, QuadratureSpec};
use torus_psido::funcalc::{auto_loop, f_of_a_contour, f_of_a_spectral, f_of_symbol_expansion, heat_operator, relative_distance, HoloFunction};
use torus_psido::symbols::{parameter_ellipticity_check, positive_real_check, seminorm_estimate};
use torus_psido::traces::{heat_trace_sweep, szego_logdet, zeta_value};
use torus_psido::{op_tau0, Complex64, OperatorMatrix, SectorSpec, SymbolField};

use crate::config::{ContourKindName, FunctionConfig, RunConfig};
use crate::error::{CliError, Result};
use crate::report::*;
use crate::suite;

fn timed(op: &mut Operation, start: Instant) {
    op.wall_ms = start.elapsed().as_secs_f64() * 1e3;
}

fn multi_indices(n: usize, total: usize) -> Vec<([usize; 2], [usize; 2])> {
    let mut out = Vec::new();
    let r = |k: usize| if n == 2 { 0..=k } else { 0..=0 };
    for a0 in 0..=total {
        for a1 in r(total - a0) {
            for q0 in 0..=(total - a0 - a1) {
                for q1 in r(total - a0 - a1 - q0) {
                    out.push(([a0, a1], [q0, q1]));
                }
            }
        }
    }
    out
}

/// The keyhole sector for positive orders, the exterior of a disk otherwise.
fn ellipticity_sector(cfg: &RunConfig, s: &SymbolField) -> Result<SectorSpec> {
    if s.class().m > 0.0 {
        cfg.sector()
    } else {
        Ok(SectorSpec::finite_disk(2.0 * s.samples().sup_norm() + 1.0)?)
    }
}

pub fn check_symbol(cfg: &RunConfig) -> Result<Outcome> {
    let s = cfg.symbol_field()?;
    let mut ops = Vec::new();

    let t0 = Instant::now();
    let mut op = Operation::new("seminorms");
    for (alpha, q) in multi_indices(cfg.grid.n, 3) {
        let key = format!("alpha{}{}_q{}{}", alpha[0], alpha[1], q[0], q[1]);
        match seminorm_estimate(&s, alpha, q) {
            Ok(v) if v.is_finite() => {
                op.metric(key, v);
            }
            Ok(v) => op.fail(format!("{key} is not finite ({v})")),
            Err(e) => op.fail(format!("{key}: {e}")),
        }
    }
    timed(&mut op, t0);
    ops.push(op);

    let t0 = Instant::now();
    let mut op = Operation::new("parameter_ellipticity");
    let sector = ellipticity_sector(cfg, &s)?;
    match parameter_ellipticity_check(&s, &sector, &sector.lambda_samples(), 1.0) {
        Ok(r) if r.constant.is_finite() => {
            op.metric("constant", r.constant).complex("worst_lambda", r.worst_lambda);
            op.metric("worst_eta_1", r.worst_eta[0]).metric("worst_eta_2", r.worst_eta[1]);
        }
        Ok(r) => op.fail(format!("ellipticity constant is not finite ({})", r.constant)),
        Err(e) => op.fail(e.to_string()),
    }
    timed(&mut op, t0);
    ops.push(op);

    let t0 = Instant::now();
    let mut op = Operation::new("positive_real");
    let pr = positive_real_check(&op_tau0(&s))?;
    op.metric("margin", pr.margin).metric("positive", if pr.positive { 1.0 } else { 0.0 });
    timed(&mut op, t0);
    ops.push(op);

    Ok(Outcome { report: RunReport::new("check-symbol", cfg, ops), tables: Vec::new() })
}

pub fn resolvent_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let s = cfg.symbol_field()?;
    let t0 = Instant::now();
    let mut op = Operation::new("resolvent_sweep");
    let px = build_parametrix(&s, &cfg.sector()?, cfg.expansion.k, cfg.expansion.j)?;
    let sweep = residual_decay_sweep(&px, &cfg.sweep.lambda_moduli)?;
    let growth = ray_minimal_growth_check(&op_tau0(&s), &cfg.sweep.lambda_moduli)?;
    op.metric("K", cfg.expansion.k as f64).metric("J", cfg.expansion.j as f64);
    op.metric("ellipticity_constant", px.ellipticity_constant);
    op.metric("slope_full", sweep.slope_full);
    op.metric("max_product", growth.max_product);
    let exact = sweep.rows.iter().all(|r| r.residual_norm <= 1e-13);
    if exact {
        // no decay to fit when the parametrix is exact to roundoff
        op.metric("slope", sweep.slope);
        op.notes.push("parametrix exact to roundoff; slope gate skipped".into());
    } else {
        op.gate_le("slope", sweep.slope, cfg.tolerances.residual_slope);
    }
    op.gate_le("max_product_gate", growth.max_product, cfg.tolerances.growth);
    let mut t = Table::new("resolvent_sweep", &RESOLVENT_HEADER);
    for r in &sweep.rows {
        t.push(vec![r.lambda_modulus, r.residual_norm, r.resolvent_norm, r.product, sweep.slope]);
    }
    timed(&mut op, t0);
    Ok(Outcome { report: RunReport::new("resolvent-sweep", cfg, vec![op]), tables: vec![t] })
}

fn contour_for(cfg: &RunConfig, f: &HoloFunction, a: &OperatorMatrix) -> Result<ContourSpec> {
    match cfg.contour.spec(cfg.contour.kind_for(Some(f)))? {
        Some(c) => Ok(c),
        None => Ok(auto_loop(a.eigenvalues()?)?),
    }
}

pub fn funcalc(cfg: &RunConfig, flag: Option<&FunctionConfig>) -> Result<Outcome> {
    let fc = flag.or(cfg.function.as_ref()).ok_or_else(|| CliError::config("function", "no function given (use --f or [function])"))?;
    let f = fc.holo()?;
    let s = cfg.symbol_field()?;
    let a = op_tau0(&s);
    let c = contour_for(cfg, &f, &a)?;
    let q = cfg.contour.quadrature();
    let tol = &cfg.tolerances;
    let mut ops = Vec::new();

    let t0 = Instant::now();
    let mut op = Operation::new(format!("cross_method[{}]", f.name()));
    let contour = f_of_a_contour(&a, &f, &c, &q)?;
    let spectral = f_of_a_spectral(&a, &f)?;
    op.metric("eigenvector_condition", a.eigen()?.cond);
    op.gate_le("contour_vs_spectral", relative_distance(&contour, &spectral), tol.cross_method);
    let oracle_norm = spectral.operator_norm()?;
    match build_parametrix(&s, &cfg.sector()?, cfg.expansion.k, cfg.expansion.j) {
        Ok(px) => {
            for g in 0..=cfg.expansion.k.min(cfg.expansion.j) {
                match f_of_symbol_expansion(&px, &f, g) {
                    Ok(sym) => {
                        let gap = op_tau0(&sym).sub(&spectral).operator_norm()?;
                        op.metric(format!("expansion_gap_grade{g}"), gap);
                        op.metric(format!("expansion_relative_gap_grade{g}"), gap / oracle_norm);
                    }
                    Err(e) => op.notes.push(format!("symbol expansion grade {g}: {e}")),
                }
            }
        }
        Err(e) => op.notes.push(format!("symbol expansion unavailable: {e}")),
    }
    match f {
        HoloFunction::ExpScaled(t) => {
            let half = heat_operator(&a, 0.5 * t, &c, &q)?;
            let full = heat_operator(&a, t, &c, &q)?;
            op.gate_le("semigroup_residual", relative_distance(&half.mul(&half), &full), tol.semigroup);
        }
        HoloFunction::Power(z) if c.kind == torus_psido::contour::ContourKind::Keyhole => {
            let half = f_of_a_contour(&a, &HoloFunction::Power(0.5 * z), &c, &q)?;
            op.gate_le("group_residual", relative_distance(&half.mul(&half), &contour), tol.group_law);
        }
        _ => {}
    }
    timed(&mut op, t0);
    ops.push(op);

    let t0 = Instant::now();
    let mut op = Operation::new("quadrature_convergence");
    let mut table = Table::new("funcalc_convergence", &CONVERGENCE_HEADER);
    for n in [10usize, 20, 40, 80, 160, 320] {
        let qn = QuadratureSpec { nodes_per_ray: n, nodes_on_circle: n.max(16), ..q };
        let err = relative_distance(&f_of_a_contour(&a, &f, &c, &qn)?, &spectral);
        table.push(vec![n as f64, qn.nodes_on_circle as f64, err]);
        op.metric(format!("error_n{n}"), err);
    }
    timed(&mut op, t0);
    ops.push(op);

    Ok(Outcome { report: RunReport::new("funcalc", cfg, ops), tables: vec![table] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Szego,
    Heat,
    Zeta,
}

impl std::str::FromStr for Which {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "szego" => Ok(Which::Szego),
            "heat" => Ok(Which::Heat),
            "zeta" => Ok(Which::Zeta),
            other => Err(CliError::config("traces", format!("expected szego, heat or zeta, got {other:?}"))),
        }
    }
}

fn rel(x: Complex64, y: Complex64) -> f64 {
    (x - y).norm() / y.norm()
}

pub fn traces(cfg: &RunConfig, which: Which) -> Result<Outcome> {
    let s = cfg.symbol_field()?;
    let grade = cfg.expansion.grade;
    let tol = &cfg.tolerances;
    let t0 = Instant::now();
    let (mut op, tables) = match which {
        Which::Szego => (szego(&s, grade, tol)?, Vec::new()),
        Which::Heat => heat(&s, &cfg.sweep.t, grade)?,
        Which::Zeta => {
            if cfg.contour.kind_for(None) != ContourKindName::Keyhole {
                return Err(CliError::config("contour.kind", "zeta values use the keyhole contour"));
            }
            let c = cfg.contour.spec(ContourKindName::Keyhole)?.expect("keyhole is always explicit");
            zeta(&s, &cfg.sweep.z, &c, &cfg.contour.quadrature(), grade, tol.zeta)?
        }
    };
    timed(&mut op, t0);
    let name = match which {
        Which::Szego => "traces-szego",
        Which::Heat => "traces-heat",
        Which::Zeta => "traces-zeta",
    };
    Ok(Outcome { report: RunReport::new(name, cfg, vec![op]), tables })
}

fn szego(s: &Arc<SymbolField>, grade: usize, tol: &crate::config::Tolerances) -> Result<Operation> {
    let r = szego_logdet(s, grade)?;
    let mut op = Operation::new("szego_logdet");
    let o = r.operator_side[0];
    let lu = r.reference.expect("Szegő reports carry the LU reference");
    op.complex("operator_side", o).complex("lu_reference", lu);
    op.gate_le("operator_vs_lu", (o - lu).norm(), tol.szego_lu);
    for (g, v) in r.symbol_by_grade.iter().enumerate() {
        op.complex(&format!("symbol_grade{g}"), v[0]);
        op.metric(format!("discrepancy_grade{g}"), (v[0] - o).norm());
    }
    if s.is_x_independent() {
        op.gate_le("x_independent_control", (r.symbol_corrected[0] - lu).norm(), tol.szego_control);
    }
    Ok(op)
}

fn heat(s: &Arc<SymbolField>, ts: &[f64], grade: usize) -> Result<(Operation, Vec<Table>)> {
    let r = heat_trace_sweep(s, ts, grade)?;
    let mut op = Operation::new("heat_trace");
    let mut t = Table::new("heat_trace", &HEAT_HEADER);
    let (dl, dc) = (r.discrepancy_leading(), r.discrepancy_corrected());
    for i in 0..ts.len() {
        t.push(vec![ts[i], r.operator_side[i].re, r.symbol_leading[i].re, r.symbol_corrected[i].re, dl[i], dc[i]]);
    }
    if r.operator_side.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        op.fail("operator-side trace is not finite");
    }
    op.metric("grade", grade as f64);
    op.metric("slope_leading", r.slope_leading.unwrap_or(f64::NAN));
    op.metric("slope_corrected", r.slope_corrected.unwrap_or(f64::NAN));
    op.metric("order_gain", r.slope_corrected.unwrap_or(f64::NAN) - r.slope_leading.unwrap_or(f64::NAN));
    for (g, vals) in r.symbol_by_grade.iter().enumerate() {
        let d: Vec<f64> = vals.iter().zip(&r.operator_side).map(|(s, o)| (s - o).norm()).collect();
        op.metric(format!("slope_grade{g}"), suite::log_log_slope(ts, &d));
    }
    Ok((op, vec![t]))
}

fn zeta(s: &Arc<SymbolField>, zs: &[[f64; 2]], c: &ContourSpec, q: &QuadratureSpec, grade: usize, tol: f64) -> Result<(Operation, Vec<Table>)> {
    let mut op = Operation::new("zeta");
    let mut t = Table::new("zeta", &ZETA_HEADER);
    for (i, &[re, im]) in zs.iter().enumerate() {
        let z = Complex64::new(re, im);
        let r = zeta_value(s, z, c, q, grade)?;
        let (o, ct, sym) = (r.operator_side[0], r.contour_side.as_ref().expect("zeta reports carry the contour side")[0], r.symbol_corrected[0]);
        t.push(vec![re, im, o.re, ct.re, sym.re]);
        op.complex(&format!("z{i}_operator"), o).complex(&format!("z{i}_contour"), ct).complex(&format!("z{i}_symbol"), sym);
        op.gate_le(&format!("z{i}_contour_vs_operator"), rel(ct, o), tol);
        op.metric(format!("z{i}_symbol_vs_operator"), rel(sym, o));
        if let Some(u) = &r.unnormalized_symbol {
            // the displayed formula without the (2 pi)^{-n} prefactor
            op.metric(format!("z{i}_unnormalized_ratio"), (u[0] / o).re);
        }
    }
    Ok((op, vec![t]))
}

/// Runs every acceptance criterion; one operation per criterion.
pub fn all(cfg: &RunConfig) -> Result<Outcome> {
    let run = suite::run_all(&cfg.tolerances, cfg.seed);
    let ops = run.criteria.into_iter().map(|c| c.operation).collect();
    Ok(Outcome { report: RunReport::new("all", cfg, ops), tables: run.tables })
}
