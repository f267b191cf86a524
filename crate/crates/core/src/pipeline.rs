//! The check / reduce / verify runs behind the command line, with their
//! reports.

use std::fmt::Write as _;

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::jet::{exact, DifferentialForm};
use crate::oracle::{
    check_first_integral, check_solution, finite_difference_check, fix_constants, grid, integrate_trajectory, match_constants, max_difference,
    DriftReport, FdReport, FlowSystem, ResidualReport,
};
use crate::problem::{expr, ref_name, Problem};
use crate::reduction::{constant_symbol, partial_reduce, reduce, ReductionResult, Settings};
use crate::structure::{determining_residuals, verify_structure, SolvableStructure, StructureReport};
use crate::symbolic::{Expr, Point, Symbol, Verdict, ZeroTest};
use crate::symmetry::{commutator_table, describe_bracket, linearized_determining_residual, symmetry_verdict};

#[derive(Clone, Debug)]
pub struct Options {
    pub seed: u64,
    pub tol: f64,
    pub base_point: Option<f64>,
    pub exec: Exec,
}

impl Default for Options {
    fn default() -> Self {
        Options { seed: 0, tol: 1e-6, base_point: None, exec: Exec::default() }
    }
}

impl Options {
    pub fn settings(&self, p: &Problem) -> Settings {
        let x0 = self.base_point.or_else(|| p.file.oracle.as_ref().and_then(|o| o.base_point)).unwrap_or(1.0);
        let base = BigRational::from_float(x0).unwrap_or_else(|| BigRational::from_integer(1.into()));
        Settings { zero: ZeroTest::with_seed(self.seed), exec: self.exec, base }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub item: String,
    pub detail: String,
    pub ok: bool,
}

impl Row {
    fn new(item: impl Into<String>, detail: impl Into<String>, ok: bool) -> Row {
        Row { item: item.into(), detail: detail.into(), ok }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryRow {
    pub name: String,
    pub verdict: Verdict,
    /// Linearized test, for generating functions on the base equation.
    pub linearized: Option<Verdict>,
    pub expected: bool,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraRow {
    pub fields: Vec<String>,
    pub brackets: Vec<String>,
    pub derived_series: Vec<usize>,
    pub solvable: bool,
    pub jacobi: bool,
    pub tier: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub problem: String,
    pub symmetries: Vec<SymmetryRow>,
    pub algebras: Vec<AlgebraRow>,
    pub structure: Option<StructureReport>,
    pub fixtures: Vec<Row>,
    pub pass: bool,
}

fn sign_match(a: &Expr, b: &Expr, zt: &ZeroTest) -> Option<i32> {
    if zt.check(&(a - b)).is_zero() {
        Some(1)
    } else if zt.check(&(a + b)).is_zero() {
        Some(-1)
    } else {
        None
    }
}

fn form_sign_match(a: &DifferentialForm, b: &DifferentialForm, zt: &ZeroTest) -> Result<Option<i32>> {
    if a.sub(b)?.verdict(zt).is_zero() {
        Ok(Some(1))
    } else if a.add(b)?.verdict(zt).is_zero() {
        Ok(Some(-1))
    } else {
        Ok(None)
    }
}

fn closed_indices(s: &SolvableStructure) -> Vec<usize> {
    s.report.closedness.iter().filter(|c| c.closed.is_zero()).map(|c| c.index).collect()
}

/// Symmetry, algebra and structure checks plus every symbolic fixture.
pub fn run_check(p: &Problem, o: &Options) -> Result<(CheckReport, Option<SolvableStructure>)> {
    let s = o.settings(p);
    let zt = &s.zero;
    let mut symmetries = Vec::new();
    for (entry, (name, f)) in p.file.symmetries.iter().zip(&p.fields) {
        if entry.auxiliary {
            continue;
        }
        let verdict = symmetry_verdict(f, &[p.z.clone()], zt)?;
        let linearized = match (&entry.phi, &p.covering) {
            (Some(phi), None) => Some(zt.check(&linearized_determining_residual(&expr(phi)?, &p.ode))),
            _ => None,
        };
        let ok = verdict.is_zero() == entry.expect_symmetry && linearized.map_or(true, |l| l.is_zero() == verdict.is_zero());
        symmetries.push(SymmetryRow { name: name.clone(), verdict, linearized, expected: entry.expect_symmetry, ok });
    }

    let mut algebras = Vec::new();
    for names in &p.file.algebras {
        let fs = names.iter().map(|n| p.field(n).cloned()).collect::<Result<Vec<_>>>()?;
        let a = commutator_table(&fs, zt)?;
        let mut brackets = Vec::new();
        for i in 0..fs.len() {
            for j in i + 1..fs.len() {
                let c = a.bracket_coeffs(i, j);
                if c.iter().any(|x| x != &BigRational::from_integer(0.into())) {
                    brackets.push(describe_bracket(i, j, &c, names));
                }
            }
        }
        algebras.push(AlgebraRow {
            fields: names.clone(),
            brackets,
            derived_series: a.derived_series.clone(),
            solvable: a.solvable,
            jacobi: a.jacobi_holds(),
            tier: a.tier,
        });
    }

    let omega = p.volume();
    let mut fixtures = Vec::new();
    let fx = &p.file.fixtures;
    let structure = if p.file.structure.is_empty() {
        None
    } else {
        Some(verify_structure(&p.z, &p.structure()?, &omega, zt, s.exec)?)
    };
    if let Some(st) = &structure {
        if let Some(d) = &fx.delta {
            let m = sign_match(&st.delta, &expr(d)?, zt);
            fixtures.push(Row::new("Δ", format!("{} (sign {:?})", st.delta, m), m.is_some()));
        }
        for (i, comps) in &fx.omegas {
            let mut coeffs = vec![Expr::zero(); p.chart.dim()];
            for (k, v) in comps {
                let idx = p.chart.index(&Symbol::new(k)).ok_or_else(|| Error::Input(format!("ω{}: unknown coordinate {}", i, k)))?;
                coeffs[idx] = expr(v)?;
            }
            let target = DifferentialForm::one_form(&p.chart, coeffs)?;
            let mine = st.omega(*i);
            let m = if comps.len() == p.chart.dim() {
                form_sign_match(mine, &target, zt)?
            } else {
                let pick = |f: &DifferentialForm| f.coeffs().iter().enumerate().filter(|(j, _)| comps.contains_key(&p.chart.coord(*j).to_string())).map(|(_, c)| c.clone()).collect::<Vec<_>>();
                let (a, b) = (pick(mine), pick(&target));
                let plus = a.iter().zip(&b).all(|(x, y)| zt.check(&(x - y)).is_zero());
                let minus = a.iter().zip(&b).all(|(x, y)| zt.check(&(x + y)).is_zero());
                if plus { Some(1) } else if minus { Some(-1) } else { None }
            };
            fixtures.push(Row::new(format!("ω{}", i), format!("printed coefficients, sign {:?}", m), m.is_some()));
        }
        if let Some(closed) = &fx.closed {
            let got = closed_indices(st);
            fixtures.push(Row::new("closed forms", format!("dω = 0 for {:?}", got), &got == closed));
        }
        for (i, src) in &fx.integrals {
            let full = st.report.closedness.get(i - 1).map_or(false, |c| c.closed.is_zero());
            let e = expr(src)?;
            if full && !e.free_symbols().iter().any(|s| p.chart.index(s).is_none()) {
                let m = form_sign_match(&exact(&p.chart, &e), st.omega(*i), zt)?;
                fixtures.push(Row::new(format!("printed I{}", i), format!("d(I) = ω{} up to sign {:?}", i, m), m.is_some()));
            }
        }
    }
    for c in &fx.candidates {
        let mut chain = vec![p.z.clone()];
        chain.extend(p.fields_of(&c.chain)?);
        let cand = p.field_ref(&c.field)?;
        let v = Verdict::all(determining_residuals(&chain, &cand, &omega, zt)?.iter().map(|r| r.verdict(zt)));
        let names: Vec<String> = c.chain.iter().map(ref_name).collect();
        fixtures.push(Row::new(
            format!("candidate {}", ref_name(&c.field)),
            format!("determining residuals over {{Z, {}}}: {}", names.join(", "), v),
            v.is_zero() == c.expect_pass,
        ));
    }
    for r in &fx.rejected_orders {
        let st = verify_structure(&p.z, &p.fields_of(&r.order)?, &omega, zt, s.exec)?;
        let closed = closed_indices(&st);
        let ok = !st.report.accepted && st.report.rejected_at == Some(r.rejected_at) && r.closed.as_ref().map_or(true, |c| c == &closed);
        let names: Vec<String> = r.order.iter().map(ref_name).collect();
        fixtures.push(Row::new(
            format!("order [{}]", names.join(", ")),
            format!("rejected at {:?}, closed {:?}", st.report.rejected_at, closed),
            ok,
        ));
    }
    for order in &fx.accepted_orders {
        let st = verify_structure(&p.z, &p.fields_of(order)?, &omega, zt, s.exec)?;
        let names: Vec<String> = order.iter().map(ref_name).collect();
        fixtures.push(Row::new(format!("order [{}]", names.join(", ")), format!("accepted {}, closed {:?}", st.report.accepted, closed_indices(&st)), st.report.accepted));
    }
    if let Some(pf) = &fx.partial {
        let y1 = p.field_ref(&pf.symmetry)?;
        let frame = p.fields_of(&pf.frame)?;
        let inv: Vec<(Symbol, Expr)> = pf.invariants.iter().map(|(n, e)| Ok((Symbol::new(n), expr(e)?))).collect::<Result<_>>()?;
        let red = partial_reduce(&p.ode, &y1, &frame, &inv, &s)?;
        let mut target = DifferentialForm::zero(&p.chart, 1);
        for (n, e) in &inv {
            let coef = match pf.target.get(&n.to_string()) {
                Some(c) => crate::symbolic::substitute(&expr(c)?, &inv.iter().cloned().collect()),
                None => continue,
            };
            target = target.add(&exact(&p.chart, e).scale(&coef))?;
        }
        let v = Verdict::all(red.surviving.iter().map(|w| w.wedge(&target).map(|x| x.simplify().verdict(zt)).unwrap_or(Verdict::NonZero)));
        fixtures.push(Row::new("partial reduction", format!("{} surviving form(s), wedge with target: {}", red.surviving.len(), v), v.is_zero()));
    }
    let pass = symmetries.iter().all(|r| r.ok) && fixtures.iter().all(|r| r.ok) && structure.as_ref().map_or(true, |s| s.report.accepted);
    let report = CheckReport { problem: p.name(), symmetries, algebras, structure: structure.as_ref().map(|s| s.report.clone()), fixtures, pass };
    Ok((report, structure))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReduceReport {
    pub problem: String,
    pub check: CheckReport,
    pub reduction: Option<ReductionResult>,
    pub error: Option<String>,
    /// Produced solution against the fixture solutions.
    pub matches: Vec<Row>,
    pub pass: bool,
}

/// Constants of a solution: its free symbols off the chart, `x` excluded.
pub fn solution_constants(e: &Expr, p: &Problem) -> Vec<Symbol> {
    e.free_symbols().iter().filter(|s| p.chart.index(s).is_none()).cloned().collect()
}

fn point_of(m: &std::collections::BTreeMap<String, f64>) -> Point {
    m.iter().map(|(k, v)| (Symbol::new(k), *v)).collect()
}

pub fn run_reduce(p: &Problem, o: &Options) -> Result<ReduceReport> {
    let (check, st) = run_check(p, o)?;
    let s = o.settings(p);
    let mut matches = Vec::new();
    let (reduction, error) = match &st {
        Some(st) if st.report.accepted => match reduce(st, &s) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        },
        Some(_) => (None, Some("structure rejected".into())),
        None => (None, Some("no structure given".into())),
    };
    if let (Some(r), Some(orc)) = (&reduction, &p.file.oracle) {
        let fx = &p.file.fixtures;
        let x0 = orc.match_point.unwrap_or(1.0);
        let xs = orc.solution_range.map(|(a, b)| grid(a, b, 20)).unwrap_or_else(|| grid(0.5, 1.5, 20));
        for (ci, consts) in orc.fixture_constants.iter().enumerate() {
            let fixed = point_of(consts);
            for (bi, t) in fx.solutions.iter().enumerate() {
                let t = expr(t)?;
                let mut best: Option<(f64, Point)> = None;
                for b in &r.explicit_gauged {
                    let cs = solution_constants(b, p);
                    let Some(m) = match_constants(b, &cs, &t, &fixed, x0, o.seed) else { continue };
                    let mut env = fixed.clone();
                    env.extend(m.clone());
                    if let Ok(d) = max_difference(b, &t, &env, &xs) {
                        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                            best = Some((d, m));
                        }
                    }
                }
                let (ok, detail) = match &best {
                    Some((d, m)) => (*d < 1e-8, format!("max difference {:.2e} with {}", d, fmt_point(m))),
                    None => (false, "no produced branch could be matched".into()),
                };
                matches.push(Row::new(format!("solution branch {} vs fixture, constants set {}", bi + 1, ci + 1), detail, ok));
            }
        }
    }
    let pass = check.pass && reduction.is_some() && matches.iter().all(|m| m.ok);
    Ok(ReduceReport { problem: p.name(), check, reduction, error, matches, pass })
}

fn fmt_point(p: &Point) -> String {
    let parts: Vec<String> = p.iter().map(|(k, v)| format!("{} = {:.6}", k, v)).collect();
    parts.join(", ")
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRow {
    pub init: String,
    pub samples: usize,
    pub end: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionRow {
    pub solution: String,
    pub constants: String,
    pub report: Option<ResidualReport>,
    pub error: Option<String>,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub problem: String,
    pub drift_tolerance: f64,
    pub step_tolerance: f64,
    pub trajectories: Vec<TrajectoryRow>,
    pub drift: Vec<DriftReport>,
    /// Printed first integrals, constants fixed from the printed ones.
    pub fixture_drift: Vec<DriftReport>,
    /// Deliberately corrupted integrals; each must fail.
    pub controls: Vec<DriftReport>,
    pub finite_differences: Vec<FdReport>,
    pub solutions: Vec<SolutionRow>,
    pub notes: Vec<String>,
    pub pass: bool,
}

/// Ordered `(c_i, I_i)` pairs, highest index first.
fn cascade_pairs(r: &ReductionResult) -> Vec<(Symbol, Expr)> {
    r.integrals.iter().map(|f| (constant_symbol(f.index), f.value.clone())).collect()
}

pub fn run_verify(p: &Problem, o: &Options) -> Result<VerifyReport> {
    let s = o.settings(p);
    let orc = p.file.oracle.clone().unwrap_or_default();
    let sys = FlowSystem::from_field(&p.z)?;
    let mut notes = Vec::new();
    let reduction = match p.file.structure.is_empty() {
        true => None,
        false => {
            let st = verify_structure(&p.z, &p.structure()?, &p.volume(), &s.zero, s.exec)?;
            match reduce(&st, &s) {
                Ok(r) => Some(r),
                Err(e) => {
                    notes.push(format!("reduction failed: {}", e));
                    None
                }
            }
        }
    };
    let produced = reduction.as_ref().map(cascade_pairs).unwrap_or_default();
    let printed: Vec<(Symbol, Expr)> =
        p.file.fixtures.integrals.iter().rev().map(|(i, e)| Ok((constant_symbol(*i), expr(e)?))).collect::<Result<_>>()?;

    let inits: Vec<Point> = orc.inits.iter().map(point_of).collect();
    let runs = o.exec.map(&inits, |init| integrate_trajectory(&sys, init, orc.span, orc.step));
    let mut trajectories = Vec::new();
    let mut drift = Vec::new();
    let mut fixture_drift = Vec::new();
    let mut controls = Vec::new();
    let mut finite_differences = Vec::new();
    for (init, run) in inits.iter().zip(runs) {
        let t = match run {
            Ok(t) => t,
            Err(e) => {
                trajectories.push(TrajectoryRow { init: fmt_point(init), samples: 0, end: f64::NAN, error: Some(e.to_string()) });
                continue;
            }
        };
        trajectories.push(TrajectoryRow { init: fmt_point(init), samples: t.len(), end: *t.xs.last().unwrap(), error: None });
        for (pairs, out) in [(&produced, &mut drift), (&printed, &mut fixture_drift)] {
            let consts = match fix_constants(pairs, init) {
                Ok(c) => c,
                Err(e) => {
                    notes.push(format!("constants at {}: {}", fmt_point(init), e));
                    continue;
                }
            };
            for (c, i) in pairs.iter() {
                let name = format!("I{}", &c.to_string()[1..]);
                match check_first_integral(&name, i, &t, &sys, &consts, o.tol) {
                    Ok(d) => out.push(d),
                    Err(e) => notes.push(format!("{} at {}: {}", name, fmt_point(init), e)),
                }
            }
        }
        if let Ok(consts) = fix_constants(&produced, init) {
            for (c, i) in produced.iter() {
                let bad = i + &Expr::symbol(&crate::jet::x_sym());
                let name = format!("I{} + x", &c.to_string()[1..]);
                if let Ok(d) = check_first_integral(&name, &bad, &t, &sys, &consts, o.tol) {
                    controls.push(d);
                }
                let pts: Vec<Point> = vec![consts.clone()];
                for v in p.chart.coords() {
                    if i.has_symbol(v) {
                        if let Ok(f) = finite_difference_check(i, v, &pts) {
                            finite_differences.push(f);
                        }
                    }
                }
            }
        }
    }

    let xs = orc.solution_range.map(|(a, b)| grid(a, b, 20)).unwrap_or_else(|| grid(0.5, 1.5, 20));
    let mut solutions = Vec::new();
    let mut residual = |label: String, u: &Expr, consts: &Point| {
        let (report, error) = match check_solution(u, &p.ode, consts, &xs, o.tol, o.exec) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let ok = report.as_ref().map_or(false, |r| r.pass);
        solutions.push(SolutionRow { solution: label, constants: fmt_point(consts), report, error, ok });
    };
    if let Some(r) = &reduction {
        for (bi, u) in r.explicit_gauged.iter().enumerate() {
            for c in &orc.solution_constants {
                residual(format!("produced branch {}", bi + 1), u, &point_of(c));
            }
        }
    }
    for (bi, u) in p.file.fixtures.solutions.iter().enumerate() {
        let u = expr(u)?;
        for c in &orc.fixture_constants {
            residual(format!("fixture branch {}", bi + 1), &u, &point_of(c));
        }
    }
    let pass = trajectories.iter().all(|t| t.error.is_none())
        && drift.iter().chain(&fixture_drift).all(|d| d.pass)
        && controls.iter().all(|d| !d.pass)
        && finite_differences.iter().all(|f| f.pass)
        && solutions.iter().all(|s| s.ok)
        && notes.is_empty();
    Ok(VerifyReport {
        problem: p.name(),
        drift_tolerance: o.tol,
        step_tolerance: crate::oracle::STEP_TOL,
        trajectories,
        drift,
        fixture_drift,
        controls,
        finite_differences,
        solutions,
        notes,
        pass,
    })
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok  "
    } else {
        "FAIL"
    }
}

impl CheckReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "problem {}", self.problem);
        for s in &self.symmetries {
            let lin = s.linearized.map(|l| format!(", linearized {}", l)).unwrap_or_default();
            let _ = writeln!(out, "  [{}] symmetry {}: {}{} (expected {})", mark(s.ok), s.name, s.verdict, lin, if s.expected { "symmetry" } else { "non-symmetry" });
        }
        for a in &self.algebras {
            let _ = writeln!(out, "  algebra <{}>: {}", a.fields.join(", "), if a.brackets.is_empty() { "abelian".into() } else { a.brackets.join(", ") });
            let _ = writeln!(out, "    derived series {:?}, solvable {}, Jacobi {}, tier {}", a.derived_series, a.solvable, a.jacobi, a.tier);
        }
        if let Some(st) = &self.structure {
            let _ = writeln!(out, "  [{}] structure: Δ = {}", mark(st.accepted), st.delta);
            for l in &st.levels {
                let _ = writeln!(out, "    level {}: {}", l.level, l.verdict);
            }
            for c in &st.closedness {
                let _ = writeln!(out, "    ω{}: dω {}, dω∧later {}", c.index, c.closed, c.closed_mod_later);
            }
            let _ = writeln!(out, "    duality {}", st.duality);
            if !st.singular_loci.is_empty() {
                let _ = writeln!(out, "    singular loci: {}", st.singular_loci.join("; "));
            }
        }
        for r in &self.fixtures {
            let _ = writeln!(out, "  [{}] {}: {}", mark(r.ok), r.item, r.detail);
        }
        let _ = writeln!(out, "check {}", if self.pass { "passed" } else { "FAILED" });
        out
    }
}

impl ReduceReport {
    pub fn render(&self) -> String {
        let mut out = self.check.render();
        if let Some(r) = &self.reduction {
            for f in &r.integrals {
                let _ = writeln!(out, "  I{} = {}", f.index, f.value);
                if f.on_level != f.value {
                    let _ = writeln!(out, "    on the level manifold: {}", f.on_level);
                }
                let _ = writeln!(out, "    {}; d(I) = ω: {}", if f.full_chart { "closed on the full chart" } else { "closed after restriction" }, f.check);
                if let Some(v) = &f.eliminated {
                    let _ = writeln!(out, "    eliminated {} ({} branch(es))", v, f.branches.len());
                }
            }
            for (i, u) in r.explicit_gauged.iter().enumerate() {
                let _ = writeln!(out, "  u[{}] = {}", i + 1, u);
            }
            if let Some(c) = &r.inessential {
                let _ = writeln!(out, "  inessential constant {} set to 0", c);
            }
            for n in &r.notes {
                let _ = writeln!(out, "  note: {}", n);
            }
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "  reduction: {}", e);
        }
        for m in &self.matches {
            let _ = writeln!(out, "  [{}] {}: {}", mark(m.ok), m.item, m.detail);
        }
        let _ = writeln!(out, "reduce {}", if self.pass { "passed" } else { "FAILED" });
        out
    }
}

impl VerifyReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "problem {} (drift tolerance {:e}, step tolerance {:e})", self.problem, self.drift_tolerance, self.step_tolerance);
        for t in &self.trajectories {
            match &t.error {
                None => {
                    let _ = writeln!(out, "  trajectory from {}: {} samples to x = {:.4}", t.init, t.samples, t.end);
                }
                Some(e) => {
                    let _ = writeln!(out, "  [FAIL] trajectory from {}: {}", t.init, e);
                }
            }
        }
        for (title, rows, want) in [("integral", &self.drift, true), ("printed integral", &self.fixture_drift, true), ("control", &self.controls, false)] {
            for d in rows {
                let _ = writeln!(out, "  [{}] {} {}: drift {:.3e} over {} samples ({} skipped)", mark(d.pass == want), title, d.name, d.max_drift, d.samples, d.skipped);
            }
        }
        if !self.finite_differences.is_empty() {
            let worst = self.finite_differences.iter().map(|f| f.max_rel_err).fold(0.0, f64::max);
            let ok = self.finite_differences.iter().all(|f| f.pass);
            let _ = writeln!(out, "  [{}] finite differences: {} checks, worst relative error {:.3e}", mark(ok), self.finite_differences.len(), worst);
        }
        for s in &self.solutions {
            match (&s.report, &s.error) {
                (Some(r), _) => {
                    let _ = writeln!(out, "  [{}] {} with {}: residual {:.3e} at {} points", mark(s.ok), s.solution, s.constants, r.max_residual, r.points);
                }
                (None, Some(e)) => {
                    let _ = writeln!(out, "  [FAIL] {} with {}: {}", s.solution, s.constants, e);
                }
                _ => {}
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {}", n);
        }
        let _ = writeln!(out, "verify {}", if self.pass { "passed" } else { "FAILED" });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"{
        "name": "linear",
        "ode": {"order": 1, "f": "u"},
        "symmetries": [{"name": "S", "phi": "u"}],
        "structure": ["S"],
        "fixtures": {"solutions": ["C*exp(x)"]},
        "oracle": {"inits": [{"x": 0.0, "u": 1.0}], "span": 0.5, "step": 0.1,
                   "solution_range": [0.0, 1.0], "solution_constants": [{"c1": 0.5}], "fixture_constants": [{"C": 2.0}]}
    }"#;

    #[test]
    fn linear_pipeline() {
        let p = Problem::from_json(LINEAR).unwrap();
        let o = Options::default();
        let r = run_reduce(&p, &o).unwrap();
        assert!(r.pass, "{}", r.render());
        let v = run_verify(&p, &o).unwrap();
        assert!(v.pass, "{}", v.render());
        assert_eq!(v.controls.len(), 1);
    }
}
