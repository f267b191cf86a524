//! The quadrature cascade: integrate the last ω, restrict the others to the
//! level manifold, repeat.

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::jet::{exact, u_sym, w_sym, Chart, DifferentialForm, OdeProblem, VectorField};
use crate::structure::{omega_forms, delta, SolvableStructure};
use crate::symbolic::solve::solve_for_with;
use crate::symbolic::{diff, simplify, subs1, substitute, Expr, Integrator, Subst, Symbol, Verdict, ZeroTest, ZeroTier};
use crate::symmetry::symmetry_verdict;

/// Shared knobs for the symbolic pipeline.
#[derive(Clone, Debug)]
pub struct Settings {
    pub zero: ZeroTest,
    pub exec: Exec,
    /// Lower limit of unevaluated integrals.
    pub base: BigRational,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { zero: ZeroTest::default(), exec: Exec::default(), base: BigRational::from_integer(1.into()) }
    }
}

impl Settings {
    pub fn integrator(&self) -> Integrator {
        Integrator { base: self.base.clone(), zero: self.zero.clone() }
    }
}

/// A potential `I` with `dI = ω`, and how it was checked.
#[derive(Clone, Debug)]
pub struct Potential {
    pub value: Expr,
    pub check: Verdict,
}

/// Coordinate-by-coordinate potential reconstruction. Coordinates whose
/// component has a closed antiderivative are integrated first.
pub fn integrate_exact(w: &DifferentialForm, s: &Settings) -> Result<Potential> {
    if w.degree() != 1 {
        return Err(Error::Integration(format!("expected a 1-form, got degree {}", w.degree())));
    }
    let zt = &s.zero;
    let integ = s.integrator();
    let chart = w.chart().clone();
    let coords = chart.coords().to_vec();
    let mut rem: Vec<Expr> = w.coeffs().iter().map(simplify).collect();
    let mut done: Vec<usize> = Vec::new();
    let mut pot: Vec<Expr> = Vec::new();
    loop {
        for r in rem.iter_mut() {
            if !r.is_zero() && zt.check(r).is_zero() {
                *r = Expr::zero();
            }
        }
        let active: Vec<usize> = (0..coords.len()).filter(|&i| !rem[i].is_zero()).collect();
        if active.is_empty() {
            break;
        }
        let closed = active.iter().find_map(|&a| integ.closed(&rem[a], &coords[a]).map(|f| (a, f)));
        let (a, f) = match closed {
            Some(p) => p,
            None => {
                let a = active[0];
                (a, integ.integrate(&rem[a], &coords[a]))
            }
        };
        if done.contains(&a) {
            return Err(Error::Integration(format!("remainder re-involves {}", coords[a])));
        }
        pot.push(f.clone());
        done.push(a);
        rem[a] = Expr::zero();
        for b in active {
            if b == a {
                continue;
            }
            let mut r = simplify(&(rem[b].clone() - diff(&f, &coords[b])));
            for &p in &done {
                if !r.has_symbol(&coords[p]) {
                    continue;
                }
                if !zt.check(&diff(&r, &coords[p])).is_zero() {
                    return Err(Error::Integration(format!("component along {} depends on {} after integration; the form is not closed", coords[b], coords[p])));
                }
                r = simplify(&subs1(&r, &coords[p], &Expr::rational(s.base.clone())));
            }
            rem[b] = r;
        }
    }
    let value = simplify(&Expr::add(pot));
    let check = exact(&chart, &value).sub(w)?.verdict(zt);
    Ok(Potential { value, check })
}

/// Pullback of `w` along `coordinate = subs[coordinate]` onto `target`.
pub fn restrict_form(w: &DifferentialForm, subs: &Subst, target: &Chart) -> Result<DifferentialForm> {
    let chart = w.chart();
    let images: Vec<DifferentialForm> = chart
        .coords()
        .iter()
        .map(|c| match subs.get(c) {
            Some(e) => Ok(exact(target, e)),
            None => DifferentialForm::basis(target, c),
        })
        .collect::<Result<_>>()?;
    let mut out = DifferentialForm::zero(target, w.degree());
    for (key, coef) in w.components() {
        let mut term = DifferentialForm::function(target, substitute(coef, subs));
        for &i in key {
            term = term.wedge(&images[i])?;
        }
        out = out.add(&term)?;
    }
    Ok(out.simplify())
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstIntegral {
    /// `i` of the integrated `ωᵢ`.
    pub index: usize,
    pub constant: String,
    #[serde(serialize_with = "ser_expr")]
    pub value: Expr,
    /// `value` restricted to the levels of the later integrals.
    #[serde(serialize_with = "ser_expr")]
    pub on_level: Expr,
    /// `value` is a first integral on the full chart.
    pub full_chart: bool,
    pub closed: Verdict,
    pub check: Verdict,
    /// Coordinate eliminated with `I = c`, and its branches.
    pub eliminated: Option<String>,
    #[serde(serialize_with = "ser_exprs")]
    pub branches: Vec<Expr>,
    #[serde(skip)]
    pub form: DifferentialForm,
}

fn ser_expr<S: serde::Serializer>(e: &Expr, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&e.to_string())
}

fn ser_exprs<S: serde::Serializer>(es: &[Expr], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(es.iter().map(|e| e.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionResult {
    pub integrals: Vec<FirstIntegral>,
    /// Implicit solution: each `I = c` listed as `"I = c"`.
    pub implicit: Vec<String>,
    /// Explicit branches for `u`, constants as produced.
    #[serde(serialize_with = "ser_exprs")]
    pub explicit: Vec<Expr>,
    /// Constant set to zero because it only shifts `w`.
    pub inessential: Option<String>,
    /// `explicit` with the inessential constant gauged out.
    #[serde(serialize_with = "ser_exprs")]
    pub explicit_gauged: Vec<Expr>,
    pub notes: Vec<String>,
}

impl ReductionResult {
    pub fn integral(&self, i: usize) -> Option<&FirstIntegral> {
        self.integrals.iter().find(|f| f.index == i)
    }
}

pub fn constant_symbol(i: usize) -> Symbol {
    Symbol::new(&format!("c{}", i))
}

/// Runs the cascade `ω_{n−1}, …, ω₁` of a verified structure.
pub fn reduce(structure: &SolvableStructure, s: &Settings) -> Result<ReductionResult> {
    if !structure.report.accepted {
        return Err(Error::Structure("the structure was not accepted".into()));
    }
    let full = structure.z.chart().clone();
    let n = full.dim();
    let zt = &s.zero;
    let mut chart = full.clone();
    let mut subs = Subst::new();
    let mut integrals = Vec::new();
    let mut notes = Vec::new();
    let mut final_branches: Vec<(Symbol, Vec<Expr>, Subst)> = Vec::new();
    let mut w_level: Option<usize> = None;

    for i in (1..n).rev() {
        let w = structure.omega(i);
        let c = constant_symbol(i);
        let full_closed = structure.report.closedness.get(i - 1).map(|r| r.closed.is_zero()).unwrap_or(false);
        let (value, on_level, closed, check, form, on_full) = if full_closed {
            let p = integrate_exact(w, s)?;
            let r = simplify(&substitute(&p.value, &subs));
            (p.value, r, Verdict::Zero(ZeroTier::Symbolic), p.check, w.clone(), true)
        } else {
            let wr = restrict_form(w, &subs, &chart)?;
            let closed = wr.exterior_derivative().simplify().verdict(zt);
            if !closed.is_zero() {
                return Err(Error::Integration(format!("ω{} is not closed on the level manifold", i)));
            }
            let p = integrate_exact(&wr, s)?;
            (p.value.clone(), p.value, closed, p.check, wr, false)
        };
        if !check.is_zero() {
            notes.push(format!("d(I{}) = ω{} not confirmed ({:?})", i, i, check));
        }
        let eq = &on_level - &Expr::symbol(&c);
        let mut eliminated = None;
        let mut branches = Vec::new();
        for v in chart.coords().iter().rev() {
            if !on_level.has_symbol(v) {
                continue;
            }
            let sols = solve_for_with(&eq, v, zt);
            if sols.is_empty() {
                continue;
            }
            branches = sols.iter().map(simplify).collect();
            eliminated = Some(v.clone());
            break;
        }
        let fi = FirstIntegral {
            index: i,
            constant: c.to_string(),
            value,
            on_level,
            full_chart: on_full,
            closed,
            check,
            eliminated: eliminated.as_ref().map(|v| v.to_string()),
            branches: branches.clone(),
            form,
        };
        integrals.push(fi);
        let Some(v) = eliminated else {
            notes.push(format!("I{} = c{} could not be solved for any coordinate; later levels use it implicitly", i, i));
            continue;
        };
        if v == w_sym() {
            w_level = Some(i);
        }
        if branches.len() > 1 && i > 1 {
            notes.push(format!("level {}: {} branches for {}, continuing with the first", i, branches.len(), v));
        }
        if i == 1 {
            final_branches.push((v.clone(), branches.clone(), subs.clone()));
        }
        let sol = branches[0].clone();
        for e in subs.values_mut() {
            *e = simplify(&subs1(e, &v, &sol));
        }
        subs.insert(v.clone(), sol);
        chart = chart.without(&[v]);
    }

    let u = u_sym(0);
    let mut explicit = Vec::new();
    if let Some((v, branches, prev)) = final_branches.pop() {
        for b in &branches {
            if v == u {
                explicit.push(b.clone());
            } else if let Some(e) = prev.get(&u) {
                explicit.push(simplify(&subs1(e, &v, b)));
            }
        }
    } else if let Some(e) = subs.get(&u) {
        explicit.push(e.clone());
    }
    explicit.retain(|e| !e.has_any(&full.coords()[1..]));

    let inessential = w_level.map(constant_symbol);
    let explicit_gauged = match &inessential {
        Some(c) => explicit.iter().map(|e| simplify(&subs1(e, c, &Expr::zero()))).collect(),
        None => explicit.clone(),
    };
    let implicit = integrals.iter().map(|f| format!("{} = {}", f.value, f.constant)).collect();
    Ok(ReductionResult {
        integrals,
        implicit,
        explicit,
        inessential: inessential.map(|c| c.to_string()),
        explicit_gauged,
        notes,
    })
}

#[derive(Clone, Debug)]
pub struct PfaffianReduction {
    pub delta: Expr,
    /// `ω₂, …, ω_{n−1}`.
    pub surviving: Vec<DifferentialForm>,
    /// Coefficients of `Δ·ωⱼ` on `dI₁, …, dI_m`, rewritten in the invariant
    /// names when the supplied invariants allow it.
    pub in_invariants: Vec<Option<Vec<Expr>>>,
}

/// One-step reduction by a single symmetry `Y₁` completed by `frame`.
pub fn partial_reduce(
    ode: &OdeProblem,
    y1: &VectorField,
    frame: &[VectorField],
    invariants: &[(Symbol, Expr)],
    s: &Settings,
) -> Result<PfaffianReduction> {
    let z = ode.total_derivative_field();
    if !symmetry_verdict(y1, &[z.clone()], &s.zero)?.is_zero() {
        return Err(Error::Structure("Y1 is not a symmetry of the total derivative".into()));
    }
    let omega = DifferentialForm::volume(&ode.chart);
    let mut ys = vec![y1.clone()];
    ys.extend(frame.iter().cloned());
    let d = delta(&z, &ys, &omega)?;
    if s.zero.check(&d) != Verdict::NonZero {
        return Err(Error::Structure("Z, Y1 and the frame do not span".into()));
    }
    let ws = omega_forms(&z, &ys, &omega, &d)?;
    let surviving: Vec<DifferentialForm> = ws.into_iter().skip(1).map(|o| o.normalized).collect();
    let in_invariants = surviving.iter().map(|w| express_in_invariants(&w.scale(&d).simplify(), invariants, s)).collect();
    Ok(PfaffianReduction { delta: d, surviving, in_invariants })
}

/// Solves `w = Σ aⱼ dIⱼ` and rewrites each `aⱼ` through the invariants.
pub fn express_in_invariants(w: &DifferentialForm, invariants: &[(Symbol, Expr)], s: &Settings) -> Option<Vec<Expr>> {
    use crate::symbolic::ratfunc::{solve_linear, to_ratfunc};
    if invariants.is_empty() {
        return None;
    }
    let chart = w.chart();
    let m = invariants.len();
    let grads: Vec<Vec<Expr>> = invariants.iter().map(|(_, g)| exact(chart, g).coeffs()).collect();
    let rows: Vec<Vec<_>> = (0..chart.dim()).map(|r| (0..m).map(|j| to_ratfunc(&grads[j][r])).collect()).collect();
    let rhs: Vec<_> = w.coeffs().iter().map(to_ratfunc).collect();
    let a = solve_linear(rows, rhs, m)?;
    let mut back = Subst::new();
    for (name, g) in invariants {
        let eq = Expr::symbol(name) - g.clone();
        let v = chart.coords().iter().rev().find(|v| g.has_symbol(v) && !back.contains_key(*v))?;
        let sol = solve_for_with(&eq, v, &s.zero).into_iter().next()?;
        for e in back.values_mut() {
            *e = simplify(&subs1(e, v, &sol));
        }
        back.insert(v.clone(), sol);
    }
    let out: Vec<Expr> = a.iter().map(|c| simplify(&substitute(&c.to_expr(), &back))).collect();
    if out.iter().any(|e| e.has_any(chart.coords())) {
        return None;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{is_zero, parse};
    use crate::symmetry::{evolutive_field, prolong_components};

    #[test]
    fn potential_of_du() {
        let c = Chart::jet(1);
        let w = DifferentialForm::basis(&c, &u_sym(0)).unwrap();
        let p = integrate_exact(&w, &Settings::default()).unwrap();
        assert_eq!(p.value, parse("u").unwrap());
    }

    #[test]
    fn restrict_du_to_constant_level() {
        let c = Chart::jet(1);
        let w = DifferentialForm::basis(&c, &u_sym(0)).unwrap();
        let mut subs = Subst::new();
        subs.insert(u_sym(0), parse("c1").unwrap());
        let r = restrict_form(&w, &subs, &c.without(&[u_sym(0)])).unwrap();
        assert!(r.is_structurally_zero());
    }

    #[test]
    fn linear_smoke_test() {
        let ode = OdeProblem::new(1, parse("u").unwrap()).unwrap();
        let y = evolutive_field(&parse("u").unwrap(), &ode);
        let s = Settings::default();
        let st = crate::structure::verify_structure(&ode.total_derivative_field(), &[y], &DifferentialForm::volume(&ode.chart), &s.zero, s.exec).unwrap();
        let r = reduce(&st, &s).unwrap();
        let i1 = &r.integrals[0].value;
        assert!(is_zero(&(i1 - &parse("ln(u) - x").unwrap())).is_zero());
        assert_eq!(r.explicit.len(), 1);
        assert!(is_zero(&(&r.explicit[0] - &parse("exp(c1 + x)").unwrap())).is_zero());
    }

    #[test]
    fn remark_fixture() {
        let ode = OdeProblem::new(2, parse("-u/x^2").unwrap()).unwrap();
        let y1 = prolong_components(&parse("x").unwrap(), &Expr::zero(), &ode);
        let frame = vec![VectorField::coordinate(&ode.chart, &u_sym(1)).unwrap()];
        let inv = vec![(Symbol::new("I1"), parse("u").unwrap()), (Symbol::new("I2"), parse("x*u1").unwrap())];
        let r = partial_reduce(&ode, &y1, &frame, &inv, &Settings::default()).unwrap();
        assert_eq!(r.surviving.len(), 1);
        let target = exact(&ode.chart, &parse("x*u1").unwrap())
            .sub(&exact(&ode.chart, &parse("u").unwrap()).scale(&parse("(x*u1 - u)/(x*u1)").unwrap()))
            .unwrap();
        let wedge = r.surviving[0].wedge(&target).unwrap().simplify();
        assert!(wedge.verdict(&ZeroTest::default()).is_zero());
    }
}
