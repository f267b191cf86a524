//! Solvable structures for a one-dimensional distribution `⟨Z⟩`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::jet::{lie_derivative, DifferentialForm, VectorField};
use crate::symbolic::ratfunc::{to_ratfunc, RatFunc};
use crate::symbolic::{diff, simplify, Expr, Verdict, ZeroTest, ZeroTier};

/// `Y₁⌟Y₂⌟…⌟Y_{n−1}⌟Z⌟Ω`, evaluated right to left.
pub fn delta(z: &VectorField, ys: &[VectorField], omega: &DifferentialForm) -> Result<Expr> {
    if ys.len() + 1 != omega.degree() {
        return Err(Error::Structure(format!("{} fields for a {}-form", ys.len() + 1, omega.degree())));
    }
    let mut a = omega.interior(z)?;
    for y in ys.iter().rev() {
        a = a.interior(y)?;
    }
    Ok(simplify(&a.scalar()))
}

#[derive(Clone, Debug)]
pub struct OmegaForm {
    /// `(1/Δ)·(Y₁⌟…Ŷᵢ…⌟Y_{n−1}⌟Z⌟Ω)`.
    pub raw: DifferentialForm,
    /// `raw` times `sign`, so that `Yᵢ⌟ω = 1`.
    pub normalized: DifferentialForm,
    pub sign: i32,
}

/// The coframe dual to `(Z, Y₁, …, Y_{n−1})`.
pub fn omega_forms(z: &VectorField, ys: &[VectorField], omega: &DifferentialForm, delta: &Expr) -> Result<Vec<OmegaForm>> {
    if delta.is_zero() {
        return Err(Error::Structure("Δ vanishes identically".into()));
    }
    let inv = delta.recip();
    let base = omega.interior(z)?;
    let mut out = Vec::with_capacity(ys.len());
    for i in 0..ys.len() {
        let mut a = base.clone();
        for (j, y) in ys.iter().enumerate().rev() {
            if j != i {
                a = a.interior(y)?;
            }
        }
        let raw = a.scale(&inv).simplify();
        // moving Yᵢ past the i earlier fields
        let sign = if i % 2 == 0 { 1 } else { -1 };
        let normalized = if sign > 0 { raw.clone() } else { raw.scale(&Expr::num(-1)).simplify() };
        out.push(OmegaForm { raw, normalized, sign });
    }
    Ok(out)
}

/// `L_{cand}(Y_j) ⌟ (Y₀⌟Y₁⌟…⌟Y_s⌟Ω)` for `j = 0…s`.
pub fn determining_residuals(chain: &[VectorField], candidate: &VectorField, omega: &DifferentialForm, zt: &ZeroTest) -> Result<Vec<DifferentialForm>> {
    if chain.is_empty() {
        return Err(Error::Structure("empty chain".into()));
    }
    let mut span = omega.clone();
    for y in chain.iter().rev() {
        span = span.interior(y)?;
    }
    if span.simplify().verdict(zt).is_zero() {
        return Err(Error::Structure("chain fields are dependent".into()));
    }
    chain.iter().map(|y| Ok(span.interior(&lie_derivative(candidate, y)?)?.simplify())).collect()
}

/// `Σ_{s=0}^{k−1} (s+1)·C(k+1, s+2)` in closed form.
pub fn count_determining_equations(k: u32) -> u64 {
    assert!(k >= 1);
    let k = k as u64;
    1 + (k + 1) * (1 << k) - (1 << (k + 1))
}

pub fn count_by_sum(k: u32) -> u64 {
    let k = k as u64;
    (0..k).map(|s| (s + 1) * binomial(k + 1, s + 2)).sum()
}

fn binomial(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub verdict: Verdict,
    /// Residuals that were not shown to vanish.
    pub residuals: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosedReport {
    pub index: usize,
    /// `dωᵢ = 0`.
    pub closed: Verdict,
    /// `dωᵢ ∧ ω_{i+1} ∧ … ∧ ω_{n−1} = 0`.
    pub closed_mod_later: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub delta: String,
    pub delta_nonzero: bool,
    pub levels: Vec<LevelReport>,
    pub closedness: Vec<ClosedReport>,
    pub duality: Verdict,
    /// Factors whose zero set the construction excludes.
    pub singular_loci: Vec<String>,
    pub accepted: bool,
    pub rejected_at: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SolvableStructure {
    pub z: VectorField,
    pub ys: Vec<VectorField>,
    pub delta: Expr,
    pub omegas: Vec<OmegaForm>,
    pub report: StructureReport,
}

impl SolvableStructure {
    pub fn omega(&self, i: usize) -> &DifferentialForm {
        &self.omegas[i - 1].normalized
    }
}

fn zero_verdict() -> Verdict {
    Verdict::Zero(ZeroTier::Symbolic)
}

/// Checks conditions (a) and (b), builds the coframe and the closedness ladder.
pub fn verify_structure(z: &VectorField, ys: &[VectorField], omega: &DifferentialForm, zt: &ZeroTest, exec: Exec) -> Result<SolvableStructure> {
    let n = omega.degree();
    if ys.len() + 1 != n {
        return Err(Error::Structure(format!("a structure on a {}-dimensional chart needs {} fields, got {}", n, n - 1, ys.len())));
    }
    let d = delta(z, ys, omega)?;
    let delta_nonzero = zt.check(&d) == Verdict::NonZero;

    let mut chain = vec![z.clone()];
    let mut levels = Vec::new();
    for (h, y) in ys.iter().enumerate() {
        let level = h + 1;
        let (verdict, residuals) = match determining_residuals(&chain, y, omega, zt) {
            Ok(rs) => {
                let vs = exec.map(&rs, |r| r.verdict(zt));
                let bad = rs.iter().zip(&vs).filter(|(_, v)| !v.is_zero()).map(|(r, _)| r.to_string()).collect();
                (Verdict::all(vs), bad)
            }
            Err(e) => (Verdict::NonZero, vec![e.to_string()]),
        };
        levels.push(LevelReport { level, verdict, residuals });
        chain.push(y.clone());
    }
    let rejected_at = levels.iter().find(|l| !l.verdict.is_zero()).map(|l| l.level);

    let (omegas, closedness, duality) = if delta_nonzero {
        let omegas = omega_forms(z, ys, omega, &d)?;
        let ladder = closedness_ladder(&omegas, zt, exec)?;
        let dual = duality_verdict(z, ys, &omegas, zt)?;
        (omegas, ladder, dual)
    } else {
        (vec![], vec![], Verdict::NonZero)
    };
    let singular_loci = singular_loci(&d, &omegas);
    let accepted = delta_nonzero && rejected_at.is_none();
    let report = StructureReport {
        delta: d.to_string(),
        delta_nonzero,
        levels,
        closedness,
        duality,
        singular_loci,
        accepted,
        rejected_at: if delta_nonzero { rejected_at } else { Some(0) },
    };
    Ok(SolvableStructure { z: z.clone(), ys: ys.to_vec(), delta: d, omegas, report })
}

fn closedness_ladder(omegas: &[OmegaForm], zt: &ZeroTest, exec: Exec) -> Result<Vec<ClosedReport>> {
    let n = omegas.len();
    let idx: Vec<usize> = (0..n).collect();
    let rows = exec.map(&idx, |&i| -> Result<ClosedReport> {
        let dw = omegas[i].normalized.exterior_derivative().simplify();
        let closed = dw.verdict(zt);
        let mut acc = dw;
        for o in &omegas[i + 1..] {
            acc = acc.wedge(&o.normalized)?;
        }
        let closed_mod_later = if i + 1 == n { closed } else { acc.simplify().verdict(zt) };
        Ok(ClosedReport { index: i + 1, closed, closed_mod_later })
    });
    rows.into_iter().collect()
}

fn duality_verdict(z: &VectorField, ys: &[VectorField], omegas: &[OmegaForm], zt: &ZeroTest) -> Result<Verdict> {
    let mut v = zero_verdict();
    for (j, o) in omegas.iter().enumerate() {
        v = v.and(zt.check(&o.normalized.interior(z)?.scalar()));
        for (i, y) in ys.iter().enumerate() {
            let c = o.normalized.interior(y)?.scalar();
            let target = if i == j { c - Expr::one() } else { c };
            v = v.and(zt.check(&target));
        }
    }
    Ok(v)
}

fn singular_loci(delta: &Expr, omegas: &[OmegaForm]) -> Vec<String> {
    let mut polys: BTreeSet<String> = BTreeSet::new();
    let mut push = |r: &RatFunc| {
        for (p, _) in &r.den {
            if !p.is_const() {
                polys.insert(format!("{} = 0", p.to_expr()));
            }
        }
    };
    if let Some(inv) = to_ratfunc(delta).inv() {
        push(&inv);
    }
    for o in omegas {
        for c in o.normalized.components().values() {
            push(&to_ratfunc(c));
        }
    }
    polys.into_iter().collect()
}

/// Completes `chain` with the coordinate fields `∂_{γᵢ}` of the chart
/// `(γ₁,…,γ_m, g₁,…,g_q)` and verifies the result.
pub fn structure_from_invariants(
    z: &VectorField,
    chain: &[VectorField],
    invariants: &[Expr],
    complements: &[Expr],
    omega: &DifferentialForm,
    zt: &ZeroTest,
    exec: Exec,
) -> Result<SolvableStructure> {
    let chart = z.chart();
    let n = chart.dim();
    if chain.len() + invariants.len() + 1 != n {
        return Err(Error::Structure(format!(
            "{} fields and {} invariants cannot complete a structure on a {}-dimensional chart",
            chain.len(),
            invariants.len(),
            n
        )));
    }
    for (i, g) in invariants.iter().enumerate() {
        for (j, f) in std::iter::once(z).chain(chain).enumerate() {
            if !zt.check(&f.apply(g)).is_zero() {
                return Err(Error::Structure(format!("invariant {} is not annihilated by field {}", i + 1, j)));
            }
        }
    }
    if invariants.is_empty() {
        return verify_structure(z, chain, omega, zt, exec);
    }
    if invariants.len() + complements.len() != n {
        return Err(Error::Structure(format!("need {} complementary functions, got {}", n - invariants.len(), complements.len())));
    }
    let funcs: Vec<&Expr> = invariants.iter().chain(complements).collect();
    let jac: Vec<Vec<RatFunc>> = funcs.iter().map(|f| chart.coords().iter().map(|s| to_ratfunc(&diff(f, s))).collect()).collect();
    let mut ys = chain.to_vec();
    for i in 0..invariants.len() {
        let rhs: Vec<RatFunc> = (0..n).map(|r| if r == i { RatFunc::one() } else { RatFunc::zero() }).collect();
        let col = crate::symbolic::ratfunc::solve_linear(jac.clone(), rhs, n).ok_or_else(|| Error::Structure("singular Jacobian for the invariant chart".into()))?;
        ys.push(VectorField::from_components(chart, col.iter().map(|c| c.to_expr()).collect())?);
    }
    verify_structure(z, &ys, omega, zt, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{u_sym, x_sym, Chart, OdeProblem};
    use crate::symbolic::{is_zero, parse};
    use crate::symmetry::evolutive_field;

    #[test]
    fn counts() {
        for k in 1..=8 {
            assert_eq!(count_determining_equations(k), count_by_sum(k));
        }
        assert_eq!(count_determining_equations(1), 1);
        assert_eq!(count_determining_equations(2), 5);
        assert_eq!(count_determining_equations(3), 17);
    }

    #[test]
    fn coordinate_frame() {
        let c = Chart::jet(1);
        let z = VectorField::coordinate(&c, &x_sym()).unwrap();
        let y = VectorField::coordinate(&c, &u_sym(0)).unwrap();
        let d = delta(&z, &[y], &DifferentialForm::volume(&c)).unwrap();
        assert_eq!(d, Expr::one());
    }

    #[test]
    fn example_one_structure() {
        let ode = OdeProblem::new(3, parse("u2^2*(u1^2 - 2*u*u2)/u1^4").unwrap()).unwrap();
        let ys: Vec<VectorField> = ["u1^2", "u1", "x*u1 - u"].iter().map(|p| evolutive_field(&parse(p).unwrap(), &ode)).collect();
        let z = ode.total_derivative_field();
        let s = verify_structure(&z, &ys, &DifferentialForm::volume(&ode.chart), &ZeroTest::default(), Exec::Sequential).unwrap();
        assert!(s.report.accepted);
        let expect = parse("(u1^2 - 2*u*u2)*u2^2").unwrap();
        let d = &s.delta;
        assert!(is_zero(&(d - &expect)).is_zero() || is_zero(&(d + &expect)).is_zero());
        let w3 = s.omega(3);
        assert!(is_zero(&(w3.coeff(&u_sym(0)) - parse("2*u2/(u1^2 - 2*u*u2)").unwrap())).is_zero());
        assert!(is_zero(&(w3.coeff(&u_sym(2)) - parse("u1^2/((u1^2 - 2*u*u2)*u2)").unwrap())).is_zero());
        assert!(s.report.closedness.iter().all(|c| c.closed_mod_later.is_zero()));
        assert!(s.report.duality.is_zero());
    }
}
