//! One-dimensional coverings `w₁ = H` and their nonlocal symmetries.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{w_sym, Chart, OdeProblem, VectorField};
use crate::symbolic::{diff, simplify, Expr, Verdict, ZeroTest};
use crate::symmetry::{commutator_table, multivector_symmetry_residuals, total_derivatives, SymmetryAlgebra};

#[derive(Clone, Debug)]
pub struct CoveringSystem {
    pub base: OdeProblem,
    pub h: Expr,
    pub chart: Chart,
}

impl CoveringSystem {
    pub fn new(base: OdeProblem, h: Expr) -> Result<CoveringSystem> {
        let chart = Chart::covering(base.order);
        if let Some(s) = h.free_symbols().iter().find(|s| chart.index(s).is_none()) {
            return Err(Error::Input(format!("covering function uses {} outside the chart", s)));
        }
        Ok(CoveringSystem { base, h, chart })
    }

    /// `H` free of `w`.
    pub fn is_lambda(&self) -> bool {
        !self.h.has_symbol(&w_sym())
    }

    /// `D̃ₓ = D̄ₓ + H∂_w`.
    pub fn total_derivative_field(&self) -> VectorField {
        let mut comps = self.base.total_derivative_field().components().to_vec();
        comps.push(self.h.clone());
        VectorField::from_components(&self.chart, comps).expect("covering chart")
    }

    pub fn w_field(&self) -> VectorField {
        VectorField::coordinate(&self.chart, &w_sym()).expect("covering chart")
    }
}

pub fn covering_total_derivative(cov: &CoveringSystem) -> VectorField {
    cov.total_derivative_field()
}

#[derive(Clone, Debug)]
pub struct NonlocalSymmetry {
    pub phi1: Expr,
    pub phi2: Expr,
    pub field: VectorField,
}

/// Components `uᵢ : D̃ₓⁱ(φ¹)` and `w : φ²`, no `∂ₓ` part.
pub fn nonlocal_symmetry_field(phi1: &Expr, phi2: &Expr, cov: &CoveringSystem) -> NonlocalSymmetry {
    let d = cov.total_derivative_field();
    let mut comps = vec![Expr::zero()];
    comps.extend(total_derivatives(phi1, &d, cov.base.order));
    comps.push(phi2.clone());
    let field = VectorField::from_components(&cov.chart, comps).expect("covering chart");
    NonlocalSymmetry { phi1: phi1.clone(), phi2: phi2.clone(), field }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryCheck {
    pub verdict: Verdict,
    /// Residual forms that were not shown to vanish.
    pub residuals: Vec<String>,
}

impl SymmetryCheck {
    pub fn accepted(&self) -> bool {
        self.verdict.is_zero()
    }
}

pub fn check_symmetry_of(field: &VectorField, dist: &[VectorField], zt: &ZeroTest) -> Result<SymmetryCheck> {
    let rs = multivector_symmetry_residuals(field, dist)?;
    let mut verdict = Verdict::Zero(crate::symbolic::ZeroTier::Symbolic);
    let mut residuals = Vec::new();
    for r in &rs {
        let v = r.verdict(zt);
        if !v.is_zero() {
            residuals.push(r.to_string());
        }
        verdict = verdict.and(v);
    }
    Ok(SymmetryCheck { verdict, residuals })
}

pub fn is_nonlocal_symmetry(y: &VectorField, cov: &CoveringSystem, zt: &ZeroTest) -> Result<SymmetryCheck> {
    check_symmetry_of(y, &[cov.total_derivative_field()], zt)
}

#[derive(Clone, Debug)]
pub struct Inheritance {
    /// Per input field: symmetry of the base, then `X(H) = 0`.
    pub base_symmetry: Vec<Verdict>,
    pub inherited: Vec<Verdict>,
    /// `G ⊕ ⟨∂_w⟩` when `∂_w H = 0` and every field is inherited.
    pub extension: Option<SymmetryAlgebra>,
}

/// Which base symmetries survive in the covering, and the extended algebra.
pub fn inherits_algebra(fields: &[VectorField], cov: &CoveringSystem, zt: &ZeroTest) -> Result<Inheritance> {
    let d = cov.base.total_derivative_field();
    let mut base_symmetry = Vec::new();
    let mut inherited = Vec::new();
    for f in fields {
        let f = f.on_chart(&cov.base.chart)?;
        base_symmetry.push(check_symmetry_of(&f, &[d.clone()], zt)?.verdict);
        inherited.push(zt.check(&f.apply(&cov.h)));
    }
    let w_free = zt.check(&diff(&cov.h, &w_sym())).is_zero();
    let all_in = inherited.iter().chain(&base_symmetry).all(|v| v.is_zero());
    let extension = if w_free && all_in {
        let mut ext: Vec<VectorField> = fields.iter().map(|f| f.on_chart(&cov.chart)).collect::<Result<_>>()?;
        ext.push(cov.w_field());
        Some(commutator_table(&ext, zt)?)
    } else {
        None
    };
    Ok(Inheritance { base_symmetry, inherited, extension })
}

/// `e^{-w}·r` for each residual coefficient; for λ-coverings with
/// `φ = e^w φ₀` these are free of `w`.
pub fn residuals_over_exp_w(y: &VectorField, cov: &CoveringSystem) -> Result<Vec<Expr>> {
    let rs = multivector_symmetry_residuals(y, &[cov.total_derivative_field()])?;
    let ew = Expr::exp(-Expr::symbol(&w_sym()));
    Ok(rs.iter().flat_map(|r| r.components().values().map(|c| simplify(&(c * &ew))).collect::<Vec<_>>()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse;

    fn ex2() -> CoveringSystem {
        let ode = OdeProblem::new(2, parse("-x^2/(4*u^3) - u - 1/(2*u)").unwrap()).unwrap();
        CoveringSystem::new(ode, parse("x/u^2").unwrap()).unwrap()
    }

    #[test]
    fn extended_total_derivative() {
        let cov = ex2();
        let d = cov.total_derivative_field();
        assert_eq!(d.components()[3], parse("x/u^2").unwrap());
        assert!(cov.is_lambda());
    }

    #[test]
    fn example_two_nonlocal_symmetry() {
        let cov = ex2();
        let y = nonlocal_symmetry_field(&parse("u*exp(w)").unwrap(), &parse("-2*exp(w)").unwrap(), &cov);
        let zt = ZeroTest::default();
        assert!(is_nonlocal_symmetry(&y.field, &cov, &zt).unwrap().accepted());
        for r in residuals_over_exp_w(&y.field, &cov).unwrap() {
            assert!(!r.has_symbol(&w_sym()));
        }
        assert!(is_nonlocal_symmetry(&cov.w_field(), &cov, &zt).unwrap().accepted());
        let bad = nonlocal_symmetry_field(&parse("x*exp(w)").unwrap(), &parse("-2*exp(w)").unwrap(), &cov);
        assert!(!is_nonlocal_symmetry(&bad.field, &cov, &zt).unwrap().accepted());
    }

    #[test]
    fn w_dependent_covering_breaks_dw() {
        let ode = OdeProblem::new(1, parse("u").unwrap()).unwrap();
        let cov = CoveringSystem::new(ode, parse("w*x").unwrap()).unwrap();
        assert!(!cov.is_lambda());
        assert!(!is_nonlocal_symmetry(&cov.w_field(), &cov, &ZeroTest::default()).unwrap().accepted());
    }
}
