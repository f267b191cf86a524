//! Local symmetries of the equation manifold and their commutator algebras.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jet::{lie_derivative, u_sym, DifferentialForm, OdeProblem, VectorField};
use crate::symbolic::{diff, simplify, Compiled, Expr, Symbol, Verdict, ZeroTest};

/// `ξ∂ₓ + Σ ηᵢ∂_{uᵢ}` with `ηᵢ = D̄ₓ(ηᵢ₋₁) − uᵢD̄ₓ(ξ)` and `η₀ = η`.
pub fn prolong_components(xi: &Expr, eta: &Expr, ode: &OdeProblem) -> VectorField {
    let d = ode.total_derivative_field();
    let dxi = d.apply(xi);
    let mut comps = vec![xi.clone(), eta.clone()];
    let mut prev = eta.clone();
    for i in 1..ode.order {
        let next = simplify(&(d.apply(&prev) - Expr::symbol(&u_sym(i)) * dxi.clone()));
        comps.push(next.clone());
        prev = next;
    }
    VectorField::from_components(&ode.chart, comps).expect("component count matches chart")
}

/// Repeated total derivatives `D̄ₓⁱ(φ)`, `i = 0…n−1`, simplified.
pub fn total_derivatives(phi: &Expr, d: &VectorField, n: usize) -> Vec<Expr> {
    let mut out = Vec::with_capacity(n);
    let mut cur = phi.clone();
    for _ in 0..n {
        out.push(cur.clone());
        cur = simplify(&d.apply(&cur));
    }
    out
}

/// `Σ D̄ₓⁱ(φ)∂_{uᵢ}`.
pub fn evolutive_field(phi: &Expr, ode: &OdeProblem) -> VectorField {
    let d = ode.total_derivative_field();
    let mut comps = vec![Expr::zero()];
    comps.extend(total_derivatives(phi, &d, ode.order));
    VectorField::from_components(&ode.chart, comps).expect("component count matches chart")
}

/// `D̄ₓᵏφ − Σᵢ (∂f/∂uᵢ) D̄ₓⁱφ`; zero iff `φ` generates a symmetry.
pub fn linearized_determining_residual(phi: &Expr, ode: &OdeProblem) -> Expr {
    let d = ode.total_derivative_field();
    let ds = total_derivatives(phi, &d, ode.order + 1);
    let mut terms = vec![ds[ode.order].clone()];
    for (i, di) in ds.iter().take(ode.order).enumerate() {
        let fi = diff(&ode.f, &u_sym(i));
        if !fi.is_zero() {
            terms.push(-(fi * di.clone()));
        }
    }
    simplify(&Expr::add(terms))
}

/// `L_X(Xᵢ) ⌟ (X₁ ⌟ … ⌟ X_r ⌟ Ω)` for each `i`; all vanish iff `X` preserves
/// the distribution spanned by `dist`.
pub fn multivector_symmetry_residuals(x: &VectorField, dist: &[VectorField]) -> Result<Vec<DifferentialForm>> {
    if dist.is_empty() {
        return Err(Error::Structure("empty distribution".into()));
    }
    let chart = x.chart();
    let mut span = DifferentialForm::volume(chart);
    for v in dist.iter().rev() {
        span = span.interior(v)?;
    }
    let mut out = Vec::with_capacity(dist.len());
    for v in dist {
        let l = lie_derivative(x, v)?;
        out.push(span.interior(&l)?.simplify());
    }
    Ok(out)
}

pub fn symmetry_verdict(x: &VectorField, dist: &[VectorField], zt: &ZeroTest) -> Result<Verdict> {
    let rs = multivector_symmetry_residuals(x, dist)?;
    Ok(Verdict::all(rs.iter().map(|r| r.verdict(zt))))
}

#[derive(Clone, Debug)]
pub struct SymmetryAlgebra {
    pub fields: Vec<VectorField>,
    /// `[Xᵢ, Xⱼ] = Σₘ c[(i, j)][m] Xₘ` for `i < j`; zero rows omitted.
    pub constants: BTreeMap<(usize, usize), Vec<BigRational>>,
    /// Dimensions of the derived series, starting with the algebra itself.
    pub derived_series: Vec<usize>,
    pub solvable: bool,
    pub tier: Verdict,
}

impl SymmetryAlgebra {
    /// Structure constants of `[Xᵢ, Xⱼ]` for any ordered pair.
    pub fn bracket_coeffs(&self, i: usize, j: usize) -> Vec<BigRational> {
        let n = self.fields.len();
        if i == j {
            return vec![BigRational::zero(); n];
        }
        let (a, b, s) = if i < j { (i, j, 1) } else { (j, i, -1) };
        match self.constants.get(&(a, b)) {
            Some(c) if s > 0 => c.clone(),
            Some(c) => c.iter().map(|x| -x).collect(),
            None => vec![BigRational::zero(); n],
        }
    }

    fn bracket_vec(&self, a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
        let n = self.fields.len();
        let mut out = vec![BigRational::zero(); n];
        for i in 0..n {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if b[j].is_zero() || i == j {
                    continue;
                }
                let k = &a[i] * &b[j];
                for (m, c) in self.bracket_coeffs(i, j).iter().enumerate() {
                    out[m] += &k * c;
                }
            }
        }
        out
    }

    /// Jacobi identity at the level of structure constants.
    pub fn jacobi_holds(&self) -> bool {
        let n = self.fields.len();
        let e = |i: usize| {
            let mut v = vec![BigRational::zero(); n];
            v[i] = BigRational::one();
            v
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = self.bracket_vec(&e(i), &self.bracket_coeffs(j, k));
                    let b = self.bracket_vec(&e(j), &self.bracket_coeffs(k, i));
                    let c = self.bracket_vec(&e(k), &self.bracket_coeffs(i, j));
                    if (0..n).any(|m| !(&a[m] + &b[m] + &c[m]).is_zero()) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn derive(&mut self) {
        let n = self.fields.len();
        let mut basis: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                let mut v = vec![BigRational::zero(); n];
                v[i] = BigRational::one();
                v
            })
            .collect();
        let mut dims = vec![n];
        while !basis.is_empty() {
            let mut next = Vec::new();
            for a in 0..basis.len() {
                for b in a + 1..basis.len() {
                    next.push(self.bracket_vec(&basis[a], &basis[b]));
                }
            }
            let reduced = row_basis(next);
            if reduced.len() == basis.len() {
                break;
            }
            basis = reduced;
            dims.push(basis.len());
        }
        self.solvable = dims.last() == Some(&0);
        self.derived_series = dims;
    }
}

/// Row-reduced basis of the span of `rows`.
fn row_basis(mut rows: Vec<Vec<BigRational>>) -> Vec<Vec<BigRational>> {
    let Some(n) = rows.first().map(|r| r.len()) else { return rows };
    let mut out: Vec<Vec<BigRational>> = Vec::new();
    for col in 0..n {
        let Some(p) = rows.iter().position(|r| !r[col].is_zero()) else { continue };
        let piv = rows.swap_remove(p);
        let inv = piv[col].recip();
        let piv: Vec<BigRational> = piv.iter().map(|x| x * &inv).collect();
        for r in rows.iter_mut() {
            if !r[col].is_zero() {
                let f = r[col].clone();
                for (k, x) in r.iter_mut().enumerate() {
                    *x -= &f * &piv[k];
                }
            }
        }
        out.push(piv);
    }
    out
}

/// Best rational approximation with bounded denominator.
pub fn rationalize(x: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e12 {
            break;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64) / (k1 as f64) - x).abs() < 1e-9 * x.abs().max(1.0) {
            return Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)));
        }
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    if k1 != 0 && ((h1 as f64) / (k1 as f64) - x).abs() < 1e-9 * x.abs().max(1.0) {
        Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)))
    } else {
        None
    }
}

/// Least-squares solve by normal equations with partial pivoting.
fn least_squares(a: &[Vec<f64>], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = vec![vec![0.0; n + 1]; n];
    for (row, rhs) in a.iter().zip(b) {
        for i in 0..n {
            for j in 0..n {
                m[i][j] += row[i] * row[j];
            }
            m[i][n] += row[i] * rhs;
        }
    }
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

fn sample_points(fields: &[VectorField], zt: &ZeroTest, count: usize) -> (Vec<Symbol>, Vec<Vec<f64>>) {
    let mut vars: Vec<Symbol> = fields[0].chart().coords().to_vec();
    for f in fields {
        for c in f.components() {
            for s in c.free_symbols() {
                if !vars.contains(s) {
                    vars.push(s.clone());
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(zt.seed ^ 0xc0_ffee);
    let pts = (0..count).map(|_| vars.iter().map(|_| rng.gen_range(zt.lo..zt.hi)).collect()).collect();
    (vars, pts)
}

/// Structure constants by a numeric solve at random points, then symbolic
/// confirmation of every bracket.
pub fn commutator_table(fields: &[VectorField], zt: &ZeroTest) -> Result<SymmetryAlgebra> {
    let n = fields.len();
    if n == 0 {
        return Err(Error::Structure("empty field list".into()));
    }
    let (vars, pts) = sample_points(fields, zt, 3 + n);
    let compile = |v: &VectorField| -> Result<Vec<Compiled>> {
        v.components().iter().map(|c| Compiled::with_vars(c, &vars)).collect()
    };
    let mut field_vals: Vec<Vec<Vec<f64>>> = Vec::new();
    let compiled: Vec<Vec<Compiled>> = fields.iter().map(compile).collect::<Result<_>>()?;
    let mut good_pts = Vec::new();
    'pts: for p in &pts {
        let mut vals = Vec::new();
        for cf in &compiled {
            let mut col = Vec::new();
            for c in cf {
                match c.eval(p) {
                    Ok(v) => col.push(v),
                    Err(_) => continue 'pts,
                }
            }
            vals.push(col);
        }
        field_vals.push(vals);
        good_pts.push(p.clone());
    }
    if good_pts.len() < 2 {
        return Err(Error::Numeric("no regular sample points for the commutator table".into()));
    }
    let mut constants = BTreeMap::new();
    let mut tier = Verdict::Zero(crate::symbolic::ZeroTier::Symbolic);
    for i in 0..n {
        for j in i + 1..n {
            let br = lie_derivative(&fields[i], &fields[j])?.simplify();
            let cb = compile(&br)?;
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for (p, fv) in good_pts.iter().zip(&field_vals) {
                for (k, c) in cb.iter().enumerate() {
                    let Ok(b) = c.eval(p) else { continue };
                    rows.push((0..n).map(|m| fv[m][k]).collect::<Vec<f64>>());
                    rhs.push(b);
                }
            }
            let sol = least_squares(&rows, &rhs, n)
                .ok_or_else(|| Error::Structure(format!("fields are linearly dependent over constants (pair {}, {})", i + 1, j + 1)))?;
            let coeffs: Vec<BigRational> = sol
                .iter()
                .map(|&c| rationalize(c, 10_000).ok_or_else(|| Error::Structure(format!("bracket [X{}, X{}] does not close", i + 1, j + 1))))
                .collect::<Result<_>>()?;
            let mut resid = br.clone();
            for (m, c) in coeffs.iter().enumerate() {
                if !c.is_zero() {
                    resid = resid.sub(&fields[m].scale(&Expr::rational(c.clone())))?;
                }
            }
            let v = resid.verdict(zt);
            if !v.is_zero() {
                return Err(Error::Structure(format!("bracket [X{}, X{}] does not close in the span", i + 1, j + 1)));
            }
            tier = tier.and(v);
            if coeffs.iter().any(|c| !c.is_zero()) {
                constants.insert((i, j), coeffs);
            }
        }
    }
    let mut alg = SymmetryAlgebra { fields: fields.to_vec(), constants, derived_series: vec![], solvable: false, tier };
    alg.derive();
    Ok(alg)
}

/// Renders a bracket table row such as `[X1, X2] = X2`.
pub fn describe_bracket(i: usize, j: usize, c: &[BigRational], names: &[String]) -> String {
    let mut parts = Vec::new();
    for (m, k) in c.iter().enumerate() {
        if k.is_zero() {
            continue;
        }
        let name = &names[m];
        let s = if k.is_one() {
            name.clone()
        } else if (-k).is_one() {
            format!("-{}", name)
        } else {
            format!("{}*{}", crate::symbolic::expr::fmt_rational(k), name)
        };
        parts.push(s);
    }
    let rhs = if parts.is_empty() { "0".to_string() } else { parts.join(" + ").replace("+ -", "- ") };
    format!("[{}, {}] = {}", names[i], names[j], rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{x_sym, Chart};
    use crate::symbolic::{is_zero, parse};

    fn ex1() -> OdeProblem {
        OdeProblem::new(3, parse("u2^2*(u1^2 - 2*u*u2)/u1^4").unwrap()).unwrap()
    }

    #[test]
    fn example_one_generating_functions_are_symmetries() {
        let ode = ex1();
        for phi in ["x*u1 - u", "u1", "x*u1^2 - 2*u*u1", "u1^2", "exp(1/u1)*u1^2"] {
            let r = linearized_determining_residual(&parse(phi).unwrap(), &ode);
            assert!(is_zero(&r).is_zero(), "{}", phi);
        }
        let r = linearized_determining_residual(&parse("x").unwrap(), &ode);
        assert_eq!(is_zero(&r), Verdict::NonZero);
    }

    #[test]
    fn scaling_prolongation() {
        let ode = OdeProblem::new(2, parse("-u/x^2").unwrap()).unwrap();
        let v = prolong_components(&parse("x").unwrap(), &parse("u").unwrap(), &ode);
        assert!(v.components()[2].is_zero());
    }

    #[test]
    fn prolongation_without_xi_is_evolutive() {
        let ode = ex1();
        let phi = parse("u1^2").unwrap();
        let a = prolong_components(&Expr::zero(), &phi, &ode);
        let b = evolutive_field(&phi, &ode);
        assert!(a.sub(&b).unwrap().verdict(&ZeroTest::default()).is_zero());
    }

    #[test]
    fn example_one_table() {
        let ode = ex1();
        let x: Vec<VectorField> = ["x*u1 - u", "u1", "u1^2"].iter().map(|p| evolutive_field(&parse(p).unwrap(), &ode)).collect();
        let alg = commutator_table(&x, &ZeroTest::default()).unwrap();
        let one = BigRational::one();
        let zero = BigRational::zero();
        assert_eq!(alg.bracket_coeffs(0, 1), vec![zero.clone(), one.clone(), zero.clone()]);
        assert_eq!(alg.bracket_coeffs(0, 2), vec![zero.clone(), zero.clone(), one.clone()]);
        assert_eq!(alg.bracket_coeffs(1, 2), vec![zero.clone(), zero.clone(), zero.clone()]);
        assert!(alg.solvable);
        assert!(alg.jacobi_holds());
    }

    #[test]
    fn abelian_coordinate_pair() {
        let c = Chart::jet(1);
        let f = vec![VectorField::coordinate(&c, &x_sym()).unwrap(), VectorField::coordinate(&c, &u_sym(0)).unwrap()];
        let alg = commutator_table(&f, &ZeroTest::default()).unwrap();
        assert!(alg.constants.is_empty());
        assert!(alg.solvable);
    }

    #[test]
    fn rationals() {
        assert_eq!(rationalize(-0.5, 100), Some(BigRational::new((-1).into(), 2.into())));
        assert_eq!(rationalize(3.0, 100), Some(BigRational::from_integer(3.into())));
        assert_eq!(rationalize(std::f64::consts::PI, 100), None);
    }
}
