//! Solving `e = 0` for one symbol: polynomial equations of degree at most two,
//! possibly after isolating a single transcendental kernel.

use num_rational::BigRational;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::expr::{Expr, ExprKind, Func, Symbol};
use super::poly::Poly;
use super::ratfunc::{to_ratfunc, RatFunc};
use super::subs::subs1;
use super::upoly::{ratfunc_sqrt, UPoly};
use super::zero::{Verdict, ZeroTest};

const MAX_DEPTH: u32 = 4;

/// All branches `v = s` with `e(s) = 0` that the solver can reach, each
/// checked by substitution. Branches the zero test refutes are dropped;
/// inconclusive ones are kept.
pub fn solve_for(e: &Expr, v: &Symbol) -> Vec<Expr> {
    solve_for_with(e, v, &ZeroTest::default())
}

pub fn solve_for_with(e: &Expr, v: &Symbol, zt: &ZeroTest) -> Vec<Expr> {
    let cands = solve_rec(e, v, 0);
    let mut out: Vec<Expr> = Vec::new();
    for c in cands {
        if c.has_symbol(v) || out.contains(&c) {
            continue;
        }
        match zt.check(&subs1(e, v, &c)) {
            Verdict::NonZero => {}
            _ => out.push(c),
        }
    }
    out
}

fn solve_rec(e: &Expr, v: &Symbol, depth: u32) -> Vec<Expr> {
    if depth > MAX_DEPTH || !e.has_symbol(v) {
        return vec![];
    }
    let r = to_ratfunc(e);
    let num = r.num.clone();
    let vx = Expr::symbol(v);
    let ks: Vec<Expr> = num.vars().into_iter().filter(|k| k.has_symbol(v)).collect();
    if ks.is_empty() {
        return vec![];
    }
    if ks.len() == 1 {
        let k = &ks[0];
        let vals = poly_roots(&num, k);
        if k == &vx {
            return vals;
        }
        return vals.iter().flat_map(|s| invert(k, s, v, depth)).collect();
    }
    if let Some(eq) = merge_logs(&num, &ks) {
        return solve_rec(&eq, v, depth + 1);
    }
    vec![]
}

/// Roots of `p` viewed as a polynomial of degree at most two in `k`.
fn poly_roots(p: &Poly, k: &Expr) -> Vec<Expr> {
    let up = UPoly::from_poly(p, k);
    match up.deg() {
        1 => {
            let s = up.coeff(0).neg().div(&up.coeff(1));
            s.map(|s| vec![s.to_expr()]).unwrap_or_default()
        }
        2 => {
            let (a, b, c) = (up.coeff(2), up.coeff(1), up.coeff(0));
            let two_a = a.scale(&BigRational::from_integer(2.into()));
            let Some(inv2a) = two_a.inv() else { return vec![] };
            let disc = b.mul(&b).sub(&a.mul(&c).scale(&BigRational::from_integer(4.into())));
            let mb = b.neg();
            if disc.is_zero() {
                return vec![mb.mul(&inv2a).to_expr()];
            }
            if let Some(sq) = ratfunc_sqrt(&disc) {
                return vec![mb.add(&sq).mul(&inv2a).to_expr(), mb.sub(&sq).mul(&inv2a).to_expr()];
            }
            let root = Expr::sqrt(disc.to_expr());
            let base = mb.mul(&inv2a).to_expr();
            let scale = inv2a.to_expr();
            vec![simplify_branch(&base, &root, &scale, true), simplify_branch(&base, &root, &scale, false)]
        }
        _ => vec![],
    }
}

fn simplify_branch(base: &Expr, root: &Expr, scale: &Expr, plus: bool) -> Expr {
    let r = root * scale;
    if plus {
        base + &r
    } else {
        base - &r
    }
}

/// Solves `k = s` for `v` where `k` is a kernel containing `v`.
fn invert(k: &Expr, s: &Expr, v: &Symbol, depth: u32) -> Vec<Expr> {
    let next = match k.kind() {
        ExprKind::Call(Func::Exp, h) => {
            if sign_hint(s) == Some(false) {
                return vec![];
            }
            h - &Expr::ln(s.clone())
        }
        ExprKind::Call(Func::Ln, h) => h - &Expr::exp(s.clone()),
        ExprKind::Call(Func::Arctan, h) => h - &Expr::call(Func::Tan, s.clone()),
        ExprKind::Call(Func::Tan, h) => h - &Expr::call(Func::Arctan, s.clone()),
        ExprKind::Pow(b, ex) => match ex.as_num() {
            Some(q) if !q.is_zero() => b - &Expr::pow(s.clone(), Expr::rational(q.recip())),
            _ => return vec![],
        },
        _ => return vec![],
    };
    solve_rec(&next, v, depth + 1)
}

fn sign_hint(s: &Expr) -> Option<bool> {
    s.as_num().map(|c| c > &BigRational::zero())
}

/// Rewrites `Σ a_i ln(h_i) + R` (numeric `a_i`, `R` free of `v`) as
/// `Π h_i^{a_i} − exp(−R)`.
fn merge_logs(num: &Poly, ks: &[Expr]) -> Option<Expr> {
    let mut logs: Vec<(Expr, BigRational)> = Vec::new();
    let mut common: Option<RatFunc> = None;
    let ks: Vec<&Expr> = ks.iter().filter(|k| matches!(k.kind(), ExprKind::Call(Func::Ln, _))).collect();
    for &k in &ks {
        let ExprKind::Call(Func::Ln, h) = k.kind() else { unreachable!() };
        if num.degree(k) != 1 {
            return None;
        }
        let c = RatFunc::from_poly(num.coeffs_in(k).swap_remove(1));
        let g = common.get_or_insert_with(|| c.clone());
        let a = c.div(g)?.as_const()?;
        logs.push((h.clone(), a));
    }
    let mut rest = num.clone();
    for &k in &ks {
        rest = rest.coeffs_in(k).into_iter().next().unwrap_or_else(Poly::zero);
    }
    if ks.is_empty() || ks.iter().any(|k| rest.has_var(k)) {
        return None;
    }
    let den = logs.iter().fold(BigInt::one(), |l, (_, a)| l.lcm(a.denom()));
    let numer = logs.iter().fold(BigInt::zero(), |g, (_, a)| g.gcd(&(a.numer() * &den / a.denom())));
    let m = BigRational::new(den, numer);
    for (_, a) in logs.iter_mut() {
        *a = &*a * &m;
    }
    let prod = Expr::mul(logs.iter().map(|(h, a)| Expr::pow(h.clone(), Expr::rational(a.clone()))).collect());
    let r = RatFunc::from_poly(rest).div(&common?)?.scale(&m).to_expr();
    Some(prod - Expr::exp(-r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse::parse;
    use crate::symbolic::zero::is_zero;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn linear() {
        let s = solve_for(&p("a*v + b"), &Symbol::new("v"));
        assert_eq!(s.len(), 1);
        assert!(is_zero(&(&s[0] + &p("b/a"))).is_zero());
    }

    #[test]
    fn pure_quadratic_has_two_branches() {
        let s = solve_for(&p("2*v^2 - c"), &Symbol::new("v"));
        assert_eq!(s.len(), 2);
        assert!(is_zero(&(&s[0] + &s[1])).is_zero());
    }

    #[test]
    fn through_log_kernel() {
        let e = p("1/b + ln(v/(2*a*v - b^2)) - c");
        let s = solve_for(&e, &Symbol::new("v"));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn through_arctan_and_exp() {
        let s = solve_for(&p("arctan(v/u) + x - c"), &Symbol::new("v"));
        assert!(is_zero(&(&s[0] - &p("u*tan(c - x)"))).is_zero());
        let s = solve_for(&p("exp(1/u)*k + m"), &Symbol::new("u"));
        assert_eq!(s.len(), 1);
        assert!(is_zero(&(&s[0] - &p("1/ln(-m/k)"))).is_zero());
    }

    #[test]
    fn logs_with_common_factor() {
        let e = p("(a + b)*ln(v + a) + (a + b)*ln(v - a) + a - c*(a + b)");
        assert_eq!(solve_for(&e, &Symbol::new("v")).len(), 2);
    }

    #[test]
    fn merges_logs() {
        let s = solve_for(&p("2*ln(v) - ln(v + 1) - c"), &Symbol::new("v"));
        assert!(!s.is_empty());
    }

    #[test]
    fn cubic_is_out_of_reach() {
        assert!(solve_for(&p("v^3 + v + 1"), &Symbol::new("v")).is_empty());
    }
}
