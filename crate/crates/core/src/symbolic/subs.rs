use super::expr::{Expr, ExprKind, Func, Subst, Symbol};

/// Simultaneous substitution of symbols by expressions.
pub fn substitute(e: &Expr, map: &Subst) -> Expr {
    if map.is_empty() || !map.keys().any(|k| e.has_symbol(k)) {
        return e.clone();
    }
    match e.kind() {
        ExprKind::Sym(s) => map.get(s).cloned().unwrap_or_else(|| e.clone()),
        ExprKind::Integral { integrand, var, lower, upper } => {
            let mut inner = map.clone();
            inner.remove(var);
            let captures = inner.values().any(|v| v.has_symbol(var));
            let (integrand, var) = if captures {
                let fresh = fresh_symbol(var, |s| integrand.has_symbol(s) || inner.values().any(|v| v.has_symbol(s)));
                let mut r = Subst::new();
                r.insert(var.clone(), Expr::symbol(&fresh));
                (substitute(integrand, &r), fresh)
            } else {
                (integrand.clone(), var.clone())
            };
            Expr::integral_to(substitute(&integrand, &inner), &var, lower.clone(), substitute(upper, map))
        }
        _ => e.map_children(&mut |c| substitute(c, map)),
    }
}

/// Replaces every occurrence of the subtree `target`.
pub fn replace(e: &Expr, target: &Expr, with: &Expr) -> Expr {
    if e == target {
        return with.clone();
    }
    match e.kind() {
        ExprKind::Num(_) | ExprKind::Sym(_) => e.clone(),
        _ => e.map_children(&mut |c| replace(c, target, with)),
    }
}

pub fn subs1(e: &Expr, s: &Symbol, v: &Expr) -> Expr {
    let mut m = Subst::new();
    m.insert(s.clone(), v.clone());
    substitute(e, &m)
}

fn fresh_symbol(base: &Symbol, taken: impl Fn(&Symbol) -> bool) -> Symbol {
    let mut k = 1;
    loop {
        let cand = Symbol::new(&format!("{}_{}", base, k));
        if !taken(&cand) {
            return cand;
        }
        k += 1;
    }
}

/// Partial derivative with respect to `v`. The result is not simplified.
pub fn diff(e: &Expr, v: &Symbol) -> Expr {
    if !e.has_symbol(v) {
        return Expr::zero();
    }
    match e.kind() {
        ExprKind::Num(_) => Expr::zero(),
        ExprKind::Sym(s) => {
            if s == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        ExprKind::Add(ts) => Expr::add(ts.iter().map(|t| diff(t, v)).collect()),
        ExprKind::Mul(fs) => {
            let mut terms = Vec::new();
            for i in 0..fs.len() {
                let d = diff(&fs[i], v);
                if d.is_zero() {
                    continue;
                }
                let mut prod: Vec<Expr> = Vec::with_capacity(fs.len());
                for (j, f) in fs.iter().enumerate() {
                    prod.push(if i == j { d.clone() } else { f.clone() });
                }
                terms.push(Expr::mul(prod));
            }
            Expr::add(terms)
        }
        ExprKind::Pow(b, ex) => {
            if !ex.has_symbol(v) {
                Expr::mul(vec![ex.clone(), Expr::pow(b.clone(), ex - &Expr::one()), diff(b, v)])
            } else if !b.has_symbol(v) {
                Expr::mul(vec![e.clone(), Expr::ln(b.clone()), diff(ex, v)])
            } else {
                e * &(&(&diff(ex, v) * &Expr::ln(b.clone())) + &(&(ex * &diff(b, v)) / b))
            }
        }
        ExprKind::Call(f, a) => {
            let da = diff(a, v);
            let outer = match f {
                Func::Exp => e.clone(),
                Func::Ln => a.recip(),
                Func::Sin => Expr::call(Func::Cos, a.clone()),
                Func::Cos => -Expr::call(Func::Sin, a.clone()),
                Func::Tan => Expr::one() + Expr::pow(e.clone(), Expr::num(2)),
                Func::Arctan => (Expr::one() + Expr::pow(a.clone(), Expr::num(2))).recip(),
            };
            outer * da
        }
        ExprKind::Integral { integrand, var, lower, upper } => {
            let boundary = Expr::mul(vec![subs1(integrand, var, upper), diff(upper, v)]);
            let inner = if var == v {
                Expr::zero()
            } else {
                Expr::integral_to(diff(integrand, v), var, lower.clone(), upper.clone())
            };
            boundary + inner
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::expr::rat;

    #[test]
    fn product_rule() {
        let x = Symbol::new("x");
        let e = Expr::sym("x") * Expr::exp(Expr::sym("x"));
        let d = diff(&e, &x);
        let expect = Expr::exp(Expr::sym("x")) + Expr::sym("x") * Expr::exp(Expr::sym("x"));
        assert_eq!(d, expect);
    }

    #[test]
    fn integral_derivative_returns_integrand() {
        let x = Symbol::new("x");
        let g = Expr::exp(Expr::exp(Expr::sym("x")));
        let i = Expr::integral(g.clone(), &x, rat(1, 1));
        assert_eq!(diff(&i, &x), g);
    }

    #[test]
    fn integral_at_base_point_vanishes() {
        let x = Symbol::new("x");
        let i = Expr::integral(Expr::exp(Expr::exp(Expr::sym("x"))), &x, rat(1, 1));
        assert!(subs1(&i, &x, &Expr::one()).is_zero());
    }
}
