//! Rational-function normal form over kernels, used as the simplifier.

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::expr::{Expr, ExprKind, Func};
use super::poly::{coprime_basis, gcd, Poly};

/// `num / Π den_i^{m_i}` with primitive, pairwise coprime denominator factors.
#[derive(Clone, Debug, PartialEq)]
pub struct RatFunc {
    pub num: Poly,
    pub den: Vec<(Poly, u32)>,
}

pub fn decompose(f: &Poly, basis: &[Poly]) -> (BigRational, Vec<u32>) {
    let mut rest = f.clone();
    let mut exps = vec![0u32; basis.len()];
    for (i, b) in basis.iter().enumerate() {
        while !rest.is_const() {
            match rest.div_exact(b) {
                Some(q) => {
                    rest = q;
                    exps[i] += 1;
                }
                None => break,
            }
        }
    }
    let c = rest.as_const().expect("factor lies in the span of its coprime basis");
    (c, exps)
}

fn den_product(den: &[(Poly, u32)]) -> Poly {
    den.iter().fold(Poly::one(), |acc, (p, m)| acc.mul(&p.pow(*m)))
}

impl RatFunc {
    pub fn zero() -> RatFunc {
        RatFunc { num: Poly::zero(), den: vec![] }
    }

    pub fn one() -> RatFunc {
        RatFunc::from_poly(Poly::one())
    }

    pub fn from_poly(p: Poly) -> RatFunc {
        RatFunc { num: p, den: vec![] }
    }

    pub fn constant(c: BigRational) -> RatFunc {
        RatFunc::from_poly(Poly::constant(c))
    }

    pub fn kernel(k: Expr) -> RatFunc {
        RatFunc::from_poly(Poly::var(k))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_const(&self) -> Option<BigRational> {
        if self.den.is_empty() {
            self.num.as_const()
        } else {
            None
        }
    }

    pub fn den_poly(&self) -> Poly {
        den_product(&self.den)
    }

    pub fn kernels(&self) -> std::collections::BTreeSet<Expr> {
        let mut s = self.num.vars();
        for (p, _) in &self.den {
            s.extend(p.vars());
        }
        s
    }

    /// Builds a normalized value from an arbitrary factored denominator.
    pub fn from_parts(num: Poly, den: Vec<(Poly, u32)>) -> RatFunc {
        if num.is_zero() {
            return RatFunc::zero();
        }
        let mut num = num;
        let mut plain = Vec::new();
        for (p, m) in den {
            if m == 0 {
                continue;
            }
            match p.as_const() {
                Some(c) => num = num.scale(&num_traits::pow(c.recip(), m as usize)),
                None => plain.push((p, m)),
            }
        }
        let polys: Vec<Poly> = plain.iter().map(|(p, _)| p.clone()).collect();
        let basis = coprime_basis(&polys);
        let mut mult = vec![0u32; basis.len()];
        for (p, m) in &plain {
            let (c, e) = decompose(p, &basis);
            num = num.scale(&num_traits::pow(c.recip(), *m as usize));
            for (i, k) in e.iter().enumerate() {
                mult[i] += k * m;
            }
        }
        let den: Vec<(Poly, u32)> = basis.into_iter().zip(mult).filter(|(_, m)| *m > 0).collect();
        RatFunc { num, den }.cancel()
    }

    fn cancel(mut self) -> RatFunc {
        if self.num.is_zero() {
            return RatFunc::zero();
        }
        loop {
            let mut split: Option<(usize, Poly)> = None;
            for i in 0..self.den.len() {
                let (f, _) = &self.den[i];
                if let Some(q) = self.num.div_exact(f) {
                    self.num = q;
                    self.den[i].1 -= 1;
                    split = Some((usize::MAX, Poly::one()));
                    break;
                }
                let g = gcd(&self.num, f);
                if !g.is_const() {
                    split = Some((i, g));
                    break;
                }
            }
            match split {
                None => break,
                Some((usize::MAX, _)) => {
                    self.den.retain(|(_, m)| *m > 0);
                }
                Some((i, g)) => {
                    let (f, m) = self.den.remove(i);
                    let h = f.div_exact(&g).unwrap();
                    self.den.push((g, m));
                    self.den.push((h, m));
                    return RatFunc::from_parts(self.num, self.den);
                }
            }
        }
        self.den.sort_by(|a, b| a.0.lead().map(|t| &t.0).cmp(&b.0.lead().map(|t| &t.0)));
        self
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn scale(&self, c: &BigRational) -> RatFunc {
        if c.is_zero() {
            return RatFunc::zero();
        }
        RatFunc { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn mul(&self, o: &RatFunc) -> RatFunc {
        if self.is_zero() || o.is_zero() {
            return RatFunc::zero();
        }
        if self.den.is_empty() && o.den.is_empty() {
            return RatFunc::from_poly(self.num.mul(&o.num));
        }
        if let Some(c) = self.as_const() {
            return o.scale(&c);
        }
        if let Some(c) = o.as_const() {
            return self.scale(&c);
        }
        let mut den = self.den.clone();
        den.extend(o.den.iter().cloned());
        RatFunc::from_parts(self.num.mul(&o.num), den)
    }

    pub fn add(&self, o: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            let mut r = RatFunc { num: self.num.add(&o.num), den: self.den.clone() };
            if r.den.is_empty() || r.num.is_zero() {
                if r.num.is_zero() {
                    return RatFunc::zero();
                }
                return r;
            }
            r = r.cancel();
            return r;
        }
        let polys: Vec<Poly> = self.den.iter().chain(o.den.iter()).map(|(p, _)| p.clone()).collect();
        let basis = coprime_basis(&polys);
        let expo = |r: &RatFunc| -> (BigRational, Vec<u32>) {
            let mut c = BigRational::one();
            let mut e = vec![0u32; basis.len()];
            for (p, m) in &r.den {
                let (k, ex) = decompose(p, &basis);
                c *= num_traits::pow(k, *m as usize);
                for i in 0..e.len() {
                    e[i] += ex[i] * m;
                }
            }
            (c, e)
        };
        let (ca, ea) = expo(self);
        let (cb, eb) = expo(o);
        let lcm: Vec<u32> = ea.iter().zip(eb.iter()).map(|(a, b)| *a.max(b)).collect();
        let lift = |num: &Poly, c: &BigRational, e: &[u32]| -> Poly {
            let mut p = num.scale(&c.recip());
            for i in 0..basis.len() {
                if lcm[i] > e[i] {
                    p = p.mul(&basis[i].pow(lcm[i] - e[i]));
                }
            }
            p
        };
        let num = lift(&self.num, &ca, &ea).add(&lift(&o.num, &cb, &eb));
        if num.is_zero() {
            return RatFunc::zero();
        }
        let den: Vec<(Poly, u32)> = basis.iter().cloned().zip(lcm).filter(|(_, m)| *m > 0).collect();
        RatFunc { num, den }.cancel()
    }

    pub fn sub(&self, o: &RatFunc) -> RatFunc {
        self.add(&o.neg())
    }

    pub fn inv(&self) -> Option<RatFunc> {
        if self.is_zero() {
            return None;
        }
        let (c, p) = self.num.normalize();
        let num = den_product(&self.den).scale(&c.recip());
        if p.is_one() {
            return Some(RatFunc::from_poly(num));
        }
        Some(RatFunc::from_parts(num, vec![(p, 1)]))
    }

    pub fn div(&self, o: &RatFunc) -> Option<RatFunc> {
        Some(self.mul(&o.inv()?))
    }

    pub fn pow(&self, n: i64) -> Option<RatFunc> {
        if n < 0 {
            return self.inv()?.pow(-n);
        }
        let n = n as u32;
        if self.den.is_empty() {
            return Some(RatFunc::from_poly(self.num.pow(n)));
        }
        Some(RatFunc { num: self.num.pow(n), den: self.den.iter().map(|(p, m)| (p.clone(), m * n)).collect() })
    }

    pub fn to_expr(&self) -> Expr {
        if self.num.is_zero() {
            return Expr::zero();
        }
        let (c, p) = self.num.normalize();
        let mut fs = vec![Expr::rational(c), p.to_expr()];
        for (d, m) in &self.den {
            fs.push(Expr::pow(d.to_expr(), Expr::num(-(*m as i64))));
        }
        Expr::mul(fs)
    }

    /// Numerator terms each over the full denominator, when the denominator is a monomial.
    fn split_terms(&self) -> Vec<Expr> {
        let den = self.den_poly();
        if den.is_monomial() || den.is_const() {
            let inv = RatFunc::from_poly(den).inv().unwrap();
            self.num
                .terms()
                .iter()
                .map(|(m, c)| RatFunc::from_poly(Poly::monomial(m.clone(), c.clone())).mul(&inv).to_expr())
                .collect()
        } else {
            vec![self.to_expr()]
        }
    }
}

fn int_of(r: &BigRational) -> Option<i64> {
    if r.denom().is_one() {
        r.numer().to_i64()
    } else {
        None
    }
}

fn exp_of_sum(arg: &Expr) -> RatFunc {
    let arf = to_ratfunc(arg);
    let mut acc = RatFunc::one();
    for t in arf.split_terms() {
        let (c, rest) = t.coeff_rest();
        let piece = if rest.is_one() {
            match int_of(&c) {
                Some(n) => RatFunc::kernel(Expr::exp(Expr::one())).pow(n).unwrap(),
                None => RatFunc::kernel(Expr::exp(Expr::rational(c))),
            }
        } else if let ExprKind::Call(Func::Ln, b) = rest.kind() {
            match int_of(&c) {
                Some(n) => match to_ratfunc(b).pow(n) {
                    Some(r) => r,
                    None => RatFunc::kernel(Expr::exp(t.clone())),
                },
                None => to_ratfunc(&Expr::pow(b.clone(), Expr::rational(c))),
            }
        } else {
            match int_of(&c) {
                Some(n) => RatFunc::kernel(Expr::exp(rest.clone())).pow(n).unwrap(),
                None => RatFunc::kernel(Expr::exp(t.clone())),
            }
        };
        acc = acc.mul(&piece);
    }
    acc
}

fn kernel_rf(k: Expr) -> RatFunc {
    match k.kind() {
        ExprKind::Call(..) | ExprKind::Integral { .. } | ExprKind::Pow(..) | ExprKind::Sym(_) => RatFunc::kernel(k),
        ExprKind::Mul(fs) if fs.len() == 2 && fs[0].is_num() && matches!(fs[1].kind(), ExprKind::Call(..)) => {
            RatFunc::kernel(fs[1].clone()).scale(fs[0].as_num().unwrap())
        }
        _ => to_ratfunc(&k),
    }
}

/// Converts an expression into rational-function normal form over its kernels.
pub fn to_ratfunc(e: &Expr) -> RatFunc {
    match e.kind() {
        ExprKind::Num(r) => RatFunc::constant(r.clone()),
        ExprKind::Sym(_) => RatFunc::kernel(e.clone()),
        ExprKind::Add(ts) => {
            let parts: Vec<RatFunc> = ts.iter().map(to_ratfunc).collect();
            sum_balanced(parts)
        }
        ExprKind::Mul(fs) => fs.iter().fold(RatFunc::one(), |acc, f| acc.mul(&to_ratfunc(f))),
        ExprKind::Pow(b, ex) => match ex.kind() {
            ExprKind::Num(r) => {
                if let Some(n) = int_of(r) {
                    return to_ratfunc(b).pow(n).unwrap_or_else(|| RatFunc::kernel(e.clone()));
                }
                let fl = r.numer().div_floor(r.denom());
                let frac = r - BigRational::from_integer(fl.clone());
                let sb = simplify(b);
                let k = Expr::pow(sb.clone(), Expr::rational(frac));
                let whole = to_ratfunc(&sb).pow(fl.to_i64().unwrap_or(0)).unwrap_or_else(RatFunc::one);
                let kr = match k.kind() {
                    ExprKind::Pow(..) => RatFunc::kernel(k),
                    _ => to_ratfunc(&k),
                };
                whole.mul(&kr)
            }
            _ => {
                if b.is_num() && b.as_num().unwrap().is_positive() {
                    exp_of_sum(&(ex * &Expr::ln(b.clone())))
                } else {
                    RatFunc::kernel(Expr::pow(simplify(b), simplify(ex)))
                }
            }
        },
        ExprKind::Call(Func::Exp, a) => exp_of_sum(a),
        ExprKind::Call(f, a) => {
            let sa = simplify(a);
            let k = Expr::call(*f, sa);
            if *f == Func::Ln {
                if let ExprKind::Call(Func::Ln, _) = k.kind() {
                    return RatFunc::kernel(k);
                }
                return to_ratfunc(&k);
            }
            kernel_rf(k)
        }
        ExprKind::Integral { integrand, var, lower, upper } => {
            let k = Expr::integral_to(simplify(integrand), var, lower.clone(), simplify(upper));
            match k.kind() {
                ExprKind::Integral { .. } => RatFunc::kernel(k),
                _ => to_ratfunc(&k),
            }
        }
    }
}

fn sum_balanced(mut parts: Vec<RatFunc>) -> RatFunc {
    // group equal denominators first; they add without any gcd work
    parts.sort_by(|a, b| a.den.len().cmp(&b.den.len()));
    let mut merged: Vec<RatFunc> = Vec::new();
    for p in parts {
        if let Some(m) = merged.iter_mut().find(|m| m.den == p.den) {
            m.num = m.num.add(&p.num);
        } else {
            merged.push(p);
        }
    }
    let merged: Vec<RatFunc> = merged.into_iter().map(|m| if m.den.is_empty() { m } else { RatFunc { num: m.num, den: m.den }.cancel() }).collect();
    merged.into_iter().fold(RatFunc::zero(), |acc, p| acc.add(&p))
}

/// Canonical simplification: rational normal form over kernels.
pub fn simplify(e: &Expr) -> Expr {
    match e.kind() {
        ExprKind::Num(_) | ExprKind::Sym(_) => e.clone(),
        _ => to_ratfunc(e).to_expr(),
    }
}

/// `(numerator, denominator)` of the simplified form.
pub fn num_den(e: &Expr) -> (Expr, Expr) {
    let r = to_ratfunc(e);
    (r.num.to_expr(), r.den_poly().to_expr())
}

/// Gaussian elimination over the rational-function field. Free unknowns are set to zero.
pub fn solve_linear(mut rows: Vec<Vec<RatFunc>>, mut rhs: Vec<RatFunc>, n: usize) -> Option<Vec<RatFunc>> {
    let m = rows.len();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        if r == m {
            break;
        }
        let Some(p) = (r..m).find(|&i| !rows[i][col].is_zero()) else { continue };
        rows.swap(r, p);
        rhs.swap(r, p);
        let inv = rows[r][col].inv()?;
        for k in col..n {
            rows[r][k] = rows[r][k].mul(&inv);
        }
        rhs[r] = rhs[r].mul(&inv);
        for i in 0..m {
            if i == r || rows[i][col].is_zero() {
                continue;
            }
            let f = rows[i][col].clone();
            for k in col..n {
                let t = rows[r][k].mul(&f);
                rows[i][k] = rows[i][k].sub(&t);
            }
            let t = rhs[r].mul(&f);
            rhs[i] = rhs[i].sub(&t);
        }
        pivots.push((r, col));
        r += 1;
    }
    if rhs[r..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    let mut sol = vec![RatFunc::zero(); n];
    for (row, col) in pivots {
        sol[col] = rhs[row].clone();
    }
    Some(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse::parse;

    fn s(t: &str) -> Expr {
        simplify(&parse(t).unwrap())
    }

    #[test]
    fn cancels_common_factors() {
        assert_eq!(s("(x^2 - 1)/(x - 1)"), s("x + 1"));
        assert!(s("1/(x*(x+1)) - 1/x + 1/(x+1)").is_zero());
    }

    #[test]
    fn exponential_rules() {
        assert!(s("exp(a + b) - exp(a)*exp(b)").is_zero());
        assert!(s("exp(2*ln(x)) - x^2").is_zero());
        assert!(s("exp((1 - c3*u1)/u1) - exp(1/u1)*exp(-c3)").is_zero());
    }

    #[test]
    fn idempotent() {
        let e = s("(u1^2 - 2*u*u2)*u2^2/(x + 1) + exp(1/u1)*u1^2");
        assert_eq!(simplify(&e), e);
    }

    #[test]
    fn derivative_of_log_ratio() {
        let e = parse("ln(u2/(2*u*u2 - u1^2))").unwrap();
        let d = crate::symbolic::subs::diff(&e, &crate::symbolic::expr::Symbol::new("u"));
        assert!(simplify(&(d - parse("-2*u2/(2*u*u2 - u1^2)").unwrap())).is_zero());
    }
}
