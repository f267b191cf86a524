//! Univariate polynomials in one kernel with coefficients in the field of
//! rational functions of the remaining kernels.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::expr::Expr;
use super::poly::{Mono, Poly};
use super::ratfunc::RatFunc;

#[derive(Clone, Debug, PartialEq)]
pub struct UPoly {
    c: Vec<RatFunc>,
}

impl UPoly {
    pub fn new(mut c: Vec<RatFunc>) -> UPoly {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        UPoly { c }
    }

    pub fn zero() -> UPoly {
        UPoly { c: vec![] }
    }

    pub fn constant(k: RatFunc) -> UPoly {
        UPoly::new(vec![k])
    }

    pub fn one() -> UPoly {
        UPoly::constant(RatFunc::one())
    }

    pub fn x() -> UPoly {
        UPoly::new(vec![RatFunc::zero(), RatFunc::one()])
    }

    pub fn coeffs(&self) -> &[RatFunc] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> RatFunc {
        self.c.get(i).cloned().unwrap_or_else(RatFunc::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; `-1` for the zero polynomial.
    pub fn deg(&self) -> isize {
        self.c.len() as isize - 1
    }

    pub fn lc(&self) -> RatFunc {
        self.c.last().cloned().unwrap_or_else(RatFunc::zero)
    }

    pub fn add(&self, o: &UPoly) -> UPoly {
        let n = self.c.len().max(o.c.len());
        UPoly::new((0..n).map(|i| self.coeff(i).add(&o.coeff(i))).collect())
    }

    pub fn neg(&self) -> UPoly {
        UPoly { c: self.c.iter().map(|k| k.neg()).collect() }
    }

    pub fn sub(&self, o: &UPoly) -> UPoly {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: &RatFunc) -> UPoly {
        UPoly::new(self.c.iter().map(|c| c.mul(k)).collect())
    }

    pub fn shift(&self, n: usize) -> UPoly {
        if self.is_zero() {
            return UPoly::zero();
        }
        let mut c = vec![RatFunc::zero(); n];
        c.extend(self.c.iter().cloned());
        UPoly { c }
    }

    pub fn mul(&self, o: &UPoly) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly::zero();
        }
        let mut c = vec![RatFunc::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] = c[i + j].add(&a.mul(b));
            }
        }
        UPoly::new(c)
    }

    pub fn pow(&self, n: u32) -> UPoly {
        (0..n).fold(UPoly::one(), |acc, _| acc.mul(self))
    }

    pub fn divrem(&self, d: &UPoly) -> (UPoly, UPoly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let dl = d.lc().inv().unwrap();
        let mut r = self.clone();
        let mut q = vec![RatFunc::zero(); (self.deg() - d.deg() + 1).max(0) as usize];
        while r.deg() >= d.deg() {
            let k = (r.deg() - d.deg()) as usize;
            let f = r.lc().mul(&dl);
            r = r.sub(&d.scale(&f).shift(k));
            q[k] = f;
        }
        (UPoly::new(q), r)
    }

    pub fn rem(&self, d: &UPoly) -> UPoly {
        self.divrem(d).1
    }

    pub fn div_exact(&self, d: &UPoly) -> Option<UPoly> {
        let (q, r) = self.divrem(d);
        if r.is_zero() {
            Some(q)
        } else {
            None
        }
    }

    pub fn monic(&self) -> UPoly {
        if self.is_zero() {
            return UPoly::zero();
        }
        self.scale(&self.lc().inv().unwrap())
    }

    pub fn diff(&self) -> UPoly {
        UPoly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, k)| k.scale(&BigRational::from_integer((i as i64).into())))
                .collect(),
        )
    }

    pub fn gcd(a: &UPoly, b: &UPoly) -> UPoly {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `(g, s, t)` with `s·a + t·b = g`, `g` monic.
    pub fn ext_gcd(a: &UPoly, b: &UPoly) -> (UPoly, UPoly, UPoly) {
        let (mut r0, mut r1) = (a.clone(), b.clone());
        let (mut s0, mut s1) = (UPoly::one(), UPoly::zero());
        let (mut t0, mut t1) = (UPoly::zero(), UPoly::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            r0 = r1;
            r1 = r;
            let s = s0.sub(&q.mul(&s1));
            s0 = s1;
            s1 = s;
            let t = t0.sub(&q.mul(&t1));
            t0 = t1;
            t1 = t;
        }
        let inv = r0.lc().inv().unwrap_or_else(RatFunc::one);
        (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv))
    }

    /// Solves `s·a + t·b = c` with `deg s < deg b` given `gcd(a, b) = 1`.
    pub fn diophantine(a: &UPoly, b: &UPoly, c: &UPoly) -> Option<(UPoly, UPoly)> {
        let (g, s, t) = UPoly::ext_gcd(a, b);
        if g.deg() != 0 {
            return None;
        }
        let s = s.mul(c);
        let t = t.mul(c);
        let (q, s) = s.divrem(b);
        let t = t.add(&q.mul(a));
        Some((s, t))
    }

    /// Yun's algorithm: `self = lc · Π P_i^i` with each `P_i` monic and squarefree.
    pub fn squarefree(&self) -> Vec<UPoly> {
        let a = self.monic();
        let b = a.diff();
        let c = UPoly::gcd(&a, &b);
        if c.deg() == 0 {
            return vec![a];
        }
        let mut out = Vec::new();
        let mut w = a.div_exact(&c).unwrap();
        let mut y = b.div_exact(&c).unwrap();
        let mut z = y.sub(&w.diff());
        while w.deg() > 0 {
            let g = UPoly::gcd(&w, &z);
            out.push(g.clone());
            w = w.div_exact(&g).unwrap();
            y = z.div_exact(&g).unwrap();
            z = y.sub(&w.diff());
        }
        out
    }

    pub fn eval(&self, k: &RatFunc) -> RatFunc {
        let mut acc = RatFunc::zero();
        for c in self.c.iter().rev() {
            acc = acc.mul(k).add(c);
        }
        acc
    }

    /// Splits a polynomial in `v` into coefficients; `None` if any coefficient still contains `v`.
    pub fn from_poly(p: &Poly, v: &Expr) -> UPoly {
        UPoly::new(p.coeffs_in(v).into_iter().map(RatFunc::from_poly).collect())
    }

    pub fn to_ratfunc(&self, v: &Expr) -> RatFunc {
        let mut acc = RatFunc::zero();
        for (i, c) in self.c.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let m = RatFunc::from_poly(Poly::monomial(Mono::var(v.clone(), i as u32), BigRational::one()));
            acc = acc.add(&c.mul(&m));
        }
        acc
    }

    pub fn to_expr(&self, v: &Expr) -> Expr {
        self.to_ratfunc(v).to_expr()
    }
}

/// Splits `r` into `(num, den)` polynomials in `v`.
pub fn split_ratfunc(r: &RatFunc, v: &Expr) -> (UPoly, UPoly) {
    let num = UPoly::from_poly(&r.num, v);
    let den = UPoly::from_poly(&r.den_poly(), v);
    (num, den)
}

/// Exact square root of a polynomial, if it is a perfect square.
pub fn poly_sqrt(p: &Poly) -> Option<Poly> {
    if p.is_zero() {
        return Some(Poly::zero());
    }
    let (m0, c0) = p.lead()?.clone();
    if m0.0.iter().any(|(_, e)| e % 2 != 0) {
        return None;
    }
    let rc = rational_sqrt(&c0)?;
    let rm = Mono(m0.0.iter().map(|(v, e)| (v.clone(), e / 2)).collect());
    let lead = Poly::monomial(rm.clone(), rc.clone());
    let two_lead_c = &rc + &rc;
    let mut r = lead;
    for _ in 0..=p.terms().len() {
        let rem = p.sub(&r.mul(&r));
        if rem.is_zero() {
            return Some(r);
        }
        let (m, c) = rem.lead()?.clone();
        let tm = m.div(&rm)?;
        if tm >= rm {
            return None;
        }
        r = r.add(&Poly::monomial(tm, &c / &two_lead_c));
    }
    None
}

pub fn rational_sqrt(c: &BigRational) -> Option<BigRational> {
    if c < &BigRational::zero() {
        return None;
    }
    let n = c.numer().sqrt();
    let d = c.denom().sqrt();
    if &n * &n == *c.numer() && &d * &d == *c.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

/// Square root in the coefficient field, when one exists.
pub fn ratfunc_sqrt(r: &RatFunc) -> Option<RatFunc> {
    let n = poly_sqrt(&r.num)?;
    let d = poly_sqrt(&r.den_poly())?;
    RatFunc::from_poly(n).div(&RatFunc::from_poly(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::ratfunc::to_ratfunc;
    use crate::symbolic::parse::parse;

    fn up(s: &str) -> UPoly {
        let r = to_ratfunc(&parse(s).unwrap());
        split_ratfunc(&r, &Expr::sym("v")).0
    }

    #[test]
    fn squarefree_of_repeated_factor() {
        let p = up("(v + a)^2*(v - 1)");
        let sf = p.squarefree();
        assert_eq!(sf.len(), 2);
        assert_eq!(sf[0], up("v - 1"));
        assert_eq!(sf[1], up("v + a"));
    }

    #[test]
    fn sqrt_of_square() {
        let p = to_ratfunc(&parse("(2*a*b - 3*c + 1)^2").unwrap()).num;
        let r = poly_sqrt(&p).unwrap();
        assert_eq!(r.mul(&r), p);
        assert!(poly_sqrt(&p.add(&Poly::one())).is_none());
    }

    #[test]
    fn extended_euclid() {
        let a = up("v^2 + a");
        let b = up("v - b");
        let (g, s, t) = UPoly::ext_gcd(&a, &b);
        assert_eq!(g, UPoly::one());
        assert_eq!(s.mul(&a).add(&t.mul(&b)), UPoly::one());
    }
}
