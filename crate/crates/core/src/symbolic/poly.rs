//! Sparse multivariate polynomials over Q whose variables are kernel expressions.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use super::budget::charge;
use super::expr::Expr;

/// Monomial as (variable, exponent) pairs sorted by variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Mono(pub SmallVec<[(Expr, u32); 4]>);

impl Mono {
    pub fn one() -> Mono {
        Mono(SmallVec::new())
    }

    pub fn var(v: Expr, e: u32) -> Mono {
        if e == 0 {
            return Mono::one();
        }
        let mut s = SmallVec::new();
        s.push((v, e));
        Mono(s)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self, v: &Expr) -> u32 {
        self.0.iter().find(|(x, _)| x == v).map(|p| p.1).unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|p| p.1).sum()
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        let (a, b) = (&self.0, &o.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i].clone());
                i += 1;
            } else if i >= a.len() || b[j].0 < a[i].0 {
                out.push(b[j].clone());
                j += 1;
            } else {
                out.push((a[i].0.clone(), a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
        Mono(out)
    }

    /// `self / o` when `o` divides `self`.
    pub fn div(&self, o: &Mono) -> Option<Mono> {
        let mut out = SmallVec::with_capacity(self.0.len());
        let mut j = 0;
        for (v, e) in self.0.iter() {
            if j < o.0.len() && o.0[j].0 == *v {
                let d = o.0[j].1;
                if d > *e {
                    return None;
                }
                if *e > d {
                    out.push((v.clone(), e - d));
                }
                j += 1;
            } else {
                if j < o.0.len() && o.0[j].0 < *v {
                    return None;
                }
                out.push((v.clone(), *e));
            }
        }
        if j < o.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    pub fn gcd(&self, o: &Mono) -> Mono {
        let mut out = SmallVec::new();
        for (v, e) in self.0.iter() {
            let d = o.degree(v);
            if d > 0 {
                out.push((v.clone(), (*e).min(d)));
            }
        }
        Mono(out)
    }

    pub fn without(&self, v: &Expr) -> Mono {
        Mono(self.0.iter().filter(|(x, _)| x != v).cloned().collect())
    }
}

/// Lexicographic order; larger variables have priority.
impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (a.len(), b.len());
        loop {
            match (i > 0, j > 0) {
                (false, false) => return Ordering::Equal,
                (true, false) => return Ordering::Greater,
                (false, true) => return Ordering::Less,
                _ => {
                    let (va, ea) = &a[i - 1];
                    let (vb, eb) = &b[j - 1];
                    match va.cmp(vb) {
                        Ordering::Equal => match ea.cmp(eb) {
                            Ordering::Equal => {
                                i -= 1;
                                j -= 1;
                            }
                            o => return o,
                        },
                        o => return o,
                    }
                }
            }
        }
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Terms are kept sorted with the leading monomial first and no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: Vec<(Mono, BigRational)>,
}

fn from_map(m: BTreeMap<Mono, BigRational>) -> Poly {
    let mut terms: Vec<(Mono, BigRational)> = m.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    terms.reverse();
    Poly { terms }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(Mono::one(), c)] }
        }
    }

    pub fn var(v: Expr) -> Poly {
        Poly { terms: vec![(Mono::var(v, 1), BigRational::one())] }
    }

    pub fn monomial(m: Mono, c: BigRational) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    pub fn terms(&self) -> &[(Mono, BigRational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_const(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn as_const(&self) -> Option<BigRational> {
        if self.is_zero() {
            Some(BigRational::zero())
        } else if self.is_const() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn lead(&self) -> Option<&(Mono, BigRational)> {
        self.terms.first()
    }

    pub fn vars(&self) -> BTreeSet<Expr> {
        let mut s = BTreeSet::new();
        for (m, _) in &self.terms {
            for (v, _) in m.0.iter() {
                s.insert(v.clone());
            }
        }
        s
    }

    pub fn has_var(&self, v: &Expr) -> bool {
        self.terms.iter().any(|(m, _)| m.degree(v) > 0)
    }

    pub fn degree(&self, v: &Expr) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.total_degree()).max().unwrap_or(0)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        charge(self.terms.len() + o.terms.len());
        let mut m: BTreeMap<Mono, BigRational> = BTreeMap::new();
        for (k, c) in self.terms.iter().chain(o.terms.iter()) {
            *m.entry(k.clone()).or_insert_with(BigRational::zero) += c;
        }
        from_map(m)
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn mul_mono(&self, mono: &Mono, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, k)| (m.mul(mono), k * c)).collect() }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_const() {
            return o.scale(&c);
        }
        if let Some(c) = o.as_const() {
            return self.scale(&c);
        }
        charge(self.terms.len() * o.terms.len());
        let mut m: BTreeMap<Mono, BigRational> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &o.terms {
                *m.entry(ka.mul(kb)).or_insert_with(BigRational::zero) += ca * cb;
            }
        }
        from_map(m)
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Exact quotient, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.as_const() {
            return Some(self.scale(&c.recip()));
        }
        let (dm, dc) = d.lead().unwrap().clone();
        if d.is_monomial() {
            let inv = dc.recip();
            let mut terms = Vec::with_capacity(self.terms.len());
            for (m, c) in &self.terms {
                terms.push((m.div(&dm)?, c * &inv));
            }
            return Some(Poly { terms });
        }
        for v in d.vars() {
            if self.degree(&v) < d.degree(&v) {
                return None;
            }
        }
        let mut q: BTreeMap<Mono, BigRational> = BTreeMap::new();
        let mut r = self.clone();
        while let Some((rm, rc)) = r.lead().cloned() {
            let qm = rm.div(&dm)?;
            let qc = &rc / &dc;
            r = r.sub(&d.mul_mono(&qm, &qc));
            q.insert(qm, qc);
        }
        Some(from_map(q))
    }

    /// Coefficients in `v`, indexed by power.
    pub fn coeffs_in(&self, v: &Expr) -> Vec<Poly> {
        let deg = self.degree(v) as usize;
        let mut maps: Vec<BTreeMap<Mono, BigRational>> = vec![BTreeMap::new(); deg + 1];
        for (m, c) in &self.terms {
            let d = m.degree(v) as usize;
            maps[d].insert(m.without(v), c.clone());
        }
        maps.into_iter().map(from_map).collect()
    }

    pub fn from_coeffs(v: &Expr, cs: &[Poly]) -> Poly {
        let mut acc = Poly::zero();
        for (i, c) in cs.iter().enumerate() {
            if !c.is_zero() {
                acc = acc.add(&c.mul_mono(&Mono::var(v.clone(), i as u32), &BigRational::one()));
            }
        }
        acc
    }

    pub fn lc_in(&self, v: &Expr) -> Poly {
        let d = self.degree(v);
        let mut m: BTreeMap<Mono, BigRational> = BTreeMap::new();
        for (k, c) in &self.terms {
            if k.degree(v) == d {
                m.insert(k.without(v), c.clone());
            }
        }
        from_map(m)
    }

    pub fn diff(&self, v: &Expr) -> Poly {
        let mut m: BTreeMap<Mono, BigRational> = BTreeMap::new();
        for (k, c) in &self.terms {
            let d = k.degree(v);
            if d == 0 {
                continue;
            }
            let mut nk = k.without(v);
            if d > 1 {
                nk = nk.mul(&Mono::var(v.clone(), d - 1));
            }
            *m.entry(nk).or_insert_with(BigRational::zero) += c * BigRational::from_integer(BigInt::from(d));
        }
        from_map(m)
    }

    /// Rational content with the sign of the leading coefficient.
    pub fn content(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::one();
        }
        let mut g = BigInt::zero();
        let mut l = BigInt::one();
        for (_, c) in &self.terms {
            g = g.gcd(c.numer());
            l = l.lcm(c.denom());
        }
        let mut c = BigRational::new(g, l);
        if self.terms[0].1.is_negative() {
            c = -c;
        }
        c
    }

    /// `(c, p)` with `self = c·p`, `p` having coprime integer coefficients and positive leading coefficient.
    pub fn normalize(&self) -> (BigRational, Poly) {
        if self.is_zero() {
            return (BigRational::zero(), Poly::zero());
        }
        let c = self.content();
        (c.clone(), self.scale(&c.recip()))
    }

    pub fn primitive(&self) -> Poly {
        self.normalize().1
    }

    pub fn to_expr(&self) -> Expr {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut fs = Vec::with_capacity(m.0.len() + 1);
            fs.push(Expr::rational(c.clone()));
            for (v, e) in m.0.iter() {
                fs.push(Expr::pow(v.clone(), Expr::num(*e as i64)));
            }
            terms.push(Expr::mul(fs));
        }
        Expr::add(terms)
    }
}

fn content_in(p: &Poly, v: &Expr) -> Poly {
    let mut g = Poly::zero();
    for c in p.coeffs_in(v) {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c);
        if g.is_one() {
            break;
        }
    }
    g
}

fn prem(a: &Poly, b: &Poly, v: &Expr) -> Poly {
    let db = b.degree(v);
    let lb = b.lc_in(v);
    let mut r = a.clone();
    while !r.is_zero() && r.degree(v) >= db {
        let dr = r.degree(v);
        let lr = r.lc_in(v);
        let shifted = b.mul(&lr).mul_mono(&Mono::var(v.clone(), dr - db), &BigRational::one());
        r = r.mul(&lb).sub(&shifted);
    }
    r
}

fn pp_in(p: &Poly, v: &Expr) -> Poly {
    let c = content_in(p, v);
    p.div_exact(&c).expect("content divides").primitive()
}

/// Univariate image in `v` with the other variables set from `vals`.
fn image(p: &Poly, v: &Expr, vals: &BTreeMap<Expr, BigRational>) -> Vec<BigRational> {
    charge(p.terms.len());
    let mut out = vec![BigRational::zero(); p.degree(v) as usize + 1];
    for (m, c) in &p.terms {
        let mut t = c.clone();
        for (x, e) in m.0.iter() {
            if x != v {
                t *= num_traits::pow(vals[x].clone(), *e as usize);
            }
        }
        out[m.degree(v) as usize] += t;
    }
    while out.len() > 1 && out.last().is_some_and(|c| c.is_zero()) {
        out.pop();
    }
    out
}

fn udegree_of_gcd(mut a: Vec<BigRational>, mut b: Vec<BigRational>) -> usize {
    let trim = |p: &mut Vec<BigRational>| {
        while p.last().is_some_and(|c| c.is_zero()) {
            p.pop();
        }
    };
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        if a.len() < b.len() {
            std::mem::swap(&mut a, &mut b);
            continue;
        }
        let lb = b.last().unwrap().clone();
        while a.len() >= b.len() && !a.is_empty() {
            let k = a.last().unwrap() / &lb;
            let off = a.len() - b.len();
            for (i, c) in b.iter().enumerate() {
                a[off + i] -= &k * c;
            }
            a.pop();
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}

/// Proves `gcd(a, b) = 1` through univariate images: if the gcd had positive
/// degree in a shared `v`, so would the image gcd at any point where the
/// leading coefficient of `a` in `v` survives. `false` means "not proven".
fn certainly_coprime(a: &Poly, b: &Poly) -> bool {
    let va = a.vars();
    let vb = b.vars();
    let all: Vec<Expr> = va.union(&vb).cloned().collect();
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        BigRational::from_integer(BigInt::from((state % 97) as i64 - 48))
    };
    'vars: for v in va.intersection(&vb) {
        let da = a.degree(v) as usize;
        for _ in 0..4 {
            let vals: BTreeMap<Expr, BigRational> = all.iter().filter(|x| *x != v).map(|x| (x.clone(), next())).collect();
            let ia = image(a, v, &vals);
            if ia.len() != da + 1 || ia[da].is_zero() {
                continue;
            }
            if udegree_of_gcd(ia, image(b, v, &vals)) > 0 {
                return false;
            }
            continue 'vars;
        }
        return false;
    }
    true
}

/// Normalized greatest common divisor.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive();
    }
    if b.is_zero() {
        return a.primitive();
    }
    if a.is_const() || b.is_const() {
        return Poly::one();
    }
    if a.is_monomial() || b.is_monomial() {
        let (m, other) = if a.is_monomial() { (a, b) } else { (b, a) };
        let mut g = m.terms[0].0.clone();
        for (k, _) in &other.terms {
            g = g.gcd(k);
            if g.is_one() {
                break;
            }
        }
        return Poly::monomial(g, BigRational::one());
    }
    if a.div_exact(b).is_some() {
        return b.primitive();
    }
    if b.div_exact(a).is_some() {
        return a.primitive();
    }
    let va = a.vars();
    let vb = b.vars();
    if va.is_disjoint(&vb) || certainly_coprime(a, b) {
        return Poly::one();
    }
    if let Some(x) = va.iter().find(|x| !vb.contains(*x)) {
        return gcd(&content_in(a, x), b);
    }
    if let Some(x) = vb.iter().find(|x| !va.contains(*x)) {
        return gcd(a, &content_in(b, x));
    }
    let v = va.iter().next_back().unwrap().clone();
    let ca = content_in(a, &v);
    let cb = content_in(b, &v);
    let mut p = a.div_exact(&ca).unwrap().primitive();
    let mut q = b.div_exact(&cb).unwrap().primitive();
    if p.degree(&v) < q.degree(&v) {
        std::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = prem(&p, &q, &v);
        if r.is_zero() {
            p = q;
            break;
        }
        if !r.has_var(&v) {
            p = Poly::one();
            break;
        }
        p = q;
        q = pp_in(&r, &v);
    }
    let g = if p.has_var(&v) { pp_in(&p, &v) } else { Poly::one() };
    let c = gcd(&ca, &cb);
    c.mul(&g).primitive()
}

/// Factors a list of polynomials over a pairwise coprime basis.
pub fn coprime_basis(polys: &[Poly]) -> Vec<Poly> {
    let mut basis: Vec<Poly> = Vec::new();
    let mut work: Vec<Poly> = polys.iter().filter(|p| !p.is_const()).map(|p| p.primitive()).collect();
    work.reverse();
    while let Some(p) = work.pop() {
        if p.is_const() {
            continue;
        }
        let mut split = None;
        for (i, q) in basis.iter().enumerate() {
            if *q == p {
                split = Some((i, None));
                break;
            }
            let g = gcd(&p, q);
            if !g.is_const() {
                split = Some((i, Some(g)));
                break;
            }
        }
        match split {
            None => basis.push(p),
            Some((_, None)) => {}
            Some((i, Some(g))) => {
                let q = basis.remove(i);
                let qg = q.div_exact(&g).unwrap().primitive();
                let pg = p.div_exact(&g).unwrap().primitive();
                work.push(pg);
                work.push(qg);
                work.push(g);
            }
        }
    }
    basis.sort_by(|a, b| a.lead().map(|t| &t.0).cmp(&b.lead().map(|t| &t.0)).then_with(|| a.terms.len().cmp(&b.terms.len())));
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Poly {
        Poly::var(Expr::sym(n))
    }

    fn c(n: i64) -> Poly {
        Poly::constant(BigRational::from_integer(n.into()))
    }

    #[test]
    fn exact_division_roundtrip() {
        let a = v("x").add(&v("y")).add(&c(1));
        let b = v("x").sub(&v("y").mul(&v("x")));
        let p = a.mul(&b);
        assert_eq!(p.div_exact(&a).unwrap(), b);
        assert!(p.add(&c(1)).div_exact(&a).is_none());
    }

    #[test]
    fn gcd_recovers_common_factor() {
        let g = v("x").mul(&v("y")).add(&v("z")).add(&c(2));
        let a = g.mul(&v("x").add(&c(3)));
        let b = g.mul(&v("y").sub(&v("z")));
        assert_eq!(gcd(&a, &b), g.primitive());
        let a2 = g.pow(2).mul(&v("x").add(&v("y")));
        let b2 = g.mul(&v("x").sub(&v("y")).pow(2));
        assert_eq!(gcd(&a2, &b2), g.primitive());
    }

    #[test]
    fn gcd_of_coprime_is_one() {
        let a = v("x").pow(2).add(&c(1));
        let b = v("x").add(&c(1));
        assert!(gcd(&a, &b).is_one());
    }

    #[test]
    fn basis_is_coprime() {
        let x = v("x");
        let a = x.mul(&x.add(&c(1)));
        let b = x.pow(2);
        let basis = coprime_basis(&[a, b]);
        assert_eq!(basis.len(), 2);
        for i in 0..basis.len() {
            for j in i + 1..basis.len() {
                assert!(gcd(&basis[i], &basis[j]).is_one());
            }
        }
    }
}
