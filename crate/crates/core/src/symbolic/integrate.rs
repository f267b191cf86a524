//! Antiderivatives for the elementary fragment the reductions produce:
//! rational functions (Hermite reduction, logarithms, arctangents),
//! exponential terms via a bounded rational ansatz, `tan` kernels by
//! substitution, logarithmic kernels by parts, and derivative-divides
//! patterns. Every closed form is checked by differentiation; anything that
//! fails becomes an unevaluated integral node.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::Compiled;
use super::expr::{Expr, ExprKind, Func, Symbol};
use super::poly::{coprime_basis, Mono, Poly};
use super::ratfunc::{decompose, simplify, solve_linear, to_ratfunc, RatFunc};
use super::subs::{diff, replace, subs1};
use super::upoly::{ratfunc_sqrt, split_ratfunc, UPoly};
use super::zero::ZeroTest;

const MAX_DEPTH: u32 = 6;

#[derive(Clone, Debug)]
pub struct Integrator {
    /// Base point stored in unevaluated integral nodes.
    pub base: BigRational,
    pub zero: ZeroTest,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator { base: BigRational::one(), zero: ZeroTest::default() }
    }
}

/// Antiderivative with default settings; never fails.
pub fn antiderivative(e: &Expr, v: &Symbol) -> Expr {
    Integrator::default().integrate(e, v)
}

fn v_kernels(r: &RatFunc, v: &Symbol) -> Vec<Expr> {
    r.kernels().into_iter().filter(|k| k.has_symbol(v) && k.as_sym() != Some(v)).collect()
}

fn is_exp_kernel(k: &Expr) -> Option<&Expr> {
    match k.kind() {
        ExprKind::Call(Func::Exp, a) => Some(a),
        _ => None,
    }
}

fn free_of(e: &Expr, v: &Symbol) -> bool {
    !e.has_symbol(v)
}

impl Integrator {
    pub fn with_base(base: BigRational) -> Self {
        Integrator { base, ..Default::default() }
    }

    /// Always returns an expression whose `v`-derivative is `e`.
    pub fn integrate(&self, e: &Expr, v: &Symbol) -> Expr {
        let (closed, open) = self.split(e, v, 0);
        let mut terms = closed;
        for o in open {
            terms.push(Expr::integral(o, v, self.base.clone()));
        }
        Expr::add(terms)
    }

    /// Closed form for the whole integrand, or `None`.
    pub fn closed(&self, e: &Expr, v: &Symbol) -> Option<Expr> {
        self.closed_at(e, v, 0)
    }

    fn closed_at(&self, e: &Expr, v: &Symbol, depth: u32) -> Option<Expr> {
        let (closed, open) = self.split(e, v, depth);
        if open.is_empty() {
            Some(Expr::add(closed))
        } else {
            None
        }
    }

    /// Integrates what it can; returns closed parts and leftover integrands.
    fn split(&self, e: &Expr, v: &Symbol, depth: u32) -> (Vec<Expr>, Vec<Expr>) {
        if e.is_zero() {
            return (vec![], vec![]);
        }
        if free_of(e, v) {
            return (vec![e * &Expr::symbol(v)], vec![]);
        }
        if depth > MAX_DEPTH {
            return (vec![], vec![e.clone()]);
        }
        let r = to_ratfunc(e);
        if r.is_zero() {
            return (vec![], vec![]);
        }
        let mut closed = Vec::new();
        let mut open = Vec::new();
        let groups = group_by_exponential(&r, v).unwrap_or_else(|| vec![(vec![], r.clone())]);
        for (key, piece) in groups {
            let factor = Expr::mul(key.iter().map(|(k, n)| Expr::pow(k.clone(), Expr::num(*n))).collect());
            let whole = &piece.to_expr() * &factor;
            let attempt = if key.is_empty() {
                self.no_exponential(&piece, v, depth)
            } else {
                self.exponential(&key, &piece, v)
            };
            let attempt = attempt.filter(|f| self.verify(f, &whole, v)).or_else(|| {
                self.derivative_divides(&whole, v).filter(|f| self.verify(f, &whole, v))
            });
            match attempt {
                Some(f) => closed.push(f),
                None => open.push(simplify(&whole)),
            }
        }
        (closed, open)
    }

    fn verify(&self, f: &Expr, e: &Expr, v: &Symbol) -> bool {
        if f.contains_integral() && !e.contains_integral() {
            return false;
        }
        self.zero.check(&(diff(f, v) - e.clone())).is_zero()
    }

    fn no_exponential(&self, r: &RatFunc, v: &Symbol, depth: u32) -> Option<Expr> {
        let ks = v_kernels(r, v);
        if ks.is_empty() {
            return self.rational(r, v);
        }
        if ks.len() == 1 {
            if let ExprKind::Call(Func::Tan, a) = ks[0].kind() {
                return self.tangent(r, &ks[0], a, v, depth);
            }
        }
        if ks.iter().all(|k| matches!(k.kind(), ExprKind::Call(Func::Ln, _))) && ks.len() == 1 {
            return self.log_by_parts(r, &ks[0], v, depth);
        }
        None
    }

    /// Rational integration in `v` over the field of the other kernels.
    pub fn rational(&self, r: &RatFunc, v: &Symbol) -> Option<Expr> {
        let vk = Expr::symbol(v);
        let (n, d) = split_ratfunc(r, &vk);
        let dl = d.lc().inv()?;
        let n = n.scale(&dl);
        let d = d.monic();
        let (q, rem) = n.divrem(&d);
        let mut out: Vec<Expr> = Vec::new();
        out.push(integrate_poly(&q, &vk));
        if rem.is_zero() {
            return Some(Expr::add(out));
        }
        let sqf = d.squarefree();
        let mut factors: Vec<(UPoly, u32)> = Vec::new();
        for (i, p) in sqf.into_iter().enumerate() {
            if p.deg() > 0 {
                factors.push((p, i as u32 + 1));
            }
        }
        for (numer, p, k) in partial_fractions(&rem, &factors)? {
            out.push(self.hermite(&numer, &p, k, &vk)?);
        }
        Some(Expr::add(out))
    }

    /// `∫ a / p^k` for squarefree monic `p`.
    fn hermite(&self, a: &UPoly, p: &UPoly, k: u32, vk: &Expr) -> Option<Expr> {
        let mut out = Vec::new();
        let mut work: Vec<(UPoly, u32)> = vec![(a.clone(), k)];
        let dp = p.diff();
        while let Some((a, k)) = work.pop() {
            if a.is_zero() {
                continue;
            }
            if k == 0 {
                out.push(integrate_poly(&a, vk));
                continue;
            }
            if a.deg() >= p.deg() {
                let (q, r) = a.divrem(p);
                work.push((q, k - 1));
                work.push((r, k));
                continue;
            }
            if k == 1 {
                out.push(self.log_part(&a, p, vk)?);
                continue;
            }
            // a = s·p + t·p'
            let (t, s) = UPoly::diophantine(&dp, p, &a)?;
            let km1 = RatFunc::constant(BigRational::from_integer((k as i64 - 1).into()));
            let inv = km1.inv()?;
            let boundary = t.to_ratfunc(vk).mul(&inv).neg().div(&p.pow(k - 1).to_ratfunc(vk))?;
            out.push(boundary.to_expr());
            let next = s.add(&t.diff().scale(&inv));
            work.push((next, k - 1));
        }
        Some(Expr::add(out))
    }

    /// `∫ a / p` with `deg a < deg p`, `p` squarefree and monic.
    fn log_part(&self, a: &UPoly, p: &UPoly, vk: &Expr) -> Option<Expr> {
        match p.deg() {
            1 => {
                let c = a.coeff(0);
                Some(&c.to_expr() * &self.ln_abs(&p.to_expr(vk)))
            }
            2 => self.quadratic(a, p, vk),
            _ => {
                let roots = rational_roots(p)?;
                let mut rest = p.clone();
                let mut out = Vec::new();
                let dp = p.diff();
                for root in roots {
                    let lin = UPoly::new(vec![RatFunc::constant(-root.clone()), RatFunc::one()]);
                    rest = rest.div_exact(&lin)?;
                    let k = RatFunc::constant(root.clone());
                    let coef = a.eval(&k).div(&dp.eval(&k))?;
                    out.push(&coef.to_expr() * &self.ln_abs(&lin.to_expr(vk)));
                }
                if rest.deg() > 0 {
                    return None;
                }
                Some(Expr::add(out))
            }
        }
    }

    fn quadratic(&self, a: &UPoly, p: &UPoly, vk: &Expr) -> Option<Expr> {
        let b = p.coeff(1);
        let c = p.coeff(0);
        let a1 = a.coeff(1);
        let a0 = a.coeff(0);
        let half = RatFunc::constant(BigRational::new(1.into(), 2.into()));
        let shift = b.mul(&half);
        // p = (v + b/2)^2 + q
        let q = c.sub(&shift.mul(&shift));
        let kcoef = a0.sub(&a1.mul(&shift));
        let y = vk + &shift.to_expr();
        let mut out = Vec::new();
        if !a1.is_zero() {
            out.push(&a1.mul(&half).to_expr() * &self.ln_abs(&p.to_expr(vk)));
        }
        if kcoef.is_zero() {
            return Some(Expr::add(out));
        }
        let neg_q = q.neg();
        if let Some(s) = ratfunc_sqrt(&neg_q) {
            let s = s.to_expr();
            let ratio = simplify(&(&(&y - &s) / &(&y + &s)));
            out.push(&(&kcoef.to_expr() / &(Expr::num(2) * s)) * &self.ln_abs(&ratio));
            return Some(Expr::add(out));
        }
        let qe = q.to_expr();
        match sample_sign(&qe) {
            Some(true) => {
                let s = match ratfunc_sqrt(&q) {
                    Some(s) => s.to_expr(),
                    None => Expr::sqrt(qe),
                };
                let arg = simplify(&(&y / &s));
                out.push(&(&kcoef.to_expr() / &s) * &Expr::call(Func::Arctan, arg));
            }
            Some(false) => {
                let s = Expr::sqrt(neg_q.to_expr());
                let ratio = &(&y - &s) / &(&y + &s);
                out.push(&(&kcoef.to_expr() / &(Expr::num(2) * s)) * &self.ln_abs(&ratio));
            }
            None => return None,
        }
        Some(Expr::add(out))
    }

    /// `ln(±e)` with the sign that makes the argument positive on the sampling box.
    fn ln_abs(&self, e: &Expr) -> Expr {
        let e = simplify(e);
        match sample_sign(&e) {
            Some(false) => Expr::ln(simplify(&-e)),
            _ => Expr::ln(e),
        }
    }

    fn exponential(&self, key: &[(Expr, i64)], piece: &RatFunc, v: &Symbol) -> Option<Expr> {
        if !v_kernels(piece, v).is_empty() {
            return None;
        }
        let mut g = Expr::zero();
        for (k, n) in key {
            let arg = is_exp_kernel(k)?;
            let ar = to_ratfunc(arg);
            if !v_kernels(&ar, v).is_empty() {
                return None;
            }
            g = g + Expr::num(*n) * arg.clone();
        }
        let f = to_ratfunc(&diff(&g, v));
        let s = exp_ansatz(&f, piece, v)?;
        let factor = Expr::mul(key.iter().map(|(k, n)| Expr::pow(k.clone(), Expr::num(*n))).collect());
        Some(&s.to_expr() * &factor)
    }

    fn tangent(&self, r: &RatFunc, tk: &Expr, a: &Expr, v: &Symbol, depth: u32) -> Option<Expr> {
        let alpha = simplify(&diff(a, v));
        if !free_of(&alpha, v) {
            return None;
        }
        let t = Symbol::new("_t");
        let te = Expr::symbol(&t);
        let pe = replace(&r.to_expr(), tk, &te);
        let rf = to_ratfunc(&pe);
        let vk = Expr::symbol(v);
        if rf.den.iter().any(|(p, _)| p.has_var(&vk)) {
            return None;
        }
        let den = RatFunc { num: Poly::one(), den: rf.den.clone() };
        let coeffs = rf.num.coeffs_in(&vk);
        let jac = RatFunc::from_poly(Poly::one()).div(&to_ratfunc(&(&alpha * &(Expr::one() + Expr::pow(te.clone(), Expr::num(2))))))?;
        let mut total = Expr::zero();
        for (j, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let rj = RatFunc::from_poly(c.clone()).mul(&den);
            total = total + self.tan_power(j as u32, &rj, &jac, &t, v, depth)?;
        }
        let back = subs1(&total, &t, tk);
        let fixed = replace(&back, &Expr::call(Func::Arctan, tk.clone()), a);
        Some(fixed)
    }

    /// `∫ v^j R(tan) dv` by repeated parts.
    fn tan_power(&self, j: u32, r: &RatFunc, jac: &RatFunc, t: &Symbol, v: &Symbol, depth: u32) -> Option<Expr> {
        let f = self.rational(&r.mul(jac), t)?;
        if j == 0 {
            return Some(f);
        }
        let fr = to_ratfunc(&f);
        if v_kernels(&fr, t).iter().any(|_| true) {
            return None;
        }
        let vj = Expr::pow(Expr::symbol(v), Expr::num(j as i64));
        let lower = self.tan_power(j - 1, &fr.scale(&BigRational::from_integer((j as i64).into())), jac, t, v, depth + 1)?;
        Some(&vj * &f - lower)
    }

    fn log_by_parts(&self, r: &RatFunc, lk: &Expr, v: &Symbol, depth: u32) -> Option<Expr> {
        if r.den.iter().any(|(p, _)| p.has_var(lk)) {
            return None;
        }
        let ExprKind::Call(Func::Ln, h) = lk.kind() else { return None };
        let coeffs = r.num.coeffs_in(lk);
        let d = coeffs.len() - 1;
        if d == 0 {
            return None;
        }
        let den = RatFunc { num: Poly::one(), den: r.den.clone() };
        let top = RatFunc::from_poly(coeffs[d].clone()).mul(&den).to_expr();
        let s = self.closed_at(&top, v, depth + 1)?;
        if s.contains_integral() {
            return None;
        }
        let mut rest = Vec::new();
        for (k, c) in coeffs.iter().enumerate().take(d) {
            rest.push(&RatFunc::from_poly(c.clone()).mul(&den).to_expr() * &Expr::pow(lk.clone(), Expr::num(k as i64)));
        }
        let dl = &diff(h, v) / h;
        rest.push(-(Expr::num(d as i64) * s.clone() * Expr::pow(lk.clone(), Expr::num(d as i64 - 1)) * dl));
        let tail = self.closed_at(&simplify(&Expr::add(rest)), v, depth + 1)?;
        Some(&s * &Expr::pow(lk.clone(), Expr::num(d as i64)) + tail)
    }

    /// `u'·g(u)` patterns over the kernels of `e`.
    fn derivative_divides(&self, e: &Expr, v: &Symbol) -> Option<Expr> {
        let r = to_ratfunc(e);
        let mut cands: Vec<Expr> = v_kernels(&r, v);
        for (p, _) in &r.den {
            cands.push(p.to_expr());
        }
        let try_q = |num: Expr, den: Expr| -> Option<Expr> {
            let q = simplify(&(&num / &den));
            if free_of(&q, v) && !q.contains_integral() {
                Some(q)
            } else {
                None
            }
        };
        for k in &cands {
            match k.kind() {
                ExprKind::Call(Func::Exp, h) => {
                    let dh = diff(h, v);
                    if let Some(q) = try_q(e.clone(), &dh * k) {
                        return Some(&q * k);
                    }
                }
                ExprKind::Call(Func::Ln, h) => {
                    let dh = diff(h, v);
                    if let Some(q) = try_q(e * h, dh.clone()) {
                        return Some(&q * k);
                    }
                    if let Some(q) = try_q(e.clone(), &dh * k) {
                        return Some(&q * &(&(h * k) - h));
                    }
                }
                ExprKind::Call(Func::Tan, h) => {
                    let dh = diff(h, v);
                    let sec2 = Expr::one() + Expr::pow(k.clone(), Expr::num(2));
                    if let Some(q) = try_q(e.clone(), &dh * &sec2) {
                        return Some(&q * k);
                    }
                }
                ExprKind::Pow(b, ex) if ex.is_num() => {
                    let db = diff(b, v);
                    let n1 = ex + &Expr::one();
                    if let Some(q) = try_q(e.clone(), &db * k) {
                        return Some(&q * &(&Expr::pow(b.clone(), n1.clone()) / &n1));
                    }
                }
                _ => {
                    let dh = diff(k, v);
                    if dh.is_zero() {
                        continue;
                    }
                    for m in 1..=4i64 {
                        if let Some(q) = try_q(e * &Expr::pow(k.clone(), Expr::num(m)), dh.clone()) {
                            return Some(if m == 1 { &q * &self.ln_abs(k) } else { &q * &(Expr::pow(k.clone(), Expr::num(1 - m)) / Expr::num(1 - m)) });
                        }
                    }
                }
            }
        }
        None
    }
}

fn integrate_poly(q: &UPoly, vk: &Expr) -> Expr {
    let mut out = Vec::new();
    for (i, c) in q.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let n = i as i64 + 1;
        out.push(&(&c.to_expr() * &Expr::pow(vk.clone(), Expr::num(n))) / &Expr::num(n));
    }
    Expr::add(out)
}

/// Decomposes `n / Π f_i^{k_i}` into `(numerator, f_i, k_i)` pieces.
fn partial_fractions(n: &UPoly, factors: &[(UPoly, u32)]) -> Option<Vec<(UPoly, UPoly, u32)>> {
    let mut out = Vec::new();
    let mut num = n.clone();
    let powers: Vec<UPoly> = factors.iter().map(|(p, k)| p.pow(*k)).collect();
    for i in 0..factors.len() {
        let rest = powers[i + 1..].iter().fold(UPoly::one(), |acc, p| acc.mul(p));
        let fi = &powers[i];
        let (s, t) = if rest.deg() == 0 {
            (num.rem(fi), UPoly::zero())
        } else {
            // num = s·rest + t·fi, deg s < deg fi
            UPoly::diophantine(&rest, fi, &num)?
        };
        out.push((s, factors[i].0.clone(), factors[i].1));
        num = t;
    }
    Some(out)
}

fn rational_roots(p: &UPoly) -> Option<Vec<BigRational>> {
    let cs: Vec<BigRational> = p.coeffs().iter().map(|c| c.as_const()).collect::<Option<_>>()?;
    let lcm = cs.iter().fold(num_bigint::BigInt::one(), |acc, c| num_integer::Integer::lcm(&acc, c.denom()));
    let ints: Vec<num_bigint::BigInt> = cs.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let a0 = ints[0].abs().to_i64()?;
    let an = ints.last()?.abs().to_i64()?;
    if a0 == 0 || a0 > 10_000 || an > 10_000 {
        return None;
    }
    let divs = |n: i64| (1..=n).filter(move |d| n % d == 0);
    let mut roots = Vec::new();
    for pn in divs(a0) {
        for qn in divs(an) {
            for sgn in [1i64, -1] {
                let r = BigRational::new((sgn * pn).into(), qn.into());
                if roots.contains(&r) {
                    continue;
                }
                if p.eval(&RatFunc::constant(r.clone())).is_zero() {
                    roots.push(r);
                }
            }
        }
    }
    Some(roots)
}

/// Sign of `e` on the sampling box: `Some(true)` if positive at every
/// sample, `Some(false)` if negative at every sample.
pub fn sample_sign(e: &Expr) -> Option<bool> {
    if let Some(c) = e.as_num() {
        return Some(c.is_positive());
    }
    let comp = Compiled::new(e).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x51_67_4e);
    let mut vals = vec![0.0; comp.vars().len()];
    let (mut pos, mut neg) = (0, 0);
    for _ in 0..64 {
        for x in vals.iter_mut() {
            *x = rng.gen_range(0.5..2.0);
        }
        if let Ok(y) = comp.eval(&vals) {
            if y > 0.0 {
                pos += 1;
            } else if y < 0.0 {
                neg += 1;
            }
        }
        if pos + neg >= 16 {
            break;
        }
    }
    match (pos, neg) {
        (0, 0) => None,
        (_, 0) => Some(true),
        (0, _) => Some(false),
        _ => None,
    }
}

type Key = Vec<(Expr, i64)>;

/// Splits numerator monomials by their exponential part in `v`.
fn group_by_exponential(r: &RatFunc, v: &Symbol) -> Option<Vec<(Key, RatFunc)>> {
    let is_vexp = |k: &Expr| is_exp_kernel(k).is_some() && k.has_symbol(v);
    let mut den_shift: BTreeMap<Expr, i64> = BTreeMap::new();
    let mut den = Vec::new();
    for (p, m) in &r.den {
        let vars = p.vars();
        if vars.iter().any(|k| is_vexp(k)) {
            let (mono, c) = p.lead()?.clone();
            if !p.is_monomial() || !c.is_one() {
                return None;
            }
            for (k, e) in mono.0.iter() {
                if is_vexp(k) {
                    *den_shift.entry(k.clone()).or_insert(0) -= (*e as i64) * (*m as i64);
                } else {
                    den.push((Poly::monomial(Mono::var(k.clone(), *e), BigRational::one()), *m));
                }
            }
        } else {
            den.push((p.clone(), *m));
        }
    }
    let mut groups: BTreeMap<Key, Poly> = BTreeMap::new();
    for (mono, c) in r.num.terms() {
        let mut key: BTreeMap<Expr, i64> = den_shift.clone();
        let mut rest = Mono::one();
        for (k, e) in mono.0.iter() {
            if is_vexp(k) {
                *key.entry(k.clone()).or_insert(0) += *e as i64;
            } else {
                rest = rest.mul(&Mono::var(k.clone(), *e));
            }
        }
        let key: Key = key.into_iter().filter(|(_, n)| *n != 0).collect();
        let entry = groups.entry(key).or_insert_with(Poly::zero);
        *entry = entry.add(&Poly::monomial(rest, c.clone()));
    }
    let dr = RatFunc { num: Poly::one(), den: r.den.clone() };
    let dr = if den_shift.is_empty() { dr } else { RatFunc::from_parts(Poly::one(), den) };
    Some(groups.into_iter().map(|(k, p)| (k, RatFunc::from_poly(p).mul(&dr))).collect())
}

/// Rational `s` with `s' + f·s = g`, by a bounded ansatz.
fn exp_ansatz(f: &RatFunc, g: &RatFunc, v: &Symbol) -> Option<RatFunc> {
    let vk = Expr::symbol(v);
    let vden: Vec<Poly> = f.den.iter().chain(g.den.iter()).filter(|(p, _)| p.has_var(&vk)).map(|(p, _)| p.clone()).collect();
    let basis = coprime_basis(&vden);
    let mult = |r: &RatFunc| -> Vec<u32> {
        let mut e = vec![0u32; basis.len()];
        for (p, m) in &r.den {
            if !p.has_var(&vk) {
                continue;
            }
            let (_, ex) = decompose(p, &basis);
            for i in 0..e.len() {
                e[i] += ex[i] * m;
            }
        }
        e
    };
    let ef = mult(f);
    let eg = mult(g);
    let mut ds = Poly::one();
    for i in 0..basis.len() {
        let n = if ef[i] >= 2 { eg[i].saturating_sub(ef[i]) } else { eg[i].saturating_sub(1) };
        ds = ds.mul(&basis[i].pow(n));
    }
    let deg = |r: &RatFunc| r.num.degree(&vk) as i64 - r.den_poly().degree(&vk) as i64;
    let (df, dg) = (deg(f), deg(g));
    let n = if df >= 0 { dg - df } else { (dg + 1).max(0) + 1 };
    if n < 0 {
        return None;
    }
    let na = (n + ds.degree(&vk) as i64) as usize;
    let zs: Vec<Expr> = (0..=na).map(|i| Expr::sym(&format!("_z{}", i))).collect();
    let mut a = Poly::zero();
    for (i, z) in zs.iter().enumerate() {
        a = a.add(&Poly::var(z.clone()).mul_mono(&Mono::var(vk.clone(), i as u32), &BigRational::one()));
    }
    let s = RatFunc::from_poly(a).div(&RatFunc::from_poly(ds.clone()))?;
    let ds_expr = to_ratfunc(&diff(&s.to_expr(), v));
    let h = ds_expr.add(&f.mul(&s)).sub(g);
    // rows indexed by power of v; columns by unknown
    let mut rows: BTreeMap<u32, (Vec<Poly>, Poly)> = BTreeMap::new();
    for (mono, c) in h.num.terms() {
        let pv = mono.degree(&vk);
        let mut which = None;
        let mut rest = Mono::one();
        for (k, e) in mono.0.iter() {
            if let Some(i) = zs.iter().position(|z| z == k) {
                if *e != 1 || which.is_some() {
                    return None;
                }
                which = Some(i);
            } else if *k != vk {
                rest = rest.mul(&Mono::var(k.clone(), *e));
            }
        }
        let entry = rows.entry(pv).or_insert_with(|| (vec![Poly::zero(); zs.len()], Poly::zero()));
        let term = Poly::monomial(rest, c.clone());
        match which {
            Some(i) => entry.0[i] = entry.0[i].add(&term),
            None => entry.1 = entry.1.sub(&term),
        }
    }
    let (mat, rhs): (Vec<Vec<RatFunc>>, Vec<RatFunc>) = rows
        .into_values()
        .map(|(r, b)| (r.into_iter().map(RatFunc::from_poly).collect(), RatFunc::from_poly(b)))
        .unzip();
    let sol = solve_linear(mat, rhs, zs.len())?;
    let mut num = RatFunc::zero();
    for (i, c) in sol.iter().enumerate() {
        num = num.add(&c.mul(&to_ratfunc(&Expr::pow(vk.clone(), Expr::num(i as i64)))));
    }
    num.div(&RatFunc::from_poly(ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse::parse;

    fn check(src: &str, var: &str) -> Expr {
        let e = parse(src).unwrap();
        let v = Symbol::new(var);
        let f = Integrator::default().closed(&e, &v).unwrap_or_else(|| panic!("no closed form for {}", src));
        assert!(ZeroTest::default().check(&(diff(&f, &v) - e)).is_zero(), "{}", f);
        f
    }

    #[test]
    fn rational_fragment() {
        check("1/u2^2", "u2");
        check("(3*x^2 + 1)/(x^3 + x)", "x");
        check("1/(x^2 + a^2)", "x");
        check("x/((x + 1)^3*(x - 2))", "x");
        check("1/(x^2 - 3)", "x");
        check("a/(x^2*(x + b))", "x");
    }

    #[test]
    fn exponential_fragment() {
        check("exp(1/u1)/u1^3", "u1");
        check("x*exp(x)", "x");
        check("exp(c + 1/u)/u^2", "u");
    }

    #[test]
    fn tangent_fragment() {
        check("2*a*x*(1 + tan(c - x)^2)", "x");
        check("tan(x - c)", "x");
    }

    #[test]
    fn log_fragment() {
        check("ln(x)", "x");
        check("x*ln(x + 1)", "x");
    }

    #[test]
    fn non_elementary_stays_unevaluated() {
        let e = parse("-x*exp(-c1/x - x^4/20)").unwrap();
        let v = Symbol::new("x");
        let f = antiderivative(&e, &v);
        assert!(f.contains_integral());
        assert!(ZeroTest::default().check(&(diff(&f, &v) - e)).is_zero());
    }

    #[test]
    fn linear_pieces_split_off() {
        let e = parse("2*x + exp(exp(x))").unwrap();
        let f = antiderivative(&e, &Symbol::new("x"));
        let open: Vec<_> = f.terms().into_iter().filter(|t| t.contains_integral()).collect();
        assert_eq!(open.len(), 1);
    }
}
