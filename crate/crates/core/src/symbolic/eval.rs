//! Floating-point evaluation: a compiled evaluator with common-subexpression
//! sharing, plus adaptive Gauss–Kronrod quadrature for integral nodes.

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, ToPrimitive};

use super::expr::{Expr, ExprKind, Func, Symbol};
use crate::error::Error;

pub type Point = BTreeMap<Symbol, f64>;

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Add(Vec<usize>),
    Mul(Vec<usize>),
    PowI(usize, i32),
    /// Rational exponent p/q; odd q admits negative bases.
    PowQ(usize, i64, i64),
    Pow(usize, usize),
    Call(Func, usize),
    Integral { body: Box<Compiled>, lower: f64, upper: usize },
}

/// An expression flattened into straight-line code over a fixed variable order.
#[derive(Clone, Debug)]
pub struct Compiled {
    vars: Vec<Symbol>,
    ops: Vec<Op>,
    src: Vec<Expr>,
    root: usize,
}

struct Builder<'a> {
    vars: &'a [Symbol],
    ops: Vec<Op>,
    src: Vec<Expr>,
    seen: HashMap<Expr, usize>,
}

impl Builder<'_> {
    fn push(&mut self, e: &Expr, op: Op) -> usize {
        self.ops.push(op);
        self.src.push(e.clone());
        let id = self.ops.len() - 1;
        self.seen.insert(e.clone(), id);
        id
    }

    fn build(&mut self, e: &Expr) -> Result<usize, Error> {
        if let Some(&id) = self.seen.get(e) {
            return Ok(id);
        }
        let op = match e.kind() {
            ExprKind::Num(r) => Op::Const(r.to_f64().unwrap_or(f64::NAN)),
            ExprKind::Sym(s) => match self.vars.iter().position(|v| v == s) {
                Some(i) => Op::Var(i),
                None => return Err(Error::Numeric(format!("unbound symbol {}", s))),
            },
            ExprKind::Add(ts) => Op::Add(ts.iter().map(|t| self.build(t)).collect::<Result<_, _>>()?),
            ExprKind::Mul(ts) => Op::Mul(ts.iter().map(|t| self.build(t)).collect::<Result<_, _>>()?),
            ExprKind::Pow(b, ex) => {
                let bi = self.build(b)?;
                match ex.as_num() {
                    Some(r) if r.denom() == &1.into() && r.numer().abs() < 1000.into() => Op::PowI(bi, r.numer().to_i32().unwrap()),
                    Some(r) => match (r.numer().to_i64(), r.denom().to_i64()) {
                        (Some(p), Some(q)) => Op::PowQ(bi, p, q),
                        _ => Op::Pow(bi, self.build(ex)?),
                    },
                    None => Op::Pow(bi, self.build(ex)?),
                }
            }
            ExprKind::Call(f, a) => Op::Call(*f, self.build(a)?),
            ExprKind::Integral { integrand, var, lower, upper } => {
                // the bound variable comes first so it shadows an outer symbol of the same name
                let mut inner: Vec<Symbol> = vec![var.clone()];
                inner.extend(self.vars.iter().cloned());
                let body = Compiled::with_vars(integrand, &inner)?;
                Op::Integral { body: Box::new(body), lower: lower.to_f64().unwrap(), upper: self.build(upper)? }
            }
        };
        Ok(self.push(e, op))
    }
}

fn domain(msg: &str, at: &Expr) -> Error {
    Error::Numeric(format!("{} in {}", msg, at))
}

impl Compiled {
    /// Compiles over the sorted free symbols of `e`.
    pub fn new(e: &Expr) -> Result<Compiled, Error> {
        let vars: Vec<Symbol> = e.free_symbols().iter().cloned().collect();
        Compiled::with_vars(e, &vars)
    }

    pub fn with_vars(e: &Expr, vars: &[Symbol]) -> Result<Compiled, Error> {
        let mut b = Builder { vars, ops: Vec::new(), src: Vec::new(), seen: HashMap::new() };
        let root = b.build(e)?;
        Ok(Compiled { vars: vars.to_vec(), ops: b.ops, src: b.src, root })
    }

    pub fn vars(&self) -> &[Symbol] {
        &self.vars
    }

    pub fn eval_point(&self, p: &Point) -> Result<f64, Error> {
        let mut vals = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            match p.get(v) {
                Some(x) => vals.push(*x),
                None => return Err(Error::Numeric(format!("unbound symbol {}", v))),
            }
        }
        self.eval(&vals)
    }

    pub fn eval(&self, vals: &[f64]) -> Result<f64, Error> {
        let mut reg = vec![0.0f64; self.ops.len()];
        for (i, op) in self.ops.iter().enumerate() {
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(k) => vals[*k],
                Op::Add(xs) => xs.iter().map(|j| reg[*j]).sum(),
                Op::Mul(xs) => xs.iter().map(|j| reg[*j]).product(),
                Op::PowI(b, n) => {
                    let x = reg[*b];
                    if x == 0.0 && *n < 0 {
                        return Err(domain("division by zero", &self.src[i]));
                    }
                    x.powi(*n)
                }
                Op::PowQ(b, p, q) => {
                    let x = reg[*b];
                    if x < 0.0 {
                        if q % 2 == 0 {
                            return Err(domain("even root of negative value", &self.src[i]));
                        }
                        let m = (-x).powf(*p as f64 / *q as f64);
                        if p % 2 == 0 {
                            m
                        } else {
                            -m
                        }
                    } else {
                        if x == 0.0 && *p < 0 {
                            return Err(domain("division by zero", &self.src[i]));
                        }
                        x.powf(*p as f64 / *q as f64)
                    }
                }
                Op::Pow(b, e) => {
                    let x = reg[*b];
                    if x <= 0.0 {
                        return Err(domain("non-positive base with symbolic exponent", &self.src[i]));
                    }
                    x.powf(reg[*e])
                }
                Op::Call(f, a) => {
                    let x = reg[*a];
                    match f {
                        Func::Exp => x.exp(),
                        Func::Ln => {
                            if x <= 0.0 {
                                return Err(domain("ln of non-positive value", &self.src[i]));
                            }
                            x.ln()
                        }
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                        Func::Tan => {
                            if x.cos().abs() < 1e-14 {
                                return Err(domain("tan pole", &self.src[i]));
                            }
                            x.tan()
                        }
                        Func::Arctan => x.atan(),
                    }
                }
                Op::Integral { body, lower, upper } => {
                    let b = reg[*upper];
                    let mut env: Vec<f64> = Vec::with_capacity(vals.len() + 1);
                    env.push(*lower);
                    env.extend_from_slice(vals);
                    let slot = 0;
                    let f = |t: f64, env: &mut Vec<f64>| -> Result<f64, Error> {
                        env[slot] = t;
                        body.eval(env)
                    };
                    quad(f, &mut env, *lower, b, 1e-12)?
                }
            };
            if !v.is_finite() {
                return Err(domain("non-finite value", &self.src[i]));
            }
            reg[i] = v;
        }
        Ok(reg[self.root])
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F>(f: &F, env: &mut Vec<f64>, a: f64, b: f64) -> Result<(f64, f64), Error>
where
    F: Fn(f64, &mut Vec<f64>) -> Result<f64, Error>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c, env)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx, env)? + f(c + dx, env)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
pub fn quad<F>(f: F, env: &mut Vec<f64>, a: f64, b: f64, tol: f64) -> Result<f64, Error>
where
    F: Fn(f64, &mut Vec<f64>) -> Result<f64, Error>,
{
    if a == b {
        return Ok(0.0);
    }
    let (whole, err) = gk15(&f, env, a, b)?;
    let mut stack = vec![(a, b, whole, err, 0u32)];
    let scale = whole.abs().max(1.0);
    let mut total = 0.0;
    let mut budget = 20_000;
    while let Some((lo, hi, val, err, depth)) = stack.pop() {
        let width = ((hi - lo) / (b - a)).abs();
        if err <= tol * scale * width.max(1e-3) || depth >= 48 {
            total += val;
            continue;
        }
        budget -= 1;
        if budget == 0 {
            return Err(Error::Numeric("quadrature did not converge".into()));
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, env, lo, mid)?;
        let (v2, e2) = gk15(&f, env, mid, hi)?;
        stack.push((lo, mid, v1, e1, depth + 1));
        stack.push((mid, hi, v2, e2, depth + 1));
    }
    Ok(total)
}

/// One-shot evaluation at a point.
pub fn eval_numeric(e: &Expr, p: &Point) -> Result<f64, Error> {
    Compiled::new(e)?.eval_point(p)
}

pub fn point(pairs: &[(&str, f64)]) -> Point {
    pairs.iter().map(|(k, v)| (Symbol::new(k), *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse::parse;

    #[test]
    fn evaluates_polynomial() {
        let e = parse("u1^2").unwrap();
        assert_eq!(eval_numeric(&e, &point(&[("u1", 3.0)])).unwrap(), 9.0);
    }

    #[test]
    fn quadrature_node() {
        let e = parse("int(x, x, 1)").unwrap();
        let v = eval_numeric(&e, &point(&[("x", 2.0)])).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
        let e = parse("int(exp(-c*x^2), x, 0)").unwrap();
        let v = eval_numeric(&e, &point(&[("x", 3.0), ("c", 1.0)])).unwrap();
        assert!((v - 0.886_207_348_259_521_6).abs() < 1e-10);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = parse("ln(x - 2)").unwrap();
        let err = eval_numeric(&e, &point(&[("x", 1.0)])).unwrap_err();
        assert!(format!("{}", err).contains("ln"));
    }

    #[test]
    fn odd_roots_of_negatives() {
        let e = parse("x^(1/3)").unwrap();
        let v = eval_numeric(&e, &point(&[("x", -8.0)])).unwrap();
        assert!((v + 2.0).abs() < 1e-12);
    }
}
