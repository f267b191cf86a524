use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Interned-by-value symbol name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Arctan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Arctan => "arctan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "arctan" | "atan" => Func::Arctan,
            _ => return None,
        })
    }

    fn is_odd(self) -> bool {
        matches!(self, Func::Sin | Func::Tan | Func::Arctan)
    }
}

/// Node payload of an expression tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Num(BigRational),
    Sym(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Call(Func, Expr),
    /// `∫_{lower}^{upper} integrand d(var)`; `var` is bound inside `integrand`.
    Integral {
        integrand: Expr,
        var: Symbol,
        lower: BigRational,
        upper: Expr,
    },
}

struct Node {
    kind: ExprKind,
    hash: u64,
    free: OnceLock<BTreeSet<Symbol>>,
}

/// Immutable, structurally shared expression. Constructors keep the tree in
/// a canonical form: sums and products are flattened and sorted, numeric
/// parts are folded, and like terms are collected.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

fn rank(k: &ExprKind) -> u8 {
    match k {
        ExprKind::Num(_) => 0,
        ExprKind::Sym(_) => 1,
        ExprKind::Pow(..) => 2,
        ExprKind::Mul(_) => 3,
        ExprKind::Add(_) => 4,
        ExprKind::Call(..) => 5,
        ExprKind::Integral { .. } => 6,
    }
}

fn cmp_slices(a: &[Expr], b: &[Expr]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let c = x.cmp(y);
        if c != Ordering::Equal {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let (a, b) = (&self.0.kind, &other.0.kind);
        let r = rank(a).cmp(&rank(b));
        if r != Ordering::Equal {
            return r;
        }
        match (a, b) {
            (ExprKind::Num(x), ExprKind::Num(y)) => x.cmp(y),
            (ExprKind::Sym(x), ExprKind::Sym(y)) => x.cmp(y),
            (ExprKind::Add(x), ExprKind::Add(y)) | (ExprKind::Mul(x), ExprKind::Mul(y)) => cmp_slices(x, y),
            (ExprKind::Pow(b1, e1), ExprKind::Pow(b2, e2)) => b1.cmp(b2).then_with(|| e1.cmp(e2)),
            (ExprKind::Call(f1, a1), ExprKind::Call(f2, a2)) => f1.cmp(f2).then_with(|| a1.cmp(a2)),
            (
                ExprKind::Integral { integrand: i1, var: v1, lower: l1, upper: u1 },
                ExprKind::Integral { integrand: i2, var: v2, lower: l2, upper: u2 },
            ) => v1
                .cmp(v2)
                .then_with(|| i1.cmp(i2))
                .then_with(|| l1.cmp(l2))
                .then_with(|| u1.cmp(u2)),
            _ => unreachable!(),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn is_integer(r: &BigRational) -> bool {
    r.denom().is_one()
}

/// Exact `r^(1/n)` for rationals when it exists.
fn rational_root(r: &BigRational, n: u32) -> Option<BigRational> {
    if r.is_negative() {
        if n % 2 == 0 {
            return None;
        }
        return rational_root(&-r, n).map(|x| -x);
    }
    let num = r.numer().nth_root(n);
    let den = r.denom().nth_root(n);
    if num.pow(n) == *r.numer() && den.pow(n) == *r.denom() {
        Some(BigRational::new(num, den))
    } else {
        None
    }
}

fn rational_pow(b: &BigRational, e: &BigInt) -> Option<BigRational> {
    if b.is_zero() {
        return if e.is_positive() { Some(BigRational::zero()) } else { None };
    }
    let n = e.abs().to_u32()?;
    if n > 4096 {
        return None;
    }
    let p = num_traits::pow(b.clone(), n as usize);
    Some(if e.is_negative() { p.recip() } else { p })
}

impl Expr {
    fn make(kind: ExprKind) -> Expr {
        let mut h = DefaultHasher::new();
        kind.hash(&mut h);
        Expr(Arc::new(Node { kind, hash: h.finish(), free: OnceLock::new() }))
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    pub fn num(n: i64) -> Expr {
        Expr::make(ExprKind::Num(BigRational::from_integer(BigInt::from(n))))
    }

    pub fn rational(r: BigRational) -> Expr {
        Expr::make(ExprKind::Num(r))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::rational(rat(n, d))
    }

    pub fn zero() -> Expr {
        Expr::num(0)
    }

    pub fn one() -> Expr {
        Expr::num(1)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::make(ExprKind::Sym(Symbol::new(name)))
    }

    pub fn symbol(s: &Symbol) -> Expr {
        Expr::make(ExprKind::Sym(s.clone()))
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self.kind() {
            ExprKind::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&Symbol> {
        match self.kind() {
            ExprKind::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind(), ExprKind::Num(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.kind(), ExprKind::Num(r) if r.is_one())
    }

    pub fn is_num(&self) -> bool {
        matches!(self.kind(), ExprKind::Num(_))
    }

    /// Splits into numeric coefficient and remaining factor.
    pub fn coeff_rest(&self) -> (BigRational, Expr) {
        match self.kind() {
            ExprKind::Num(r) => (r.clone(), Expr::one()),
            ExprKind::Mul(fs) => {
                if let ExprKind::Num(r) = fs[0].kind() {
                    let rest = if fs.len() == 2 { fs[1].clone() } else { Expr::make(ExprKind::Mul(fs[1..].to_vec())) };
                    (r.clone(), rest)
                } else {
                    (BigRational::one(), self.clone())
                }
            }
            _ => (BigRational::one(), self.clone()),
        }
    }

    /// True when the canonical form carries a leading minus sign.
    pub fn is_negative_form(&self) -> bool {
        match self.kind() {
            ExprKind::Num(r) => r.is_negative(),
            ExprKind::Mul(_) => self.coeff_rest().0.is_negative(),
            ExprKind::Add(ts) => {
                let neg = Expr::add(ts.iter().map(|t| -t).collect());
                neg < *self
            }
            _ => false,
        }
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut numeric = BigRational::zero();
        let mut coll: BTreeMap<Expr, BigRational> = BTreeMap::new();
        let mut stack = terms;
        while let Some(t) = stack.pop() {
            match t.kind() {
                ExprKind::Num(r) => numeric += r,
                ExprKind::Add(ts) => stack.extend(ts.iter().cloned()),
                _ => {
                    let (c, rest) = t.coeff_rest();
                    *coll.entry(rest).or_insert_with(BigRational::zero) += c;
                }
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(coll.len() + 1);
        if !numeric.is_zero() {
            out.push(Expr::rational(numeric));
        }
        for (rest, c) in coll {
            if c.is_zero() {
                continue;
            }
            out.push(Expr::scale(c, rest));
        }
        out.sort();
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::make(ExprKind::Add(out)),
        }
    }

    fn scale(c: BigRational, rest: Expr) -> Expr {
        if c.is_one() {
            return rest;
        }
        match rest.kind() {
            ExprKind::Mul(fs) => {
                let mut v = Vec::with_capacity(fs.len() + 1);
                v.push(Expr::rational(c));
                v.extend(fs.iter().cloned());
                Expr::make(ExprKind::Mul(v))
            }
            _ => Expr::make(ExprKind::Mul(vec![Expr::rational(c), rest])),
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut numeric = BigRational::one();
        let mut powers: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
        let mut stack = factors;
        while let Some(f) = stack.pop() {
            match f.kind() {
                ExprKind::Num(r) => {
                    if r.is_zero() {
                        return Expr::zero();
                    }
                    numeric *= r;
                }
                ExprKind::Mul(fs) => stack.extend(fs.iter().cloned()),
                ExprKind::Pow(b, e) => powers.entry(b.clone()).or_default().push(e.clone()),
                _ => powers.entry(f.clone()).or_default().push(Expr::one()),
            }
        }
        let mut out: Vec<Expr> = Vec::new();
        for (base, exps) in powers {
            let e = Expr::add(exps);
            let p = Expr::pow(base, e);
            match p.kind() {
                ExprKind::Num(r) => {
                    if r.is_zero() {
                        return Expr::zero();
                    }
                    numeric *= r;
                }
                ExprKind::Mul(fs) => {
                    for f in fs {
                        if let ExprKind::Num(r) = f.kind() {
                            numeric *= r;
                        } else {
                            out.push(f.clone());
                        }
                    }
                }
                _ => out.push(p),
            }
        }
        out.sort();
        // powers of a common base were merged above, but distributing a
        // product power can reintroduce duplicates; a second pass settles it
        for w in out.windows(2) {
            if w[0].pow_base() == w[1].pow_base() {
                let mut v = out;
                v.push(Expr::rational(numeric));
                return Expr::mul(v);
            }
        }
        if out.is_empty() {
            return Expr::rational(numeric);
        }
        if numeric.is_one() && out.len() == 1 {
            return out.pop().unwrap();
        }
        if out.len() == 1 {
            if let ExprKind::Add(ts) = out[0].kind() {
                return Expr::add(ts.iter().map(|t| Expr::mul(vec![Expr::rational(numeric.clone()), t.clone()])).collect());
            }
        }
        if !numeric.is_one() {
            out.insert(0, Expr::rational(numeric));
        }
        Expr::make(ExprKind::Mul(out))
    }

    fn pow_base(&self) -> &Expr {
        match self.kind() {
            ExprKind::Pow(b, _) => b,
            _ => self,
        }
    }

    pub fn pow(base: Expr, exp: Expr) -> Expr {
        if exp.is_zero() {
            return Expr::one();
        }
        if exp.is_one() {
            return base;
        }
        if base.is_one() {
            return Expr::one();
        }
        if let (ExprKind::Num(b), ExprKind::Num(e)) = (base.kind(), exp.kind()) {
            if is_integer(e) {
                if let Some(r) = rational_pow(b, e.numer()) {
                    return Expr::rational(r);
                }
            } else if let Some(d) = e.denom().to_u32() {
                if let Some(root) = rational_root(b, d) {
                    if let Some(r) = rational_pow(&root, e.numer()) {
                        return Expr::rational(r);
                    }
                }
            }
            if b.is_zero() {
                return Expr::zero();
            }
        }
        if let ExprKind::Num(e) = exp.kind() {
            if is_integer(e) {
                match base.kind() {
                    ExprKind::Pow(b2, e2) => {
                        return Expr::pow(b2.clone(), Expr::mul(vec![e2.clone(), exp.clone()]));
                    }
                    ExprKind::Mul(fs) => {
                        return Expr::mul(fs.iter().map(|f| Expr::pow(f.clone(), exp.clone())).collect());
                    }
                    _ => {}
                }
            } else if let ExprKind::Pow(b2, e2) = base.kind() {
                if let ExprKind::Num(e2n) = e2.kind() {
                    // (b^p)^q = b^(pq) is safe when p is odd or b is a square root chain
                    if !is_integer(e2n) || e2n.numer().is_odd() {
                        return Expr::pow(b2.clone(), Expr::rational(e2n * e));
                    }
                }
            }
        }
        Expr::make(ExprKind::Pow(base, exp))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        if let ExprKind::Num(r) = arg.kind() {
            if r.is_zero() {
                return match f {
                    Func::Exp | Func::Cos => Expr::one(),
                    Func::Ln => Expr::make(ExprKind::Call(f, arg)),
                    _ => Expr::zero(),
                };
            }
            if r.is_one() && f == Func::Ln {
                return Expr::zero();
            }
        }
        match (f, arg.kind()) {
            (Func::Exp, ExprKind::Call(Func::Ln, a)) => return a.clone(),
            (Func::Ln, ExprKind::Call(Func::Exp, a)) => return a.clone(),
            (Func::Tan, ExprKind::Call(Func::Arctan, a)) => return a.clone(),
            _ => {}
        }
        if (f.is_odd() || f == Func::Cos) && arg.is_negative_form() {
            let inner = Expr::call(f, -arg);
            return if f.is_odd() { -inner } else { inner };
        }
        Expr::make(ExprKind::Call(f, arg))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::call(Func::Exp, a)
    }

    pub fn ln(a: Expr) -> Expr {
        Expr::call(Func::Ln, a)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::pow(a, Expr::frac(1, 2))
    }

    /// Unevaluated `∫_{lower}^{var} integrand d(var)`.
    pub fn integral(integrand: Expr, var: &Symbol, lower: BigRational) -> Expr {
        Expr::integral_to(integrand, var, lower, Expr::symbol(var))
    }

    pub fn integral_to(integrand: Expr, var: &Symbol, lower: BigRational, upper: Expr) -> Expr {
        if integrand.is_zero() {
            return Expr::zero();
        }
        if let ExprKind::Num(u) = upper.kind() {
            if *u == lower {
                return Expr::zero();
            }
        }
        if !integrand.has_symbol(var) {
            return integrand * (upper - Expr::rational(lower));
        }
        if let ExprKind::Add(ts) = integrand.kind() {
            return Expr::add(ts.iter().map(|t| Expr::integral_to(t.clone(), var, lower.clone(), upper.clone())).collect());
        }
        let (c, rest) = integrand.coeff_rest();
        if !c.is_one() {
            return Expr::rational(c) * Expr::integral_to(rest, var, lower, upper);
        }
        let integrand = rename_nested_dummies(&integrand, var);
        Expr::make(ExprKind::Integral { integrand, var: var.clone(), lower, upper })
    }

    pub fn free_symbols(&self) -> &BTreeSet<Symbol> {
        self.0.free.get_or_init(|| {
            let mut s = BTreeSet::new();
            match self.kind() {
                ExprKind::Num(_) => {}
                ExprKind::Sym(x) => {
                    s.insert(x.clone());
                }
                ExprKind::Add(ts) | ExprKind::Mul(ts) => {
                    for t in ts {
                        s.extend(t.free_symbols().iter().cloned());
                    }
                }
                ExprKind::Pow(b, e) => {
                    s.extend(b.free_symbols().iter().cloned());
                    s.extend(e.free_symbols().iter().cloned());
                }
                ExprKind::Call(_, a) => s.extend(a.free_symbols().iter().cloned()),
                ExprKind::Integral { integrand, var, upper, .. } => {
                    s.extend(integrand.free_symbols().iter().filter(|x| *x != var).cloned());
                    s.extend(upper.free_symbols().iter().cloned());
                }
            }
            s
        })
    }

    pub fn has_symbol(&self, s: &Symbol) -> bool {
        self.free_symbols().contains(s)
    }

    pub fn has_any(&self, syms: &[Symbol]) -> bool {
        syms.iter().any(|s| self.has_symbol(s))
    }

    pub fn contains_integral(&self) -> bool {
        match self.kind() {
            ExprKind::Integral { .. } => true,
            ExprKind::Num(_) | ExprKind::Sym(_) => false,
            ExprKind::Add(ts) | ExprKind::Mul(ts) => ts.iter().any(|t| t.contains_integral()),
            ExprKind::Pow(b, e) => b.contains_integral() || e.contains_integral(),
            ExprKind::Call(_, a) => a.contains_integral(),
        }
    }

    /// Number of nodes; used as a size heuristic.
    pub fn size(&self) -> usize {
        1 + match self.kind() {
            ExprKind::Num(_) | ExprKind::Sym(_) => 0,
            ExprKind::Add(ts) | ExprKind::Mul(ts) => ts.iter().map(|t| t.size()).sum(),
            ExprKind::Pow(b, e) => b.size() + e.size(),
            ExprKind::Call(_, a) => a.size(),
            ExprKind::Integral { integrand, upper, .. } => integrand.size() + upper.size(),
        }
    }

    /// Rebuilds the tree bottom-up through `f`, which sees already mapped children.
    pub fn map_children(&self, f: &mut impl FnMut(&Expr) -> Expr) -> Expr {
        match self.kind() {
            ExprKind::Num(_) | ExprKind::Sym(_) => self.clone(),
            ExprKind::Add(ts) => Expr::add(ts.iter().map(|t| f(t)).collect()),
            ExprKind::Mul(ts) => Expr::mul(ts.iter().map(|t| f(t)).collect()),
            ExprKind::Pow(b, e) => Expr::pow(f(b), f(e)),
            ExprKind::Call(func, a) => Expr::call(*func, f(a)),
            ExprKind::Integral { integrand, var, lower, upper } => {
                Expr::integral_to(f(integrand), var, lower.clone(), f(upper))
            }
        }
    }

    pub fn terms(&self) -> Vec<Expr> {
        match self.kind() {
            ExprKind::Add(ts) => ts.clone(),
            _ if self.is_zero() => vec![],
            _ => vec![self.clone()],
        }
    }

    pub fn factors(&self) -> Vec<Expr> {
        match self.kind() {
            ExprKind::Mul(fs) => fs.clone(),
            _ => vec![self.clone()],
        }
    }

    pub fn recip(&self) -> Expr {
        Expr::pow(self.clone(), Expr::num(-1))
    }
}

fn rename_nested_dummies(e: &Expr, var: &Symbol) -> Expr {
    if !e.contains_integral() {
        return e.clone();
    }
    match e.kind() {
        ExprKind::Integral { integrand, var: v, lower, upper } if v == var => {
            let mut k = 1;
            let fresh = loop {
                let cand = Symbol::new(&format!("{}_{}", var, k));
                if !integrand.has_symbol(&cand) {
                    break cand;
                }
                k += 1;
            };
            let mut m = BTreeMap::new();
            m.insert(var.clone(), Expr::symbol(&fresh));
            let inner = super::subs::substitute(integrand, &m);
            Expr::make(ExprKind::Integral {
                integrand: inner,
                var: fresh,
                lower: lower.clone(),
                upper: rename_nested_dummies(upper, var),
            })
        }
        _ => e.map_children(&mut |c| rename_nested_dummies(c, var)),
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::add(vec![self, -rhs])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::mul(vec![self, rhs.recip()])
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul(vec![Expr::num(-1), self])
    }
}

macro_rules! ref_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                std::ops::$tr::$m(self.clone(), rhs.clone())
            }
        }
    )*};
}
ref_ops!(Add add, Sub sub, Mul mul, Div div);

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -(self.clone())
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::num(n)
    }
}

pub fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn is_atomic_print(e: &Expr) -> bool {
    match e.kind() {
        ExprKind::Num(r) => !r.is_negative() && r.denom().is_one(),
        ExprKind::Sym(_) | ExprKind::Call(..) | ExprKind::Integral { .. } => true,
        ExprKind::Pow(_, ex) => matches!(ex.kind(), ExprKind::Num(r) if *r == rat(1, 2)),
        _ => false,
    }
}

fn write_factor(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if is_atomic_print(e) || matches!(e.kind(), ExprKind::Pow(..)) {
        write!(f, "{}", e)
    } else {
        write!(f, "({})", e)
    }
}

/// Splits a product into numerator and denominator factor lists.
fn split_fraction(e: &Expr) -> (BigRational, Vec<Expr>, Vec<Expr>) {
    let (c, rest) = e.coeff_rest();
    let mut num = Vec::new();
    let mut den = Vec::new();
    if !rest.is_one() {
        for fct in rest.factors() {
            match fct.kind() {
                ExprKind::Pow(b, ex) if ex.is_negative_form() && ex.is_num() => {
                    den.push(Expr::pow(b.clone(), -ex.clone()));
                }
                _ => num.push(fct),
            }
        }
    }
    (c, num, den)
}

fn write_product(f: &mut fmt::Formatter<'_>, c: &BigRational, num: &[Expr], den: &[Expr]) -> fmt::Result {
    let mut first = true;
    let cn = BigRational::from_integer(c.numer().clone());
    if !cn.is_one() || num.is_empty() {
        write!(f, "{}", cn.numer())?;
        first = false;
    }
    for x in num {
        if !first {
            f.write_str("*")?;
        }
        write_factor(f, x)?;
        first = false;
    }
    let dn = BigRational::from_integer(c.denom().clone());
    let mut dens: Vec<String> = Vec::new();
    if !dn.is_one() {
        dens.push(dn.numer().to_string());
    }
    for x in den {
        dens.push(if is_atomic_print(x) || matches!(x.kind(), ExprKind::Pow(..)) { format!("{}", x) } else { format!("({})", x) });
    }
    for d in dens {
        write!(f, "/{}", d)?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ExprKind::Num(r) => f.write_str(&fmt_rational(r)),
            ExprKind::Sym(s) => f.write_str(s.as_str()),
            ExprKind::Add(ts) => {
                // numeric constant last reads better
                let mut order: Vec<&Expr> = ts.iter().filter(|t| !t.is_num()).collect();
                order.extend(ts.iter().filter(|t| t.is_num()));
                for (i, t) in order.iter().enumerate() {
                    let (c, num, den) = split_fraction(t);
                    if c.is_negative() {
                        f.write_str(if i == 0 { "-" } else { " - " })?;
                        write_product(f, &-c, &num, &den)?;
                    } else {
                        if i > 0 {
                            f.write_str(" + ")?;
                        }
                        write_product(f, &c, &num, &den)?;
                    }
                }
                Ok(())
            }
            ExprKind::Mul(_) | ExprKind::Pow(..) => {
                if let ExprKind::Pow(b, ex) = self.kind() {
                    if let ExprKind::Num(r) = ex.kind() {
                        if *r == rat(1, 2) {
                            return write!(f, "sqrt({})", b);
                        }
                        if !r.is_negative() {
                            write_factor_base(f, b)?;
                            return if r.denom().is_one() { write!(f, "^{}", r) } else { write!(f, "^({})", fmt_rational(r)) };
                        }
                    } else {
                        write_factor_base(f, b)?;
                        return write!(f, "^({})", ex);
                    }
                }
                let (c, num, den) = split_fraction(self);
                if c.is_negative() {
                    f.write_str("-")?;
                    write_product(f, &-c, &num, &den)
                } else {
                    write_product(f, &c, &num, &den)
                }
            }
            ExprKind::Call(func, a) => write!(f, "{}({})", func.name(), a),
            ExprKind::Integral { integrand, var, lower, upper } => {
                if upper.as_sym() == Some(var) {
                    write!(f, "int({}, {}, {})", integrand, var, fmt_rational(lower))
                } else {
                    write!(f, "int({}, {}, {}, {})", integrand, var, fmt_rational(lower), upper)
                }
            }
        }
    }
}

fn write_factor_base(f: &mut fmt::Formatter<'_>, b: &Expr) -> fmt::Result {
    if is_atomic_print(b) {
        write!(f, "{}", b)
    } else {
        write!(f, "({})", b)
    }
}

pub type Subst = BTreeMap<Symbol, Expr>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn like_terms_collect() {
        let x = Expr::sym("x");
        let e = &(&x + &x) - &(Expr::num(2) * x.clone());
        assert!(e.is_zero());
    }

    #[test]
    fn powers_merge() {
        let x = Expr::sym("x");
        let e = Expr::sqrt(x.clone()) * Expr::sqrt(x.clone());
        assert_eq!(e, x);
        let e = x.clone() / x.clone();
        assert!(e.is_one());
    }

    #[test]
    fn odd_functions_pull_sign() {
        let x = Expr::sym("x");
        let c = Expr::sym("c3");
        let a = Expr::call(Func::Tan, &c - &x);
        let b = Expr::call(Func::Tan, &x - &c);
        assert_eq!(a + b, Expr::zero());
    }

    #[test]
    fn integral_of_constant_evaluates() {
        let x = Symbol::new("x");
        let e = Expr::integral(Expr::sym("u"), &x, rat(1, 1));
        assert_eq!(e, Expr::sym("u") * (Expr::sym("x") - Expr::one()));
    }
}
