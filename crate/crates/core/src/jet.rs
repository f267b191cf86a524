//! Finite charts on the equation manifold and exterior calculus on them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::symbolic::{diff, simplify, Expr, Subst, Symbol, Verdict, ZeroTest};

/// Name of the `i`-th derivative coordinate; `u_0` is `u`.
pub fn u_name(i: usize) -> String {
    if i == 0 {
        "u".to_string()
    } else {
        format!("u{}", i)
    }
}

pub fn u_sym(i: usize) -> Symbol {
    Symbol::new(&u_name(i))
}

pub fn x_sym() -> Symbol {
    Symbol::new("x")
}

pub fn w_sym() -> Symbol {
    Symbol::new("w")
}

#[derive(Clone, PartialEq, Eq)]
pub struct Chart {
    coords: Arc<[Symbol]>,
    order: usize,
    covering: bool,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.coords.iter().map(|s| s.as_str()).collect();
        write!(f, "Chart({})", names.join(","))
    }
}

impl Chart {
    /// `(x, u, u1, …, u_{k−1})`.
    pub fn jet(k: usize) -> Chart {
        assert!((1..=9).contains(&k), "order must be in 1..=9");
        let mut c = vec![x_sym()];
        c.extend((0..k).map(u_sym));
        Chart { coords: c.into(), order: k, covering: false }
    }

    /// `(x, u, …, u_{k−1}, w)`.
    pub fn covering(k: usize) -> Chart {
        let mut c: Vec<Symbol> = Chart::jet(k).coords.to_vec();
        c.push(w_sym());
        Chart { coords: c.into(), order: k, covering: true }
    }

    /// A chart with explicit coordinates; used for level manifolds.
    pub fn from_coords(coords: Vec<Symbol>) -> Result<Chart> {
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(Error::Structure(format!("duplicate coordinate {}", c)));
            }
        }
        let covering = coords.contains(&w_sym());
        let order = coords.iter().filter(|c| c.as_str() == "u" || is_u_derivative(c)).count();
        Ok(Chart { coords: coords.into(), order, covering })
    }

    /// The chart with `drop` removed.
    pub fn without(&self, drop: &[Symbol]) -> Chart {
        let c: Vec<Symbol> = self.coords.iter().filter(|s| !drop.contains(s)).cloned().collect();
        Chart { coords: c.into(), order: self.order, covering: self.covering }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn has_covering_variable(&self) -> bool {
        self.covering
    }

    pub fn coords(&self) -> &[Symbol] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &Symbol {
        &self.coords[i]
    }

    pub fn index(&self, s: &Symbol) -> Option<usize> {
        self.coords.iter().position(|c| c == s)
    }

    fn same(&self, o: &Chart) -> Result<()> {
        if self.coords == o.coords {
            Ok(())
        } else {
            Err(Error::Structure(format!("chart mismatch: {:?} vs {:?}", self, o)))
        }
    }
}

fn is_u_derivative(s: &Symbol) -> bool {
    let n = s.as_str();
    n.len() == 2 && n.starts_with('u') && n.as_bytes()[1].is_ascii_digit()
}

/// `u_k = f(x, u, …, u_{k−1})`.
#[derive(Clone, Debug)]
pub struct OdeProblem {
    pub order: usize,
    pub f: Expr,
    pub chart: Chart,
}

impl OdeProblem {
    pub fn new(order: usize, f: Expr) -> Result<OdeProblem> {
        if !(1..=9).contains(&order) {
            return Err(Error::Input(format!("order {} out of range 1..=9", order)));
        }
        let chart = Chart::jet(order);
        if let Some(s) = f.free_symbols().iter().find(|s| chart.index(s).is_none()) {
            return Err(Error::Input(format!("right-hand side uses {} outside the chart", s)));
        }
        Ok(OdeProblem { order, f, chart })
    }

    /// `D̄ₓ = ∂ₓ + u₁∂_u + … + f∂_{u_{k−1}}`.
    pub fn total_derivative_field(&self) -> VectorField {
        let mut comps = vec![Expr::one()];
        for i in 1..self.order {
            comps.push(Expr::symbol(&u_sym(i)));
        }
        comps.push(self.f.clone());
        VectorField { chart: self.chart.clone(), comps }
    }

    pub fn total_derivative(&self, e: &Expr) -> Expr {
        self.total_derivative_field().apply(e)
    }
}

#[derive(Clone, Debug)]
pub struct VectorField {
    chart: Chart,
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn zero(chart: &Chart) -> VectorField {
        VectorField { chart: chart.clone(), comps: vec![Expr::zero(); chart.dim()] }
    }

    /// The coordinate field `∂_s`.
    pub fn coordinate(chart: &Chart, s: &Symbol) -> Result<VectorField> {
        let i = chart.index(s).ok_or_else(|| Error::Structure(format!("{} is not a coordinate", s)))?;
        let mut v = VectorField::zero(chart);
        v.comps[i] = Expr::one();
        Ok(v)
    }

    pub fn from_components(chart: &Chart, comps: Vec<Expr>) -> Result<VectorField> {
        if comps.len() != chart.dim() {
            return Err(Error::Structure(format!("expected {} components, got {}", chart.dim(), comps.len())));
        }
        Ok(VectorField { chart: chart.clone(), comps })
    }

    /// Missing entries are zero.
    pub fn from_map(chart: &Chart, m: &BTreeMap<Symbol, Expr>) -> Result<VectorField> {
        let mut v = VectorField::zero(chart);
        for (s, e) in m {
            let i = chart.index(s).ok_or_else(|| Error::Structure(format!("{} is not a coordinate of {:?}", s, chart)))?;
            v.comps[i] = e.clone();
        }
        Ok(v)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn component(&self, s: &Symbol) -> Expr {
        self.chart.index(s).map(|i| self.comps[i].clone()).unwrap_or_else(Expr::zero)
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.chart
            .coords()
            .iter()
            .zip(&self.comps)
            .filter(|(_, e)| !e.is_zero())
            .map(|(s, e)| (s.to_string(), e.to_string()))
            .collect()
    }

    /// `X(g) = Σ Xⁱ ∂ᵢg`, unsimplified.
    pub fn apply(&self, g: &Expr) -> Expr {
        let mut terms = Vec::new();
        for (s, c) in self.chart.coords().iter().zip(&self.comps) {
            if c.is_zero() || !g.has_symbol(s) {
                continue;
            }
            terms.push(c * &diff(g, s));
        }
        Expr::add(terms)
    }

    pub fn simplify(&self) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(simplify).collect() }
    }

    pub fn scale(&self, k: &Expr) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(|c| c * k).collect() }
    }

    pub fn add(&self, o: &VectorField) -> Result<VectorField> {
        self.chart.same(&o.chart)?;
        Ok(VectorField { chart: self.chart.clone(), comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, o: &VectorField) -> Result<VectorField> {
        self.add(&o.scale(&Expr::num(-1)))
    }

    /// Componentwise substitution.
    pub fn substitute(&self, m: &Subst) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(|c| crate::symbolic::substitute(c, m)).collect() }
    }

    /// Re-expresses the field on another chart; coordinates absent from
    /// `self` get zero components. Fails if a nonzero component would be lost.
    pub fn on_chart(&self, chart: &Chart) -> Result<VectorField> {
        let mut v = VectorField::zero(chart);
        for (s, c) in self.chart.coords().iter().zip(&self.comps) {
            match chart.index(s) {
                Some(i) => v.comps[i] = c.clone(),
                None if c.is_zero() => {}
                None => return Err(Error::Structure(format!("component along {} has no place in {:?}", s, chart))),
            }
        }
        Ok(v)
    }

    /// Drops the components along coordinates missing from `chart`.
    pub fn project(&self, chart: &Chart) -> VectorField {
        let mut v = VectorField::zero(chart);
        for (s, c) in self.chart.coords().iter().zip(&self.comps) {
            if let Some(i) = chart.index(s) {
                v.comps[i] = c.clone();
            }
        }
        v
    }

    pub fn verdict(&self, zt: &ZeroTest) -> Verdict {
        Verdict::all(self.comps.iter().map(|c| zt.check(c)))
    }
}

pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    x.chart.same(&y.chart)?;
    let comps = x.comps.iter().zip(&y.comps).map(|(xi, yi)| x.apply(yi) - y.apply(xi)).collect();
    Ok(VectorField { chart: x.chart.clone(), comps })
}

pub fn lie_derivative(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    lie_bracket(x, y)
}

/// Sorts an index list; returns the permutation sign, or `None` on a repeat.
fn sort_sign(mut idx: Vec<usize>) -> Option<(Vec<usize>, i32)> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((idx, sign))
}

#[derive(Clone, Debug)]
pub struct DifferentialForm {
    chart: Chart,
    degree: usize,
    comps: BTreeMap<Vec<usize>, Expr>,
}

impl DifferentialForm {
    pub fn zero(chart: &Chart, degree: usize) -> DifferentialForm {
        DifferentialForm { chart: chart.clone(), degree, comps: BTreeMap::new() }
    }

    pub fn function(chart: &Chart, g: Expr) -> DifferentialForm {
        let mut f = DifferentialForm::zero(chart, 0);
        f.insert(vec![], g);
        f
    }

    /// `d s` for a coordinate `s`.
    pub fn basis(chart: &Chart, s: &Symbol) -> Result<DifferentialForm> {
        let i = chart.index(s).ok_or_else(|| Error::Structure(format!("{} is not a coordinate", s)))?;
        let mut f = DifferentialForm::zero(chart, 1);
        f.insert(vec![i], Expr::one());
        Ok(f)
    }

    /// A 1-form from its coefficients in chart order.
    pub fn one_form(chart: &Chart, coeffs: Vec<Expr>) -> Result<DifferentialForm> {
        if coeffs.len() != chart.dim() {
            return Err(Error::Structure(format!("expected {} coefficients, got {}", chart.dim(), coeffs.len())));
        }
        let mut f = DifferentialForm::zero(chart, 1);
        for (i, c) in coeffs.into_iter().enumerate() {
            f.insert(vec![i], c);
        }
        Ok(f)
    }

    /// `Ω = dx₁∧…∧dx_n` in chart order.
    pub fn volume(chart: &Chart) -> DifferentialForm {
        let mut f = DifferentialForm::zero(chart, chart.dim());
        f.insert((0..chart.dim()).collect(), Expr::one());
        f
    }

    /// Adds `c` to the coefficient of the sorted tuple `key`.
    fn insert(&mut self, key: Vec<usize>, c: Expr) {
        if c.is_zero() {
            return;
        }
        let v = match self.comps.remove(&key) {
            Some(old) => old + c,
            None => c,
        };
        if !v.is_zero() {
            self.comps.insert(key, v);
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &BTreeMap<Vec<usize>, Expr> {
        &self.comps
    }

    /// Coefficient on `dx_{i1}∧…` for an arbitrary (unsorted) index list.
    pub fn get(&self, idx: &[usize]) -> Expr {
        match sort_sign(idx.to_vec()) {
            None => Expr::zero(),
            Some((k, s)) => match self.comps.get(&k) {
                Some(c) if s > 0 => c.clone(),
                Some(c) => -c.clone(),
                None => Expr::zero(),
            },
        }
    }

    /// Coefficient on `ds` for a 1-form.
    pub fn coeff(&self, s: &Symbol) -> Expr {
        self.chart.index(s).map(|i| self.get(&[i])).unwrap_or_else(Expr::zero)
    }

    /// 1-form coefficients in chart order.
    pub fn coeffs(&self) -> Vec<Expr> {
        (0..self.chart.dim()).map(|i| self.get(&[i])).collect()
    }

    pub fn scalar(&self) -> Expr {
        self.get(&[])
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn simplify(&self) -> DifferentialForm {
        let mut f = DifferentialForm::zero(&self.chart, self.degree);
        for (k, c) in &self.comps {
            f.insert(k.clone(), simplify(c));
        }
        f
    }

    pub fn map(&self, g: impl Fn(&Expr) -> Expr) -> DifferentialForm {
        let mut f = DifferentialForm::zero(&self.chart, self.degree);
        for (k, c) in &self.comps {
            f.insert(k.clone(), g(c));
        }
        f
    }

    pub fn scale(&self, k: &Expr) -> DifferentialForm {
        self.map(|c| c * k)
    }

    pub fn add(&self, o: &DifferentialForm) -> Result<DifferentialForm> {
        self.chart.same(&o.chart)?;
        if self.degree != o.degree {
            return Err(Error::Structure(format!("adding forms of degree {} and {}", self.degree, o.degree)));
        }
        let mut f = self.clone();
        for (k, c) in &o.comps {
            f.insert(k.clone(), c.clone());
        }
        Ok(f)
    }

    pub fn sub(&self, o: &DifferentialForm) -> Result<DifferentialForm> {
        self.add(&o.scale(&Expr::num(-1)))
    }

    pub fn wedge(&self, o: &DifferentialForm) -> Result<DifferentialForm> {
        self.chart.same(&o.chart)?;
        let mut f = DifferentialForm::zero(&self.chart, self.degree + o.degree);
        if f.degree > self.chart.dim() {
            return Ok(f);
        }
        for (ka, a) in &self.comps {
            for (kb, b) in &o.comps {
                let mut idx = ka.clone();
                idx.extend(kb);
                if let Some((k, s)) = sort_sign(idx) {
                    let p = a * b;
                    f.insert(k, if s > 0 { p } else { -p });
                }
            }
        }
        Ok(f)
    }

    /// `X⌟α`, with `(X⌟α)(Y₂,…) = α(X,Y₂,…)`.
    pub fn interior(&self, x: &VectorField) -> Result<DifferentialForm> {
        self.chart.same(&x.chart)?;
        if self.degree == 0 {
            return Err(Error::Structure("interior product of a 0-form".into()));
        }
        let mut f = DifferentialForm::zero(&self.chart, self.degree - 1);
        for (k, a) in &self.comps {
            for (pos, &i) in k.iter().enumerate() {
                let xi = &x.comps[i];
                if xi.is_zero() {
                    continue;
                }
                let mut rest = k.clone();
                rest.remove(pos);
                let t = xi * a;
                f.insert(rest, if pos % 2 == 0 { t } else { -t });
            }
        }
        Ok(f)
    }

    pub fn exterior_derivative(&self) -> DifferentialForm {
        let mut f = DifferentialForm::zero(&self.chart, self.degree + 1);
        for (k, a) in &self.comps {
            for (j, s) in self.chart.coords().iter().enumerate() {
                if k.contains(&j) || !a.has_symbol(s) {
                    continue;
                }
                let before = k.iter().filter(|&&i| i < j).count();
                let mut idx = k.clone();
                idx.insert(before, j);
                let da = diff(a, s);
                f.insert(idx, if before % 2 == 0 { da } else { -da });
            }
        }
        f
    }

    /// `L_X α = X⌟dα + d(X⌟α)`.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<DifferentialForm> {
        let a = self.exterior_derivative().interior(x)?;
        if self.degree == 0 {
            return Ok(a);
        }
        a.add(&self.interior(x)?.exterior_derivative())
    }

    /// `α(V₁,…,V_p)`.
    pub fn evaluate(&self, vs: &[VectorField]) -> Result<Expr> {
        if vs.len() != self.degree {
            return Err(Error::Structure(format!("{}-form evaluated on {} fields", self.degree, vs.len())));
        }
        let mut f = self.clone();
        for v in vs {
            f = f.interior(v)?;
        }
        Ok(f.scalar())
    }

    pub fn verdict(&self, zt: &ZeroTest) -> Verdict {
        Verdict::all(self.comps.values().map(|c| zt.check(c)))
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.comps.iter().map(|(k, c)| (self.key_name(k), c.to_string())).collect()
    }

    fn key_name(&self, k: &[usize]) -> String {
        if k.is_empty() {
            return "1".into();
        }
        k.iter().map(|&i| format!("d{}", self.chart.coord(i))).collect::<Vec<_>>().join("^")
    }
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comps.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .comps
            .iter()
            .map(|(k, c)| if k.is_empty() { format!("{}", c) } else { format!("({})*{}", c, self.key_name(k)) })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `d g` as a 1-form.
pub fn exact(chart: &Chart, g: &Expr) -> DifferentialForm {
    DifferentialForm::function(chart, g.clone()).exterior_derivative()
}

pub fn wedge(a: &DifferentialForm, b: &DifferentialForm) -> Result<DifferentialForm> {
    a.wedge(b)
}

pub fn interior_product(x: &VectorField, a: &DifferentialForm) -> Result<DifferentialForm> {
    a.interior(x)
}

pub fn exterior_derivative(a: &DifferentialForm) -> DifferentialForm {
    a.exterior_derivative()
}

pub fn volume_form(chart: &Chart) -> DifferentialForm {
    DifferentialForm::volume(chart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{is_zero, parse};

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn charts() {
        let c = Chart::jet(3);
        assert_eq!(c.dim(), 4);
        assert_eq!(c.coord(3).as_str(), "u2");
        let c = Chart::covering(2);
        assert_eq!(c.dim(), 4);
        assert!(c.has_covering_variable());
    }

    #[test]
    fn total_derivative_components() {
        let ode = OdeProblem::new(1, p("u")).unwrap();
        let d = ode.total_derivative_field();
        assert_eq!(d.components(), &[Expr::one(), p("u")]);
    }

    #[test]
    fn insertion_sign_anchor() {
        let c = Chart::jet(1);
        let dxdu = DifferentialForm::volume(&c);
        let dx = VectorField::coordinate(&c, &x_sym()).unwrap();
        let du = VectorField::coordinate(&c, &u_sym(0)).unwrap();
        let a = dxdu.interior(&dx).unwrap();
        assert_eq!(a.coeffs(), vec![Expr::zero(), Expr::one()]);
        let b = dxdu.interior(&du).unwrap();
        assert_eq!(b.coeffs(), vec![Expr::num(-1), Expr::zero()]);
    }

    #[test]
    fn wedge_shuffle_signs() {
        let c = Chart::jet(2);
        let dx = DifferentialForm::basis(&c, &x_sym()).unwrap();
        let du = DifferentialForm::basis(&c, &u_sym(0)).unwrap();
        let du1 = DifferentialForm::basis(&c, &u_sym(1)).unwrap();
        assert!(dx.wedge(&dx).unwrap().is_structurally_zero());
        let a = dx.wedge(&du).unwrap();
        let b = du.wedge(&dx).unwrap();
        assert_eq!(a.get(&[0, 1]), -b.get(&[0, 1]));
        let t = dx.wedge(&du.wedge(&du1).unwrap()).unwrap();
        assert_eq!(t.get(&[0, 1, 2]), Expr::one());
    }

    #[test]
    fn contraction_of_total_derivative_into_volume() {
        let f = p("-x^2/(4*u^3) - u - 1/(2*u)");
        let ode = OdeProblem::new(2, f.clone()).unwrap();
        let om = DifferentialForm::volume(&ode.chart).interior(&ode.total_derivative_field()).unwrap();
        assert_eq!(om.get(&[1, 2]), Expr::one());
        assert_eq!(om.get(&[0, 2]), -p("u1"));
        assert!(is_zero(&(om.get(&[0, 1]) - f)).is_zero());
    }

    #[test]
    fn d_of_u_dx() {
        let c = Chart::jet(1);
        let f = DifferentialForm::basis(&c, &x_sym()).unwrap().scale(&p("u"));
        let df = f.exterior_derivative();
        assert_eq!(df.get(&[1, 0]), Expr::one());
        assert!(df.exterior_derivative().is_structurally_zero());
    }
}
