//! Numerical cross-checks of symbolic output: RK4 trajectories, drift of
//! first integrals, residuals of explicit solutions, finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::jet::{u_sym, x_sym, OdeProblem, VectorField};
use crate::symbolic::{diff, Compiled, Expr, Point, Symbol};

pub const DRIFT_TOL: f64 = 1e-6;
pub const STEP_TOL: f64 = 1e-9;
pub const RESIDUAL_TOL: f64 = 1e-6;
const MAX_SKIP_FRACTION: f64 = 0.05;
const MIN_STEP: f64 = 1e-7;

/// `dy/dx = F(x, y)` read off a field with unit `∂ₓ` component.
#[derive(Clone, Debug)]
pub struct FlowSystem {
    pub coords: Vec<Symbol>,
    rhs: Vec<Compiled>,
}

impl FlowSystem {
    pub fn from_field(z: &VectorField) -> Result<FlowSystem> {
        let coords = z.chart().coords().to_vec();
        if !z.components()[0].is_one() {
            return Err(Error::Input("flow field must have unit x-component".into()));
        }
        let rhs = z.components()[1..].iter().map(|c| Compiled::with_vars(c, &coords)).collect::<Result<_>>()?;
        Ok(FlowSystem { coords, rhs })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    fn eval(&self, x: f64, y: &[f64], buf: &mut Vec<f64>) -> Result<Vec<f64>> {
        buf.clear();
        buf.push(x);
        buf.extend_from_slice(y);
        self.rhs
            .iter()
            .map(|c| c.eval(buf).and_then(|v| if v.is_finite() { Ok(v) } else { Err(Error::Numeric("non-finite derivative".into())) }))
            .collect()
    }

    fn rk4(&self, x: f64, y: &[f64], h: f64, buf: &mut Vec<f64>) -> Result<Vec<f64>> {
        let shift = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
        let k1 = self.eval(x, y, buf)?;
        let k2 = self.eval(x + h / 2.0, &shift(y, &k1, h / 2.0), buf)?;
        let k3 = self.eval(x + h / 2.0, &shift(y, &k2, h / 2.0), buf)?;
        let k4 = self.eval(x + h, &shift(y, &k3, h), buf)?;
        Ok((0..y.len()).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub coords: Vec<String>,
    pub xs: Vec<f64>,
    /// States without `x`.
    pub states: Vec<Vec<f64>>,
    pub step: f64,
    pub method: &'static str,
}

impl Trajectory {
    /// Sample `i` as a point over the full chart.
    pub fn point(&self, i: usize, sys: &FlowSystem) -> Point {
        let mut p = Point::new();
        p.insert(sys.coords[0].clone(), self.xs[i]);
        for (s, v) in sys.coords[1..].iter().zip(&self.states[i]) {
            p.insert(s.clone(), *v);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Classic RK4 with step doubling; the step is halved until the doubling
/// estimate is below [`STEP_TOL`].
pub fn integrate_trajectory(sys: &FlowSystem, init: &Point, span: f64, step: f64) -> Result<Trajectory> {
    let x0 = *init.get(&sys.coords[0]).ok_or_else(|| Error::Input("initial point lacks x".into()))?;
    let mut y: Vec<f64> = sys.coords[1..]
        .iter()
        .map(|c| init.get(c).copied().ok_or_else(|| Error::Input(format!("initial point lacks {}", c))))
        .collect::<Result<_>>()?;
    let mut buf = Vec::new();
    sys.eval(x0, &y, &mut buf).map_err(|e| Error::Numeric(format!("initial point is singular: {}", e)))?;
    let dir = span.signum();
    let end = x0 + span;
    let mut x = x0;
    let mut h = step.abs().min(span.abs()) * dir;
    let mut xs = vec![x0];
    let mut states = vec![y.clone()];
    while (end - x) * dir > 1e-14 {
        if (x + h - end) * dir > 0.0 {
            h = end - x;
        }
        let attempt = sys
            .rk4(x, &y, h, &mut buf)
            .and_then(|big| {
                let mid = sys.rk4(x, &y, h / 2.0, &mut buf)?;
                let fine = sys.rk4(x + h / 2.0, &mid, h / 2.0, &mut buf)?;
                let err = big.iter().zip(&fine).map(|(a, b)| (a - b).abs() / 15.0 / b.abs().max(1.0)).fold(0.0, f64::max);
                Ok((fine, err))
            });
        match attempt {
            Ok((fine, err)) if err <= STEP_TOL => {
                x += h;
                y = fine;
                xs.push(x);
                states.push(y.clone());
                if err < STEP_TOL / 64.0 && h.abs() < step.abs() {
                    h = (h * 2.0).abs().min(step.abs()) * dir;
                }
            }
            _ if h.abs() > MIN_STEP => h /= 2.0,
            Ok(_) | Err(_) => {
                return Err(Error::Numeric(format!("singularity near x = {} (last good sample {:?})", x, y)));
            }
        }
    }
    Ok(Trajectory { coords: sys.coords.iter().map(|s| s.to_string()).collect(), xs, states, step: step.abs(), method: "rk4-step-doubling" })
}

/// Fixed-step RK4, for order checks.
pub fn integrate_fixed(sys: &FlowSystem, init: &[f64], x0: f64, span: f64, n: usize) -> Result<Vec<f64>> {
    let h = span / n as f64;
    let mut y = init.to_vec();
    let mut buf = Vec::new();
    for i in 0..n {
        y = sys.rk4(x0 + i as f64 * h, &y, h, &mut buf)?;
    }
    Ok(y)
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub name: String,
    pub max_drift: f64,
    pub samples: usize,
    pub skipped: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Binds each constant `c` to the value of its integral at `init`, in order.
pub fn fix_constants(integrals: &[(Symbol, Expr)], init: &Point) -> Result<Point> {
    let mut env = init.clone();
    for (c, i) in integrals {
        let v = Compiled::new(i)?.eval_point(&env)?;
        env.insert(c.clone(), v);
    }
    Ok(env)
}

/// Relative drift `max |I(s) − I(s₀)| / max(1, |I(s₀)|)` along `t`.
pub fn check_first_integral(name: &str, i: &Expr, t: &Trajectory, sys: &FlowSystem, consts: &Point, tol: f64) -> Result<DriftReport> {
    let c = Compiled::new(i)?;
    let at = |k: usize| -> Result<f64> {
        let mut p = consts.clone();
        p.extend(t.point(k, sys));
        c.eval_point(&p)
    };
    let i0 = at(0)?;
    let scale = i0.abs().max(1.0);
    let mut max_drift: f64 = 0.0;
    let mut skipped = 0;
    for k in 1..t.len() {
        match at(k) {
            Ok(v) => max_drift = max_drift.max((v - i0).abs() / scale),
            Err(_) => skipped += 1,
        }
    }
    if skipped as f64 > MAX_SKIP_FRACTION * t.len() as f64 {
        return Err(Error::Numeric(format!("{}: {} of {} samples outside the domain", name, skipped, t.len())));
    }
    Ok(DriftReport { name: name.into(), max_drift, samples: t.len(), skipped, tolerance: tol, pass: max_drift < tol })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub points: usize,
    pub skipped: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// `max |u_k − f(x, u, …, u_{k−1})|` for `u = u(x)` at `xs`.
pub fn check_solution(u: &Expr, ode: &OdeProblem, consts: &Point, xs: &[f64], tol: f64, exec: Exec) -> Result<ResidualReport> {
    let x = x_sym();
    let mut derivs = vec![u.clone()];
    for _ in 0..ode.order {
        let next = diff(derivs.last().unwrap(), &x);
        derivs.push(next);
    }
    let compiled: Vec<Compiled> = derivs.iter().map(Compiled::new).collect::<Result<_>>()?;
    let f = Compiled::new(&ode.f)?;
    let k = ode.order as usize;
    let res: Vec<Option<f64>> = exec.map(xs, |&xv| {
        let mut env = consts.clone();
        env.insert(x.clone(), xv);
        let vals: Vec<f64> = compiled.iter().map(|c| c.eval_point(&env)).collect::<Result<_>>().ok()?;
        let mut p = env.clone();
        for (j, v) in vals.iter().take(k).enumerate() {
            p.insert(u_sym(j), *v);
        }
        let fv = f.eval_point(&p).ok()?;
        Some((vals[k] - fv).abs())
    });
    let skipped = res.iter().filter(|r| r.is_none()).count();
    if skipped as f64 > MAX_SKIP_FRACTION * xs.len() as f64 {
        return Err(Error::Numeric(format!("{} of {} points outside the domain", skipped, xs.len())));
    }
    let max_residual = res.iter().flatten().fold(0.0, |a: f64, b| a.max(*b));
    Ok(ResidualReport { max_residual, points: xs.len(), skipped, tolerance: tol, pass: max_residual < tol })
}

#[derive(Clone, Debug, Serialize)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub points: usize,
    pub pass: bool,
}

/// Compares `∂e/∂v` with a 5-point central difference.
pub fn finite_difference_check(e: &Expr, v: &Symbol, points: &[Point]) -> Result<FdReport> {
    let f = Compiled::new(e)?;
    let d = Compiled::new(&diff(e, v))?;
    let mut worst: f64 = 0.0;
    for p in points {
        let v0 = *p.get(v).ok_or_else(|| Error::Input(format!("point lacks {}", v)))?;
        let h = 1e-3 * v0.abs().max(1.0);
        let at = |s: f64| -> Result<f64> {
            let mut q = p.clone();
            q.insert(v.clone(), v0 + s * h);
            f.eval_point(&q)
        };
        let fd = (at(-2.0)? - 8.0 * at(-1.0)? + 8.0 * at(1.0)? - at(2.0)?) / (12.0 * h);
        let mut q = p.clone();
        for s in d.vars() {
            q.entry(s.clone()).or_insert(0.0);
        }
        let exact = d.eval_point(&q)?;
        worst = worst.max((fd - exact).abs() / exact.abs().max(1.0));
    }
    Ok(FdReport { max_rel_err: worst, points: points.len(), pass: worst < 1e-6 })
}

/// `n` evenly spaced interior points of `(a, b)`.
pub fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| a + (b - a) * i as f64 / (n + 1) as f64).collect()
}

/// Fits `consts` of `candidate` so that it and its first `m − 1`
/// derivatives agree with `target` at `x0` (`m` = number of constants).
/// Newton from seeded starts; returns the fitted constants.
pub fn match_constants(candidate: &Expr, consts: &[Symbol], target: &Expr, fixed: &Point, x0: f64, seed: u64) -> Option<Point> {
    let x = x_sym();
    let m = consts.len();
    let mut cd = vec![candidate.clone()];
    let mut td = vec![target.clone()];
    for _ in 1..m {
        cd.push(diff(cd.last().unwrap(), &x));
        td.push(diff(td.last().unwrap(), &x));
    }
    let cc: Vec<Compiled> = cd.iter().map(Compiled::new).collect::<Result<_>>().ok()?;
    let mut env = fixed.clone();
    env.insert(x.clone(), x0);
    let goal: Vec<f64> = td.iter().map(|e| Compiled::new(e)?.eval_point(&env)).collect::<Result<_>>().ok()?;
    let resid = |p: &[f64]| -> Option<Vec<f64>> {
        let mut e = env.clone();
        for (s, v) in consts.iter().zip(p) {
            e.insert(s.clone(), *v);
        }
        cc.iter().zip(&goal).map(|(c, g)| c.eval_point(&e).ok().map(|v| v - g)).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let mut p: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for _ in 0..60 {
            let Some(r) = resid(&p) else { break };
            let norm = r.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
            if norm < 1e-12 * goal.iter().fold(1.0, |a: f64, b| a.max(b.abs())) {
                let mut out = Point::new();
                for (s, v) in consts.iter().zip(&p) {
                    out.insert(s.clone(), *v);
                }
                return Some(out);
            }
            let mut jac = vec![vec![0.0; m]; m];
            let mut ok = true;
            for j in 0..m {
                let h = 1e-6 * p[j].abs().max(1.0);
                let mut pp = p.clone();
                pp[j] += h;
                let mut pm = p.clone();
                pm[j] -= h;
                match (resid(&pp), resid(&pm)) {
                    (Some(a), Some(b)) => (0..m).for_each(|i| jac[i][j] = (a[i] - b[i]) / (2.0 * h)),
                    _ => ok = false,
                }
            }
            let step = if ok { solve_dense(jac, r) } else { None };
            let Some(step) = step else { break };
            for j in 0..m {
                p[j] -= step[j];
            }
        }
    }
    None
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Largest `|a − b|` relative to `max(1, |b|)` at `xs`.
pub fn max_difference(a: &Expr, b: &Expr, env: &Point, xs: &[f64]) -> Result<f64> {
    let (ca, cb) = (Compiled::new(a)?, Compiled::new(b)?);
    let mut worst: f64 = 0.0;
    for &xv in xs {
        let mut p = env.clone();
        p.insert(x_sym(), xv);
        let (va, vb) = (ca.eval_point(&p)?, cb.eval_point(&p)?);
        worst = worst.max((va - vb).abs() / vb.abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{eval::point, parse};

    fn linear() -> (OdeProblem, FlowSystem) {
        let ode = OdeProblem::new(1, parse("u").unwrap()).unwrap();
        let sys = FlowSystem::from_field(&ode.total_derivative_field()).unwrap();
        (ode, sys)
    }

    #[test]
    fn exponential_growth() {
        let (_, sys) = linear();
        let t = integrate_trajectory(&sys, &point(&[("x", 0.0), ("u", 1.0)]), 1.0, 0.1).unwrap();
        assert!((t.states.last().unwrap()[0] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let (_, sys) = linear();
        let e = std::f64::consts::E;
        let a = (integrate_fixed(&sys, &[1.0], 0.0, 1.0, 10).unwrap()[0] - e).abs();
        let b = (integrate_fixed(&sys, &[1.0], 0.0, 1.0, 20).unwrap()[0] - e).abs();
        assert!(a / b >= 8.0);
    }

    #[test]
    fn drift_of_integral_and_control() {
        let (_, sys) = linear();
        let t = integrate_trajectory(&sys, &point(&[("x", 0.0), ("u", 1.0)]), 1.0, 0.1).unwrap();
        let good = check_first_integral("I", &parse("u*exp(-x)").unwrap(), &t, &sys, &Point::new(), DRIFT_TOL).unwrap();
        assert!(good.pass);
        let bad = check_first_integral("J", &parse("u*exp(-x) + x*u/7").unwrap(), &t, &sys, &Point::new(), DRIFT_TOL).unwrap();
        assert!(!bad.pass && bad.max_drift > 1e-3);
    }

    #[test]
    fn exponential_solution_residual() {
        let (ode, _) = linear();
        let r = check_solution(&parse("C*exp(x)").unwrap(), &ode, &point(&[("C", 1.5)]), &grid(-1.0, 1.0, 20), RESIDUAL_TOL, Exec::Sequential).unwrap();
        assert!(r.pass && r.max_residual < 1e-12);
    }

    #[test]
    fn finite_differences() {
        let pts: Vec<Point> = [0.5, 1.0, 2.0].iter().map(|&v| point(&[("x", v), ("u", v)])).collect();
        assert!(finite_difference_check(&parse("sin(x)").unwrap(), &x_sym(), &pts).unwrap().pass);
        assert!(finite_difference_check(&parse("ln(u)").unwrap(), &u_sym(0), &pts).unwrap().pass);
    }

    #[test]
    fn constants_are_matched() {
        let c = Symbol::new("c");
        let p = match_constants(&parse("exp(x + c)").unwrap(), &[c.clone()], &parse("3*exp(x)").unwrap(), &Point::new(), 0.0, 0).unwrap();
        assert!((p[&c] - 3f64.ln()).abs() < 1e-10);
    }
}
