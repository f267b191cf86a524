//! Two-tier zero testing: exact normal form first, then seeded random points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::eval::Compiled;
use super::budget::within;
use super::expr::{Expr, Symbol};
use super::ratfunc::simplify;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroTier {
    Symbolic,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Zero(ZeroTier),
    NonZero,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Zero(ZeroTier::Symbolic) => write!(f, "zero (symbolic)"),
            Verdict::Zero(ZeroTier::Numeric) => write!(f, "zero (numeric)"),
            Verdict::NonZero => write!(f, "nonzero"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

impl Verdict {
    pub fn is_zero(self) -> bool {
        matches!(self, Verdict::Zero(_))
    }

    /// Conjunction: a refutation wins, then an inconclusive result, then the weaker tier.
    pub fn and(self, o: Verdict) -> Verdict {
        use Verdict::*;
        match (self, o) {
            (NonZero, _) | (_, NonZero) => NonZero,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            (Zero(ZeroTier::Numeric), _) | (_, Zero(ZeroTier::Numeric)) => Zero(ZeroTier::Numeric),
            _ => Zero(ZeroTier::Symbolic),
        }
    }

    pub fn all(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
        vs.into_iter().fold(Verdict::Zero(ZeroTier::Symbolic), Verdict::and)
    }

    pub fn tier(self) -> Option<ZeroTier> {
        match self {
            Verdict::Zero(t) => Some(t),
            _ => None,
        }
    }
}

/// Polynomial work units (term products and merges) allowed per symbolic check.
pub const WORK_BUDGET: u64 = 1_000_000;

/// Configuration of the numeric tier. The generator is seeded per call so
/// results never depend on call order.
#[derive(Clone, Debug)]
pub struct ZeroTest {
    pub seed: u64,
    pub points: usize,
    pub tol: f64,
    pub lo: f64,
    pub hi: f64,
    pub max_singular: usize,
    /// Polynomial work allowed to the symbolic tier before falling back to points.
    pub work_budget: u64,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest { seed: 0, points: 20, tol: 1e-10, lo: 0.5, hi: 2.0, max_singular: 50, work_budget: WORK_BUDGET }
    }
}

impl ZeroTest {
    pub fn with_seed(seed: u64) -> Self {
        ZeroTest { seed, ..Default::default() }
    }

    pub fn check(&self, e: &Expr) -> Verdict {
        if e.is_zero() {
            return Verdict::Zero(ZeroTier::Symbolic);
        }
        let Some(s) = within(self.work_budget, || simplify(e)) else {
            return self.numeric(e);
        };
        if s.is_zero() {
            return Verdict::Zero(ZeroTier::Symbolic);
        }
        if s.is_num() {
            return Verdict::NonZero;
        }
        self.numeric(e)
    }

    /// Numeric tier only. Tolerance is relative to the largest top-level term.
    pub fn numeric(&self, e: &Expr) -> Verdict {
        let vars: Vec<Symbol> = e.free_symbols().iter().cloned().collect();
        let terms = e.terms();
        let parts: Vec<Compiled> = match terms.iter().map(|t| Compiled::with_vars(t, &vars)).collect() {
            Ok(p) => p,
            Err(_) => return Verdict::Inconclusive,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_0000_u64);
        let mut accepted = 0;
        let mut singular_run = 0;
        let mut vals = vec![0.0; vars.len()];
        while accepted < self.points {
            for v in vals.iter_mut() {
                *v = rng.gen_range(self.lo..self.hi);
            }
            let mut sum = 0.0;
            let mut scale: f64 = 1.0;
            let mut ok = true;
            for p in &parts {
                match p.eval(&vals) {
                    Ok(t) => {
                        sum += t;
                        scale = scale.max(t.abs());
                    }
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                singular_run += 1;
                if singular_run > self.max_singular {
                    return Verdict::Inconclusive;
                }
                continue;
            }
            singular_run = 0;
            if sum.abs() > self.tol * scale {
                return Verdict::NonZero;
            }
            accepted += 1;
        }
        Verdict::Zero(ZeroTier::Numeric)
    }
}

/// Default-configured test.
pub fn is_zero(e: &Expr) -> Verdict {
    ZeroTest::default().check(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse::parse;

    #[test]
    fn tiers() {
        assert_eq!(is_zero(&parse("u1 - u1").unwrap()), Verdict::Zero(ZeroTier::Symbolic));
        assert_eq!(is_zero(&parse("x*u1 - u").unwrap()), Verdict::NonZero);
        let e = parse("sqrt(x)^2 - x").unwrap();
        assert!(is_zero(&e).is_zero());
        let e = parse("sin(x)^2 + cos(x)^2 - 1").unwrap();
        assert_eq!(is_zero(&e), Verdict::Zero(ZeroTier::Numeric));
    }

    #[test]
    fn everywhere_singular_is_inconclusive() {
        let e = parse("ln(-x - y)").unwrap();
        assert_eq!(is_zero(&e), Verdict::Inconclusive);
    }
}
