//! Strategies and property bodies shared by the property suite and the acceptance runner.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError};

use solvstruct::jet::{lie_bracket, Chart, DifferentialForm, OdeProblem, VectorField};
use solvstruct::pipeline::{run_check, Options};
use solvstruct::problem::Problem;
use solvstruct::structure::SolvableStructure;
use solvstruct::symbolic::{eval_numeric, parse, simplify, Expr, Func, Point, Symbol, ZeroTest};
use solvstruct::symmetry::{evolutive_field, linearized_determining_residual, symmetry_verdict};

pub const CASES: u32 = 200;

pub fn config() -> Config {
    Config { cases: CASES, rng_seed: RngSeed::Fixed(0x5017_5eed), failure_persistence: None, ..Config::default() }
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{}.json", name))
}

pub fn chart() -> Chart {
    Chart::jet(3)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        prop::sample::select(vec!["x", "u", "u1", "u2"]).prop_map(Expr::sym),
        (-3i64..=3).prop_map(Expr::num),
    ]
}

/// Small expressions in the chart coordinates of `J²`, defined on the zero-test box.
pub fn expression() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 1i64..=3).prop_map(|(a, n)| Expr::pow(a, Expr::num(n))),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::exp(a / Expr::num(4))),
            inner.clone().prop_map(|a| Expr::ln(Expr::num(2) + Expr::pow(a, Expr::num(2)))),
            inner.prop_map(|a| Expr::one() / (Expr::num(3) + Expr::pow(a, Expr::num(2)))),
        ]
    })
}

pub fn one_form() -> impl Strategy<Value = DifferentialForm> {
    prop::collection::vec(expression(), 4).prop_map(|c| DifferentialForm::one_form(&chart(), c).unwrap())
}

pub fn field() -> impl Strategy<Value = VectorField> {
    prop::collection::vec(expression(), 4).prop_map(|c| VectorField::from_components(&chart(), c).unwrap())
}

/// Random expressions often blow up under normal-form simplification;
/// identities on them are settled by the numeric tier.
pub fn zero_test() -> ZeroTest {
    ZeroTest { work_budget: 20_000, ..ZeroTest::default() }
}

fn zero(f: &DifferentialForm, what: &str) -> Result<(), TestCaseError> {
    let v = f.verdict(&zero_test());
    prop_assert!(v.is_zero(), "{} is {}: {:?}", what, v, f.to_map());
    Ok(())
}

pub fn dd_zero(a: &DifferentialForm, g: &Expr) -> Result<(), TestCaseError> {
    zero(&a.exterior_derivative().exterior_derivative(), "d(d(alpha))")?;
    zero(&DifferentialForm::function(&chart(), g.clone()).exterior_derivative().exterior_derivative(), "d(d(g))")
}

/// `X ⌟ (α∧β) = (X ⌟ α)∧β + (−1)^p α∧(X ⌟ β)` for `α` of degree `p ∈ {1, 2}`.
pub fn antiderivation(x: &VectorField, a: &DifferentialForm, a2: &DifferentialForm, b: &DifferentialForm, two: bool) -> Result<(), TestCaseError> {
    let err = |e: solvstruct::Error| TestCaseError::fail(e.to_string());
    let (alpha, sign) = if two { (a.wedge(a2).map_err(err)?, Expr::one()) } else { (a.clone(), Expr::num(-1)) };
    let lhs = alpha.wedge(b).map_err(err)?.interior(x).map_err(err)?;
    let r1 = alpha.interior(x).map_err(err)?.wedge(b).map_err(err)?;
    let r2 = alpha.wedge(&b.interior(x).map_err(err)?).map_err(err)?.scale(&sign);
    zero(&lhs.sub(&r1.add(&r2).map_err(err)?).map_err(err)?, "antiderivation defect")
}

pub fn jacobi(x: &VectorField, y: &VectorField, z: &VectorField) -> Result<(), TestCaseError> {
    let fail = |e: solvstruct::Error| TestCaseError::fail(e.to_string());
    let br = |a: &VectorField, b: &VectorField| lie_bracket(a, b).map_err(fail);
    let (a, b, c) = (br(x, &br(y, z)?)?, br(y, &br(z, x)?)?, br(z, &br(x, y)?)?);
    let s = a.add(&b).and_then(|s| s.add(&c)).map_err(fail)?;
    let v = s.verdict(&zero_test());
    prop_assert!(v.is_zero(), "Jacobi sum is {}", v);
    Ok(())
}

pub struct Fixture {
    pub name: &'static str,
    pub problem: Problem,
    pub structure: SolvableStructure,
}

pub const STRUCTURED: [&str; 5] = ["example1", "example2", "example3", "example4", "example5"];

/// Fixture structures accepted by `check`, built once per process.
pub fn structures() -> &'static [Fixture] {
    static CELL: OnceLock<Vec<Fixture>> = OnceLock::new();
    CELL.get_or_init(|| {
        STRUCTURED
            .iter()
            .map(|name| {
                let problem = Problem::load(&fixture(name)).expect("fixture loads");
                let (report, st) = run_check(&problem, &Options::default()).expect("check runs");
                let structure = st.expect("structure present");
                assert!(report.pass && structure.report.accepted, "{} not verified", name);
                Fixture { name, problem, structure }
            })
            .collect()
    })
}

/// Random point near the fixture's first oracle start.
pub fn near_start(f: &Fixture, offsets: &[f64]) -> Point {
    let init = &f.problem.file.oracle.as_ref().expect("oracle block").inits[0];
    f.problem
        .chart
        .coords()
        .iter()
        .zip(offsets)
        .map(|(c, d)| (c.clone(), init[c.as_str()] + d))
        .collect()
}

/// `Yᵢ ⌟ ωⱼ = δᵢⱼ` and `Z ⌟ ωⱼ = 0`, evaluated at `p`.
pub fn duality_at(f: &Fixture, p: &Point) -> Result<(), TestCaseError> {
    let st = &f.structure;
    for j in 1..=st.ys.len() {
        let w = st.omega(j);
        let mut fields: Vec<(usize, &VectorField)> = vec![(0, &st.z)];
        fields.extend(st.ys.iter().enumerate().map(|(i, y)| (i + 1, y)));
        for (i, y) in fields {
            let c = w.interior(y).map_err(|e| TestCaseError::fail(e.to_string()))?.scalar();
            let Ok(v) = eval_numeric(&c, p) else {
                return Err(TestCaseError::reject("singular point"));
            };
            let want = if i == j { 1.0 } else { 0.0 };
            prop_assert!((v - want).abs() < 1e-8, "{}: field {} on omega{} = {} at {:?}", f.name, i, j, v, p);
        }
    }
    Ok(())
}

pub fn example1_ode() -> &'static OdeProblem {
    static CELL: OnceLock<OdeProblem> = OnceLock::new();
    CELL.get_or_init(|| OdeProblem::new(3, parse("u2^2*(u1^2 - 2*u*u2)/u1^4").unwrap()).unwrap())
}

pub const EXAMPLE1_PHIS: [&str; 5] = ["x*u1 - u", "u1", "x*u1^2 - 2*u*u1", "u1^2", "exp(1/u1)*u1^2"];

/// `Σ aᵢφᵢ + b·x`: a symmetry exactly when `b = 0`; both tests must say so.
pub fn linearized_matches_multivector(a: &[i64], b: i64) -> Result<(), TestCaseError> {
    let ode = example1_ode();
    let mut phi = Expr::num(b) * Expr::sym("x");
    for (ai, p) in a.iter().zip(EXAMPLE1_PHIS) {
        phi = phi + Expr::num(*ai) * parse(p).unwrap();
    }
    let zt = ZeroTest::default();
    let lin = zt.check(&linearized_determining_residual(&phi, ode));
    let field = evolutive_field(&phi, ode);
    let multi = symmetry_verdict(&field, &[ode.total_derivative_field()], &zt).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(lin.is_zero(), multi.is_zero(), "phi = {}: linearized {}, multivector {}", phi, lin, multi);
    prop_assert_eq!(lin.is_zero(), b == 0, "phi = {}: verdict {}", phi, lin);
    Ok(())
}

pub fn round_trip(e: &Expr) -> Result<(), TestCaseError> {
    let back = parse(&e.to_string()).map_err(|err| TestCaseError::fail(format!("{}: {}", e, err)))?;
    prop_assert_eq!(&back, e, "printed as {}", e);
    let s = simplify(e);
    prop_assert_eq!(simplify(&s), s.clone(), "simplify not idempotent on {}", e);
    Ok(())
}

pub fn symbol(s: &str) -> Symbol {
    Symbol::new(s)
}
