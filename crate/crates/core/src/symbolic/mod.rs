//! Computer-algebra substrate: expressions, simplification, calculus and numerics.

pub mod budget;
pub mod eval;
pub mod expr;
pub mod integrate;
pub mod parse;
pub mod poly;
pub mod ratfunc;
pub mod solve;
pub mod subs;
pub mod upoly;
pub mod zero;

pub use expr::{rat, Expr, ExprKind, Func, Subst, Symbol};
pub use parse::{parse, parse_jet};
pub use ratfunc::simplify;
pub use subs::{diff, subs1, substitute};
pub use eval::{eval_numeric, Compiled, Point};
pub use integrate::{antiderivative, Integrator};
pub use solve::solve_for;
pub use zero::{is_zero, Verdict, ZeroTest, ZeroTier};
