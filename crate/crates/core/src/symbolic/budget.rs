//! Work budget for normal-form computations that can blow up.

use std::cell::Cell;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};

thread_local! {
    static LEFT: Cell<Option<u64>> = const { Cell::new(None) };
}

struct Exhausted;

/// Charges `n` units of polynomial work against the running budget, if any.
pub(crate) fn charge(n: usize) {
    LEFT.with(|l| {
        if let Some(left) = l.get() {
            match left.checked_sub(n as u64) {
                Some(r) => l.set(Some(r)),
                None => {
                    l.set(None);
                    // no panic hook: this is an ordinary early exit
                    resume_unwind(Box::new(Exhausted));
                }
            }
        }
    })
}

/// Runs `f` with at most `units` of work; `None` if the budget runs out.
pub fn within<T>(units: u64, f: impl FnOnce() -> T) -> Option<T> {
    let outer = LEFT.with(|l| l.replace(Some(units)));
    let r = catch_unwind(AssertUnwindSafe(f));
    LEFT.with(|l| l.set(outer));
    match r {
        Ok(v) => Some(v),
        Err(p) if p.is::<Exhausted>() => None,
        Err(p) => resume_unwind(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhausts_and_restores() {
        assert_eq!(within(10, || 3), Some(3));
        assert_eq!(within(10, || (0..20).for_each(|_| charge(1))), None);
        assert_eq!(within(10, || within(5, || charge(6))), Some(None));
        charge(1_000_000);
    }
}
