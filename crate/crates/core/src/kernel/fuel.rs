//! Fuel: the budget that makes partial operations total.
//!
//! Everything in this library that searches — an application in a graph
//! model, a dialogue against an oracle, an unbounded minimization — is run
//! against a budget.  When the budget runs out the operation returns
//! [`PcaError::Exhausted`](crate::PcaError::Exhausted) instead of spinning
//! forever.  Budgets are deliberately coarse; they exist to terminate, not
//! to measure complexity.
//!
//! Two resources are metered separately because the models consume them
//! differently:
//!
//! * **stages** bound how far a staged set enumeration is forced.  Graph
//!   model application examines stage `s` of its arguments; the stage
//!   budget caps `s`.
//! * **steps** bound everything that loops: stream prefix reads, machine
//!   execution, dialogue rounds, dovetailed searches.
//!
//! Some operations translate one resource into the other.  A search for
//! "the stage at which `n` first appears in `X`" is a loop over stages, so
//! it charges steps per stage probed and additionally caps the stage it
//! will reach at roughly the square root of the step budget.  That mapping
//! keeps a single `Fuel` meaningful across both worlds and is fixed here so
//! every caller agrees on it.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{PcaError, Result};

/// An immutable fuel budget, as configured by a caller or the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fuel {
    /// Maximum enumeration stage any staged set will be forced to.
    pub stages: u64,
    /// Maximum number of loop iterations across the whole operation.
    pub steps: u64,
}

impl Fuel {
    /// A budget suitable for the bundled test corpora: generous enough for
    /// every witness in the acceptance suite, small enough to fail fast.
    pub const DESK: Fuel = Fuel { stages: 1 << 12, steps: 100_000 };

    pub const fn new(stages: u64, steps: u64) -> Fuel {
        Fuel { stages, steps }
    }

    /// Start metering a computation against this budget.
    pub fn meter(&self) -> Meter {
        Meter { stages: self.stages, steps: AtomicU64::new(self.steps) }
    }
}

impl Default for Fuel {
    fn default() -> Fuel {
        Fuel::DESK
    }
}

/// A live, shared countdown against a [`Fuel`] budget.
///
/// One `Meter` is threaded through an entire top-level operation (an
/// application, a dialogue, a suite case) so that nested searches draw from
/// the same pool and the total work stays bounded no matter how the
/// operation branches internally.
#[derive(Debug)]
pub struct Meter {
    stages: u64,
    steps: AtomicU64,
}

impl Meter {
    /// The stage ceiling for staged-set forcing under this meter.
    pub fn stage_limit(&self) -> u64 {
        self.stages
    }

    /// The stage ceiling for *searches over stages* (loops that force stage
    /// 0, 1, 2, ... looking for an appearance).  Each probed stage costs
    /// work proportional to the stage, so the reachable stage is capped at
    /// `min(stages, isqrt(steps remaining))` to keep such searches inside
    /// the step budget.
    pub fn search_stage_limit(&self) -> u64 {
        self.stages.min(self.steps.load(Ordering::Relaxed).isqrt())
    }

    /// Charge one loop iteration.  Returns `Exhausted` when the step budget
    /// is gone.
    pub fn tick(&self, what: &'static str) -> Result<()> {
        self.charge(1, what)
    }

    /// Charge `n` loop iterations at once.
    pub fn charge(&self, n: u64, what: &'static str) -> Result<()> {
        let prev = self.steps.fetch_sub(n, Ordering::Relaxed);
        if prev < n {
            self.steps.store(0, Ordering::Relaxed);
            return Err(PcaError::Exhausted(what));
        }
        Ok(())
    }

    /// Remaining step budget (approximate under concurrency, exact when
    /// single-threaded).
    pub fn steps_left(&self) -> u64 {
        self.steps.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meter_counts_down_and_exhausts() {
        let meter = Fuel::new(8, 3).meter();
        assert!(meter.tick("t").is_ok());
        assert!(meter.tick("t").is_ok());
        assert!(meter.tick("t").is_ok());
        assert_eq!(meter.tick("t"), Err(PcaError::Exhausted("t")));
        // Once exhausted, it stays exhausted.
        assert_eq!(meter.tick("t"), Err(PcaError::Exhausted("t")));
        assert_eq!(meter.steps_left(), 0);
    }

    #[test]
    fn charge_over_budget_exhausts_without_wrapping() {
        let meter = Fuel::new(8, 10).meter();
        assert!(meter.charge(7, "bulk").is_ok());
        assert_eq!(meter.charge(7, "bulk"), Err(PcaError::Exhausted("bulk")));
        assert_eq!(meter.steps_left(), 0);
    }

    #[test]
    fn search_stage_limit_is_sqrt_of_steps() {
        let meter = Fuel::new(1_000_000, 10_000).meter();
        assert_eq!(meter.search_stage_limit(), 100);
        // The stage ceiling still applies when it is the binding constraint.
        let meter = Fuel::new(5, 10_000).meter();
        assert_eq!(meter.search_stage_limit(), 5);
    }
}
