//! Cooperative compute budgets.
//!
//! Long-running phases (enumeration, LP pricing, exact-cover search) poll a
//! [`Deadline`] at coarse intervals and abort with a budget error once it
//! passes. A lapsed budget is an expected outcome for oversized instances
//! and is always reported as data, never as a panic.

use std::time::{Duration, Instant};

/// A wall-clock cutoff. `Deadline::none()` never expires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Deadline {
        Deadline(None)
    }

    pub fn after(d: Duration) -> Deadline {
        Deadline(Some(Instant::now() + d))
    }

    pub fn at(t: Instant) -> Deadline {
        Deadline(Some(t))
    }

    pub fn expired(&self) -> bool {
        match self.0 {
            Some(t) => Instant::now() >= t,
            None => false,
        }
    }
}
