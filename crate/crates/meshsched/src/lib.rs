//! Exact link scheduling for wireless mesh networks under the physical
//! (SINR) interference model.
//!
//! The crate answers one question end to end, with zero rounding: how much
//! transmission time does a set of wireless links need? It models networks
//! with exact decimal coordinates, enumerates every feasible matching (set
//! of links that can transmit simultaneously), computes the fractional and
//! integer chromatic indices of the instance by exact linear and integer
//! programming, and turns LP supports into concrete transmission schedules
//! whose per-link airtime shares are provably correct.
//!
//! # Modules
//!
//! * [`exact`]: exact decimals, rationals, and their text forms.
//! * [`simplex`]: exact two-phase simplex with dual values.
//! * [`net`]: network model, SINR, feasibility, instance generation.
//! * [`linkset`]: packed link-index sets.
//! * [`matching`]: feasible-matching enumeration and families.
//! * [`chromatic`]: fractional/integer chromatic indices, dual bounds.
//! * [`schedule`]: schedule construction, verification, comparison.
//! * [`sweep`]: reproducible parameter sweeps over random instances.
//! * [`budget`]: cooperative compute budgets.

pub mod budget;
pub mod chromatic;
pub mod exact;
pub mod linkset;
pub mod matching;
pub mod net;
pub mod schedule;
pub mod simplex;
pub mod sweep;

pub use budget::Deadline;
pub use chromatic::{
    classify, solve_dual_cutgen, solve_fractional, solve_integer, Classification,
    FractionalResult, IntegerResult, SeparationMode, Verdict,
};
pub use exact::{Dec, Rat};
pub use linkset::LinkSet;
pub use matching::{
    enumerate_feasible_matchings, family_from_explicit_list, screen_instance,
    FilterReason, InstanceScreen, Limits, MatchingFamily,
};
pub use net::{generate_network, Link, Network, Node, PhysParams};
pub use schedule::{
    build_schedule, compare_integer_schedule, verify_schedule, Schedule,
    ScheduleComparison, ScheduleViolation,
};
