//! Numerical laboratory for output stability.
//!
//! Checks Lyapunov-type conditions for uniform and non-uniform asymptotic
//! output stability on ODE and time-delay systems, evaluates the explicit
//! uniform convergence-time bound `T(ε, R)`, classifies sampled signals under
//! the relaxed Barbălat lemma, and simulates adaptive controllers with a
//! redesign that restores uniform convergence.
//!
//! Every verdict is sampling-based: a pass means no violation was found among
//! the sampled states, trajectory knots and grid pairs, never a proof.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments, clippy::type_complexity, clippy::needless_range_loop)]

pub mod adaptive;
pub mod barbalat;
pub mod certificates;
pub mod convergence;
pub mod error;
mod hermite;
pub mod integrate;
pub mod systems;

pub use error::{Error, Result};
