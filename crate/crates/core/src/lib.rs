//! Simulation of Stieltjes dynamical systems `x′_g(t) = f(t, x(t))` driven
//! by a nondecreasing left-continuous derivator `g`, together with Lyapunov
//! stability certificates for their equilibria.
//!
//! The derivator mixes three regimes — smooth flow where `g` grows
//! continuously, instantaneous state jumps where `g` jumps, and frozen
//! dynamics on plateaus of `g` — and every piece of this crate is organized
//! around that trichotomy:
//!
//! - [`derivator`]: constructive representation of `g` (pieces + jump rule)
//!   with exact jump locations, plateau boundaries and interval measures.
//! - [`gcalc`]: Lebesgue–Stieltjes quadrature, the `g`-exponential
//!   `e_p(t, a)`, and the Grönwall a-priori bound.
//! - [`solver`]: fixed-step integration with exact jump updates and the
//!   maximal-solution termination alternatives.
//! - [`lyapunov`]: total `g`-derivative of a candidate along trajectories,
//!   sampled certificate checks for (uniform/asymptotic) stability, and
//!   empirical `δ(ε)`/`σ(ε)` probes.
//! - [`exprdsl`]: the small expression language scenario files use.
//! - [`scenarios`]: declarative configs, built-in systems, batch runs, CSV
//!   and report emission.
//!
//! Batch work (one task per trajectory) runs in parallel through `rayon`
//! when the default `parallel` feature is enabled; disabling it yields a
//! fully sequential build with identical outputs.

// `!(a <= b)` and friends are used on purpose: they reject NaN arguments
// that the suggested `partial_cmp` rewrites would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod derivator;
pub mod error;
pub mod exprdsl;
pub mod gcalc;
pub mod lyapunov;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
