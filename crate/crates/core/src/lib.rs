//! Numerical laboratory for large deviations under sublinear expectations.
//!
//! The crate works with the distortion capacity `V = P(2 - P)` built on a
//! probability `P`, its Choquet upper expectation, and P-i.i.d. Bernoulli
//! sequences. Everything is computed exactly at finite `n` (binomial sums in
//! log-space, permutation cores, product-space enumeration) so that limit
//! statements can be checked at desk scale.
//!
//! Modules:
//! - [`capacity`]: finite spaces, distortion capacities, duality, Choquet
//!   integrals and the core of the dual capacity.
//! - [`coupling`]: the max-coupling form of the upper expectation and the
//!   negative dependence / identical distribution checkers.
//! - [`cgf`]: Bernoulli cumulant generating functions, the per-variable limit
//!   `Λ` and the exact finite-n approximants of `Γ`.
//! - [`fenchel`]: numerical Fenchel–Legendre conjugates, closed-form rate
//!   functions and exposed points.
//! - [`ldp_lab`]: finite-n capacity rates, the counterexample report and the
//!   upper-bound / Chernoff checks.
//! - [`suite`]: the cross-module invariant suite driven by a seed.

pub mod binomial;
pub mod capacity;
pub mod cgf;
pub mod coupling;
pub mod error;
pub mod extended;
pub mod fenchel;
pub mod grid;
pub mod ldp_lab;
pub mod numeric;
pub mod suite;

pub use error::{LabError, Result};
pub use extended::ExtendedReal;
pub use grid::GridSpec;
