//! Verification laboratory for Liouville-type properties of periodic and
//! almost periodic parabolic equations.
//!
//! The crate is split along the objects it manipulates:
//!
//! * [`exactfn`] builds the limit periodic drift `b = σ·z` and its companions
//!   (`σ`, `z`, `φₙ`, `ψₙ`, prefix integrals `F`, `B`) in exact rational
//!   arithmetic.
//! * [`counterexample`] evaluates the bounded, strictly increasing solution
//!   `u₂` of `u'' + b u' = 0` and checks every quantitative inequality behind
//!   its boundedness.
//! * [`almostperiod`] scans for ε-almost periods and probes precompactness of
//!   translates.
//! * [`spectra`] discretizes periodic operators `L = a∂² + b∂ + c` and computes
//!   the periodic principal eigenpair of `−L`.
//! * [`entire`] time-steps `∂ₜu = Lu + f` to realise bounded entire solutions
//!   as attractors or as limits of Dirichlet truncations.
//!
//! Data-parallel loops go through rayon when the `parallel` feature is on
//! (the default); every parallel reduction is ordered, so results do not
//! depend on the thread count.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod almostperiod;
pub mod counterexample;
pub mod entire;
mod error;
pub mod exactfn;
pub mod linalg;
mod par;
pub mod presets;
pub mod quadrature;
pub mod report;
pub mod spectra;

pub use error::{Error, Result};
pub use report::InequalityReport;
