//! Contractive interpolants for relaxed commutant lifting data.
//!
//! Given a lifting data set `{A, T', R, Q}` (with `A`, `T'` contractions and
//! `T'AR = AQ`, `R*R <= Q*Q`), every contractive interpolant is the image of a
//! Schur-class parameter under a Redheffer-type linear fractional map. This
//! crate computes, at finite dimension and finite Hardy truncation:
//!
//! * validated data sets, their defect operators and the unitary `omega`
//!   coupling the constraint spaces ([`dataset`]),
//! * state-space realizations of Schur-class parameters, their transfer
//!   functions and the structural identities they satisfy ([`realization`]),
//! * the solver mapping a parameter to the interpolant's Hardy-symbol Taylor
//!   coefficients, together with an exact coefficient-level verifier
//!   ([`redheffer`]),
//! * uniqueness and proper-parameterization diagnostics, and empirical
//!   parameter-collision experiments ([`analysis`]).
//!
//! The [`cli`] module backs the `liftlab` command-line binary; all file
//! formats are the JSON schemas of [`schema`].

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod numlin;
pub mod realization;
pub mod redheffer;
pub mod schema;

pub use config::{RunConfig, Tols};
pub use error::{Error, Result};
pub use numlin::{CMat, Frame};
