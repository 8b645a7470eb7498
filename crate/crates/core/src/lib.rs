//! Desk-scale numerical checks for unbounded skew-symmetric operators and
//! their deficiency indices.
//!
//! The crate is organized bottom-up:
//!
//! * [`specfun`] Gamma and the modified Bessel function `K_ν` of real order.
//! * [`quad`] adaptive quadrature on finite and half-infinite intervals, and
//!   the Bessel integral identities as [`quad::IdentityReport`]s.
//! * [`cover`] points on the N-fold and infinite covers of the punctured
//!   plane, path lifting and winding numbers.
//! * [`flows`] the lifted translation groups acting on bump states.
//! * [`spectral`] angular-mode decomposition of the Laplacian on covers,
//!   defect spaces and limit-point/limit-circle classification.
//! * [`localexp`] exponentiation of local flows, deficiency indices of
//!   discretized `d/dx`, and commutation criteria for matrix generators.
//! * [`report`] and [`cli`] the report schema and command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cover;
mod error;
pub mod flows;
pub mod localexp;
pub mod quad;
pub mod report;
pub mod specfun;
pub mod spectral;

pub use error::{Error, Result};
