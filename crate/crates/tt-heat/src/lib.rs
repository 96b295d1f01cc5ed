//! Dual-grid finite-difference method for the 3D heat equation with a
//! low-rank tensor-train backend.
//!
//! The crate keeps two interchangeable representations of a grid function:
//! a dense array ([`field::DenseField3`]) and a three-core tensor train
//! ([`tt::TTTensor3`]). The dual-grid difference operators exist for both
//! ([`fg_ops`], [`tt_ops`]) and agree through densification, which makes the
//! dense path the correctness oracle for the compressed one. Time
//! integration ([`stepper`]) and the benchmark studies ([`study`]) are
//! generic over the two backends.
//!
//! A narrative guide with runnable examples lives in `book/` at the
//! repository root; its code blocks compile and run as doc-tests of this
//! crate.

pub mod cases;
pub mod error;
pub mod fg_ops;
pub mod field;
pub mod grid;
pub mod report;
pub mod stepper;
pub mod study;
pub mod svd;
pub mod tt;
pub mod tt_ops;

pub use cases::{CaseId, ManufacturedCase, Scenario};
pub use error::{Error, Result};
pub use field::{Centering, DenseField3};
pub use grid::{Axis, AxisKind, Grid3, GridAxis, InterpWeighting};
pub use stepper::{Backend, BcTimeConvention, Scheme, SolverConfig, VertexField};
pub use tt::TTTensor3;

#[cfg(doctest)]
mod book;
