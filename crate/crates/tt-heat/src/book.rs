//! Runs every code block of the guide in `book/` as a doc-test, keeping the
//! narrative chapters and the library in sync.

#[doc = include_str!("../../../book/src/tensor-train.md")]
mod tensor_train {}

#[doc = include_str!("../../../book/src/dual-grid.md")]
mod dual_grid {}

#[doc = include_str!("../../../book/src/time-integration.md")]
mod time_integration {}

#[doc = include_str!("../../../book/src/benchmarks.md")]
mod benchmarks {}
