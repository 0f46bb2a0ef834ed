//! The book chapters as doc-tests.
//!
//! mdbook does not run a book's code blocks against the crate, so each
//! chapter of `book/` is also attached here as module documentation; `cargo
//! test --doc` then compiles and runs every snippet, keeping the guide and
//! the library in sync.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/penalties.md")]
pub mod penalties {}

#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}

#[doc = include_str!("../../../book/src/certificates.md")]
pub mod certificates {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
