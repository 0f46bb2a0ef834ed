//! Sparse recovery with quadratic-envelope penalties.
//!
//! This crate solves noisy underdetermined recovery problems
//! b = A·x0 + ε by minimizing penalty(x) + ‖Ax − b‖² with forward-backward
//! splitting, for five penalties: the ℓ1 norm, μ·card, the K-sparse
//! indicator, and the quadratic envelopes of the latter two. The envelopes
//! keep the flat geometry of their combinatorial originals while admitting
//! well-posed proximal steps, and they come with checkable optimality
//! theory: the [`certify`] module turns the relevant hypotheses — built on
//! exhaustively computed restricted linear-independence constants β_k from
//! [`constants`] — into machine-verified certificates that a computed point
//! is the unique global minimizer, or that the oracle (known-support
//! least-squares) solution is guaranteed recoverable.
//!
//! The accompanying `quadenv` binary drives instance generation, solving,
//! certification, constant tables, and the Monte-Carlo noise sweeps; the
//! `book/` directory walks through the concepts with runnable snippets
//! (mirrored here as doc-tests, see [`guide`]).
//!
//! # Quick start
//!
//! ```
//! use quadenv::model::{generate_sensing_matrix, generate_ground_truth, synthesize_measurements};
//! use quadenv::penalty::PenaltyKind;
//! use quadenv::solver::{fbs_solve, SolverConfig};
//!
//! let a = generate_sensing_matrix(40, 80, 7).unwrap();
//! let (x0, support) = generate_ground_truth(80, 5, (2.0, 4.0), 11.0, 8).unwrap();
//! let instance = synthesize_measurements(&a, &x0, 0.5, 9).unwrap();
//!
//! let kind = PenaltyKind::QuadEnvPk { k: 5 };
//! let result = fbs_solve(&a, &instance.b, &kind, &SolverConfig::default()).unwrap();
//! assert_eq!(result.support, support);
//! ```

pub mod certify;
pub mod constants;
pub mod error;
pub mod guide;
pub mod io;
pub mod model;
pub mod penalty;
pub mod solver;

pub use error::{Error, Result};
