//! Finite difference solvers for one-dimensional fully nonlinear elliptic
//! boundary value problems `F(u_xx, u, x) = 0` on `(a, b)` with Dirichlet data.
//!
//! The discrete scheme replaces `F` by a numerical operator `F̂` of the three
//! neighbouring second differences. Lax-Friedrichs-like operators add a
//! numerical moment `α(p1 − 2p2 + p3)` which, for `α` large enough, makes the
//! scheme monotone and selects the convex (viscosity) solution when the
//! continuous problem has several classical ones.
//!
//! ```
//! use nlfd::{harness, problems, assembly::SchemeConfig, operators::{LfWeights, OperatorKind}};
//!
//! let problem = problems::example1();
//! let cfg = SchemeConfig::new(OperatorKind::LaxFriedrichs(LfWeights::f1(1.5)));
//! let study = harness::StudyConfig::halvings(problem, cfg, 0.1, 1);
//! let rows = harness::run_study(&study).unwrap();
//! assert!(rows[1].linf_error < 6e-3);
//! ```

pub mod assembly;
pub mod cli;
pub mod error;
pub mod grid;
pub mod harness;
pub mod operators;
pub mod problems;
pub mod solvers;

pub use error::{Error, Result};
