//! Root finding for the discrete system.

pub mod fixed_point;
pub mod linalg;
mod newton;

pub use fixed_point::{mrho_map, mrho_solve, nonexpansiveness_probe, rho_window, FixedPointOptions, ProbeOptions, ProbeReport, Rho, RhoWindow};
pub use linalg::{banded_lu_solve, tridiagonal_solve, BandMatrix};
pub use newton::{newton_solve, NewtonOptions};

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    LineSearchFailed,
    SingularLinearSolve,
    NonFiniteResidual,
    /// The step fell below tolerance while the residual did not.
    Stalled,
}

impl SolveStatus {
    pub const ALL: [SolveStatus; 6] = [
        SolveStatus::Converged,
        SolveStatus::MaxIters,
        SolveStatus::LineSearchFailed,
        SolveStatus::SingularLinearSolve,
        SolveStatus::NonFiniteResidual,
        SolveStatus::Stalled,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max-iters",
            SolveStatus::LineSearchFailed => "line-search-failed",
            SolveStatus::SingularLinearSolve => "singular-linear-solve",
            SolveStatus::NonFiniteResidual => "non-finite-residual",
            SolveStatus::Stalled => "stalled",
        }
    }

    pub fn is_converged(&self) -> bool {
        *self == SolveStatus::Converged
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        SolveStatus::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown solve status '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    /// Max-norm of the residual at the returned iterate.
    pub residual_norm: f64,
    /// Max-norm of the last accepted update.
    pub step_norm: f64,
    /// Residual max-norms, oldest first; only the most recent
    /// [`HISTORY_CAP`] entries are kept.
    pub history: Vec<f64>,
    pub solver: &'static str,
    pub config: String,
}

pub const HISTORY_CAP: usize = 10_000;

#[derive(Default)]
pub(crate) struct History(VecDeque<f64>);

impl History {
    pub(crate) fn push(&mut self, v: f64) {
        if self.0.len() == HISTORY_CAP {
            self.0.pop_front();
        }
        self.0.push_back(v);
    }

    pub(crate) fn into_vec(self) -> Vec<f64> {
        self.0.into()
    }
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    if v.iter().any(|x| x.is_nan()) {
        return f64::NAN;
    }
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
