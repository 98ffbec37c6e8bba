//! Numerical operators `F̂(p1, p2, p3, v, x)` built from a continuous
//! operator `F(p, v, x)`, where `p1, p2, p3` stand for the second differences
//! at nodes `j-1, j, j+1`.
//!
//! Two families are provided: the Lax-Friedrichs-like family, which adds an
//! explicit numerical moment `α(p1 - 2p2 + p3)` to `F` evaluated at a convex
//! combination of the three second differences, and the Godunov-like pair,
//! which take a case-dependent extremum of `F` over the interval spanned by
//! `p1, p2, p3`.

mod godunov;
mod lax_friedrichs;
pub mod verify;

pub use godunov::{godunov_ext, godunov_extr, interval_extremum, Extremum, ExtremumMode};
pub use lax_friedrichs::{alpha_lower_bound, lf_apply, numerical_moment};

use std::fmt;

use crate::error::{Error, Result};

/// Weights and moment coefficient of a Lax-Friedrichs-like operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LfWeights {
    beta: [f64; 3],
    alpha: f64,
}

impl LfWeights {
    /// Nonnegative `β` summing to one (within `1e-12`); `α` may be any real.
    pub fn new(beta1: f64, beta2: f64, beta3: f64, alpha: f64) -> Result<Self> {
        let beta = [beta1, beta2, beta3];
        if beta.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and nonnegative, got {beta:?}"
            )));
        }
        let sum: f64 = beta.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidWeights(format!("alpha must be finite, got {alpha}")));
        }
        Ok(Self { beta, alpha })
    }

    #[cfg(test)]
    pub(crate) fn new_unchecked(beta1: f64, beta2: f64, beta3: f64, alpha: f64) -> Self {
        Self {
            beta: [beta1, beta2, beta3],
            alpha,
        }
    }

    /// `F̂_1`: equal weights.
    pub fn f1(alpha: f64) -> Self {
        Self {
            beta: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            alpha,
        }
    }

    /// `F̂_2`: centre weight only. With `α = 0` this is the standard 3-point scheme.
    pub fn f2(alpha: f64) -> Self {
        Self {
            beta: [0.0, 1.0, 0.0],
            alpha,
        }
    }

    /// `F̂_3`: weights `(1/4, 1/2, 1/4)`.
    pub fn f3(alpha: f64) -> Self {
        Self {
            beta: [0.25, 0.5, 0.25],
            alpha,
        }
    }

    pub fn beta(&self) -> [f64; 3] {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }
}

/// Which numerical operator a scheme uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorKind {
    LaxFriedrichs(LfWeights),
    /// `F̂_4`
    GodunovExt,
    /// `F̂_5`
    GodunovExtr,
}

impl OperatorKind {
    /// Evaluates `F̂(p[0], p[1], p[2], v, x)`.
    pub fn apply<F>(
        &self,
        f: &F,
        p: [f64; 3],
        v: f64,
        x: f64,
        strategy: ExtremumStrategy,
    ) -> Result<f64>
    where
        F: Fn(f64, f64, f64) -> f64 + ?Sized,
    {
        match self {
            OperatorKind::LaxFriedrichs(w) => lf_apply(w, f, p[0], p[1], p[2], v, x),
            OperatorKind::GodunovExt => {
                godunov_ext(f, p[0], p[1], p[2], v, x, strategy).map(|e| e.value)
            }
            OperatorKind::GodunovExtr => {
                godunov_extr(f, p[0], p[1], p[2], v, x, strategy).map(|e| e.value)
            }
        }
    }

    pub fn is_lax_friedrichs(&self) -> bool {
        matches!(self, OperatorKind::LaxFriedrichs(_))
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::LaxFriedrichs(w) => {
                let [b1, b2, b3] = w.beta();
                write!(f, "lax-friedrichs(beta=[{b1}, {b2}, {b3}], alpha={})", w.alpha())
            }
            OperatorKind::GodunovExt => write!(f, "godunov-ext"),
            OperatorKind::GodunovExtr => write!(f, "godunov-extr"),
        }
    }
}

/// How the Godunov operators locate an extremum of `p ↦ F(p, v, x)` on an interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumStrategy {
    /// Compare `F(lo)` and `F(hi)` only. Exact when `F` is monotone in `p`.
    EllipticEndpoints,
    /// Evaluate at `intervals + 1` equispaced points, then refine by
    /// golden-section search around the best sample.
    Sampled { intervals: usize },
}

impl Default for ExtremumStrategy {
    fn default() -> Self {
        ExtremumStrategy::Sampled { intervals: 256 }
    }
}

impl fmt::Display for ExtremumStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtremumStrategy::EllipticEndpoints => write!(f, "elliptic-endpoints"),
            ExtremumStrategy::Sampled { intervals } => {
                write!(f, "sampled({intervals})+golden-section")
            }
        }
    }
}

/// `γ > 0` such that `-γ <= ∂F/∂p <= -1/γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticityBounds {
    gamma: f64,
}

impl EllipticityBounds {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

pub(crate) fn checked(value: f64, p: f64, v: f64, x: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { p, v, x })
    }
}
