use super::linalg::banded_lu_solve;
use super::{max_norm, History, SolveReport, SolveStatus};
use crate::assembly::DiscreteSystem;
use crate::error::{Error, Result};
use crate::grid::GridFunction;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub max_iters: usize,
    /// On the max-norm of the residual.
    pub res_tol: f64,
    /// Relative to `1 + ‖U‖∞`.
    pub step_tol: f64,
    /// Backtracking factor in `(0, 1)`.
    pub damping: f64,
    pub min_step: f64,
    pub armijo_c: f64,
    /// Relative Jacobian step; `None` uses the assembly default.
    pub fd_step: Option<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            res_tol: 1e-10,
            step_tol: 1e-12,
            damping: 0.5,
            min_step: 2f64.powi(-20),
            armijo_c: 1e-4,
            fd_step: None,
        }
    }
}

impl NewtonOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.res_tol, self.step_tol, self.min_step, self.armijo_c];
        if self.max_iters == 0 || positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("Newton tolerances and limits must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidConfig(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        Ok(())
    }
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn interior_update(u: &GridFunction, d: &[f64], t: f64) -> GridFunction {
    let mut out = u.clone();
    for (k, dk) in d.iter().enumerate() {
        out.set(k + 2, u.get(k + 2) + t * dk);
    }
    out
}

/// Damped Newton on the interior unknowns with a finite-difference band
/// Jacobian and Armijo backtracking on `½‖r‖²`. The boundary entries of
/// `u0` are overwritten with the boundary data and never change.
///
/// Non-convergence is reported through the status, not as an error; `Err`
/// is reserved for invalid options or mismatched input sizes.
pub fn newton_solve(sys: &DiscreteSystem, u0: &GridFunction, opts: &NewtonOptions) -> Result<(GridFunction, SolveReport)> {
    opts.validate()?;
    if u0.len() != sys.grid().len() {
        return Err(Error::LengthMismatch {
            expected: sys.grid().len(),
            got: u0.len(),
        });
    }
    let mut u = sys.pinned(u0);
    let mut history = History::default();
    let mut step_norm = 0.0;
    let config = format!("{}; {:?}", sys.config(), opts);

    let finish = |u: GridFunction, status, iterations, residual_norm, step_norm, history: History| {
        let report = SolveReport {
            status,
            iterations,
            residual_norm,
            step_norm,
            history: history.into_vec(),
            solver: "newton",
            config: config.clone(),
        };
        Ok((u, report))
    };

    let mut r = match sys.residual(&u) {
        Ok(r) if r.iter().all(|v| v.is_finite()) => r,
        _ => return finish(u, SolveStatus::NonFiniteResidual, 0, f64::NAN, step_norm, history),
    };
    let mut rn = max_norm(&r);
    history.push(rn);

    for k in 0..opts.max_iters {
        if rn <= opts.res_tol {
            return finish(u, SolveStatus::Converged, k, rn, step_norm, history);
        }
        let jac = match sys.jacobian_fd(&u, opts.fd_step) {
            Ok(j) => j,
            Err(_) => return finish(u, SolveStatus::NonFiniteResidual, k, rn, step_norm, history),
        };
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = match banded_lu_solve(&jac, &neg) {
            Ok(d) if d.iter().all(|v| v.is_finite()) => d,
            _ => return finish(u, SolveStatus::SingularLinearSolve, k, rn, step_norm, history),
        };

        let phi0 = half_sq(&r);
        let mut t = 1.0;
        let accepted = loop {
            let trial = interior_update(&u, &d, t);
            if let Ok(rt) = sys.residual(&trial) {
                if rt.iter().all(|v| v.is_finite()) && half_sq(&rt) <= (1.0 - 2.0 * opts.armijo_c * t) * phi0 {
                    break Some((trial, rt));
                }
            }
            t *= opts.damping;
            if t < opts.min_step {
                break None;
            }
        };
        let Some((trial, rt)) = accepted else {
            return finish(u, SolveStatus::LineSearchFailed, k, rn, step_norm, history);
        };

        step_norm = t * max_norm(&d);
        u = trial;
        r = rt;
        rn = max_norm(&r);
        history.push(rn);
        if rn <= opts.res_tol {
            return finish(u, SolveStatus::Converged, k + 1, rn, step_norm, history);
        }
        if step_norm <= opts.step_tol * (1.0 + u.max_norm()) {
            return finish(u, SolveStatus::Stalled, k + 1, rn, step_norm, history);
        }
    }
    finish(u, SolveStatus::MaxIters, opts.max_iters, rn, step_norm, history)
}
