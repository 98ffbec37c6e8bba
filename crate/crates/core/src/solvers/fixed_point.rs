//! The fixed-point map `M_ρ`: given `U`, solve `δ²Ũ_j = δ²U_j + ρ F̂_j(U)` on
//! the interior nodes with the end values of `U` kept.
//!
//! Writing `A` for the interior second-difference matrix (negative definite,
//! `−2/h²` on the diagonal), the update is `A Ũ = A U + ρ G(U)`. The boundary
//! contributions of `Ũ` and `U` to the first and last rows are identical and
//! are moved to the right-hand side before the tridiagonal solve.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::tridiagonal_solve;
use super::{max_norm, History, SolveReport, SolveStatus};
use crate::assembly::DiscreteSystem;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::operators::verify::{check_ellipticity, VerifyOptions};
use crate::operators::{EllipticityBounds, LfWeights, OperatorKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rho {
    Auto,
    Fixed(f64),
}

impl fmt::Display for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rho::Auto => f.write_str("auto"),
            Rho::Fixed(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointOptions {
    pub rho: Rho,
    pub max_iters: usize,
    /// Stop when successive iterates differ by at most this in max-norm.
    pub tol: f64,
    /// Residual max-norm required to call the result converged.
    pub res_tol: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            rho: Rho::Auto,
            max_iters: 100_000,
            tol: 1e-12,
            res_tol: 1e-10,
        }
    }
}

/// Admissible step sizes for `M_ρ` under `−γ <= ∂F/∂p <= −1/γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoWindow {
    /// `ρ` below this keeps `M_ρ` monotone. Infinite when `2α + β2·γ <= 0`.
    pub monotone_max: f64,
    /// `ρ` at or above this makes `M_ρ` a ½-contraction; `None` when
    /// `β1 + β3 >= 1/γ²`.
    pub contraction_min: Option<f64>,
    pub feasible: bool,
}

impl RhoWindow {
    /// Midpoint of the feasible window, else `0.9 × monotone_max`.
    pub fn auto_rho(&self) -> Result<f64> {
        if !self.monotone_max.is_finite() {
            return Err(Error::InvalidConfig(
                "no finite monotonicity bound for rho; pass an explicit value".into(),
            ));
        }
        Ok(match (self.feasible, self.contraction_min) {
            (true, Some(lo)) => 0.5 * (lo + self.monotone_max),
            _ => 0.9 * self.monotone_max,
        })
    }
}

/// The monotone bound is `(2α + β2·γ)⁻¹`: the diagonal coefficient of `M_ρ`
/// in terms of the second differences is `1 + ρ(β2·∂F/∂p − 2α)`, which stays
/// nonnegative for all slopes down to `−γ` exactly under this bound.
pub fn rho_window(gamma: EllipticityBounds, w: &LfWeights) -> RhoWindow {
    let g = gamma.gamma();
    let [b1, b2, b3] = w.beta();
    let denom = 2.0 * w.alpha() + b2 * g;
    let monotone_max = if denom > 0.0 { 1.0 / denom } else { f64::INFINITY };
    let contraction_min = if b1 + b3 < 1.0 / (g * g) {
        Some(0.5 / (1.0 / g - (b1 + b3) * g))
    } else {
        None
    };
    let feasible = matches!(contraction_min, Some(lo) if lo < monotone_max);
    RhoWindow {
        monotone_max,
        contraction_min,
        feasible,
    }
}

fn require_lf(sys: &DiscreteSystem) -> Result<LfWeights> {
    match sys.config().kind {
        OperatorKind::LaxFriedrichs(w) => Ok(w),
        other => Err(Error::InvalidConfig(format!(
            "the fixed-point iteration needs a Lax-Friedrichs operator, got {other}"
        ))),
    }
}

/// `γ` from the argument, the problem's hint, or the sampled slope range on
/// the problem's declared box, in that order.
pub fn resolve_gamma(sys: &DiscreteSystem, gamma: Option<f64>) -> Result<EllipticityBounds> {
    if let Some(g) = gamma {
        return EllipticityBounds::new(g);
    }
    if let Some(g) = sys.problem().gamma_hint() {
        return Ok(g);
    }
    let sbox = sys.problem().sample_box().ok_or_else(|| {
        Error::InvalidConfig(format!("problem {} has no gamma hint or sample box", sys.problem().name()))
    })?;
    let rep = check_ellipticity(sys.problem().operator(), &sbox, &VerifyOptions::default());
    if !rep.property.passed {
        return Err(Error::InvalidConfig(format!(
            "problem {} is not elliptic on its sample box",
            sys.problem().name()
        )));
    }
    // uniform ellipticity fails when the slope touches zero; the upper
    // slope bound alone is what the monotone window uses
    EllipticityBounds::new(rep.gamma_hat.max(f64::MIN_POSITIVE))
}

fn interior_second_diff(v: &[f64], h2: f64) -> Vec<f64> {
    (1..v.len() - 1).map(|k| (v[k + 1] - 2.0 * v[k] + v[k - 1]) / h2).collect()
}

fn apply_map(sys: &DiscreteSystem, v: &[f64], g: &[f64], rho: f64) -> Result<Vec<f64>> {
    let n = v.len();
    let m = n - 2;
    let h2 = sys.grid().h().powi(2);
    let mut rhs = interior_second_diff(v, h2);
    for (r, gk) in rhs.iter_mut().zip(g) {
        *r += rho * gk;
    }
    rhs[0] -= v[0] / h2;
    rhs[m - 1] -= v[n - 1] / h2;
    let off = vec![1.0 / h2; m - 1];
    let diag = vec![-2.0 / h2; m];
    let inner = tridiagonal_solve(&off, &diag, &off, &rhs)?;
    let mut out = Vec::with_capacity(n);
    out.push(v[0]);
    out.extend(inner);
    out.push(v[n - 1]);
    Ok(out)
}

/// One application of `M_ρ` to a full grid function. The end values of `u`
/// are carried over unchanged, so `M_ρ(U + c) = M_ρ(U) + c` whenever `F`
/// does not depend on the value slot.
pub fn mrho_map(sys: &DiscreteSystem, u: &GridFunction, rho: f64) -> Result<GridFunction> {
    require_lf(sys)?;
    let g = sys.residual_unpinned(u.values())?;
    apply_map(sys, u.values(), &g, rho).map(GridFunction::from_vec_unchecked)
}

/// Iterates `M_ρ` from `u0` (boundary entries overwritten with the data).
/// Stops with `Converged` as soon as the residual is within `res_tol`; a
/// step below `tol` whose residual failed to drop gives `Stalled`.
pub fn mrho_solve(
    sys: &DiscreteSystem,
    u0: &GridFunction,
    opts: &FixedPointOptions,
    gamma: Option<f64>,
) -> Result<(GridFunction, SolveReport)> {
    let w = require_lf(sys)?;
    if u0.len() != sys.grid().len() {
        return Err(Error::LengthMismatch {
            expected: sys.grid().len(),
            got: u0.len(),
        });
    }
    let rho = match opts.rho {
        Rho::Fixed(r) if r.is_finite() && r > 0.0 => r,
        Rho::Fixed(r) => return Err(Error::InvalidConfig(format!("rho must be positive, got {r}"))),
        Rho::Auto => rho_window(resolve_gamma(sys, gamma)?, &w).auto_rho()?,
    };
    if opts.max_iters == 0 || !(opts.tol > 0.0) || !(opts.res_tol > 0.0) {
        return Err(Error::InvalidConfig("fixed-point tolerances and limits must be positive".into()));
    }

    let config = format!("{}; rho={rho}; {:?}", sys.config(), opts);
    let mut history = History::default();
    let mut step_norm = 0.0;
    let mut v = sys.pinned(u0).into_values();
    let report = |status, iterations, residual_norm, step_norm, history: History| SolveReport {
        status,
        iterations,
        residual_norm,
        step_norm,
        history: history.into_vec(),
        solver: "mrho",
        config: config.clone(),
    };
    let done = |v: Vec<f64>, rep: SolveReport| Ok((GridFunction::from_vec_unchecked(v), rep));

    for k in 0..opts.max_iters {
        let g = match sys.residual_unpinned(&v) {
            Ok(g) if g.iter().all(|x| x.is_finite()) => g,
            _ => return done(v, report(SolveStatus::NonFiniteResidual, k, f64::NAN, step_norm, history)),
        };
        let rn = max_norm(&g);
        history.push(rn);
        if rn <= opts.res_tol {
            return done(v, report(SolveStatus::Converged, k, rn, step_norm, history));
        }
        let next = match apply_map(sys, &v, &g, rho) {
            Ok(n) if n.iter().all(|x| x.is_finite()) => n,
            Ok(_) => return done(v, report(SolveStatus::NonFiniteResidual, k, rn, step_norm, history)),
            Err(_) => return done(v, report(SolveStatus::SingularLinearSolve, k, rn, step_norm, history)),
        };
        step_norm = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        // a tiny step alone is not failure: small rho makes steps tiny while the
        // residual still contracts, so stall only once the residual stops falling
        if step_norm <= opts.tol {
            let rn_next = match sys.residual_unpinned(&v) {
                Ok(g) => max_norm(&g),
                Err(_) => f64::NAN,
            };
            if !rn_next.is_finite() {
                history.push(rn_next);
                return done(v, report(SolveStatus::NonFiniteResidual, k + 1, rn_next, step_norm, history));
            }
            if rn_next > opts.res_tol && rn_next >= rn {
                history.push(rn_next);
                return done(v, report(SolveStatus::Stalled, k + 1, rn_next, step_norm, history));
            }
        }
    }
    let rn = sys.residual_unpinned(&v).map(|g| max_norm(&g)).unwrap_or(f64::NAN);
    done(v, report(SolveStatus::MaxIters, opts.max_iters, rn, step_norm, history))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeOptions {
    pub trials: usize,
    pub seed: u64,
    /// Interior perturbations are uniform in `±amplitude·h²`, so their
    /// second differences stay within `±4·amplitude`.
    pub amplitude: f64,
    /// Constant used for the shift-commutation check.
    pub shift: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 42,
            amplitude: 0.05,
            shift: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeReport {
    pub trials: usize,
    /// `max ‖M_ρU − M_ρV‖∞ / ‖U − V‖∞`.
    pub max_ratio: f64,
    /// Same ratio measured on interior second differences.
    pub max_ratio_second_diff: f64,
    /// `max ‖M_ρ(U + c) − M_ρ(U) − c‖∞`.
    pub commutation_defect: f64,
}

/// Samples pairs `U, V` around `base` (sharing its end values) and reports
/// how much `M_ρ` can stretch their distance.
pub fn nonexpansiveness_probe(
    sys: &DiscreteSystem,
    rho: f64,
    base: &GridFunction,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    require_lf(sys)?;
    let n = sys.grid().len();
    if base.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: base.len() });
    }
    let h2 = sys.grid().h().powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let perturbed = |rng: &mut ChaCha8Rng| {
        let mut v = base.values().to_vec();
        for x in &mut v[1..n - 1] {
            *x += opts.amplitude * h2 * rng.gen_range(-1.0..=1.0);
        }
        v
    };
    let map = |v: &[f64]| -> Result<Vec<f64>> {
        let g = sys.residual_unpinned(v)?;
        apply_map(sys, v, &g, rho)
    };
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };

    let mut rep = ProbeReport {
        trials: opts.trials,
        max_ratio: 0.0,
        max_ratio_second_diff: 0.0,
        commutation_defect: 0.0,
    };
    for _ in 0..opts.trials {
        let u = perturbed(&mut rng);
        let v = perturbed(&mut rng);
        let (mu, mv) = (map(&u)?, map(&v)?);
        let d_in = diff(&u, &v);
        let d_out = diff(&mu, &mv);
        let denom = max_norm(&d_in);
        if denom > 0.0 {
            rep.max_ratio = rep.max_ratio.max(max_norm(&d_out) / denom);
            let w_in = max_norm(&interior_second_diff(&d_in, h2));
            let w_out = max_norm(&interior_second_diff(&d_out, h2));
            if w_in > 0.0 {
                rep.max_ratio_second_diff = rep.max_ratio_second_diff.max(w_out / w_in);
            }
        }
        let shifted: Vec<f64> = u.iter().map(|x| x + opts.shift).collect();
        let ms = map(&shifted)?;
        let defect = ms
            .iter()
            .zip(&mu)
            .fold(0.0f64, |m, (a, b)| m.max((a - b - opts.shift).abs()));
        rep.commutation_defect = rep.commutation_defect.max(defect);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::SchemeConfig;
    use crate::grid::Grid;
    use crate::problems::{example1, Problem};
    use crate::solvers::{newton_solve, NewtonOptions};
    use approx::assert_abs_diff_eq;

    fn gamma(g: f64) -> EllipticityBounds {
        EllipticityBounds::new(g).unwrap()
    }

    #[test]
    fn window_examples() {
        let w = rho_window(gamma(1.0), &LfWeights::f2(1.0));
        assert_abs_diff_eq!(w.monotone_max, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.contraction_min.unwrap(), 0.5, epsilon = 1e-15);
        assert!(!w.feasible);
        assert_abs_diff_eq!(w.auto_rho().unwrap(), 0.3, epsilon = 1e-15);

        let w = rho_window(gamma(1.0), &LfWeights::f2(0.1));
        assert_abs_diff_eq!(w.monotone_max, 1.0 / 1.2, epsilon = 1e-15);
        assert!(w.feasible);
        assert_abs_diff_eq!(w.auto_rho().unwrap(), 0.5 * (0.5 + 1.0 / 1.2), epsilon = 1e-15);

        // β1 + β3 = 1/γ²
        let w = rho_window(gamma(2f64.sqrt()), &LfWeights::new(0.25, 0.5, 0.25, 1.0).unwrap());
        assert!(w.contraction_min.is_none() && !w.feasible);

        let w = rho_window(gamma(1.0), &LfWeights::f1(-1.0));
        assert!(w.monotone_max.is_infinite());
        assert!(w.auto_rho().is_err());
    }

    fn linear_problem() -> Problem {
        // −u'' − 2 = 0 with zero data: u = x(1 − x)
        Problem::new("lin", 0.0, 1.0, |p, _v, _x| -p - 2.0, 0.0, 0.0)
            .unwrap()
            .with_exact(|x| x * (1.0 - x))
            .unwrap()
    }

    fn system(problem: Problem, h: f64, w: LfWeights) -> DiscreteSystem {
        let (a, b) = problem.domain();
        DiscreteSystem::new(problem, Grid::with_spacing(a, b, h).unwrap(), SchemeConfig::new(OperatorKind::LaxFriedrichs(w)))
            .unwrap()
    }

    #[test]
    fn fixed_point_has_zero_residual() {
        let s = system(linear_problem(), 0.1, LfWeights::f2(0.1));
        let (u, rep) = mrho_solve(&s, &GridFunction::zeros(s.grid()), &FixedPointOptions::default(), Some(1.0)).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged, "{rep:?}");
        assert!(max_norm(&s.residual(&u).unwrap()) <= 1e-10);
        let again = mrho_map(&s, &u, 0.6).unwrap();
        assert!(max_norm(&again.sub(&u).into_values()) <= 1e-11);
    }

    #[test]
    fn godunov_is_rejected() {
        let p = example1();
        let grid = Grid::with_spacing(-1.0, 1.0, 0.1).unwrap();
        let s = DiscreteSystem::new(p, grid, SchemeConfig::new(OperatorKind::GodunovExt)).unwrap();
        let u = GridFunction::zeros(s.grid());
        assert!(matches!(mrho_solve(&s, &u, &FixedPointOptions::default(), Some(1.0)), Err(Error::InvalidConfig(_))));
        assert!(mrho_map(&s, &u, 0.1).is_err());
    }

    #[test]
    fn linear_class_contracts_in_feasible_window() {
        for w in [LfWeights::f2(0.1), LfWeights::f2(1.0), LfWeights::f1(1.0)] {
            let s = system(linear_problem(), 0.1, w);
            let win = rho_window(gamma(1.0), &w);
            let base = s.grid().sample(|x| x * (1.0 - x));
            let rho = 0.999 * win.monotone_max;
            let rep = nonexpansiveness_probe(&s, rho, &base, &ProbeOptions::default()).unwrap();
            assert!(rep.max_ratio <= 1.0 + 1e-8, "{w:?}: {rep:?}");
            assert!(rep.commutation_defect <= 1e-10);
            if let (true, Some(lo)) = (win.feasible, win.contraction_min) {
                for rho in [lo, 0.5 * (lo + win.monotone_max)] {
                    let rep = nonexpansiveness_probe(&s, rho, &base, &ProbeOptions::default()).unwrap();
                    assert!(rep.max_ratio <= 0.5 + 1e-8, "{rep:?}");
                }
            }
        }
    }

    #[test]
    fn example1_nonexpansive_in_second_differences() {
        let w = LfWeights::f2(1.5);
        let s = system(example1(), 0.1, w);
        let g = resolve_gamma(&s, None).unwrap();
        let rho = 0.9 * rho_window(g, &w).monotone_max;
        let base = s.grid().sample(|x| x * x * x / 6.0);
        let rep = nonexpansiveness_probe(&s, rho, &base, &ProbeOptions::default()).unwrap();
        assert!(rep.max_ratio_second_diff <= 1.0 + 1e-8, "{rep:?}");
        assert!(rep.commutation_defect <= 1e-10, "{rep:?}");
    }

    #[test]
    fn agrees_with_newton_on_example1() {
        let w = LfWeights::f2(1.5);
        let s = system(example1(), 0.1, w);
        let guess = s.grid().sample(|x| x / 6.0);
        let tight = FixedPointOptions { res_tol: 1e-12, ..Default::default() };
        let (um, rm) = mrho_solve(&s, &guess, &tight, Some(6.75)).unwrap();
        assert_eq!(rm.status, SolveStatus::Converged, "{:?}", (rm.iterations, rm.residual_norm));
        let nopts = NewtonOptions { res_tol: 1e-12, ..Default::default() };
        let (un, rn) = newton_solve(&s, &guess, &nopts).unwrap();
        assert_eq!(rn.status, SolveStatus::Converged);
        assert!(max_norm(&um.sub(&un).into_values()) <= 1e-8);
    }

    #[test]
    fn bad_rho_rejected() {
        let s = system(linear_problem(), 0.1, LfWeights::f2(0.1));
        let opts = FixedPointOptions { rho: Rho::Fixed(-1.0), ..Default::default() };
        assert!(mrho_solve(&s, &GridFunction::zeros(s.grid()), &opts, None).is_err());
    }

    #[test]
    fn stability_bound_for_nonnegative_source() {
        // −u'' = 0 ⇒ the discrete maximum principle keeps U within the data
        let p = Problem::new("harm", 0.0, 1.0, |p, _v, _x| -p, -0.3, 0.7).unwrap();
        let s = system(p, 0.05, LfWeights::f2(0.1));
        let (u, rep) = mrho_solve(&s, &GridFunction::zeros(s.grid()), &FixedPointOptions::default(), Some(1.0)).unwrap();
        assert!(rep.status.is_converged());
        assert!(u.max_norm() <= 0.7 + 1e-12);
    }
}
