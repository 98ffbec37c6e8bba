//! Mesh-refinement studies: initial guesses, error and order tables, and
//! CSV / plot-data output.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::{DiscreteSystem, SchemeConfig};
use crate::error::{Error, Result};
use crate::grid::{linf_error, Grid, GridFunction};
use crate::problems::{Problem, ScalarFn};
use crate::solvers::{mrho_solve, newton_solve, FixedPointOptions, NewtonOptions, SolveReport, SolveStatus};

#[derive(Clone)]
pub enum InitialGuess {
    /// Straight line through the boundary data.
    Linear,
    /// Solve on a grid of spacing `coarse_h` from the linear guess, then
    /// interpolate piecewise linearly.
    CoarseSolveInterpolate { coarse_h: f64, config: SchemeConfig },
    /// Nodal samples of a function.
    Custom { name: String, f: ScalarFn },
}

impl InitialGuess {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        InitialGuess::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for InitialGuess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialGuess::Linear => f.write_str("Linear"),
            InitialGuess::CoarseSolveInterpolate { coarse_h, config } => {
                write!(f, "CoarseSolveInterpolate({coarse_h}, {config})")
            }
            InitialGuess::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl fmt::Display for InitialGuess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialGuess::Linear => f.write_str("linear"),
            InitialGuess::CoarseSolveInterpolate { coarse_h, .. } => write!(f, "coarse:{coarse_h}"),
            InitialGuess::Custom { name, .. } => write!(f, "custom:{name}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverChoice {
    Newton(NewtonOptions),
    /// `gamma` feeds the automatic step size; `None` falls back to the
    /// problem's hint or a sampled estimate.
    Mrho { opts: FixedPointOptions, gamma: Option<f64> },
}

impl SolverChoice {
    pub fn solve(&self, sys: &DiscreteSystem, u0: &GridFunction) -> Result<(GridFunction, SolveReport)> {
        match self {
            SolverChoice::Newton(o) => newton_solve(sys, u0, o),
            SolverChoice::Mrho { opts, gamma } => mrho_solve(sys, u0, opts, *gamma),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Newton(_) => "newton",
            SolverChoice::Mrho { .. } => "mrho",
        }
    }
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice::Newton(NewtonOptions::default())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reference {
    #[default]
    Exact,
    Alternate,
}

impl Reference {
    pub fn function<'a>(&self, p: &'a Problem) -> Result<&'a (dyn Fn(f64) -> f64 + Send + Sync)> {
        match self {
            Reference::Exact => p.exact().ok_or(Error::MissingReference("exact")),
            Reference::Alternate => p.alternate_exact().ok_or(Error::MissingReference("alternate")),
        }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reference::Exact => "exact",
            Reference::Alternate => "alternate",
        })
    }
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub problem: Problem,
    pub scheme: SchemeConfig,
    pub solver: SolverChoice,
    pub guess: InitialGuess,
    /// Strictly decreasing spacings.
    pub h_list: Vec<f64>,
    pub reference: Reference,
}

impl StudyConfig {
    /// `h0` followed by `halvings` successive halvings, Newton, linear guess,
    /// errors against the exact solution.
    pub fn halvings(problem: Problem, scheme: SchemeConfig, h0: f64, halvings: usize) -> Self {
        Self {
            problem,
            scheme,
            solver: SolverChoice::default(),
            guess: InitialGuess::Linear,
            h_list: halving_sequence(h0, halvings),
            reference: Reference::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.h_list.is_empty() {
            return Err(Error::InvalidConfig("empty mesh list".into()));
        }
        if self.h_list.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidConfig("mesh sizes must be positive".into()));
        }
        if self.h_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig("mesh sizes must be strictly decreasing".into()));
        }
        self.reference.function(&self.problem)?;
        if let InitialGuess::CoarseSolveInterpolate { coarse_h, .. } = self.guess {
            if coarse_h < self.h_list[0] {
                return Err(Error::InvalidConfig(format!(
                    "coarse guess spacing {coarse_h} is finer than the study's first mesh {}",
                    self.h_list[0]
                )));
            }
        }
        Ok(())
    }

    /// One-line summary of everything that shapes the numbers.
    pub fn describe(&self) -> String {
        let strategy = DiscreteSystem::new(
            self.problem.clone(),
            Grid::new(self.problem.domain().0, self.problem.domain().1, 4).expect("domain already validated"),
            self.scheme,
        )
        .map(|s| s.strategy().to_string())
        .unwrap_or_default();
        format!(
            "# problem={} scheme={} extremum={} solver={} guess={} reference={}",
            self.problem.name(),
            self.scheme,
            strategy,
            self.solver.name(),
            self.guess,
            self.reference
        )
    }
}

pub fn halving_sequence(h0: f64, halvings: usize) -> Vec<f64> {
    (0..=halvings).map(|k| h0 / 2f64.powi(k as i32)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    Solver(SolveStatus),
    /// The coarse solve behind an interpolated guess did not converge.
    CoarseGuessFailed(SolveStatus),
}

impl RowStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, RowStatus::Solver(SolveStatus::Converged))
    }
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Solver(s) => write!(f, "{s}"),
            RowStatus::CoarseGuessFailed(s) => write!(f, "coarse-guess-failed:{s}"),
        }
    }
}

impl FromStr for RowStatus {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.strip_prefix("coarse-guess-failed:") {
            Some(rest) => rest.parse().map(RowStatus::CoarseGuessFailed),
            None => s.parse().map(RowStatus::Solver),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    /// NaN when no iterate was produced.
    pub linf_error: f64,
    /// `None` for the first row or when either error is not positive.
    pub order: Option<f64>,
    pub status: RowStatus,
    pub iterations: usize,
}

/// `log(e_coarse / e_fine) / log(h_coarse / h_fine)`.
pub fn observed_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Option<f64> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !(ok(e_coarse) && ok(e_fine) && ok(h_coarse) && ok(h_fine)) || h_coarse == h_fine {
        return None;
    }
    Some((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
}

fn linear_interpolant(grid: &Grid, problem: &Problem) -> GridFunction {
    let (a, b) = problem.domain();
    let (ua, ub) = problem.boundary();
    grid.sample(|x| ua + (ub - ua) * (x - a) / (b - a))
}

/// Piecewise-linear interpolation of nodal values on `from` at the nodes of `to`.
fn interpolate(from: &Grid, u: &GridFunction, to: &Grid) -> GridFunction {
    let n = from.len();
    to.sample(|x| {
        let mut s = ((x - from.a()) / from.h()).clamp(0.0, (n - 1) as f64);
        if (s - s.round()).abs() <= 1e-9 {
            s = s.round();
        }
        let k = (s.floor() as usize).min(n - 2);
        let t = s - k as f64;
        // exact at shared nodes
        if t == 0.0 {
            u.get(k + 1)
        } else {
            (1.0 - t) * u.get(k + 1) + t * u.get(k + 2)
        }
    })
}

/// Guess on `grid`; `Err(report)` inside `Ok` when a coarse solve failed.
pub fn build_initial_guess(
    guess: &InitialGuess,
    grid: &Grid,
    problem: &Problem,
    solver: &SolverChoice,
) -> Result<std::result::Result<GridFunction, SolveReport>> {
    Ok(Ok(match guess {
        InitialGuess::Linear => linear_interpolant(grid, problem),
        InitialGuess::Custom { f, .. } => grid.sample(|x| f(x)),
        InitialGuess::CoarseSolveInterpolate { coarse_h, config } => {
            let (a, b) = problem.domain();
            let coarse = Grid::with_spacing(a, b, *coarse_h)?;
            let sys = DiscreteSystem::new(problem.clone(), coarse.clone(), *config)?;
            let (uc, rep) = solver.solve(&sys, &linear_interpolant(&coarse, problem))?;
            if !rep.status.is_converged() {
                return Ok(Err(rep));
            }
            interpolate(&coarse, &uc, grid)
        }
    }))
}

/// Solution and report, or the report of a failed coarse solve.
pub type MeshOutcome = std::result::Result<(GridFunction, SolveReport), SolveReport>;

/// Solution on one mesh together with its report.
pub fn solve_on_mesh(cfg: &StudyConfig, h: f64) -> Result<(Grid, MeshOutcome)> {
    let (a, b) = cfg.problem.domain();
    let grid = Grid::with_spacing(a, b, h)?;
    let sys = DiscreteSystem::new(cfg.problem.clone(), grid.clone(), cfg.scheme)?;
    let u0 = match build_initial_guess(&cfg.guess, &grid, &cfg.problem, &cfg.solver)? {
        Ok(u0) => u0,
        Err(rep) => return Ok((grid, Err(rep))),
    };
    let out = cfg.solver.solve(&sys, &u0)?;
    Ok((grid, Ok(out)))
}

/// One row per mesh, coarsest first. Rows whose solve fails are kept with
/// their status; configuration errors abort the study.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    let reference = cfg.reference.function(&cfg.problem)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(cfg.h_list.len());
    for &h in &cfg.h_list {
        let (grid, outcome) = solve_on_mesh(cfg, h)?;
        let (linf, status, iterations) = match outcome {
            Ok((u, rep)) => (linf_error(&grid, &u, reference), RowStatus::Solver(rep.status), rep.iterations),
            Err(rep) => (f64::NAN, RowStatus::CoarseGuessFailed(rep.status), 0),
        };
        let order = rows
            .last()
            .and_then(|prev| observed_order(prev.linf_error, linf, prev.h, h));
        rows.push(ConvergenceRow {
            h,
            linf_error: linf,
            order,
            status,
            iterations,
        });
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "h,linf_error,order,status,iterations";

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_string(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let order = r.order.map(fmt_f).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", fmt_f(r.h), fmt_f(r.linf_error), order, r.status, r.iterations);
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_csv(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    write_file(path, &csv_string(rows))
}

pub fn parse_csv(text: &str) -> Result<Vec<ConvergenceRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header '{CSV_HEADER}'"),
            })
        }
    }
    let mut rows = Vec::new();
    for (k, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = k + 1;
        let bad = |msg: String| Error::Parse { line: line_no, msg };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", fields.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
        rows.push(ConvergenceRow {
            h: num(fields[0])?,
            linf_error: num(fields[1])?,
            order: if fields[2].trim().is_empty() { None } else { Some(num(fields[2])?) },
            status: fields[3].trim().parse().map_err(bad)?,
            iterations: fields[4].trim().parse().map_err(|e| bad(format!("'{}': {e}", fields[4])))?,
        });
    }
    Ok(rows)
}

/// Aligned text table in the layout `h | L∞ error | order | status | its`.
pub fn emit_table(rows: &[ConvergenceRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>12}  {:>12}  {:>6}  {:<22}  {:>5}", "h", "Linf error", "order", "status", "its");
    for r in rows {
        let order = r.order.map(|o| format!("{o:.2}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{:>12.4e}  {:>12.2e}  {:>6}  {:<22}  {:>5}",
            r.h,
            r.linf_error,
            order,
            r.status.to_string(),
            r.iterations
        );
    }
    s
}

/// Whitespace-separated `x value` pairs: the computed nodal series, then,
/// after a blank line, the exact solution at the same nodes if given.
pub fn plot_data_string(u: &GridFunction, grid: &Grid, exact: Option<&dyn Fn(f64) -> f64>) -> String {
    let mut s = String::from("# x computed\n");
    for j in 1..=grid.len() {
        let _ = writeln!(s, "{} {}", fmt_f(grid.x(j)), fmt_f(u.get(j)));
    }
    if let Some(f) = exact {
        s.push_str("\n# x exact\n");
        for j in 1..=grid.len() {
            let x = grid.x(j);
            let _ = writeln!(s, "{} {}", fmt_f(x), fmt_f(f(x)));
        }
    }
    s
}

pub fn emit_plot_data(u: &GridFunction, grid: &Grid, exact: Option<&dyn Fn(f64) -> f64>, path: &Path) -> Result<()> {
    write_file(path, &plot_data_string(u, grid, exact))
}
