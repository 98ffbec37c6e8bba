//! Command-line front end.
//!
//! Flags can also come from a `key = value` file (`--config`) or a named
//! preset (`--preset`); both expand to flags placed before the ones typed on
//! the command line, so explicit flags win.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::assembly::{DiscreteSystem, GhostPolicy, SchemeConfig};
use crate::error::Error;
use crate::grid::{linf_error, Grid};
use crate::harness::{
    csv_string, emit_table, halving_sequence, plot_data_string, run_study, solve_on_mesh, InitialGuess, Reference,
    SolverChoice, StudyConfig,
};
use crate::operators::verify::{check_consistency, check_ellipticity, check_gmonotonicity, VerifyOptions};
use crate::operators::{alpha_lower_bound, LfWeights, OperatorKind};
use crate::problems::{by_name, custom_guess, CUSTOM_GUESS_NAMES};
use crate::solvers::{FixedPointOptions, NewtonOptions, Rho};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "nlfd", version, about = "Finite difference solver for 1-D fully nonlinear elliptic BVPs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve on one mesh.
    #[command(args_override_self = true)]
    Solve(RunArgs),
    /// Mesh-refinement study with errors and observed orders.
    #[command(args_override_self = true)]
    Study(RunArgs),
    /// Sampled consistency, g-monotonicity and ellipticity checks.
    #[command(args_override_self = true)]
    Verify(RunArgs),
}

#[derive(clap::Args, Debug, Clone)]
struct RunArgs {
    /// example1 .. example5
    #[arg(long)]
    problem: Option<String>,
    /// lf1, lf2, lf3, lf (with --betas), godunov-ext, godunov-extr
    #[arg(long, default_value = "lf1")]
    scheme: String,
    /// Numerical moment coefficient
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    alpha: f64,
    /// Three weights for --scheme lf, e.g. 0.25,0.5,0.25
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    betas: Option<Vec<f64>>,
    /// linear-extrapolation or second-diff-constant
    #[arg(long, default_value = "linear-extrapolation")]
    ghost: String,
    /// newton or mrho
    #[arg(long, default_value = "newton")]
    solver: String,
    /// Fixed-point step: a positive number or "auto"
    #[arg(long)]
    rho: Option<String>,
    /// Ellipticity constant for the fixed-point step and the alpha bound
    #[arg(long)]
    gamma: Option<f64>,
    /// linear, coarse:<h>, custom:<name> (example4-cubic, exact, alternate)
    #[arg(long, default_value = "linear")]
    guess: String,
    /// Scheme for the coarse solve behind --guess coarse:<h>
    #[arg(long, default_value = "lf1")]
    coarse_scheme: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    coarse_alpha: f64,
    /// Mesh spacing (coarsest for studies)
    #[arg(long)]
    h: Option<f64>,
    /// Number of halvings after --h (studies; default 4)
    #[arg(long)]
    halvings: Option<usize>,
    /// Explicit comma-separated mesh list
    #[arg(long, value_delimiter = ',')]
    h_list: Option<Vec<f64>>,
    /// exact or alternate
    #[arg(long, default_value = "exact")]
    reference: String,
    /// Output path prefix
    #[arg(long)]
    out: Option<PathBuf>,
    /// table or csv
    #[arg(long, default_value = "table")]
    format: String,
    /// Named sweep, e.g. table1
    #[arg(long)]
    preset: Option<String>,
    /// key = value file mirroring the flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Samples per verifier
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Study,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
}

/// Validated command line.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub command: CommandKind,
    pub study: StudyConfig,
    pub gamma: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub samples: usize,
    pub seed: u64,
}

/// Why the command line could not be turned into a [`CliConfig`].
#[derive(Debug)]
pub enum CliError {
    /// `--help` / `--version` output, not an error.
    Display(String),
    Usage(String),
    Io(Error),
}

pub const PRESETS: [(&str, &str); 9] = [
    ("table1", "--problem example1 --scheme lf1 --alpha 1.5 --h 0.1 --halvings 4"),
    ("table3-alpha1", "--problem example2 --scheme lf1 --alpha 1 --h-list 0.1,0.05,0.025 --reference exact"),
    (
        "table3-alpha-minus1",
        "--problem example2 --scheme lf1 --alpha -1 --h-list 0.1,0.05,0.025 --reference alternate",
    ),
    (
        "table5",
        "--problem example2 --scheme godunov-ext --guess coarse:0.1 --coarse-scheme lf1 --coarse-alpha 1 --h-list 0.1,0.05,0.025,0.0125",
    ),
    (
        "table6",
        "--problem example2 --scheme lf2 --alpha 0 --guess coarse:0.1 --coarse-scheme lf1 --coarse-alpha -1 --h-list 0.1,0.05,0.025,0.0125 --reference alternate",
    ),
    ("table7-godunov", "--problem example3 --scheme godunov-ext --h-list 0.1,0.05,0.025"),
    ("table7-lf1", "--problem example3 --scheme lf1 --alpha 1 --h 0.1 --halvings 5"),
    ("table9", "--problem example4 --scheme lf1 --alpha 0.5 --h-list 0.1,0.05,0.025,0.0125"),
    ("table10", "--problem example5 --scheme lf1 --alpha 1.5 --h 0.1 --halvings 4"),
];

fn preset_flags(name: &str) -> Option<Vec<OsString>> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, flags)| flags.split_whitespace().map(OsString::from).collect())
}

/// Parses `key = value` lines (blank lines and `#` comments skipped) into flags.
pub fn config_file_flags(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", k + 1))?;
        let key = key.trim();
        if key == "config" {
            return Err(format!("config line {}: nested config files are not supported", k + 1));
        }
        out.push(OsString::from(format!("--{key}={}", value.trim())));
    }
    Ok(out)
}

fn find_flag_value(args: &[OsString], flag: &str) -> Option<String> {
    let eq = format!("{flag}=");
    let mut it = args.iter();
    let mut found = None;
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == flag {
            found = it.next().map(|v| v.to_string_lossy().into_owned());
        } else if let Some(v) = s.strip_prefix(&eq) {
            found = Some(v.to_string());
        }
    }
    found
}

/// Expands `--config` and `--preset` so that their flags precede the
/// explicit ones. Precedence: explicit flags, then config file, then preset.
fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    if argv.len() < 2 {
        return Ok(argv);
    }
    let (head, rest) = argv.split_at(2);
    let mut injected = Vec::new();
    let config_flags = match find_flag_value(rest, "--config") {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|source| {
                CliError::Io(Error::Io {
                    path: PathBuf::from(&path),
                    source,
                })
            })?;
            config_file_flags(&text).map_err(CliError::Usage)?
        }
        None => Vec::new(),
    };
    let preset = find_flag_value(rest, "--preset").or_else(|| find_flag_value(&config_flags, "--preset"));
    if let Some(name) = preset {
        let flags = preset_flags(&name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::Usage(format!("unknown preset '{name}' (known: {})", names.join(", ")))
        })?;
        injected.extend(flags);
    }
    injected.extend(config_flags);
    let mut out = head.to_vec();
    out.extend(injected);
    out.extend(rest.iter().cloned());
    Ok(out)
}

fn lf_kind(scheme: &str, alpha: f64, betas: Option<&[f64]>) -> Result<OperatorKind, String> {
    let w = match scheme {
        "lf1" => LfWeights::f1(alpha),
        "lf2" => LfWeights::f2(alpha),
        "lf3" => LfWeights::f3(alpha),
        "lf" => {
            let b = betas.ok_or("--scheme lf needs --betas b1,b2,b3")?;
            if b.len() != 3 {
                return Err(format!("--betas needs three values, got {}", b.len()));
            }
            LfWeights::new(b[0], b[1], b[2], alpha).map_err(|e| format!("--betas: {e}"))?
        }
        "godunov-ext" => return Ok(OperatorKind::GodunovExt),
        "godunov-extr" => return Ok(OperatorKind::GodunovExtr),
        other => {
            return Err(format!(
                "--scheme: unknown scheme '{other}' (expected lf1, lf2, lf3, lf, godunov-ext, godunov-extr)"
            ))
        }
    };
    if !alpha.is_finite() {
        return Err("--alpha must be finite".into());
    }
    Ok(OperatorKind::LaxFriedrichs(w))
}

fn build_config(cmd: CommandKind, a: RunArgs) -> Result<CliConfig, String> {
    let problem_name = a.problem.as_deref().ok_or("missing --problem")?;
    let problem = by_name(problem_name).map_err(|e| format!("--problem: {e}"))?;

    if a.betas.is_some() && a.scheme != "lf" {
        return Err("--betas is only valid with --scheme lf".into());
    }
    let kind = lf_kind(&a.scheme, a.alpha, a.betas.as_deref())?;
    let ghost = GhostPolicy::from_name(&a.ghost)
        .ok_or_else(|| format!("--ghost: unknown policy '{}' (expected linear-extrapolation, second-diff-constant)", a.ghost))?;
    let scheme = SchemeConfig::new(kind).with_ghost(ghost);

    if let Some(g) = a.gamma {
        if !(g.is_finite() && g > 0.0) {
            return Err(format!("--gamma must be positive, got {g}"));
        }
    }
    let solver = match a.solver.as_str() {
        "newton" => {
            if a.rho.is_some() {
                return Err("--rho is only valid with --solver mrho".into());
            }
            SolverChoice::Newton(NewtonOptions::default())
        }
        "mrho" => {
            if !kind.is_lax_friedrichs() {
                return Err(format!("--solver mrho needs a Lax-Friedrichs scheme, got {}", a.scheme));
            }
            let rho = match a.rho.as_deref() {
                None | Some("auto") => Rho::Auto,
                Some(s) => match s.parse::<f64>() {
                    Ok(r) if r.is_finite() && r > 0.0 => Rho::Fixed(r),
                    _ => return Err(format!("--rho: expected a positive number or 'auto', got '{s}'")),
                },
            };
            SolverChoice::Mrho {
                opts: FixedPointOptions { rho, ..Default::default() },
                gamma: a.gamma,
            }
        }
        other => return Err(format!("--solver: unknown solver '{other}' (expected newton, mrho)")),
    };

    let guess = if a.guess == "linear" {
        InitialGuess::Linear
    } else if let Some(h) = a.guess.strip_prefix("coarse:") {
        let coarse_h: f64 = h.parse().map_err(|_| format!("--guess: bad coarse spacing '{h}'"))?;
        let coarse_kind = lf_kind(&a.coarse_scheme, a.coarse_alpha, None).map_err(|e| format!("--coarse-scheme: {e}"))?;
        InitialGuess::CoarseSolveInterpolate {
            coarse_h,
            config: SchemeConfig::new(coarse_kind).with_ghost(ghost),
        }
    } else if let Some(name) = a.guess.strip_prefix("custom:") {
        match name {
            "exact" | "alternate" => {
                let r = if name == "exact" { Reference::Exact } else { Reference::Alternate };
                r.function(&problem).map_err(|e| format!("--guess: {e}"))?;
                let p = problem.clone();
                InitialGuess::custom(name, move |x| r.function(&p).expect("checked above")(x))
            }
            _ => {
                let f = custom_guess(name).ok_or_else(|| {
                    format!("--guess: unknown preset '{name}' (known: {}, exact, alternate)", CUSTOM_GUESS_NAMES.join(", "))
                })?;
                InitialGuess::custom(name, f)
            }
        }
    } else {
        return Err(format!("--guess: expected linear, coarse:<h> or custom:<name>, got '{}'", a.guess));
    };

    let h_list = match (&a.h_list, a.h, a.halvings) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err("--h-list cannot be combined with --h or --halvings".into());
        }
        (Some(list), None, None) => list.clone(),
        (None, h, halvings) => {
            let h = h.unwrap_or(0.1);
            let default_halvings = if cmd == CommandKind::Study { 4 } else { 0 };
            halving_sequence(h, halvings.unwrap_or(default_halvings))
        }
    };
    if cmd == CommandKind::Solve && h_list.len() != 1 {
        return Err("solve takes a single mesh; use study for several".into());
    }

    let reference = match a.reference.as_str() {
        "exact" => Reference::Exact,
        "alternate" => Reference::Alternate,
        other => return Err(format!("--reference: expected exact or alternate, got '{other}'")),
    };
    let format = match a.format.as_str() {
        "table" => Format::Table,
        "csv" => Format::Csv,
        other => return Err(format!("--format: expected table or csv, got '{other}'")),
    };
    if a.preset.is_some() && cmd != CommandKind::Study {
        return Err("--preset is only valid with study".into());
    }

    let study = StudyConfig {
        problem,
        scheme,
        solver,
        guess,
        h_list,
        reference,
    };
    study.validate().map_err(|e| e.to_string())?;
    Ok(CliConfig {
        command: cmd,
        study,
        gamma: a.gamma,
        out: a.out,
        format,
        samples: a.samples,
        seed: a.seed,
    })
}

pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv = expand(argv.into_iter().map(Into::into).collect())?;
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                CliError::Display(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    })?;
    let (cmd, args) = match cli.command {
        Cmd::Solve(a) => (CommandKind::Solve, a),
        Cmd::Study(a) => (CommandKind::Study, a),
        Cmd::Verify(a) => (CommandKind::Verify, a),
    };
    build_config(cmd, args).map_err(CliError::Usage)
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let cfg = match parse_args(argv) {
        Ok(c) => c,
        Err(CliError::Display(s)) => {
            let _ = write!(out, "{s}");
            return EXIT_OK;
        }
        Err(CliError::Usage(s)) => {
            let _ = writeln!(err, "error: {}", s.trim_end().trim_start_matches("error: "));
            return EXIT_USAGE;
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_IO;
        }
    };
    let result = match cfg.command {
        CommandKind::Solve => run_solve(&cfg, out),
        CommandKind::Study => run_study_cmd(&cfg, out),
        CommandKind::Verify => run_verify(&cfg, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            error_code(&e)
        }
    }
}

fn write_out(path: PathBuf, text: &str) -> Result<(), Error> {
    fs::write(&path, text).map_err(|source| Error::Io { path, source })
}

fn with_suffix(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn io(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn run_solve(cfg: &CliConfig, out: &mut dyn Write) -> Result<i32, Error> {
    let study = &cfg.study;
    let h = study.h_list[0];
    let (grid, outcome) = solve_on_mesh(study, h)?;
    writeln!(out, "{}", study.describe()).map_err(io)?;
    let (u, rep) = match outcome {
        Ok(pair) => pair,
        Err(rep) => {
            writeln!(out, "status: coarse-guess-failed:{}", rep.status).map_err(io)?;
            return Ok(EXIT_NOT_CONVERGED);
        }
    };
    let reference = study.reference.function(&study.problem).ok();
    writeln!(out, "h: {h:.4e}").map_err(io)?;
    writeln!(out, "status: {}", rep.status).map_err(io)?;
    writeln!(out, "iterations: {}", rep.iterations).map_err(io)?;
    writeln!(out, "residual: {:.3e}", rep.residual_norm).map_err(io)?;
    if let Some(f) = reference {
        writeln!(out, "linf_error ({}): {:.6e}", study.reference, linf_error(&grid, &u, f)).map_err(io)?;
    }
    if let Some(prefix) = &cfg.out {
        let exact: Option<&dyn Fn(f64) -> f64> = match reference {
            Some(f) => Some(f),
            None => None,
        };
        write_out(with_suffix(prefix, ".plot"), &plot_data_string(&u, &grid, exact))?;
    }
    Ok(if rep.status.is_converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn run_study_cmd(cfg: &CliConfig, out: &mut dyn Write) -> Result<i32, Error> {
    let rows = run_study(&cfg.study)?;
    let csv = csv_string(&rows);
    let table = emit_table(&rows);
    match cfg.format {
        Format::Table => {
            writeln!(out, "{}", cfg.study.describe()).map_err(io)?;
            write!(out, "{table}").map_err(io)?;
        }
        Format::Csv => write!(out, "{csv}").map_err(io)?,
    }
    if let Some(prefix) = &cfg.out {
        write_out(with_suffix(prefix, ".csv"), &csv)?;
        write_out(with_suffix(prefix, ".txt"), &format!("{}\n{table}", cfg.study.describe()))?;
    }
    Ok(if rows.iter().all(|r| r.status.is_converged()) {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run_verify(cfg: &CliConfig, out: &mut dyn Write) -> Result<i32, Error> {
    let problem = &cfg.study.problem;
    let sbox = problem
        .sample_box()
        .ok_or_else(|| Error::InvalidConfig(format!("problem {} declares no sample box", problem.name())))?;
    let (a, b) = problem.domain();
    let strategy = DiscreteSystem::new(problem.clone(), Grid::new(a, b, 4)?, cfg.study.scheme)?.strategy();
    let opts = VerifyOptions {
        samples: cfg.samples,
        seed: cfg.seed,
        strategy,
        ..Default::default()
    };
    let kind = cfg.study.scheme.kind;
    let f = problem.operator();
    writeln!(
        out,
        "# problem={} operator={} extremum={} box p=[{}, {}] v=[{}, {}] x=[{}, {}] samples={} seed={}",
        problem.name(),
        kind,
        strategy,
        sbox.p.0,
        sbox.p.1,
        sbox.v.0,
        sbox.v.1,
        sbox.x.0,
        sbox.x.1,
        cfg.samples,
        cfg.seed
    )
    .map_err(io)?;

    let cons = check_consistency(&kind, f, &sbox, &VerifyOptions { tol: 1e-12, ..opts });
    writeln!(out, "{} consistency max_defect={:.3e}", pass(cons.passed), cons.max_defect).map_err(io)?;
    let mono = check_gmonotonicity(&kind, f, &sbox, &opts);
    writeln!(out, "{} g-monotonicity max_defect={:.3e}", pass(mono.passed), mono.max_defect).map_err(io)?;
    for v in &mono.worst {
        writeln!(out, "  at (p1, p2, p3, v, x) = {:?}: {}", v.point, v.what).map_err(io)?;
    }
    let ell = check_ellipticity(f, &sbox, &opts);
    writeln!(
        out,
        "{} ellipticity gamma_hat={:.6} min_slope={:.6}",
        pass(ell.property.passed),
        ell.gamma_hat,
        ell.min_slope
    )
    .map_err(io)?;
    if let OperatorKind::LaxFriedrichs(w) = kind {
        let (gamma, source) = match cfg.gamma {
            Some(g) => (g, "--gamma"),
            None => (ell.gamma_hat, "sampled estimate"),
        };
        let bound = alpha_lower_bound(&w, gamma);
        writeln!(
            out,
            "alpha={} lower_bound={:.6} (gamma={:.6} from {}) {}",
            w.alpha(),
            bound,
            gamma,
            source,
            if w.alpha() > bound { "above" } else { "not above" }
        )
        .map_err(io)?;
    }
    let all = cons.passed && mono.passed && ell.property.passed;
    Ok(if all { EXIT_OK } else { EXIT_NOT_CONVERGED })
}
