//! Command-line front end: `limit`, `solve`, `study` and `verify`.

pub mod config;
pub mod format;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::assembly::build_pencil;
use crate::eigensolve::{eigenvalue_bound, EigenOptions};
use crate::geometry::{make_geometry, Regime, ThinParams};
use crate::limit::gathered_spectrum;
use crate::mesh::{make_mesh, Levels};
use crate::study::{orthonormality_check, run_convergence_study, MeshPolicy};
use crate::verify::{run_all, Context, Fixture};

use config::{parse_omega, parse_regime, ConfigError, StudyFile};
use format::{error_svg, g9, rates_csv, report_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_BOUND: i32 = 4;

/// Environment variable capping the worker thread count.
pub const THREADS_VAR: &str = "THINSPECTRA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "thinspectra", version, about = "Limit and finite-element spectra of a thin two-cylinder multidomain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact limit eigenvalues with multiplicities and branch tags.
    Limit(LimitArgs),
    /// One finite-element eigen-solve at fixed (r, h).
    Solve(SolveArgs),
    /// Convergence study from a configuration file.
    Study(StudyArgs),
    /// Run the acceptance criteria.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Space dimension N (2 or 3).
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// `c,d` for N = 2; half-widths `wx,wy` for N = 3.
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<String>,
    /// finite, zero or infinite.
    #[arg(long)]
    regime: Option<String>,
    /// Volume ratio limit for the finite regime.
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Debug, Args)]
struct LimitArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Number of distinct eigenvalues.
    #[arg(long, default_value_t = 6)]
    count: usize,
    /// Also write the table to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Rod radius r.
    #[arg(long, default_value_t = 0.25)]
    r: f64,
    /// Slab thickness h; defaults to the regime's h(r).
    #[arg(long)]
    h: Option<f64>,
    /// Cells per axis.
    #[arg(long, default_value_t = 16)]
    m: usize,
    /// Grading ratio toward the junction patch (1 disables).
    #[arg(long, default_value_t = 0.5)]
    grading: f64,
    /// Number of eigenpairs.
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Eigensolver tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Use the dense reference solver instead of the iterative one.
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the file's `dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plot.svg.
    #[arg(long)]
    emit_svg: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Group (limit, fem, bound, solver) or criterion number.
    #[arg(long, default_value = "")]
    filter: String,
    /// Negative control: perturb q in the arccos closed form.
    #[arg(long, default_value_t = 0.0)]
    inject_q_shift: f64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    if let Err(e) = configure_threads(std::env::var(THREADS_VAR).ok().as_deref()) {
        let _ = writeln!(err, "{e}");
        return EXIT_CONFIG;
    }
    let result = match cli.command {
        Command::Limit(a) => cmd_limit(&a, out),
        Command::Solve(a) => cmd_solve(&a, out, err),
        Command::Study(a) => cmd_study(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            let _ = writeln!(err, "{e}");
            EXIT_CONFIG
        }
        Err(Failure::Exit(code, msg)) => {
            let _ = writeln!(err, "{msg}");
            code
        }
    }
}

enum Failure {
    Config(ConfigError),
    Exit(i32, String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn solver_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Exit(EXIT_SOLVER, format!("solver failure: {e}"))
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Exit(EXIT_CONFIG, format!("{}: {e}", path.display()))
}

/// Applies a worker cap from the environment, once per process.
pub fn configure_threads(value: Option<&str>) -> Result<(), ConfigError> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::new(THREADS_VAR, format!("`{v}` is not a positive integer")))?;
    // A pool built earlier in this process stays in place.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn problem(p: &ProblemArgs) -> Result<(crate::geometry::Geometry<f64>, Regime<f64>), ConfigError> {
    let omega = parse_omega(p.dim, p.omega.as_deref().ok_or_else(|| ConfigError::required("omega"))?)?;
    let regime = parse_regime(p.regime.as_deref().ok_or_else(|| ConfigError::required("regime"))?, p.q)?;
    let geometry = make_geometry(p.dim, omega).map_err(|e| ConfigError::new("omega", e.to_string()))?;
    Ok((geometry, regime))
}

fn cmd_limit(a: &LimitArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (geometry, regime) = problem(&a.problem)?;
    if a.count == 0 {
        return Err(ConfigError::new("count", "must be at least 1").into());
    }
    let spectrum = gathered_spectrum(regime, &geometry, a.count).map_err(solver_failure)?;
    let mut csv = String::from("index,lambda,multiplicity,branches\n");
    for (i, e) in spectrum.entries.iter().enumerate() {
        let branches: Vec<String> = e.branches.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(out, "{}({})  {}", g9(e.value), e.multiplicity, branches.join(" "));
        csv.push_str(&format!("{},{},{},{}\n", i + 1, g9(e.value), e.multiplicity, branches.join(" ")));
    }
    if let Some(path) = &a.csv {
        fs::write(path, csv).map_err(|e| io_failure(path, e))?;
    }
    Ok(EXIT_OK)
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let (geometry, regime) = problem(&a.problem)?;
    let h = a.h.unwrap_or_else(|| regime.thickness_for(geometry.dim(), a.r));
    let params = ThinParams::new(a.r, h).map_err(|e| ConfigError::new(if a.r > 0.0 && a.r < 1.0 { "h" } else { "r" }, e.to_string()))?;
    if a.m == 0 {
        return Err(ConfigError::new("m", "must be at least 1").into());
    }
    if a.k == 0 {
        return Err(ConfigError::new("k", "must be at least 1").into());
    }
    if !(a.grading > 0.0 && a.grading <= 1.0) {
        return Err(ConfigError::new("grading", "must lie in (0, 1]").into());
    }
    let levels = Levels::uniform(a.m);
    let policy = MeshPolicy { grading_ratio: a.grading, ..MeshPolicy::default() };
    let mesh = make_mesh(&geometry, levels, policy.grading_for(&geometry, levels, a.r))
        .map_err(|e| ConfigError::new("m", e.to_string()))?;
    let pencil = build_pencil(&mesh, &params).map_err(solver_failure)?;
    let spectrum = if a.oracle {
        pencil.dense_oracle().map(|s| s.truncated(a.k))
    } else {
        let mut opts = EigenOptions::default();
        if let Some(tol) = a.tol {
            opts.tol = tol;
        }
        pencil.smallest_eigenpairs(a.k.min(pencil.order()), &opts)
    }
    .map_err(solver_failure)?;
    let _ = writeln!(
        out,
        "# dim {} omega {} regime {} r {} h {} cells {} dofs {} solver {}",
        geometry.dim(),
        geometry.omega(),
        regime.name(),
        g9(params.r),
        g9(params.h),
        a.m,
        pencil.order(),
        if a.oracle { "dense" } else { "iterative" }
    );
    let _ = writeln!(out, "k,lambda,residual");
    for (i, (v, r)) in spectrum.values.iter().zip(&spectrum.residuals).enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, g9(*v), g9(*r));
    }
    let _ = writeln!(out, "# orthonormality deviation {}", g9(orthonormality_check(&spectrum.vectors, &pencil)));
    for (i, &v) in spectrum.values.iter().enumerate() {
        let bound = eigenvalue_bound::<f64>(i + 1);
        if !(v > 0.0 && v <= bound * (1.0 + 1e-12)) {
            let _ = writeln!(err, "BOUND_VIOLATION k={} lambda={} bound={}", i + 1, g9(v), g9(bound));
            return Ok(EXIT_BOUND);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_study(a: &StudyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let text = fs::read_to_string(&a.config).map_err(|e| io_failure(&a.config, e))?;
    let file = StudyFile::parse(&text)?;
    let dir = a.out.clone().unwrap_or_else(|| file.output_dir.clone());
    let report = run_convergence_study(&file.study).map_err(solver_failure)?;
    for w in report.warnings() {
        let _ = writeln!(err, "warning: {w}");
    }
    if !report.records.iter().any(|r| r.is_complete()) {
        return Err(Failure::Exit(EXIT_SOLVER, "solver failure: no member of the schedule was solved".into()));
    }
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let write = |name: &str, body: String| -> Result<PathBuf, Failure> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| io_failure(&path, e))?;
        Ok(path)
    };
    let mut written = vec![write("report.csv", report_csv(&report))?, write("rates.csv", rates_csv(&report))?];
    if a.emit_svg || file.emit_svg {
        written.push(write("plot.svg", error_svg(&report))?);
    }
    for rec in &report.records {
        if let Some(p) = rec.pairs.first() {
            let _ = writeln!(out, "n={} r={} dofs={} e_1={}", rec.n, g9(rec.params.r), rec.dofs, g9(p.error));
        }
    }
    for path in written {
        let _ = writeln!(out, "wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let ctx = Context::new(Fixture { closed_form_q_shift: a.inject_q_shift });
    let outcomes = run_all(&a.filter, &ctx);
    if outcomes.is_empty() {
        return Err(ConfigError::new("filter", format!("`{}` selects no criterion", a.filter)).into());
    }
    for o in &outcomes {
        let _ = writeln!(out, "{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let _ = writeln!(out, "{} passed, {failed} failed", outcomes.len() - failed);
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
