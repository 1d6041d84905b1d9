//! The `perisolve` command line: certify, solve and reproduce.
//!
//! Exit codes: 0 success/PASS, 1 FAIL or Newton failure, 2 INCONCLUSIVE or a
//! failed a-posteriori check, 3 usage or configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::cases::{fit_harmonic, CaseStudy};
use crate::certify::{certify_all, CertificationReport, CertifyError, Verdict};
use crate::config::{ConfigError, ResolvedRun, RunConfig};
use crate::homotopy::{apriori_constants, verify_apriori, AprioriReport, HomotopyError, RBounds};
use crate::solver::{
    clamp_activity, continuation_solve, localize_check, original_residual, ClampActivity, ContinuationReport,
    LocalizationReport, Method, OriginalResidual, SolveError, StatePoint, Trajectory,
};
use crate::system::{manufactured_coefficients, Builtin, RhsError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Points of the shifted-bounds table in a reproduce bundle.
pub const SHIFT_TABLE_POINTS: usize = 1001;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Homotopy(#[from] HomotopyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Rhs(#[from] RhsError),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "perisolve",
    version,
    about = "Certify and compute periodic solutions of coupled second-order systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in system: example, vdp or manufactured_linear.
    #[arg(long, global = true)]
    pub builtin: Option<String>,
    /// Trajectory CSV (solve) or bundle directory (reproduce).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report JSON path.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Certification grid points in t.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Points on the continuation schedule.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Newton residual tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Integrator: rk4 or rk45.
    #[arg(long, global = true)]
    pub method: Option<Method>,
    /// Shooting segments.
    #[arg(long, global = true)]
    pub segments: Option<usize>,
    /// Solve without running certification first.
    #[arg(long, global = true)]
    pub skip_certify: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the lower/upper, monotonicity and Nagumo conditions.
    Certify,
    /// Compute the periodic solution by continuation.
    Solve,
    /// Regenerate the certification, shifted bounds and solution of a built-in case.
    Reproduce {
        /// example or vdp
        case: String,
    },
}

/// Command-line values that override the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub steps: Option<usize>,
    pub tol: Option<f64>,
    pub method: Option<Method>,
    pub segments: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, run: &mut ResolvedRun) -> Result<(), ConfigError> {
        if let Some(g) = self.grid {
            run.certification.grid_t = g;
        }
        if let Some(s) = self.steps {
            run.solver.steps = s;
        }
        if let Some(t) = self.tol {
            run.solver.tol = t;
        }
        if let Some(m) = self.method {
            run.solver.method = m;
        }
        if let Some(s) = self.segments {
            run.solver.segments = s;
        }
        run.certification.validate()?;
        run.solver.validate()
    }
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid: self.grid,
            steps: self.steps,
            tol: self.tol,
            method: self.method,
            segments: self.segments,
        }
    }

    fn resolve(&self) -> Result<ResolvedRun, CliError> {
        let cfg = match (&self.config, &self.builtin) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(_)) => RunConfig::default(),
            (None, None) => return Err(CliError::Usage("either --config or --builtin is required".into())),
        };
        let mut run = cfg.resolve(self.builtin.as_deref())?;
        self.overrides().apply(&mut run)?;
        Ok(run)
    }
}

pub fn verdict_exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Runs every certification condition. For built-in cases the report's
/// `bounds_note` also records where the shifted bounds differ from the
/// published ones.
pub fn run_certify(run: &ResolvedRun) -> Result<CertificationReport, CliError> {
    let mut report = certify_all(&run.system, &run.bounds, &run.env_f, &run.env_g, &run.certification)?;
    if let Some(case) = &run.case {
        let note = case.shift_discrepancy_note();
        if !note.is_empty() {
            report.bounds_note = format!("{}; shifted bounds: {note}", report.bounds_note);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AprioriSummary {
    /// `N*` from the original envelopes.
    pub n_base: (f64, f64),
    pub iterations: usize,
    pub settled: bool,
    /// `|z| < r1`, `|w| < r2`, `|z'| < N1`, `|w'| < N2` along the solution.
    pub check: Option<AprioriReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicFit {
    pub a: f64,
    pub b: f64,
    pub expected_a: f64,
    pub expected_b: f64,
    pub coefficient_error: f64,
    /// `sup |z − A cos − B sin − c|` over the samples.
    pub fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub system: String,
    pub converged: bool,
    pub reached_target: bool,
    pub lambda_mu_path: Vec<(f64, f64)>,
    pub last_good: Option<(f64, f64)>,
    pub residual: f64,
    pub failure: Option<String>,
    pub initial_state: Option<StatePoint>,
    pub r_bounds: RBounds,
    /// Derivative bounds of the auxiliary problem.
    pub n_star: (f64, f64),
    pub apriori: AprioriSummary,
    pub clamps_active: Option<bool>,
    pub clamp_activity: Option<ClampActivity>,
    pub localization: Option<LocalizationReport>,
    pub original_residual: Option<OriginalResidual>,
    pub z_std: Option<f64>,
    pub certification: Option<Verdict>,
    pub manufactured_fit: Option<HarmonicFit>,
    pub continuation: ContinuationReport,
    pub meta: Meta,
}

#[derive(Debug, Clone)]
pub struct SolveRun {
    pub summary: SolveSummary,
    pub trajectory: Option<Trajectory>,
    pub certification: Option<CertificationReport>,
}

/// 0 when the target was reached with inactive clamps and passing
/// localization, 1 when continuation failed, 2 otherwise.
pub fn solve_exit_code(s: &SolveSummary) -> i32 {
    if !s.converged || !s.reached_target {
        return EXIT_FAIL;
    }
    let localized = s.localization.as_ref().is_some_and(|l| l.pass);
    if s.clamps_active != Some(false) || !localized {
        return EXIT_INCONCLUSIVE;
    }
    EXIT_OK
}

/// Certifies (optionally), computes the a-priori constants, runs the
/// continuation and checks the result against the original system.
pub fn run_solve(run: &ResolvedRun, certify: bool) -> Result<SolveRun, CliError> {
    let certification = if certify { Some(run_certify(run)?) } else { None };
    solve_with(run, certification)
}

fn solve_with(run: &ResolvedRun, certification: Option<CertificationReport>) -> Result<SolveRun, CliError> {
    let apriori = apriori_constants(&run.system, &run.bounds, &run.env_f, &run.env_g, &run.constants)?;
    let cfg = run.solver.continuation();
    let outcome = continuation_solve(&run.system, &run.bounds, &run.solver.schedule()?, &cfg)?;
    let report = outcome.report;
    let trajectory = outcome.trajectory.map(|t| t.resample(run.solver.output_samples));

    let mut summary = SolveSummary {
        system: run.system.name().to_string(),
        converged: report.converged,
        reached_target: report.reached_target,
        lambda_mu_path: report.lambda_mu_path.clone(),
        last_good: report.last_good,
        residual: report.residual,
        failure: report.failure.clone(),
        initial_state: report.final_state,
        r_bounds: apriori.r.clone(),
        n_star: apriori.n_star,
        apriori: AprioriSummary {
            n_base: apriori.n_base,
            iterations: apriori.iterations,
            settled: apriori.settled,
            check: None,
        },
        clamps_active: None,
        clamp_activity: None,
        localization: None,
        original_residual: None,
        z_std: None,
        certification: certification.as_ref().map(|c| c.overall),
        manufactured_fit: None,
        continuation: report,
        meta: Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };
    if let Some(traj) = &trajectory {
        let clamps = clamp_activity(traj, &run.bounds);
        summary.clamps_active = Some(clamps.active);
        summary.clamp_activity = Some(clamps);
        summary.localization = Some(localize_check(traj, &run.bounds, apriori.n_base));
        summary.original_residual = Some(original_residual(traj, &run.system)?);
        summary.apriori.check = Some(verify_apriori(traj, &apriori.r, apriori.n_star));
        summary.z_std = Some(traj.z_std());
        if run.case.as_ref().map(|c| c.builtin) == Some(Builtin::ManufacturedLinear) {
            let (a, b, fit_residual) = fit_harmonic(traj);
            let (ea, eb) = manufactured_coefficients();
            summary.manufactured_fit = Some(HarmonicFit {
                a,
                b,
                expected_a: ea,
                expected_b: eb,
                coefficient_error: (a - ea).abs().max((b - eb).abs()),
                fit_residual,
            });
        }
    }
    Ok(SolveRun {
        summary,
        trajectory,
        certification,
    })
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    traj.write_csv(BufWriter::new(file)).map_err(|e| io_err(path, e))
}

/// `t,alpha1_0,beta1_0,alpha2_0,beta2_0` on `n` uniform points of `[0, T]`.
pub fn shifted_bounds_csv(run: &ResolvedRun, n: usize) -> String {
    let q = &run.bounds;
    let period = q.period();
    let mut out = String::from("t,alpha1_0,beta1_0,alpha2_0,beta2_0\n");
    for k in 0..n {
        let t = if k + 1 == n {
            period
        } else {
            period * k as f64 / (n - 1) as f64
        };
        let _ = writeln!(
            out,
            "{t},{},{},{},{}",
            q.alpha0(0).value(t),
            q.beta0(0).value(t),
            q.alpha0(1).value(t),
            q.beta0(1).value(t)
        );
    }
    out
}

pub fn certification_lines(report: &CertificationReport) -> String {
    let mut out = String::new();
    for c in &report.conditions {
        let _ = writeln!(
            out,
            "{:<16} {:<12} margin {:.6e}",
            c.name,
            c.verdict.as_str(),
            c.worst_margin + 0.0
        );
    }
    let _ = writeln!(out, "overall: {}", report.overall.as_str());
    out
}

pub fn solve_lines(s: &SolveSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "system: {}", s.system);
    let _ = writeln!(out, "converged: {} (target reached: {})", s.converged, s.reached_target);
    let _ = writeln!(out, "periodic residual: {:.3e}", s.residual);
    let _ = writeln!(
        out,
        "r = ({:.6}, {:.6}), N* = ({:.6}, {:.6})",
        s.r_bounds.r1, s.r_bounds.r2, s.n_star.0, s.n_star.1
    );
    if let Some((l, m)) = s.last_good {
        let _ = writeln!(out, "last accepted (lambda, mu): ({l}, {m})");
    }
    if let Some(f) = &s.failure {
        let _ = writeln!(out, "failure: {f}");
    }
    if let Some(c) = s.clamps_active {
        let _ = writeln!(out, "clamps active: {c}");
    }
    if let Some(l) = &s.localization {
        let _ = writeln!(
            out,
            "localization: {} (worst margin {:.3e})",
            if l.pass { "PASS" } else { "FAIL" },
            l.worst()
        );
    }
    if let Some(r) = &s.original_residual {
        let _ = writeln!(out, "original-system residual: {:.3e}", r.max);
    }
    if let Some(f) = &s.manufactured_fit {
        let _ = writeln!(
            out,
            "harmonic fit: A = {:.9}, B = {:.9} (error {:.3e})",
            f.a, f.b, f.coefficient_error
        );
    }
    out
}

fn reproduce_summary(case: &CaseStudy, cert: &CertificationReport, solve: &SolveSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "case: {}", case.name());
    let _ = writeln!(out, "\nshifted bounds (computed vs reference):");
    let comparison = case.shift_comparison();
    if comparison.is_empty() {
        let _ = writeln!(out, "  no reference values");
    }
    for c in &comparison {
        let _ = writeln!(
            out,
            "  {:<9} {:<8} computed {} | reference {}",
            c.name,
            if c.matches { "MATCH" } else { "DIFFERS" },
            c.computed,
            c.reference
        );
    }
    let _ = writeln!(out, "\ncertification:");
    for line in certification_lines(cert).lines() {
        let _ = writeln!(out, "  {line}");
    }
    let _ = writeln!(out, "\nsolve:");
    for line in solve_lines(solve).lines() {
        let _ = writeln!(out, "  {line}");
    }
    out
}

fn output_path(cli: Option<&PathBuf>, cfg: Option<&PathBuf>, default: &str) -> PathBuf {
    cli.or(cfg).cloned().unwrap_or_else(|| PathBuf::from(default))
}

pub fn cmd_certify(cli: &Cli) -> Result<i32, CliError> {
    let run = cli.resolve()?;
    let report = run_certify(&run)?;
    let path = output_path(cli.report.as_ref(), run.outputs.report.as_ref(), "report.json");
    write_json(&path, &report)?;
    print!("{}", certification_lines(&report));
    Ok(verdict_exit_code(report.overall))
}

pub fn cmd_solve(cli: &Cli) -> Result<i32, CliError> {
    let run = cli.resolve()?;
    let result = run_solve(&run, !cli.skip_certify)?;
    if let Some(cert) = &result.certification {
        print!("{}", certification_lines(cert));
    }
    let traj_path = output_path(cli.out.as_ref(), run.outputs.trajectory.as_ref(), "traj.csv");
    let report_path = output_path(cli.report.as_ref(), run.outputs.report.as_ref(), "solve.json");
    if let Some(traj) = &result.trajectory {
        write_trajectory(&traj_path, traj)?;
    }
    write_json(&report_path, &result.summary)?;
    print!("{}", solve_lines(&result.summary));
    Ok(solve_exit_code(&result.summary))
}

pub fn cmd_reproduce(cli: &Cli, case_name: &str) -> Result<i32, CliError> {
    let case = match case_name {
        "example" | "vdp" => CaseStudy::by_name(case_name).map_err(ConfigError::from)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown case `{other}` (expected example or vdp)"
            )))
        }
    };
    let mut run = RunConfig::builtin(case_name).resolve(None)?;
    cli.overrides().apply(&mut run)?;
    let dir = output_path(
        cli.out.as_ref(),
        run.outputs.dir.as_ref(),
        &format!("reproduce-{case_name}"),
    );
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let cert = run_certify(&run)?;
    write_json(&dir.join("certification.json"), &cert)?;
    write_text(
        &dir.join("shifted_bounds.csv"),
        &shifted_bounds_csv(&run, SHIFT_TABLE_POINTS),
    )?;
    let solved = solve_with(&run, Some(cert.clone()))?;
    if let Some(traj) = &solved.trajectory {
        write_trajectory(&dir.join("trajectory.csv"), traj)?;
    }
    write_json(&dir.join("solve.json"), &solved.summary)?;
    let summary = reproduce_summary(&case, &cert, &solved.summary);
    write_text(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    println!("bundle written to {}", dir.display());

    let codes = [verdict_exit_code(cert.overall), solve_exit_code(&solved.summary)];
    Ok(codes.into_iter().find(|&c| c != EXIT_OK).unwrap_or(EXIT_OK))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Certify => cmd_certify(&cli),
        Command::Solve => cmd_solve(&cli),
        Command::Reproduce { case } => cmd_reproduce(&cli, case),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
