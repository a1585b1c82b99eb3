//! Command-line front end: `validate`, `plan`, `export-mps`, `report` and
//! `compare`.

use crate::model::{self, BuildOptions, MilpModel};
use crate::report::{self, PlanReport, ReportError};
use crate::scenario::{parse_scenario, validate, Scenario, ScenarioError, Severity};
use clap::{Args, Parser, Subcommand};
use hydroplan_milp::{check_feasibility, write_mps, MilpOptions, MilpResult, MilpStatus};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Plan tanker water distribution with a built-in MILP solver.
#[derive(Debug, Parser)]
#[command(name = "hydroplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario file and list every problem found.
    Validate { scenario: PathBuf },
    /// Build and solve the plan, then write the report files.
    Plan {
        scenario: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Force a facility off, as SOURCE:from-to (hours, inclusive).
        #[arg(long = "override", value_name = "SPEC")]
        overrides: Vec<String>,
        #[arg(long, default_value = "plan")]
        out: PathBuf,
    },
    /// Write the model in MPS form with a column name map.
    ExportMps {
        scenario: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "override", value_name = "SPEC")]
        overrides: Vec<String>,
        /// Directory receiving model.mps and names.csv.
        #[arg(long, default_value = "mps")]
        out: PathBuf,
    },
    /// Decode a stored solution vector against a scenario.
    Report {
        scenario: PathBuf,
        /// File of `name value` lines.
        #[arg(long)]
        solution: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "override", value_name = "SPEC")]
        overrides: Vec<String>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Solve the scenario with and without a forced-off window.
    Compare {
        scenario: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long = "override", value_name = "SPEC", required = true)]
        overrides: Vec<String>,
        #[arg(long, default_value = "compare")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Require whole-period product selection instead of fractions.
    #[arg(long)]
    integral_psl: bool,
    /// Leave out the hourly dispatch/return capacity recurrence.
    #[arg(long)]
    no_hourly_balance: bool,
    /// Charge inventory above target at the target penalty rate.
    #[arg(long)]
    penalize_target_excess: bool,
}

impl ModelArgs {
    fn options(&self) -> BuildOptions {
        BuildOptions {
            relax_psl: !self.integral_psl,
            hourly_fleet_balance: !self.no_hourly_balance,
            penalize_target_excess: self.penalize_target_excess,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Relative optimality gap at which the search stops.
    #[arg(long, default_value_t = 1e-3)]
    gap: f64,
    /// Wall-clock limit in seconds.
    #[arg(long, value_name = "SECONDS")]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Reproducible node order. The search is always serial, so this is the
    /// default and cannot be turned off.
    #[arg(long, default_value_t = true)]
    deterministic: bool,
    /// Emit a progress line every this many nodes.
    #[arg(long, default_value_t = 100)]
    progress_every: usize,
}

impl SolveArgs {
    fn options(&self) -> Result<MilpOptions, String> {
        if self.gap.is_nan() || self.gap < 0.0 {
            return Err(format!("--gap must be nonnegative, got {}", self.gap));
        }
        let time_limit = match self.time_limit {
            Some(s) if !s.is_finite() || s < 0.0 => {
                return Err(format!(
                    "--time-limit must be a nonnegative number, got {s}"
                ))
            }
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        Ok(MilpOptions {
            gap_target: self.gap,
            time_limit,
            node_limit: self.node_limit,
            deterministic: self.deterministic,
            progress_interval: self.progress_every.max(1),
            ..MilpOptions::default()
        })
    }
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => Failure::io(e.to_string()),
            ScenarioError::InvalidOverride(_) => Failure::usage(e.to_string()),
            _ => Failure::invalid(e.to_string()),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Io { .. } | ReportError::Csv { .. } => Failure::io(e.to_string()),
            _ => Failure::invalid(e.to_string()),
        }
    }
}

/// Runs the command line `argv` (program name first), writing results to
/// `out` and progress and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    if let Ok(v) = std::env::var("HYDROPLAN_THREADS") {
        log::info!("HYDROPLAN_THREADS={v}; the search runs on one thread");
    }
    let result = match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario, out),
        Command::Plan {
            scenario,
            model,
            solve,
            overrides,
            out: dir,
        } => cmd_plan(&scenario, &model, &solve, &overrides, &dir, out, err),
        Command::ExportMps {
            scenario,
            model,
            overrides,
            out: dir,
        } => cmd_export(&scenario, &model, &overrides, &dir, out),
        Command::Report {
            scenario,
            solution,
            model,
            overrides,
            out: dir,
        } => cmd_report(&scenario, &solution, &model, &overrides, &dir, out),
        Command::Compare {
            scenario,
            model,
            solve,
            overrides,
            out: dir,
        } => cmd_compare(&scenario, &model, &solve, &overrides, &dir, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::io(format!("{}: {e}", path.display()))
}

/// Parses and validates a scenario, then applies command-line overrides.
fn load(path: &Path, overrides: &[String], out: &mut dyn Write) -> Result<Scenario, Failure> {
    let mut sc = parse_scenario(path)?;
    let violations = validate(&sc);
    let errors = violations
        .iter()
        .filter(|v| v.severity == Severity::Error)
        .count();
    for v in &violations {
        let _ = writeln!(out, "{v}");
    }
    if errors > 0 {
        return Err(Failure::invalid(format!(
            "{}: {errors} validation error(s)",
            path.display()
        )));
    }
    for spec in overrides {
        let ov = sc
            .parse_override(spec)
            .map_err(|e| Failure::usage(e.to_string()))?;
        sc = sc
            .apply_override(ov)
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(sc)
}

fn build(sc: &Scenario, opts: BuildOptions) -> Result<MilpModel, Failure> {
    model::build(sc, opts).map_err(|e| Failure::invalid(format!("model construction failed: {e}")))
}

fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let sc = parse_scenario(path)?;
    let violations = validate(&sc);
    for v in &violations {
        let _ = writeln!(out, "{v}");
    }
    let errors = violations
        .iter()
        .filter(|v| v.severity == Severity::Error)
        .count();
    if errors > 0 {
        return Err(Failure::invalid(format!(
            "{}: {errors} error(s), {} warning(s)",
            path.display(),
            violations.len() - errors
        )));
    }
    let _ = writeln!(out, "{}: ok", path.display());
    Ok(())
}

fn solve(
    sc: &Scenario,
    model: &MilpModel,
    args: &SolveArgs,
    label: &str,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<MilpResult, Failure> {
    let opts = args.options().map_err(Failure::usage)?;
    let _ = writeln!(
        out,
        "{label}: {} rows, {} columns ({} binary)",
        model.num_rows(),
        model.num_cols(),
        model.num_binaries()
    );
    let result = model::solve(sc, model, &opts, &mut |p| {
        let _ = writeln!(err, "{p}");
    });
    let status = match result.status {
        MilpStatus::OptimalWithinGap => "optimal within gap",
        MilpStatus::Infeasible => "infeasible",
        MilpStatus::GapNotReached => "gap not reached at limit",
        MilpStatus::Unbounded => "unbounded",
    };
    let _ = writeln!(out, "{label}: status {status}");
    if let Some(obj) = result.objective {
        let _ = writeln!(
            out,
            "{label}: objective {obj:.6} bound {:.6} gap {:.4}% nodes {}",
            result.best_bound,
            result.gap * 100.0,
            result.nodes
        );
    }
    Ok(result)
}

fn write_plan(
    sc: &Scenario,
    model: &MilpModel,
    result: &MilpResult,
    dir: &Path,
) -> Result<Option<PlanReport>, Failure> {
    let Some(x) = &result.x else {
        return Ok(None);
    };
    let rep = report::extract(sc, model, result)?;
    report::write_outputs(&rep, dir)?;
    report::write_solution(&dir.join("solution.vec"), model, x)?;
    Ok(Some(rep))
}

fn print_costs(rep: &PlanReport, out: &mut dyn Write) {
    let costs = report::cost_breakdown(rep);
    for (k, &(key, _)) in report::COST_COMPONENTS.iter().enumerate() {
        let _ = writeln!(out, "  {key:<16} {:>18.2}", costs.components[k]);
    }
    let _ = writeln!(out, "  {:<16} {:>18.2}", "total", costs.total());
}

fn cmd_plan(
    path: &Path,
    margs: &ModelArgs,
    sargs: &SolveArgs,
    overrides: &[String],
    dir: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let sc = load(path, overrides, out)?;
    let model = build(&sc, margs.options())?;
    let result = solve(&sc, &model, sargs, "plan", out, err)?;
    if let Some(rep) = write_plan(&sc, &model, &result, dir)? {
        print_costs(&rep, out);
        let _ = writeln!(out, "plan written to {}", dir.display());
    }
    Ok(())
}

fn cmd_export(
    path: &Path,
    margs: &ModelArgs,
    overrides: &[String],
    dir: &Path,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let sc = load(path, overrides, out)?;
    let model = build(&sc, margs.options())?;
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let mps_path = dir.join("model.mps");
    let mut buf = Vec::new();
    write_mps(
        &mut buf,
        "HYDROPLAN",
        &model.mip,
        &model.col_names,
        &model.row_names,
    )
    .map_err(|e| Failure::invalid(e.to_string()))?;
    fs::write(&mps_path, buf).map_err(|e| io_failure(&mps_path, e))?;
    let names_path = dir.join("names.csv");
    let mut names = String::from("column,name,family,period\n");
    for (j, (id, name)) in model.vars.iter().zip(&model.col_names).enumerate() {
        let period = id.period().map(|t| t.to_string()).unwrap_or_default();
        names.push_str(&format!("{j},{name},{},{period}\n", id.family()));
    }
    fs::write(&names_path, names).map_err(|e| io_failure(&names_path, e))?;
    let _ = writeln!(
        out,
        "wrote {} ({} rows, {} columns) and {}",
        mps_path.display(),
        model.num_rows(),
        model.num_cols(),
        names_path.display()
    );
    Ok(())
}

fn cmd_report(
    path: &Path,
    solution: &Path,
    margs: &ModelArgs,
    overrides: &[String],
    dir: &Path,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let sc = load(path, overrides, out)?;
    let model = build(&sc, margs.options())?;
    let x = report::read_solution(solution, &model)?;
    let feas =
        check_feasibility(model.lp(), &x, 1e-6).map_err(|e| Failure::invalid(e.to_string()))?;
    let integral = x
        .iter()
        .zip(&model.mip.integer)
        .filter(|(v, &i)| i && (*v - v.round()).abs() > 1e-6)
        .count();
    let _ = writeln!(
        out,
        "feasible {} (max violation {:.3e}, {} fractional integer columns)",
        feas.is_feasible() && integral == 0,
        feas.max_violation(),
        integral
    );
    let rep = report::extract_values(&sc, &model, &x)?;
    let _ = writeln!(out, "objective {:.6}", rep.objective);
    report::write_outputs(&rep, dir)?;
    print_costs(&rep, out);
    let _ = writeln!(out, "report written to {}", dir.display());
    Ok(())
}

fn cmd_compare(
    path: &Path,
    margs: &ModelArgs,
    sargs: &SolveArgs,
    overrides: &[String],
    dir: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let base_sc = load(path, &[], out)?;
    let mut variant_sc = base_sc.clone();
    for spec in overrides {
        let ov = variant_sc
            .parse_override(spec)
            .map_err(|e| Failure::usage(e.to_string()))?;
        variant_sc = variant_sc
            .apply_override(ov)
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let opts = margs.options();
    let base_model = build(&base_sc, opts)?;
    let base = solve(&base_sc, &base_model, sargs, "base", out, err)?;
    let variant_model = build(&variant_sc, opts)?;
    let variant = solve(&variant_sc, &variant_model, sargs, "override", out, err)?;
    let (Some(bx), Some(vx)) = (&base.x, &variant.x) else {
        let _ = writeln!(out, "no comparison: a solve found no feasible plan");
        return Ok(());
    };
    let b = report::extract_values(&base_sc, &base_model, bx)?;
    let v = report::extract_values(&variant_sc, &variant_model, vx)?;
    let cmp = report::compare(&b, &v)?;
    report::write_comparison(&cmp, dir)?;
    report::write_solution(&dir.join("base").join("solution.vec"), &base_model, bx)?;
    report::write_solution(
        &dir.join("override").join("solution.vec"),
        &variant_model,
        vx,
    )?;
    for d in &cmp.costs {
        let _ = writeln!(
            out,
            "  {:<16} {:>18.2} {:>18.2} {:>+18.2}",
            d.key, d.base, d.variant, d.delta
        );
    }
    let _ = writeln!(out, "comparison written to {}", dir.display());
    Ok(())
}
