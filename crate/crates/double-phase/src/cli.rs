//! Command-line interface: `eig1`, `solve`, `scan`, `sweep-beta`, and
//! `check` subcommands over the library, with CSV/JSON reports.
//!
//! Reports go to stdout by default or to `--out PATH`, in `--format csv`
//! (default, 17-significant-digit floats) or `--format json`. Exit codes:
//! 0 success, 1 internal/check/io failure, 2 usage error, 3 non-convergence
//! (the report is still written), 4 infeasible lambda.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::eigen::{principal_eigenpair_raw, SolverOptions};
use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, DiscreteFunction, Mesh};
use crate::nehari::{solve, solve_coercive, SolveResult};
use crate::selftest::run_checks;
use crate::spectrum::{scan_lambda, sweep_beta};

/// Discrete double-phase eigenvalue toolkit.
#[derive(Debug, Parser)]
#[command(name = "dphase", version, about = "Double-phase eigenvalue problems on uniform grids")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Compute the principal r-eigenpair on a mesh.
    Eig1(Eig1Args),
    /// Minimize the double-phase energy at a fixed lambda.
    Solve(SolveArgs),
    /// Attempt solves over a lambda grid and locate the threshold.
    Scan(ScanArgs),
    /// Trace the solvable-set endpoint as beta varies.
    #[command(name = "sweep-beta")]
    SweepBeta(SweepArgs),
    /// Run the built-in invariant suite.
    Check(CheckArgs),
}

/// Report encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct MeshArgs {
    /// Spatial dimension; inferred from --n when omitted.
    #[arg(long)]
    dim: Option<usize>,
    /// Interior nodes per axis, comma separated in 2D (e.g. 15 or 8,8).
    #[arg(long, default_value = "15", value_delimiter = ',')]
    n: Vec<usize>,
    /// Domain extent per axis, comma separated; defaults to 1 per axis.
    #[arg(long, value_delimiter = ',')]
    extent: Option<Vec<f64>>,
}

impl MeshArgs {
    fn build(&self) -> Result<Mesh> {
        let dim = self.dim.unwrap_or(self.n.len());
        let extent = self.extent.clone().unwrap_or_else(|| vec![1.0; dim]);
        build_mesh(dim, &self.n, &extent)
    }
}

#[derive(Debug, Args)]
struct OptArgs {
    /// Relative decrease tolerance of the iteration.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration budget.
    #[arg(long = "max-iter", default_value_t = 50_000)]
    max_iter: usize,
    /// Seed for randomized initializations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of initializations on the minimization branches.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
}

impl OptArgs {
    fn build(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            restarts: self.restarts,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Report encoding.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Report path; written to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutputArgs {
    /// Writes the report to `--out` (echoing `human` to stdout) or dumps the
    /// report itself to stdout.
    fn emit<W: Write>(&self, report: &str, human: &str, out: &mut W) -> Result<()> {
        match &self.out {
            Some(path) => {
                write_text(path, report)?;
                if !human.is_empty() {
                    let _ = writeln!(out, "{human}");
                }
            }
            None => {
                let _ = write!(out, "{report}");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
struct Eig1Args {
    /// Exponent of the r-Laplacian (strictly greater than 1).
    #[arg(long, visible_alias = "q")]
    r: f64,
    #[command(flatten)]
    mesh: MeshArgs,
    #[command(flatten)]
    opts: OptArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Also write the eigenfunction nodal values as CSV here.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Weight of the p-term.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Weight of the q-term.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// First exponent.
    #[arg(long)]
    p: f64,
    /// Second exponent; the branch is chosen by the order of p and q.
    #[arg(long)]
    q: f64,
    /// Spectral parameter.
    #[arg(long)]
    lambda: f64,
    /// Flux regularization used inside first-order descent.
    #[arg(long = "eps-reg")]
    eps_reg: Option<f64>,
    #[command(flatten)]
    mesh: MeshArgs,
    #[command(flatten)]
    opts: OptArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Also write the minimizer nodal values as CSV here.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    /// Lower end of the lambda grid.
    #[arg(long = "lambda-min")]
    lambda_min: f64,
    /// Upper end of the lambda grid.
    #[arg(long = "lambda-max")]
    lambda_max: f64,
    /// Number of uniform grid points.
    #[arg(long = "lambda-steps", default_value_t = 11)]
    lambda_steps: usize,
    #[command(flatten)]
    mesh: MeshArgs,
    #[command(flatten)]
    opts: OptArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    /// Beta values in (0, 1), comma separated.
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", value_delimiter = ',')]
    betas: Vec<f64>,
    /// How many eigenvalues of the beta = 1 limit to report (needs q = 2).
    #[arg(long = "K", visible_alias = "k", default_value_t = 5)]
    k: usize,
    #[command(flatten)]
    mesh: MeshArgs,
    #[command(flatten)]
    opts: OptArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

/// Parses `args` (including the program name) and runs the request,
/// returning the process exit code.
pub fn run<W: Write, E: Write>(args: &[String], out: &mut W, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    let outcome = match cli.cmd {
        Cmd::Eig1(a) => cmd_eig1(&a, out),
        Cmd::Solve(a) => cmd_solve(&a, out),
        Cmd::Scan(a) => cmd_scan(&a, out),
        Cmd::SweepBeta(a) => cmd_sweep(&a, out),
        Cmd::Check(a) => cmd_check(&a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) => 2,
        Error::NonConvergence { .. } => 3,
        Error::InfeasibleLambda { .. } => 4,
        _ => 1,
    }
}

/// CSV float formatting: fixed scientific with 17 significant digits, which
/// round-trips every f64.
fn csv_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn n_label(n: &[usize]) -> String {
    n.iter().map(ToString::to_string).collect::<Vec<_>>().join("x")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Node dump CSV: `index,x[,y],value` with 1-based indices.
fn dump_csv(u: &DiscreteFunction) -> String {
    let two_d = u.mesh.dim == 2;
    let mut s = String::from(if two_d { "index,x,y,value\n" } else { "index,x,value\n" });
    for (k, v) in u.values.iter().enumerate() {
        let [x, y] = u.mesh.node_coords(k);
        if two_d {
            s.push_str(&format!("{},{},{},{}\n", k + 1, csv_f64(x), csv_f64(y), csv_f64(*v)));
        } else {
            s.push_str(&format!("{},{},{}\n", k + 1, csv_f64(x), csv_f64(*v)));
        }
    }
    s
}

fn mesh_json(mesh: &Mesh) -> serde_json::Value {
    serde_json::json!({ "dim": mesh.dim, "n": mesh.n, "extent": mesh.extent, "h": mesh.h })
}

fn cmd_eig1<W: Write>(a: &Eig1Args, out: &mut W) -> Result<i32> {
    let mesh = a.mesh.build()?;
    let opts = a.opts.build();
    let (pair, converged) = principal_eigenpair_raw(&mesh, a.r, &opts)?;
    let report = match a.output.format {
        Format::Csv => format!(
            "r,n,dim,lam1,residual,iters\n{},{},{},{},{},{}\n",
            a.r,
            n_label(&mesh.n),
            mesh.dim,
            csv_f64(pair.lam1),
            csv_f64(pair.residual),
            pair.iterations
        ),
        Format::Json => {
            let v = serde_json::json!({
                "mesh": mesh_json(&mesh),
                "r": pair.r,
                "lam1": pair.lam1,
                "iterations": pair.iterations,
                "residual": pair.residual,
                "converged": converged,
                "u1": pair.u1.values,
            });
            format!("{v}\n")
        }
    };
    let human = format!(
        "lam1 = {:.12} (r = {}, n = {}, {} iterations, residual {:.3e})",
        pair.lam1,
        a.r,
        n_label(&mesh.n),
        pair.iterations,
        pair.residual
    );
    a.output.emit(&report, &human, out)?;
    if let Some(path) = &a.dump {
        write_text(path, &dump_csv(&pair.u1))?;
    }
    if !converged {
        let _ = writeln!(out, "warning: residual tolerance not met; the report was still written");
        return Ok(3);
    }
    Ok(0)
}

fn solve_summary_csv(r: &SolveResult) -> String {
    format!(
        "branch,m_lambda,constraint_residual,weak_residual,iterations,converged,sign_changes\n{},{},{},{},{},{},{}\n",
        r.branch,
        csv_f64(r.m_lambda),
        csv_f64(r.constraint_residual),
        csv_f64(r.weak_residual),
        r.iterations,
        r.converged,
        r.sign_changes
    )
}

fn cmd_solve<W: Write>(a: &SolveArgs, out: &mut W) -> Result<i32> {
    let mesh = a.mesh.build()?;
    let opts = a.opts.build();
    let mut params = EnergyParams::new(a.alpha, a.beta, a.p, a.q, a.lambda)?;
    if let Some(eps) = a.eps_reg {
        params = params.with_eps(eps)?;
    }
    let result =
        if a.p < a.q { solve(&params, &mesh, &opts)? } else { solve_coercive(&params, &mesh, &opts)? };
    let report = match a.output.format {
        Format::Csv => solve_summary_csv(&result),
        Format::Json => {
            let v = serde_json::json!({
                "mesh": mesh_json(&mesh),
                "params": params,
                "result": result,
            });
            format!("{v}\n")
        }
    };
    let human = format!(
        "branch = {}, m_lambda = {:.12e}, weak residual = {:.3e}, constraint = {:.3e}, {} iterations",
        result.branch, result.m_lambda, result.weak_residual, result.constraint_residual,
        result.iterations
    );
    a.output.emit(&report, &human, out)?;
    if let Some(path) = &a.dump {
        write_text(path, &dump_csv(&result.u_hat))?;
    }
    if !result.converged {
        let _ = writeln!(out, "warning: residual tolerance not met; the report was still written");
        return Ok(3);
    }
    Ok(0)
}

fn cmd_scan<W: Write>(a: &ScanArgs, out: &mut W) -> Result<i32> {
    let mesh = a.mesh.build()?;
    let opts = a.opts.build();
    if a.lambda_steps < 2 || !(a.lambda_min < a.lambda_max) {
        return Err(Error::InvalidParameter(
            "the grid needs lambda-min < lambda-max and lambda-steps >= 2".into(),
        ));
    }
    let grid: Vec<f64> = (0..a.lambda_steps)
        .map(|i| {
            a.lambda_min
                + (a.lambda_max - a.lambda_min) * i as f64 / (a.lambda_steps - 1) as f64
        })
        .collect();
    let scan = scan_lambda(a.alpha, a.beta, a.p, a.q, &mesh, &grid, &opts)?;

    let report = match a.output.format {
        Format::Csv => {
            let mut s = String::from("lambda,feasible,m_lambda,weak_residual,error\n");
            for r in &scan.rows {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    csv_f64(r.lambda),
                    r.feasible,
                    r.m_lambda.map(csv_f64).unwrap_or_default(),
                    r.weak_residual.map(csv_f64).unwrap_or_default(),
                    r.error.as_deref().unwrap_or("").replace(',', ";"),
                ));
            }
            s.push_str(&format!("# threshold_predicted,{}\n", csv_f64(scan.threshold_predicted)));
            s.push_str(&format!(
                "# threshold_estimate,{}\n",
                scan.threshold_estimate.map(csv_f64).unwrap_or_else(|| "none".into())
            ));
            for an in &scan.anomalies {
                s.push_str(&format!("# anomaly,{}\n", an.replace(',', ";")));
            }
            s
        }
        Format::Json => {
            let v = serde_json::json!({ "mesh": mesh_json(&mesh), "scan": scan });
            format!("{v}\n")
        }
    };
    let feasible = scan.rows.iter().filter(|r| r.feasible).count();
    let human = format!(
        "{} of {} lambdas feasible; threshold predicted {:.9e}, estimated {}",
        feasible,
        scan.rows.len(),
        scan.threshold_predicted,
        scan.threshold_estimate.map(|t| format!("{t:.9e}")).unwrap_or_else(|| "n/a".into())
    );
    a.output.emit(&report, &human, out)?;
    for an in &scan.anomalies {
        let _ = writeln!(out, "anomaly: {an}");
    }
    Ok(0)
}

fn cmd_sweep<W: Write>(a: &SweepArgs, out: &mut W) -> Result<i32> {
    let mesh = a.mesh.build()?;
    let opts = a.opts.build();
    let sweep = sweep_beta(a.p, a.q, &mesh, &a.betas, a.k, &opts)?;
    let report = match a.output.format {
        Format::Csv => {
            let mut s = String::from("beta,alpha,endpoint\n");
            for e in &sweep.entries {
                s.push_str(&format!(
                    "{},{},{}\n",
                    csv_f64(e.beta),
                    csv_f64(e.alpha),
                    csv_f64(e.endpoint)
                ));
            }
            for (i, lam) in sweep.linear_spectrum_at_one.iter().enumerate() {
                s.push_str(&format!("# lam_hat_{},{}\n", i + 1, csv_f64(*lam)));
            }
            s
        }
        Format::Json => {
            let v = serde_json::json!({ "mesh": mesh_json(&mesh), "sweep": sweep });
            format!("{v}\n")
        }
    };
    let last = sweep.entries.last().expect("validated non-empty");
    let mut human = format!(
        "{} betas; endpoint at beta = {} is {:.9e}",
        sweep.entries.len(),
        last.beta,
        last.endpoint
    );
    if let Some(lam1) = sweep.linear_spectrum_at_one.first() {
        human.push_str(&format!(
            "; beta = 1 spectrum starts at {:.9e} (gap {:.3e})",
            lam1,
            lam1 - last.endpoint
        ));
    }
    a.output.emit(&report, &human, out)?;
    Ok(0)
}

fn cmd_check<W: Write>(a: &CheckArgs, out: &mut W) -> Result<i32> {
    let outcomes = run_checks(a.seed);
    let mut lines = String::new();
    let mut failures = 0usize;
    for o in &outcomes {
        if o.passed {
            lines.push_str(&format!("ok {}\n", o.name));
        } else {
            failures += 1;
            lines.push_str(&format!("FAIL {}: {}\n", o.name, o.detail));
        }
    }
    lines.push_str(&format!("{}/{} checks passed\n", outcomes.len() - failures, outcomes.len()));
    match &a.output.out {
        Some(path) => {
            let report = match a.output.format {
                Format::Csv => {
                    let mut s = String::from("name,passed,detail\n");
                    for o in &outcomes {
                        s.push_str(&format!(
                            "{},{},{}\n",
                            o.name,
                            o.passed,
                            o.detail.replace(',', ";")
                        ));
                    }
                    s
                }
                Format::Json => {
                    let v: Vec<serde_json::Value> = outcomes
                        .iter()
                        .map(|o| {
                            serde_json::json!({
                                "name": o.name, "passed": o.passed, "detail": o.detail,
                            })
                        })
                        .collect();
                    format!("{}\n", serde_json::Value::Array(v))
                }
            };
            write_text(path, &report)?;
        }
        None => {}
    }
    let _ = write!(out, "{lines}");
    Ok(if failures == 0 { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_strings(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> =
            std::iter::once("dphase".to_string()).chain(args.iter().map(|s| s.to_string())).collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_strings(&["frobnicate"]).0, 2);
        assert_eq!(run_strings(&["eig1"]).0, 2); // missing --r
        assert_eq!(run_strings(&["eig1", "--r", "0.5", "--n", "3"]).0, 2);
        assert_eq!(run_strings(&["eig1", "--r", "2", "--n", "0"]).0, 2);
        let (code, _, err) =
            run_strings(&["solve", "--p", "2", "--q", "2", "--lambda", "5", "--n", "3"]);
        assert_eq!(code, 2);
        assert!(err.contains("p ≠ q"), "{err}");
    }

    #[test]
    fn help_and_version_exit_zero() {
        let (code, out, _) = run_strings(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("sweep-beta"));
        assert_eq!(run_strings(&["--version"]).0, 0);
    }

    #[test]
    fn eig1_reports_the_eigenvalue_on_stdout() {
        let (code, out, _) = run_strings(&["eig1", "--r", "2", "--n", "3"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("r,n,dim,lam1,residual,iters\n"), "{out}");
        assert!(out.contains("9.3725830020"), "{out}");
        // --q is an accepted alias for --r.
        let (code_q, out_q, _) = run_strings(&["eig1", "--q", "2", "--n", "3"]);
        assert_eq!(code_q, 0);
        assert_eq!(out, out_q);
    }

    #[test]
    fn eig1_tensor_mesh_example() {
        let (code, out, _) = run_strings(&["eig1", "--dim", "2", "--n", "3,3", "--r", "2"]);
        assert_eq!(code, 0);
        assert!(out.contains("1.8745166004"), "{out}");
        assert!(out.contains("3x3"), "{out}");
    }

    #[test]
    fn infeasible_lambda_exits_four() {
        let (code, _, err) =
            run_strings(&["solve", "--p", "1.5", "--q", "2", "--lambda", "1.0", "--n", "7"]);
        assert_eq!(code, 4, "{err}");
        assert!(err.contains("below"), "{err}");
    }

    #[test]
    fn nonconvergence_exits_three_with_report() {
        let (code, out, _) =
            run_strings(&["eig1", "--r", "3", "--n", "15", "--max-iter", "3"]);
        assert_eq!(code, 3);
        assert!(out.starts_with("r,n,dim,lam1,residual,iters\n"), "{out}");
        assert!(out.contains("warning"), "{out}");
    }

    #[test]
    fn check_passes_and_reports_each_invariant() {
        let (code, out, _) = run_strings(&["check"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.lines().filter(|l| l.starts_with("ok ")).count() >= 10, "{out}");
        assert!(out.contains("12/12 checks passed"), "{out}");
    }

    #[test]
    fn json_format_is_valid_json() {
        let (code, out, _) = run_strings(&["eig1", "--r", "2", "--n", "3", "--format", "json"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(v["u1"].as_array().unwrap().len(), 3);
        assert!((v["lam1"].as_f64().unwrap() - 9.3725830020304794).abs() < 1e-8);
    }
}
