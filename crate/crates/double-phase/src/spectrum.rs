//! Threshold computation, lambda scans, and beta sweeps: the machinery for
//! mapping out which spectral parameters admit solutions and for exhibiting
//! the jump of the solvable set as `beta` approaches 1.

use serde::Serialize;

use crate::eigen::{linear_spectrum, principal_eigenpair, SolverOptions};
use crate::energy::{grad_rnorm, lr_norm, EnergyParams};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::nehari::{solve, solve_coercive};

/// One attempted solve in a lambda scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    /// Spectral parameter attempted.
    pub lambda: f64,
    /// True when a solution was found and verified at this lambda.
    pub feasible: bool,
    /// Attained energy level, when feasible.
    pub m_lambda: Option<f64>,
    /// Weak-form residual of the minimizer, when feasible.
    pub weak_residual: Option<f64>,
    /// Failure description for rows that failed for a reason other than
    /// being below the threshold (infeasible rows leave this empty).
    pub error: Option<String>,
}

/// Outcome of [`scan_lambda`].
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumScan {
    /// One row per grid value, in input order.
    pub rows: Vec<ScanRow>,
    /// Bisection refinement of the feasibility boundary observed in the
    /// rows; `None` when every row was infeasible.
    pub threshold_estimate: Option<f64>,
    /// The closed-form boundary `beta * lam1(q)` on this mesh.
    pub threshold_predicted: f64,
    /// Oddities worth a human look, e.g. non-monotone feasibility.
    pub anomalies: Vec<String>,
}

/// One beta value in a sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepEntry {
    /// Weight on the q-term.
    pub beta: f64,
    /// Complementary weight `1 - beta` on the p-term.
    pub alpha: f64,
    /// Left endpoint `beta * lam1(q)` of the solvable half-line.
    pub endpoint: f64,
}

/// Outcome of [`sweep_beta`]: endpoints along `beta` plus the point
/// spectrum the problem jumps to at `beta = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct BetaSweep {
    /// One entry per requested beta, in input order.
    pub entries: Vec<SweepEntry>,
    /// First eigenvalues of the discrete Laplacian, the spectrum of the
    /// limiting problem at `beta = 1` (empty when not requested).
    pub linear_spectrum_at_one: Vec<f64>,
}

/// Discrete solvability threshold `beta * lam1(q)` on `mesh`.
///
/// `alpha` and `p` do not enter the value but are validated so that calls
/// mirror the full parameter set of the problem.
pub fn threshold(
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    mesh: &Mesh,
    opts: &SolverOptions,
) -> Result<f64> {
    // Reuse the parameter validation with a placeholder lambda.
    EnergyParams::new(alpha, beta, p, q, 1.0)?;
    let pair = principal_eigenpair(mesh, q, opts)?;
    Ok(beta * pair.lam1)
}

/// Attempts a solve at every lambda in `lambda_grid` (Nehari branch for
/// `p < q`, coercive branch for `q < p`) and refines the observed
/// feasibility boundary by bisecting the sign of the projectability margin
/// `lambda ||u1||_q^q - beta ||Du1||_q^q` of the principal q-eigenfunction.
pub fn scan_lambda(
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    mesh: &Mesh,
    lambda_grid: &[f64],
    opts: &SolverOptions,
) -> Result<SpectrumScan> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidParameter("lambda grid must be non-empty".into()));
    }
    if p == q {
        return Err(Error::InvalidParameter("scan requires p != q".into()));
    }
    for &l in lambda_grid {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda grid values must be positive and finite, got {l}"
            )));
        }
    }
    let pair = principal_eigenpair(mesh, q, opts)?;
    let predicted = beta * pair.lam1;
    let margin = |lambda: f64| -> Result<f64> {
        Ok(lambda * lr_norm(&pair.u1, q) - beta * grad_rnorm(&pair.u1, q)?)
    };

    let mut rows = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let params = EnergyParams::new(alpha, beta, p, q, lambda)?;
        let attempt =
            if p < q { solve(&params, mesh, opts) } else { solve_coercive(&params, mesh, opts) };
        let row = match attempt {
            Ok(r) if r.converged => ScanRow {
                lambda,
                feasible: true,
                m_lambda: Some(r.m_lambda),
                weak_residual: Some(r.weak_residual),
                error: None,
            },
            Ok(r) => ScanRow {
                lambda,
                feasible: false,
                m_lambda: Some(r.m_lambda),
                weak_residual: Some(r.weak_residual),
                error: Some(format!(
                    "no convergence in {} iterations; weak residual {:.3e}",
                    r.iterations, r.weak_residual
                )),
            },
            Err(Error::InfeasibleLambda { .. }) => {
                ScanRow { lambda, feasible: false, m_lambda: None, weak_residual: None, error: None }
            }
            Err(Error::NonConvergence { iterations, residual, .. }) => ScanRow {
                lambda,
                feasible: false,
                m_lambda: None,
                weak_residual: None,
                error: Some(format!(
                    "diverged after {iterations} iterations; residual {residual:.3e}"
                )),
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }

    // Feasibility should be monotone in lambda: once solvable, always solvable.
    let mut anomalies = Vec::new();
    let mut sorted: Vec<&ScanRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    for w in sorted.windows(2) {
        if w[0].feasible && !w[1].feasible {
            anomalies.push(format!(
                "feasible at lambda={} but not at larger lambda={}",
                w[0].lambda, w[1].lambda
            ));
        }
    }

    // Bracket the boundary from the scan outcomes, then bisect the margin.
    let lo = sorted.iter().filter(|r| !r.feasible).map(|r| r.lambda).fold(f64::NAN, f64::max);
    let hi = sorted.iter().filter(|r| r.feasible).map(|r| r.lambda).fold(f64::NAN, f64::min);
    let bracket = if hi.is_nan() {
        None // nothing feasible: no boundary to refine
    } else if lo.is_nan() {
        Some((0.0, hi))
    } else {
        Some((lo, hi))
    };
    let threshold_estimate = match bracket {
        None => None,
        Some((mut a, mut b)) => {
            if margin(a)? > 0.0 || margin(b)? <= 0.0 {
                anomalies.push(format!(
                    "margin signs at bracket [{a}, {b}] disagree with scan outcomes"
                ));
                None
            } else {
                let tol = 1e-4 * b.max(1.0);
                while b - a > tol {
                    let mid = 0.5 * (a + b);
                    if margin(mid)? > 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                Some(0.5 * (a + b))
            }
        }
    };

    Ok(SpectrumScan { rows, threshold_estimate, threshold_predicted: predicted, anomalies })
}

/// Computes the solvable-set endpoint `beta * lam1(q)` for each beta in
/// `betas` (one eigenvalue solve total) together with the first `k`
/// eigenvalues of the limiting linear problem at `beta = 1`, which requires
/// `q = 2` when `k > 0`.
pub fn sweep_beta(
    p: f64,
    q: f64,
    mesh: &Mesh,
    betas: &[f64],
    k: usize,
    opts: &SolverOptions,
) -> Result<BetaSweep> {
    EnergyParams::new(1.0, 1.0, p, q, 1.0)?;
    if betas.is_empty() {
        return Err(Error::InvalidParameter("beta list must be non-empty".into()));
    }
    for &b in betas {
        if !(b.is_finite() && b > 0.0 && b < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta values must lie strictly between 0 and 1, got {b}"
            )));
        }
    }
    if k > 0 && q != 2.0 {
        return Err(Error::InvalidParameter(format!(
            "the beta = 1 limit is linear only for q = 2, got q = {q}"
        )));
    }
    let pair = principal_eigenpair(mesh, q, opts)?;
    let entries = betas
        .iter()
        .map(|&beta| SweepEntry { beta, alpha: 1.0 - beta, endpoint: beta * pair.lam1 })
        .collect();
    let linear_spectrum_at_one = if k > 0 { linear_spectrum(mesh, k)? } else { Vec::new() };
    Ok(BetaSweep { entries, linear_spectrum_at_one })
}

/// Hausdorff distance between the open half-lines `(a, inf)` and `(b, inf)`:
/// every point of one is within `|a - b|` of the other, and the endpoints
/// realize it.
pub fn hausdorff_halfline(a: f64, b: f64) -> f64 {
    (a - b).abs()
}
