//! WebAssembly bindings for the browser demo: three interactive operations
//! (principal eigenfunction, energy minimization, threshold scan) returning
//! JSON strings that the static page plots on a canvas.
//!
//! Every entry point catches library errors and returns `{"error": "..."}`
//! so the page never traps.

use double_phase::eigen::{linear_spectrum, principal_eigenpair, SolverOptions};
use double_phase::energy::EnergyParams;
use double_phase::mesh::{build_mesh, DiscreteFunction, Mesh};
use double_phase::nehari::{solve, solve_coercive};
use double_phase::spectrum::scan_lambda;
use wasm_bindgen::prelude::wasm_bindgen;

fn err_json(e: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": e.to_string() }).to_string()
}

fn unit_mesh(n: usize) -> Result<Mesh, String> {
    build_mesh(1, &[n], &[1.0]).map_err(|e| e.to_string())
}

/// Interior nodes plus the two boundary zeros, ready for plotting.
fn padded_curve(mesh: &Mesh, u: &DiscreteFunction) -> (Vec<f64>, Vec<f64>) {
    let h = mesh.h[0];
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    for (k, v) in u.values.iter().enumerate() {
        xs.push((k + 1) as f64 * h);
        ys.push(*v);
    }
    xs.push(1.0);
    ys.push(0.0);
    (xs, ys)
}

fn demo_opts() -> SolverOptions {
    SolverOptions { max_iter: 20_000, ..SolverOptions::default() }
}

/// Principal eigenpair of the r-Laplacian on `(0,1)` with `n` interior
/// nodes: `{lam1, x, u, iterations, residual}`.
#[wasm_bindgen]
pub fn demo_eigenfunction(r: f64, n: usize) -> String {
    let mesh = match unit_mesh(n) {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    match principal_eigenpair(&mesh, r, &demo_opts()) {
        Ok(pair) => {
            let (x, u) = padded_curve(&mesh, &pair.u1);
            serde_json::json!({
                "lam1": pair.lam1,
                "x": x,
                "u": u,
                "iterations": pair.iterations,
                "residual": pair.residual,
            })
            .to_string()
        }
        Err(e) => err_json(e),
    }
}

/// Double-phase minimizer at fixed `lambda` (branch chosen by exponent
/// order): `{branch, m_lambda, weak_residual, converged, x, u}`.
#[wasm_bindgen]
pub fn demo_solve(alpha: f64, beta: f64, p: f64, q: f64, lambda: f64, n: usize) -> String {
    let mesh = match unit_mesh(n) {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let params = match EnergyParams::new(alpha, beta, p, q, lambda) {
        Ok(p) => p,
        Err(e) => return err_json(e),
    };
    let opts = demo_opts();
    let result = if p < q { solve(&params, &mesh, &opts) } else { solve_coercive(&params, &mesh, &opts) };
    match result {
        Ok(r) => {
            let (x, u) = padded_curve(&mesh, &r.u_hat);
            serde_json::json!({
                "branch": r.branch.to_string(),
                "m_lambda": r.m_lambda,
                "weak_residual": r.weak_residual,
                "iterations": r.iterations,
                "converged": r.converged,
                "x": x,
                "u": u,
            })
            .to_string()
        }
        Err(e) => err_json(e),
    }
}

/// Feasibility scan across `steps` lambdas in `[lo, hi]`:
/// `{threshold_predicted, threshold_estimate, rows: [{lambda, feasible,
/// m_lambda}], spectrum_at_one}`.
#[wasm_bindgen]
pub fn demo_scan(alpha: f64, beta: f64, p: f64, q: f64, lo: f64, hi: f64, steps: usize, n: usize) -> String {
    let mesh = match unit_mesh(n) {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    if steps < 2 || !(lo < hi) || !(lo > 0.0) {
        return err_json("scan needs 0 < lo < hi and at least two steps");
    }
    let grid: Vec<f64> =
        (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect();
    match scan_lambda(alpha, beta, p, q, &mesh, &grid, &demo_opts()) {
        Ok(scan) => {
            let rows: Vec<serde_json::Value> = scan
                .rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "lambda": r.lambda,
                        "feasible": r.feasible,
                        "m_lambda": r.m_lambda,
                    })
                })
                .collect();
            let spectrum = linear_spectrum(&mesh, 5.min(mesh.node_count())).unwrap_or_default();
            serde_json::json!({
                "threshold_predicted": scan.threshold_predicted,
                "threshold_estimate": scan.threshold_estimate,
                "rows": rows,
                "spectrum_at_one": spectrum,
            })
            .to_string()
        }
        Err(e) => err_json(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenfunction_payload_is_plottable() {
        let v: serde_json::Value =
            serde_json::from_str(&demo_eigenfunction(2.0, 15)).unwrap();
        assert!((v["lam1"].as_f64().unwrap() - 9.8379364335460107).abs() < 1e-6);
        let x = v["x"].as_array().unwrap();
        let u = v["u"].as_array().unwrap();
        assert_eq!(x.len(), 17);
        assert_eq!(u.len(), 17);
        assert_eq!(u[0].as_f64().unwrap(), 0.0);
        assert_eq!(u[16].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn solve_reports_both_branches() {
        let nehari: serde_json::Value =
            serde_json::from_str(&demo_solve(1.0, 1.0, 1.5, 2.0, 20.0, 15)).unwrap();
        assert_eq!(nehari["branch"].as_str(), Some("nehari"));
        assert!(nehari["m_lambda"].as_f64().unwrap() > 0.0);
        assert_eq!(nehari["converged"].as_bool(), Some(true));
        let coercive: serde_json::Value =
            serde_json::from_str(&demo_solve(1.0, 1.0, 3.0, 2.0, 25.0, 15)).unwrap();
        assert_eq!(coercive["branch"].as_str(), Some("coercive"));
        assert!(coercive["m_lambda"].as_f64().unwrap() < 0.0);
    }

    #[test]
    fn infeasible_solve_returns_an_error_payload() {
        let v: serde_json::Value =
            serde_json::from_str(&demo_solve(1.0, 1.0, 1.5, 2.0, 0.5, 15)).unwrap();
        assert!(v["error"].as_str().unwrap().contains("below"));
    }

    #[test]
    fn scan_payload_straddles_the_threshold() {
        let v: serde_json::Value =
            serde_json::from_str(&demo_scan(1.0, 1.0, 1.5, 2.0, 5.0, 25.0, 5, 15)).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0]["feasible"].as_bool(), Some(false));
        assert_eq!(rows[4]["feasible"].as_bool(), Some(true));
        assert!(v["threshold_estimate"].as_f64().is_some());
        assert_eq!(v["spectrum_at_one"].as_array().unwrap().len(), 5);
    }
}
