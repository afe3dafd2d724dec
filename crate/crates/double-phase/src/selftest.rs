//! Built-in invariant suite behind the `check` subcommand: a dozen fast,
//! deterministic spot checks of the identities the rest of the crate is
//! built on, reported one line per check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::{linear_spectrum, principal_eigenpair, rayleigh_quotient, SolverOptions};
use crate::energy::{
    apply_r_operator, dot_h, grad_rnorm, lr_norm, phi_pairing, EnergyParams,
};
use crate::error::Error;
use crate::mesh::{build_mesh, cell_gradients, DiscreteFunction};
use crate::nehari::{project, solve, solve_coercive, verify_eigenpair};
use crate::spectrum::sweep_beta;

/// Result of one named invariant check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    /// Stable kebab-case identifier printed next to ok/FAIL.
    pub name: &'static str,
    /// Whether the invariant held.
    pub passed: bool,
    /// Failure explanation; empty on success.
    pub detail: String,
}

/// Runs every check with reproducible random data derived from `seed`.
pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    let checks: Vec<(&'static str, fn(u64) -> Result<(), String>)> = vec![
        ("mesh-spacing", check_mesh_spacing),
        ("gradient-linearity", check_gradient_linearity),
        ("energy-homogeneity", check_energy_homogeneity),
        ("pairing-identity", check_pairing_identity),
        ("green-identity", check_green_identity),
        ("linear-eigenpair", check_linear_eigenpair),
        ("rayleigh-scale-invariance", check_rayleigh_scale_invariance),
        ("projection-root", check_projection_root),
        ("nehari-solve", check_nehari_solve),
        ("coercive-solve", check_coercive_solve),
        ("threshold-dichotomy", check_threshold_dichotomy),
        ("sweep-endpoints", check_sweep_endpoints),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f(seed) {
            Ok(()) => CheckOutcome { name, passed: true, detail: String::new() },
            Err(detail) => CheckOutcome { name, passed: false, detail },
        })
        .collect()
}

fn expect(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

fn random_function(mesh: &crate::mesh::Mesh, rng: &mut ChaCha8Rng) -> DiscreteFunction {
    DiscreteFunction::new(mesh, (0..mesh.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .expect("sized by mesh")
}

fn check_mesh_spacing(_seed: u64) -> Result<(), String> {
    let m1 = build_mesh(1, &[9], &[2.0]).map_err(|e| e.to_string())?;
    expect(close(m1.h[0], 0.2, 1e-14), format!("1d spacing {}", m1.h[0]))?;
    expect(m1.node_count() == 9 && m1.cell_count() == 10, "1d counts")?;
    let m2 = build_mesh(2, &[3, 4], &[1.0, 2.0]).map_err(|e| e.to_string())?;
    expect(close(m2.h[0], 0.25, 1e-14) && close(m2.h[1], 0.4, 1e-14), "2d spacing")?;
    expect(m2.node_count() == 12 && m2.cell_count() == 20, "2d counts")
}

fn check_gradient_linearity(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = build_mesh(2, &[4, 3], &[1.0, 1.5]).map_err(|e| e.to_string())?;
    let (u, v) = (random_function(&m, &mut rng), random_function(&m, &mut rng));
    let w = DiscreteFunction::new(
        &m,
        u.values.iter().zip(&v.values).map(|(a, b)| 2.0 * a - 0.5 * b).collect(),
    )
    .unwrap();
    let (gu, gv, gw) = (cell_gradients(&u), cell_gradients(&v), cell_gradients(&w));
    for c in 0..m.cell_count() {
        for d in 0..2 {
            let lin = 2.0 * gu.g[c][d] - 0.5 * gv.g[c][d];
            expect(close(gw.g[c][d], lin, 1e-12), format!("cell {c} axis {d}"))?;
        }
    }
    Ok(())
}

fn check_energy_homogeneity(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
    let m = build_mesh(1, &[11], &[1.0]).map_err(|e| e.to_string())?;
    let u = random_function(&m, &mut rng);
    let t = 1.7;
    for r in [1.5, 2.0, 3.0] {
        let g = grad_rnorm(&u, r).map_err(|e| e.to_string())?;
        let gt = grad_rnorm(&u.scaled(t), r).map_err(|e| e.to_string())?;
        expect(close(gt, t.powf(r) * g, 1e-12), format!("grad norm, r = {r}"))?;
        let l = lr_norm(&u, r);
        expect(close(lr_norm(&u.scaled(t), r), t.powf(r) * l, 1e-12), format!("lr norm, r = {r}"))?;
    }
    Ok(())
}

fn check_pairing_identity(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
    let m = build_mesh(2, &[3, 3], &[1.0, 1.0]).map_err(|e| e.to_string())?;
    let u = random_function(&m, &mut rng);
    let params = EnergyParams::new(0.7, 1.3, 1.5, 2.5, 11.0).map_err(|e| e.to_string())?;
    let lhs = phi_pairing(&u, &params);
    let rhs = params.alpha * grad_rnorm(&u, params.p).map_err(|e| e.to_string())?
        + params.beta * grad_rnorm(&u, params.q).map_err(|e| e.to_string())?
        - params.lambda * lr_norm(&u, params.q);
    expect(close(lhs, rhs, 1e-12), format!("pairing {lhs} vs composed {rhs}"))
}

fn check_green_identity(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
    for (dim, n) in [(1usize, vec![10usize]), (2, vec![4, 4])] {
        let m = build_mesh(dim, &n, &vec![1.0; dim]).map_err(|e| e.to_string())?;
        let u = random_function(&m, &mut rng);
        for r in [1.5, 2.0, 3.0] {
            let au = apply_r_operator(&u, r, 0.0).map_err(|e| e.to_string())?;
            let pairing = dot_h(&u, &au.values, &u.values);
            let norm = grad_rnorm(&u, r).map_err(|e| e.to_string())?;
            expect(
                close(pairing, norm, 1e-10),
                format!("dim {dim}, r {r}: {pairing} vs {norm}"),
            )?;
        }
    }
    Ok(())
}

fn check_linear_eigenpair(_seed: u64) -> Result<(), String> {
    let m = build_mesh(1, &[15], &[1.0]).map_err(|e| e.to_string())?;
    let pair = principal_eigenpair(&m, 2.0, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let lam = linear_spectrum(&m, 1).map_err(|e| e.to_string())?[0];
    expect(close(pair.lam1, lam, 1e-8), format!("lam1 {} vs closed form {lam}", pair.lam1))?;
    expect(pair.u1.values.iter().all(|v| *v > 0.0), "positivity")?;
    let h = EnergyParams::harness(0.0, 1.0, 1.5, 2.0, pair.lam1).map_err(|e| e.to_string())?;
    let res = verify_eigenpair(&pair.u1, &h).map_err(|e| e.to_string())?;
    expect(res < 1e-6, format!("weak residual {res}"))
}

fn check_rayleigh_scale_invariance(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
    let m = build_mesh(1, &[9], &[1.0]).map_err(|e| e.to_string())?;
    let u = random_function(&m, &mut rng);
    for r in [1.5, 2.0, 3.0] {
        let a = rayleigh_quotient(&u, r).map_err(|e| e.to_string())?;
        let b = rayleigh_quotient(&u.scaled(3.25), r).map_err(|e| e.to_string())?;
        expect(close(a, b, 1e-12), format!("r = {r}: {a} vs {b}"))?;
    }
    Ok(())
}

fn check_projection_root(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
    let m = build_mesh(1, &[9], &[1.0]).map_err(|e| e.to_string())?;
    let u = DiscreteFunction::new(
        &m,
        (0..m.node_count()).map(|_| rng.gen_range(0.1..1.0)).collect(),
    )
    .unwrap();
    // Twice the direction's own Rayleigh quotient keeps the margin positive.
    let lam = 2.0 * rayleigh_quotient(&u, 2.0).map_err(|e| e.to_string())?;
    let params = EnergyParams::new(1.0, 1.0, 1.5, 2.0, lam).map_err(|e| e.to_string())?;
    let v = project(&u, &params).map_err(|e| e.to_string())?;
    let scale = params.alpha * grad_rnorm(&v, params.p).map_err(|e| e.to_string())?;
    expect(phi_pairing(&v, &params).abs() <= 1e-10 * scale, "projection leaves the manifold")?;
    let w = project(&v, &params).map_err(|e| e.to_string())?;
    expect(close(w.values[0], v.values[0], 1e-10), "re-projection moved a manifold point")
}

fn default_problem() -> Result<(EnergyParams, crate::mesh::Mesh, f64), String> {
    let m = build_mesh(1, &[15], &[1.0]).map_err(|e| e.to_string())?;
    let lam1 = linear_spectrum(&m, 1).map_err(|e| e.to_string())?[0];
    let params = EnergyParams::new(1.0, 1.0, 1.5, 2.0, 2.0 * lam1).map_err(|e| e.to_string())?;
    Ok((params, m, lam1))
}

fn check_nehari_solve(seed: u64) -> Result<(), String> {
    let (params, m, _) = default_problem()?;
    let opts = SolverOptions { seed, ..SolverOptions::default() };
    let r = solve(&params, &m, &opts).map_err(|e| e.to_string())?;
    expect(r.converged, format!("not converged, weak residual {}", r.weak_residual))?;
    expect(r.m_lambda > 0.0, format!("energy level {} not positive", r.m_lambda))?;
    expect(r.constraint_residual <= 1e-8, format!("constraint {}", r.constraint_residual))?;
    expect(r.u_hat.values.iter().all(|v| v.is_finite()), "non-finite minimizer")
}

fn check_coercive_solve(seed: u64) -> Result<(), String> {
    let (_, m, lam1) = default_problem()?;
    let params = EnergyParams::new(1.0, 1.0, 3.0, 2.0, 2.0 * lam1).map_err(|e| e.to_string())?;
    let opts = SolverOptions { seed, ..SolverOptions::default() };
    let r = solve_coercive(&params, &m, &opts).map_err(|e| e.to_string())?;
    expect(r.converged, format!("not converged, weak residual {}", r.weak_residual))?;
    expect(r.m_lambda < 0.0, format!("energy level {} not negative", r.m_lambda))
}

fn check_threshold_dichotomy(_seed: u64) -> Result<(), String> {
    let (_, m, lam1) = default_problem()?;
    let below = EnergyParams::new(1.0, 1.0, 1.5, 2.0, 0.9 * lam1).map_err(|e| e.to_string())?;
    match solve(&below, &m, &SolverOptions::default()) {
        Err(Error::InfeasibleLambda { threshold, .. }) => {
            expect(close(threshold, lam1, 1e-8), format!("threshold {threshold} vs {lam1}"))?
        }
        other => return Err(format!("below threshold: expected InfeasibleLambda, got {other:?}")),
    }
    let above = EnergyParams::new(1.0, 1.0, 1.5, 2.0, 1.1 * lam1).map_err(|e| e.to_string())?;
    let r = solve(&above, &m, &SolverOptions::default()).map_err(|e| e.to_string())?;
    expect(r.converged, "just above threshold should be solvable")
}

fn check_sweep_endpoints(_seed: u64) -> Result<(), String> {
    let m = build_mesh(1, &[15], &[1.0]).map_err(|e| e.to_string())?;
    let lam1 = linear_spectrum(&m, 1).map_err(|e| e.to_string())?[0];
    let sweep =
        sweep_beta(1.5, 2.0, &m, &[0.5, 0.9], 2, &SolverOptions::default()).map_err(|e| e.to_string())?;
    expect(close(sweep.entries[0].endpoint, 0.5 * lam1, 1e-10), "endpoint at beta = 0.5")?;
    expect(close(sweep.entries[1].endpoint, 0.9 * lam1, 1e-10), "endpoint at beta = 0.9")?;
    expect(
        close(sweep.linear_spectrum_at_one[0], lam1, 1e-12),
        "linear spectrum head disagrees with lam1",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let outcomes = run_checks(7);
        assert_eq!(outcomes.len(), 12);
        for o in &outcomes {
            assert!(o.passed, "{} failed: {}", o.name, o.detail);
        }
    }

    #[test]
    fn names_are_unique_and_stable() {
        let outcomes = run_checks(1);
        let mut names: Vec<&str> = outcomes.iter().map(|o| o.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 12);
    }
}
