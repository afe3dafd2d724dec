//! Nehari-manifold projection and constrained minimization for `p < q`,
//! direct coercive minimization for `q < p`, and weak-form eigenpair
//! verification.
//!
//! Both solvers run Barzilai-Borwein gradient descent with Armijo
//! backtracking (projected onto the manifold on the Nehari branch) and then
//! polish the iterate with a damped Newton method on the weak-form defect,
//! which supplies the last digits of residual that first-order descent
//! cannot reach when the energy landscape is nearly degenerate (small
//! `alpha`, small-amplitude solutions).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::eigen::{principal_eigenpair, SolverOptions};
use crate::energy::{
    dot_h, grad_rnorm, lr_norm, mass_term, norm_h, phi, phi_grad, phi_pairing, EnergyParams,
};
use crate::error::{Error, Result};
use crate::mesh::{cell_gradients, DiscreteFunction, Mesh};

/// Weak-form residual a feasible solve must reach.
pub const WEAK_RESIDUAL_TOL: f64 = 1e-6;

/// Newton polish is skipped above this dense-system size.
const NEWTON_NODE_CAP: usize = 2500;

/// Which minimization produced a [`SolveResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Constrained minimization over the Nehari manifold (`p < q`).
    Nehari,
    /// Direct minimization of the coercive energy (`q < p`).
    Coercive,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Nehari => "nehari",
            Branch::Coercive => "coercive",
        })
    }
}

/// Outcome of [`solve`] / [`solve_coercive`].
#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    /// The computed minimizer.
    pub u_hat: DiscreteFunction,
    /// Attained energy `phi(u_hat)`; positive on the Nehari branch, negative
    /// on the coercive branch when converged.
    pub m_lambda: f64,
    /// `|<phi'(u_hat), u_hat>|` scaled by `alpha ||Du||_p^p + beta ||Du||_q^q`.
    pub constraint_residual: f64,
    /// Relative weak-form defect of the unregularized equation.
    pub weak_residual: f64,
    /// Accepted descent iterations plus Newton steps.
    pub iterations: usize,
    /// True when the weak residual met [`WEAK_RESIDUAL_TOL`] and the energy
    /// sign matches the branch.
    pub converged: bool,
    /// Minimization branch that ran.
    pub branch: Branch,
    /// Number of axis-adjacent node pairs on which the minimizer changes
    /// sign (recorded for inspection; nothing is asserted about it).
    pub sign_changes: usize,
    /// Objective value after every accepted descent iterate.
    pub trace: Vec<f64>,
}

/// Scales `u` onto the Nehari manifold: returns `t0 * u` with
/// `t0 = [alpha ||Du||_p^p / (lambda ||u||_q^q - beta ||Du||_q^q)]^(1/(q-p))`,
/// the unique positive root of `xi_lambda(t) = <phi'(t u), t u>`.
///
/// Fails with [`Error::NotProjectable`] when the denominator is not
/// positive, i.e. the ray never returns to the manifold.
pub fn project(u: &DiscreteFunction, params: &EnergyParams) -> Result<DiscreteFunction> {
    require_solver_params(params)?;
    if !(params.p < params.q) {
        return Err(Error::InvalidParameter(format!(
            "projection requires p < q, got p={}, q={}",
            params.p, params.q
        )));
    }
    if u.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let num = params.alpha * grad_rnorm(u, params.p)?;
    let den = params.lambda * lr_norm(u, params.q) - params.beta * grad_rnorm(u, params.q)?;
    if den <= 0.0 {
        return Err(Error::NotProjectable { margin: den });
    }
    let t0 = (num / den).powf(1.0 / (params.q - params.p));
    Ok(u.scaled(t0))
}

/// Minimizes `phi_lambda` over the Nehari manifold (`p < q`): feasibility is
/// probed by projecting the principal q-eigenfunction (exactly the
/// threshold dichotomy), descent runs on the reduced objective
/// `alpha (1/p - 1/q) ||Du||_p^p` with reprojection after every step, and a
/// Newton polish sharpens the weak residual.
///
/// Returns [`Error::InfeasibleLambda`] when `lambda <= beta * lam1(q)` on
/// this mesh; a completed run reports residuals honestly through the
/// `converged` flag ([`Error::NonConvergence`] is reserved for iterates that
/// leave the floating-point range).
pub fn solve(params: &EnergyParams, mesh: &Mesh, opts: &SolverOptions) -> Result<SolveResult> {
    require_solver_params(params)?;
    if !(params.p < params.q) {
        return Err(Error::InvalidParameter(format!(
            "the Nehari branch requires p < q, got p={}, q={}",
            params.p, params.q
        )));
    }
    opts.validate()?;
    let u1q = principal_eigenpair(mesh, params.q, opts)?;
    let threshold = params.beta * u1q.lam1;
    let init = match project(&u1q.u1, params) {
        Ok(v) => v,
        Err(Error::NotProjectable { .. }) => {
            return Err(Error::InfeasibleLambda { lambda: params.lambda, threshold })
        }
        Err(e) => return Err(e),
    };

    let mut best: Option<SolveResult> = None;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    for restart in 0..opts.restarts.max(1) {
        let start = if restart == 0 {
            init.clone()
        } else {
            // Random positive direction; skip restarts that are not projectable.
            let v = DiscreteFunction::new(
                mesh,
                (0..mesh.node_count()).map(|_| rng.gen_range(0.05..1.0)).collect(),
            )
            .expect("sized by mesh");
            match project(&v, params) {
                Ok(w) => w,
                Err(_) => continue,
            }
        };
        let result = minimize(params, start, opts, Branch::Nehari)?;
        let better = match &best {
            None => true,
            Some(b) => {
                (result.converged, -result.m_lambda) > (b.converged, -b.m_lambda)
            }
        };
        if better {
            best = Some(result);
        }
    }
    Ok(best.expect("at least the canonical start runs"))
}

/// Minimizes the coercive energy directly (`q < p`), starting from `t * u1(q)`
/// with `t` the exact minimizer of `phi` along that ray (which is negative
/// exactly when `lambda` exceeds the discrete threshold).
pub fn solve_coercive(
    params: &EnergyParams,
    mesh: &Mesh,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    require_solver_params(params)?;
    if !(params.q < params.p) {
        return Err(Error::InvalidParameter(format!(
            "the coercive branch requires q < p, got p={}, q={}",
            params.p, params.q
        )));
    }
    opts.validate()?;
    let u1q = principal_eigenpair(mesh, params.q, opts)?;
    let threshold = params.beta * u1q.lam1;
    let margin =
        params.lambda * lr_norm(&u1q.u1, params.q) - params.beta * grad_rnorm(&u1q.u1, params.q)?;
    if margin <= 0.0 {
        return Err(Error::InfeasibleLambda { lambda: params.lambda, threshold });
    }
    // phi(t u1) = a t^p + b t^q with a > 0 > b; its ray minimizer is negative.
    let a = params.alpha / params.p * grad_rnorm(&u1q.u1, params.p)?;
    let b = -margin / params.q;
    let t_star = (-params.q * b / (params.p * a)).powf(1.0 / (params.p - params.q));

    let mut best: Option<SolveResult> = None;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    for restart in 0..opts.restarts.max(1) {
        let start = if restart == 0 {
            u1q.u1.scaled(t_star)
        } else {
            let v = DiscreteFunction::new(
                mesh,
                (0..mesh.node_count()).map(|_| rng.gen_range(0.05..1.0)).collect(),
            )
            .expect("sized by mesh");
            let av = params.alpha / params.p * grad_rnorm(&v, params.p)?;
            let bv = (params.beta * grad_rnorm(&v, params.q)? - params.lambda * lr_norm(&v, params.q))
                / params.q;
            if bv >= 0.0 {
                continue;
            }
            let tv = (-params.q * bv / (params.p * av)).powf(1.0 / (params.p - params.q));
            v.scaled(tv)
        };
        let result = minimize(params, start, opts, Branch::Coercive)?;
        let better = match &best {
            None => true,
            Some(b) => (result.converged, -result.m_lambda) > (b.converged, -b.m_lambda),
        };
        if better {
            best = Some(result);
        }
    }
    Ok(best.expect("at least the canonical start runs"))
}

/// Relative weak-form defect
/// `||alpha A_p(u) + beta A_q(u) - lambda |u|^(q-2) u|| / ||lambda |u|^(q-2) u||`
/// with exact (eps = 0) fluxes; near zero iff `(lambda, u)` is a discrete
/// eigenpair. Harness parameters (`alpha == 0` or `beta == 0`) are allowed
/// here so linear oracles can be checked.
pub fn verify_eigenpair(u: &DiscreteFunction, params: &EnergyParams) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let (_, defect, scale) = weak_defect(u, params);
    Ok(defect / scale)
}

/// Number of axis-adjacent node pairs with strictly opposite signs.
pub fn sign_changes(u: &DiscreteFunction) -> usize {
    let m = &u.mesh;
    let (nx, ny) = (m.n[0], if m.dim == 2 { m.n[1] } else { 1 });
    let at = |i: usize, j: usize| u.values[j * nx + i];
    let mut count = 0;
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx && at(i, j) * at(i + 1, j) < 0.0 {
                count += 1;
            }
            if j + 1 < ny && at(i, j) * at(i, j + 1) < 0.0 {
                count += 1;
            }
        }
    }
    count
}

fn require_solver_params(params: &EnergyParams) -> Result<()> {
    if params.is_harness() {
        return Err(Error::InvalidParameter(
            "alpha > 0 and beta > 0 are required outside verification harnesses".into(),
        ));
    }
    Ok(())
}

/// Weak-form defect vector at eps = 0, its norm, and the scale
/// `||lambda |u|^(q-2) u||`.
fn weak_defect(u: &DiscreteFunction, params: &EnergyParams) -> (Vec<f64>, f64, f64) {
    let exact = params.with_eps(0.0).expect("0 is admissible");
    let d = phi_grad(u, &exact);
    let mass = mass_term(&u.values, params.q, 0.0);
    let scaled: Vec<f64> = mass.iter().map(|m| params.lambda * m).collect();
    let nd = norm_h(u, &d.values);
    let ns = norm_h(u, &scaled);
    (d.values, nd, ns)
}

/// Shared BB-descent-plus-Newton driver for both branches.
fn minimize(
    params: &EnergyParams,
    start: DiscreteFunction,
    opts: &SolverOptions,
    branch: Branch,
) -> Result<SolveResult> {
    let mut u = start;
    let objective = |v: &DiscreteFunction| -> Result<f64> {
        Ok(match branch {
            // Reduced objective alpha (1/p - 1/q) ||Du||_p^p, the restriction
            // of phi to the manifold; manifestly positive.
            Branch::Nehari => {
                params.alpha * (1.0 / params.p - 1.0 / params.q) * grad_rnorm(v, params.p)?
            }
            Branch::Coercive => phi(v, params),
        })
    };

    let residual_of = |v: &DiscreteFunction| {
        let (_, dn, sc) = weak_defect(v, params);
        dn / sc
    };
    let mut obj = objective(&u)?;
    let mut res = residual_of(&u);
    let mut trace = vec![obj];
    let mut iterations = 0usize;
    let mut step = opts.step0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut no_progress = 0usize;

    'outer: for _round in 0..3 {
        // First-order phase: BB step, Armijo backtracking, residual polish.
        while iterations < opts.max_iter {
            if res < 1e-2 || no_progress > 25 {
                break;
            }
            let d = phi_grad(&u, params);
            if let Some((pu, pd)) = &prev {
                let du: Vec<f64> = u.values.iter().zip(pu).map(|(a, b)| a - b).collect();
                let dd: Vec<f64> = d.values.iter().zip(pd).map(|(a, b)| a - b).collect();
                let denom = dot_h(&u, &du, &dd);
                if denom > 0.0 {
                    step = (dot_h(&u, &du, &du) / denom).clamp(1e-14, 1e14);
                }
            }
            prev = Some((u.values.clone(), d.values.clone()));
            let gg = dot_h(&u, &d.values, &d.values);

            let mut st = step;
            let mut accepted = false;
            for _ in 0..80 {
                let raw = DiscreteFunction {
                    mesh: u.mesh.clone(),
                    values: u.values.iter().zip(&d.values).map(|(a, g)| a - st * g).collect(),
                };
                let trial = match branch {
                    Branch::Nehari => match project(&raw, params) {
                        Ok(v) => v,
                        Err(_) => {
                            st *= opts.armijo_factor;
                            continue;
                        }
                    },
                    Branch::Coercive => raw,
                };
                let obj_t = match objective(&trial) {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        st *= opts.armijo_factor;
                        continue;
                    }
                };
                let res_t = residual_of(&trial);
                let armijo = obj_t <= obj - opts.armijo_c * st * gg;
                let polish = res_t < res && obj_t <= obj + 1e-13 * obj.abs();
                if armijo || polish {
                    u = trial;
                    obj = obj_t;
                    res = res_t;
                    trace.push(obj);
                    accepted = true;
                    break;
                }
                st *= opts.armijo_factor;
            }
            iterations += 1;
            if accepted {
                no_progress = 0;
            } else {
                no_progress += 1;
            }
            if !obj.is_finite() || !res.is_finite() {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: res,
                    detail: "iterates left the floating-point range".into(),
                });
            }
        }

        // Second-order phase on the weak-form defect.
        let newton_steps = newton_polish(&mut u, params, 60);
        iterations += newton_steps;
        if branch == Branch::Nehari {
            if let Ok(v) = project(&u, params) {
                u = v;
            }
        }
        obj = objective(&u)?;
        res = residual_of(&u);
        trace.push(obj);
        if res < WEAK_RESIDUAL_TOL || iterations >= opts.max_iter || newton_steps == 0 {
            break 'outer;
        }
        no_progress = 0;
    }

    let m_lambda = phi(&u, params);
    let gp = grad_rnorm(&u, params.p)?;
    let gq = grad_rnorm(&u, params.q)?;
    let constraint_residual = phi_pairing(&u, params).abs() / (params.alpha * gp + params.beta * gq);
    let sign_ok = match branch {
        Branch::Nehari => m_lambda > 0.0,
        Branch::Coercive => m_lambda < 0.0,
    };
    let converged = res < WEAK_RESIDUAL_TOL && sign_ok && m_lambda.is_finite();
    Ok(SolveResult {
        sign_changes: sign_changes(&u),
        u_hat: u,
        m_lambda,
        constraint_residual,
        weak_residual: res,
        iterations,
        converged,
        branch,
        trace,
    })
}

/// Damped Newton iteration on `phi_grad(u) = 0` with exact (eps = 0) fluxes;
/// steps are accepted only when they reduce the relative weak residual.
/// Returns the number of Newton steps taken; skips very large systems.
fn newton_polish(u: &mut DiscreteFunction, params: &EnergyParams, max_steps: usize) -> usize {
    let n = u.mesh.node_count();
    if n > NEWTON_NODE_CAP {
        return 0;
    }
    let (mut defect, dn, sc) = weak_defect(u, params);
    let mut res = dn / sc;
    let mut steps = 0;
    for _ in 0..max_steps {
        if res < 1e-12 || !res.is_finite() {
            break;
        }
        let hess = hessian(u, params);
        let Some(dir) = hess.lu().solve(&DVector::from_column_slice(&defect)) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = DiscreteFunction {
                mesh: u.mesh.clone(),
                values: u
                    .values
                    .iter()
                    .zip(dir.iter())
                    .map(|(a, s)| a - t * s)
                    .collect(),
            };
            let (df_t, dn_t, sc_t) = weak_defect(&trial, params);
            if dn_t / sc_t < res {
                *u = trial;
                defect = df_t;
                res = dn_t / sc_t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        steps += 1;
    }
    steps
}

/// Dense Hessian of `phi` at `u` with exact fluxes: the flux Jacobians of
/// both r-Laplacians assembled cellwise minus the diagonal derivative of the
/// nodal term. Singular weights (`r < 2` at vanishing gradients or values)
/// are clamped at a relative floor so the matrix stays finite.
fn hessian(u: &DiscreteFunction, params: &EnergyParams) -> DMatrix<f64> {
    let mesh = &u.mesh;
    let n = mesh.node_count();
    let cg = cell_gradients(u);
    let gmax = cg
        .g
        .iter()
        .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt())
        .fold(0.0f64, f64::max)
        .max(1e-30);
    let umax = u.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
    let floor_g = (1e-8 * gmax) * (1e-8 * gmax);
    let mut h = DMatrix::zeros(n, n);

    // d(|g|^(r-2) g)/dg = w I + (r-2) s^((r-4)/2) g g^T with s = |g|^2.
    let flux_jac = |g: &[f64; 2], r: f64| -> [[f64; 2]; 2] {
        let mut s = g[0] * g[0] + g[1] * g[1];
        if s == 0.0 && r >= 2.0 {
            return [[0.0; 2]; 2];
        }
        if r < 2.0 {
            s = s.max(floor_g);
        }
        let w = s.powf(0.5 * (r - 2.0));
        let c = (r - 2.0) * s.powf(0.5 * (r - 4.0));
        [
            [w + c * g[0] * g[0], c * g[0] * g[1]],
            [c * g[0] * g[1], w + c * g[1] * g[1]],
        ]
    };

    match mesh.dim {
        1 => {
            let hx = mesh.h[0];
            for (c, g) in cg.g.iter().enumerate() {
                let jp = flux_jac(g, params.p);
                let jq = flux_jac(g, params.q);
                let fp = (params.alpha * jp[0][0] + params.beta * jq[0][0]) / (hx * hx);
                // Cell c spans grid nodes c and c+1 (0 and n+1 are boundary).
                let left = (c >= 1).then(|| c - 1);
                let right = (c < mesh.n[0]).then_some(c);
                if let Some(l) = left {
                    h[(l, l)] += fp;
                }
                if let Some(r) = right {
                    h[(r, r)] += fp;
                }
                if let (Some(l), Some(r)) = (left, right) {
                    h[(l, r)] -= fp;
                    h[(r, l)] -= fp;
                }
            }
        }
        _ => {
            let (hx, hy) = (mesh.h[0], mesh.h[1]);
            let (nx, ny) = (mesh.n[0], mesh.n[1]);
            let cw = nx + 1;
            for cy in 0..=ny {
                for cx in 0..=nx {
                    let g = &cg.g[cy * cw + cx];
                    let jp = flux_jac(g, params.p);
                    let jq = flux_jac(g, params.q);
                    let m = [
                        [
                            params.alpha * jp[0][0] + params.beta * jq[0][0],
                            params.alpha * jp[0][1] + params.beta * jq[0][1],
                        ],
                        [
                            params.alpha * jp[1][0] + params.beta * jq[1][0],
                            params.alpha * jp[1][1] + params.beta * jq[1][1],
                        ],
                    ];
                    // Local nodes: corner, x-forward, y-forward neighbors.
                    let locals: [(Option<usize>, [f64; 2]); 3] = [
                        (
                            (cx >= 1 && cy >= 1).then(|| (cy - 1) * nx + cx - 1),
                            [-1.0 / hx, -1.0 / hy],
                        ),
                        ((cx < nx && cy >= 1).then(|| (cy - 1) * nx + cx), [1.0 / hx, 0.0]),
                        ((cx >= 1 && cy < ny).then(|| cy * nx + cx - 1), [0.0, 1.0 / hy]),
                    ];
                    for (ni, ai) in &locals {
                        let Some(i) = ni else { continue };
                        let ma = [
                            m[0][0] * ai[0] + m[0][1] * ai[1],
                            m[1][0] * ai[0] + m[1][1] * ai[1],
                        ];
                        for (nj, aj) in &locals {
                            let Some(j) = nj else { continue };
                            h[(*i, *j)] += aj[0] * ma[0] + aj[1] * ma[1];
                        }
                    }
                }
            }
        }
    }

    // Nodal term derivative: lambda (q-1) |u|^(q-2) on the diagonal.
    for (i, &v) in u.values.iter().enumerate() {
        let mut a = v.abs();
        if params.q < 2.0 {
            a = a.max(1e-8 * umax);
        }
        let d = if a == 0.0 && params.q >= 2.0 {
            0.0
        } else {
            (params.q - 1.0) * a.powf(params.q - 2.0)
        };
        h[(i, i)] -= params.lambda * d;
    }
    h
}
