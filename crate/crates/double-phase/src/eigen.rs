//! Principal eigenpair of the discrete r-Laplacian by normalized
//! projected-gradient descent on the Rayleigh quotient, and the closed-form
//! linear (r = 2) Dirichlet spectrum used by the discontinuity exhibit.

use serde::Serialize;

use crate::energy::{dot_h, grad_rnorm, lr_norm, mass_term, norm_h};
use crate::error::{Error, Result};
use crate::mesh::{DiscreteFunction, Mesh};

/// Relative eigen-residual a converged principal eigenpair must meet.
pub const EIGEN_RESIDUAL_RTOL: f64 = 1e-8;

/// Principal eigenpair `(lam1, u1)` of the discrete r-Laplacian.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    /// Exponent of the r-Laplacian.
    pub r: f64,
    /// Eigenvalue estimate (the converged Rayleigh quotient).
    pub lam1: f64,
    /// Eigenfunction, normalized to `lr_norm(u1, r) == 1`, strictly positive,
    /// with positive nodal sum.
    pub u1: DiscreteFunction,
    /// Accepted descent iterations performed.
    pub iterations: usize,
    /// Discrete L2 norm of `A_r(u1) - lam1 |u1|^(r-2) u1`.
    pub residual: f64,
}

/// Iteration controls shared by the eigen and Nehari solvers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverOptions {
    /// Relative objective-decrease tolerance for the energy solvers.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Initial step length.
    pub step0: f64,
    /// Armijo backtracking factor.
    pub armijo_factor: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Seed for randomized restarts and the check suites.
    pub seed: u64,
    /// Number of initializations for the Nehari solver (first is canonical).
    pub restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50_000,
            step0: 1.0,
            armijo_factor: 0.5,
            armijo_c: 1e-4,
            seed: 0,
            restarts: 1,
        }
    }
}

impl SolverOptions {
    /// Validates the numeric fields.
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.step0 > 0.0) {
            return Err(Error::InvalidParameter(
                "solver options require tol > 0, max_iter >= 1, step0 > 0".into(),
            ));
        }
        if !(self.armijo_factor > 0.0 && self.armijo_factor < 1.0) || !(self.armijo_c > 0.0) {
            return Err(Error::InvalidParameter(
                "armijo factor must lie in (0,1) and the constant must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Rayleigh quotient `||Du||_r^r / ||u||_r^r`; scale-invariant, rejects u == 0.
pub fn rayleigh_quotient(u: &DiscreteFunction, r: f64) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::ZeroFunction);
    }
    Ok(grad_rnorm(u, r)? / lr_norm(u, r))
}

/// Computes the principal eigenpair of the discrete r-Laplacian on `mesh` by
/// normalized gradient descent on the Rayleigh quotient, started from the
/// positive product-of-sines bump.
///
/// Steps use a Barzilai-Borwein length with Armijo backtracking; near the
/// floating-point floor of the quotient, steps that still reduce the
/// eigen-residual are accepted as long as the quotient does not grow beyond
/// a 1e-13 relative slack, so the sequence is non-increasing to that slack.
/// Flux regularization is 0 for `r >= 2` and 1e-8 for the singular `r < 2`.
///
/// Converges when the residual drops below `1e-8 * lam1`; otherwise returns
/// [`Error::NonConvergence`].
pub fn principal_eigenpair(mesh: &Mesh, r: f64, opts: &SolverOptions) -> Result<EigenPair> {
    let (pair, converged) = principal_eigenpair_raw(mesh, r, opts)?;
    if !converged {
        return Err(Error::NonConvergence {
            iterations: pair.iterations,
            residual: pair.residual,
            detail: format!("eigen-residual above {EIGEN_RESIDUAL_RTOL:e} * lam1 at r = {r}"),
        });
    }
    Ok(pair)
}

/// The first `k` eigenvalues of the discrete Dirichlet Laplacian (r = 2) in
/// ascending order, from the closed form `(4/h^2) sin^2(m pi h / (2 extent))`
/// per axis, tensor-summed across axes in 2D.
pub fn linear_spectrum(mesh: &Mesh, k: usize) -> Result<Vec<f64>> {
    let total = mesh.node_count();
    if k == 0 || k > total {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={total}, got {k}"
        )));
    }
    let axis = |ax: usize| -> Vec<f64> {
        (1..=mesh.n[ax])
            .map(|m| {
                let h = mesh.h[ax];
                let s = (m as f64 * std::f64::consts::PI * h / (2.0 * mesh.extent[ax])).sin();
                4.0 / (h * h) * s * s
            })
            .collect()
    };
    let mut lams: Vec<f64> = match mesh.dim {
        1 => axis(0),
        _ => {
            let (ax, ay) = (axis(0), axis(1));
            ay.iter().flat_map(|ly| ax.iter().map(move |lx| lx + ly)).collect()
        }
    };
    lams.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lams.truncate(k);
    Ok(lams)
}

/// Like [`principal_eigenpair`] but reports non-convergence through the flag
/// instead of discarding the best iterate, so the CLI can still write its
/// report before exiting with the non-convergence code.
pub(crate) fn principal_eigenpair_raw(
    mesh: &Mesh,
    r: f64,
    opts: &SolverOptions,
) -> Result<(EigenPair, bool)> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent must exceed 1, got {r}")));
    }
    opts.validate()?;
    let eps = if r < 2.0 { 1e-8 } else { 0.0 };

    // Positive bump init: product of sin(pi x / extent) across axes.
    let mut u = DiscreteFunction::from_fn(mesh, |x, y| {
        let sx = (std::f64::consts::PI * x / mesh.extent[0]).sin();
        match mesh.dim {
            1 => sx,
            _ => sx * (std::f64::consts::PI * y / mesh.extent[1]).sin(),
        }
    });
    normalize(&mut u, r);

    let mut lam = grad_rnorm(&u, r)?;
    let (mut resid_vec, mut resid) = residual(&u, r, eps, lam);
    let mut step = opts.step0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (u, gradient)
    let mut no_progress = 0usize;
    let mut iterations = 0usize;

    for _ in 0..opts.max_iter {
        if resid <= EIGEN_RESIDUAL_RTOL * lam {
            break;
        }
        // L-normalized iterate: grad of the quotient is r * residual vector.
        let grad: Vec<f64> = resid_vec.iter().map(|v| r * v).collect();
        if let Some((pu, pg)) = &prev {
            let du: Vec<f64> = u.values.iter().zip(pu).map(|(a, b)| a - b).collect();
            let dg: Vec<f64> = grad.iter().zip(pg).map(|(a, b)| a - b).collect();
            let denom = dot_h(&u, &du, &dg);
            if denom > 0.0 {
                step = (dot_h(&u, &du, &du) / denom).clamp(1e-14, 1e14);
            }
        }
        prev = Some((u.values.clone(), grad.clone()));
        let gg = dot_h(&u, &grad, &grad);

        let mut st = step;
        let mut accepted = false;
        for _ in 0..80 {
            let mut trial = DiscreteFunction {
                mesh: u.mesh.clone(),
                values: u.values.iter().zip(&grad).map(|(a, g)| a - st * g).collect(),
            };
            if trial.is_zero() {
                st *= opts.armijo_factor;
                continue;
            }
            normalize(&mut trial, r);
            let lam_t = match grad_rnorm(&trial, r) {
                Ok(v) if v.is_finite() => v,
                _ => {
                    st *= opts.armijo_factor;
                    continue;
                }
            };
            let (rv_t, res_t) = residual(&trial, r, eps, lam_t);
            let armijo = lam_t <= lam - opts.armijo_c * st * gg;
            let polish = res_t < resid && lam_t <= lam * (1.0 + 1e-13);
            if armijo || polish {
                u = trial;
                lam = lam_t;
                resid_vec = rv_t;
                resid = res_t;
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
            if no_progress > 100 {
                break;
            }
        }
    }

    // Sign convention: positive nodal sum, then the positivity invariant.
    if u.values.iter().sum::<f64>() < 0.0 {
        u = u.scaled(-1.0);
    }
    normalize(&mut u, r);
    lam = grad_rnorm(&u, r)?;
    let (_, final_res) = residual(&u, r, eps, lam);
    let positive = u.values.iter().all(|&v| v > 0.0);
    let converged = final_res <= EIGEN_RESIDUAL_RTOL * lam && positive && lam.is_finite();
    let pair = EigenPair { r, lam1: lam, u1: u, iterations, residual: final_res };
    Ok((pair, converged))
}

fn normalize(u: &mut DiscreteFunction, r: f64) {
    let l = lr_norm(u, r).powf(1.0 / r);
    for v in &mut u.values {
        *v /= l;
    }
}

/// Residual vector `A_r(u) - lam |u|^(r-2) u` and its discrete L2 norm.
fn residual(u: &DiscreteFunction, r: f64, eps: f64, lam: f64) -> (Vec<f64>, f64) {
    let au = crate::energy::apply_r_operator(u, r, eps).expect("validated r");
    let mass = mass_term(&u.values, r, eps);
    let vec: Vec<f64> = au
        .values
        .iter()
        .zip(&mass)
        .map(|(a, m)| a - lam * m)
        .collect();
    let nrm = norm_h(u, &vec);
    (vec, nrm)
}
