//! Shared oracles for the integration suites: a dense symmetric eigensolver
//! over an independently assembled Laplacian matrix, and an ODE
//! shooting-method solver for the continuum principal eigenvalue of the
//! one-dimensional r-Laplacian.
#![allow(dead_code)]

use double_phase::mesh::Mesh;
use nalgebra::DMatrix;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for randomized suites.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense Dirichlet Laplacian on `mesh`, assembled directly from the
/// classical second-difference stencil (independent of the library's
/// operator code): tridiagonal `(-1, 2, -1)/h^2` in 1D, the five-point
/// stencil in 2D, interior nodes in lexicographic order with x fastest.
pub fn dense_laplacian(mesh: &Mesh) -> DMatrix<f64> {
    let n_total = mesh.node_count();
    let mut a = DMatrix::zeros(n_total, n_total);
    match mesh.dim {
        1 => {
            let w = 1.0 / (mesh.h[0] * mesh.h[0]);
            for i in 0..n_total {
                a[(i, i)] = 2.0 * w;
                if i + 1 < n_total {
                    a[(i, i + 1)] = -w;
                    a[(i + 1, i)] = -w;
                }
            }
        }
        _ => {
            let (nx, ny) = (mesh.n[0], mesh.n[1]);
            let wx = 1.0 / (mesh.h[0] * mesh.h[0]);
            let wy = 1.0 / (mesh.h[1] * mesh.h[1]);
            for j in 0..ny {
                for i in 0..nx {
                    let k = j * nx + i;
                    a[(k, k)] = 2.0 * wx + 2.0 * wy;
                    if i + 1 < nx {
                        a[(k, k + 1)] = -wx;
                        a[(k + 1, k)] = -wx;
                    }
                    if j + 1 < ny {
                        a[(k, k + nx)] = -wy;
                        a[(k + nx, k)] = -wy;
                    }
                }
            }
        }
    }
    a
}

/// Full sorted spectrum of [`dense_laplacian`] with the eigenvector of the
/// smallest eigenvalue (unit Euclidean norm, sign unnormalized).
pub fn dense_spectrum(mesh: &Mesh) -> (Vec<f64>, Vec<f64>) {
    let a = dense_laplacian(mesh);
    let eig = nalgebra::SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vector: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    (values, vector)
}

/// Continuum principal eigenvalue of `-(|u'|^{r-2} u')' = lam |u|^{r-2} u`
/// on `(0, length)` with zero boundary values, located by shooting: the IVP
/// `u(0) = 0`, `w(0) = 1` (with `w = |u'|^{r-2} u'`) is integrated by RK4
/// and `lam` is bisected until the first zero of `u` lands at `length`.
pub fn shooting_lam1(r: f64, length: f64) -> f64 {
    let first_zero = |lam: f64| -> f64 {
        let steps = 40_000usize;
        let h = 2.0 * length / steps as f64;
        let s = 1.0 / (r - 1.0);
        let f = |u: f64, w: f64| -> (f64, f64) {
            let du = if w == 0.0 { 0.0 } else { w.abs().powf(s) * w.signum() };
            let dw = if u == 0.0 { 0.0 } else { -lam * u.abs().powf(r - 2.0) * u };
            (du, dw)
        };
        let (mut u, mut w) = (0.0f64, 1.0f64);
        let mut x = 0.0f64;
        for _ in 0..steps {
            let (k1u, k1w) = f(u, w);
            let (k2u, k2w) = f(u + 0.5 * h * k1u, w + 0.5 * h * k1w);
            let (k3u, k3w) = f(u + 0.5 * h * k2u, w + 0.5 * h * k2w);
            let (k4u, k4w) = f(u + h * k3u, w + h * k3w);
            let nu = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            let nw = w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            if u > 0.0 && nu <= 0.0 {
                return x + h * u / (u - nu);
            }
            u = nu;
            w = nw;
            x += h;
        }
        f64::INFINITY
    };

    // The first zero moves left monotonically as lam grows.
    let mut lo = 1e-3;
    let mut hi = 10.0;
    while first_zero(hi) > length {
        hi *= 2.0;
        assert!(hi < 1e9, "shooting bracket failed for r = {r}");
    }
    while first_zero(lo) <= length {
        lo *= 0.5;
        assert!(lo > 1e-12, "shooting bracket failed for r = {r}");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if first_zero(mid) > length {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}
