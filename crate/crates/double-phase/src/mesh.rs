//! Uniform tensor grids on an interval or rectangle with an implicit
//! homogeneous Dirichlet boundary, plus the forward-difference cell
//! gradients that every energy in this crate is built from.

use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform grid over `[0, extent_x] (x [0, extent_y])` storing only interior
/// nodes; the boundary trace is identically zero by construction.
///
/// Interior nodes are indexed lexicographically with x fastest: in 2D the
/// node `(i, j)` (1-based, `1 <= i <= n[0]`, `1 <= j <= n[1]`) sits at
/// `(i*h[0], j*h[1])` and occupies slot `(j-1)*n[0] + (i-1)`.
/// Construct through [`build_mesh`], which validates every field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    /// Spatial dimension, 1 or 2.
    pub dim: usize,
    /// Interior node count per axis (`dim` entries, each >= 1).
    pub n: Vec<usize>,
    /// Domain length per axis (`dim` entries, each > 0).
    pub extent: Vec<f64>,
    /// Grid spacing per axis, `extent / (n + 1)`.
    pub h: Vec<f64>,
}

impl Mesh {
    /// Total number of interior nodes.
    pub fn node_count(&self) -> usize {
        self.n.iter().product()
    }

    /// Total number of cells, `(n+1)` per axis.
    pub fn cell_count(&self) -> usize {
        self.n.iter().map(|&n| n + 1).product()
    }

    /// Measure (length or area) of one cell; nodes carry the same measure.
    pub fn cell_measure(&self) -> f64 {
        self.h.iter().product()
    }

    /// Coordinates of the interior node in lexicographic slot `k` (0-based);
    /// the y component is 0.0 in 1D.
    pub fn node_coords(&self, k: usize) -> [f64; 2] {
        match self.dim {
            1 => [(k + 1) as f64 * self.h[0], 0.0],
            _ => {
                let nx = self.n[0];
                let (i, j) = (k % nx, k / nx);
                [(i + 1) as f64 * self.h[0], (j + 1) as f64 * self.h[1]]
            }
        }
    }
}

/// Scalar field given by one value per interior node of a [`Mesh`];
/// boundary values are implicitly zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteFunction {
    /// The grid this function lives on (not serialized with the values;
    /// outputs carry the mesh descriptor separately).
    #[serde(skip)]
    pub mesh: Mesh,
    /// Nodal values in lexicographic order, x fastest.
    pub values: Vec<f64>,
}

impl DiscreteFunction {
    /// Wraps nodal values on `mesh`, rejecting a length mismatch.
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} nodal values, got {}",
                mesh.node_count(),
                values.len()
            )));
        }
        Ok(Self { mesh: mesh.clone(), values })
    }

    /// The zero function on `mesh`.
    pub fn zeros(mesh: &Mesh) -> Self {
        Self { mesh: mesh.clone(), values: vec![0.0; mesh.node_count()] }
    }

    /// Samples `f(x, y)` at every interior node (`y = 0` in 1D).
    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..mesh.node_count())
            .map(|k| {
                let [x, y] = mesh.node_coords(k);
                f(x, y)
            })
            .collect();
        Self { mesh: mesh.clone(), values }
    }

    /// True iff every nodal value is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Returns `self` scaled by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }
}

/// Per-cell forward-difference gradients of a [`DiscreteFunction`].
///
/// Cells are enumerated lexicographically with x fastest; in 2D the gradient
/// of cell `(cx, cy)` is the forward difference anchored at the cell's
/// lower-left corner `(cx, cy)` (corner values outside the interior node set
/// are zero). The y component is 0.0 in 1D.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGradients {
    /// One gradient vector per cell.
    pub g: Vec<[f64; 2]>,
    /// Measure of each (uniform) cell.
    pub measure: f64,
}

/// Builds a validated uniform mesh with `n` interior nodes and domain
/// lengths `extent` per axis.
pub fn build_mesh(dim: usize, n: &[usize], extent: &[f64]) -> Result<Mesh> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidParameter(format!("dim must be 1 or 2, got {dim}")));
    }
    if n.len() != dim || extent.len() != dim {
        return Err(Error::InvalidParameter(format!(
            "need {dim} entries for n and extent, got {} and {}",
            n.len(),
            extent.len()
        )));
    }
    if n.iter().any(|&ni| ni == 0) {
        return Err(Error::InvalidParameter("n must be >= 1 on every axis".into()));
    }
    if extent.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidParameter("extent must be positive and finite".into()));
    }
    let h = n
        .iter()
        .zip(extent)
        .map(|(&ni, &ei)| ei / (ni + 1) as f64)
        .collect();
    Ok(Mesh { dim, n: n.to_vec(), extent: extent.to_vec(), h })
}

/// Value of `u` at grid position `(i, j)` in 0-based *grid* coordinates
/// where `i == 0`, `i == n+1` (and likewise for j) are boundary zeros.
#[inline]
fn at(u: &DiscreteFunction, i: usize, j: usize) -> f64 {
    let m = &u.mesh;
    let (nx, ny) = (m.n[0], if m.dim == 2 { m.n[1] } else { 1 });
    if i == 0 || i > nx || j == 0 || j > ny {
        0.0
    } else {
        u.values[(j - 1) * nx + (i - 1)]
    }
}

/// Forward-difference gradient of every cell of `u`, with the cell measure
/// attached; linear in `u`, and zero on all cells iff `u == 0`.
pub fn cell_gradients(u: &DiscreteFunction) -> CellGradients {
    let m = &u.mesh;
    let measure = m.cell_measure();
    let mut g = Vec::with_capacity(m.cell_count());
    match m.dim {
        1 => {
            let h = m.h[0];
            for c in 0..=m.n[0] {
                g.push([(at(u, c + 1, 1) - at(u, c, 1)) / h, 0.0]);
            }
        }
        _ => {
            let (hx, hy) = (m.h[0], m.h[1]);
            for cy in 0..=m.n[1] {
                for cx in 0..=m.n[0] {
                    let corner = at(u, cx, cy);
                    g.push([
                        (at(u, cx + 1, cy) - corner) / hx,
                        (at(u, cx, cy + 1) - corner) / hy,
                    ]);
                }
            }
        }
    }
    CellGradients { g, measure }
}
