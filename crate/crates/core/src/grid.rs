//! Uniform structured grids on intervals and rectangles, and nodal fields.
//!
//! Unknowns live on interior nodes only; homogeneous Dirichlet data on the
//! boundary is implicit. Flat indices are lexicographic with the x index
//! running fastest: `flat = i + nx * j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    n_interior: [usize; 2],
    h: [f64; 2],
}

impl Grid {
    /// Builds a 1D or 2D grid. `extents` and `n_interior` must have `dim` entries.
    pub fn new(dim: usize, extents: &[(f64, f64)], n_interior: &[usize]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if extents.len() != dim || n_interior.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} extents and counts, got {} and {}",
                extents.len(),
                n_interior.len()
            )));
        }
        let mut lo = [0.0; 2];
        let mut hi = [1.0; 2];
        let mut n = [1usize; 2];
        let mut h = [1.0; 2];
        for axis in 0..dim {
            let (a, b) = extents[axis];
            if !(a.is_finite() && b.is_finite()) || b <= a {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: degenerate interval [{a}, {b}]"
                )));
            }
            if n_interior[axis] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: n_interior must be >= 2, got {}",
                    n_interior[axis]
                )));
            }
            lo[axis] = a;
            hi[axis] = b;
            n[axis] = n_interior[axis];
            h[axis] = (b - a) / (n_interior[axis] + 1) as f64;
        }
        Ok(Self {
            dim,
            lo,
            hi,
            n_interior: n,
            h,
        })
    }

    pub fn interval(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(1, &[(lo, hi)], &[n])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        Self::new(2, &[x, y], &[nx, ny])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> Vec<(f64, f64)> {
        (0..self.dim).map(|a| (self.lo[a], self.hi[a])).collect()
    }

    pub fn n_interior(&self) -> &[usize] {
        &self.n_interior[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h[..self.dim]
    }

    /// Largest spacing over all axes.
    pub fn h_max(&self) -> f64 {
        self.spacing().iter().copied().fold(0.0, f64::max)
    }

    pub fn unknowns(&self) -> usize {
        self.n_interior().iter().product()
    }

    /// Quadrature weight of one node: product of spacings.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        let nx = self.n_interior[0];
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat % nx, flat / nx]
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] + self.n_interior[0] * idx[1]
        }
    }

    /// Coordinate of interior node with zero-based multi-index `idx`.
    pub fn node(&self, idx: [usize; 2]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for axis in 0..self.dim {
            x[axis] = self.lo[axis] + (idx[axis] + 1) as f64 * self.h[axis];
        }
        x
    }

    pub fn coord(&self, flat: usize) -> [f64; 2] {
        self.node(self.multi_index(flat))
    }

    /// Coordinates of every interior node as a `dim`-length vector.
    pub fn coords_vec(&self, flat: usize) -> Vec<f64> {
        self.coord(flat)[..self.dim].to_vec()
    }

    /// Node count of the closed grid (boundary included), per axis.
    pub fn closed_counts(&self) -> [usize; 2] {
        let mut c = [1usize; 2];
        for (axis, ci) in c.iter_mut().enumerate().take(self.dim) {
            *ci = self.n_interior[axis] + 2;
        }
        c
    }

    pub fn closed_len(&self) -> usize {
        self.closed_counts().iter().product()
    }

    /// Flat index on the closed grid; `idx` counts from the boundary node 0.
    pub fn closed_flat(&self, idx: [usize; 2]) -> usize {
        let c = self.closed_counts();
        idx[0] + c[0] * idx[1]
    }

    pub fn closed_node(&self, idx: [usize; 2]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for axis in 0..self.dim {
            x[axis] = self.lo[axis] + idx[axis] as f64 * self.h[axis];
        }
        x
    }

    pub fn closed_coord(&self, flat: usize) -> [f64; 2] {
        let c = self.closed_counts();
        self.closed_node([flat % c[0], flat / c[0]])
    }
}

/// Nodal values on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: Scalar = f64> {
    grid: Grid,
    values: Vec<T>,
}

pub type ComplexField = Field<Complex64>;

impl<T: Scalar> Field<T> {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            values: vec![T::zero(); grid.unknowns()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.unknowns() {
            return Err(Error::ShapeMismatch {
                what: "field".into(),
                expected: grid.unknowns(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid: *grid,
            values,
        })
    }

    /// Samples `f` at every interior node.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> T) -> Self {
        let values = (0..grid.unknowns()).map(|k| f(grid.coord(k))).collect();
        Self {
            grid: *grid,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete L2 norm with weight `h_x * h_y`.
    pub fn l2_norm(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        // scaled to avoid underflow of tiny entries
        let s: f64 = self.values.iter().map(|v| v.modulus() / m).map(|v| v * v).sum();
        m * (s * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.modulus())
            .fold(0.0, f64::max)
    }

    /// Weighted inner product `h * sum(conj(self_k) * other_k)`.
    pub fn inner(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a.conj() * *b;
        }
        acc * self.grid.cell_volume()
    }

    pub fn check_same_grid(&self, other: &Field<impl Scalar>) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: T, x: &Self) {
        for (v, xi) in self.values.iter_mut().zip(&x.values) {
            *v += alpha * *xi;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a - *b)
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a + *b)
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }
}

impl Field<f64> {
    pub fn to_complex(&self) -> ComplexField {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.inner(other)
    }
}

impl ComplexField {
    pub fn conj(&self) -> Self {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn scale_complex(&mut self, z: Complex64) {
        for v in &mut self.values {
            *v *= z;
        }
    }
}
