//! Finite-difference realization of
//! `L u = div(a grad u) + b . grad u + c u` with homogeneous Dirichlet data.
//!
//! Diagonal diffusion uses the flux form with `a` averaged arithmetically to
//! the cell faces; mixed terms and advection use central differences. Rows
//! are stored in CSR with ascending column order.

use nalgebra::DMatrix;

use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    symmetric: bool,
    peclet: f64,
}

impl SparseOperator {
    /// Builds from unordered triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.max(c) + 1,
                });
            }
            rows[r].push((c, v));
        }
        Ok(Self::from_rows(n, rows, false, 0.0))
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|i| vec![(i, 1.0)]).collect();
        Self::from_rows(n, rows, true, 0.0)
    }

    fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>, symmetric: bool, peclet: f64) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
            symmetric,
            peclet,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Set at assembly when the advection field vanishes identically.
    pub fn symmetry_flag(&self) -> bool {
        self.symmetric
    }

    /// Grid Péclet number `max_j max|b_j| h_j / (2 a0)` recorded at assembly.
    pub fn peclet(&self) -> f64 {
        self.peclet
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.push((r, self.cols[k], self.vals[k]));
            }
        }
        out
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|e| e.0 == c).map_or(0.0, |e| e.1)
    }

    /// `y = A x` on raw slices.
    pub fn mul_into<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *yr = acc;
        }
    }

    pub fn apply<T: Scalar>(&self, v: &Field<T>) -> Result<Field<T>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        let mut out = Field::zeros(v.grid());
        self.mul_into(v.values(), out.values_mut());
        Ok(out)
    }

    /// `alpha * I + beta * self`, keeping the sparsity pattern plus the diagonal.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Self {
        let rows = (0..self.n)
            .map(|r| {
                let mut row: Vec<(usize, f64)> = self.row(r).map(|(c, v)| (c, beta * v)).collect();
                row.push((r, alpha));
                row
            })
            .collect();
        Self::from_rows(self.n, rows, self.symmetric, self.peclet)
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                rows[c].push((r, v));
            }
        }
        Self::from_rows(self.n, rows, self.symmetric, self.peclet)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Exact entrywise comparison with the transpose.
    pub fn is_exactly_symmetric(&self) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }
}

/// Exact transpose; realizes the discrete adjoint of `L`.
pub fn adjoint_operator(op: &SparseOperator) -> SparseOperator {
    op.transpose()
}

pub fn apply_operator<T: Scalar>(op: &SparseOperator, v: &Field<T>) -> Result<Field<T>> {
    op.apply(v)
}

/// Assembles the discrete operator on the interior nodes of `grid`.
pub fn assemble_operator(grid: &Grid, coeffs: &CoefficientSet) -> Result<SparseOperator> {
    if coeffs.grid() != grid {
        return Err(Error::ShapeMismatch {
            what: "coefficient grid".into(),
            expected: grid.unknowns(),
            got: coeffs.grid().unknowns(),
        });
    }
    let dim = grid.dim();
    let n = grid.unknowns();
    let h = grid.spacing();
    let counts = grid.n_interior();

    let neighbour = |idx: [usize; 2], off: [isize; 2]| -> Option<usize> {
        let mut out = [0usize; 2];
        for axis in 0..dim {
            let v = idx[axis] as isize + off[axis];
            if v < 0 || v >= counts[axis] as isize {
                return None;
            }
            out[axis] = v as usize;
        }
        Some(grid.flat_index(out))
    };
    let closed = |idx: [usize; 2], off: [isize; 2]| -> [usize; 2] {
        let mut out = [0usize; 2];
        for axis in 0..dim {
            out[axis] = (idx[axis] as isize + 1 + off[axis]) as usize;
        }
        out
    };

    let mut rows = Vec::with_capacity(n);
    for p in 0..n {
        let idx = grid.multi_index(p);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(1 + 4 * dim);
        let mut diag = coeffs.c(p);
        let a_here = coeffs.a_closed(closed(idx, [0, 0]));

        for axis in 0..dim {
            let mut e = [0isize; 2];
            e[axis] = 1;
            let minus = [-e[0], -e[1]];
            let h2 = h[axis] * h[axis];
            let a_plus = 0.5 * (a_here[axis][axis] + coeffs.a_closed(closed(idx, e))[axis][axis]);
            let a_minus =
                0.5 * (a_here[axis][axis] + coeffs.a_closed(closed(idx, minus))[axis][axis]);
            diag -= (a_plus + a_minus) / h2;
            let adv = coeffs.b(p)[axis] / (2.0 * h[axis]);
            if let Some(q) = neighbour(idx, e) {
                row.push((q, a_plus / h2));
                if adv != 0.0 {
                    row.push((q, adv));
                }
            }
            if let Some(q) = neighbour(idx, minus) {
                row.push((q, a_minus / h2));
                if adv != 0.0 {
                    row.push((q, -adv));
                }
            }
        }

        if dim == 2 {
            let denom = 4.0 * h[0] * h[1];
            for sx in [-1isize, 1] {
                for sy in [-1isize, 1] {
                    let Some(q) = neighbour(idx, [sx, sy]) else {
                        continue;
                    };
                    let sign = (sx * sy) as f64;
                    // d_x(a12 d_y u) then d_y(a21 d_x u)
                    let from_x = coeffs.a_closed(closed(idx, [sx, 0]))[0][1];
                    let from_y = coeffs.a_closed(closed(idx, [0, sy]))[1][0];
                    if from_x != 0.0 || from_y != 0.0 {
                        row.push((q, sign * from_x / denom));
                        row.push((q, sign * from_y / denom));
                    }
                }
            }
        }
        row.push((p, diag));
        rows.push(row);
    }

    let symmetric = !coeffs.has_advection();
    let peclet = (0..dim)
        .map(|axis| {
            let bmax = (0..n)
                .map(|p| coeffs.b(p)[axis].abs())
                .fold(0.0, f64::max);
            bmax * h[axis] / (2.0 * coeffs.a0())
        })
        .fold(0.0, f64::max);
    if peclet >= 1.0 {
        log::warn!("grid Péclet number {peclet:.3} >= 1; central advection may oscillate");
    }
    Ok(SparseOperator::from_rows(n, rows, symmetric, peclet))
}
