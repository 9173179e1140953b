//! Coefficient fields of the elliptic operator and the ellipticity check.
//!
//! The diffusion matrix is stored on the closed grid (boundary nodes
//! included) because the flux discretization averages it to the cell faces
//! next to the boundary. Advection and reaction live on interior nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Closed-form scalar profiles available without an expression parser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// `offset + sum_i slope_i * x_i`
    Affine { offset: f64, slope: Vec<f64> },
    /// `offset + amplitude * prod_i sin(wavenumber_i * pi * x_i)`
    Sinusoidal {
        offset: f64,
        amplitude: f64,
        wavenumber: Vec<f64>,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn eval(&self, x: [f64; 2], dim: usize) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Affine { offset, slope } => {
                offset
                    + slope
                        .iter()
                        .take(dim)
                        .zip(x.iter())
                        .map(|(g, xi)| g * xi)
                        .sum::<f64>()
            }
            Profile::Sinusoidal {
                offset,
                amplitude,
                wavenumber,
            } => {
                let prod: f64 = wavenumber
                    .iter()
                    .take(dim)
                    .zip(x.iter())
                    .map(|(k, xi)| (k * std::f64::consts::PI * xi).sin())
                    .product();
                offset + amplitude * prod
            }
        }
    }

    /// Largest absolute value over the box `[lo, hi]` (exact for constant and
    /// affine profiles, a bound for sinusoids).
    pub fn sup_bound(&self, extents: &[(f64, f64)]) -> f64 {
        match self {
            Profile::Constant { value } => value.abs(),
            Profile::Affine { offset, slope } => {
                let mut m = *offset;
                let mut spread = 0.0;
                for (g, (lo, hi)) in slope.iter().zip(extents) {
                    m += g * 0.5 * (lo + hi);
                    spread += (g * 0.5 * (hi - lo)).abs();
                }
                m.abs() + spread
            }
            Profile::Sinusoidal {
                offset, amplitude, ..
            } => offset.abs() + amplitude.abs(),
        }
    }
}

/// Coefficient specification: profiles for every entry of `a`, `b` and `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpec {
    /// Row-major `d x d` diffusion entries.
    pub a: Vec<Profile>,
    /// One profile per axis.
    pub b: Vec<Profile>,
    pub c: Profile,
}

impl CoefficientSpec {
    /// `a = I`, `b = 0`, `c = 0`.
    pub fn laplacian(dim: usize) -> Self {
        let mut a = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                a.push(Profile::constant(if i == j { 1.0 } else { 0.0 }));
            }
        }
        Self {
            a,
            b: vec![Profile::constant(0.0); dim],
            c: Profile::constant(0.0),
        }
    }

    pub fn with_advection(mut self, b: Vec<Profile>) -> Self {
        self.b = b;
        self
    }

    pub fn with_reaction(mut self, c: Profile) -> Self {
        self.c = c;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    grid: Grid,
    a: Vec<[[f64; 2]; 2]>,
    b: Vec<[f64; 2]>,
    c: Vec<f64>,
    a0: f64,
}

impl CoefficientSet {
    pub fn from_spec(grid: &Grid, spec: &CoefficientSpec) -> Result<Self> {
        let d = grid.dim();
        if spec.a.len() != d * d {
            return Err(Error::ShapeMismatch {
                what: "diffusion profiles".into(),
                expected: d * d,
                got: spec.a.len(),
            });
        }
        if spec.b.len() != d {
            return Err(Error::ShapeMismatch {
                what: "advection profiles".into(),
                expected: d,
                got: spec.b.len(),
            });
        }
        let a = (0..grid.closed_len())
            .map(|k| {
                let x = grid.closed_coord(k);
                let mut m = [[0.0; 2]; 2];
                for i in 0..d {
                    for j in 0..d {
                        m[i][j] = spec.a[i * d + j].eval(x, d);
                    }
                }
                m
            })
            .collect();
        let b = (0..grid.unknowns())
            .map(|k| {
                let x = grid.coord(k);
                let mut v = [0.0; 2];
                for (j, vj) in v.iter_mut().enumerate().take(d) {
                    *vj = spec.b[j].eval(x, d);
                }
                v
            })
            .collect();
        let c = (0..grid.unknowns())
            .map(|k| spec.c.eval(grid.coord(k), d))
            .collect();
        Self::from_arrays(grid, a, b, c)
    }

    /// Builds from per-node arrays. `a` may be given on the closed grid or on
    /// interior nodes only; in the latter case boundary nodes copy the nearest
    /// interior value.
    pub fn from_arrays(
        grid: &Grid,
        a: Vec<[[f64; 2]; 2]>,
        b: Vec<[f64; 2]>,
        c: Vec<f64>,
    ) -> Result<Self> {
        let a = if a.len() == grid.closed_len() {
            a
        } else if a.len() == grid.unknowns() {
            extend_to_closed(grid, &a)
        } else {
            return Err(Error::ShapeMismatch {
                what: "diffusion array".into(),
                expected: grid.closed_len(),
                got: a.len(),
            });
        };
        if b.len() != grid.unknowns() {
            return Err(Error::ShapeMismatch {
                what: "advection array".into(),
                expected: grid.unknowns(),
                got: b.len(),
            });
        }
        if c.len() != grid.unknowns() {
            return Err(Error::ShapeMismatch {
                what: "reaction array".into(),
                expected: grid.unknowns(),
                got: c.len(),
            });
        }
        let mut set = Self {
            grid: *grid,
            a,
            b,
            c,
            a0: 0.0,
        };
        set.a0 = check_ellipticity(&set)?;
        Ok(set)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Diffusion matrix at closed-grid node `idx`.
    pub fn a_closed(&self, idx: [usize; 2]) -> [[f64; 2]; 2] {
        self.a[self.grid.closed_flat(idx)]
    }

    pub fn a_values(&self) -> &[[[f64; 2]; 2]] {
        &self.a
    }

    pub fn b(&self, flat: usize) -> [f64; 2] {
        self.b[flat]
    }

    pub fn c(&self, flat: usize) -> f64 {
        self.c[flat]
    }

    pub fn c_values(&self) -> &[f64] {
        &self.c
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn has_advection(&self) -> bool {
        self.b.iter().any(|v| v[0] != 0.0 || v[1] != 0.0)
    }

    pub fn b_max(&self) -> f64 {
        self.b
            .iter()
            .map(|v| v[0].abs().max(v[1].abs()))
            .fold(0.0, f64::max)
    }

    pub fn c_max(&self) -> f64 {
        self.c.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn c_min(&self) -> f64 {
        self.c.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn extend_to_closed(grid: &Grid, interior: &[[[f64; 2]; 2]]) -> Vec<[[f64; 2]; 2]> {
    let cc = grid.closed_counts();
    let n = grid.n_interior();
    let clamp = |i: usize, axis: usize| -> usize {
        if grid.dim() <= axis {
            0
        } else {
            i.clamp(1, n[axis]) - 1
        }
    };
    let mut out = Vec::with_capacity(grid.closed_len());
    for j in 0..cc[1] {
        for i in 0..cc[0] {
            let src = grid.flat_index([clamp(i, 0), clamp(j, 1)]);
            out.push(interior[src]);
        }
    }
    out
}

/// Returns the minimum over nodes of the smallest eigenvalue of `a(x)`.
pub fn check_ellipticity(coeffs: &CoefficientSet) -> Result<f64> {
    let grid = &coeffs.grid;
    let mut a0 = f64::INFINITY;
    for (k, m) in coeffs.a.iter().enumerate() {
        let coord = grid.closed_coord(k)[..grid.dim()].to_vec();
        let lam = if grid.dim() == 1 {
            m[0][0]
        } else {
            if m[0][1] != m[1][0] {
                return Err(Error::NotSymmetric {
                    coord,
                    a12: m[0][1],
                    a21: m[1][0],
                });
            }
            let mean = 0.5 * (m[0][0] + m[1][1]);
            let dev = (0.25 * (m[0][0] - m[1][1]).powi(2) + m[0][1] * m[0][1]).sqrt();
            mean - dev
        };
        if !(lam > 0.0) {
            return Err(Error::NotElliptic {
                coord,
                eigenvalue: lam,
            });
        }
        a0 = a0.min(lam);
    }
    Ok(a0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_unit_constant() {
        let g = Grid::rectangle((0.0, 1.0), (0.0, 1.0), 4, 4).unwrap();
        let set = CoefficientSet::from_spec(&g, &CoefficientSpec::laplacian(2)).unwrap();
        assert_eq!(check_ellipticity(&set).unwrap(), 1.0);
    }

    #[test]
    fn diagonal_anisotropy() {
        let g = Grid::rectangle((0.0, 1.0), (0.0, 1.0), 4, 4).unwrap();
        let spec = CoefficientSpec {
            a: vec![
                Profile::constant(2.0),
                Profile::constant(0.0),
                Profile::constant(0.0),
                Profile::constant(0.5),
            ],
            ..CoefficientSpec::laplacian(2)
        };
        let set = CoefficientSet::from_spec(&g, &spec).unwrap();
        assert_eq!(set.a0(), 0.5);
    }

    #[test]
    fn negative_eigenvalue_names_node() {
        let g = Grid::rectangle((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap();
        let mut a = vec![[[1.0, 0.0], [0.0, 1.0]]; g.closed_len()];
        let bad = g.closed_flat([2, 3]);
        a[bad] = [[1.0, 0.0], [0.0, -0.1]];
        let err = CoefficientSet::from_arrays(
            &g,
            a,
            vec![[0.0; 2]; g.unknowns()],
            vec![0.0; g.unknowns()],
        )
        .unwrap_err();
        match err {
            Error::NotElliptic { coord, eigenvalue } => {
                assert_eq!(coord, vec![0.5, 0.75]);
                assert!((eigenvalue + 0.1).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let g = Grid::rectangle((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap();
        let mut a = vec![[[1.0, 0.0], [0.0, 1.0]]; g.closed_len()];
        a[7] = [[1.0, 0.2], [0.1, 1.0]];
        let err = CoefficientSet::from_arrays(
            &g,
            a,
            vec![[0.0; 2]; g.unknowns()],
            vec![0.0; g.unknowns()],
        );
        assert!(matches!(err, Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = Grid::interval(0.0, 1.0, 5).unwrap();
        let err = CoefficientSet::from_arrays(
            &g,
            vec![[[1.0, 0.0], [0.0, 0.0]]; 4],
            vec![[0.0; 2]; 5],
            vec![0.0; 5],
        );
        assert!(matches!(err, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn interior_diffusion_is_extended() {
        let g = Grid::interval(0.0, 1.0, 3).unwrap();
        let a = vec![[[1.0, 0.0], [0.0, 0.0]], [[2.0, 0.0], [0.0, 0.0]], [[3.0, 0.0], [0.0, 0.0]]];
        let set = CoefficientSet::from_arrays(&g, a, vec![[0.0; 2]; 3], vec![0.0; 3]).unwrap();
        let diag: Vec<f64> = set.a_values().iter().map(|m| m[0][0]).collect();
        assert_eq!(diag, vec![1.0, 1.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn affine_profile() {
        let p = Profile::Affine {
            offset: 1.0,
            slope: vec![1.0],
        };
        assert_eq!(p.eval([0.25, 0.0], 1), 1.25);
        assert_eq!(p.sup_bound(&[(0.0, 1.0)]), 2.0);
    }
}
