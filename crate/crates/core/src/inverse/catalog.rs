use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Ground-truth sources for synthetic experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceShape {
    Zero,
    /// `prod_i sin(k_i pi (x_i - lo_i) / L_i)`
    Eigenmode { modes: Vec<usize> },
    /// `phi_first + weight * phi_second`
    TwoMode {
        first: Vec<usize>,
        second: Vec<usize>,
        weight: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `value` inside the box `[lower, upper]`, zero elsewhere.
    PiecewiseConstant {
        value: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn check_len(what: &str, v: usize, dim: usize) -> Result<()> {
    if v != dim {
        return Err(Error::InvalidParameter(format!(
            "source {what} has {v} entries, grid dimension is {dim}"
        )));
    }
    Ok(())
}

fn mode(grid: &Grid, k: &[usize]) -> Result<Field> {
    check_len("modes", k.len(), grid.dim())?;
    if k.contains(&0) {
        return Err(Error::InvalidParameter("mode numbers start at 1".into()));
    }
    let ext = grid.extents();
    Ok(Field::from_fn(grid, |x| {
        (0..grid.dim())
            .map(|i| (k[i] as f64 * PI * (x[i] - ext[i].0) / (ext[i].1 - ext[i].0)).sin())
            .product()
    }))
}

impl SourceShape {
    pub fn field(&self, grid: &Grid) -> Result<Field> {
        let dim = grid.dim();
        match self {
            SourceShape::Zero => Ok(Field::zeros(grid)),
            SourceShape::Eigenmode { modes } => mode(grid, modes),
            SourceShape::TwoMode {
                first,
                second,
                weight,
            } => {
                let mut f = mode(grid, first)?;
                f.axpy(*weight, &mode(grid, second)?);
                Ok(f)
            }
            SourceShape::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                check_len("center", center.len(), dim)?;
                if !(*width > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                Ok(Field::from_fn(grid, |x| {
                    let r2: f64 = (0..dim).map(|i| (x[i] - center[i]).powi(2)).sum();
                    amplitude * (-r2 / (2.0 * width * width)).exp()
                }))
            }
            SourceShape::PiecewiseConstant {
                value,
                lower,
                upper,
            } => {
                check_len("lower corner", lower.len(), dim)?;
                check_len("upper corner", upper.len(), dim)?;
                Ok(Field::from_fn(grid, |x| {
                    if (0..dim).all(|i| x[i] >= lower[i] && x[i] <= upper[i]) {
                        *value
                    } else {
                        0.0
                    }
                }))
            }
        }
    }
}
