use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::forward::{observe_final, solve_forward, Problem, Stepper};
use crate::grid::{Field, Grid};
use crate::krylov::SolveOptions;

/// Seed of the power-iteration start vector.
pub const POWER_SEED: u64 = 0x5eed_0001;

/// The source-to-data map `A: f -> u(., T)` of a problem together with its
/// exact discrete transpose. Built once, applied many times.
#[derive(Debug, Clone)]
pub struct SourceMap {
    grid: Grid,
    forward: Stepper,
    backward: Stepper,
    opts: SolveOptions,
}

impl SourceMap {
    pub fn new(problem: &Problem) -> Result<Self> {
        let forward = problem.stepper(problem.theta)?;
        let backward = forward.transposed();
        Ok(Self {
            grid: problem.grid,
            forward,
            backward,
            opts: problem.solver,
        })
    }

    /// Overrides the relative tolerance of the per-step solves.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.opts.tol = tol;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn unknowns(&self) -> usize {
        self.grid.unknowns()
    }

    fn check(&self, v: &Field) -> Result<()> {
        if v.grid() != &self.grid {
            return Err(Error::ShapeMismatch {
                what: "source-to-data argument".into(),
                expected: self.grid.unknowns(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `u_{n+1} = P^{-1}(Q u_n + dt w_n f)`, `u_0 = 0`; returns `u_N`.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        let st = &self.forward;
        let n = f.len();
        let mut u = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for (step, w) in st.weights.iter().enumerate() {
            st.q.mul_into(&u, &mut rhs);
            let w = st.dt * w;
            for (r, fi) in rhs.iter_mut().zip(f.values()) {
                *r += w * fi;
            }
            st.solve(&rhs, &mut u, &self.opts, step)?;
        }
        Field::from_values(&self.grid, u)
    }

    /// Transpose of [`apply`](Self::apply): `v_N = r`, and for
    /// `n = N-1, ..., 0`: `z = P^{-T} v_{n+1}`, accumulate `dt w_n z`,
    /// `v_n = Q^T z`.
    pub fn apply_adjoint(&self, r: &Field) -> Result<Field> {
        self.check(r)?;
        let st = &self.backward;
        let n = r.len();
        let mut v = r.values().to_vec();
        let mut z = vec![0.0; n];
        let mut acc = vec![0.0; n];
        for (step, w) in st.weights.iter().enumerate().rev() {
            st.solve(&v, &mut z, &self.opts, step)?;
            let w = st.dt * w;
            for (a, zi) in acc.iter_mut().zip(&z) {
                *a += w * zi;
            }
            st.q.mul_into(&z, &mut v);
        }
        Field::from_values(&self.grid, acc)
    }

    /// `A^T A f`.
    pub fn apply_normal(&self, f: &Field) -> Result<Field> {
        self.apply_adjoint(&self.apply(f)?)
    }

    /// Estimate of `||A||` from `steps` power iterations on `A^T A`,
    /// started from a fixed-seed Gaussian vector.
    pub fn norm_estimate(&self, steps: usize) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
        let values: Vec<f64> = (0..self.unknowns())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let mut x = Field::from_values(&self.grid, values)?;
        let mut est = 0.0;
        for _ in 0..steps.max(1) {
            let nx = x.dot(&x).sqrt();
            if nx == 0.0 {
                return Ok(0.0);
            }
            x.scale(1.0 / nx);
            let ax = self.apply(&x)?;
            est = ax.dot(&ax).sqrt();
            x = self.apply_adjoint(&ax)?;
        }
        Ok(est)
    }
}

/// `f -> u(., T)` for the problem's coefficients, amplitude and scheme.
/// Extra sources of the problem are ignored.
pub fn forward_map(f: &Field, problem: &Problem) -> Result<Field> {
    if f.grid() != &problem.grid {
        return Err(Error::ShapeMismatch {
            what: "source field".into(),
            expected: problem.grid.unknowns(),
            got: f.len(),
        });
    }
    let mut p = problem.clone().with_source(f.clone());
    p.extra_sources.clear();
    p.stride = p.time_grid.n_steps();
    Ok(observe_final(&solve_forward(&p, p.theta)?))
}

/// Exact discrete adjoint of [`forward_map`].
pub fn adjoint_map(r: &Field, problem: &Problem) -> Result<Field> {
    SourceMap::new(problem)?.apply_adjoint(r)
}
