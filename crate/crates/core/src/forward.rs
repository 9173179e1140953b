//! θ-scheme time integration of `u_t - L u = rho(t) f(x)`, `u(0) = 0`.

use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::krylov::{gmres, SolveOptions};
use crate::operator::{assemble_operator, SparseOperator};
use crate::time::{AmplitudeFunction, TimeGrid};

/// An additional separable forcing `rho(t) f(x)` used for general-source
/// regression runs. It does not enter the source-to-data map.
#[derive(Debug, Clone)]
pub struct SourceTerm {
    pub rho: AmplitudeFunction,
    pub f: Field,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub coeffs: CoefficientSet,
    pub operator: SparseOperator,
    pub time_grid: TimeGrid,
    pub rho: AmplitudeFunction,
    pub f: Field,
    pub extra_sources: Vec<SourceTerm>,
    pub theta: f64,
    pub solver: SolveOptions,
    /// Store every `stride`-th snapshot (the final one always).
    pub stride: usize,
}

impl Problem {
    pub fn new(
        coeffs: CoefficientSet,
        time_grid: TimeGrid,
        rho: AmplitudeFunction,
        f: Field,
    ) -> Result<Self> {
        let grid = *coeffs.grid();
        if f.grid() != &grid {
            return Err(Error::ShapeMismatch {
                what: "source field".into(),
                expected: grid.unknowns(),
                got: f.len(),
            });
        }
        if (rho.final_time() - time_grid.final_time()).abs() > 1e-12 * time_grid.final_time() {
            return Err(Error::InvalidParameter(format!(
                "amplitude horizon {} differs from final time {}",
                rho.final_time(),
                time_grid.final_time()
            )));
        }
        let operator = assemble_operator(&grid, &coeffs)?;
        Ok(Self {
            grid,
            coeffs,
            operator,
            time_grid,
            rho,
            f,
            extra_sources: Vec::new(),
            theta: 0.5,
            solver: SolveOptions::default(),
            stride: 1,
        })
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_solver(mut self, solver: SolveOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_source(mut self, f: Field) -> Self {
        self.f = f;
        self
    }

    pub fn with_extra_source(mut self, term: SourceTerm) -> Self {
        self.extra_sources.push(term);
        self
    }

    pub(crate) fn stepper(&self, theta: f64) -> Result<Stepper> {
        Stepper::new(&self.operator, &self.time_grid, &self.rho, theta)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.5..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "theta must lie in [1/2, 1], got {theta}"
        )))
    }
}

/// `P = I - θ dt D`, `Q = I + (1-θ) dt D` and the θ-weighted amplitude
/// `w_n = θ ρ(t_{n+1}) + (1-θ) ρ(t_n)`.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    pub p: SparseOperator,
    pub q: SparseOperator,
    pub dt: f64,
    pub weights: Vec<f64>,
}

impl Stepper {
    pub fn new(
        op: &SparseOperator,
        tg: &TimeGrid,
        rho: &AmplitudeFunction,
        theta: f64,
    ) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self {
            p: op.shifted(1.0, -theta * tg.dt()),
            q: op.shifted(1.0, (1.0 - theta) * tg.dt()),
            dt: tg.dt(),
            weights: theta_weights(rho, tg, theta),
        })
    }

    pub fn transposed(&self) -> Self {
        Self {
            p: self.p.transpose(),
            q: self.q.transpose(),
            dt: self.dt,
            weights: self.weights.clone(),
        }
    }

    /// Solves `P x = b`, using `x` as the initial guess.
    pub fn solve(&self, b: &[f64], x: &mut [f64], opts: &SolveOptions, step: usize) -> Result<()> {
        gmres(|v, out| self.p.mul_into(v, out), b, x, opts).map_err(|e| match e {
            Error::NoConvergence { residual, .. } => Error::StepFailed { step, residual },
            other => other,
        })?;
        Ok(())
    }
}

pub(crate) fn theta_weights(rho: &AmplitudeFunction, tg: &TimeGrid, theta: f64) -> Vec<f64> {
    (0..tg.n_steps())
        .map(|n| theta * rho.eval(tg.node(n + 1)) + (1.0 - theta) * rho.eval(tg.node(n)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid,
    time_grid: TimeGrid,
    stride: usize,
    times: Vec<f64>,
    steps: Vec<usize>,
    snapshots: Vec<Field>,
    peclet: f64,
}

impl Trajectory {
    /// Builds a trajectory from externally computed snapshots.
    pub fn from_snapshots(
        time_grid: TimeGrid,
        stride: usize,
        steps: Vec<usize>,
        snapshots: Vec<Field>,
    ) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::InvalidParameter("trajectory needs snapshots".into()))?;
        let grid = *first.grid();
        if steps.len() != snapshots.len()
            || steps.first() != Some(&0)
            || steps.last() != Some(&time_grid.n_steps())
            || steps.windows(2).any(|w| w[1] <= w[0])
            || snapshots.iter().any(|s| s.grid() != &grid)
        {
            return Err(Error::InvalidParameter(
                "trajectory snapshots must start at t = 0, end at T, and share one grid".into(),
            ));
        }
        let times = steps.iter().map(|&n| time_grid.node(n)).collect();
        Ok(Self {
            grid,
            time_grid,
            stride,
            times,
            steps,
            snapshots,
            peclet: 0.0,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Times of the stored snapshots.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Time-step indices of the stored snapshots.
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }

    pub fn final_snapshot(&self) -> &Field {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn peclet(&self) -> f64 {
        self.peclet
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

/// Integrates the problem with the θ-scheme
/// `(I - θ dt D) u^{n+1} = (I + (1-θ) dt D) u^n + dt w_n f`.
pub fn solve_forward(problem: &Problem, theta: f64) -> Result<Trajectory> {
    let tg = problem.time_grid;
    let stepper = problem.stepper(theta)?;
    let extras: Vec<(Vec<f64>, &Field)> = problem
        .extra_sources
        .iter()
        .map(|s| {
            if s.f.grid() != &problem.grid {
                Err(Error::ShapeMismatch {
                    what: "extra source".into(),
                    expected: problem.grid.unknowns(),
                    got: s.f.len(),
                })
            } else {
                Ok((theta_weights(&s.rho, &tg, theta), &s.f))
            }
        })
        .collect::<Result<_>>()?;
    let stride = problem.stride.max(1);
    let n = problem.grid.unknowns();
    let mut u = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut steps = vec![0];
    let mut snapshots = vec![Field::zeros(&problem.grid)];
    let f = problem.f.values();

    for step in 0..tg.n_steps() {
        stepper.q.mul_into(&u, &mut rhs);
        let w = stepper.dt * stepper.weights[step];
        for (r, fi) in rhs.iter_mut().zip(f) {
            *r += w * fi;
        }
        for (weights, g) in &extras {
            let w = stepper.dt * weights[step];
            for (r, gi) in rhs.iter_mut().zip(g.values()) {
                *r += w * gi;
            }
        }
        stepper.solve(&rhs, &mut u, &problem.solver, step)?;
        let index = step + 1;
        if index % stride == 0 || index == tg.n_steps() {
            steps.push(index);
            snapshots.push(Field::from_values(&problem.grid, u.clone())?);
        }
    }

    if problem.operator.peclet() >= 1.0 {
        log::warn!(
            "forward run with grid Péclet number {:.3}",
            problem.operator.peclet()
        );
    }
    let mut traj = Trajectory::from_snapshots(tg, stride, steps, snapshots)?;
    traj.peclet = problem.operator.peclet();
    Ok(traj)
}

/// Caller-owned copy of `u(., T)`.
pub fn observe_final(traj: &Trajectory) -> Field {
    traj.final_snapshot().clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientSpec;
    use crate::time::Amplitude;
    use std::f64::consts::PI;

    fn heat_problem(n: usize, steps: usize, rho: Amplitude) -> Problem {
        let g = Grid::interval(0.0, 1.0, n).unwrap();
        let coeffs = CoefficientSet::from_spec(&g, &CoefficientSpec::laplacian(1)).unwrap();
        let tg = TimeGrid::new(1.0, steps).unwrap();
        let rho = AmplitudeFunction::new(rho, 1.0).unwrap();
        let f = Field::from_fn(&g, |x| (PI * x[0]).sin());
        Problem::new(coeffs, tg, rho, f).unwrap()
    }

    #[test]
    fn zero_source_zero_trajectory() {
        let p = heat_problem(8, 5, Amplitude::Constant { value: 1.0 });
        let g = p.grid;
        let p = p.with_source(Field::zeros(&g));
        let traj = solve_forward(&p, 0.5).unwrap();
        assert_eq!(traj.len(), 6);
        assert!(traj.snapshots().iter().all(|s| s.is_zero()));
        assert!(observe_final(&traj).is_zero());
    }

    #[test]
    fn initial_snapshot_is_exactly_zero() {
        let p = heat_problem(8, 4, Amplitude::Constant { value: 1.0 });
        let traj = solve_forward(&p, 1.0).unwrap();
        assert!(traj.snapshots()[0].values().iter().all(|v| v.to_bits() == 0));
    }

    #[test]
    fn single_step_indexing() {
        let p = heat_problem(8, 1, Amplitude::Constant { value: 1.0 });
        let traj = solve_forward(&p, 0.5).unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj.steps(), &[0, 1]);
        assert_eq!(&observe_final(&traj), &traj.snapshots()[1]);
    }

    #[test]
    fn stride_keeps_final() {
        let p = heat_problem(8, 10, Amplitude::Constant { value: 1.0 }).with_stride(3);
        let traj = solve_forward(&p, 0.5).unwrap();
        assert_eq!(traj.steps(), &[0, 3, 6, 9, 10]);
        assert_eq!(traj.times().last(), Some(&1.0));
    }

    #[test]
    fn manufactured_linear_in_time() {
        let p = heat_problem(
            32,
            32,
            Amplitude::Affine {
                offset: 1.0,
                slope: PI * PI,
            },
        );
        let traj = solve_forward(&p, 0.5).unwrap();
        let h = p.grid.spacing()[0];
        let exact = Field::from_fn(&p.grid, |x| (PI * x[0]).sin());
        let err = observe_final(&traj).sub(&exact).max_abs();
        assert!(err <= 5.0 * h * h, "{err}");
    }

    #[test]
    fn constant_amplitude_duhamel() {
        let p = heat_problem(64, 256, Amplitude::Constant { value: 1.0 });
        let traj = solve_forward(&p, 0.5).unwrap();
        let amp = (1.0 - (-PI * PI).exp()) / (PI * PI);
        let exact = Field::from_fn(&p.grid, |x| amp * (PI * x[0]).sin());
        let err = observe_final(&traj).sub(&exact).max_abs();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn theta_out_of_range() {
        let p = heat_problem(8, 4, Amplitude::Constant { value: 1.0 });
        assert!(solve_forward(&p, 0.3).is_err());
        assert!(solve_forward(&p, 1.2).is_err());
    }
}
