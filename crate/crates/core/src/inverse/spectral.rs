use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::Problem;
use crate::grid::Field;
use crate::time::{Amplitude, AmplitudeFunction};
use crate::transform::integrate;

use super::{InverseRun, IterRecord, ReconstructionResult, SourceMap, StopReason, POWER_SEED};

/// Largest number of unknowns for dense eigen/SVD work.
pub const DENSE_CAP: usize = 4096;

/// Multiplier of the θ-scheme data map on an eigenvector of `-D` with
/// eigenvalue `lambda`: `g <- r g + dt w_n / (1 + θ dt λ)` with
/// `r = (1 - (1-θ) dt λ) / (1 + θ dt λ)`, starting from `g = 0`.
pub fn discrete_multiplier(lambda: f64, weights: &[f64], dt: f64, theta: f64) -> f64 {
    let den = 1.0 + theta * dt * lambda;
    let r = (1.0 - (1.0 - theta) * dt * lambda) / den;
    weights.iter().fold(0.0, |g, w| r * g + dt * w / den)
}

/// `int_0^T rho(t) e^{-lambda (T - t)} dt`.
pub(crate) fn continuum_multiplier(rho: &AmplitudeFunction, lambda: f64, final_time: f64) -> f64 {
    let mut breaks = vec![0.0];
    if let Amplitude::Tabulated { times, .. } = &rho.profile {
        breaks.extend(times.iter().copied().filter(|&t| t > 0.0 && t < final_time));
    }
    breaks.push(final_time);
    integrate(
        |t| Complex64::new(rho.eval(t) * (-lambda * (final_time - t)).exp(), 0.0),
        &breaks,
        1e-13,
        0.0,
        20_000,
    )
    .value
    .re
}

/// Eigenpairs of `-D`, eigenvalues ascending.
fn eigen_system(problem: &Problem) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = problem.grid.unknowns();
    if n > DENSE_CAP {
        return Err(Error::InvalidParameter(format!(
            "{n} unknowns exceed the dense eigen-solver cap {DENSE_CAP}"
        )));
    }
    let eig = SymmetricEigen::new(-problem.operator.to_dense());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Truncated eigen-expansion inversion for symmetric operators:
/// `f = sum_k <d, phi_k> / g_k phi_k` over the `n_modes` smoothest modes,
/// with `g_k` the exact time multiplier of the scheme.
pub fn reconstruct_spectral(
    run: &InverseRun,
    n_modes: Option<usize>,
) -> Result<ReconstructionResult> {
    let mut run = run.clone();
    run.params.n_modes = n_modes;
    run.validate()?;
    let problem = &run.problem;
    if !problem.operator.symmetry_flag() {
        return Err(Error::NonSymmetricOperator);
    }
    let map = SourceMap::new(problem)?;
    let stepper = problem.stepper(problem.theta)?;
    let (lambdas, phi) = eigen_system(problem)?;
    let n = lambdas.len();
    let keep = n_modes.unwrap_or(n).min(n);
    let final_time = problem.time_grid.final_time();
    let d = DVector::from_column_slice(run.data.values());
    let mut f = DVector::zeros(n);
    let mut negative = 0usize;
    for k in 0..keep {
        let lambda = lambdas[k];
        let cont = continuum_multiplier(&problem.rho, lambda, final_time);
        if !(cont > 0.0) {
            return Err(Error::NonPositiveDenominator {
                mode: k + 1,
                value: cont,
            });
        }
        let g = discrete_multiplier(lambda, &stepper.weights, stepper.dt, problem.theta);
        if g == 0.0 || !g.is_finite() {
            return Err(Error::NonPositiveDenominator { mode: k + 1, value: g });
        }
        if g < 0.0 {
            negative += 1;
        }
        let col = phi.column(k);
        f.axpy(col.dot(&d) / g, &col, 1.0);
    }
    let f_est = Field::from_values(&problem.grid, f.as_slice().to_vec())?;
    let stop = if run.data.is_zero() {
        StopReason::ZeroData
    } else {
        StopReason::Solved
    };
    let mut out = ReconstructionResult::new(&run, f_est, stop);
    out.iterations = 0;
    out.note("n_modes", keep);
    out.note("negative_discrete_multipliers", negative);
    out.note("lambda_min", lambdas.first().copied());
    out.note("lambda_max_retained", lambdas.get(keep.saturating_sub(1)).copied());
    let mut out = out.finalize(&run, &map)?;
    out.history.push(IterRecord {
        iter: 0,
        residual: out.residual,
        error: out.metrics.map(|m| m.rel_l2),
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub k: usize,
    pub dense_cap: usize,
    /// Per-step solve tolerance while applying `A`.
    pub krylov_tol: f64,
    /// Bidiagonalization steps; `None` means `min(n, max(4k, 40))`.
    pub lanczos_steps: Option<usize>,
    pub force_iterative: bool,
    /// A Ritz value counts as converged when its residual is below
    /// `convergence_tol * sigma_max`.
    pub convergence_tol: f64,
}

impl SpectrumOptions {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            dense_cap: DENSE_CAP,
            krylov_tol: 1e-13,
            lanczos_steps: None,
            force_iterative: false,
            convergence_tol: 1e-8,
        }
    }
}

/// Eigenvalue-based prediction of the singular values (symmetric case).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    /// Eigenvalues of `-D`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `|g(lambda_n)|` of the time-stepping scheme, descending.
    pub discrete: Vec<f64>,
    /// `int_0^T rho(t) e^{-lambda_n (T-t)} dt`, descending.
    pub continuum: Vec<f64>,
    /// `max_n |sigma_n - discrete_n| / sigma_max` over the computed values.
    pub max_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub method: SpectrumMethod,
    pub unknowns: usize,
    pub k: usize,
    /// Largest `k` singular values, descending.
    pub largest: Vec<f64>,
    /// Smallest `k` singular values, descending.
    pub smallest: Vec<f64>,
    pub largest_converged: Vec<bool>,
    pub smallest_converged: Vec<bool>,
    /// Full spectrum, descending (dense mode).
    pub all: Option<Vec<f64>>,
    pub closed_form: Option<ClosedForm>,
    pub options: SpectrumOptions,
}

impl SingularSpectrum {
    pub fn sigma_max(&self) -> f64 {
        self.largest.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.smallest.last().copied().unwrap_or(0.0)
    }

    /// `(index, sigma)` rows, descending, 1-based indices.
    pub fn table(&self) -> Vec<(usize, f64)> {
        match &self.all {
            Some(all) => all.iter().copied().enumerate().map(|(i, s)| (i + 1, s)).collect(),
            None => {
                let n = self.unknowns;
                let mut rows: Vec<(usize, f64)> = self
                    .largest
                    .iter()
                    .copied()
                    .enumerate()
                    .map(|(i, s)| (i + 1, s))
                    .collect();
                let off = n - self.smallest.len();
                for (i, s) in self.smallest.iter().copied().enumerate() {
                    if off + i + 1 > rows.len() {
                        rows.push((off + i + 1, s));
                    }
                }
                rows
            }
        }
    }
}

pub fn singular_spectrum(problem: &Problem, k: usize) -> Result<SingularSpectrum> {
    singular_spectrum_with(problem, &SpectrumOptions::new(k))
}

pub fn singular_spectrum_with(problem: &Problem, opts: &SpectrumOptions) -> Result<SingularSpectrum> {
    let n = problem.grid.unknowns();
    if opts.k == 0 || opts.k > n {
        return Err(Error::InvalidParameter(format!(
            "spectrum count k must lie in [1, {n}], got {}",
            opts.k
        )));
    }
    let map = SourceMap::new(problem)?.with_tol(opts.krylov_tol);
    let dense = !opts.force_iterative && n <= opts.dense_cap;
    let mut out = if dense {
        dense_spectrum(&map, opts)?
    } else {
        lanczos_spectrum(&map, opts)?
    };
    if problem.operator.symmetry_flag() && n <= DENSE_CAP {
        out.closed_form = Some(closed_form(problem, &out)?);
    }
    Ok(out)
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn dense_spectrum(map: &SourceMap, opts: &SpectrumOptions) -> Result<SingularSpectrum> {
    let n = map.unknowns();
    let grid = *map.grid();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = Field::zeros(&grid);
            e.values_mut()[j] = 1.0;
            map.apply(&e).map(Field::into_values)
        })
        .collect::<Result<_>>()?;
    let a = DMatrix::from_fn(n, n, |i, j| columns[j][i]);
    let sigma = sorted_desc(SVD::new(a, false, false).singular_values.as_slice().to_vec());
    let k = opts.k;
    Ok(SingularSpectrum {
        method: SpectrumMethod::Dense,
        unknowns: n,
        k,
        largest: sigma[..k].to_vec(),
        smallest: sigma[n - k..].to_vec(),
        largest_converged: vec![true; k],
        smallest_converged: vec![true; k],
        all: Some(sigma),
        closed_form: None,
        options: *opts,
    })
}

fn orthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(w);
            w.axpy(-c, b, 1.0);
        }
    }
}

/// Golub-Kahan bidiagonalization with full reorthogonalization.
fn lanczos_spectrum(map: &SourceMap, opts: &SpectrumOptions) -> Result<SingularSpectrum> {
    let n = map.unknowns();
    let grid = *map.grid();
    let m = opts
        .lanczos_steps
        .unwrap_or((4 * opts.k).max(40))
        .clamp(opts.k, n);
    let apply = |v: &DVector<f64>| -> Result<DVector<f64>> {
        let f = map.apply(&Field::from_values(&grid, v.as_slice().to_vec())?)?;
        Ok(DVector::from_vec(f.into_values()))
    };
    let apply_t = |v: &DVector<f64>| -> Result<DVector<f64>> {
        let f = map.apply_adjoint(&Field::from_values(&grid, v.as_slice().to_vec())?)?;
        Ok(DVector::from_vec(f.into_values()))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED + 1);
    let mut v = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    v /= v.norm();
    let mut vs = vec![v.clone()];
    let mut us: Vec<DVector<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut u = apply(&v)?;
    loop {
        orthogonalize(&mut u, &us);
        let alpha = u.norm();
        if alpha == 0.0 {
            break;
        }
        u /= alpha;
        alphas.push(alpha);
        us.push(u.clone());
        let mut w = apply_t(&u)?;
        w.axpy(-alpha, vs.last().unwrap(), 1.0);
        orthogonalize(&mut w, &vs);
        let beta = w.norm();
        betas.push(beta);
        if alphas.len() == m || beta <= 1e-14 * alphas[0] {
            break;
        }
        w /= beta;
        vs.push(w.clone());
        u = apply(&w)?;
        u.axpy(-beta, &us[us.len() - 1], 1.0);
    }
    let steps = alphas.len();
    let b = DMatrix::from_fn(steps, steps, |i, j| {
        if i == j {
            alphas[i]
        } else if j == i + 1 {
            betas[i]
        } else {
            0.0
        }
    });
    let svd = SVD::new(b, true, false);
    let left = svd.u.expect("left vectors requested");
    let tail = betas.last().copied().unwrap_or(0.0);
    let mut ritz: Vec<(f64, f64)> = (0..steps)
        .map(|i| (svd.singular_values[i], (tail * left[(steps - 1, i)]).abs()))
        .collect();
    ritz.sort_by(|a, b| b.0.total_cmp(&a.0));
    let smax = ritz[0].0;
    let ok = |r: f64| r <= opts.convergence_tol * smax;
    let k = opts.k.min(steps);
    Ok(SingularSpectrum {
        method: SpectrumMethod::Lanczos,
        unknowns: n,
        k,
        largest: ritz[..k].iter().map(|r| r.0).collect(),
        smallest: ritz[steps - k..].iter().map(|r| r.0).collect(),
        largest_converged: ritz[..k].iter().map(|r| ok(r.1)).collect(),
        smallest_converged: ritz[steps - k..].iter().map(|r| ok(r.1)).collect(),
        all: None,
        closed_form: None,
        options: *opts,
    })
}

fn closed_form(problem: &Problem, spec: &SingularSpectrum) -> Result<ClosedForm> {
    let (lambdas, _) = eigen_system(problem)?;
    let stepper = problem.stepper(problem.theta)?;
    let final_time = problem.time_grid.final_time();
    let discrete = sorted_desc(
        lambdas
            .iter()
            .map(|&l| discrete_multiplier(l, &stepper.weights, stepper.dt, problem.theta).abs())
            .collect(),
    );
    let continuum = sorted_desc(
        lambdas
            .iter()
            .map(|&l| continuum_multiplier(&problem.rho, l, final_time).abs())
            .collect(),
    );
    let n = lambdas.len();
    let smax = spec.sigma_max();
    let mut defect = 0.0f64;
    for (i, s) in spec.largest.iter().enumerate() {
        defect = defect.max((s - discrete[i]).abs());
    }
    let off = n - spec.smallest.len();
    for (i, s) in spec.smallest.iter().enumerate() {
        defect = defect.max((s - discrete[off + i]).abs());
    }
    if let Some(all) = &spec.all {
        for (s, g) in all.iter().zip(&discrete) {
            defect = defect.max((s - g).abs());
        }
    }
    Ok(ClosedForm {
        eigenvalues: lambdas,
        discrete,
        continuum,
        max_defect: if smax > 0.0 { defect / smax } else { defect },
    })
}
