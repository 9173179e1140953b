use crate::error::{Error, Result};
use crate::grid::Field;
use crate::krylov::{conjugate_gradient, SolveOptions};

use super::{error_metrics, InverseRun, IterRecord, ReconstructionResult, SourceMap, StopReason};

/// Shared stopping rules: discrepancy, residual tolerance, stagnation, cap.
struct Monitor<'a> {
    run: &'a InverseRun,
    target: Option<f64>,
    data_norm: f64,
    prev: f64,
    history: Vec<IterRecord>,
}

impl<'a> Monitor<'a> {
    fn new(run: &'a InverseRun) -> Self {
        Self {
            run,
            target: run.discrepancy_target(),
            data_norm: run.data.l2_norm(),
            prev: f64::INFINITY,
            history: Vec::new(),
        }
    }

    fn record(&mut self, iter: usize, residual: f64, f: &Field) -> Result<Option<StopReason>> {
        let error = match &self.run.truth {
            Some(t) => Some(error_metrics(f, t)?.rel_l2),
            None => None,
        };
        self.history.push(IterRecord {
            iter,
            residual,
            error,
        });
        let p = &self.run.params;
        let stop = if self.target.is_some_and(|t| residual <= t) {
            Some(StopReason::Discrepancy)
        } else if residual <= p.residual_tol * self.data_norm {
            Some(StopReason::ResidualTolerance)
        } else if self.prev.is_finite()
            && (self.prev - residual).abs() < p.stagnation_tol * self.prev
        {
            Some(StopReason::Stagnation)
        } else if iter >= p.max_iter {
            Some(StopReason::IterationCap)
        } else {
            None
        };
        self.prev = residual;
        Ok(stop)
    }
}

fn zero_data(run: &InverseRun, map: &SourceMap) -> Result<ReconstructionResult> {
    let mut out = ReconstructionResult::new(run, Field::zeros(map.grid()), StopReason::ZeroData);
    out.history.push(IterRecord {
        iter: 0,
        residual: 0.0,
        error: run.truth.as_ref().map(|t| t.l2_norm()),
    });
    out.finalize(run, map)
}

/// Conjugate gradients on the normal equations (CGLS form). The data
/// residual is non-increasing along the iteration.
pub fn reconstruct_cgne(run: &InverseRun) -> Result<ReconstructionResult> {
    run.validate()?;
    let map = SourceMap::new(&run.problem)?;
    if run.data.is_zero() {
        return zero_data(run, &map);
    }
    let mut mon = Monitor::new(run);
    let mut x = Field::zeros(map.grid());
    let mut r = run.data.clone();
    let mut s = map.apply_adjoint(&r)?;
    let mut p = s.clone();
    let mut gamma = s.dot(&s);
    let mut stop = mon.record(0, r.l2_norm(), &x)?;
    let mut iter = 0;
    while stop.is_none() {
        if gamma == 0.0 {
            stop = Some(StopReason::Stagnation);
            break;
        }
        let q = map.apply(&p)?;
        let qq = q.dot(&q);
        if qq == 0.0 {
            stop = Some(StopReason::Stagnation);
            break;
        }
        let alpha = gamma / qq;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &q);
        s = map.apply_adjoint(&r)?;
        let gamma_new = s.dot(&s);
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        p.scale(beta);
        p.axpy(1.0, &s);
        iter += 1;
        stop = mon.record(iter, r.l2_norm(), &x)?;
    }
    let mut out = ReconstructionResult::new(run, x, stop.unwrap_or(StopReason::Stagnation));
    out.iterations = iter;
    out.history = mon.history;
    out.finalize(run, &map)
}

/// `f <- f + omega A^T (d - A f)`.
pub fn reconstruct_landweber(run: &InverseRun) -> Result<ReconstructionResult> {
    run.validate()?;
    let map = SourceMap::new(&run.problem)?;
    let norm = map.norm_estimate(run.params.power_steps)?;
    if run.data.is_zero() {
        let mut out = zero_data(run, &map)?;
        out.note("norm_estimate", norm);
        return Ok(out);
    }
    let omega = match run.params.omega {
        Some(w) => w,
        None if norm > 0.0 => 1.0 / (norm * norm),
        None => {
            return Err(Error::InvalidParameter(
                "source-to-data map is numerically zero".into(),
            ))
        }
    };
    let window = run.params.divergence_window.max(1);
    let mut mon = Monitor::new(run);
    let mut f = Field::zeros(map.grid());
    let mut r = run.data.clone();
    let mut res = r.l2_norm();
    let mut stop = mon.record(0, res, &f)?;
    let mut iter = 0;
    let mut growth = 0;
    while stop.is_none() {
        f.axpy(omega, &map.apply_adjoint(&r)?);
        r = run.data.sub(&map.apply(&f)?);
        let next = r.l2_norm();
        growth = if next > res { growth + 1 } else { 0 };
        res = next;
        iter += 1;
        if growth >= window || !res.is_finite() {
            return Err(Error::Diverged {
                iteration: iter,
                steps: growth,
                residual: res,
            });
        }
        stop = mon.record(iter, res, &f)?;
    }
    let mut out = ReconstructionResult::new(run, f, stop.unwrap_or(StopReason::IterationCap));
    out.iterations = iter;
    out.history = mon.history;
    out.note("norm_estimate", norm);
    out.note("omega", omega);
    out.finalize(run, &map)
}

/// Solves `(A^T A + alpha I) f = A^T d` matrix-free with CG.
pub fn reconstruct_tikhonov(run: &InverseRun, alpha: f64) -> Result<ReconstructionResult> {
    let mut run = run.clone();
    run.params.alpha = alpha;
    run.validate()?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Tikhonov alpha must be positive, got {alpha}"
        )));
    }
    let map = SourceMap::new(&run.problem)?;
    if run.data.is_zero() {
        return zero_data(&run, &map);
    }
    let grid = *map.grid();
    let rhs = map.apply_adjoint(&run.data)?;
    let mut x = vec![0.0; rhs.len()];
    let opts = SolveOptions::with_tol(run.params.inner_tol);
    let stats = conjugate_gradient(
        |v, out| {
            let n = map.apply_normal(&Field::from_values(&grid, v.to_vec())?)?;
            for ((o, a), b) in out.iter_mut().zip(n.values()).zip(v) {
                *o = a + alpha * b;
            }
            Ok(())
        },
        rhs.values(),
        &mut x,
        &opts,
    )?;
    let f = Field::from_values(&grid, x)?;
    let mut out = ReconstructionResult::new(&run, f, StopReason::Solved);
    out.iterations = stats.iterations;
    out.note("alpha", alpha);
    out.note("inner_relative_residual", stats.relative_residual);
    out.note("normal_rhs_norm", rhs.l2_norm());
    let mut out = out.finalize(&run, &map)?;
    out.history.push(IterRecord {
        iter: out.iterations,
        residual: out.residual,
        error: out.metrics.map(|m| m.rel_l2),
    });
    Ok(out)
}
