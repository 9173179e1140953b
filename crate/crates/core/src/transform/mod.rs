//! Laplace-type transforms in time,
//!
//! `rho_hat(s) = int_0^T rho(t) e^{-(s+M)t} dt`,
//! `u_hat(s) = int_0^T u(t) e^{-(s+M)t} dt`,
//!
//! and the numerical certificates built on them: the lower bound of
//! `|rho_hat|` on the left wedge, the elliptic identity satisfied by `u_hat`,
//! the bound `||u_hat|| <= C |rho_hat| ||f||`, and the large-`s` limits.

mod quadrature;
mod report;
mod sector;

pub use quadrature::{integrate, trapezoid_weights, QuadResult};
pub use report::{Extremum, LemmaReport, SampleRatio};
pub use sector::{classify_sector, SamplePlan, Sector};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::Trajectory;
use crate::grid::{ComplexField, Field};
use crate::operator::SparseOperator;
use crate::scalar::Scalar;
use crate::time::{Amplitude, AmplitudeFunction};

/// Largest admissible `|Re s + M| T`.
pub const EXPONENT_GUARD: f64 = 700.0;

/// Relative target of the adaptive rule.
pub const GAUSS_REL_TOL: f64 = 1e-13;

/// `|rho_hat| < NEAR_ZERO * ||rho||_C0 * T` marks a near-zero of the transform.
pub const NEAR_ZERO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quadrature<'a> {
    /// Trapezoid rule on the given time nodes (those of a trajectory).
    GridTrapezoid(&'a [f64]),
    GaussAdaptive,
}

/// A frequency sample with its transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSample {
    pub s: Complex64,
    pub m_shift: f64,
    pub sector: Sector,
    pub n_param: f64,
    pub rho_hat: Complex64,
    pub u_hat: Option<ComplexField>,
}

impl TransformSample {
    pub fn evaluate(
        traj: &Trajectory,
        rho: &AmplitudeFunction,
        s: Complex64,
        m_shift: f64,
        n_param: f64,
    ) -> Result<Self> {
        Ok(Self {
            s,
            m_shift,
            sector: classify_sector(s, n_param),
            n_param,
            rho_hat: rho_hat(
                rho,
                s,
                m_shift,
                traj.time_grid().final_time(),
                Quadrature::GridTrapezoid(traj.times()),
            )?,
            u_hat: Some(u_hat(traj, s, m_shift)?),
        })
    }
}

fn guard(s: Complex64, m_shift: f64, final_time: f64) -> Result<()> {
    let exponent = (s.re + m_shift).abs() * final_time;
    if exponent > EXPONENT_GUARD || !exponent.is_finite() {
        return Err(Error::ExponentOverflow { exponent });
    }
    Ok(())
}

#[inline]
fn kernel(z: Complex64, t: f64) -> Complex64 {
    (-z * t).exp()
}

/// `int_0^T e^{-sigma t} dt`, with the removable value `T` at `sigma = 0`.
pub fn exp_integral(sigma: f64, final_time: f64) -> f64 {
    let x = sigma * final_time;
    if x.abs() < 1e-8 {
        final_time * (1.0 - 0.5 * x)
    } else {
        -(-x).exp_m1() / sigma
    }
}

/// Transform of the amplitude.
pub fn rho_hat(
    rho: &AmplitudeFunction,
    s: Complex64,
    m_shift: f64,
    final_time: f64,
    quad: Quadrature<'_>,
) -> Result<Complex64> {
    if !(final_time > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "final time must be positive, got {final_time}"
        )));
    }
    guard(s, m_shift, final_time)?;
    let z = s + m_shift;
    match quad {
        Quadrature::GridTrapezoid(times) => {
            check_times(times, final_time)?;
            let w = trapezoid_weights(times);
            Ok(times
                .iter()
                .zip(&w)
                .map(|(&t, &wk)| kernel(z, t) * (wk * rho.eval(t)))
                .sum())
        }
        Quadrature::GaussAdaptive => {
            let mut breaks = vec![0.0];
            if let Amplitude::Tabulated { times, .. } = &rho.profile {
                breaks.extend(times.iter().copied().filter(|&t| t > 0.0 && t < final_time));
            }
            breaks.push(final_time);
            let scale = rho.sup.max(f64::MIN_POSITIVE) * exp_integral(z.re, final_time);
            let r = integrate(
                |t| kernel(z, t) * rho.eval(t),
                &breaks,
                GAUSS_REL_TOL,
                1e-3 * GAUSS_REL_TOL * scale,
                50_000,
            );
            Ok(r.value)
        }
    }
}

fn check_times(times: &[f64], final_time: f64) -> Result<()> {
    let ok = times.len() >= 2
        && times[0] == 0.0
        && (times[times.len() - 1] - final_time).abs() <= 1e-12 * final_time
        && times.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "trapezoid nodes must increase from 0 to T".into(),
        ))
    }
}

/// Node-wise trapezoid transform of the stored snapshots.
pub fn u_hat(traj: &Trajectory, s: Complex64, m_shift: f64) -> Result<ComplexField> {
    let final_time = traj.time_grid().final_time();
    guard(s, m_shift, final_time)?;
    let z = s + m_shift;
    let w = trapezoid_weights(traj.times());
    let mut out = ComplexField::zeros(traj.grid());
    for ((&t, &wk), snap) in traj.times().iter().zip(&w).zip(traj.snapshots()) {
        let k = kernel(z, t) * wk;
        for (o, &u) in out.values_mut().iter_mut().zip(snap.values()) {
            *o += k * u;
        }
    }
    Ok(out)
}

/// Relative residual of the transformed equation
/// `-D u_hat + (s+M) u_hat + u(T) e^{-(s+M)T} = rho_hat f`
/// (absolute when `rho_hat f` vanishes). Both transforms use the
/// trajectory's trapezoid rule.
pub fn transform_residual(
    op: &SparseOperator,
    traj: &Trajectory,
    f: &Field,
    rho: &AmplitudeFunction,
    s: Complex64,
    m_shift: f64,
) -> Result<f64> {
    if f.grid() != traj.grid() || op.dim() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: traj.grid().unknowns(),
            got: f.len(),
        });
    }
    let final_time = traj.time_grid().final_time();
    let uh = u_hat(traj, s, m_shift)?;
    let rh = rho_hat(
        rho,
        s,
        m_shift,
        final_time,
        Quadrature::GridTrapezoid(traj.times()),
    )?;
    let z = s + m_shift;
    let decay = kernel(z, final_time);
    let du = op.apply(&uh)?;
    let mut residual = ComplexField::zeros(traj.grid());
    let mut target = ComplexField::zeros(traj.grid());
    for k in 0..residual.len() {
        let rhs = rh * f.values()[k];
        residual.values_mut()[k] = -du.values()[k] + z * uh.values()[k]
            + decay * traj.final_snapshot().values()[k]
            - rhs;
        target.values_mut()[k] = rhs;
    }
    let denom = target.l2_norm();
    Ok(if denom > 0.0 {
        residual.l2_norm() / denom
    } else {
        residual.l2_norm()
    })
}

/// Discrete `H^1` norm with zero boundary values.
pub fn h1_norm<T: Scalar>(u: &Field<T>) -> f64 {
    let grid = u.grid();
    let n = grid.n_interior();
    let h = grid.spacing();
    let mut grad = 0.0;
    for axis in 0..grid.dim() {
        for p in 0..u.len() {
            let idx = grid.multi_index(p);
            let here = u.values()[p];
            let mut next = idx;
            next[axis] += 1;
            let ahead = if next[axis] < n[axis] {
                u.values()[grid.flat_index(next)]
            } else {
                T::zero()
            };
            grad += (ahead - here).norm_sqr() / (h[axis] * h[axis]);
            if idx[axis] == 0 {
                grad += here.norm_sqr() / (h[axis] * h[axis]);
            }
        }
    }
    let l2 = u.l2_norm();
    (l2 * l2 + grad * grid.cell_volume()).sqrt()
}

/// Lower bound `|rho_hat(s)| >= C int_0^T e^{-t Re s} dt` on the wedge `C`,
/// evaluated with `M = 0`. Only the plan's sector-`C` samples are used.
pub fn verify_lemma_rho(
    rho: &AmplitudeFunction,
    final_time: f64,
    n_param: f64,
    plan: &SamplePlan,
) -> Result<LemmaReport> {
    rho.assert_positive()?;
    let mut report = LemmaReport::new("rho_lower_bound", Some(n_param), 0.0, Extremum::Min);
    for (s, plan_sector) in plan.samples(n_param)? {
        if plan_sector != Sector::C {
            continue;
        }
        let value = match rho_hat(rho, s, 0.0, final_time, Quadrature::GaussAdaptive) {
            Ok(v) => v,
            Err(Error::ExponentOverflow { .. }) => {
                report.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let denom = exp_integral(s.re, final_time);
        report.samples.push(SampleRatio {
            s_re: s.re,
            s_im: s.im,
            sector: classify_sector(s, n_param).label().to_string(),
            ratio: value.norm() / denom,
            h1_ratio: None,
            excluded: false,
        });
    }
    report.finish_extremal();
    let margin = 100.0 * GAUSS_REL_TOL;
    report.pass = !report.samples.is_empty() && report.all_finite() && report.extremal > margin;
    report.note("final_time", final_time);
    report.note("rho0", rho.rho0);
    report.note("rho_c1_norm", rho.c1_norm);
    report.note("quadrature", "gauss_kronrod_adaptive");
    report.note("quadrature_rel_tol", GAUSS_REL_TOL);
    report.note("plan", plan);
    Ok(report)
}

/// Ratios `||u_hat(s)|| / (|rho_hat(s)| ||f||)` over the plan, both transforms
/// on the trajectory's trapezoid rule with the same shift. `pass` checks
/// finiteness; stability under refinement is judged by
/// [`refinement_stable`].
pub fn verify_lemma_uhat(
    traj: &Trajectory,
    f: &Field,
    rho: &AmplitudeFunction,
    m_shift: f64,
    plan: &SamplePlan,
    n_param: f64,
) -> Result<LemmaReport> {
    f.check_same_grid(traj.final_snapshot())?;
    let final_time = traj.time_grid().final_time();
    let f_norm = f.l2_norm();
    let threshold = NEAR_ZERO * rho.sup * final_time;
    let mut report = LemmaReport::new("uhat_upper_bound", Some(n_param), m_shift, Extremum::Max);
    for (s, _) in plan.samples(n_param)? {
        let rh = match rho_hat(
            rho,
            s,
            m_shift,
            final_time,
            Quadrature::GridTrapezoid(traj.times()),
        ) {
            Ok(v) => v,
            Err(Error::ExponentOverflow { .. }) => {
                report.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let uh = u_hat(traj, s, m_shift)?;
        let excluded = rh.norm() < threshold;
        let (ratio, h1_ratio) = if f_norm == 0.0 {
            (uh.l2_norm(), h1_norm(&uh))
        } else {
            let d = rh.norm() * f_norm;
            (uh.l2_norm() / d, h1_norm(&uh) / d)
        };
        if excluded {
            report.excluded += 1;
        }
        report.samples.push(SampleRatio {
            s_re: s.re,
            s_im: s.im,
            sector: classify_sector(s, n_param).label().to_string(),
            ratio,
            h1_ratio: Some(h1_ratio),
            excluded,
        });
    }
    report.finish_extremal();
    let h1_max = report
        .samples
        .iter()
        .filter(|s| !s.excluded)
        .filter_map(|s| s.h1_ratio)
        .fold(0.0, f64::max);
    report.pass = report.extremal.is_finite()
        && report
            .samples
            .iter()
            .filter(|s| !s.excluded)
            .all(|s| s.ratio.is_finite());
    report.note("final_time", final_time);
    report.note("f_l2", f_norm);
    report.note("h1_extremal", h1_max);
    report.note("near_zero_threshold", threshold);
    report.note("grid_h", traj.grid().spacing());
    report.note("dt", traj.time_grid().dt());
    report.note("quadrature", "grid_trapezoid");
    report.note("plan", plan);
    Ok(report)
}

/// True when two upper-bound extremals differ by at most a factor of 2.
pub fn refinement_stable(coarse: &LemmaReport, fine: &LemmaReport) -> bool {
    let (a, b) = (coarse.extremal, fine.extremal);
    if !(a.is_finite() && b.is_finite()) {
        return false;
    }
    if a == 0.0 || b == 0.0 {
        return a == b;
    }
    (a / b).max(b / a) <= 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    #[serde(rename = "M")]
    pub m_shift: f64,
    pub s: Vec<f64>,
    pub rho0_value: f64,
    /// `|(s+M) rho_hat(s) - rho(0)|`
    pub rho_deviation: Vec<f64>,
    /// `||(s+M) u_hat(s)||`
    pub u_norm: Vec<f64>,
    pub pass: bool,
}

fn strictly_decreasing_tail(v: &[f64]) -> bool {
    let tail = &v[v.len().saturating_sub(3)..];
    tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0])
}

/// Tracks `(s+M) rho_hat(s) -> rho(0)` (adaptive quadrature) and
/// `(s+M) u_hat(s) -> 0` (trajectory trapezoid) along increasing real `s`.
pub fn asymptotic_check(
    rho: &AmplitudeFunction,
    traj: &Trajectory,
    m_shift: f64,
    s_list: &[f64],
) -> Result<AsymptoticReport> {
    if s_list.len() < 2 || s_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "asymptotic check needs at least two increasing real frequencies".into(),
        ));
    }
    let final_time = traj.time_grid().final_time();
    let rho_start = rho.eval(0.0);
    let mut rho_deviation = Vec::with_capacity(s_list.len());
    let mut u_norm = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let sc = Complex64::new(s, 0.0);
        let r = rho_hat(rho, sc, m_shift, final_time, Quadrature::GaussAdaptive)?;
        rho_deviation.push((r * (s + m_shift) - rho_start).norm());
        let mut uh = u_hat(traj, sc, m_shift)?;
        uh.scale(s + m_shift);
        u_norm.push(uh.l2_norm());
    }
    let u_ok = u_norm.iter().all(|&v| v == 0.0) || strictly_decreasing_tail(&u_norm);
    let pass = strictly_decreasing_tail(&rho_deviation) && u_ok;
    Ok(AsymptoticReport {
        m_shift,
        s: s_list.to_vec(),
        rho0_value: rho_start,
        rho_deviation,
        u_norm,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioScan {
    /// Samples in `(Re s, Im s)` order.
    pub samples: Vec<Complex64>,
    /// `u_hat(s) / rho_hat(s)` per sample.
    pub fields: Vec<ComplexField>,
    pub norms: Vec<f64>,
    /// Sum of `||phi_{k+1} - phi_k||` over consecutive samples.
    pub variation: f64,
}

/// Evaluates `u_hat(s) / rho_hat(s)` over the samples.
pub fn ratio_scan(
    traj: &Trajectory,
    rho: &AmplitudeFunction,
    m_shift: f64,
    samples: &[Complex64],
) -> Result<RatioScan> {
    let final_time = traj.time_grid().final_time();
    let threshold = NEAR_ZERO * rho.sup * final_time;
    let mut ordered: Vec<(Complex64, ())> = samples.iter().map(|&s| (s, ())).collect();
    sector::sort_samples(&mut ordered);
    let mut fields = Vec::with_capacity(ordered.len());
    for &(s, _) in &ordered {
        let rh = rho_hat(
            rho,
            s,
            m_shift,
            final_time,
            Quadrature::GridTrapezoid(traj.times()),
        )?;
        if rh.norm() < threshold {
            return Err(Error::NearZeroTransform { re: s.re, im: s.im });
        }
        let mut phi = u_hat(traj, s, m_shift)?;
        phi.scale_complex(rh.inv());
        fields.push(phi);
    }
    let norms = fields.iter().map(|f| f.l2_norm()).collect();
    let variation = fields.windows(2).map(|w| w[1].sub(&w[0]).l2_norm()).sum();
    Ok(RatioScan {
        samples: ordered.into_iter().map(|(s, _)| s).collect(),
        fields,
        norms,
        variation,
    })
}

#[cfg(test)]
mod tests;
