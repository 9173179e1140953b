//! Reconstruction of the spatial source `f` from the final state `u(., T)`.
//!
//! The data map `A: f -> u(., T)` is linear. Its adjoint is the exact
//! transpose of the discrete time stepping, so iterative methods on the
//! normal equations see a genuinely symmetric `A^T A`.

mod catalog;
mod iterative;
mod map;
mod spectral;

pub use catalog::SourceShape;
pub use iterative::{reconstruct_cgne, reconstruct_landweber, reconstruct_tikhonov};
pub use map::{adjoint_map, forward_map, SourceMap, POWER_SEED};
pub use spectral::{
    discrete_multiplier, reconstruct_spectral, singular_spectrum, singular_spectrum_with,
    ClosedForm, SingularSpectrum, SpectrumMethod, SpectrumOptions, DENSE_CAP,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::forward::Problem;
use crate::grid::Field;
use crate::io::{fmt_f64, write_field_csv, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cgne,
    Landweber,
    Tikhonov,
    Spectral,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cgne => "cgne",
            Method::Landweber => "landweber",
            Method::Tikhonov => "tikhonov",
            Method::Spectral => "spectral",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Method::Cgne, Method::Landweber, Method::Tikhonov, Method::Spectral]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodParams {
    /// Iteration cap of CGNE and Landweber.
    pub max_iter: usize,
    /// Landweber step; `None` means `1 / ||A||_est^2`.
    pub omega: Option<f64>,
    /// Power-iteration steps for `||A||_est`.
    pub power_steps: usize,
    /// Tikhonov weight.
    pub alpha: f64,
    /// Discrepancy factor; active when the noise level is positive.
    pub tau: f64,
    pub morozov: bool,
    /// Stop once `||A f - d|| <= residual_tol * ||d||`.
    pub residual_tol: f64,
    /// Stop once the relative change of the residual drops below this.
    pub stagnation_tol: f64,
    /// Abort after this many consecutive residual increases (Landweber).
    pub divergence_window: usize,
    /// Retained eigenmodes; `None` keeps all.
    pub n_modes: Option<usize>,
    /// Relative tolerance of the inner CG solve (Tikhonov).
    pub inner_tol: f64,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            max_iter: 200,
            omega: None,
            power_steps: 20,
            alpha: 1e-6,
            tau: 1.1,
            morozov: true,
            residual_tol: 1e-10,
            stagnation_tol: 1e-12,
            divergence_window: 10,
            n_modes: None,
            inner_tol: 1e-10,
        }
    }
}

/// Everything a reconstruction needs. The source field stored in
/// `problem` is ignored.
#[derive(Debug, Clone)]
pub struct InverseRun {
    pub problem: Problem,
    /// Observed `u(., T)`.
    pub data: Field,
    /// Relative `L^2` noise level of `data`.
    pub noise_level: f64,
    pub method: Method,
    pub params: MethodParams,
    pub seed: Option<u64>,
    /// Ground truth, when known.
    pub truth: Option<Field>,
}

impl InverseRun {
    pub fn new(problem: Problem, data: Field, method: Method) -> Self {
        Self {
            problem,
            data,
            noise_level: 0.0,
            method,
            params: MethodParams::default(),
            seed: None,
            truth: None,
        }
    }

    pub fn with_noise(mut self, level: f64, seed: u64) -> Self {
        self.noise_level = level;
        self.seed = Some(seed);
        self
    }

    pub fn with_params(mut self, params: MethodParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_truth(mut self, truth: Field) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.data.grid() != &self.problem.grid {
            return Err(Error::ShapeMismatch {
                what: "data field".into(),
                expected: self.problem.grid.unknowns(),
                got: self.data.len(),
            });
        }
        if let Some(t) = &self.truth {
            t.check_same_grid(&self.data)?;
        }
        if !(self.noise_level >= 0.0) {
            return bad(format!("noise level must be >= 0, got {}", self.noise_level));
        }
        if self.noise_level > 0.0 && self.seed.is_none() {
            return bad("a seed must be recorded when the noise level is positive".into());
        }
        if p.morozov && self.noise_level > 0.0 && !(p.tau > 1.0) {
            return bad(format!("Morozov factor tau must exceed 1, got {}", p.tau));
        }
        if let Some(w) = p.omega {
            if !(w > 0.0) {
                return bad(format!("Landweber step must be positive, got {w}"));
            }
        }
        if self.method == Method::Tikhonov && !(p.alpha > 0.0) {
            return bad(format!("Tikhonov alpha must be positive, got {}", p.alpha));
        }
        if let Some(k) = p.n_modes {
            if k == 0 || k > self.data.len() {
                return bad(format!(
                    "n_modes must lie in [1, {}], got {k}",
                    self.data.len()
                ));
            }
        }
        if !(p.residual_tol >= 0.0 && p.stagnation_tol >= 0.0 && p.inner_tol > 0.0) {
            return bad("tolerances must be non-negative".into());
        }
        Ok(())
    }

    /// Morozov target `tau * delta * ||d||`, if active.
    pub(crate) fn discrepancy_target(&self) -> Option<f64> {
        (self.params.morozov && self.noise_level > 0.0)
            .then(|| self.params.tau * self.noise_level * self.data.l2_norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ZeroData,
    IterationCap,
    Stagnation,
    Discrepancy,
    ResidualTolerance,
    /// Non-iterative method or inner solve finished.
    Solved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub residual: f64,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub rel_l2: f64,
    pub max_abs: f64,
    /// `rel_l2` holds an absolute norm because the truth vanishes.
    pub absolute: bool,
}

/// `||f_est - f_true|| / ||f_true||` (absolute when `f_true = 0`) and the
/// node-wise maximum deviation.
pub fn error_metrics(f_est: &Field, f_true: &Field) -> Result<ErrorMetrics> {
    f_est.check_same_grid(f_true)?;
    let diff = f_est.sub(f_true);
    let base = f_true.l2_norm();
    let absolute = base == 0.0;
    Ok(ErrorMetrics {
        rel_l2: if absolute {
            diff.l2_norm()
        } else {
            diff.l2_norm() / base
        },
        max_abs: diff.max_abs(),
        absolute,
    })
}

/// `data + eta` with i.i.d. Gaussian `eta` rescaled so that
/// `||eta|| = delta ||data||` exactly.
pub fn add_noise(data: &Field, delta: f64, seed: u64) -> Result<Field> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise level must be >= 0, got {delta}"
        )));
    }
    let target = delta * data.l2_norm();
    if target == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta: Vec<f64> = (0..data.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut eta = Field::from_values(data.grid(), eta)?;
    eta.scale(target / eta.l2_norm());
    Ok(data.add(&eta))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub method: Method,
    #[serde(skip)]
    pub f_est: Field,
    pub iterations: usize,
    /// `||A f_est - d||`, recomputed from `f_est`.
    pub residual: f64,
    pub data_norm: f64,
    pub stop: StopReason,
    pub metrics: Option<ErrorMetrics>,
    pub noise_level: f64,
    pub seed: Option<u64>,
    pub params: MethodParams,
    #[serde(skip)]
    pub history: Vec<IterRecord>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

impl ReconstructionResult {
    pub(crate) fn new(run: &InverseRun, f_est: Field, stop: StopReason) -> Self {
        Self {
            method: run.method,
            f_est,
            iterations: 0,
            residual: 0.0,
            data_norm: run.data.l2_norm(),
            stop,
            metrics: None,
            noise_level: run.noise_level,
            seed: run.seed,
            params: run.params,
            history: Vec::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn relative_residual(&self) -> f64 {
        if self.data_norm > 0.0 {
            self.residual / self.data_norm
        } else {
            self.residual
        }
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
    }

    /// Recomputes the residual and error metrics from `f_est`.
    pub(crate) fn finalize(mut self, run: &InverseRun, map: &SourceMap) -> Result<Self> {
        self.residual = map.apply(&self.f_est)?.sub(&run.data).l2_norm();
        if let Some(t) = &run.truth {
            self.metrics = Some(error_metrics(&self.f_est, t)?);
        }
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `{stem}.json`, `{stem}_f_est.csv` and `{stem}_history.csv` in `dir`.
    pub fn write_artifacts(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join(format!("{stem}.json")), self)?;
        write_field_csv(&dir.join(format!("{stem}_f_est.csv")), &self.f_est)?;
        let mut w = csv::Writer::from_path(dir.join(format!("{stem}_history.csv")))?;
        w.write_record(["iter", "residual", "error_if_known"])?;
        for h in &self.history {
            w.write_record([
                h.iter.to_string(),
                fmt_f64(h.residual),
                h.error.map(fmt_f64).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the method selected in `run`.
pub fn reconstruct(run: &InverseRun) -> Result<ReconstructionResult> {
    match run.method {
        Method::Cgne => reconstruct_cgne(run),
        Method::Landweber => reconstruct_landweber(run),
        Method::Tikhonov => reconstruct_tikhonov(run, run.params.alpha),
        Method::Spectral => reconstruct_spectral(run, run.params.n_modes),
    }
}
