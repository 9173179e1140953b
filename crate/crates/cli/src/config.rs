//! Experiment configuration: TOML with dotted sections, validated up front.

use std::path::{Path, PathBuf};

use adsrc_core::inverse::{Method, MethodParams, SourceShape, SpectrumOptions, DENSE_CAP};
use adsrc_core::io::read_field_csv;
use adsrc_core::transform::{SamplePlan, Sector};
use adsrc_core::{
    Amplitude, AmplitudeFunction, CoefficientSet, CoefficientSpec, Field, Grid, Problem, Profile,
    SolveOptions, TimeGrid,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Attaches a key path to a core error raised while building `key`.
fn at<T>(key: &str, r: adsrc_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| invalid(key, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Output sub-directory; defaults to the config file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub grid: GridConfig,
    #[serde(default)]
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub rho: RhoConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub forward: ForwardConfig,
    #[serde(default)]
    pub transform: TransformConfig,
    #[serde(default)]
    pub inverse: InverseConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    /// `[lo, hi]` per axis; unit box when empty.
    #[serde(default)]
    pub extents: Vec<[f64; 2]>,
    pub n_interior: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    /// Row-major diffusion profiles; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Profile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Profile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Profile>,
    /// Field CSVs replacing the profiles, `a` row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_files: Option<Vec<PathBuf>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_files: Option<Vec<PathBuf>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoConfig {
    #[serde(default = "default_rho")]
    pub profile: Amplitude,
    /// Reject amplitudes with `inf rho <= 0` at load time.
    #[serde(default)]
    pub assert_positive: bool,
}

fn default_rho() -> Amplitude {
    Amplitude::Constant { value: 1.0 }
}

impl Default for RhoConfig {
    fn default() -> Self {
        Self {
            profile: default_rho(),
            assert_positive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub final_time: f64,
    pub n_steps: usize,
    #[serde(default = "half")]
    pub theta: f64,
    #[serde(default = "one_usize")]
    pub stride: usize,
}

fn half() -> f64 {
    0.5
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Catalog shape; the first eigenmode when neither shape nor file is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<SourceShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "solver_tol")]
    pub tol: f64,
    #[serde(default = "restart")]
    pub restart: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

fn solver_tol() -> f64 {
    SolveOptions::default().tol
}

fn restart() -> usize {
    SolveOptions::default().restart
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: solver_tol(),
            restart: restart(),
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardConfig {
    /// Expected `u(., T)` as a catalog shape times `expected_scale`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<SourceShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_scale: Option<f64>,
    /// Max-norm tolerance; `5 h^2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    /// Real shift; `||c||_inf + 1` when absent.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m_shift: Option<f64>,
    #[serde(rename = "N", default = "default_n")]
    pub n: Vec<f64>,
    #[serde(default = "default_sectors")]
    pub sectors: Vec<String>,
    #[serde(default = "r_min")]
    pub r_min: f64,
    /// `100 max(1, 1/T)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default = "n_radii")]
    pub n_radii: usize,
    #[serde(default = "n_angles")]
    pub n_angles: usize,
    #[serde(default = "asymptotic_s")]
    pub asymptotic_s: Vec<f64>,
}

fn default_n() -> Vec<f64> {
    vec![2.0, 8.0, 32.0]
}

fn default_sectors() -> Vec<String> {
    Sector::ALL.iter().map(|s| s.label().to_string()).collect()
}

fn r_min() -> f64 {
    0.1
}

fn n_radii() -> usize {
    12
}

fn n_angles() -> usize {
    8
}

fn asymptotic_s() -> Vec<f64> {
    vec![10.0, 30.0, 100.0]
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            m_shift: None,
            n: default_n(),
            sectors: default_sectors(),
            r_min: r_min(),
            r_max: None,
            n_radii: n_radii(),
            n_angles: n_angles(),
            asymptotic_s: asymptotic_s(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseConfig {
    #[serde(default = "method")]
    pub method: String,
    #[serde(default)]
    pub noise_level: f64,
    #[serde(default)]
    pub seed: u64,
    /// Batch of seeds; overrides `seed` when non-empty.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "tau")]
    pub tau: f64,
    #[serde(default = "yes")]
    pub morozov: bool,
    #[serde(default = "alpha")]
    pub alpha: f64,
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default = "power_steps")]
    pub power_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
    #[serde(default = "residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "stagnation_tol")]
    pub stagnation_tol: f64,
    /// Observed `u(., T)`; synthesized from the source when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_file: Option<PathBuf>,
}

fn method() -> String {
    "cgne".into()
}
fn tau() -> f64 {
    MethodParams::default().tau
}
fn yes() -> bool {
    true
}
fn alpha() -> f64 {
    MethodParams::default().alpha
}
fn max_iter() -> usize {
    MethodParams::default().max_iter
}
fn power_steps() -> usize {
    MethodParams::default().power_steps
}
fn residual_tol() -> f64 {
    MethodParams::default().residual_tol
}
fn stagnation_tol() -> f64 {
    MethodParams::default().stagnation_tol
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            method: method(),
            noise_level: 0.0,
            seed: 0,
            seeds: Vec::new(),
            tau: tau(),
            morozov: true,
            alpha: alpha(),
            max_iter: max_iter(),
            omega: None,
            power_steps: power_steps(),
            n_modes: None,
            residual_tol: residual_tol(),
            stagnation_tol: stagnation_tol(),
            data_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "k")]
    pub k: usize,
    #[serde(default = "dense_cap")]
    pub dense_cap: usize,
    #[serde(default)]
    pub force_iterative: bool,
    #[serde(default = "krylov_tol")]
    pub krylov_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lanczos_steps: Option<usize>,
}

fn k() -> usize {
    5
}
fn dense_cap() -> usize {
    DENSE_CAP
}
fn krylov_tol() -> f64 {
    SpectrumOptions::new(1).krylov_tol
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            k: k(),
            dense_cap: dense_cap(),
            force_iterative: false,
            krylov_tol: krylov_tol(),
            lanczos_steps: None,
        }
    }
}

/// A validated configuration with every derived object built.
#[derive(Debug, Clone)]
pub struct Experiment {
    /// Config with every optional default filled in.
    pub config: ExperimentConfig,
    pub name: String,
    pub problem: Problem,
    pub source: Field,
    /// Whether the source was given explicitly rather than defaulted.
    pub source_explicit: bool,
    pub m_shift: f64,
    pub sectors: Vec<Sector>,
    pub method: Method,
    pub data: Option<Field>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // toml reports the offending key in the message itself
            invalid("config", msg)
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_file(base: &Path, key: &str, p: &Path, grid: &Grid) -> CliResult<Field> {
    let path = resolve(base, p);
    if !path.is_file() {
        return Err(invalid(key, format!("file {} does not exist", path.display())));
    }
    at(key, read_field_csv(&path, grid))
}

impl Experiment {
    /// Loads and validates `path`; relative file references resolve against
    /// the config's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let config = ExperimentConfig::load(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "experiment".into());
        let base = path.parent().unwrap_or(Path::new("."));
        Self::build(config, &stem, base)
    }

    pub fn build(mut config: ExperimentConfig, stem: &str, base: &Path) -> CliResult<Self> {
        let name = config.name.clone().unwrap_or_else(|| stem.to_string());
        if name.is_empty() || name.contains(['/', '\\']) || name == ".." {
            return Err(invalid("name", format!("{name:?} is not a plain directory name")));
        }

        // grid
        let g = &mut config.grid;
        if !(1..=2).contains(&g.dim) {
            return Err(invalid("grid.dim", format!("must be 1 or 2, got {}", g.dim)));
        }
        if g.extents.is_empty() {
            g.extents = vec![[0.0, 1.0]; g.dim];
        }
        if g.extents.len() != g.dim {
            return Err(invalid(
                "grid.extents",
                format!("expected {} intervals, got {}", g.dim, g.extents.len()),
            ));
        }
        if let Some(e) = g.extents.iter().find(|e| !(e[1] > e[0]) || !e[0].is_finite() || !e[1].is_finite()) {
            return Err(invalid("grid.extents", format!("interval {e:?} is empty or not finite")));
        }
        if g.n_interior.len() != g.dim {
            return Err(invalid(
                "grid.n_interior",
                format!("expected {} counts, got {}", g.dim, g.n_interior.len()),
            ));
        }
        if let Some(n) = g.n_interior.iter().find(|&&n| n < 2) {
            return Err(invalid(
                "grid.n_interior",
                format!("at least 2 interior nodes per axis are required, got {n}"),
            ));
        }
        let extents: Vec<(f64, f64)> = g.extents.iter().map(|e| (e[0], e[1])).collect();
        let grid = at("grid", Grid::new(g.dim, &extents, &g.n_interior))?;
        let dim = grid.dim();

        // time
        let t = &config.time;
        if !(t.final_time > 0.0 && t.final_time.is_finite()) {
            return Err(invalid("time.T", format!("must be positive, got {}", t.final_time)));
        }
        if t.n_steps == 0 {
            return Err(invalid("time.n_steps", "must be at least 1"));
        }
        if !(0.5..=1.0).contains(&t.theta) {
            return Err(invalid("time.theta", format!("must lie in [0.5, 1], got {}", t.theta)));
        }
        if t.stride == 0 {
            return Err(invalid("time.stride", "must be at least 1"));
        }
        let time_grid = at("time", TimeGrid::new(t.final_time, t.n_steps))?;

        // amplitude
        let rho = at("rho.profile", AmplitudeFunction::new(config.rho.profile.clone(), t.final_time))?;
        if config.rho.assert_positive && !(rho.rho0 > 0.0) {
            return Err(invalid(
                "rho.assert_positive",
                format!("amplitude must satisfy inf rho > 0 on [0, T], but inf rho = {}", rho.rho0),
            ));
        }

        // coefficients
        let c = &config.coefficients;
        let coeffs = if c.a_files.is_some() || c.b_files.is_some() || c.c_file.is_some() {
            if c.a.is_some() || c.b.is_some() || c.c.is_some() {
                return Err(invalid(
                    "coefficients",
                    "give either profiles or files, not both",
                ));
            }
            let n = grid.unknowns();
            let mut a = vec![[[0.0; 2]; 2]; n];
            match &c.a_files {
                Some(files) => {
                    if files.len() != dim * dim {
                        return Err(invalid(
                            "coefficients.a_files",
                            format!("expected {} files, got {}", dim * dim, files.len()),
                        ));
                    }
                    for (k, p) in files.iter().enumerate() {
                        let f = read_file(base, "coefficients.a_files", p, &grid)?;
                        for (cell, v) in a.iter_mut().zip(f.values()) {
                            cell[k / dim][k % dim] = *v;
                        }
                    }
                }
                None => a.iter_mut().for_each(|m| {
                    for i in 0..dim {
                        m[i][i] = 1.0;
                    }
                }),
            }
            let mut b = vec![[0.0; 2]; n];
            if let Some(files) = &c.b_files {
                if files.len() != dim {
                    return Err(invalid(
                        "coefficients.b_files",
                        format!("expected {dim} files, got {}", files.len()),
                    ));
                }
                for (k, p) in files.iter().enumerate() {
                    let f = read_file(base, "coefficients.b_files", p, &grid)?;
                    for (cell, v) in b.iter_mut().zip(f.values()) {
                        cell[k] = *v;
                    }
                }
            }
            let cv = match &c.c_file {
                Some(p) => read_file(base, "coefficients.c_file", p, &grid)?.into_values(),
                None => vec![0.0; n],
            };
            at("coefficients", CoefficientSet::from_arrays(&grid, a, b, cv))?
        } else {
            let mut spec = CoefficientSpec::laplacian(dim);
            if let Some(a) = &c.a {
                spec.a = a.clone();
            }
            if let Some(b) = &c.b {
                spec.b = b.clone();
            }
            if let Some(cc) = &c.c {
                spec.c = cc.clone();
            }
            if spec.a.len() != dim * dim {
                return Err(invalid(
                    "coefficients.a",
                    format!("expected {} profiles, got {}", dim * dim, spec.a.len()),
                ));
            }
            if spec.b.len() != dim {
                return Err(invalid(
                    "coefficients.b",
                    format!("expected {dim} profiles, got {}", spec.b.len()),
                ));
            }
            at("coefficients", CoefficientSet::from_spec(&grid, &spec))?
        };

        // source
        let s = &config.source;
        let source_explicit = s.shape.is_some() || s.file.is_some();
        let source = match (&s.shape, &s.file) {
            (Some(_), Some(_)) => {
                return Err(invalid("source", "give either shape or file, not both"))
            }
            (Some(shape), None) => at("source.shape", shape.field(&grid))?,
            (None, Some(p)) => read_file(base, "source.file", p, &grid)?,
            (None, None) => {
                let shape = SourceShape::Eigenmode {
                    modes: vec![1; dim],
                };
                let f = at("source.shape", shape.field(&grid))?;
                config.source.shape = Some(shape);
                f
            }
        };

        // solver
        let sv = &config.solver;
        if !(sv.tol > 0.0 && sv.tol < 1.0) {
            return Err(invalid("solver.tol", format!("must lie in (0, 1), got {}", sv.tol)));
        }
        if sv.restart == 0 {
            return Err(invalid("solver.restart", "must be at least 1"));
        }
        if sv.max_iter == Some(0) {
            return Err(invalid("solver.max_iter", "must be at least 1"));
        }
        let solver = SolveOptions {
            tol: sv.tol,
            max_iter: sv.max_iter,
            restart: sv.restart,
        };

        let problem = at("coefficients", Problem::new(coeffs, time_grid, rho, source.clone()))?
            .with_theta(t.theta)
            .with_solver(solver)
            .with_stride(t.stride);

        // forward check
        if let Some(tol) = config.forward.expected_tol {
            if !(tol > 0.0) {
                return Err(invalid("forward.expected_tol", "must be positive"));
            }
        }
        if let Some(shape) = &config.forward.expected {
            at("forward.expected", shape.field(&grid))?;
            config.forward.expected_scale.get_or_insert(1.0);
            let h = grid.h_max();
            config.forward.expected_tol.get_or_insert(5.0 * h * h);
        }

        // transform
        let tr = &mut config.transform;
        let m_shift = *tr.m_shift.get_or_insert(problem.coeffs.c_max().abs().max(problem.coeffs.c_min().abs()) + 1.0);
        if !m_shift.is_finite() {
            return Err(invalid("transform.M", "must be finite"));
        }
        if tr.n.is_empty() {
            return Err(invalid("transform.N", "needs at least one value"));
        }
        if let Some(n) = tr.n.iter().find(|&&n| !(n > 1.0 && n.is_finite())) {
            return Err(invalid("transform.N", format!("every N must exceed 1, got {n}")));
        }
        let mut sectors = Vec::new();
        for s in &tr.sectors {
            match Sector::parse(s) {
                Some(x) if !sectors.contains(&x) => sectors.push(x),
                Some(_) => return Err(invalid("transform.sectors", format!("{s} listed twice"))),
                None => {
                    return Err(invalid(
                        "transform.sectors",
                        format!("unknown sector {s:?}; expected one of A, B, C, C_conj, B_conj"),
                    ))
                }
            }
        }
        if sectors.is_empty() {
            return Err(invalid("transform.sectors", "needs at least one sector"));
        }
        let default_plan = SamplePlan::default_for(t.final_time, sectors.clone());
        tr.r_max.get_or_insert(default_plan.r_max);
        let plan = SamplePlan {
            sectors: sectors.clone(),
            r_min: tr.r_min,
            r_max: tr.r_max.unwrap(),
            n_radii: tr.n_radii,
            n_angles: tr.n_angles,
        };
        at("transform", plan.validate())?;
        if let Some(s) = tr.asymptotic_s.iter().find(|&&s| !(s > 0.0)) {
            return Err(invalid("transform.asymptotic_s", format!("values must be positive, got {s}")));
        }
        if tr.asymptotic_s.len() < 3 {
            return Err(invalid("transform.asymptotic_s", "needs at least three values"));
        }
        if let Some(s) = tr
            .asymptotic_s
            .iter()
            .find(|&&s| (s + m_shift).abs() * t.final_time > adsrc_core::transform::EXPONENT_GUARD)
        {
            return Err(invalid(
                "transform.asymptotic_s",
                format!("s = {s} violates the exponent guard |s + M| T <= 700"),
            ));
        }

        // inverse
        let inv = &config.inverse;
        let method = Method::parse(&inv.method).ok_or_else(|| {
            invalid(
                "inverse.method",
                format!(
                    "unknown method {:?}; expected cgne, landweber, tikhonov or spectral",
                    inv.method
                ),
            )
        })?;
        if !(inv.noise_level >= 0.0 && inv.noise_level.is_finite()) {
            return Err(invalid("inverse.noise_level", format!("must be >= 0, got {}", inv.noise_level)));
        }
        if inv.morozov && inv.noise_level > 0.0 && !(inv.tau > 1.0) {
            return Err(invalid("inverse.tau", format!("must exceed 1, got {}", inv.tau)));
        }
        if !(inv.alpha > 0.0) {
            return Err(invalid("inverse.alpha", format!("must be positive, got {}", inv.alpha)));
        }
        if inv.max_iter == 0 {
            return Err(invalid("inverse.max_iter", "must be at least 1"));
        }
        if let Some(w) = inv.omega {
            if !(w > 0.0) {
                return Err(invalid("inverse.omega", format!("must be positive, got {w}")));
            }
        }
        if inv.power_steps == 0 {
            return Err(invalid("inverse.power_steps", "must be at least 1"));
        }
        if let Some(k) = inv.n_modes {
            if k == 0 || k > grid.unknowns() {
                return Err(invalid(
                    "inverse.n_modes",
                    format!("must lie in [1, {}], got {k}", grid.unknowns()),
                ));
            }
        }
        if !(inv.residual_tol >= 0.0) || !(inv.stagnation_tol >= 0.0) {
            return Err(invalid("inverse.residual_tol", "tolerances must be non-negative"));
        }
        if method == Method::Spectral {
            if !problem.operator.symmetry_flag() {
                return Err(invalid(
                    "inverse.method",
                    "spectral inversion requires symmetry_flag = true on the operator (advection b must vanish)",
                ));
            }
            if grid.unknowns() > DENSE_CAP {
                return Err(invalid(
                    "inverse.method",
                    format!("spectral inversion is limited to {DENSE_CAP} unknowns"),
                ));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(s) = inv.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(invalid("inverse.seeds", format!("seed {s} listed twice")));
        }
        let data = match &inv.data_file {
            Some(p) => Some(read_file(base, "inverse.data_file", p, &grid)?),
            None => None,
        };

        // spectrum
        let sp = &config.spectrum;
        if sp.k == 0 {
            return Err(invalid("spectrum.k", "must be at least 1"));
        }
        if sp.k > grid.unknowns() {
            return Err(invalid(
                "spectrum.k",
                format!("must not exceed the {} unknowns", grid.unknowns()),
            ));
        }
        if !sp.force_iterative && grid.unknowns() > sp.dense_cap {
            return Err(invalid(
                "spectrum.dense_cap",
                format!(
                    "{} unknowns exceed the dense cap {}; set spectrum.force_iterative = true for the Lanczos mode",
                    grid.unknowns(),
                    sp.dense_cap
                ),
            ));
        }
        if !(sp.krylov_tol > 0.0 && sp.krylov_tol < 1.0) {
            return Err(invalid("spectrum.krylov_tol", "must lie in (0, 1)"));
        }

        Ok(Self {
            config,
            name,
            problem,
            source,
            source_explicit,
            m_shift,
            sectors,
            method,
            data,
        })
    }

    pub fn plan(&self) -> SamplePlan {
        let tr = &self.config.transform;
        SamplePlan {
            sectors: self.sectors.clone(),
            r_min: tr.r_min,
            r_max: tr.r_max.expect("filled at build"),
            n_radii: tr.n_radii,
            n_angles: tr.n_angles,
        }
    }

    pub fn method_params(&self) -> MethodParams {
        let inv = &self.config.inverse;
        MethodParams {
            max_iter: inv.max_iter,
            omega: inv.omega,
            power_steps: inv.power_steps,
            alpha: inv.alpha,
            tau: inv.tau,
            morozov: inv.morozov,
            residual_tol: inv.residual_tol,
            stagnation_tol: inv.stagnation_tol,
            n_modes: inv.n_modes,
            ..MethodParams::default()
        }
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        let sp = &self.config.spectrum;
        SpectrumOptions {
            k: sp.k,
            dense_cap: sp.dense_cap,
            krylov_tol: sp.krylov_tol,
            lanczos_steps: sp.lanczos_steps,
            force_iterative: sp.force_iterative,
            ..SpectrumOptions::new(sp.k)
        }
    }

    /// Resolved config as TOML.
    pub fn describe(&self) -> String {
        toml::to_string_pretty(&self.config).unwrap_or_else(|e| format!("# unprintable: {e}\n"))
    }
}
