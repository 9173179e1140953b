//! Numerical toolkit for the advection-diffusion inverse source problem
//! `u_t - L u = rho(t) f(x)` on a bounded box with homogeneous Dirichlet
//! data: forward simulation, Laplace-type transforms in time with their
//! bound checks, and reconstruction of `f` from the final state `u(., T)`.

pub mod coeffs;
pub mod error;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod io;
pub mod krylov;
pub mod operator;
pub mod scalar;
pub mod time;
pub mod transform;

pub use coeffs::{check_ellipticity, CoefficientSet, CoefficientSpec, Profile};
pub use error::{Error, Result};
pub use forward::{observe_final, solve_forward, Problem, SourceTerm, Trajectory};
pub use grid::{ComplexField, Field, Grid};
pub use inverse::{
    add_noise, adjoint_map, error_metrics, forward_map, reconstruct, reconstruct_cgne,
    reconstruct_landweber, reconstruct_spectral, reconstruct_tikhonov, singular_spectrum,
    InverseRun, Method, MethodParams, ReconstructionResult, SourceShape, StopReason,
};
pub use krylov::{solve_linear, SolveOptions, SolveStats};
pub use operator::{adjoint_operator, apply_operator, assemble_operator, SparseOperator};
pub use time::{Amplitude, AmplitudeFunction, TimeGrid};
pub use transform::{
    asymptotic_check, classify_sector, h1_norm, ratio_scan, rho_hat, transform_residual, u_hat,
    verify_lemma_rho, verify_lemma_uhat, LemmaReport, Quadrature, SamplePlan, Sector,
};
