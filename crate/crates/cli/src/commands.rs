use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use adsrc_core::inverse::{
    add_noise, forward_map, reconstruct, singular_spectrum_with, InverseRun, ReconstructionResult,
    SpectrumMethod, POWER_SEED,
};
use adsrc_core::io::{fmt_f64, write_field_csv, write_json, write_trajectory};
use adsrc_core::transform::{
    asymptotic_check, transform_residual, verify_lemma_rho, verify_lemma_uhat, LemmaReport,
    SamplePlan, Sector, EXPONENT_GUARD, GAUSS_REL_TOL, NEAR_ZERO,
};
use adsrc_core::{solve_forward, Error, Field, Trajectory};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Experiment;
use crate::error::{CliError, CliResult};

/// Design values in effect for a run, written next to every artifact set.
fn defaults(exp: &Experiment) -> Value {
    let p = &exp.problem;
    let cfg = &exp.config;
    let params = exp.method_params();
    json!({
        "theta": p.theta,
        "solver": {
            "method": "restarted GMRES (modified Gram-Schmidt, Givens)",
            "tol": p.solver.tol,
            "restart": p.solver.restart,
            "max_iter": p.solver.max_iter.unwrap_or(10 * p.grid.unknowns()),
            "warm_start": "previous time level",
        },
        "spatial": {
            "diffusion": "flux form, arithmetic midpoint average of a",
            "mixed_terms": "central differences of a12 du/dy at neighbouring nodes",
            "advection": "central differences",
        },
        "stride": p.stride,
        "transform": {
            "M": exp.m_shift,
            "M_rule": "||c||_inf + 1 unless set",
            "N": cfg.transform.n,
            "sample_plan": exp.plan(),
            "exponent_guard": EXPONENT_GUARD,
            "gauss_rel_tol": GAUSS_REL_TOL,
            "near_zero": NEAR_ZERO,
            "rho_hat_quadrature": "gauss-kronrod 7/15 adaptive for the amplitude certificate and asymptotics, grid trapezoid elsewhere",
            "u_hat_quadrature": "trapezoid on the stored snapshot times",
            "asymptotic_s": cfg.transform.asymptotic_s,
        },
        "inverse": {
            "adjoint": "exact transpose of the discrete time stepping",
            "params": params,
            "power_seed": POWER_SEED,
            "landweber_omega_rule": "1 / ||A||_est^2 unless set",
            "noise": "ChaCha8 standard normal, rescaled to the exact relative level",
        },
        "spectrum": exp.spectrum_options(),
    })
}

fn problem_summary(exp: &Experiment) -> Value {
    let p = &exp.problem;
    json!({
        "unknowns": p.grid.unknowns(),
        "spacing": p.grid.spacing(),
        "dt": p.time_grid.dt(),
        "symmetry_flag": p.operator.symmetry_flag(),
        "peclet": p.operator.peclet(),
        "ellipticity_a0": p.coeffs.a0(),
        "rho_inf": p.rho.rho0,
        "rho_sup": p.rho.sup,
        "rho_c1": p.rho.c1_norm,
    })
}

fn write_metadata(dir: &Path, command: &str, exp: &Experiment, results: Value) -> CliResult<()> {
    let meta = json!({
        "command": command,
        "name": exp.name,
        "config": exp.config,
        "defaults": defaults(exp),
        "problem": problem_summary(exp),
        "results": results,
    });
    write_json(&dir.join("metadata.json"), &meta)?;
    Ok(())
}

fn run_forward(exp: &Experiment) -> CliResult<Trajectory> {
    Ok(solve_forward(&exp.problem, exp.problem.theta)?)
}

pub fn cmd_forward(exp: &Experiment, dir: &Path) -> CliResult<()> {
    let traj = run_forward(exp)?;
    write_trajectory(&dir.join("trajectory"), &traj)?;
    let last = traj.final_snapshot();
    write_field_csv(&dir.join("final.csv"), last)?;
    let mut results = json!({
        "final_max_abs": last.max_abs(),
        "final_l2": last.l2_norm(),
        "snapshots": traj.len(),
    });
    let mut failure = None;
    let fw = &exp.config.forward;
    if let Some(shape) = &fw.expected {
        let scale = fw.expected_scale.unwrap_or(1.0);
        let tol = fw.expected_tol.expect("filled at build");
        let expected = shape.field(&exp.problem.grid)?.scaled(scale);
        let err = last.sub(&expected).max_abs();
        let pass = err <= tol;
        results["expected"] = json!({
            "shape": shape,
            "scale": scale,
            "max_abs_error": err,
            "tolerance": tol,
            "pass": pass,
        });
        if !pass {
            failure = Some(format!(
                "final state deviates from the expected field by {err:e} > {tol:e}"
            ));
        }
    }
    write_metadata(dir, "forward", exp, results)?;
    match failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}

fn n_label(n: f64) -> String {
    format!("N{n}")
}

fn write_report(dir: &Path, stem: &str, r: &LemmaReport) -> CliResult<()> {
    r.write_json(&dir.join(format!("{stem}.json")))?;
    r.write_csv(&dir.join(format!("{stem}.csv")))?;
    Ok(())
}

pub fn cmd_verify(exp: &Experiment, dir: &Path) -> CliResult<()> {
    let p = &exp.problem;
    let traj = run_forward(exp)?;
    let final_time = p.time_grid.final_time();
    let plan = exp.plan();
    let plan_c = SamplePlan {
        sectors: vec![Sector::C],
        ..plan.clone()
    };
    let ns = exp.config.transform.n.clone();

    let reports: Vec<(LemmaReport, LemmaReport)> = ns
        .par_iter()
        .map(|&n| -> CliResult<_> {
            let rho_r = verify_lemma_rho(&p.rho, final_time, n, &plan_c)?;
            let u_r = verify_lemma_uhat(&traj, &p.f, &p.rho, exp.m_shift, &plan, n)?;
            Ok((rho_r, u_r))
        })
        .collect::<CliResult<_>>()?;

    let mut flags = BTreeMap::new();
    for (n, (rho_r, u_r)) in ns.iter().zip(&reports) {
        write_report(dir, &format!("lemma_rho_{}", n_label(*n)), rho_r)?;
        write_report(dir, &format!("lemma_uhat_{}", n_label(*n)), u_r)?;
        flags.insert(format!("lemma_rho_{}", n_label(*n)), rho_r.pass);
        flags.insert(format!("lemma_uhat_{}", n_label(*n)), u_r.pass);
    }

    // elliptic identity over the plan, labelled with the first N
    let samples = plan.samples(ns[0])?;
    let residuals: Vec<Option<f64>> = samples
        .par_iter()
        .map(|(s, _)| {
            match transform_residual(&p.operator, &traj, &p.f, &p.rho, *s, exp.m_shift) {
                Ok(r) => Ok(Some(r)),
                Err(Error::ExponentOverflow { .. }) => Ok(None),
                Err(e) => Err(CliError::from(e)),
            }
        })
        .collect::<CliResult<_>>()?;
    let mut w = csv_writer(&dir.join("transform_residual.csv"))?;
    w.write_record(["s_re", "s_im", "sector", "residual"])?;
    let mut worst = 0.0f64;
    for ((s, sector), r) in samples.iter().zip(&residuals) {
        if let Some(r) = r {
            worst = worst.max(*r);
        }
        w.write_record([
            fmt_f64(s.re),
            fmt_f64(s.im),
            sector.label().to_string(),
            r.map(fmt_f64).unwrap_or_else(|| "skipped".into()),
        ])?;
    }
    w.flush()?;

    let asym = asymptotic_check(&p.rho, &traj, exp.m_shift, &exp.config.transform.asymptotic_s)?;
    write_json(&dir.join("asymptotic.json"), &asym)?;
    flags.insert("asymptotic".into(), asym.pass);

    let all = flags.values().all(|&v| v);
    let summary = json!({
        "pass": all,
        "flags": flags,
        "transform_residual_max": worst,
        "transform_residual_samples": samples.len(),
        "transform_residual_skipped": residuals.iter().filter(|r| r.is_none()).count(),
    });
    write_json(&dir.join("summary.json"), &summary)?;
    write_metadata(dir, "verify", exp, summary.clone())?;
    if all {
        Ok(())
    } else {
        let failed: Vec<String> = flags
            .into_iter()
            .filter(|(_, v)| !v)
            .map(|(k, _)| k)
            .collect();
        Err(CliError::Verification(format!("failed reports: {}", failed.join(", "))))
    }
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    Ok(csv::Writer::from_path(path).map_err(Error::from)?)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Debug, Serialize)]
struct BatchRow {
    seed: u64,
    rel_l2: Option<f64>,
    max_abs: Option<f64>,
    relative_residual: f64,
    iterations: usize,
    stop: adsrc_core::inverse::StopReason,
}

pub fn cmd_invert(exp: &Experiment, dir: &Path) -> CliResult<()> {
    let p = &exp.problem;
    let inv = &exp.config.inverse;
    let (clean, truth, synthesized) = match &exp.data {
        Some(d) => (d.clone(), exp.source_explicit.then(|| exp.source.clone()), false),
        None => (forward_map(&exp.source, p)?, Some(exp.source.clone()), true),
    };
    let seeds: Vec<u64> = if inv.seeds.is_empty() {
        vec![inv.seed]
    } else {
        inv.seeds.clone()
    };
    let batch = !inv.seeds.is_empty();
    let params = exp.method_params();

    let results: Vec<(u64, Field, ReconstructionResult)> = seeds
        .par_iter()
        .map(|&seed| -> CliResult<_> {
            let data = if synthesized {
                add_noise(&clean, inv.noise_level, seed)?
            } else {
                clean.clone()
            };
            let mut run = InverseRun::new(p.clone(), data.clone(), exp.method).with_params(params);
            run.noise_level = inv.noise_level;
            run.seed = Some(seed);
            run.truth = truth.clone();
            Ok((seed, data, reconstruct(&run)?))
        })
        .collect::<CliResult<_>>()?;

    // single-threaded artifact writes, in seed order
    let mut rows = Vec::new();
    for (seed, data, res) in &results {
        let sub: PathBuf = if batch {
            dir.join(format!("seed_{seed}"))
        } else {
            dir.to_path_buf()
        };
        res.write_artifacts(&sub, "result")?;
        write_field_csv(&sub.join("data.csv"), data)?;
        rows.push(BatchRow {
            seed: *seed,
            rel_l2: res.metrics.map(|m| m.rel_l2),
            max_abs: res.metrics.map(|m| m.max_abs),
            relative_residual: res.relative_residual(),
            iterations: res.iterations,
            stop: res.stop,
        });
    }
    let med_rel = rows.iter().filter_map(|r| r.rel_l2).collect::<Vec<_>>();
    let med_max = rows.iter().filter_map(|r| r.max_abs).collect::<Vec<_>>();
    let summary = json!({
        "method": exp.method,
        "noise_level": inv.noise_level,
        "data": if synthesized { "synthesized" } else { "file" },
        "runs": rows,
        "median_rel_l2": (!med_rel.is_empty()).then(|| median(med_rel.clone())),
        "median_max_abs": (!med_max.is_empty()).then(|| median(med_max.clone())),
    });
    if batch {
        let mut w = csv_writer(&dir.join("median.csv"))?;
        w.write_record([
            "noise_level",
            "runs",
            "median_rel_l2",
            "median_max_abs",
            "median_relative_residual",
            "median_iterations",
        ])?;
        let opt = |v: &Vec<f64>| {
            if v.is_empty() {
                String::new()
            } else {
                fmt_f64(median(v.clone()))
            }
        };
        w.write_record([
            fmt_f64(inv.noise_level),
            rows.len().to_string(),
            opt(&med_rel),
            opt(&med_max),
            fmt_f64(median(rows.iter().map(|r| r.relative_residual).collect())),
            fmt_f64(median(rows.iter().map(|r| r.iterations as f64).collect())),
        ])?;
        w.flush()?;
        write_json(&dir.join("summary.json"), &summary)?;
    }
    write_metadata(dir, "invert", exp, summary)?;
    Ok(())
}

pub fn cmd_spectrum(exp: &Experiment, dir: &Path) -> CliResult<()> {
    let spec = singular_spectrum_with(&exp.problem, &exp.spectrum_options())?;
    let mut w = csv_writer(&dir.join("singular_values.csv"))?;
    let cf = spec.closed_form.as_ref();
    let lanczos = spec.method == SpectrumMethod::Lanczos;
    let mut header = vec!["index", "sigma"];
    if cf.is_some() {
        header.extend(["closed_form_discrete", "closed_form_continuum"]);
    }
    if lanczos {
        header.push("converged");
    }
    w.write_record(&header)?;
    let n = spec.unknowns;
    for (index, sigma) in spec.table() {
        let mut row = vec![index.to_string(), fmt_f64(sigma)];
        if let Some(cf) = cf {
            row.push(fmt_f64(cf.discrete[index - 1]));
            row.push(fmt_f64(cf.continuum[index - 1]));
        }
        if lanczos {
            let ok = if index <= spec.largest.len() {
                spec.largest_converged[index - 1]
            } else {
                let off = n - spec.smallest.len();
                spec.smallest_converged[index - 1 - off]
            };
            row.push(ok.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    write_json(&dir.join("spectrum.json"), &spec)?;
    let pass = spec.sigma_min() > 0.0;
    let results = json!({
        "method": spec.method,
        "sigma_max": spec.sigma_max(),
        "sigma_min": spec.sigma_min(),
        "closed_form_max_defect": cf.map(|c| c.max_defect),
        "all_positive": pass,
    });
    write_metadata(dir, "spectrum", exp, results)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "smallest singular value {} is not positive",
            spec.sigma_min()
        )))
    }
}
