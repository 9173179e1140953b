use super::*;
use crate::coeffs::{CoefficientSet, CoefficientSpec};
use crate::forward::{solve_forward, Problem};
use crate::grid::Grid;
use crate::time::TimeGrid;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn one(t: f64) -> AmplitudeFunction {
    AmplitudeFunction::constant(1.0, t).unwrap()
}

fn two_plus_sin(t: f64) -> AmplitudeFunction {
    AmplitudeFunction::new(
        Amplitude::SinusoidalOffset {
            offset: 2.0,
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
        },
        t,
    )
    .unwrap()
}

/// `u = t sin(pi x)` on (0,1), T = 1.
fn manufactured(n: usize) -> (Problem, Trajectory) {
    let g = Grid::interval(0.0, 1.0, n).unwrap();
    let coeffs = CoefficientSet::from_spec(&g, &CoefficientSpec::laplacian(1)).unwrap();
    let rho = AmplitudeFunction::new(
        Amplitude::Affine {
            offset: 1.0,
            slope: PI * PI,
        },
        1.0,
    )
    .unwrap();
    let f = Field::from_fn(&g, |x| (PI * x[0]).sin());
    let p = Problem::new(coeffs, TimeGrid::new(1.0, n).unwrap(), rho, f).unwrap();
    let traj = solve_forward(&p, 0.5).unwrap();
    (p, traj)
}

fn zero_trajectory(n: usize) -> (Problem, Trajectory) {
    let (p, _) = manufactured(n);
    let g = p.grid;
    let p = p.with_source(Field::zeros(&g));
    let traj = solve_forward(&p, 0.5).unwrap();
    (p, traj)
}

/// Romberg extrapolation on the trapezoid rule, refined until two successive
/// diagonal entries agree to `tol` relative.
fn romberg(f: impl Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    let mut rows: Vec<Vec<Complex64>> = vec![vec![(f(a) + f(b)) * (0.5 * (b - a))]];
    for level in 1..25 {
        let n = 1usize << level;
        let h = (b - a) / n as f64;
        let mid: Complex64 = (0..n / 2).map(|k| f(a + (2 * k + 1) as f64 * h)).sum();
        let mut row = vec![rows[level - 1][0] * 0.5 + mid * h];
        for j in 1..=level {
            let p = 4f64.powi(j as i32);
            let v = (row[j - 1] * p - rows[level - 1][j - 1]) / (p - 1.0);
            row.push(v);
        }
        let prev = rows[level - 1][level - 1];
        let cur = row[level];
        rows.push(row);
        if level > 3 && (cur - prev).norm() <= tol * cur.norm() {
            return cur;
        }
    }
    panic!("romberg did not converge");
}

#[test]
fn rho_hat_zero_frequency_is_t() {
    let r = rho_hat(&one(1.5), c(0.0, 0.0), 0.0, 1.5, Quadrature::GaussAdaptive).unwrap();
    assert_eq!(r, c(1.5, 0.0));
}

#[test]
fn rho_hat_unit_frequency() {
    let r = rho_hat(&one(1.0), c(1.0, 0.0), 0.0, 1.0, Quadrature::GaussAdaptive).unwrap();
    assert!((r.re - 0.632_120_558_829).abs() < 1e-12);
    assert!(r.im.abs() < 1e-15);
}

#[test]
fn rho_hat_matches_romberg_oracle() {
    let rho = two_plus_sin(1.0);
    let s = c(-2.0, 1.0);
    let z = s + 1.0;
    let oracle = romberg(|t| (2.0 + t.sin()) * (-z * t).exp(), 0.0, 1.0, 1e-14);
    let r = rho_hat(&rho, s, 1.0, 1.0, Quadrature::GaussAdaptive).unwrap();
    assert!((r - oracle).norm() < 1e-12 * oracle.norm(), "{r} vs {oracle}");
}

#[test]
fn exponent_guard() {
    let err = rho_hat(&one(1.0), c(-701.0, 0.0), 0.0, 1.0, Quadrature::GaussAdaptive);
    assert!(matches!(err, Err(Error::ExponentOverflow { .. })));
    let err = rho_hat(&one(2.0), c(340.0, 5.0), 11.0, 2.0, Quadrature::GaussAdaptive);
    assert!(matches!(err, Err(Error::ExponentOverflow { .. })));
    assert!(rho_hat(&one(1.0), c(-699.0, 3.0), 0.0, 1.0, Quadrature::GaussAdaptive).is_ok());
}

#[test]
fn u_hat_of_zero_trajectory() {
    let (_, traj) = zero_trajectory(8);
    assert!(u_hat(&traj, c(0.3, -2.0), 1.0).unwrap().is_zero());
}

#[test]
fn u_hat_manufactured_closed_form() {
    let err = |n: usize| {
        let (p, traj) = manufactured(n);
        let s = 2.5;
        let uh = u_hat(&traj, c(s, 0.0), 0.0).unwrap();
        let amp = (1.0 - (1.0 + s) * (-s).exp()) / (s * s);
        let exact = Field::from_fn(&p.grid, |x| c(amp * (PI * x[0]).sin(), 0.0));
        uh.sub(&exact).max_abs()
    };
    let (e1, e2) = (err(32), err(64));
    assert!(e1 < 2.0 / (33.0 * 33.0), "{e1}");
    assert!(e1 / e2 > 3.0, "{e1} {e2}");
}

#[test]
fn u_hat_at_zero_is_trapezoid_sum() {
    let (_, traj) = manufactured(8);
    let uh = u_hat(&traj, c(0.0, 0.0), 0.0).unwrap();
    let w = trapezoid_weights(traj.times());
    for k in 0..uh.len() {
        let direct: f64 = traj
            .snapshots()
            .iter()
            .zip(&w)
            .map(|(s, wk)| wk * s.values()[k])
            .sum();
        assert!((uh.values()[k].re - direct).abs() < 1e-15);
        assert_eq!(uh.values()[k].im, 0.0);
    }
}

#[test]
fn conjugate_symmetry() {
    let (_, traj) = manufactured(16);
    let rho = two_plus_sin(1.0);
    for s in [c(0.7, 3.0), c(-5.0, 0.4), c(-40.0, 90.0), c(12.0, -8.0)] {
        let a = rho_hat(&rho, s, 1.0, 1.0, Quadrature::GaussAdaptive).unwrap();
        let b = rho_hat(&rho, s.conj(), 1.0, 1.0, Quadrature::GaussAdaptive).unwrap();
        assert!((a - b.conj()).norm() <= 1e-15 * a.norm());
        let ua = u_hat(&traj, s, 1.0).unwrap();
        let ub = u_hat(&traj, s.conj(), 1.0).unwrap();
        assert!(ua.sub(&ub.conj()).max_abs() <= 1e-15 * ua.max_abs());
    }
}

#[test]
fn mean_value_property() {
    let rho = two_plus_sin(1.0);
    let s0 = c(-3.0, 2.0);
    let r = 0.5;
    let k = 64;
    let avg: Complex64 = (0..k)
        .map(|j| {
            let s = s0 + Complex64::from_polar(r, 2.0 * PI * j as f64 / k as f64);
            rho_hat(&rho, s, 0.0, 1.0, Quadrature::GaussAdaptive).unwrap()
        })
        .sum::<Complex64>()
        / k as f64;
    let centre = rho_hat(&rho, s0, 0.0, 1.0, Quadrature::GaussAdaptive).unwrap();
    assert!((avg - centre).norm() < 1e-11 * centre.norm());
}

#[test]
fn lemma_rho_unit_amplitude_on_negative_axis() {
    let plan = SamplePlan {
        sectors: vec![Sector::C],
        r_min: 0.1,
        r_max: 300.0,
        n_radii: 10,
        n_angles: 5,
    };
    let report = verify_lemma_rho(&one(1.0), 1.0, 4.0, &plan).unwrap();
    assert!(report.pass);
    let axis: Vec<&SampleRatio> = report.samples.iter().filter(|s| s.s_im == 0.0).collect();
    assert_eq!(axis.len(), 10);
    for s in axis {
        assert!((s.ratio - 1.0).abs() < 1e-12, "{}: {}", s.s_re, s.ratio);
    }
    assert!((report.extremal
        - report.samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min))
    .abs()
        == 0.0);
}

#[test]
fn lemma_rho_sinusoidal_sweep() {
    let plan = SamplePlan {
        sectors: vec![Sector::C],
        r_min: 1.0,
        r_max: 300.0,
        n_radii: 16,
        n_angles: 8,
    };
    let report = verify_lemma_rho(&two_plus_sin(1.0), 1.0, 10.0, &plan).unwrap();
    assert!(report.pass);
    assert!(report.extremal > 0.0 && report.extremal.is_finite());
    assert_eq!(report.skipped, 0);
}

#[test]
fn lemma_rho_imaginary_axis_denominator() {
    let rho = two_plus_sin(1.0);
    let s = c(0.0, 7.0);
    let num = rho_hat(&rho, s, 0.0, 1.0, Quadrature::GaussAdaptive).unwrap().norm();
    assert_eq!(exp_integral(0.0, 1.0), 1.0);
    // denominator of the ratio on Re s = 0 is T
    assert!((num / exp_integral(s.re, 1.0) - num).abs() == 0.0);
}

#[test]
fn lemma_rho_skips_beyond_guard() {
    let plan = SamplePlan {
        sectors: vec![Sector::C],
        r_min: 10.0,
        r_max: 2000.0,
        n_radii: 6,
        n_angles: 3,
    };
    let report = verify_lemma_rho(&one(1.0), 1.0, 2.0, &plan).unwrap();
    assert!(report.skipped > 0);
    assert_eq!(report.samples.len() + report.skipped, 18);
}

#[test]
fn lemma_rho_requires_positive_amplitude() {
    let ramp = AmplitudeFunction::new(
        Amplitude::Affine {
            offset: 0.0,
            slope: 1.0,
        },
        1.0,
    )
    .unwrap();
    let plan = SamplePlan::default_for(1.0, vec![Sector::C]);
    assert!(verify_lemma_rho(&ramp, 1.0, 2.0, &plan).is_err());
}

#[test]
fn residual_zero_for_zero_data() {
    let (p, traj) = zero_trajectory(8);
    let r = transform_residual(&p.operator, &traj, &p.f, &p.rho, c(1.0, 2.0), 1.0).unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn residual_second_order_manufactured() {
    let res = |n: usize| {
        let (p, traj) = manufactured(n);
        transform_residual(&p.operator, &traj, &p.f, &p.rho, c(1.0, 0.0), 0.0).unwrap()
    };
    let (r1, r2, r3) = (res(16), res(32), res(64));
    assert!(r1 / r2 > 3.0 && r2 / r3 > 3.0, "{r1} {r2} {r3}");
}

#[test]
fn residual_zero_frequency_shifted() {
    let res = |n: usize| {
        let g = Grid::interval(0.0, 1.0, n).unwrap();
        let coeffs = CoefficientSet::from_spec(&g, &CoefficientSpec::laplacian(1)).unwrap();
        let f = Field::from_fn(&g, |x| (PI * x[0]).sin());
        let p = Problem::new(coeffs, TimeGrid::new(1.0, n).unwrap(), one(1.0), f).unwrap();
        let traj = solve_forward(&p, 0.5).unwrap();
        transform_residual(&p.operator, &traj, &p.f, &p.rho, c(0.0, 0.0), 1.0).unwrap()
    };
    let (r1, r2) = (res(32), res(64));
    let h2 = (1.0 / 33.0f64).powi(2);
    assert!(r1 <= 10.0 * 2.0 * h2, "{r1}");
    assert!(r1 / r2 > 3.0, "{r1} {r2}");
}

#[test]
fn lemma_uhat_zero_source_passes_vacuously() {
    let (p, traj) = zero_trajectory(8);
    let plan = SamplePlan::default_for(1.0, vec![Sector::A, Sector::B, Sector::C]);
    let report = verify_lemma_uhat(&traj, &p.f, &p.rho, 1.0, &plan, 2.0).unwrap();
    assert!(report.pass);
    assert!(report.samples.iter().all(|s| s.ratio == 0.0));
    assert_eq!(report.extremal, 0.0);
}

#[test]
fn lemma_uhat_real_axis_finite() {
    let (p, traj) = manufactured(16);
    let plan = SamplePlan {
        sectors: vec![Sector::A],
        r_min: 1.0,
        r_max: 100.0,
        n_radii: 3,
        n_angles: 1,
    };
    let report = verify_lemma_uhat(&traj, &p.f, &p.rho, 1.0, &plan, 2.0).unwrap();
    let s: Vec<f64> = report.samples.iter().map(|x| x.s_re).collect();
    assert_eq!(s.len(), 3);
    assert!(report.pass && report.extremal.is_finite() && report.extremal > 0.0);
    let at_zero = rho_hat(&p.rho, c(0.0, 0.0), 1.0, 1.0, Quadrature::GridTrapezoid(traj.times()))
        .unwrap();
    assert!(at_zero.norm() > 0.0);
}

#[test]
fn lemma_uhat_conjugate_pairs_equal() {
    let (p, traj) = manufactured(16);
    let plan = SamplePlan::default_for(1.0, Sector::ALL.to_vec());
    let report = verify_lemma_uhat(&traj, &p.f, &p.rho, 1.0, &plan, 8.0).unwrap();
    for a in &report.samples {
        if a.s_im <= 0.0 {
            continue;
        }
        let b = report
            .samples
            .iter()
            .find(|b| b.s_re == a.s_re && b.s_im == -a.s_im)
            .expect("conjugate sample present");
        assert!((a.ratio - b.ratio).abs() <= 1e-13 * a.ratio);
    }
}

#[test]
fn asymptotics_unit_amplitude() {
    let (_, traj) = zero_trajectory(8);
    let report = asymptotic_check(&one(1.0), &traj, 0.0, &[10.0, 50.0]).unwrap();
    // closed form deviation is e^{-50}; quadrature resolves it to rounding
    assert!((-50f64).exp() < 1e-21);
    assert!(report.rho_deviation[1] < 1e-14);
    assert!(report.u_norm.iter().all(|&v| v == 0.0));
}

#[test]
fn asymptotics_sinusoidal() {
    let (p, traj) = manufactured(32);
    let rho = two_plus_sin(1.0);
    let report = asymptotic_check(&rho, &traj, 1.0, &[10.0, 30.0, 100.0]).unwrap();
    assert!(report.pass, "{report:?}");
    assert_eq!(report.rho0_value, 2.0);
    let report = asymptotic_check(&p.rho, &traj, 1.0, &[10.0, 30.0, 100.0]).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn ratio_scan_zero_and_conjugates() {
    let (p, traj) = zero_trajectory(8);
    let scan = ratio_scan(&traj, &p.rho, 1.0, &[c(1.0, 0.0), c(-2.0, 3.0)]).unwrap();
    assert_eq!(scan.variation, 0.0);
    assert!(scan.norms.iter().all(|&v| v == 0.0));

    let (p, traj) = manufactured(16);
    let s = c(-1.5, 2.0);
    let scan = ratio_scan(&traj, &p.rho, 1.0, &[s, s.conj(), c(3.0, 0.0)]).unwrap();
    assert!(scan.variation > 0.0);
    let lo = scan.samples.iter().position(|z| *z == s.conj()).unwrap();
    let hi = scan.samples.iter().position(|z| *z == s).unwrap();
    let diff = scan.fields[hi].sub(&scan.fields[lo].conj()).max_abs();
    assert!(diff <= 1e-14 * scan.fields[hi].max_abs());
}
