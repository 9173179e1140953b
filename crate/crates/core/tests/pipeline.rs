use std::f64::consts::PI;

use adsrc_core::io::{read_field_csv, write_field_csv, write_trajectory};
use adsrc_core::{
    forward_map, observe_final, reconstruct, solve_forward, Amplitude, AmplitudeFunction,
    CoefficientSet, CoefficientSpec, Field, Grid, InverseRun, Method, MethodParams, Problem,
    Profile, SourceShape, StopReason, TimeGrid,
};

fn advective_2d(n: usize) -> Problem {
    let g = Grid::rectangle((0.0, 1.0), (0.0, 1.0), n, n).unwrap();
    let spec = CoefficientSpec::laplacian(2)
        .with_advection(vec![Profile::constant(0.3), Profile::constant(-0.2)])
        .with_reaction(Profile::constant(0.5));
    let coeffs = CoefficientSet::from_spec(&g, &spec).unwrap();
    let rho = AmplitudeFunction::new(
        Amplitude::SinusoidalOffset {
            offset: 2.0,
            amplitude: 1.0,
            frequency: 3.0,
            phase: 0.0,
        },
        0.5,
    )
    .unwrap();
    let f = SourceShape::GaussianBump {
        center: vec![0.4, 0.6],
        width: 0.15,
        amplitude: 1.0,
    }
    .field(&g)
    .unwrap();
    Problem::new(coeffs, TimeGrid::new(0.5, 20).unwrap(), rho, f).unwrap()
}

#[test]
fn forward_then_tikhonov_recovers_smooth_source() {
    let p = advective_2d(12);
    let truth = p.f.clone();
    let data = forward_map(&truth, &p).unwrap();
    let params = MethodParams {
        alpha: 1e-8,
        ..MethodParams::default()
    };
    let run = InverseRun::new(p, data, Method::Tikhonov)
        .with_params(params)
        .with_truth(truth);
    let res = reconstruct(&run).unwrap();
    assert_eq!(res.stop, StopReason::Solved);
    let err = res.metrics.unwrap().rel_l2;
    assert!(err < 0.05, "{err}");
}

#[test]
fn trajectory_final_state_matches_forward_map() {
    let p = advective_2d(8);
    let traj = solve_forward(&p, 0.5).unwrap();
    let mapped = forward_map(&p.f, &p).unwrap();
    assert_eq!(observe_final(&traj).values(), mapped.values());
}

#[test]
fn written_artifacts_round_trip() {
    let p = advective_2d(6).with_stride(5);
    let traj = solve_forward(&p, 0.5).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_trajectory(tmp.path(), &traj).unwrap();
    assert_eq!(manifest.steps, vec![0, 5, 10, 15, 20]);
    let last = tmp.path().join(manifest.files.last().unwrap());
    let back = read_field_csv(&last, &p.grid).unwrap();
    assert_eq!(back.values(), observe_final(&traj).values());

    let g = Grid::interval(0.0, 1.0, 9).unwrap();
    let f = Field::from_fn(&g, |x| (PI * x[0]).sin() / 3.0);
    let path = tmp.path().join("f.csv");
    write_field_csv(&path, &f).unwrap();
    assert_eq!(read_field_csv(&path, &g).unwrap().values(), f.values());
}
