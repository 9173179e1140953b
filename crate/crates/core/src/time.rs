//! Uniform time grids and the temporal amplitude of the source.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    final_time: f64,
    n_steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(final_time: f64, n_steps: usize) -> Result<Self> {
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
        }
        Ok(Self {
            final_time,
            n_steps,
            dt: final_time / n_steps as f64,
        })
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `t_n = n * dt`, with the last node pinned to `T`.
    pub fn node(&self, n: usize) -> f64 {
        if n >= self.n_steps {
            self.final_time
        } else {
            n as f64 * self.dt
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| self.node(n)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Amplitude {
    Constant { value: f64 },
    /// `offset + slope * t`
    Affine { offset: f64, slope: f64 },
    /// `offset + amplitude * sin(frequency * t + phase)`
    SinusoidalOffset {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Piecewise linear through `(times[k], values[k])`; `times` increasing.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

/// `rho(t)` on `[0, T]` together with its sup-norm data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeFunction {
    pub profile: Amplitude,
    pub final_time: f64,
    /// `max|rho| + max|rho'|` over `[0, T]`.
    pub c1_norm: f64,
    /// `inf rho` over `[0, T]`.
    pub rho0: f64,
    /// `max|rho|` over `[0, T]`.
    pub sup: f64,
}

impl AmplitudeFunction {
    pub fn new(profile: Amplitude, final_time: f64) -> Result<Self> {
        if !(final_time > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if let Amplitude::Tabulated { times, values } = &profile {
            if times.len() < 2 || times.len() != values.len() {
                return Err(Error::InvalidParameter(
                    "tabulated amplitude needs >= 2 samples with matching times".into(),
                ));
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParameter(
                    "tabulated amplitude times must be increasing".into(),
                ));
            }
            if times[0] > 0.0 || *times.last().unwrap() < final_time * (1.0 - 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "tabulated amplitude must cover [0, {final_time}]"
                )));
            }
        }
        let candidates = extremal_points(&profile, final_time);
        let mut lo = f64::INFINITY;
        let mut sup = 0.0f64;
        let mut dsup = 0.0f64;
        for &t in &candidates {
            let v = eval_profile(&profile, t);
            lo = lo.min(v);
            sup = sup.max(v.abs());
            dsup = dsup.max(derivative_profile(&profile, t).abs());
        }
        if let Amplitude::Tabulated { times, values } = &profile {
            for w in times.windows(2).zip(values.windows(2)) {
                dsup = dsup.max(((w.1[1] - w.1[0]) / (w.0[1] - w.0[0])).abs());
            }
        }
        Ok(Self {
            profile,
            final_time,
            c1_norm: sup + dsup,
            rho0: lo,
            sup,
        })
    }

    pub fn constant(value: f64, final_time: f64) -> Result<Self> {
        Self::new(Amplitude::Constant { value }, final_time)
    }

    pub fn eval(&self, t: f64) -> f64 {
        eval_profile(&self.profile, t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        derivative_profile(&self.profile, t)
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    /// Fails unless `inf rho > 0` on `[0, T]`.
    pub fn assert_positive(&self) -> Result<()> {
        if self.rho0 > 0.0 {
            Ok(())
        } else {
            Err(Error::AmplitudeNotPositive(self.rho0))
        }
    }

    /// Same profile with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let profile = match &self.profile {
            Amplitude::Constant { value } => Amplitude::Constant {
                value: value * factor,
            },
            Amplitude::Affine { offset, slope } => Amplitude::Affine {
                offset: offset * factor,
                slope: slope * factor,
            },
            Amplitude::SinusoidalOffset {
                offset,
                amplitude,
                frequency,
                phase,
            } => Amplitude::SinusoidalOffset {
                offset: offset * factor,
                amplitude: amplitude * factor,
                frequency: *frequency,
                phase: *phase,
            },
            Amplitude::Tabulated { times, values } => Amplitude::Tabulated {
                times: times.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        };
        Self::new(profile, self.final_time)
    }
}

fn eval_profile(p: &Amplitude, t: f64) -> f64 {
    match p {
        Amplitude::Constant { value } => *value,
        Amplitude::Affine { offset, slope } => offset + slope * t,
        Amplitude::SinusoidalOffset {
            offset,
            amplitude,
            frequency,
            phase,
        } => offset + amplitude * (frequency * t + phase).sin(),
        Amplitude::Tabulated { times, values } => {
            let k = match times.partition_point(|&s| s <= t) {
                0 => 0,
                k if k >= times.len() => times.len() - 2,
                k => k - 1,
            };
            let w = (t - times[k]) / (times[k + 1] - times[k]);
            values[k] + w * (values[k + 1] - values[k])
        }
    }
}

fn derivative_profile(p: &Amplitude, t: f64) -> f64 {
    match p {
        Amplitude::Constant { .. } => 0.0,
        Amplitude::Affine { slope, .. } => *slope,
        Amplitude::SinusoidalOffset {
            amplitude,
            frequency,
            phase,
            ..
        } => amplitude * frequency * (frequency * t + phase).cos(),
        Amplitude::Tabulated { times, values } => {
            let k = match times.partition_point(|&s| s <= t) {
                0 => 0,
                k if k >= times.len() => times.len() - 2,
                k => k - 1,
            };
            (values[k + 1] - values[k]) / (times[k + 1] - times[k])
        }
    }
}

/// Endpoints plus every interior point where `rho` or `rho'` can attain an
/// extremum.
fn extremal_points(p: &Amplitude, final_time: f64) -> Vec<f64> {
    let mut pts = vec![0.0, final_time];
    match p {
        Amplitude::SinusoidalOffset {
            frequency, phase, ..
        } if *frequency != 0.0 => {
            // critical phases are multiples of pi/2
            let a = *phase;
            let b = frequency * final_time + phase;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let mut k = (lo / (0.5 * PI)).ceil();
            while k * 0.5 * PI <= hi {
                pts.push((k * 0.5 * PI - phase) / frequency);
                k += 1.0;
            }
        }
        Amplitude::Tabulated { times, .. } => {
            pts.extend(times.iter().copied().filter(|&t| t > 0.0 && t < final_time));
        }
        _ => {}
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_node_pinned() {
        let tg = TimeGrid::new(0.3, 7).unwrap();
        assert_eq!(tg.node(0), 0.0);
        assert_eq!(tg.node(7), 0.3);
        assert_eq!(tg.nodes().len(), 8);
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(0.0, 3).is_err());
    }

    #[test]
    fn sinusoidal_offset_norms() {
        let rho = AmplitudeFunction::new(
            Amplitude::SinusoidalOffset {
                offset: 2.0,
                amplitude: 1.0,
                frequency: 1.0,
                phase: 0.0,
            },
            1.0,
        )
        .unwrap();
        assert_eq!(rho.rho0, 2.0);
        assert!((rho.sup - (2.0 + 1f64.sin())).abs() < 1e-15);
        assert!((rho.c1_norm - (2.0 + 1f64.sin() + 1.0)).abs() < 1e-15);

        let long = AmplitudeFunction::new(
            Amplitude::SinusoidalOffset {
                offset: 2.0,
                amplitude: 1.0,
                frequency: 1.0,
                phase: 0.0,
            },
            5.0,
        )
        .unwrap();
        assert!((long.rho0 - 1.0).abs() < 1e-15);
        assert!((long.sup - 3.0).abs() < 1e-15);
    }

    #[test]
    fn linear_ramp_is_not_positive() {
        let rho = AmplitudeFunction::new(
            Amplitude::Affine {
                offset: 0.0,
                slope: 1.0,
            },
            1.0,
        )
        .unwrap();
        assert_eq!(rho.rho0, 0.0);
        assert!(rho.assert_positive().is_err());
    }

    #[test]
    fn tabulated_interpolates() {
        let rho = AmplitudeFunction::new(
            Amplitude::Tabulated {
                times: vec![0.0, 0.5, 1.0],
                values: vec![1.0, 3.0, 2.0],
            },
            1.0,
        )
        .unwrap();
        assert_eq!(rho.eval(0.25), 2.0);
        assert_eq!(rho.eval(0.75), 2.5);
        assert_eq!(rho.eval(1.0), 2.0);
        assert_eq!(rho.rho0, 1.0);
        assert_eq!(rho.c1_norm, 3.0 + 4.0);
        assert!(AmplitudeFunction::new(
            Amplitude::Tabulated {
                times: vec![0.0, 0.5],
                values: vec![1.0, 3.0],
            },
            1.0
        )
        .is_err());
    }
}
