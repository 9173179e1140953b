//! Partition of the complex frequency plane used by the transform bounds,
//! and the per-sector sampling plans.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sector {
    /// `Re s >= 0`
    A,
    /// `Re s <= 0`, `N Im s + Re s >= 0`
    B,
    /// `Re s <= 0`, `Im s >= 0`, `N Im s + Re s <= 0`
    C,
    /// Conjugate of `C`.
    CConj,
    /// Conjugate of `B`.
    BConj,
}

impl Sector {
    pub const ALL: [Sector; 5] = [Sector::A, Sector::B, Sector::C, Sector::CConj, Sector::BConj];

    pub fn label(&self) -> &'static str {
        match self {
            Sector::A => "A",
            Sector::B => "B",
            Sector::C => "C",
            Sector::CConj => "C_conj",
            Sector::BConj => "B_conj",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|x| x.label() == s)
    }

    /// Whether `s` satisfies this sector's defining inequalities.
    pub fn contains(&self, s: Complex64, n: f64) -> bool {
        match self {
            Sector::A => s.re >= 0.0,
            Sector::B => s.re <= 0.0 && n * s.im + s.re >= 0.0,
            Sector::C => s.re <= 0.0 && s.im >= 0.0 && n * s.im + s.re <= 0.0,
            Sector::CConj => Sector::C.contains(s.conj(), n),
            Sector::BConj => Sector::B.contains(s.conj(), n),
        }
    }

    /// Closed argument range `[lo, hi]` covered by the sector.
    pub fn angles(&self, n: f64) -> (f64, f64) {
        let edge = PI - (1.0 / n).atan();
        match self {
            Sector::A => (-FRAC_PI_2, FRAC_PI_2),
            Sector::B => (FRAC_PI_2, edge),
            Sector::C => (edge, PI),
            Sector::CConj => (-PI, -edge),
            Sector::BConj => (-edge, -FRAC_PI_2),
        }
    }
}

/// Labels `s`; boundary points take the earliest of A, B, C. The lower half
/// of the left plane is labelled by conjugation.
pub fn classify_sector(s: Complex64, n: f64) -> Sector {
    debug_assert!(n > 1.0);
    if s.re >= 0.0 {
        Sector::A
    } else if n * s.im + s.re >= 0.0 {
        Sector::B
    } else if s.im >= 0.0 {
        Sector::C
    } else if Sector::B.contains(s.conj(), n) {
        Sector::BConj
    } else {
        Sector::CConj
    }
}

/// Log-spaced radii times an angular fan, per sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub sectors: Vec<Sector>,
    pub r_min: f64,
    pub r_max: f64,
    pub n_radii: usize,
    pub n_angles: usize,
}

impl SamplePlan {
    /// Radii in `[0.1, 100 max(1, 1/T)]`, 12 radii and 8 angles per sector.
    pub fn default_for(final_time: f64, sectors: Vec<Sector>) -> Self {
        Self {
            sectors,
            r_min: 0.1,
            r_max: 100.0 * (1.0f64).max(1.0 / final_time),
            n_radii: 12,
            n_angles: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_max >= self.r_min) {
            return Err(Error::InvalidParameter(format!(
                "sample radii must satisfy 0 < r_min <= r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if self.n_radii == 0 || self.n_angles == 0 || self.sectors.is_empty() {
            return Err(Error::InvalidParameter(
                "sample plan needs at least one radius, angle and sector".into(),
            ));
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        if self.n_radii == 1 {
            return vec![self.r_min];
        }
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        (0..self.n_radii)
            .map(|k| (a + (b - a) * k as f64 / (self.n_radii - 1) as f64).exp())
            .collect()
    }

    /// Sample points with their plan sector, sorted by `(Re s, Im s)`.
    pub fn samples(&self, n: f64) -> Result<Vec<(Complex64, Sector)>> {
        self.validate()?;
        if !(n > 1.0) {
            return Err(Error::InvalidParameter(format!("sector parameter N must exceed 1, got {n}")));
        }
        let mut out = Vec::new();
        for &sector in &self.sectors {
            // conjugate sectors are exact mirror images of their partners
            let (base, mirror) = match sector {
                Sector::CConj => (Sector::C, true),
                Sector::BConj => (Sector::B, true),
                other => (other, false),
            };
            let (lo, hi) = base.angles(n);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let m = self.n_angles as f64 - 1.0;
            for r in self.radii() {
                for k in 0..self.n_angles {
                    let phi = if self.n_angles == 1 {
                        mid
                    } else {
                        mid + half * ((2 * k) as f64 - m) / m
                    };
                    let mut s = Complex64::from_polar(r, phi);
                    // pin the axes exactly
                    if phi == PI || (base == Sector::C && k + 1 == self.n_angles) {
                        s = Complex64::new(-r, 0.0);
                    } else if phi == 0.0 {
                        s = Complex64::new(r, 0.0);
                    }
                    if base != Sector::A && s.re > 0.0 {
                        s.re = 0.0;
                    }
                    out.push((if mirror { s.conj() } else { s }, sector));
                }
            }
        }
        sort_samples(&mut out);
        Ok(out)
    }
}

pub(crate) fn sort_samples<T>(v: &mut [(Complex64, T)]) {
    v.sort_by(|x, y| {
        x.0.re
            .total_cmp(&y.0.re)
            .then(x.0.im.total_cmp(&y.0.im))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn documented_labels() {
        assert_eq!(classify_sector(Complex64::new(1.0, 0.0), 5.0), Sector::A);
        assert_eq!(classify_sector(Complex64::new(-1.0, 1.0), 2.0), Sector::B);
        assert_eq!(classify_sector(Complex64::new(-3.0, 1.0), 2.0), Sector::C);
        assert_eq!(classify_sector(Complex64::new(-3.0, -1.0), 2.0), Sector::CConj);
        assert_eq!(classify_sector(Complex64::new(-1.0, -1.0), 2.0), Sector::BConj);
    }

    #[test]
    fn boundary_tie_break() {
        // Re s = 0 belongs to A and B: A wins
        assert_eq!(classify_sector(Complex64::new(0.0, 3.0), 2.0), Sector::A);
        // N Im s + Re s = 0 belongs to B and C: B wins
        assert_eq!(classify_sector(Complex64::new(-2.0, 1.0), 2.0), Sector::B);
    }

    #[test]
    fn plan_samples_lie_in_their_sector() {
        let n = 8.0;
        let plan = SamplePlan::default_for(1.0, Sector::ALL.to_vec());
        let samples = plan.samples(n).unwrap();
        assert_eq!(samples.len(), 5 * 12 * 8);
        for (s, sector) in samples {
            // allow rounding on the edges
            let nudged = [s, s * Complex64::from_polar(1.0, 1e-12), s * Complex64::from_polar(1.0, -1e-12)];
            assert!(nudged.iter().any(|z| sector.contains(*z, n)), "{s} not in {sector:?}");
        }
    }

    #[test]
    fn plan_contains_negative_real_axis() {
        let plan = SamplePlan::default_for(1.0, vec![Sector::C]);
        let samples = plan.samples(2.0).unwrap();
        assert!(samples.iter().any(|(s, _)| s.im == 0.0 && s.re < 0.0));
    }

    proptest! {
        #[test]
        fn labels_are_total_and_consistent(re in -1e3f64..1e3, im in -1e3f64..1e3, n in 1.01f64..50.0) {
            let s = Complex64::new(re, im);
            let label = classify_sector(s, n);
            prop_assert!(label.contains(s, n));
        }
    }
}
