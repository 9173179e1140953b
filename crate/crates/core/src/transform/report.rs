use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    /// Lower bound: the extremal ratio is the minimum.
    Min,
    /// Upper bound: the extremal ratio is the maximum.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRatio {
    pub s_re: f64,
    pub s_im: f64,
    pub sector: String,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1_ratio: Option<f64>,
    /// Excluded from the extremum (near-zero transform).
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    #[serde(rename = "N")]
    pub n_param: Option<f64>,
    #[serde(rename = "M")]
    pub m_shift: f64,
    pub extremum: Extremum,
    pub samples: Vec<SampleRatio>,
    pub extremal: f64,
    pub pass: bool,
    /// Samples outside the exponent guard.
    pub skipped: usize,
    /// Samples excluded as near-zeros of the amplitude transform.
    pub excluded: usize,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl LemmaReport {
    pub(crate) fn new(lemma: &str, n_param: Option<f64>, m_shift: f64, extremum: Extremum) -> Self {
        Self {
            lemma: lemma.to_string(),
            n_param,
            m_shift,
            extremum,
            samples: Vec::new(),
            extremal: match extremum {
                Extremum::Min => f64::INFINITY,
                Extremum::Max => 0.0,
            },
            pass: false,
            skipped: 0,
            excluded: 0,
            metadata: BTreeMap::new(),
        }
    }

    /// Recomputes `extremal` over the non-excluded samples.
    pub(crate) fn finish_extremal(&mut self) {
        let it = self.samples.iter().filter(|s| !s.excluded).map(|s| s.ratio);
        self.extremal = match self.extremum {
            Extremum::Min => it.fold(f64::INFINITY, f64::min),
            Extremum::Max => it.fold(0.0, f64::max),
        };
    }

    pub fn all_finite(&self) -> bool {
        self.samples.iter().all(|s| s.ratio.is_finite())
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.metadata.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_json()?.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }

    /// Flat table `s_re,s_im,sector,ratio,h1_ratio,excluded`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["s_re", "s_im", "sector", "ratio", "h1_ratio", "excluded"])?;
        for s in &self.samples {
            w.write_record([
                format!("{:.17e}", s.s_re),
                format!("{:.17e}", s.s_im),
                s.sector.clone(),
                format!("{:.17e}", s.ratio),
                s.h1_ratio.map(|v| format!("{v:.17e}")).unwrap_or_default(),
                (s.excluded as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
