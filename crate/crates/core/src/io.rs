//! Plain-text artifacts: node-wise field CSVs and trajectory manifests.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::forward::Trajectory;
use crate::grid::{ComplexField, Field, Grid};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn coord_header(grid: &Grid) -> Vec<&'static str> {
    ["x", "y"][..grid.dim()].to_vec()
}

/// Writes `x[,y],value` rows in flat index order.
pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    let grid = field.grid();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = coord_header(grid);
    header.push("value");
    w.write_record(&header)?;
    for (p, v) in field.values().iter().enumerate() {
        let mut row: Vec<String> = grid.coords_vec(p).into_iter().map(fmt_f64).collect();
        row.push(fmt_f64(*v));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `x[,y],value,value_imag` rows in flat index order.
pub fn write_complex_field_csv(path: &Path, field: &ComplexField) -> Result<()> {
    let grid = field.grid();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = coord_header(grid);
    header.extend(["value", "value_imag"]);
    w.write_record(&header)?;
    for (p, v) in field.values().iter().enumerate() {
        let mut row: Vec<String> = grid.coords_vec(p).into_iter().map(fmt_f64).collect();
        row.push(fmt_f64(v.re));
        row.push(fmt_f64(v.im));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a real field CSV onto `grid`. Rows may come in any order but every
/// interior node must appear exactly once.
pub fn read_field_csv(path: &Path, grid: &Grid) -> Result<Field> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let mut expected = coord_header(grid);
    expected.push("value");
    if header.len() < expected.len() || header[..expected.len()] != expected[..] {
        return Err(Error::FieldFormat(format!(
            "{}: header {:?}, expected {:?}",
            path.display(),
            header,
            expected
        )));
    }
    let dim = grid.dim();
    let h = grid.spacing();
    let ext = grid.extents();
    let mut values = vec![f64::NAN; grid.unknowns()];
    let mut seen = vec![false; grid.unknowns()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::FieldFormat(format!("{}: bad number in row {}", path.display(), line + 2))
                })
        };
        let mut idx = [0usize; 2];
        for axis in 0..dim {
            let x = parse(axis)?;
            let k = (x - ext[axis].0) / h[axis];
            let kr = k.round();
            if (k - kr).abs() > 1e-6 || kr < 1.0 || kr > grid.n_interior()[axis] as f64 {
                return Err(Error::FieldFormat(format!(
                    "{}: row {} is not an interior node",
                    path.display(),
                    line + 2
                )));
            }
            idx[axis] = kr as usize - 1;
        }
        let p = grid.flat_index(idx);
        if seen[p] {
            return Err(Error::FieldFormat(format!(
                "{}: node repeated in row {}",
                path.display(),
                line + 2
            )));
        }
        seen[p] = true;
        values[p] = parse(dim)?;
    }
    if let Some(p) = seen.iter().position(|s| !s) {
        return Err(Error::FieldFormat(format!(
            "{}: missing node {:?}",
            path.display(),
            grid.coords_vec(p)
        )));
    }
    Field::from_values(grid, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    #[serde(rename = "T")]
    pub final_time: f64,
    pub n_steps: usize,
    pub stride: usize,
    pub grid: Grid,
    pub times: Vec<f64>,
    pub steps: Vec<usize>,
    pub files: Vec<String>,
}

/// One CSV per stored snapshot plus `manifest.json`, all under `dir`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<TrajectoryManifest> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(traj.len());
    for (step, snap) in traj.steps().iter().zip(traj.snapshots()) {
        let name = format!("u_{step:06}.csv");
        write_field_csv(&dir.join(&name), snap)?;
        files.push(name);
    }
    let manifest = TrajectoryManifest {
        final_time: traj.time_grid().final_time(),
        n_steps: traj.time_grid().n_steps(),
        stride: traj.stride(),
        grid: *traj.grid(),
        times: traj.times().to_vec(),
        steps: traj.steps().to_vec(),
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_is_exact() {
        let g = Grid::rectangle((0.0, 1.0), (-1.0, 2.0), 5, 4).unwrap();
        let f = Field::from_fn(&g, |x| (3.1 * x[0]).exp() / (1.0 + x[1] * x[1]) + 1e-300);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_field_csv(&path, &f).unwrap();
        let back = read_field_csv(&path, &g).unwrap();
        assert_eq!(back.values(), f.values());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,value\n"));
    }

    #[test]
    fn wrong_grid_is_rejected() {
        let g = Grid::interval(0.0, 1.0, 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_field_csv(&path, &Field::zeros(&g)).unwrap();
        let other = Grid::interval(0.0, 1.0, 8).unwrap();
        assert!(matches!(read_field_csv(&path, &other), Err(Error::FieldFormat(_))));
        let plane = Grid::rectangle((0.0, 1.0), (0.0, 1.0), 7, 7).unwrap();
        assert!(read_field_csv(&path, &plane).is_err());
    }

    #[test]
    fn complex_header() {
        let g = Grid::interval(0.0, 1.0, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_complex_field_csv(&path, &ComplexField::zeros(&g)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,value,value_imag\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
