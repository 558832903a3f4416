//! CSV and JSON serialization of fields, signals, dispersions, runs and
//! moment series. Numbers are written as `{:.16e}` so that `f64` values
//! round-trip exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionSample;
use crate::error::{invalid, Result};
use crate::evolution::{EvolutionResult, Provenance};
use crate::fractional_ops::TimeSignal;
use crate::grid::{DensityField, SpatialGrid};
use crate::moments::{MomentKind, MomentSeries, PowerLawFit};
use crate::scalar::Real;

fn num<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64().unwrap_or(f64::NAN))
}

fn parse<T: Real>(field: &str, column: &'static str) -> Result<T> {
    field
        .trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|e| invalid(column, format!("cannot parse {field:?}: {e}")))
}

const AXES: [&str; 2] = ["x", "y"];

/// Density as rows `x[, y], re, im` in row-major node order.
pub fn write_density_csv<T: Real>(path: &Path, field: &DensityField<T>) -> Result<()> {
    let grid = field.grid();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = AXES[..grid.dim()].to_vec();
    header.extend(["re", "im"]);
    w.write_record(&header)?;
    for (j, v) in field.values().iter().enumerate() {
        let mut row: Vec<String> = grid.position(j).into_iter().map(num).collect();
        row.push(num(v.re));
        row.push(num(v.im));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_density_csv`] on the given grid.
pub fn read_density_csv<T: Real>(path: &Path, grid: SpatialGrid<T>) -> Result<DensityField<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let dim = grid.dim();
    if r.headers()?.len() != dim + 2 {
        return Err(invalid("density", format!("expected {} columns", dim + 2)));
    }
    let mut values = Vec::with_capacity(grid.node_count());
    for rec in r.records() {
        let rec = rec?;
        values.push(Complex::new(parse(&rec[dim], "re")?, parse(&rec[dim + 1], "im")?));
    }
    DensityField::new(grid, values)
}

/// Signal as rows `t, re, im`.
pub fn write_time_signal_csv<T: Real>(path: &Path, sig: &TimeSignal<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "re", "im"])?;
    for (n, v) in sig.samples().iter().enumerate() {
        w.write_record([num(sig.time(n)), num(v.re), num(v.im)])?;
    }
    w.flush()?;
    Ok(())
}

/// Dispersion samples as rows `k_x[, k_y], re_e, im_e, status`. Samples
/// without a selected branch leave `re_e` and `im_e` empty.
pub fn write_dispersion_csv<T: Real>(path: &Path, samples: &[DispersionSample<T>]) -> Result<()> {
    let dim = samples.first().map_or(1, |s| s.k.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = ["k_x", "k_y"][..dim].to_vec();
    header.extend(["re_e", "im_e", "status"]);
    w.write_record(&header)?;
    for s in samples {
        let mut row: Vec<String> = s.k.iter().map(|&k| num(k)).collect();
        match s.e {
            Some(e) => {
                row.push(num(e.re));
                row.push(num(e.im));
            }
            None => row.extend([String::new(), String::new()]),
        }
        row.push(s.status.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dim: usize,
    pub points_per_axis: usize,
    pub length: f64,
}

impl GridInfo {
    pub fn of<T: Real>(grid: &SpatialGrid<T>) -> Self {
        Self {
            dim: grid.dim(),
            points_per_axis: grid.points_per_axis(),
            length: grid.length().to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn grid<T: Real>(&self) -> Result<SpatialGrid<T>> {
        SpatialGrid::new(self.dim, self.points_per_axis, T::lit(self.length))
    }
}

/// `manifest.json` of a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub provenance: Provenance,
    pub grid: GridInfo,
    pub times: Vec<f64>,
    pub snapshots: Vec<String>,
    pub parameters: BTreeMap<String, f64>,
}

/// Writes each snapshot's density to `snapshot_NNNN.csv` plus `manifest.json`.
pub fn write_evolution<T: Real>(dir: &Path, run: &EvolutionResult<T>) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(run.len());
    for i in 0..run.len() {
        let name = format!("snapshot_{i:04}.csv");
        write_density_csv(&dir.join(&name), &run.density(i))?;
        files.push(name);
    }
    let manifest = RunManifest {
        provenance: run.provenance(),
        grid: GridInfo::of(run.grid()),
        times: run.times().iter().map(|t| t.to_f64().unwrap_or(f64::NAN)).collect(),
        snapshots: files,
        parameters: run.parameters().clone(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Reads back the densities of a run directory.
pub fn read_evolution<T: Real>(dir: &Path) -> Result<(RunManifest, Vec<DensityField<T>>)> {
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let grid = manifest.grid.grid()?;
    let fields = manifest
        .snapshots
        .iter()
        .map(|f| read_density_csv(&dir.join(f), grid))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, fields))
}

/// Series as rows `t, value_re, value_im, divergent`.
pub fn write_series_csv<T: Real>(path: &Path, series: &MomentSeries<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "value_re", "value_im", "divergent"])?;
    for ((t, v), d) in series.times.iter().zip(&series.values).zip(&series.divergent) {
        w.write_record([num(*t), num(v.re), num(v.im), u8::from(*d).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a series CSV; the kind is not stored and must be supplied.
pub fn read_series_csv<T: Real>(path: &Path, kind: MomentKind) -> Result<MomentSeries<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| invalid(name, "column missing from series CSV"))
    };
    let (ct, cre) = (col("t")?, col("value_re")?);
    let cim = col("value_im").ok();
    let cdiv = col("divergent").ok();
    let (mut times, mut values, mut flags) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        times.push(parse(&rec[ct], "t")?);
        let im = match cim {
            Some(c) => parse(&rec[c], "value_im")?,
            None => T::zero(),
        };
        values.push(Complex::new(parse(&rec[cre], "value_re")?, im));
        flags.push(match cdiv {
            Some(c) => matches!(rec[c].trim(), "1" | "true"),
            None => false,
        });
    }
    MomentSeries::new(kind, times, values, flags)
}

/// Power-law fit as `{"C", "alpha", "r2", "window", "points"}`.
pub fn write_fit_json<T: Real + Serialize>(path: &Path, fit: &PowerLawFit<T>) -> Result<()> {
    write_json(path, fit)
}

pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// `dir/name`, creating `dir` if needed.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{heat_dispersion, spectral_propagate};
    use crate::grid::make_gaussian;

    #[test]
    fn density_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpatialGrid::<f64>::new(2, 8, 3.0).unwrap();
        let psi = DensityField::from_fn(g, |r: &[f64]| (r[0] * 1.3 - r[1]).sin() + 0.1);
        let p = dir.path().join("d.csv");
        write_density_csv(&p, &psi).unwrap();
        let back = read_density_csv(&p, g).unwrap();
        assert_eq!(back.values(), psi.values());
    }

    #[test]
    fn run_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpatialGrid::<f64>::new(1, 64, 20.0).unwrap();
        let psi = make_gaussian(&g, &[0.0], 1.0).unwrap();
        let run = spectral_propagate(&psi, &heat_dispersion(), &[0.5, 1.0]).unwrap();
        let m = write_evolution(dir.path(), &run).unwrap();
        assert_eq!(m.snapshots.len(), 2);
        let (m2, fields) = read_evolution::<f64>(dir.path()).unwrap();
        assert_eq!(m, m2);
        assert_eq!(fields[1].values(), run.density(1).values());
    }

    #[test]
    fn series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = MomentSeries::new(
            MomentKind::Variance,
            vec![0.1, 0.2, 0.3],
            vec![Complex::new(1.0 / 3.0, 0.0), Complex::new(2.0, -1e-300), Complex::new(3.5, 0.0)],
            vec![false, true, false],
        )
        .unwrap();
        let p = dir.path().join("s.csv");
        write_series_csv(&p, &s).unwrap();
        assert_eq!(read_series_csv::<f64>(&p, MomentKind::Variance).unwrap(), s);
    }

    #[test]
    fn fit_json_keys() {
        let dir = tempfile::tempdir().unwrap();
        let fit = PowerLawFit {
            amplitude: 2.0,
            exponent: 0.7,
            r_squared: 0.999,
            window: [2.5, 10.0],
            points: 30,
        };
        let p = dir.path().join("fit.json");
        write_fit_json(&p, &fit).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        for key in ["C", "alpha", "r2", "window"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
