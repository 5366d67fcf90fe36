//! Machine-readable experiment artifacts: the CRV table, eigenvalue
//! spectra, estimation-error summaries, and point-cloud exports of mean,
//! centered, and eigenvector geometries.
//!
//! Everything is emitted as CSV (or aligned text for the error study), with
//! reals in shortest round-trip decimal form so that re-parsing a file
//! reproduces the exported values exactly. Rendering is left to external
//! tools.

use std::path::Path;

use crate::dataset::write_atomic;
use crate::error::{Error, Result};
use crate::estimation::{estimation_error, ErrorSummary, ParameterMap, RPreset};
use crate::geometry::{GeometryClass, GeometrySample, PointCloud};
use crate::pca::{self, DesignVector, PcaModel};

/// One class row of the CRV table: component counts per threshold plus the
/// parameter count for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CrvRow {
    pub class: String,
    pub k: usize,
    pub t: Vec<usize>,
}

/// Component counts needed to reach each CRV threshold, per class.
#[derive(Debug, Clone, PartialEq)]
pub struct CrvTable {
    pub thresholds: Vec<f64>,
    pub rows: Vec<CrvRow>,
}

impl CrvTable {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("class,k");
        for t in &self.thresholds {
            out.push_str(&format!(",t_{t}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.class);
            out.push_str(&format!(",{}", row.k));
            for t in &row.t {
                out.push_str(&format!(",{t}"));
            }
            out.push('\n');
        }
        out
    }

    /// Row lookup by class name.
    pub fn row(&self, class: &str) -> Option<&CrvRow> {
        self.rows.iter().find(|r| r.class == class)
    }
}

impl std::fmt::Display for CrvTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:<18} {:>3}", "class", "k")?;
        for t in &self.thresholds {
            write!(f, " {:>8}", format!("t_{t}"))?;
        }
        writeln!(f)?;
        for row in &self.rows {
            write!(f, "{:<18} {:>3}", row.class, row.k)?;
            for t in &row.t {
                write!(f, " {t:>8}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Builds the CRV table for fitted class models at the given thresholds.
pub fn crv_table(
    entries: &[(GeometryClass, &PcaModel)],
    thresholds: &[f64],
) -> Result<CrvTable> {
    if thresholds.is_empty() {
        return Err(Error::Domain("CRV table needs at least one threshold".into()));
    }
    let mut rows = Vec::with_capacity(entries.len());
    for (class, model) in entries {
        let t = thresholds
            .iter()
            .map(|&thr| pca::min_components(model, thr))
            .collect::<Result<Vec<_>>>()?;
        rows.push(CrvRow {
            class: class.name().to_string(),
            k: class.spec().k(),
            t,
        });
    }
    Ok(CrvTable {
        thresholds: thresholds.to_vec(),
        rows,
    })
}

/// Writes the above-cutoff eigenvalues as `index,eigenvalue` rows,
/// descending. A rank-0 model yields a header-only file.
pub fn export_eigenvalue_spectrum(model: &PcaModel, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("index,eigenvalue\n");
    for i in 0..model.rank() {
        out.push_str(&format!("{},{}\n", i + 1, model.eigenvalues()[i]));
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Reads a spectrum CSV back into `(index, eigenvalue)` pairs.
pub fn read_eigenvalue_spectrum(path: impl AsRef<Path>) -> Result<Vec<(usize, f64)>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut lines = text.lines();
    match lines.next() {
        Some("index,eigenvalue") => {}
        _ => return Err(Error::Format("spectrum file lacks the expected header".into())),
    }
    lines
        .map(|line| {
            let (idx, ev) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("bad spectrum row `{line}`")))?;
            Ok((
                idx.parse::<usize>()
                    .map_err(|_| Error::Format(format!("bad spectrum index `{idx}`")))?,
                ev.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad eigenvalue `{ev}`")))?,
            ))
        })
        .collect()
}

/// Writes a design vector as an `x,y,z` point-cloud CSV. Used for mean
/// geometries, centered samples, and eigenvector geometries alike.
pub fn export_geometry(v: &DesignVector, path: impl AsRef<Path>) -> Result<()> {
    let cloud = pca::unvectorize(v)?;
    let mut out = String::from("x,y,z\n");
    for p in cloud.points() {
        out.push_str(&format!("{},{},{}\n", p[0], p[1], p[2]));
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Reads an `x,y,z` CSV back into a point cloud.
pub fn read_point_cloud_csv(path: impl AsRef<Path>) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut lines = text.lines();
    match lines.next() {
        Some("x,y,z") => {}
        _ => return Err(Error::Format("point-cloud file lacks the `x,y,z` header".into())),
    }
    let points = lines
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Format(format!("bad point row `{line}`")));
            }
            let mut p = [0.0; 3];
            for (dst, field) in p.iter_mut().zip(&fields) {
                *dst = field
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad coordinate `{field}`")))?;
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    PointCloud::new(points)
}

/// Error statistics of one retained-component preset.
#[derive(Debug, Clone)]
pub struct PresetErrors {
    pub preset: RPreset,
    pub r: usize,
    pub summary: ErrorSummary,
}

/// Per-class estimation-error study across the r presets.
#[derive(Debug, Clone)]
pub struct ClassErrorReport {
    pub class: String,
    pub param_names: Vec<String>,
    pub presets: Vec<PresetErrors>,
}

impl ClassErrorReport {
    pub fn preset(&self, preset: RPreset) -> Option<&PresetErrors> {
        self.presets.iter().find(|p| p.preset == preset)
    }
}

/// Runs the error study for one class: estimates every test sample under
/// each preset's map and summarizes per-parameter absolute errors.
pub fn error_report(
    class: GeometryClass,
    model: &PcaModel,
    maps: &[(RPreset, ParameterMap)],
    test: &[GeometrySample],
) -> Result<ClassErrorReport> {
    if maps.is_empty() {
        return Err(Error::Domain("error report needs at least one preset map".into()));
    }
    let spec = class.spec();
    let mut presets = Vec::with_capacity(maps.len());
    for (preset, map) in maps {
        let summary = estimation_error(map, model, test)?;
        presets.push(PresetErrors {
            preset: *preset,
            r: map.r(),
            summary,
        });
    }
    Ok(ClassErrorReport {
        class: class.name().to_string(),
        param_names: spec.param_names().to_vec(),
        presets,
    })
}

/// Long-format CSV across classes:
/// `class,preset,r,parameter,mean_abs_error,max_abs_error`.
pub fn write_error_reports_csv(
    reports: &[ClassErrorReport],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::from("class,preset,r,parameter,mean_abs_error,max_abs_error\n");
    for report in reports {
        for preset in &report.presets {
            for (j, name) in report.param_names.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    report.class,
                    preset.preset.label(),
                    preset.r,
                    name,
                    preset.summary.mean_abs()[j],
                    preset.summary.max_abs()[j],
                ));
            }
        }
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Aligned text rendering of the error study.
pub fn write_error_reports_text(
    reports: &[ClassErrorReport],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::new();
    for report in reports {
        out.push_str(&format!(
            "class {} (k = {})\n",
            report.class,
            report.param_names.len()
        ));
        for preset in &report.presets {
            out.push_str(&format!(
                "  preset r = {} ({} components, {} test samples)\n",
                preset.preset.label(),
                preset.r,
                preset.summary.n_samples()
            ));
            for (j, name) in report.param_names.iter().enumerate() {
                out.push_str(&format!(
                    "    {:<16} mean |e| = {:>12.5e}   max |e| = {:>12.5e}\n",
                    name,
                    preset.summary.mean_abs()[j],
                    preset.summary.max_abs()[j],
                ));
            }
        }
        out.push('\n');
    }
    write_atomic(path.as_ref(), out.as_bytes())
}
