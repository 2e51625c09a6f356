//! File outputs: CSV exports, JSON reports, and the run manifest with
//! per-file checksums. Floats in CSV are written with 17 significant digits
//! so round-trips are exact.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{EdlError, Result};
use crate::grid::ScalarField;
use crate::levelset::LevelSetFamily;

/// 17 significant digits, enough for exact f64 round-trips.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(EdlError::from)?;
    }
    fs::write(path, contents).map_err(EdlError::from)?;
    Ok(path.to_path_buf())
}

/// Node table: r, theta, x1, x2, value.
pub fn write_solution_csv(path: &Path, u: &ScalarField) -> Result<PathBuf> {
    let grid = &u.grid;
    let spec = grid.spec;
    let mut out = String::from("r,theta,x1,x2,value\n");
    for ir in 0..spec.n_radial {
        for it in 0..spec.n_angular {
            let x = grid.position(ir, it);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_float(grid.radii[ir]),
                fmt_float(grid.angles[it]),
                fmt_float(x[0]),
                fmt_float(x[1]),
                fmt_float(u.get(ir, it)),
            ));
        }
    }
    write_file(path, &out)
}

/// Extracted level curves: level, component, vertex, x1, x2, closed flag.
pub fn write_curves_csv(path: &Path, family: &LevelSetFamily) -> Result<PathBuf> {
    let mut out = String::from("level,component,vertex,x1,x2,closed\n");
    for entry in &family.levels {
        for (ci, curve) in entry.curves.iter().enumerate() {
            for (vi, v) in curve.vertices.iter().enumerate() {
                out.push_str(&format!(
                    "{},{ci},{vi},{},{},{}\n",
                    fmt_float(entry.t),
                    fmt_float(v[0]),
                    fmt_float(v[1]),
                    u8::from(curve.is_closed()),
                ));
            }
        }
    }
    write_file(path, &out)
}

/// Generic table writer: header plus rows of floats.
pub fn write_table_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<PathBuf> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| EdlError::Numerical(format!("serialize {}: {e}", path.display())))?;
    write_file(path, &(text + "\n"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

/// Provenance for one run directory: every emitted file is listed with its
/// checksum. The timestamp lives here and nowhere else, so the data files
/// stay byte-identical across reruns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub created_unix: u64,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Write manifest.json for `dir`, covering the given files (paths relative
/// to `dir` in the listing).
pub fn write_manifest(dir: &Path, config_text: &str, files: &[PathBuf]) -> Result<PathBuf> {
    let mut artifacts = Vec::new();
    for f in files {
        let bytes = fs::read(f).map_err(EdlError::from)?;
        let rel = f
            .strip_prefix(dir)
            .unwrap_or(f)
            .to_string_lossy()
            .into_owned();
        artifacts.push(ArtifactEntry {
            file: rel,
            sha256: sha256_hex(&bytes),
        });
    }
    artifacts.sort_by(|a, b| a.file.cmp(&b.file));
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        artifacts,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}
