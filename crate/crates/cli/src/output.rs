//! Report files, written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bo_core::dynamics::Trajectory;
use bo_core::lab::EstimateReport;

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = temp_sibling(path);
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// `<dir>/<stem>.json` and `<dir>/<stem>.csv`.
pub fn write_report(dir: &Path, stem: &str, report: &EstimateReport) -> Result<PathBuf> {
    let json = dir.join(format!("{stem}.json"));
    write_atomic(&json, report.to_json()?.as_bytes())?;
    write_atomic(&dir.join(format!("{stem}.csv")), report.csv_string()?.as_bytes())?;
    Ok(json)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())
}

/// Exports into a temporary directory and swaps it in.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    let tmp = temp_sibling(dir);
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    traj.export(&tmp).with_context(|| format!("exporting trajectory to {}", tmp.display()))?;
    if dir.exists() {
        fs::remove_dir_all(dir).with_context(|| format!("replacing {}", dir.display()))?;
    }
    fs::rename(&tmp, dir).with_context(|| format!("renaming into {}", dir.display()))?;
    Ok(())
}
