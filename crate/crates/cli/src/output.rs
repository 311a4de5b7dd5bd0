//! CSV emission helpers: stable numeric formatting and atomic writes.

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Fixed 6-significant-digit decimal formatting, for cross-platform
/// byte-identical output files.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if exp >= 6 {
        let scale = 10f64.powi(exp - 5);
        format!("{:.0}", (x / scale).round() * scale)
    } else {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

/// Writes to a temp file in the target directory, then renames into place, so
/// a failure never leaves a partially written output file.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    ));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    };
    write().map_err(CliError::io(path.display().to_string()))
}

/// Creates the output directory and verifies it is writable before any
/// simulation starts.
pub fn prepare_output_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir.display().to_string()))?;
    let probe = dir.join(".write_check");
    std::fs::write(&probe, b"ok").map_err(CliError::io(dir.display().to_string()))?;
    std::fs::remove_file(&probe).map_err(CliError::io(dir.display().to_string()))?;
    Ok(())
}

/// Builds a CSV body from a header line and preformatted rows.
pub fn csv_body(header: &str, rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

/// Thins an ECDF point list to at most `max_points`, keeping the first and
/// last points, for plot-sized output files.
pub fn thin_ecdf(points: &[(f64, f64)], max_points: usize) -> Vec<(f64, f64)> {
    if points.len() <= max_points || max_points < 2 {
        return points.to_vec();
    }
    let mut out = Vec::with_capacity(max_points);
    let step = (points.len() - 1) as f64 / (max_points - 1) as f64;
    let mut last_idx = usize::MAX;
    for k in 0..max_points {
        let idx = ((k as f64 * step).round() as usize).min(points.len() - 1);
        if idx != last_idx {
            out.push(points[idx]);
            last_idx = idx;
        }
    }
    out
}
