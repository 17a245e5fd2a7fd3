//! Deterministic result files: CSV for time series and sweep tables, JSON
//! for reports and manifests, and gnuplot-style whitespace tables for plots.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// Fixed-width scientific formatting; identical inputs give identical bytes.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut buf = String::new();
    buf.push_str(&header.join(","));
    buf.push('\n');
    for row in rows {
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Whitespace-separated table with a `#` comment header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> anyhow::Result<()> {
    let mut buf = String::from("# ");
    buf.push_str(&header.join(" "));
    buf.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt(x)).collect();
        buf.push_str(&cells.join(" "));
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Pretty one-line summary printed after each experiment.
pub fn announce(manifest: &crate::Manifest, out_dir: &Path) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(
        stdout,
        "{}: wrote {} file(s) to {}",
        manifest.experiment,
        manifest.outputs.len() + 1,
        out_dir.display()
    );
}
