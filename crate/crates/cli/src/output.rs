//! Output paths and number formatting.
//!
//! All floating-point values are printed with 9 significant digits, `.` as
//! the decimal separator, locale-independent. `RAMPLAW_OUT_DIR` sets the
//! default directory for relative output paths.

use anyhow::{Context, Result};
use std::io::Write;
use std::path::{Path, PathBuf};

/// 9 significant digits, scientific.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Round through the 9-digit representation (for JSON payloads).
pub fn sig9_value(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(sig9(x).parse().unwrap_or(x))
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

/// Resolve an output path: explicit wins, otherwise `default_name` under
/// `RAMPLAW_OUT_DIR` (or the working directory).
pub fn out_path(explicit: Option<&PathBuf>, default_name: &str) -> PathBuf {
    match explicit {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => base_dir().join(p),
        None => base_dir().join(default_name),
    }
}

fn base_dir() -> PathBuf {
    std::env::var_os("RAMPLAW_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    let mut file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(text.as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_text(path, &format!("{}\n", serde_json::to_string_pretty(value)?))
}

/// Assemble a CSV from a header and row iterator.
pub fn csv_text<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    text
}
