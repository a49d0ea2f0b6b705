use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

/// Where a command's machine-readable artifact goes.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputTarget {
    Stdout,
    File(PathBuf),
}

impl OutputTarget {
    /// Relative `output` paths live under `dir` when it is given; with no
    /// `output` at all, `dir` receives `default_name` and otherwise the
    /// artifact goes to stdout.
    pub fn resolve(output: Option<&Path>, dir: Option<&Path>, default_name: &str) -> Self {
        match (output, dir) {
            (Some(p), Some(d)) if p.is_relative() => Self::File(d.join(p)),
            (Some(p), _) => Self::File(p.to_path_buf()),
            (None, Some(d)) => Self::File(d.join(default_name)),
            (None, None) => Self::Stdout,
        }
    }

    pub fn write(&self, text: &str) -> anyhow::Result<()> {
        match self {
            Self::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
            }
            Self::File(path) => {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
                }
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Ok(())
    }

    pub fn is_stdout(&self) -> bool {
        matches!(self, Self::Stdout)
    }
}

/// Ten significant digits.
pub fn sig10(x: f64) -> String {
    format!("{x:.9e}")
}

pub fn csv_row(values: &[f64]) -> String {
    let mut row = values.iter().map(|v| sig10(*v)).collect::<Vec<_>>().join(",");
    row.push('\n');
    row
}

pub fn json(value: &impl serde::Serialize) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}
