//! Flat-file output: versioned CSV and atomic writes.

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use std::io::Write;
use std::path::Path;

/// First line of every CSV file written by the crate.
pub const SCHEMA_HEADER: &str = "# macropeaks-schema v1";

/// Writes `bytes` to a temporary sibling of `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV text with the schema header.
pub struct CsvTable {
    text: String,
    width: usize,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable {
            text: format!("{SCHEMA_HEADER}\n{}\n", columns.join(",")),
            width: columns.len(),
        }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        debug_assert_eq!(cells.len(), self.width);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }
}

/// Formats an optional number, empty when absent.
pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Reads a CSV with columns `x0, x1, ...` and optionally `value`; comment lines start with `#`.
pub fn read_points_csv(text: &str) -> Result<(PointSet, Option<Vec<f64>>)> {
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Io("empty csv".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let xcols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('x'))
        .map(|(i, _)| i)
        .collect();
    if xcols.is_empty() {
        return Err(Error::Io(
            "csv has no coordinate columns x0, x1, ...".into(),
        ));
    }
    let vcol = header.iter().position(|h| *h == "value");
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |i: usize| -> Result<f64> {
            cells
                .get(i)
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::Io(format!(
                        "row {}: bad number in column {}",
                        lineno + 1,
                        header[i]
                    ))
                })
        };
        for &i in &xcols {
            coords.push(parse(i)?);
        }
        if let Some(i) = vcol {
            values.push(parse(i)?);
        }
    }
    let points = PointSet::from_flat(xcols.len(), coords)?;
    Ok((points, vcol.map(|_| values)))
}
