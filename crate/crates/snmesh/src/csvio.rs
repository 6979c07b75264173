//! CSV formatting and atomic file writes.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Shortest text with 17 significant digits; parses back to the same value.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// A header row and numeric rows.
pub fn table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt17(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Solution file rows: x, phi, phi_u, phi_collided.
pub fn solution_table(xs: &[f64], phi: &[f64], phi_u: &[f64]) -> String {
    let rows: Vec<Vec<f64>> = xs
        .iter()
        .zip(phi)
        .zip(phi_u)
        .map(|((&x, &p), &u)| vec![x, p, u, p - u])
        .collect();
    table(&["x", "phi", "phi_u", "phi_collided"], &rows)
}

/// Parses a numeric CSV with the given header, skipping `#` lines.
pub fn parse_table(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let head = lines.next().unwrap_or("");
    let expect = header.join(",");
    if head != expect {
        bail!("unexpected header `{head}`, wanted `{expect}`");
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| {
                f.parse::<f64>()
                    .with_context(|| format!("row {}: bad number `{f}`", n + 1))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            bail!("row {} has {} fields, wanted {}", n + 1, row.len(), header.len());
        }
        rows.push(row);
    }
    Ok(rows)
}
