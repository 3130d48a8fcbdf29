//! CSV/JSON writers shared by the snapshot and report types.
//!
//! CSV files may start with one `# fingerprint: <hex>` comment line that ties
//! the file to the configuration that produced it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::mesh::{Mesh, MeshKind};

/// Shortest round-trip decimal form; non-finite values print as `inf`,
/// `-inf` or `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn write_csv<I>(
    path: impl AsRef<Path>,
    fingerprint: Option<&str>,
    header: &[&str],
    rows: I,
) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = BufWriter::new(File::create(path)?);
    if let Some(fp) = fingerprint {
        writeln!(out, "# fingerprint: {fp}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Writes node coordinates followed by the named fields, one row per node.
/// Radial meshes use the column `r`, rectangles `x,y`.
pub fn write_node_fields(
    mesh: &Mesh,
    path: impl AsRef<Path>,
    fingerprint: Option<&str>,
    fields: &[(&str, &[f64])],
) -> Result<()> {
    let radial = matches!(mesh.kind(), MeshKind::Radial { .. });
    let mut header: Vec<&str> = if radial { vec!["r"] } else { vec!["x", "y"] };
    header.extend(fields.iter().map(|(name, _)| *name));
    let rows = mesh.coords().iter().enumerate().map(|(i, c)| {
        let mut row = vec![fmt_f64(c[0])];
        if !radial {
            row.push(fmt_f64(c[1]));
        }
        row.extend(fields.iter().map(|(_, f)| fmt_f64(f[i])));
        row
    });
    write_csv(path, fingerprint, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_non_finite() {
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn node_fields_layout() {
        let mesh = Mesh::rect(1.0, 1.0, 16, 16).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let z = mesh.zeros();
        write_node_fields(&mesh, &path, Some("abc"), &[("u", &z), ("v", &z)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# fingerprint: abc"));
        assert_eq!(lines.next(), Some("x,y,u,v"));
        assert_eq!(lines.count(), mesh.len());
    }
}
