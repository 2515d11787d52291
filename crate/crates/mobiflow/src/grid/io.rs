//! CSV and manifest i/o for densities and staggered fields.
//!
//! Density files carry a header line `# nx ny dx dy` followed by ny rows of
//! nx comma-separated values (row-major, x fastest). Staggered fields are
//! directories of per-time-node CSVs plus a JSON manifest.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::domain::{Density, Domain};
use crate::grid::field::StaggeredField;

fn write_matrix(path: &Path, values: &Array2<f64>, dx: f64, dy: f64) -> Result<()> {
    let (nx, ny) = values.dim();
    let mut out = String::new();
    out.push_str(&format!("# {} {} {:.17e} {:.17e}\n", nx, ny, dx, dy));
    for j in 0..ny {
        let row: Vec<String> = (0..nx).map(|i| format!("{:.17e}", values[[i, j]])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

fn read_matrix(path: &Path) -> Result<(Array2<f64>, f64, f64)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::MalformedFile {
        path: path.display().to_string(),
        reason: "empty file".into(),
    })?;
    let bad = |reason: &str| Error::MalformedFile {
        path: path.display().to_string(),
        reason: reason.into(),
    };
    let parts: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
    if parts.len() != 4 {
        return Err(bad("header must be `# nx ny dx dy`"));
    }
    let nx: usize = parts[0].parse().map_err(|_| bad("bad nx"))?;
    let ny: usize = parts[1].parse().map_err(|_| bad("bad ny"))?;
    let dx: f64 = parts[2].parse().map_err(|_| bad("bad dx"))?;
    let dy: f64 = parts[3].parse().map_err(|_| bad("bad dy"))?;
    let mut values = Array2::zeros((nx, ny));
    for j in 0..ny {
        let line = lines.next().ok_or_else(|| bad("missing data row"))?;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != nx {
            return Err(bad(&format!("row {j} has {} values, expected {nx}", cells.len())));
        }
        for (i, c) in cells.iter().enumerate() {
            values[[i, j]] = c.trim().parse().map_err(|_| bad("bad float"))?;
        }
    }
    Ok((values, dx, dy))
}

/// Write one density as CSV.
pub fn write_density(path: impl AsRef<Path>, rho: &Density) -> Result<()> {
    write_matrix(path.as_ref(), &rho.values, rho.domain.dx(), rho.domain.dy())
}

/// Read a density; the domain is reconstructed from the header.
pub fn read_density(path: impl AsRef<Path>) -> Result<Density> {
    let (values, dx, dy) = read_matrix(path.as_ref())?;
    let (nx, ny) = values.dim();
    let domain = if ny == 1 {
        Domain::line(nx, dx * nx as f64)?
    } else {
        Domain::rect(nx, ny, dx * nx as f64, dy * ny as f64)?
    };
    Density::new(domain, values)
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldManifest {
    schema_version: u32,
    n_s: usize,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    lx: f64,
    ly: f64,
    dim: usize,
}

/// Write a staggered field as a directory of CSVs plus manifest.json.
pub fn write_field(dir: impl AsRef<Path>, field: &StaggeredField) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let d = &field.domain;
    let manifest = FieldManifest {
        schema_version: 1,
        n_s: field.n_s,
        nx: d.nx,
        ny: d.ny,
        dx: d.dx(),
        dy: d.dy(),
        lx: d.lx,
        ly: d.ly,
        dim: d.dim,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    for k in 0..=field.n_s {
        let slice = field.rho.index_axis(ndarray::Axis(0), k).to_owned();
        write_matrix(&dir.join(format!("rho_{k:04}.csv")), &slice, d.dx(), d.dy())?;
    }
    for k in 0..field.n_s {
        let wx = field.wx.index_axis(ndarray::Axis(0), k).to_owned();
        write_matrix(&dir.join(format!("wx_{k:04}.csv")), &wx, d.dx(), d.dy())?;
        let wy = field.wy.index_axis(ndarray::Axis(0), k).to_owned();
        write_matrix(&dir.join(format!("wy_{k:04}.csv")), &wy, d.dx(), d.dy())?;
    }
    Ok(())
}

/// Read a staggered field written by `write_field`.
pub fn read_field(dir: impl AsRef<Path>) -> Result<StaggeredField> {
    let dir = dir.as_ref();
    let manifest: FieldManifest = serde_json::from_str(
        &fs::read_to_string(dir.join("manifest.json"))?,
    )
    .map_err(|e| Error::MalformedFile {
        path: dir.join("manifest.json").display().to_string(),
        reason: e.to_string(),
    })?;
    let domain = if manifest.dim == 1 {
        Domain::line(manifest.nx, manifest.lx)?
    } else {
        Domain::rect(manifest.nx, manifest.ny, manifest.lx, manifest.ly)?
    };
    let mut field = StaggeredField::zeros(domain, manifest.n_s);
    for k in 0..=manifest.n_s {
        let (values, _, _) = read_matrix(&dir.join(format!("rho_{k:04}.csv")))?;
        field.rho.index_axis_mut(ndarray::Axis(0), k).assign(&values);
    }
    for k in 0..manifest.n_s {
        let (wx, _, _) = read_matrix(&dir.join(format!("wx_{k:04}.csv")))?;
        field.wx.index_axis_mut(ndarray::Axis(0), k).assign(&wx);
        let (wy, _, _) = read_matrix(&dir.join(format!("wy_{k:04}.csv")))?;
        field.wy.index_axis_mut(ndarray::Axis(0), k).assign(&wy);
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::field::interpolate_linear;

    #[test]
    fn density_roundtrip() {
        let domain = Domain::rect(6, 5, 1.2, 1.0).unwrap();
        let rho = Density::from_fn(domain, |x, y| 1.0 + x * y);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.csv");
        write_density(&path, &rho).unwrap();
        let back = read_density(&path).unwrap();
        assert_eq!(back.domain, domain);
        for (a, b) in back.values.iter().zip(rho.values.iter()) {
            assert_eq!(a, b, "17-digit roundtrip must be exact");
        }
    }

    #[test]
    fn field_roundtrip() {
        let domain = Domain::line(8, 1.0).unwrap();
        let rho0 = Density::from_fn(domain, |x, _| 1.0 + 0.3 * (std::f64::consts::PI * x).cos());
        let rho1 = Density::from_fn(domain, |x, _| 1.0 - 0.3 * (std::f64::consts::PI * x).cos());
        let field = interpolate_linear(&rho0, &rho1, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_field(dir.path().join("field"), &field).unwrap();
        let back = read_field(dir.path().join("field")).unwrap();
        assert_eq!(back.n_s, field.n_s);
        assert_eq!(back.rho, field.rho);
        assert_eq!(back.wx, field.wx);
    }
}
