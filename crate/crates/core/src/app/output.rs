//! Legacy ASCII VTK fields and the CSV energy history.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::optimizer::EnergyBreakdown;

pub const HISTORY_HEADER: &str =
    "outer,inner,stage,L,J_dissipation,J_penal,J_eps_scaled,lambda,J_v,phi_min,phi_max";

/// Writes phase, pressure and velocity at the mesh vertices.
pub fn write_vtk(
    mesh: &TriMesh,
    phi: &[f64],
    velocity: &[[f64; 2]],
    pressure: &[f64],
    path: &Path,
) -> Result<()> {
    let n = mesh.n_vertices();
    if phi.len() != n || velocity.len() != n || pressure.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "vtk output needs {n} vertex values, got phi {}, velocity {}, pressure {}",
            phi.len(),
            velocity.len(),
            pressure.len()
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_vtk_to(&mut w, mesh, phi, velocity, pressure)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_vtk_to(
    w: &mut impl Write,
    mesh: &TriMesh,
    phi: &[f64],
    velocity: &[[f64; 2]],
    pressure: &[f64],
) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "phase field and Stokes state")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for p in mesh.vertices() {
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    let nt = mesh.n_triangles();
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
    for (name, values) in [("phi", phi), ("pressure", pressure)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(w, "{v}")?;
        }
    }
    writeln!(w, "VECTORS velocity double")?;
    for v in velocity {
        writeln!(w, "{} {} 0", v[0], v[1])?;
    }
    Ok(())
}

pub fn write_history_csv(history: &[EnergyBreakdown], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_history_to(&mut w, history)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_history_to(w: &mut impl Write, history: &[EnergyBreakdown]) -> std::io::Result<()> {
    writeln!(w, "{HISTORY_HEADER}")?;
    for r in history {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.outer,
            r.inner,
            r.stage,
            r.total,
            r.dissipation,
            r.penalization,
            r.interface,
            r.lambda,
            r.volume_misfit,
            r.phi_min,
            r.phi_max
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::Stage;

    #[test]
    fn vtk_of_single_cell() {
        let mesh = TriMesh::rectangle(1, 1, 1.0, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.vtk");
        write_vtk(&mesh, &[0.5; 4], &[[0.0, 0.0]; 4], &[0.0; 4], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert!(text.contains("POINTS 4 double"));
        assert!(text.contains("CELLS 2 8"));
        assert!(text.contains("CELL_TYPES 2"));
        let at = lines
            .iter()
            .position(|l| l.starts_with("SCALARS phi"))
            .unwrap();
        assert!(lines[at + 2..at + 6].iter().all(|l| *l == "0.5"));
        assert!(text.contains("VECTORS velocity double"));
    }

    #[test]
    fn vtk_rejects_mismatched_fields() {
        let mesh = TriMesh::rectangle(1, 1, 1.0, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = write_vtk(
            &mesh,
            &[0.5; 3],
            &[[0.0, 0.0]; 4],
            &[0.0; 4],
            &dir.path().join("f.vtk"),
        );
        assert!(err.is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let row = |stage, total: f64| EnergyBreakdown {
            outer: 0,
            inner: 1,
            stage,
            total,
            dissipation: 0.1,
            penalization: 0.2,
            interface: 0.3,
            lambda: -0.5,
            volume_misfit: 1e-3,
            phi_min: 0.0,
            phi_max: 1.0,
        };
        let history = vec![
            row(Stage::AfterStokes, 3.0),
            row(Stage::AfterAllenCahn, 2.5),
            row(Stage::AfterCutoff, 2.0),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        write_history_csv(&history, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], HISTORY_HEADER);
        assert_eq!(lines[2], "0,1,allen_cahn,2.5,0.1,0.2,0.3,-0.5,0.001,0,1");
    }

    #[test]
    fn unwritable_path_reports_it() {
        let err = write_history_csv(&[], Path::new("/nonexistent-dir/h.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/h.csv"));
    }
}
