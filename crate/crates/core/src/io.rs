//! Legacy VTK, CSV and JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::cutgeom::slice_pieces;
use crate::driver::EocRow;
use crate::error::Result;
use crate::fespace::FEFunctionSlab;
use crate::geometry::Vec3;
use crate::mesh::SpatialMesh;
use crate::problems::LevelSetField;
use crate::scalar::Real;

/// Triangulated (d = 3) or segmented (d = 2) surface with point values.
#[derive(Clone, Debug, Default)]
pub struct SurfaceMesh {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub values: Vec<f64>,
}

/// `Gamma_h(t)` reconstructed on `mesh`, with `value(element, x)` at its vertices.
pub fn surface_snapshot<T: Real>(
    mesh: &SpatialMesh<T>,
    field: &dyn LevelSetField<T>,
    t: T,
    value: impl Fn(usize, &Vec3<T>) -> T,
) -> SurfaceMesh {
    let mut s = SurfaceMesh::default();
    for k in 0..mesh.num_elements() {
        for (piece, _) in slice_pieces(mesh, k, field, t) {
            let mut cell = Vec::with_capacity(piece.len());
            for x in &piece {
                cell.push(s.points.len());
                s.points.push([x[0].as_f64(), x[1].as_f64(), x[2].as_f64()]);
                s.values.push(value(k, x).as_f64());
            }
            s.cells.push(cell);
        }
    }
    s
}

/// `Gamma_h(t_n)` of a solved slab with the values of `u_(h,-)`.
pub fn solution_snapshot<T: Real>(f: &FEFunctionSlab<T>, field: &dyn LevelSetField<T>) -> SurfaceMesh {
    let t = f.interval.1;
    surface_snapshot(&f.mesh, field, t, |k, x| f.value_in(k, x, t))
}

fn vtk_cell_type(nverts: usize) -> u8 {
    match nverts {
        2 => 3,
        3 => 5,
        _ => 10,
    }
}

/// Writes a surface as a legacy VTK unstructured grid with point data `u`.
pub fn write_surface_vtk(path: &Path, surface: &SurfaceMesh, title: &str) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", surface.points.len())?;
    for p in &surface.points {
        writeln!(w, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2])?;
    }
    let size: usize = surface.cells.iter().map(|c| c.len() + 1).sum();
    writeln!(w, "CELLS {} {}", surface.cells.len(), size)?;
    for c in &surface.cells {
        write!(w, "{}", c.len())?;
        for i in c {
            write!(w, " {i}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", surface.cells.len())?;
    for c in &surface.cells {
        writeln!(w, "{}", vtk_cell_type(c.len()))?;
    }
    writeln!(w, "POINT_DATA {}", surface.points.len())?;
    writeln!(w, "SCALARS u double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in &surface.values {
        writeln!(w, "{v:.17e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a spatial mesh as a legacy VTK unstructured grid with the
/// refinement level as cell data.
pub fn write_mesh_vtk<T: Real>(path: &Path, mesh: &SpatialMesh<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "spatial mesh")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.num_vertices())?;
    for p in &mesh.vertices {
        writeln!(w, "{:.17e} {:.17e} {:.17e}", p[0].as_f64(), p[1].as_f64(), p[2].as_f64())?;
    }
    let nv = mesh.dim + 1;
    writeln!(w, "CELLS {} {}", mesh.num_elements(), mesh.num_elements() * (nv + 1))?;
    for k in 0..mesh.num_elements() {
        write!(w, "{nv}")?;
        for v in mesh.element(k) {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.num_elements())?;
    for _ in 0..mesh.num_elements() {
        writeln!(w, "{}", vtk_cell_type(nv))?;
    }
    writeln!(w, "CELL_DATA {}", mesh.num_elements())?;
    writeln!(w, "SCALARS level int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for l in &mesh.levels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct MassRow {
    n: usize,
    t: f64,
    mass: f64,
}

/// Writes `n, t, mass` rows.
pub fn write_mass_csv(path: &Path, trace: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (n, &(t, mass)) in trace.iter().enumerate() {
        w.serialize(MassRow { n, t, mass }).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a convergence table.
pub fn write_eoc_csv(path: &Path, rows: &[EocRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes any serializable value as pretty JSON.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, value).map_err(|e| crate::error::Error::Io(e.into()))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

/// Renders a convergence table for the terminal; EOC columns only when
/// there is more than one level.
pub fn format_eoc_table(rows: &[EocRow]) -> String {
    let with_eoc = rows.len() > 1;
    let mut s = String::new();
    if with_eoc {
        s.push_str(&format!(
            "{:>5} {:>10} {:>10} {:>6} {:>8} {:>12} {:>6} {:>12} {:>6}\n",
            "level", "h", "dt", "N", "dofs", "LinfL2", "eoc", "L2H1", "eoc"
        ));
    } else {
        s.push_str(&format!(
            "{:>5} {:>10} {:>10} {:>6} {:>8} {:>12} {:>12}\n",
            "level", "h", "dt", "N", "dofs", "LinfL2", "L2H1"
        ));
    }
    let fmt_eoc = |e: Option<f64>| e.map_or("-".to_string(), |v| format!("{v:.2}"));
    for r in rows {
        if with_eoc {
            s.push_str(&format!(
                "{:>5} {:>10.4e} {:>10.4e} {:>6} {:>8} {:>12.4e} {:>6} {:>12.4e} {:>6}\n",
                r.level,
                r.h,
                r.dt,
                r.slabs,
                r.max_dofs,
                r.linf_l2,
                fmt_eoc(r.eoc_linf_l2),
                r.l2_h1,
                fmt_eoc(r.eoc_l2_h1)
            ));
        } else {
            s.push_str(&format!(
                "{:>5} {:>10.4e} {:>10.4e} {:>6} {:>8} {:>12.4e} {:>12.4e}\n",
                r.level, r.h, r.dt, r.slabs, r.max_dofs, r.linf_l2, r.l2_h1
            ));
        }
    }
    s
}
