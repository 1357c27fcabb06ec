//! VTK legacy unstructured-grid output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{PoroError, Result};
use crate::mesh::Mesh;
use crate::spaces::DofMap;

/// Fields attached to the mesh: vertex displacement and element pressure.
#[derive(Debug, Clone, Copy, Default)]
pub struct VtkFields<'a> {
    /// Full displacement vector (vertex values are read from it).
    pub displacement: Option<(&'a DofMap, &'a [f64])>,
    /// One value per element.
    pub pressure: Option<&'a [f64]>,
}

/// Renders `mesh` (and optional fields) as VTK legacy ASCII text.
pub fn vtk_string(mesh: &Mesh, title: &str, fields: VtkFields<'_>) -> Result<String> {
    let d = mesh.dim();
    let nv = mesh.num_vertices();
    let ne = mesh.num_elements();
    let mut s = String::new();
    let title = title.lines().next().unwrap_or("");
    // Writes into a String cannot fail.
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "CELLS {ne} {}", ne * (d + 2));
    for k in 0..ne {
        let el = mesh.element(k);
        let _ = write!(s, "{}", el.len());
        for v in el {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let cell_type = if d == 2 { 5 } else { 10 };
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "{cell_type}");
    }
    if let Some((dofs, u)) = fields.displacement {
        if u.len() != dofs.n_disp_all() || dofs.n_vertices != nv {
            return Err(PoroError::Config("displacement does not match the mesh".into()));
        }
        let _ = writeln!(s, "POINT_DATA {nv}\nVECTORS displacement double");
        for v in 0..nv {
            let c: Vec<f64> = (0..3)
                .map(|a| if a < d { u[dofs.disp_vertex_dof(v, a)] } else { 0.0 })
                .collect();
            let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", c[0], c[1], c[2]);
        }
    }
    if let Some(p) = fields.pressure {
        if p.len() < ne {
            return Err(PoroError::Config("pressure has fewer values than elements".into()));
        }
        let _ = writeln!(s, "CELL_DATA {ne}\nSCALARS pressure double 1\nLOOKUP_TABLE default");
        for v in &p[..ne] {
            let _ = writeln!(s, "{v:.17e}");
        }
    }
    Ok(s)
}

pub fn write_vtk(path: impl AsRef<Path>, mesh: &Mesh, title: &str, fields: VtkFields<'_>) -> Result<()> {
    let path = path.as_ref();
    let text = vtk_string(mesh, title, fields)?;
    std::fs::write(path, text).map_err(|e| PoroError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_simplicial, BoxDomain};
    use crate::scenario::{ProblemData, ScenarioSpec};
    use crate::spaces::dirichlet_constraints;

    #[test]
    fn mesh_only_layout() {
        let mesh = build_structured_simplicial(2, 3, BoxDomain::unit()).unwrap();
        let s = vtk_string(&mesh, "cube", VtkFields::default()).unwrap();
        assert!(s.contains("POINTS 27 double"));
        assert!(s.contains("CELLS 48 240"));
        assert_eq!(s.lines().filter(|l| *l == "10").count(), 48);
        assert!(!s.contains("POINT_DATA"));
    }

    #[test]
    fn fields_written_and_checked() {
        let mesh = build_structured_simplicial(2, 2, BoxDomain::unit()).unwrap();
        let dofs = dirichlet_constraints(&mesh, &ScenarioSpec::pure_dirichlet(2, ProblemData::zero()), 0.0).unwrap();
        let mut u = vec![0.0; dofs.n_disp_all()];
        u[dofs.disp_vertex_dof(4, 1)] = 2.5;
        let p: Vec<f64> = (0..8).map(|k| k as f64).collect();
        let s = vtk_string(
            &mesh,
            "square",
            VtkFields {
                displacement: Some((&dofs, &u)),
                pressure: Some(&p),
            },
        )
        .unwrap();
        let lines: Vec<&str> = s.lines().collect();
        let at = lines.iter().position(|l| l.starts_with("VECTORS")).unwrap();
        let row: Vec<f64> = lines[at + 5].split(' ').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 2.5, 0.0]);
        assert!(s.contains("CELL_DATA 8"));
        assert!(vtk_string(&mesh, "x", VtkFields { pressure: Some(&p[..3]), ..Default::default() }).is_err());

        let dir = tempfile::tempdir().unwrap();
        write_vtk(dir.path().join("m.vtk"), &mesh, "square", VtkFields::default()).unwrap();
        assert!(dir.path().join("m.vtk").exists());
    }
}
