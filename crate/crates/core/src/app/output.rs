use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::TaylorHoodSpace;

/// Rows of comma-separated values with a header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.render())
    }
}

/// Full-precision float formatting used in every CSV.
pub fn num(v: f64) -> String {
    format!("{v:.10e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Legacy ASCII VTK of the mesh vertices carrying velocity, pressure and
/// speed point data.
pub fn emit_vtk(space: &TaylorHoodSpace, velocity: &[f64], pressure: &[f64], path: &Path) -> Result<()> {
    let mesh = &space.mesh;
    let nv = space.n_vnodes();
    let n = mesh.n_nodes();
    let mut s = String::from("# vtk DataFile Version 3.0\nensemble flow field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {} {}", mesh.n_cells(), 5 * mesh.n_cells());
    for c in &mesh.cells {
        let _ = writeln!(s, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.n_cells());
    for _ in 0..mesh.n_cells() {
        s.push_str("9\n");
    }
    // mesh vertices are the first Q2 nodes
    let _ = writeln!(s, "POINT_DATA {n}\nVECTORS velocity double");
    for i in 0..n {
        let _ = writeln!(s, "{} {} 0", velocity[i], velocity[nv + i]);
    }
    s.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for p in pressure.iter().take(n) {
        let _ = writeln!(s, "{p}");
    }
    s.push_str("SCALARS speed double 1\nLOOKUP_TABLE default\n");
    for i in 0..n {
        let _ = writeln!(s, "{}", velocity[i].hypot(velocity[nv + i]));
    }
    write_file(path, &s)
}

/// Files produced by a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl Artifacts {
    pub fn csv(&mut self, dir: &Path, name: &str, table: &CsvTable) -> Result<()> {
        let p = dir.join(name);
        table.write(&p)?;
        self.files.push(p);
        Ok(())
    }

    pub fn text(&mut self, dir: &Path, name: &str, contents: &str) -> Result<()> {
        let p = dir.join(name);
        write_file(&p, contents)?;
        self.files.push(p);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    #[test]
    fn vtk_of_zero_and_interpolated_fields() {
        let dir = tempfile::tempdir().unwrap();
        let space = TaylorHoodSpace::new(unit_square_mesh(2).unwrap()).unwrap();
        let path = dir.path().join("zero.vtk");
        emit_vtk(&space, &vec![0.0; space.n_velocity()], &vec![0.0; space.n_pressure()], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("POINTS 9 double") && text.contains("CELL_TYPES 4"));
        let u = space.interpolate_velocity(|x| [x[0].sin(), x[1] * x[1]]);
        let p = space.interpolate_pressure(|x| x[0] + x[1]);
        emit_vtk(&space, &u.values, &p.values, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let vec_start = text.lines().position(|l| l.starts_with("VECTORS")).unwrap();
        for (i, line) in text.lines().skip(vec_start + 1).take(9).enumerate() {
            let v: Vec<f64> = line.split(' ').map(|t| t.parse().unwrap()).collect();
            let x = space.mesh.nodes[i];
            assert!((v[0] - x[0].sin()).abs() < 1e-12 && (v[1] - x[1] * x[1]).abs() < 1e-12);
        }
        assert!(emit_vtk(&space, &u.values, &p.values, Path::new("/proc/forbidden/x.vtk")).is_err());
    }

    #[test]
    fn csv_render() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["1".into(), num(0.5)]);
        assert_eq!(t.render(), "a,b\n1,5.0000000000e-1\n");
    }
}
