//! Structured quadrilateral meshes with boundary markers.
//!
//! Cells are stored as four counterclockwise corner indices. Local edge `k`
//! joins corner `k` to corner `(k + 1) % 4`. Generated meshes order cells
//! lexicographically by (row, column).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Role of a Dirichlet-marked boundary segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryMarker {
    DirichletWall,
    DirichletInflow,
    DirichletOutflow,
    DirichletLid,
}

impl BoundaryMarker {
    pub const ALL: [BoundaryMarker; 4] = [
        BoundaryMarker::DirichletWall,
        BoundaryMarker::DirichletInflow,
        BoundaryMarker::DirichletOutflow,
        BoundaryMarker::DirichletLid,
    ];

    pub fn id(self) -> u8 {
        match self {
            BoundaryMarker::DirichletWall => 0,
            BoundaryMarker::DirichletInflow => 1,
            BoundaryMarker::DirichletOutflow => 2,
            BoundaryMarker::DirichletLid => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryMarker::DirichletWall => "dirichlet_wall",
            BoundaryMarker::DirichletInflow => "dirichlet_inflow",
            BoundaryMarker::DirichletOutflow => "dirichlet_outflow",
            BoundaryMarker::DirichletLid => "dirichlet_lid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub cell: usize,
    pub local_edge: usize,
    pub marker: BoundaryMarker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 4]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub h_max: f64,
}

/// Global vertex pair for local edge `k` of a cell.
pub fn edge_vertices(cell: &[usize; 4], k: usize) -> (usize, usize) {
    (cell[k], cell[(k + 1) % 4])
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn cell_diameter(nodes: &[[f64; 2]], cell: &[usize; 4]) -> f64 {
    let d = |a: usize, b: usize| {
        let p = nodes[cell[a]];
        let q = nodes[cell[b]];
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    };
    d(0, 2).max(d(1, 3))
}

impl Mesh {
    /// Builds a mesh from nodes and cells, detecting boundary edges and
    /// labelling each with `classify(midpoint)`.
    pub fn from_cells(
        nodes: Vec<[f64; 2]>,
        cells: Vec<[usize; 4]>,
        classify: impl Fn([f64; 2]) -> BoundaryMarker,
    ) -> Self {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for cell in &cells {
            for k in 0..4 {
                let (a, b) = edge_vertices(cell, k);
                *count.entry(edge_key(a, b)).or_insert(0) += 1;
            }
        }
        let mut boundary_edges = Vec::new();
        for (c, cell) in cells.iter().enumerate() {
            for k in 0..4 {
                let (a, b) = edge_vertices(cell, k);
                if count[&edge_key(a, b)] == 1 {
                    let mid = [
                        0.5 * (nodes[a][0] + nodes[b][0]),
                        0.5 * (nodes[a][1] + nodes[b][1]),
                    ];
                    boundary_edges.push(BoundaryEdge { cell: c, local_edge: k, marker: classify(mid) });
                }
            }
        }
        let h_max = cells.iter().map(|c| cell_diameter(&nodes, c)).fold(0.0, f64::max);
        Mesh { nodes, cells, boundary_edges, h_max }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn corners(&self, cell: usize) -> [[f64; 2]; 4] {
        let c = &self.cells[cell];
        [self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]], self.nodes[c[3]]]
    }

    /// Exact area of a quadrilateral cell (shoelace formula).
    pub fn cell_area(&self, cell: usize) -> f64 {
        let p = self.corners(cell);
        let mut s = 0.0;
        for k in 0..4 {
            let a = p[k];
            let b = p[(k + 1) % 4];
            s += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * s
    }

    pub fn area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Axis-aligned bounding box `([xmin, ymin], [xmax, ymax])`.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Number of boundary edges carrying `marker`.
    pub fn count_marked(&self, marker: BoundaryMarker) -> usize {
        self.boundary_edges.iter().filter(|e| e.marker == marker).count()
    }

    /// Checks positivity of the bilinear map at every corner, conformity
    /// (interior edges shared by two cells with opposite orientation) and
    /// that every boundary edge is marked exactly once.
    pub fn validate(&self) -> Result<()> {
        for (c, cell) in self.cells.iter().enumerate() {
            let p = self.corners(c);
            for k in 0..4 {
                let prev = p[(k + 3) % 4];
                let cur = p[k];
                let next = p[(k + 1) % 4];
                let det = (next[0] - cur[0]) * (prev[1] - cur[1]) - (next[1] - cur[1]) * (prev[0] - cur[0]);
                if det <= 0.0 {
                    return Err(Error::DegenerateCell { cell: c, det });
                }
            }
            if cell.iter().any(|&v| v >= self.nodes.len()) {
                return Err(Error::invalid(format!("cell {c} references a missing node")));
            }
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for cell in &self.cells {
            for k in 0..4 {
                let e = edge_vertices(cell, k);
                if directed.insert(e, 1).is_some() {
                    return Err(Error::invalid(format!("edge {:?} appears twice with the same orientation", e)));
                }
            }
        }
        let mut marked: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &self.boundary_edges {
            let (a, b) = edge_vertices(&self.cells[e.cell], e.local_edge);
            *marked.entry((a, b)).or_insert(0) += 1;
        }
        for (&(a, b), _) in directed.iter() {
            let interior = directed.contains_key(&(b, a));
            let marks = marked.get(&(a, b)).copied().unwrap_or(0);
            match (interior, marks) {
                (true, 0) | (false, 1) => {}
                (true, _) => return Err(Error::invalid(format!("interior edge ({a},{b}) carries a marker"))),
                (false, 0) => return Err(Error::invalid(format!("boundary edge ({a},{b}) is unmarked"))),
                (false, _) => return Err(Error::invalid(format!("boundary edge ({a},{b}) marked more than once"))),
            }
        }
        Ok(())
    }

    /// Writes the mesh as legacy VTK ASCII (unstructured grid, type-9 quads)
    /// with the boundary marker of each cell's first boundary edge as cell data.
    pub fn write_vtk(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        s.push_str("# vtk DataFile Version 3.0\nmesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
        let _ = writeln!(s, "POINTS {} double", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{:.17e} {:.17e} 0", p[0], p[1]);
        }
        let _ = writeln!(s, "CELLS {} {}", self.cells.len(), 5 * self.cells.len());
        for c in &self.cells {
            let _ = writeln!(s, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.cells.len());
        for _ in &self.cells {
            s.push_str("9\n");
        }
        let mut tag = vec![-1i32; self.cells.len()];
        for e in &self.boundary_edges {
            if tag[e.cell] < 0 {
                tag[e.cell] = e.marker.id() as i32;
            }
        }
        let _ = writeln!(s, "CELL_DATA {}\nSCALARS boundary_marker int 1\nLOOKUP_TABLE default", self.cells.len());
        for t in tag {
            let _ = writeln!(s, "{t}");
        }
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// Uniform grid of `nx × ny` cells on `[x0, x1] × [y0, y1]` with cells
/// for which `keep(row, col)` is false removed. Unused nodes are dropped.
fn punctured_grid(
    nx: usize,
    ny: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    keep: impl Fn(usize, usize) -> bool,
    classify: impl Fn([f64; 2]) -> BoundaryMarker,
) -> Mesh {
    let dx = (hi[0] - lo[0]) / nx as f64;
    let dy = (hi[1] - lo[1]) / ny as f64;
    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut used = vec![false; (nx + 1) * (ny + 1)];
    let mut raw_cells = Vec::new();
    for row in 0..ny {
        for col in 0..nx {
            if !keep(row, col) {
                continue;
            }
            let c = [grid(col, row), grid(col + 1, row), grid(col + 1, row + 1), grid(col, row + 1)];
            for &v in &c {
                used[v] = true;
            }
            raw_cells.push(c);
        }
    }
    let mut renumber = vec![usize::MAX; used.len()];
    let mut nodes = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let g = grid(i, j);
            if used[g] {
                renumber[g] = nodes.len();
                let x = if i == nx { hi[0] } else { lo[0] + i as f64 * dx };
                let y = if j == ny { hi[1] } else { lo[1] + j as f64 * dy };
                nodes.push([x, y]);
            }
        }
    }
    let cells = raw_cells.into_iter().map(|c| c.map(|v| renumber[v])).collect();
    Mesh::from_cells(nodes, cells, classify)
}

/// `n × n` uniform quads on the unit square, fully marked as wall.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("unit_square_mesh needs at least one cell per side"));
    }
    Ok(punctured_grid(n, n, [0.0, 0.0], [1.0, 1.0], |_, _| true, |_| BoundaryMarker::DirichletWall))
}

pub const CHANNEL_LENGTH: f64 = 30.0;
pub const CHANNEL_HEIGHT: f64 = 10.0;
pub const STEP_X: (f64, f64) = (5.0, 6.0);
pub const STEP_HEIGHT: f64 = 1.0;

/// The `[0,30] × [0,10]` channel minus the unit step `[5,6] × [0,1]`,
/// with `base` cells per unit length in both directions.
pub fn step_channel_mesh(base: usize) -> Result<Mesh> {
    if base == 0 {
        return Err(Error::invalid("step_channel_mesh needs base >= 1"));
    }
    let nx = 30 * base;
    let ny = 10 * base;
    let (s0, s1) = (5 * base, 6 * base);
    let keep = move |row: usize, col: usize| !(row < base && col >= s0 && col < s1);
    let tol = 1e-9;
    Ok(punctured_grid(
        nx,
        ny,
        [0.0, 0.0],
        [CHANNEL_LENGTH, CHANNEL_HEIGHT],
        keep,
        move |m| {
            if m[0].abs() < tol {
                BoundaryMarker::DirichletInflow
            } else if (m[0] - CHANNEL_LENGTH).abs() < tol {
                BoundaryMarker::DirichletOutflow
            } else {
                BoundaryMarker::DirichletWall
            }
        },
    ))
}

/// `n × n` uniform quads on `(-1, 1)²`; the top edge is the lid.
pub fn cavity_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("cavity_mesh needs at least one cell per side"));
    }
    Ok(punctured_grid(n, n, [-1.0, -1.0], [1.0, 1.0], |_, _| true, |m| {
        if (m[1] - 1.0).abs() < 1e-9 {
            BoundaryMarker::DirichletLid
        } else {
            BoundaryMarker::DirichletWall
        }
    }))
}

/// Splits every quad into four through its edge midpoints and the image of
/// the reference center. Boundary markers are inherited by both halves of
/// each boundary edge.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut nodes = mesh.nodes.clone();
    let mut edge_mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cells = Vec::with_capacity(4 * mesh.n_cells());
    let mut child_of = Vec::with_capacity(4 * mesh.n_cells());
    for (c, cell) in mesh.cells.iter().enumerate() {
        let mut mids = [0usize; 4];
        for (k, mid) in mids.iter_mut().enumerate() {
            let (a, b) = edge_vertices(cell, k);
            *mid = *edge_mid.entry(edge_key(a, b)).or_insert_with(|| {
                let p = mesh.nodes[a];
                let q = mesh.nodes[b];
                nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                nodes.len() - 1
            });
        }
        let p = mesh.corners(c);
        let center = [
            0.25 * (p[0][0] + p[1][0] + p[2][0] + p[3][0]),
            0.25 * (p[0][1] + p[1][1] + p[2][1] + p[3][1]),
        ];
        nodes.push(center);
        let ctr = nodes.len() - 1;
        // child k keeps corner k
        cells.push([cell[0], mids[0], ctr, mids[3]]);
        cells.push([mids[0], cell[1], mids[1], ctr]);
        cells.push([ctr, mids[1], cell[2], mids[2]]);
        cells.push([mids[3], ctr, mids[2], cell[3]]);
        child_of.extend([c; 4]);
    }
    // parent boundary edge k maps to child k local edge k and child k+1 local edge k
    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let k = e.local_edge;
        boundary_edges.push(BoundaryEdge { cell: 4 * e.cell + k, local_edge: k, marker: e.marker });
        boundary_edges.push(BoundaryEdge { cell: 4 * e.cell + (k + 1) % 4, local_edge: k, marker: e.marker });
    }
    boundary_edges.sort_by_key(|e| (e.cell, e.local_edge));
    let h_max = cells.iter().map(|c| cell_diameter(&nodes, c)).fold(0.0, f64::max);
    Mesh { nodes, cells, boundary_edges, h_max }
}
