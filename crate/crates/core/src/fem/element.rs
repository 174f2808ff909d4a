use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    /// Biquadratic Lagrange element, used per velocity component.
    Q2Vector,
    /// Bilinear Lagrange element for the pressure.
    Q1Scalar,
}

/// Reference Lagrange element on `[-1, 1]²`.
///
/// Node order: the four corners counterclockwise from `(-1, -1)`, then
/// (Q2 only) the midpoints of edges 0..4, then the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceElement {
    pub kind: ElementKind,
}

pub const Q2: ReferenceElement = ReferenceElement { kind: ElementKind::Q2Vector };
pub const Q1: ReferenceElement = ReferenceElement { kind: ElementKind::Q1Scalar };

/// 1D node index (0 -> -1, 1 -> 0, 2 -> +1) of each Q2 node.
pub(crate) const Q2_TENSOR: [[usize; 2]; 9] =
    [[0, 0], [2, 0], [2, 2], [0, 2], [1, 0], [2, 1], [1, 2], [0, 1], [1, 1]];

const Q1_NODES: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

impl ReferenceElement {
    pub fn node_count(&self) -> usize {
        match self.kind {
            ElementKind::Q2Vector => 9,
            ElementKind::Q1Scalar => 4,
        }
    }

    pub fn nodes(&self) -> Vec<[f64; 2]> {
        match self.kind {
            ElementKind::Q2Vector => Q2_TENSOR
                .iter()
                .map(|t| [t[0] as f64 - 1.0, t[1] as f64 - 1.0])
                .collect(),
            ElementKind::Q1Scalar => Q1_NODES.to_vec(),
        }
    }
}

#[inline]
fn lagrange2(s: f64) -> ([f64; 3], [f64; 3]) {
    (
        [0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)],
        [s - 0.5, -2.0 * s, s + 0.5],
    )
}

/// Q2 values and reference gradients without range checking.
#[inline]
pub(crate) fn q2_eval(xi: [f64; 2], val: &mut [f64; 9], grad: &mut [[f64; 2]; 9]) {
    let (lx, dx) = lagrange2(xi[0]);
    let (ly, dy) = lagrange2(xi[1]);
    for (a, t) in Q2_TENSOR.iter().enumerate() {
        val[a] = lx[t[0]] * ly[t[1]];
        grad[a] = [dx[t[0]] * ly[t[1]], lx[t[0]] * dy[t[1]]];
    }
}

/// Q1 values and reference gradients without range checking.
#[inline]
pub(crate) fn q1_eval(xi: [f64; 2], val: &mut [f64; 4], grad: &mut [[f64; 2]; 4]) {
    for (a, n) in Q1_NODES.iter().enumerate() {
        let fx = 0.5 * (1.0 + n[0] * xi[0]);
        let fy = 0.5 * (1.0 + n[1] * xi[1]);
        val[a] = fx * fy;
        grad[a] = [0.5 * n[0] * fy, 0.5 * n[1] * fx];
    }
}

/// Shape values and reference-coordinate gradients at `xi`.
pub fn shape_eval(element: &ReferenceElement, xi: [f64; 2]) -> Result<(Vec<f64>, Vec<[f64; 2]>)> {
    const TOL: f64 = 1e-12;
    if !(xi[0].abs() <= 1.0 + TOL && xi[1].abs() <= 1.0 + TOL) {
        return Err(Error::invalid(format!("reference point {xi:?} outside [-1,1]^2")));
    }
    match element.kind {
        ElementKind::Q2Vector => {
            let mut v = [0.0; 9];
            let mut g = [[0.0; 2]; 9];
            q2_eval(xi, &mut v, &mut g);
            Ok((v.to_vec(), g.to_vec()))
        }
        ElementKind::Q1Scalar => {
            let mut v = [0.0; 4];
            let mut g = [[0.0; 2]; 4];
            q1_eval(xi, &mut v, &mut g);
            Ok((v.to_vec(), g.to_vec()))
        }
    }
}

/// Bilinear isoparametric map of one quadrilateral.
#[derive(Debug, Clone, Copy)]
pub struct CellMap {
    pub corners: [[f64; 2]; 4],
}

impl CellMap {
    pub fn new(corners: [[f64; 2]; 4]) -> Self {
        CellMap { corners }
    }

    pub fn point(&self, xi: [f64; 2]) -> [f64; 2] {
        let mut v = [0.0; 4];
        let mut g = [[0.0; 2]; 4];
        q1_eval(xi, &mut v, &mut g);
        let mut x = [0.0; 2];
        for (a, c) in self.corners.iter().enumerate() {
            x[0] += v[a] * c[0];
            x[1] += v[a] * c[1];
        }
        x
    }

    /// Returns `(x, J, det J)` where `J[i][j] = ∂x_i/∂ξ_j`.
    pub fn eval(&self, xi: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2], f64) {
        let mut v = [0.0; 4];
        let mut g = [[0.0; 2]; 4];
        q1_eval(xi, &mut v, &mut g);
        let mut x = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        for (a, c) in self.corners.iter().enumerate() {
            for i in 0..2 {
                x[i] += v[a] * c[i];
                for j in 0..2 {
                    jac[i][j] += c[i] * g[a][j];
                }
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        (x, jac, det)
    }
}

/// Maps reference point `xi` of `cell` to physical space.
pub fn map_physical(mesh: &Mesh, cell: usize, xi: [f64; 2]) -> Result<([f64; 2], [[f64; 2]; 2], f64)> {
    if cell >= mesh.n_cells() {
        return Err(Error::invalid(format!("cell index {cell} out of range")));
    }
    let (x, jac, det) = CellMap::new(mesh.corners(cell)).eval(xi);
    if det <= 0.0 {
        return Err(Error::DegenerateCell { cell, det });
    }
    Ok((x, jac, det))
}
