use std::collections::HashMap;

use super::element::{q1_eval, q2_eval, CellMap};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::mesh::{edge_vertices, BoundaryMarker, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    Velocity,
    Pressure,
}

/// Coefficients of a discrete field in the numbering of its space.
///
/// Velocity vectors are component-major: entry `c * n_nodes + i` is
/// component `c` at Q2 node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoefficients {
    pub role: FieldRole,
    pub values: Vec<f64>,
}

impl FieldCoefficients {
    pub fn zeros(space: &TaylorHoodSpace, role: FieldRole) -> Self {
        let n = match role {
            FieldRole::Velocity => space.n_velocity(),
            FieldRole::Pressure => space.n_pressure(),
        };
        FieldCoefficients { role, values: vec![0.0; n] }
    }

    pub fn velocity(values: Vec<f64>) -> Self {
        FieldCoefficients { role: FieldRole::Velocity, values }
    }

    pub fn pressure(values: Vec<f64>) -> Self {
        FieldCoefficients { role: FieldRole::Pressure, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Linear combination `Σ c_k f_k` of fields sharing one role and length.
    pub fn combine(terms: &[(f64, &FieldCoefficients)]) -> FieldCoefficients {
        let (_, first) = terms[0];
        let mut values = vec![0.0; first.len()];
        for (c, f) in terms {
            debug_assert_eq!(f.len(), values.len());
            for (v, x) in values.iter_mut().zip(&f.values) {
                *v += c * x;
            }
        }
        FieldCoefficients { role: first.role, values }
    }
}

/// Basis data at one quadrature point of one cell.
#[derive(Debug, Clone, Copy)]
pub struct QpValues {
    pub x: [f64; 2],
    pub jxw: f64,
    pub phi: [f64; 9],
    /// Physical gradients of the Q2 basis.
    pub dphi: [[f64; 2]; 9],
    pub psi: [f64; 4],
}

pub type CellValues = Vec<QpValues>;

/// Basis data for every cell at every point of one quadrature rule.
#[derive(Debug, Clone)]
pub struct QuadratureCache {
    pub n_qp: usize,
    data: Vec<QpValues>,
}

impl QuadratureCache {
    pub fn cell(&self, c: usize) -> &[QpValues] {
        &self.data[c * self.n_qp..(c + 1) * self.n_qp]
    }

    pub fn n_points(&self) -> usize {
        self.data.len()
    }

    pub fn points(&self) -> impl Iterator<Item = &QpValues> {
        self.data.iter()
    }
}

/// Prescribed values on the Dirichlet DOFs, aligned with
/// [`TaylorHoodSpace::dirichlet_dofs`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintValues {
    pub values: Vec<f64>,
}

/// Q2 velocity / Q1 pressure space on a quadrilateral mesh.
///
/// Global unknowns: `2 * n_vnodes` velocity DOFs (component-major),
/// followed by one pressure DOF per mesh vertex.
#[derive(Debug, Clone)]
pub struct TaylorHoodSpace {
    pub mesh: Mesh,
    vnode_coords: Vec<[f64; 2]>,
    cell_vnodes: Vec<[usize; 9]>,
    dirichlet_dofs: Vec<usize>,
    dirichlet_markers: Vec<BoundaryMarker>,
    constrained: Vec<bool>,
    cache: QuadratureCache,
}

fn basis_at(map: &CellMap, xi: [f64; 2], w: f64, cell: usize) -> Result<QpValues> {
    let (x, jac, det) = map.eval(xi);
    if det <= 0.0 {
        return Err(Error::DegenerateCell { cell, det });
    }
    let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
    let mut phi = [0.0; 9];
    let mut gref = [[0.0; 2]; 9];
    q2_eval(xi, &mut phi, &mut gref);
    let mut dphi = [[0.0; 2]; 9];
    for a in 0..9 {
        for i in 0..2 {
            dphi[a][i] = inv[0][i] * gref[a][0] + inv[1][i] * gref[a][1];
        }
    }
    let mut psi = [0.0; 4];
    let mut g1 = [[0.0; 2]; 4];
    q1_eval(xi, &mut psi, &mut g1);
    Ok(QpValues { x, jxw: det * w, phi, dphi, psi })
}

impl TaylorHoodSpace {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let nv = mesh.n_nodes();
        let mut coords = mesh.nodes.clone();
        let mut edge_node: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cell_vnodes = Vec::with_capacity(mesh.n_cells());
        for cell in &mesh.cells {
            let mut v = [0usize; 9];
            v[..4].copy_from_slice(cell);
            for k in 0..4 {
                let (a, b) = edge_vertices(cell, k);
                let key = if a < b { (a, b) } else { (b, a) };
                v[4 + k] = *edge_node.entry(key).or_insert_with(|| {
                    let p = mesh.nodes[a];
                    let q = mesh.nodes[b];
                    coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                    coords.len() - 1
                });
            }
            cell_vnodes.push(v);
        }
        for (c, v) in cell_vnodes.iter_mut().enumerate() {
            coords.push(CellMap::new(mesh.corners(c)).point([0.0, 0.0]));
            v[8] = coords.len() - 1;
        }
        debug_assert!(coords.len() >= nv);

        let mut node_marker: HashMap<usize, BoundaryMarker> = HashMap::new();
        for e in &mesh.boundary_edges {
            let v = &cell_vnodes[e.cell];
            for local in [e.local_edge, (e.local_edge + 1) % 4, 4 + e.local_edge] {
                node_marker
                    .entry(v[local])
                    .and_modify(|m| *m = (*m).min(e.marker))
                    .or_insert(e.marker);
            }
        }
        let mut bnodes: Vec<(usize, BoundaryMarker)> = node_marker.into_iter().collect();
        bnodes.sort();
        let n_vnodes = coords.len();
        let n_total = 2 * n_vnodes + nv;
        let mut dirichlet_dofs = Vec::with_capacity(2 * bnodes.len());
        let mut dirichlet_markers = Vec::with_capacity(2 * bnodes.len());
        for comp in 0..2 {
            for &(node, marker) in &bnodes {
                dirichlet_dofs.push(comp * n_vnodes + node);
                dirichlet_markers.push(marker);
            }
        }
        let mut constrained = vec![false; n_total];
        for &d in &dirichlet_dofs {
            constrained[d] = true;
        }

        let rule = QuadratureRule::standard();
        let mut data = Vec::with_capacity(mesh.n_cells() * rule.len());
        for c in 0..mesh.n_cells() {
            let map = CellMap::new(mesh.corners(c));
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                data.push(basis_at(&map, *xi, *w, c)?);
            }
        }
        let cache = QuadratureCache { n_qp: rule.len(), data };
        Ok(TaylorHoodSpace {
            mesh,
            vnode_coords: coords,
            cell_vnodes,
            dirichlet_dofs,
            dirichlet_markers,
            constrained,
            cache,
        })
    }

    pub fn n_vnodes(&self) -> usize {
        self.vnode_coords.len()
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.vnode_coords.len()
    }

    pub fn n_pressure(&self) -> usize {
        self.mesh.n_nodes()
    }

    pub fn n_total(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    pub fn velocity_node_coords(&self) -> &[[f64; 2]] {
        &self.vnode_coords
    }

    pub fn cell_vnodes(&self, cell: usize) -> &[usize; 9] {
        &self.cell_vnodes[cell]
    }

    /// Global DOF indices of a cell: 9 x-velocity, 9 y-velocity, 4 pressure.
    pub fn cell_dofs(&self, cell: usize) -> [usize; 22] {
        let nv = self.n_vnodes();
        let v = &self.cell_vnodes[cell];
        let p = &self.mesh.cells[cell];
        let mut d = [0usize; 22];
        for a in 0..9 {
            d[a] = v[a];
            d[9 + a] = nv + v[a];
        }
        for k in 0..4 {
            d[18 + k] = 2 * nv + p[k];
        }
        d
    }

    /// Constrained velocity DOFs, sorted by component then node.
    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet_dofs
    }

    pub fn dirichlet_markers(&self) -> &[BoundaryMarker] {
        &self.dirichlet_markers
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    /// Pressure DOF pinned to zero during solves.
    pub fn pinned_pressure_dof(&self) -> usize {
        self.n_velocity()
    }

    pub fn quadrature(&self) -> &QuadratureCache {
        &self.cache
    }

    /// Basis data of `cell` at the points of an arbitrary rule.
    pub fn cell_values(&self, cell: usize, rule: &QuadratureRule) -> Result<CellValues> {
        let map = CellMap::new(self.mesh.corners(cell));
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(xi, w)| basis_at(&map, *xi, *w, cell))
            .collect()
    }

    /// Value and gradient (`g[i][j] = ∂u_i/∂x_j`) of a velocity field.
    #[inline]
    pub fn eval_velocity(&self, u: &[f64], cell: usize, q: &QpValues) -> ([f64; 2], [[f64; 2]; 2]) {
        let nv = self.n_vnodes();
        let v = &self.cell_vnodes[cell];
        let mut val = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for a in 0..9 {
            let ux = u[v[a]];
            let uy = u[nv + v[a]];
            val[0] += ux * q.phi[a];
            val[1] += uy * q.phi[a];
            grad[0][0] += ux * q.dphi[a][0];
            grad[0][1] += ux * q.dphi[a][1];
            grad[1][0] += uy * q.dphi[a][0];
            grad[1][1] += uy * q.dphi[a][1];
        }
        (val, grad)
    }

    #[inline]
    pub fn eval_pressure(&self, p: &[f64], cell: usize, q: &QpValues) -> f64 {
        let c = &self.mesh.cells[cell];
        (0..4).map(|k| p[c[k]] * q.psi[k]).sum()
    }

    /// Nodal Q2 interpolant of a vector field.
    pub fn interpolate_velocity(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> FieldCoefficients {
        let nv = self.n_vnodes();
        let mut values = vec![0.0; 2 * nv];
        for (i, x) in self.vnode_coords.iter().enumerate() {
            let u = f(*x);
            values[i] = u[0];
            values[nv + i] = u[1];
        }
        FieldCoefficients::velocity(values)
    }

    /// Nodal Q1 interpolant of a scalar field.
    pub fn interpolate_pressure(&self, f: impl Fn([f64; 2]) -> f64) -> FieldCoefficients {
        FieldCoefficients::pressure(self.mesh.nodes.iter().map(|x| f(*x)).collect())
    }

    /// Evaluates boundary data at every constrained velocity DOF.
    /// `g(marker, x, t)` returning `None` means no data for that marker.
    pub fn apply_dirichlet(
        &self,
        g: impl Fn(BoundaryMarker, [f64; 2], f64) -> Option<[f64; 2]>,
        t: f64,
    ) -> Result<ConstraintValues> {
        let nv = self.n_vnodes();
        let mut values = Vec::with_capacity(self.dirichlet_dofs.len());
        for (&dof, &marker) in self.dirichlet_dofs.iter().zip(&self.dirichlet_markers) {
            let (comp, node) = (dof / nv, dof % nv);
            let v = g(marker, self.vnode_coords[node], t).ok_or_else(|| {
                Error::config(marker.name(), "no boundary data supplied for this marker")
            })?;
            values.push(v[comp]);
        }
        Ok(ConstraintValues { values })
    }

    /// Overwrites the constrained entries of a velocity vector.
    pub fn impose(&self, u: &mut [f64], g: &ConstraintValues) {
        for (&d, &v) in self.dirichlet_dofs.iter().zip(&g.values) {
            u[d] = v;
        }
    }

    /// `∫ p dx / |D|` for a Q1 pressure.
    pub fn pressure_mean(&self, p: &[f64]) -> f64 {
        let mut integral = 0.0;
        let mut area = 0.0;
        for c in 0..self.mesh.n_cells() {
            for q in self.cache.cell(c) {
                integral += self.eval_pressure(p, c, q) * q.jxw;
                area += q.jxw;
            }
        }
        integral / area
    }

    /// Integral of `f(x)` over the domain with the standard rule.
    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.cache.points().map(|q| f(q.x) * q.jxw).sum()
    }

    /// Friedrichs constant of the bounding box, an upper bound for the
    /// domain's Poincaré constant on functions vanishing on the boundary.
    pub fn poincare_constant(&self) -> f64 {
        let (lo, hi) = self.mesh.bounding_box();
        let a = hi[0] - lo[0];
        let b = hi[1] - lo[1];
        1.0 / (std::f64::consts::PI * (1.0 / (a * a) + 1.0 / (b * b)).sqrt())
    }
}
