//! Scalar weak forms evaluated by quadrature.

use crate::fem::{QuadratureRule, TaylorHoodSpace};

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `(u·∇)v` from the value of `u` and the gradient of `v`.
#[inline]
pub(crate) fn advect(u: [f64; 2], gv: [[f64; 2]; 2]) -> [f64; 2] {
    [dot(u, gv[0]), dot(u, gv[1])]
}

fn integrate_triple(
    space: &TaylorHoodSpace,
    u: &[f64],
    v: &[f64],
    w: &[f64],
    f: impl Fn(([f64; 2], [[f64; 2]; 2]), ([f64; 2], [[f64; 2]; 2]), ([f64; 2], [[f64; 2]; 2])) -> f64,
) -> f64 {
    let rule = QuadratureRule::accurate();
    let mut total = 0.0;
    for c in 0..space.mesh.n_cells() {
        let values = space.cell_values(c, &rule).expect("mesh cells are valid");
        for q in &values {
            let a = space.eval_velocity(u, c, q);
            let b = space.eval_velocity(v, c, q);
            let d = space.eval_velocity(w, c, q);
            total += f(a, b, d) * q.jxw;
        }
    }
    total
}

/// Skew-symmetric trilinear form `b*(u,v,w) = ½(u·∇v,w) − ½(u·∇w,v)`.
pub fn weak_trilinear(space: &TaylorHoodSpace, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    integrate_triple(space, u, v, w, |(uv, _), (vv, gv), (wv, gw)| {
        0.5 * dot(advect(uv, gv), wv) - 0.5 * dot(advect(uv, gw), vv)
    })
}

/// `(u·∇v, w)`.
pub fn convective_form(space: &TaylorHoodSpace, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    integrate_triple(space, u, v, w, |(uv, _), (_, gv), (wv, _)| dot(advect(uv, gv), wv))
}

/// `½(∇·u, v·w)`.
pub fn divergence_pairing(space: &TaylorHoodSpace, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    integrate_triple(space, u, v, w, |(_, gu), (vv, _), (wv, _)| 0.5 * (gu[0][0] + gu[1][1]) * dot(vv, wv))
}

/// Squared norms of one velocity field.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldNorms {
    /// `‖u‖²`
    pub l2_sq: f64,
    /// `‖∇u‖²`
    pub grad_sq: f64,
    /// `‖∇·u‖²`
    pub div_sq: f64,
}

/// Norms with the standard rule, which is exact for Q2 fields on
/// parallelogram cells.
pub fn field_norms(space: &TaylorHoodSpace, u: &[f64]) -> FieldNorms {
    let cache = space.quadrature();
    let mut n = FieldNorms::default();
    for c in 0..space.mesh.n_cells() {
        for q in cache.cell(c) {
            let (v, g) = space.eval_velocity(u, c, q);
            n.l2_sq += dot(v, v) * q.jxw;
            n.grad_sq += (dot(g[0], g[0]) + dot(g[1], g[1])) * q.jxw;
            let d = g[0][0] + g[1][1];
            n.div_sq += d * d * q.jxw;
        }
    }
    n
}

/// `‖f‖²` of an analytic vector field with the standard rule.
pub fn l2_norm_sq_fn(space: &TaylorHoodSpace, f: impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
    space.integrate(|x| {
        let v = f(x);
        dot(v, v)
    })
}
