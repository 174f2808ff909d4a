//! Taylor-Hood (Q2 velocity / Q1 pressure) finite element machinery.

mod element;
mod quadrature;
mod space;

pub use element::{map_physical, shape_eval, CellMap, ElementKind, ReferenceElement, Q1, Q2};
pub use quadrature::QuadratureRule;
pub use space::{
    CellValues, ConstraintValues, FieldCoefficients, FieldRole, QpValues, QuadratureCache, TaylorHoodSpace,
};
