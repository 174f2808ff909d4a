//! The linearized IMEX BDF ensemble eddy-viscosity time stepper.

mod assembly;
mod audit;
mod descriptor;
mod forms;
mod problem;
mod stepper;

pub use assembly::{assemble_operator, velocity_at_points, Assembler, StepSystem, SystemLayout};
pub use audit::{stability_audit, StabilityCheck, StabilityReport};
pub use descriptor::{SchemeDescriptor, SchemeName, StepParams};
pub use forms::{convective_form, divergence_pairing, field_norms, l2_norm_sq_fn, weak_trilinear, FieldNorms};
pub use problem::FlowProblem;
pub use stepper::{Bootstrap, EnsembleStepper, StepReport, Trajectory};
