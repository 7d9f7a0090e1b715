//! Manufactured-solution convergence studies and the singular-datum
//! comparison.

mod cases;
mod norms;
mod problem;
mod singular;
mod study;

pub use cases::{build_operator, Case, OperatorChoice};
pub use norms::{error_energy, error_interior_energy, error_linf, gradient_error_l2, ExactExtension, GradientRegion};
pub use problem::{manufactured_problem, ManufacturedProblem};
pub use singular::{singular_comparison, SingularComparison, SingularConfig};
pub use study::{convergence_study, ErrorKind, ErrorReport, ErrorRow, StudyConfig};
