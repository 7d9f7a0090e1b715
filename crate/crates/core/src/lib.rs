//! One-dimensional quasinonlocal diffusion.
//!
//! A long-horizon nonlocal model on `x <= 0` is coupled to a short-horizon
//! model on `x > 0` through geometric reconstruction of long bonds, which
//! keeps the coupled operator symmetric and free of ghost forces.

pub mod assembly;
pub mod checks;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod quadrature;

pub use assembly::{assemble_local, assemble_nonlocal, assemble_qnl, DiffusionOperator, OperatorKind, Stencil};
pub use error::{QnlError, Result};
pub use grid::{build_grid, Grid1D, GridField};
pub use kernel::{ScaledKernel, ScalelessKernel};

/// Scientific notation with six significant digits.
pub fn fmt_sci(v: f64) -> String {
    format!("{v:.5e}")
}
