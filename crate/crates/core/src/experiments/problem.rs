use crate::dynamics::SeparableSource;
use crate::grid::{Grid1D, GridField};

/// Heat-equation problem with known local solution `e^{-t} x² (1 - x²)`.
pub struct ManufacturedProblem {
    /// Initial datum, constrained.
    pub u0: GridField,
    pub source: SeparableSource,
}

impl ManufacturedProblem {
    pub fn initial(x: f64) -> f64 {
        x * x * (1.0 - x * x)
    }

    pub fn source_at(x: f64, t: f64) -> f64 {
        (-t).exp() * (12.0 * x * x - 2.0) - (-t).exp() * x * x * (1.0 - x * x)
    }

    pub fn exact(x: f64, t: f64) -> f64 {
        (-t).exp() * x * x * (1.0 - x * x)
    }

    /// Spatial derivative of [`Self::exact`].
    pub fn exact_dx(x: f64, t: f64) -> f64 {
        (-t).exp() * (2.0 * x - 4.0 * x * x * x)
    }
}

pub fn manufactured_problem(grid: Grid1D) -> ManufacturedProblem {
    let mut u0 = GridField::sample(grid, ManufacturedProblem::initial);
    u0.apply_constraints();
    let source = SeparableSource::new().term(
        &grid,
        |x| 12.0 * x * x - 2.0 - x * x * (1.0 - x * x),
        |t| (-t).exp(),
    );
    ManufacturedProblem { u0, source }
}
