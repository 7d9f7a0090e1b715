use std::fmt;
use std::str::FromStr;

use crate::assembly::{assemble_local, assemble_nonlocal, assemble_qnl, DiffusionOperator};
use crate::error::{QnlError, Result};
use crate::grid::Grid1D;
use crate::kernel::ScalelessKernel;

/// Horizon pairs `(r1, r2)` in grid units used by the reference studies.
///
/// `B2` has the same horizons as `C`; it names the `(4, 2)` runs of the
/// energy-norm studies so that `B` can stay `(3, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    A,
    B,
    C,
    B2,
    Custom { r1: usize, r2: usize },
}

impl Case {
    pub fn radii(&self) -> (usize, usize) {
        match *self {
            Case::A => (6, 2),
            Case::B => (3, 1),
            Case::C => (4, 2),
            Case::B2 => (4, 2),
            Case::Custom { r1, r2 } => (r1, r2),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Case::A => f.write_str("A"),
            Case::B => f.write_str("B"),
            Case::C => f.write_str("C"),
            Case::B2 => f.write_str("B2"),
            Case::Custom { r1, r2 } => write!(f, "custom({r1},{r2})"),
        }
    }
}

impl FromStr for Case {
    type Err = QnlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Case::A),
            "B" | "b" => Ok(Case::B),
            "C" | "c" => Ok(Case::C),
            "B2" | "b2" => Ok(Case::B2),
            _ => Err(QnlError::config(format!("unknown case `{s}` (expected A, B, C or B2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorChoice {
    Qnl,
    /// Long horizon on the whole domain.
    Nonlocal1,
    /// Short horizon on the whole domain.
    Nonlocal2,
    Local,
}

impl fmt::Display for OperatorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorChoice::Qnl => "qnl",
            OperatorChoice::Nonlocal1 => "nonlocal1",
            OperatorChoice::Nonlocal2 => "nonlocal2",
            OperatorChoice::Local => "local",
        })
    }
}

impl FromStr for OperatorChoice {
    type Err = QnlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qnl" => Ok(OperatorChoice::Qnl),
            "nonlocal1" => Ok(OperatorChoice::Nonlocal1),
            "nonlocal2" => Ok(OperatorChoice::Nonlocal2),
            "local" => Ok(OperatorChoice::Local),
            _ => Err(QnlError::config(format!(
                "unknown operator `{s}` (expected qnl, nonlocal1, nonlocal2 or local)"
            ))),
        }
    }
}

pub fn build_operator(grid: Grid1D, choice: OperatorChoice, kernel: ScalelessKernel) -> Result<DiffusionOperator> {
    let k1 = kernel.scaled(grid.delta1())?;
    let k2 = kernel.scaled(grid.delta2())?;
    match choice {
        OperatorChoice::Qnl => assemble_qnl(grid, &k1, &k2),
        OperatorChoice::Nonlocal1 => assemble_nonlocal(grid, grid.r1, &k1),
        OperatorChoice::Nonlocal2 => assemble_nonlocal(grid, grid.r2, &k2),
        OperatorChoice::Local => Ok(assemble_local(grid)),
    }
}
