use std::io::Write;

use super::cases::{build_operator, OperatorChoice};
use crate::dynamics::{TimeStepper, ZeroSource, DEFAULT_KAPPA};
use crate::error::{QnlError, Result};
use crate::grid::{build_grid, GridField};
use crate::kernel::ScalelessKernel;

#[derive(Debug, Clone, Copy)]
pub struct SingularConfig {
    pub n_half: usize,
    pub r1: usize,
    pub r2: usize,
    pub t_final: f64,
    pub kappa: f64,
    pub kernel: ScalelessKernel,
}

impl Default for SingularConfig {
    fn default() -> Self {
        SingularConfig { n_half: 200, r1: 5, r2: 1, t_final: 0.25, kappa: DEFAULT_KAPPA, kernel: ScalelessKernel::INVERSE_DISTANCE }
    }
}

impl SingularConfig {
    /// Pole of the initial datum, half a cell right of `x = -0.45`.
    pub fn pole(&self) -> f64 {
        -0.45 + 0.5 / self.n_half as f64
    }
}

/// Final fields of the coupled, long-horizon and local models started from
/// `sin(πx) / (x - x*)` with no source.
#[derive(Debug, Clone)]
pub struct SingularComparison {
    pub qnl: GridField,
    pub nonlocal: GridField,
    pub local: GridField,
    /// `‖u_qnl - u_nonlocal‖_∞`
    pub qnl_vs_nonlocal: f64,
    /// `‖u_local - u_nonlocal‖_∞`
    pub local_vs_nonlocal: f64,
}

fn sup_diff(a: &GridField, b: &GridField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn singular_comparison(cfg: &SingularConfig) -> Result<SingularComparison> {
    let grid = build_grid(cfg.n_half, cfg.r1, cfg.r2)?;
    let pole = cfg.pole();
    let mut u0 = GridField::sample(grid, |x| (std::f64::consts::PI * x).sin() / (x - pole));
    u0.apply_constraints();
    if u0.values().iter().any(|v| !v.is_finite()) {
        return Err(QnlError::Config(format!(
            "pole x* = {pole} falls on a grid node for n_half = {}",
            cfg.n_half
        )));
    }
    let choices = [OperatorChoice::Qnl, OperatorChoice::Nonlocal1, OperatorChoice::Local];
    let mut fields = Vec::with_capacity(3);
    for choice in choices {
        let op = build_operator(grid, choice, cfg.kernel)?;
        let stepper = TimeStepper::new(&op, cfg.kappa, cfg.t_final, Box::new(ZeroSource))?;
        fields.push(stepper.run(&u0)?.final_field);
    }
    let local = fields.pop().expect("three runs");
    let nonlocal = fields.pop().expect("three runs");
    let qnl = fields.pop().expect("three runs");
    Ok(SingularComparison {
        qnl_vs_nonlocal: sup_diff(&qnl, &nonlocal),
        local_vs_nonlocal: sup_diff(&local, &nonlocal),
        qnl,
        nonlocal,
        local,
    })
}

impl SingularComparison {
    /// `x,u_qnl,u_nonlocal,u_local` rows on `[-1, 1]`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let g = self.qnl.grid;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "u_qnl", "u_nonlocal", "u_local"])?;
        for i in 0..=g.last() {
            w.write_record([
                crate::fmt_sci(g.x(i)),
                crate::fmt_sci(self.qnl.get(i)),
                crate::fmt_sci(self.nonlocal.get(i)),
                crate::fmt_sci(self.local.get(i)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!(
            "qnl_vs_nonlocal={} local_vs_nonlocal={} qnl_closer={}",
            crate::fmt_sci(self.qnl_vs_nonlocal),
            crate::fmt_sci(self.local_vs_nonlocal),
            self.qnl_vs_nonlocal < self.local_vs_nonlocal
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_comparison_orders_the_models() {
        let cfg = SingularConfig { n_half: 40, t_final: 0.05, ..Default::default() };
        let c = singular_comparison(&cfg).unwrap();
        assert!(c.qnl_vs_nonlocal < c.local_vs_nonlocal);
        for f in [&c.qnl, &c.nonlocal, &c.local] {
            for i in f.grid.padded().filter(|&i| !f.grid.is_interior(i)) {
                assert_eq!(f.get(i), 0.0);
            }
        }
        let again = singular_comparison(&cfg).unwrap();
        assert_eq!(c.summary(), again.summary());
    }

    #[test]
    fn pole_on_node_is_rejected() {
        let cfg = SingularConfig { n_half: 50, t_final: 0.01, ..Default::default() };
        assert!(matches!(singular_comparison(&cfg), Err(QnlError::Config(_))));
    }
}
