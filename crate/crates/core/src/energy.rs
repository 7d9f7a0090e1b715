//! Continuous energies by tensor-product quadrature, and the discrete
//! energy / first-variation pair tied to the assembled operators.
//!
//! All continuous functionals are written over ordered pairs `x < y = x + s`:
//! `E(u) = (1/2) ∫ ∫_0^δ s² γ_δ(s) q(x, s)² ds dx` with the difference
//! quotient `q(x, s) = (u(x + s) - u(x)) / s`, so the kernel singularity at
//! `s = 0` never has to be sampled.

use rayon::prelude::*;

use crate::assembly::DiffusionOperator;
use crate::error::{QnlError, Result};
use crate::grid::GridField;
use crate::kernel::ScalelessKernel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// Plain nonlocal energy with one horizon.
    Delta { delta: f64 },
    /// Long horizon with every bond reconstructed from `ratio` short ones.
    Reconstructed { delta1: f64, ratio: usize },
    /// Plain for pairs whose left end is at `x <= 0`, reconstructed otherwise.
    Coupled { delta1: f64, ratio: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyValue {
    /// Richardson-extrapolated value from `cells` and `2 cells` panels.
    pub value: f64,
    /// `|E(2 cells) - E(cells)| / 3`.
    pub error_estimate: f64,
    pub cells: usize,
    pub functional: Functional,
}

/// Midpoint-in-`x`, annulus-weighted-in-`s` quadrature for functions that
/// vanish outside `[-support, support]`.
#[derive(Debug, Clone, Copy)]
pub struct EnergyQuadrature {
    pub kernel: ScalelessKernel,
    pub support: f64,
    /// Panels per axis on the coarse level; must be even and at least 64.
    pub cells: usize,
}

impl EnergyQuadrature {
    pub fn new(kernel: ScalelessKernel, support: f64, cells: usize) -> Result<Self> {
        if cells < 64 || cells % 2 != 0 {
            return Err(QnlError::config(format!("quadrature needs an even cell count >= 64, got {cells}")));
        }
        if !(support > 0.0) {
            return Err(QnlError::config("support half-width must be positive"));
        }
        Ok(EnergyQuadrature { kernel, support, cells })
    }

    pub fn energy_delta(&self, u: &(dyn Fn(f64) -> f64 + Sync), delta: f64) -> Result<EnergyValue> {
        self.extrapolate(Functional::Delta { delta }, |cells| self.level(u, delta, cells, |_| Pair::Plain))
    }

    pub fn energy_gr(&self, u: &(dyn Fn(f64) -> f64 + Sync), delta1: f64, ratio: usize) -> Result<EnergyValue> {
        check_ratio(ratio)?;
        self.extrapolate(Functional::Reconstructed { delta1, ratio }, |cells| {
            self.level(u, delta1, cells, |_| Pair::Reconstructed(ratio))
        })
    }

    pub fn energy_qnl(&self, u: &(dyn Fn(f64) -> f64 + Sync), delta1: f64, ratio: usize) -> Result<EnergyValue> {
        check_ratio(ratio)?;
        self.extrapolate(Functional::Coupled { delta1, ratio }, |cells| {
            self.level(u, delta1, cells, |x| if x <= 0.0 { Pair::Plain } else { Pair::Reconstructed(ratio) })
        })
    }

    fn extrapolate(&self, functional: Functional, level: impl Fn(usize) -> Result<f64>) -> Result<EnergyValue> {
        let coarse = level(self.cells)?;
        let fine = level(2 * self.cells)?;
        Ok(EnergyValue {
            value: fine + (fine - coarse) / 3.0,
            error_estimate: (fine - coarse).abs() / 3.0,
            cells: self.cells,
            functional,
        })
    }

    fn level(
        &self,
        u: &(dyn Fn(f64) -> f64 + Sync),
        delta: f64,
        cells: usize,
        pair: impl Fn(f64) -> Pair + Sync,
    ) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(QnlError::config("horizon must be positive"));
        }
        // symmetric window, so x = 0 is a panel edge when `cells` is even
        let half = self.support + delta;
        let dx = 2.0 * half / cells as f64;
        let ds = delta / cells as f64;
        let sk = self.kernel.scaled(delta)?;
        let weights: Vec<(f64, f64)> = (0..cells)
            .map(|k| {
                let (a, b) = (k as f64 / cells as f64, (k + 1) as f64 / cells as f64);
                // ∫ s² γ_δ(s) ds over the panel, in scaled variables
                Ok(((k as f64 + 0.5) * ds, sk.base.weighted_integral(a, b)?))
            })
            .collect::<Result<_>>()?;
        let rows: Vec<f64> = (0..cells)
            .into_par_iter()
            .map(|i| {
                let x = -half + (i as f64 + 0.5) * dx;
                let mode = pair(x);
                let mut acc = 0.0;
                for &(s, w) in &weights {
                    let q2 = match mode {
                        Pair::Plain => {
                            let q = (u(x + s) - u(x)) / s;
                            q * q
                        }
                        Pair::Reconstructed(m) => {
                            let sub = s / m as f64;
                            let mut t = 0.0;
                            for k in 0..m {
                                let a = x + k as f64 * sub;
                                let q = (u(a + sub) - u(a)) / sub;
                                t += q * q;
                            }
                            t / m as f64
                        }
                    };
                    acc += w * q2;
                }
                acc
            })
            .collect();
        Ok(0.5 * dx * rows.iter().sum::<f64>())
    }
}

#[derive(Clone, Copy)]
enum Pair {
    Plain,
    Reconstructed(usize),
}

fn check_ratio(ratio: usize) -> Result<()> {
    if ratio == 0 {
        return Err(QnlError::config("horizon ratio must be at least 1"));
    }
    Ok(())
}

/// Discrete energy of `u` for the assembled coupled operator.
pub fn discrete_energy_qnl(op: &DiffusionOperator, u: &GridField) -> Result<f64> {
    op.discrete_energy(u)
}

/// `-(E(u + ε e_i) - E(u - ε e_i)) / (2 ε h)` at every interior node.
pub fn first_variation_oracle(op: &DiffusionOperator, u: &GridField, eps: f64) -> Result<GridField> {
    if !(1e-7..=1e-4).contains(&eps) {
        return Err(QnlError::config(format!("oracle step must lie in [1e-7, 1e-4], got {eps}")));
    }
    let g = op.grid;
    let mut out = GridField::zeros(g);
    let mut w = u.clone();
    for i in g.interior() {
        let base = u.get(i);
        w.set(i, base + eps);
        let plus = op.discrete_energy(&w)?;
        w.set(i, base - eps);
        let minus = op.discrete_energy(&w)?;
        w.set(i, base);
        out.set(i, -(plus - minus) / (2.0 * eps * g.h()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_nonlocal, assemble_qnl};
    use crate::grid::build_grid;
    use approx::assert_relative_eq;

    fn quad(cells: usize) -> EnergyQuadrature {
        EnergyQuadrature::new(ScalelessKernel::INVERSE_DISTANCE, 1.12, cells).unwrap()
    }

    fn bump(x: f64) -> f64 {
        if x.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - x * x).powi(4) * (1.0 + 0.3 * (3.0 * x).sin())
        }
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let q = quad(64);
        assert_eq!(q.energy_delta(&|_| 0.0, 0.1).unwrap().value, 0.0);
        assert_eq!(q.energy_gr(&|_| 0.0, 0.1, 3).unwrap().value, 0.0);
        assert_eq!(q.energy_qnl(&|_| 0.0, 0.1, 3).unwrap().value, 0.0);
    }

    #[test]
    fn quadratic_scaling() {
        let q = quad(64);
        let e1 = q.energy_delta(&bump, 0.12).unwrap().value;
        let e3 = q.energy_delta(&|x| 3.0 * bump(x), 0.12).unwrap().value;
        assert_relative_eq!(e3, 9.0 * e1, max_relative = 1e-12);
    }

    #[test]
    fn unit_ratio_reconstruction_is_plain() {
        let q = quad(64);
        let a = q.energy_gr(&bump, 0.12, 1).unwrap().value;
        let b = q.energy_delta(&bump, 0.12).unwrap().value;
        assert_eq!(a, b);
    }

    #[test]
    fn matches_discrete_quadratic_form() {
        let g = build_grid(50, 6, 2).unwrap();
        let f = |x: f64| if x.abs() <= 1.0 { x * x * (1.0 - x * x) } else { 0.0 };
        let cont = quad(512).energy_delta(&f, 0.12).unwrap().value;
        let op = assemble_nonlocal(g, 6, &ScalelessKernel::INVERSE_DISTANCE.scaled(0.12).unwrap()).unwrap();
        let disc = op.discrete_energy(&GridField::sample(g, f)).unwrap();
        assert!((cont - disc).abs() < 0.02 * cont, "{cont} vs {disc}");
    }

    #[test]
    fn left_supported_field_sees_plain_energy() {
        let q = quad(128);
        let f = |x: f64| bump(4.0 * (x + 0.6));
        let a = q.energy_qnl(&f, 0.12, 3).unwrap();
        let b = q.energy_delta(&f, 0.12).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn right_supported_field_sees_short_horizon() {
        let q = quad(256);
        let f = |x: f64| bump(4.0 * (x - 0.6));
        let a = q.energy_qnl(&f, 0.12, 3).unwrap();
        let b = q.energy_delta(&f, 0.04).unwrap();
        let tol = 3.0 * (a.error_estimate + b.error_estimate);
        assert!((a.value - b.value).abs() <= tol.max(1e-8), "{} vs {}", a.value, b.value);
    }

    #[test]
    fn oracle_reproduces_operator() {
        let g = build_grid(50, 6, 2).unwrap();
        let k1 = ScalelessKernel::INVERSE_DISTANCE.scaled(g.delta1()).unwrap();
        let k2 = ScalelessKernel::INVERSE_DISTANCE.scaled(g.delta2()).unwrap();
        let op = assemble_qnl(g, &k1, &k2).unwrap();
        let mut u = GridField::sample(g, |x| (2.0 * x).cos() * (1.0 - x * x));
        u.apply_constraints();
        let au = op.apply(&u).unwrap();
        let oracle = first_variation_oracle(&op, &u, 1e-5).unwrap();
        let scale = au.max_abs_interior();
        for i in g.interior() {
            assert!((oracle.get(i) - au.get(i)).abs() <= 1e-6 * scale + 1e-8);
        }
        let zero = first_variation_oracle(&op, &GridField::zeros(g), 1e-5).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
        assert!(first_variation_oracle(&op, &u, 1e-2).is_err());
    }

    #[test]
    fn rejects_coarse_quadrature() {
        assert!(EnergyQuadrature::new(ScalelessKernel::INVERSE_DISTANCE, 1.0, 32).is_err());
        assert!(EnergyQuadrature::new(ScalelessKernel::INVERSE_DISTANCE, 1.0, 65).is_err());
    }
}
