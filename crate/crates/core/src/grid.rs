//! Uniform mesh on `[-1, 1]` padded by the larger horizon on each side.

use std::io::Write;

use crate::error::{QnlError, Result};

/// Uniform grid with `2N` subintervals on `[-1, 1]`, interface at `x = 0`.
///
/// Node `i` sits at `x_i = (i - N)/N`. Indices run over `-pad..=2N + pad`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid1D {
    pub n_half: usize,
    /// Long horizon in grid units.
    pub r1: usize,
    /// Short horizon in grid units.
    pub r2: usize,
    /// Ratio `r1 / r2`.
    pub ratio: usize,
    pub pad: usize,
}

pub fn build_grid(n_half: usize, r1: usize, r2: usize) -> Result<Grid1D> {
    if r1 == 0 || r2 == 0 {
        return Err(QnlError::config("horizons must be at least one cell"));
    }
    if r1 % r2 != 0 {
        return Err(QnlError::config(format!(
            "M must be an integer: r1 = {r1} is not a multiple of r2 = {r2}"
        )));
    }
    if n_half < 2 * r1 {
        return Err(QnlError::config(format!(
            "horizon r1 = {r1} too wide for n_half = {n_half} (need n_half >= 2*r1)"
        )));
    }
    Ok(Grid1D { n_half, r1, r2, ratio: r1 / r2, pad: r1 })
}

impl Grid1D {
    pub fn h(&self) -> f64 {
        1.0 / self.n_half as f64
    }

    pub fn delta1(&self) -> f64 {
        self.r1 as f64 / self.n_half as f64
    }

    pub fn delta2(&self) -> f64 {
        self.r2 as f64 / self.n_half as f64
    }

    /// Grid index of `x = 0`.
    pub fn interface(&self) -> isize {
        self.n_half as isize
    }

    /// Last node index on `[-1, 1]` (`x = 1`).
    pub fn last(&self) -> isize {
        2 * self.n_half as isize
    }

    pub fn first_padded(&self) -> isize {
        -(self.pad as isize)
    }

    pub fn last_padded(&self) -> isize {
        self.last() + self.pad as isize
    }

    /// Number of stored nodes including the padding.
    pub fn len(&self) -> usize {
        2 * self.n_half + 2 * self.pad + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: isize) -> f64 {
        (i - self.n_half as isize) as f64 / self.n_half as f64
    }

    /// Nodes `1..2N-1` evolve; everything else carries volume data.
    pub fn is_interior(&self, i: isize) -> bool {
        i >= 1 && i < self.last()
    }

    pub fn interior(&self) -> std::ops::Range<isize> {
        1..self.last()
    }

    pub fn padded(&self) -> std::ops::RangeInclusive<isize> {
        self.first_padded()..=self.last_padded()
    }

    pub(crate) fn slot(&self, i: isize) -> usize {
        (i + self.pad as isize) as usize
    }
}

/// Nodal values over the padded index range.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid1D,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Grid1D) -> Self {
        GridField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn sample(grid: Grid1D, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = grid.padded().map(|i| f(grid.x(i))).collect();
        GridField { grid, values }
    }

    pub fn from_values(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(QnlError::GridMismatch);
        }
        Ok(GridField { grid, values })
    }

    pub fn get(&self, i: isize) -> f64 {
        self.values[self.grid.slot(i)]
    }

    pub fn set(&mut self, i: isize, v: f64) {
        let s = self.grid.slot(i);
        self.values[s] = v;
    }

    /// Raw storage; slot `k` holds node `k - pad`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Sets every constrained node (`i <= 0`, `i >= 2N`) to `g(x_i)`.
    pub fn apply_constraints_with(&mut self, g: impl Fn(f64) -> f64) {
        let grid = self.grid;
        for i in grid.padded().filter(|&i| !grid.is_interior(i)) {
            self.set(i, g(grid.x(i)));
        }
    }

    /// Homogeneous volume constraint.
    pub fn apply_constraints(&mut self) {
        self.apply_constraints_with(|_| 0.0);
    }

    pub fn max_abs_interior(&self) -> f64 {
        self.grid.interior().map(|i| self.get(i).abs()).fold(0.0, f64::max)
    }

    /// Writes `index,x,<column>` rows for every padded node.
    pub fn write_csv<W: Write>(&self, out: W, column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "x", column])?;
        for i in self.grid.padded() {
            w.write_record([
                i.to_string(),
                crate::fmt_sci(self.grid.x(i)),
                crate::fmt_sci(self.get(i)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_a_grid() {
        let g = build_grid(50, 6, 2).unwrap();
        assert_eq!(g.ratio, 3);
        assert_eq!(g.h(), 0.02);
        assert!((g.delta1() - 0.12).abs() < 1e-15);
        assert_eq!(g.len(), 101 + 12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_grid(50, 5, 2).is_err());
        assert!(build_grid(5, 3, 1).is_err());
        assert!(build_grid(50, 0, 1).is_err());
        assert!(build_grid(50, 3, 1).is_ok());
    }

    #[test]
    fn landmark_coordinates_are_exact() {
        for n in [50, 100, 200, 400, 7] {
            let g = build_grid(n, 3, 1).unwrap();
            assert_eq!(g.x(0), -1.0);
            assert_eq!(g.x(g.interface()), 0.0);
            assert_eq!(g.x(g.last()), 1.0);
        }
    }

    #[test]
    fn sampling_and_constraints() {
        let g = build_grid(50, 6, 2).unwrap();
        let u = GridField::sample(g, |x| x * x * (1.0 - x * x));
        assert_eq!(u.get(g.interface()), 0.0);
        let mut c = u.clone();
        c.apply_constraints();
        for i in g.padded() {
            if g.is_interior(i) {
                assert_eq!(c.get(i), u.get(i));
            } else {
                assert_eq!(c.get(i), 0.0);
            }
        }
    }

    #[test]
    fn singular_datum_is_finite_on_nodes() {
        let g = build_grid(200, 5, 1).unwrap();
        let xs = -0.45 + g.h() / 2.0;
        let u = GridField::sample(g, |x| (std::f64::consts::PI * x).sin() / (x - xs));
        assert!(u.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn csv_rows() {
        let g = build_grid(4, 2, 1).unwrap();
        let u = GridField::sample(g, |x| x);
        let mut buf = Vec::new();
        u.write_csv(&mut buf, "u").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), g.len() + 1);
        assert!(text.starts_with("index,x,u\n-2,-1.50000e0,-1.50000e0\n"));
    }
}
