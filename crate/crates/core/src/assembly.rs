//! Operator assembly from symmetric pair weights.
//!
//! Every operator is stored as a field of pair weights `K(a, b) = K(b, a)`
//! over the padded index range and acts as
//! `(A u)_i = Σ_b K(i, b) (u_b - u_i)`. One stored number per pair makes the
//! matrix symmetric by construction, and the difference form annihilates
//! constants row by row.

use std::io::Write;

use crate::error::{QnlError, Result};
use crate::grid::{Grid1D, GridField};
use crate::kernel::ScaledKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Nonlocal { r: usize },
    Qnl { r1: usize, r2: usize },
    Local,
}

/// Symmetric banded nonlocal operator over a padded grid.
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    pub grid: Grid1D,
    pub kind: OperatorKind,
    width: usize,
    /// `bands[d - 1][slot(a)] = K(a, a + d)`.
    bands: Vec<Vec<f64>>,
}

impl DiffusionOperator {
    fn empty(grid: Grid1D, kind: OperatorKind, width: usize) -> Self {
        DiffusionOperator { grid, kind, width, bands: vec![vec![0.0; grid.len()]; width] }
    }

    /// Maximum pair distance in grid units.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Pair weight between padded nodes `a` and `b` (zero on the diagonal).
    pub fn pair_weight(&self, a: isize, b: isize) -> f64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let d = (hi - lo) as usize;
        if d == 0 || d > self.width || lo < self.grid.first_padded() || hi > self.grid.last_padded() {
            return 0.0;
        }
        self.bands[d - 1][self.grid.slot(lo)]
    }

    fn add_pair(&mut self, a: isize, b: isize, w: f64) {
        debug_assert!(a < b);
        let slot = self.grid.slot(a);
        self.bands[(b - a) as usize - 1][slot] += w;
    }

    /// Calls `f(b, K(i, b))` for every stored partner of node `i`, in
    /// increasing order of `b`.
    pub fn for_each_partner(&self, i: isize, mut f: impl FnMut(isize, f64)) {
        let g = &self.grid;
        for d in (1..=self.width as isize).rev() {
            if i - d >= g.first_padded() {
                f(i - d, self.bands[d as usize - 1][g.slot(i - d)]);
            }
        }
        for d in 1..=self.width as isize {
            if i + d <= g.last_padded() {
                f(i + d, self.bands[d as usize - 1][g.slot(i)]);
            }
        }
    }

    /// Matrix entry of the operator restricted to interior nodes.
    pub fn entry(&self, i: isize, j: isize) -> f64 {
        if i == j {
            let mut s = 0.0;
            self.for_each_partner(i, |_, w| s += w);
            -s
        } else {
            self.pair_weight(i, j)
        }
    }

    /// Largest `|j - i|` with a non-zero coupling in row `i`.
    pub fn row_bandwidth(&self, i: isize) -> usize {
        let mut bw = 0;
        self.for_each_partner(i, |b, w| {
            if w != 0.0 {
                bw = bw.max((b - i).unsigned_abs());
            }
        });
        bw
    }

    /// `max_i |A_ii|` over interior rows.
    pub fn max_diagonal(&self) -> f64 {
        self.grid.interior().map(|i| self.entry(i, i).abs()).fold(0.0, f64::max)
    }

    /// `A u` on interior nodes with the constrained values of `u` folded in;
    /// constrained entries of the result are zero.
    pub fn apply(&self, u: &GridField) -> Result<GridField> {
        if u.grid != self.grid {
            return Err(QnlError::GridMismatch);
        }
        let mut out = GridField::zeros(self.grid);
        let stencil = self.stencil();
        stencil.apply_into(u.values(), out.values_mut());
        Ok(out)
    }

    /// Row-wise stencil in flat form for tight loops.
    pub fn stencil(&self) -> Stencil {
        let g = self.grid;
        let mut start = Vec::with_capacity(2 * g.n_half);
        let mut offset = Vec::new();
        let mut weight = Vec::new();
        for i in g.interior() {
            start.push(offset.len());
            self.for_each_partner(i, |b, w| {
                if w != 0.0 {
                    offset.push(b - i);
                    weight.push(w);
                }
            });
        }
        start.push(offset.len());
        Stencil { first_slot: g.slot(1), start, offset, weight }
    }

    /// Dense matrix over interior nodes `1..2N-1`, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let g = self.grid;
        g.interior()
            .map(|i| g.interior().map(|j| self.entry(i, j)).collect())
            .collect()
    }

    pub fn write_dense_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.to_dense() {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `(1/2) Σ_pairs K (u_b - u_a)²` scaled by `h`: the discrete energy
    /// whose negative gradient, divided by `h`, is `A u`.
    pub fn discrete_energy(&self, u: &GridField) -> Result<f64> {
        if u.grid != self.grid {
            return Err(QnlError::GridMismatch);
        }
        let g = self.grid;
        let v = u.values();
        let mut e = 0.0;
        for (d, band) in self.bands.iter().enumerate() {
            let d = d + 1;
            for s in 0..g.len().saturating_sub(d) {
                let diff = v[s + d] - v[s];
                e += band[s] * diff * diff;
            }
        }
        Ok(0.5 * g.h() * e)
    }
}

/// Flattened interior rows of an operator.
#[derive(Debug, Clone)]
pub struct Stencil {
    first_slot: usize,
    start: Vec<usize>,
    offset: Vec<isize>,
    weight: Vec<f64>,
}

impl Stencil {
    /// Writes `(A u)_i` into `out` for each interior slot; other slots are
    /// left untouched.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        for (row, w) in self.start.windows(2).enumerate() {
            let s = self.first_slot + row;
            let ui = u[s];
            let mut acc = 0.0;
            for k in w[0]..w[1] {
                acc += self.weight[k] * (u[(s as isize + self.offset[k]) as usize] - ui);
            }
            out[s] = acc;
        }
    }

    /// `u_next = u + dt (A u + f)` on interior slots.
    pub fn euler_into(&self, u: &[f64], f: &[f64], dt: f64, next: &mut [f64]) {
        for (row, w) in self.start.windows(2).enumerate() {
            let s = self.first_slot + row;
            let ui = u[s];
            let mut acc = 0.0;
            for k in w[0]..w[1] {
                acc += self.weight[k] * (u[(s as isize + self.offset[k]) as usize] - ui);
            }
            next[s] = ui + dt * (acc + f[s]);
        }
    }

    pub fn rows(&self) -> usize {
        self.start.len() - 1
    }
}

fn check_horizon(grid: &Grid1D, kernel: &ScaledKernel, r: usize) -> Result<Vec<f64>> {
    kernel.annulus_weights(grid.h(), r)
}

/// Pair coefficients `c_j = w_j / (j h)²`.
fn pair_coefficients(grid: &Grid1D, weights: &[f64]) -> Vec<f64> {
    let h = grid.h();
    weights
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let s = (k + 1) as f64 * h;
            w / (s * s)
        })
        .collect()
}

/// Riemann-sum nonlocal operator with horizon `r h` applied on the whole grid.
pub fn assemble_nonlocal(grid: Grid1D, r: usize, kernel: &ScaledKernel) -> Result<DiffusionOperator> {
    if r > grid.pad {
        return Err(QnlError::config(format!("horizon r = {r} exceeds grid padding {}", grid.pad)));
    }
    let c = pair_coefficients(&grid, &check_horizon(&grid, kernel, r)?);
    let mut op = DiffusionOperator::empty(grid, OperatorKind::Nonlocal { r }, r);
    for (k, band) in op.bands.iter_mut().enumerate() {
        let d = k + 1;
        let n = grid.len() - d;
        band[..n].fill(c[k]);
    }
    Ok(op)
}

/// Three-point Laplacian `(u_{i+1} - 2u_i + u_{i-1}) / h²`.
pub fn assemble_local(grid: Grid1D) -> DiffusionOperator {
    let mut op = DiffusionOperator::empty(grid, OperatorKind::Local, 1);
    let h = grid.h();
    let n = grid.len() - 1;
    op.bands[0][..n].fill(1.0 / (h * h));
    op
}

/// Quasinonlocal operator.
///
/// A bond `(a, a + j)` whose left end lies at or left of the interface keeps
/// its plain long-range weight `c_j`. A bond entirely to the right of the
/// interface is replaced by the chain of `M` sub-bonds between the nodes
/// `a + ⌊l j / M⌋`, `l = 0..=M`; a sub-bond spanning `d` cells carries
/// `c_j j / d`. Each bond's chain telescopes, so affine fields are
/// annihilated, and Cauchy–Schwarz over the chain gives dominance over the
/// plain long-range energy.
pub fn assemble_qnl(grid: Grid1D, kernel1: &ScaledKernel, kernel2: &ScaledKernel) -> Result<DiffusionOperator> {
    if kernel1.base.name != kernel2.base.name {
        return Err(QnlError::config(format!(
            "both horizons must share one scaleless kernel (got `{}` and `{}`)",
            kernel1.base.name, kernel2.base.name
        )));
    }
    // validates δ2 = r2 h
    check_horizon(&grid, kernel2, grid.r2)?;
    let c = pair_coefficients(&grid, &check_horizon(&grid, kernel1, grid.r1)?);
    let (r1, ratio) = (grid.r1, grid.ratio);
    let mut op = DiffusionOperator::empty(grid, OperatorKind::Qnl { r1, r2: grid.r2 }, r1);
    let m = grid.interface();
    for a in grid.padded() {
        for j in 1..=r1 {
            let b = a + j as isize;
            if b > grid.last_padded() {
                break;
            }
            let cj = c[j - 1];
            if a <= m {
                op.add_pair(a, b, cj);
                continue;
            }
            let mut prev = a;
            for l in 1..=ratio {
                let next = a + (l * j / ratio) as isize;
                if next > prev {
                    let d = (next - prev) as f64;
                    op.add_pair(prev, next, cj * j as f64 / d);
                    prev = next;
                }
            }
        }
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::kernel::ScalelessKernel;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn kernels(g: &Grid1D) -> (ScaledKernel, ScaledKernel) {
        (
            ScalelessKernel::INVERSE_DISTANCE.scaled(g.delta1()).unwrap(),
            ScalelessKernel::INVERSE_DISTANCE.scaled(g.delta2()).unwrap(),
        )
    }

    fn qnl(n: usize, r1: usize, r2: usize) -> DiffusionOperator {
        let g = build_grid(n, r1, r2).unwrap();
        let (k1, k2) = kernels(&g);
        assemble_qnl(g, &k1, &k2).unwrap()
    }

    #[test]
    fn nonlocal_with_unit_horizon_is_three_point() {
        let g = build_grid(20, 1, 1).unwrap();
        let nl = assemble_nonlocal(g, 1, &ScalelessKernel::INVERSE_DISTANCE.scaled(g.h()).unwrap()).unwrap();
        let loc = assemble_local(g);
        for i in g.interior() {
            for j in g.interior() {
                assert_relative_eq!(nl.entry(i, j), loc.entry(i, j), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn local_on_quadratic() {
        let g = build_grid(20, 2, 1).unwrap();
        let u = GridField::sample(g, |x| x * x);
        let lu = assemble_local(g).apply(&u).unwrap();
        for i in g.interior() {
            assert_relative_eq!(lu.get(i), 2.0, max_relative = 1e-9);
        }
        assert_eq!(lu.get(0), 0.0);
    }

    #[test]
    fn zero_and_affine_fields() {
        let op = qnl(50, 6, 2);
        let z = op.apply(&GridField::zeros(op.grid)).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        let u = GridField::sample(op.grid, |x| 3.0 * x - 0.7);
        let au = op.apply(&u).unwrap();
        let h = op.grid.h();
        assert!(au.max_abs_interior() <= 1e-12 * 3.7 / (h * h));
    }

    #[test]
    fn case_a_bandwidths() {
        let op = qnl(50, 6, 2);
        let m = op.grid.interface();
        for i in op.grid.interior() {
            let bw = op.row_bandwidth(i);
            if i <= m {
                assert_eq!(bw, 6, "row {i}");
            } else if i > m + 6 {
                assert!(bw <= 2, "row {i} has bandwidth {bw}");
            }
        }
    }

    #[test]
    fn left_rows_match_long_range_operator() {
        let op = qnl(50, 6, 2);
        let g = op.grid;
        let nl = assemble_nonlocal(g, 6, &kernels(&g).0).unwrap();
        for i in g.interior().filter(|&i| i <= g.interface()) {
            for j in g.padded() {
                assert_eq!(op.pair_weight(i, j), nl.pair_weight(i, j));
            }
        }
    }

    #[test]
    fn unit_ratio_is_plain_nonlocal() {
        let op = qnl(40, 4, 4);
        let g = op.grid;
        let nl = assemble_nonlocal(g, 4, &kernels(&g).0).unwrap();
        for i in g.interior() {
            for j in g.interior() {
                let (a, b) = (op.entry(i, j), nl.entry(i, j));
                assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn couplings_are_non_negative() {
        for (r1, r2) in [(6, 2), (3, 1), (4, 2), (5, 1), (6, 1)] {
            let op = qnl(50, r1, r2);
            for a in op.grid.padded() {
                for b in a + 1..=a + r1 as isize {
                    assert!(op.pair_weight(a, b) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn mismatched_kernels_rejected() {
        let g = build_grid(50, 6, 2).unwrap();
        let k1 = ScalelessKernel::INVERSE_DISTANCE.scaled(g.delta1()).unwrap();
        let k2 = ScalelessKernel::CONSTANT.scaled(g.delta2()).unwrap();
        assert!(assemble_qnl(g, &k1, &k2).is_err());
        let bad = ScalelessKernel::INVERSE_DISTANCE.scaled(g.delta1()).unwrap();
        assert!(assemble_qnl(g, &k1, &bad).is_err());
    }

    #[test]
    fn energy_gradient_is_operator() {
        let op = qnl(20, 4, 2);
        let g = op.grid;
        let mut u = GridField::sample(g, |x| (3.0 * x).sin() + x * x);
        u.apply_constraints();
        let au = op.apply(&u).unwrap();
        let eps = 1e-5;
        for i in g.interior() {
            let mut p = u.clone();
            p.set(i, u.get(i) + eps);
            let mut q = u.clone();
            q.set(i, u.get(i) - eps);
            let d = -(op.discrete_energy(&p).unwrap() - op.discrete_energy(&q).unwrap()) / (2.0 * eps * g.h());
            assert!((d - au.get(i)).abs() <= 1e-6 * au.max_abs_interior());
        }
    }

    #[test]
    fn dense_dump_shape() {
        let op = qnl(8, 2, 1);
        let mut buf = Vec::new();
        op.write_dense_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 15);
        assert!(text.lines().all(|l| l.split(',').count() == 15));
    }

    proptest! {
        #[test]
        fn patch_test_any_ratio(n in 12usize..80, r2 in 1usize..4, ratio in 1usize..5,
                                slope in -10.0f64..10.0, shift in -10.0f64..10.0) {
            let r1 = r2 * ratio;
            prop_assume!(n >= 2 * r1);
            let op = qnl(n, r1, r2);
            let u = GridField::sample(op.grid, |x| slope * x + shift);
            let au = op.apply(&u).unwrap();
            let h = op.grid.h();
            prop_assert!(au.max_abs_interior() <= 1e-12 * (slope.abs() + shift.abs()) / (h * h));
        }

        #[test]
        fn dominance_over_long_range(n in 12usize..60, r2 in 1usize..4, ratio in 1usize..5, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let r1 = r2 * ratio;
            prop_assume!(n >= 2 * r1);
            let op = qnl(n, r1, r2);
            let g = op.grid;
            let nl = assemble_nonlocal(g, r1, &kernels(&g).0).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let mut u = GridField::sample(g, |_| rng.gen_range(-1.0..1.0));
            u.apply_constraints();
            let eq = op.discrete_energy(&u).unwrap();
            let en = nl.discrete_energy(&u).unwrap();
            prop_assert!(eq >= en - 1e-10 * en.max(1.0));
        }
    }
}
