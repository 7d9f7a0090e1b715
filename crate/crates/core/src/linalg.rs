//! Banded Cholesky and inverse iteration for the bottom of the spectrum of
//! `-A` restricted to interior nodes.

use crate::assembly::DiffusionOperator;
use crate::error::{QnlError, Result};

/// Lower Cholesky factor of a symmetric positive definite band matrix.
struct BandCholesky {
    n: usize,
    bw: usize,
    /// `l[i][k]` holds `L[i][i - bw + k]`, `k = 0..=bw`.
    l: Vec<Vec<f64>>,
}

impl BandCholesky {
    fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut l = vec![vec![0.0; bw + 1]; n];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = entry(i, j);
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i][k + bw - i] * l[j][k + bw - j];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(QnlError::Linalg(format!("matrix not positive definite at row {i}")));
                    }
                    l[i][bw] = s.sqrt();
                } else {
                    l[i][j + bw - i] = s / l[j][bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    fn solve(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i][k + bw - i] * b[k];
            }
            b[i] = s / self.l[i][bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k][i + bw - k] * b[k];
            }
            b[i] = s / self.l[i][bw];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// `‖(-A) v - λ v‖₂ / |λ|` for the unit vector `v`.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenvalue of `-A` on interior nodes by inverse iteration.
///
/// Fails if `-A` is not positive definite, which is itself the answer to
/// the stability question.
pub fn smallest_eigenvalue(op: &DiffusionOperator, tol: f64, max_iter: usize) -> Result<Eigenpair> {
    let g = op.grid;
    let n = 2 * g.n_half - 1;
    let bw = op.width();
    let node = |k: usize| k as isize + 1;
    let neg = |i: usize, j: usize| -op.entry(node(i), node(j));
    let chol = BandCholesky::factor(n, bw, neg)?;
    let matvec = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw + 1).min(n);
            out[i] = (lo..hi).map(|j| neg(i, j) * v[j]).sum();
        }
    };
    // smooth positive start overlaps the ground state
    let mut v: Vec<f64> = (0..n).map(|k| (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).sin()).collect();
    normalize(&mut v);
    let mut av = vec![0.0; n];
    let mut last = Eigenpair { value: f64::NAN, residual: f64::INFINITY, iterations: 0 };
    for it in 1..=max_iter {
        chol.solve(&mut v);
        normalize(&mut v);
        matvec(&v, &mut av);
        let lambda: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        let res = v.iter().zip(&av).map(|(a, b)| (b - lambda * a).powi(2)).sum::<f64>().sqrt() / lambda.abs();
        last = Eigenpair { value: lambda, residual: res, iterations: it };
        if res <= tol {
            return Ok(last);
        }
    }
    Err(QnlError::Linalg(format!(
        "inverse iteration stalled after {max_iter} iterations (residual {:e})",
        last.residual
    )))
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_local, assemble_qnl};
    use crate::grid::build_grid;
    use crate::kernel::ScalelessKernel;

    fn dense_min_eigenvalue(op: &DiffusionOperator) -> f64 {
        let d = op.to_dense();
        let n = d.len();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| -d[i][j]);
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn local_laplacian_ground_state() {
        let g = build_grid(20, 1, 1).unwrap();
        let op = assemble_local(g);
        let e = smallest_eigenvalue(&op, 1e-10, 1000).unwrap();
        let h = g.h();
        let exact = 4.0 / (h * h) * (std::f64::consts::PI * h / 4.0).sin().powi(2);
        assert!((e.value - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn agrees_with_dense_eigensolver() {
        for (n, r1, r2) in [(30, 6, 2), (24, 3, 1), (40, 4, 2)] {
            let g = build_grid(n, r1, r2).unwrap();
            let k1 = ScalelessKernel::INVERSE_DISTANCE.scaled(g.delta1()).unwrap();
            let k2 = ScalelessKernel::INVERSE_DISTANCE.scaled(g.delta2()).unwrap();
            let op = assemble_qnl(g, &k1, &k2).unwrap();
            let e = smallest_eigenvalue(&op, 1e-10, 1000).unwrap();
            let oracle = dense_min_eigenvalue(&op);
            assert!((e.value - oracle).abs() < 1e-8 * oracle, "{} vs {}", e.value, oracle);
            assert!(e.residual <= 1e-10);
        }
    }

    #[test]
    fn band_solve_matches_dense() {
        let n = 9;
        let bw = 2;
        let a = |i: usize, j: usize| {
            let d = i.abs_diff(j);
            match d {
                0 => 6.0 + i as f64,
                1 => -1.0,
                2 => 0.5,
                _ => 0.0,
            }
        };
        let chol = BandCholesky::factor(n, bw, a).unwrap();
        let x: Vec<f64> = (0..n).map(|k| (k as f64).cos()).collect();
        let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a(i, j) * x[j]).sum()).collect();
        chol.solve(&mut b);
        for (p, q) in b.iter().zip(&x) {
            assert!((p - q).abs() < 1e-13);
        }
    }
}
