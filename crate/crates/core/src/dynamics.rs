//! Forward Euler for `u_t = A u + f` with volume-constrained data.

use crate::assembly::{DiffusionOperator, Stencil};
use crate::error::{QnlError, Result};
use crate::grid::{Grid1D, GridField};

/// Default `dt / h²`.
pub const DEFAULT_KAPPA: f64 = 0.25;

/// Time-dependent source `f(x, t)`.
pub trait Source: Send + Sync {
    /// Fills interior slots of `out` with `f(x_i, t)`.
    fn fill(&self, grid: &Grid1D, t: f64, out: &mut [f64]);

    /// True when `f` vanishes identically, so the fill can be skipped.
    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroSource;

impl Source for ZeroSource {
    fn fill(&self, _grid: &Grid1D, _t: f64, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `f(x, t) = a(t) p(x) + b(t) q(x)` with the spatial profiles sampled once.
type Temporal = Box<dyn Fn(f64) -> f64 + Send + Sync>;

pub struct SeparableSource {
    terms: Vec<(Vec<f64>, Temporal)>,
}

impl SeparableSource {
    pub fn new() -> Self {
        SeparableSource { terms: Vec::new() }
    }

    pub fn term(
        mut self,
        grid: &Grid1D,
        profile: impl Fn(f64) -> f64,
        temporal: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let sampled = grid.padded().map(|i| profile(grid.x(i))).collect();
        self.terms.push((sampled, Box::new(temporal)));
        self
    }
}

impl Default for SeparableSource {
    fn default() -> Self {
        Self::new()
    }
}

impl Source for SeparableSource {
    fn fill(&self, _grid: &Grid1D, t: f64, out: &mut [f64]) {
        out.fill(0.0);
        for (profile, temporal) in &self.terms {
            let a = temporal(t);
            for (o, p) in out.iter_mut().zip(profile) {
                *o += a * p;
            }
        }
    }
}

/// Arbitrary `f(x, t)` evaluated node by node.
pub struct FnSource<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Send + Sync> Source for FnSource<F> {
    fn fill(&self, grid: &Grid1D, t: f64, out: &mut [f64]) {
        for i in grid.padded() {
            out[(i + grid.pad as isize) as usize] = (self.0)(grid.x(i), t);
        }
    }
}

pub type Boundary = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub struct TimeStepper {
    pub grid: Grid1D,
    stencil: Stencil,
    pub kappa: f64,
    pub dt: f64,
    pub t_final: f64,
    /// `dt * max|A_ii|`.
    pub cfl_margin: f64,
    source: Box<dyn Source>,
    boundary: Option<Boundary>,
}

/// Explicit Euler on a symmetric negative semidefinite operator is stable
/// while `dt * max|A_ii| <= 2` (Gershgorin).
pub const CFL_LIMIT: f64 = 2.0;

impl TimeStepper {
    pub fn new(op: &DiffusionOperator, kappa: f64, t_final: f64, source: Box<dyn Source>) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(QnlError::config(format!("kappa must be positive, got {kappa}")));
        }
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(QnlError::config(format!("final time must be non-negative, got {t_final}")));
        }
        let h = op.grid.h();
        let dt = kappa * h * h;
        let cfl_margin = dt * op.max_diagonal();
        if cfl_margin > CFL_LIMIT {
            return Err(QnlError::Cfl { margin: cfl_margin, limit: CFL_LIMIT });
        }
        Ok(TimeStepper {
            grid: op.grid,
            stencil: op.stencil(),
            kappa,
            dt,
            t_final,
            cfl_margin,
            source,
            boundary: None,
        })
    }

    /// Volume data `g(x, t)` on constrained nodes (default zero).
    pub fn with_boundary(mut self, g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.boundary = Some(Box::new(g));
        self
    }

    /// Off-diagonal couplings are non-negative for every assembled operator,
    /// so the update is a convex combination when this holds.
    pub fn is_monotone(&self) -> bool {
        self.cfl_margin <= 1.0
    }

    /// Number of steps to reach `t_final`; the last one may be shorter.
    pub fn steps(&self) -> usize {
        let ratio = self.t_final / self.dt;
        let n = ratio.ceil();
        // forgive roundoff in t_final / dt
        if n - ratio > 1.0 - 1e-9 {
            (n - 1.0).max(0.0) as usize
        } else {
            n as usize
        }
    }

    /// Start time of step `k`.
    pub fn time(&self, k: usize) -> f64 {
        if k >= self.steps() {
            self.t_final
        } else {
            k as f64 * self.dt
        }
    }

    fn constrain(&self, u: &mut GridField, t: f64) {
        match &self.boundary {
            Some(g) => u.apply_constraints_with(|x| g(x, t)),
            None => u.apply_constraints(),
        }
    }

    /// One Euler step from `t` with step size `dt`.
    pub fn step_with(&self, u: &GridField, t: f64, dt: f64, scratch: &mut Vec<f64>) -> GridField {
        let mut next = u.clone();
        scratch.resize(self.grid.len(), 0.0);
        self.source.fill(&self.grid, t, scratch);
        self.stencil.euler_into(u.values(), scratch, dt, next.values_mut());
        self.constrain(&mut next, t + dt);
        next
    }

    /// One full step of size `dt` from time `t`.
    pub fn step(&self, u: &GridField, t: f64) -> Result<GridField> {
        let mut scratch = Vec::new();
        let next = self.step_with(u, t, self.dt, &mut scratch);
        if let Some(i) = self.grid.padded().find(|&i| !next.get(i).is_finite()) {
            return Err(QnlError::Instability { step: 0, t: t + self.dt, node: i });
        }
        Ok(next)
    }

    pub fn run(&self, u0: &GridField) -> Result<RunRecord> {
        self.run_observed(u0, |_, _, _| {})
    }

    /// Runs to `t_final`, calling `observe(k, t_k, u_k)` for the initial field
    /// (`k = 0`) and after every step.
    pub fn run_observed(
        &self,
        u0: &GridField,
        mut observe: impl FnMut(usize, f64, &GridField),
    ) -> Result<RunRecord> {
        if u0.grid != self.grid {
            return Err(QnlError::GridMismatch);
        }
        let mut u = u0.clone();
        self.constrain(&mut u, 0.0);
        let (lo, hi) = extrema(&u);
        let mut rec = RunRecord {
            final_field: u0.clone(),
            running_max: hi,
            running_min: lo,
            initial_max: hi,
            initial_min: lo,
            steps_taken: 0,
            t_final: self.t_final,
        };
        observe(0, 0.0, &u);

        let n = self.steps();
        let mut next = u.clone();
        let mut f = vec![0.0; self.grid.len()];
        let zero_source = self.source.is_zero();
        for k in 0..n {
            let t = k as f64 * self.dt;
            let dt = if k + 1 == n { self.t_final - t } else { self.dt };
            if !zero_source {
                self.source.fill(&self.grid, t, &mut f);
            }
            self.stencil.euler_into(u.values(), &f, dt, next.values_mut());
            let t_next = self.time(k + 1);
            if self.boundary.is_some() {
                self.constrain(&mut next, t_next);
            }
            std::mem::swap(&mut u, &mut next);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (slot, v) in u.values().iter().enumerate() {
                if !v.is_finite() {
                    return Err(QnlError::Instability {
                        step: k + 1,
                        t: t_next,
                        node: slot as isize - self.grid.pad as isize,
                    });
                }
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
            rec.running_min = rec.running_min.min(lo);
            rec.running_max = rec.running_max.max(hi);
            rec.steps_taken = k + 1;
            observe(k + 1, t_next, &u);
        }
        rec.final_field = u;
        Ok(rec)
    }
}

fn extrema(u: &GridField) -> (f64, f64) {
    u.values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub final_field: GridField,
    /// Extrema over all nodes and all time levels, initial field included.
    pub running_max: f64,
    pub running_min: f64,
    pub initial_max: f64,
    pub initial_min: f64,
    pub steps_taken: usize,
    pub t_final: f64,
}
