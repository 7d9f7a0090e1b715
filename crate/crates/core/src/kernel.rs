//! Scaleless kernels on `[0, 1]`, their horizon scaling and the annulus
//! weights that every assembled operator is built from.

use crate::error::{QnlError, Result};
use crate::quadrature::integrate;

/// Absolute tolerance for every kernel quadrature.
pub const KERNEL_QUAD_TOL: f64 = 1e-12;

/// Density `γ(t)` for `t` in `(0, 1]`.
pub type Density = fn(f64) -> f64;

/// Closed form of `∫_a^b t² γ(t) dt` for `0 <= a <= b <= 1`.
pub type AnnulusIntegral = fn(f64, f64) -> f64;

/// Dimensionless kernel density supported on `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct ScalelessKernel {
    pub name: &'static str,
    pub density: Density,
    pub annulus: Option<AnnulusIntegral>,
    /// `γ(t)` is unbounded as `t -> 0`.
    pub singular_at_origin: bool,
}

fn inverse_density(t: f64) -> f64 {
    2.0 / t
}
fn inverse_annulus(a: f64, b: f64) -> f64 {
    (b - a) * (b + a)
}
fn constant_density(_t: f64) -> f64 {
    3.0
}
fn constant_annulus(a: f64, b: f64) -> f64 {
    b * b * b - a * a * a
}
fn linear_decay_density(t: f64) -> f64 {
    12.0 * (1.0 - t)
}
fn linear_decay_annulus(a: f64, b: f64) -> f64 {
    let f = |t: f64| t * t * t * (4.0 - 3.0 * t);
    f(b) - f(a)
}

impl ScalelessKernel {
    /// `γ(t) = 2/t`, integrable against `t²` despite the pole at 0. Default kernel.
    pub const INVERSE_DISTANCE: ScalelessKernel = ScalelessKernel {
        name: "paper-2-over-s",
        density: inverse_density,
        annulus: Some(inverse_annulus),
        singular_at_origin: true,
    };

    /// `γ(t) = 3`, unit second moment.
    pub const CONSTANT: ScalelessKernel = ScalelessKernel {
        name: "constant",
        density: constant_density,
        annulus: Some(constant_annulus),
        singular_at_origin: false,
    };

    /// `γ(t) = 12 (1 - t)`, unit second moment.
    pub const LINEAR_DECAY: ScalelessKernel = ScalelessKernel {
        name: "linear-decay",
        density: linear_decay_density,
        annulus: Some(linear_decay_annulus),
        singular_at_origin: false,
    };

    /// A kernel without closed-form weights; all moments go through quadrature.
    pub fn custom(name: &'static str, density: Density, singular_at_origin: bool) -> Self {
        ScalelessKernel { name, density, annulus: None, singular_at_origin }
    }

    /// Looks up a registered kernel by its id.
    pub fn by_name(name: &str) -> Result<Self> {
        registry()
            .iter()
            .find(|k| k.name == name)
            .copied()
            .ok_or_else(|| {
                let known: Vec<_> = registry().iter().map(|k| k.name).collect();
                QnlError::config(format!("unknown kernel `{name}` (known: {})", known.join(", ")))
            })
    }

    /// `∫_a^b t² γ(t) dt` on the unit support.
    pub fn weighted_integral(&self, a: f64, b: f64) -> Result<f64> {
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        if let Some(closed) = self.annulus {
            return Ok(closed(a, b));
        }
        let g = self.density;
        Ok(integrate(|t| t * t * g(t), a, b, KERNEL_QUAD_TOL)?.value)
    }

    pub fn scaled(self, delta: f64) -> Result<ScaledKernel> {
        ScaledKernel::new(self, delta)
    }
}

pub fn registry() -> &'static [ScalelessKernel] {
    const KERNELS: [ScalelessKernel; 3] = [
        ScalelessKernel::INVERSE_DISTANCE,
        ScalelessKernel::CONSTANT,
        ScalelessKernel::LINEAR_DECAY,
    ];
    &KERNELS
}

/// `γ_δ(s) = δ⁻³ γ(s/δ)`, supported on `[0, δ]`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledKernel {
    pub base: ScalelessKernel,
    pub delta: f64,
}

impl ScaledKernel {
    pub fn new(base: ScalelessKernel, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(QnlError::config(format!("horizon must be positive, got {delta}")));
        }
        Ok(ScaledKernel { base, delta })
    }

    pub fn eval_scaled(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(QnlError::KernelEvaluation {
                kernel: self.base.name.to_string(),
                s,
                reason: "negative distance",
            });
        }
        if s > self.delta {
            return Ok(0.0);
        }
        if s == 0.0 && self.base.singular_at_origin {
            return Err(QnlError::KernelEvaluation {
                kernel: self.base.name.to_string(),
                s,
                reason: "kernel is singular at the origin",
            });
        }
        let d = self.delta;
        Ok((self.base.density)(s / d) / (d * d * d))
    }

    /// `∫_0^δ s² γ_δ(s) ds`.
    pub fn second_moment(&self) -> Result<f64> {
        if self.base.annulus.is_some() {
            return self.base.weighted_integral(0.0, 1.0);
        }
        let g = self.base.density;
        let d = self.delta;
        let value = integrate(|s| s * s * g(s / d) / (d * d * d), 0.0, d, KERNEL_QUAD_TOL)?.value;
        Ok(value)
    }

    /// `w_j = ∫_{(j-1)h}^{jh} s² γ_δ(s) ds` for `j = 1..=r`; requires `δ = r h`.
    pub fn annulus_weights(&self, h: f64, r: usize) -> Result<Vec<f64>> {
        if r == 0 || !(h > 0.0) {
            return Err(QnlError::config("annulus weights need r >= 1 and h > 0"));
        }
        let expected = r as f64 * h;
        if (self.delta - expected).abs() > 1e-12 * expected {
            return Err(QnlError::config(format!(
                "horizon {} does not equal r*h = {r}*{h}",
                self.delta
            )));
        }
        // In scaled variables the annulus is [(j-1)/r, j/r] regardless of h.
        let rf = r as f64;
        (1..=r)
            .map(|j| self.base.weighted_integral((j - 1) as f64 / rf, j as f64 / rf))
            .collect()
    }
}
