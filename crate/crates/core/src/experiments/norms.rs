use crate::grid::GridField;

/// How the local exact solution is continued onto the constrained collar
/// `|x| > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExactExtension {
    /// Use the volume data (zero): the reference solution obeys the same
    /// constraint as the computed one.
    #[default]
    VolumeData,
    /// Evaluate the closed form outside `[-1, 1]`.
    Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientRegion {
    /// Every node whose two neighbours are stored, i.e. `Ω ∪ Ω_I`.
    Full,
    /// Nodes with `|x| <= 1/2`.
    Interior,
}

/// `max_i |u_i - exact(x_i, t)|` over interior nodes.
pub fn error_linf(u: &GridField, exact: impl Fn(f64, f64) -> f64, t: f64) -> f64 {
    let g = u.grid;
    g.interior().map(|i| (u.get(i) - exact(g.x(i), t)).abs()).fold(0.0, f64::max)
}

/// Discrete `L²` norm `sqrt(h Σ g_i²)` of the central-difference gradient
/// of `u - exact(·, t)`.
pub fn gradient_error_l2(
    u: &GridField,
    exact: impl Fn(f64, f64) -> f64,
    t: f64,
    region: GradientRegion,
    extension: ExactExtension,
) -> f64 {
    let g = u.grid;
    let h = g.h();
    let n = g.n_half as isize;
    let err = |i: isize| {
        let reference = if g.is_interior(i) || extension == ExactExtension::Formula {
            exact(g.x(i), t)
        } else {
            0.0
        };
        u.get(i) - reference
    };
    let nodes = match region {
        GradientRegion::Full => g.first_padded() + 1..g.last_padded(),
        GradientRegion::Interior => n - n / 2..n + n / 2 + 1,
    };
    let mut acc = 0.0;
    for i in nodes {
        if region == GradientRegion::Interior && 2 * (i - n).abs() > n {
            continue;
        }
        let d = (err(i + 1) - err(i - 1)) / (2.0 * h);
        acc += d * d;
    }
    (h * acc).sqrt()
}

/// Energy-norm error over `Ω ∪ Ω_I` at one time level.
pub fn error_energy(u: &GridField, exact: impl Fn(f64, f64) -> f64, t: f64) -> f64 {
    gradient_error_l2(u, exact, t, GradientRegion::Full, ExactExtension::VolumeData)
}

/// Energy-norm error restricted to `[-1/2, 1/2]` at one time level.
pub fn error_interior_energy(u: &GridField, exact: impl Fn(f64, f64) -> f64, t: f64) -> f64 {
    gradient_error_l2(u, exact, t, GradientRegion::Interior, ExactExtension::VolumeData)
}
