//! Property suite behind the `check` command.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::assembly::{assemble_nonlocal, assemble_qnl, DiffusionOperator};
use crate::dynamics::{TimeStepper, ZeroSource, DEFAULT_KAPPA};
use crate::energy::{first_variation_oracle, EnergyQuadrature};
use crate::error::Result;
use crate::experiments::{Case, ManufacturedProblem};
use crate::grid::{build_grid, Grid1D, GridField};
use crate::kernel::ScalelessKernel;
use crate::linalg::smallest_eigenvalue;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// One line of the continuous-energy comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyRow {
    pub functional: String,
    pub test_function: usize,
    pub value: f64,
    pub counterpart: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckReport {
    pub results: Vec<CheckResult>,
    pub energies: Vec<EnergyRow>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed) && self.energies.iter().all(|r| r.passed)
    }

    fn push(&mut self, name: impl Into<String>, value: f64, tolerance: f64, passed: bool, detail: impl Into<String>) {
        self.results.push(CheckResult { name: name.into(), passed, value, tolerance, detail: detail.into() });
    }
}

/// Every `(case, n_half)` grid used by the convergence studies plus the
/// singular-datum grid.
pub fn experiment_grids() -> Vec<(String, Grid1D)> {
    let mut out = Vec::new();
    for case in [Case::A, Case::B, Case::C, Case::B2] {
        let (r1, r2) = case.radii();
        for n in [50, 100, 200, 400] {
            out.push((format!("{case}/N={n}"), build_grid(n, r1, r2).expect("valid case grid")));
        }
    }
    out.push(("singular/N=200".into(), build_grid(200, 5, 1).expect("valid grid")));
    out
}

pub fn default_qnl(grid: Grid1D) -> Result<DiffusionOperator> {
    let k1 = ScalelessKernel::INVERSE_DISTANCE.scaled(grid.delta1())?;
    let k2 = ScalelessKernel::INVERSE_DISTANCE.scaled(grid.delta2())?;
    assemble_qnl(grid, &k1, &k2)
}

pub fn default_long_range(grid: Grid1D) -> Result<DiffusionOperator> {
    assemble_nonlocal(grid, grid.r1, &ScalelessKernel::INVERSE_DISTANCE.scaled(grid.delta1())?)
}

/// Smooth field vanishing with three derivatives at `±support`.
pub fn smooth_test_function(seed: u64, support: f64) -> impl Fn(f64) -> f64 + Sync + Copy {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut a = [0.0; 4];
    for c in a.iter_mut() {
        *c = rng.gen_range(-1.0..1.0);
    }
    let shift = rng.gen_range(-0.3..0.3);
    move |x: f64| {
        let t = x / support;
        if t.abs() >= 1.0 {
            return 0.0;
        }
        let env = (1.0 - t * t).powi(4);
        let mut s = 0.0;
        for (m, c) in a.iter().enumerate() {
            s += c * ((m + 1) as f64 * std::f64::consts::PI * (t + shift)).sin();
        }
        env * (1.0 + s)
    }
}

fn random_constrained(grid: Grid1D, rng: &mut StdRng) -> GridField {
    let mut u = GridField::sample(grid, |_| rng.gen_range(-1.0..1.0));
    u.apply_constraints();
    u
}

fn case_grids_n50() -> Vec<(Case, Grid1D)> {
    [Case::A, Case::B, Case::C]
        .into_iter()
        .map(|c| {
            let (r1, r2) = c.radii();
            (c, build_grid(50, r1, r2).expect("valid case grid"))
        })
        .collect()
}

pub fn check_patch_test(report: &mut CheckReport) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(11);
    for (case, g) in case_grids_n50() {
        let op = default_qnl(g)?;
        let h = g.h();
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let slope = rng.gen_range(-10.0..10.0);
            let shift = rng.gen_range(-10.0..10.0);
            let u = GridField::sample(g, |x| slope * x + shift);
            let r = op.apply(&u)?.max_abs_interior();
            worst = worst.max(r * h * h / (f64::abs(slope) + f64::abs(shift)));
        }
        report.push(
            format!("patch test {case}"),
            worst,
            1e-12,
            worst <= 1e-12,
            "max |A u| h^2 / (|F| + |u0|) over 20 affine fields",
        );
    }
    Ok(())
}

pub fn check_symmetry(report: &mut CheckReport) -> Result<()> {
    let mut asym: f64 = 0.0;
    let mut count = 0;
    for (_, g) in experiment_grids() {
        let op = default_qnl(g)?;
        for i in g.interior() {
            for j in g.interior().filter(|&j| (j - i).unsigned_abs() <= op.width()) {
                asym = asym.max((op.entry(i, j) - op.entry(j, i)).abs());
            }
        }
        count += 1;
    }
    report.push("symmetry", asym, 0.0, asym == 0.0, format!("bit-exact on {count} experiment grids"));
    Ok(())
}

pub fn check_discrete_dominance(report: &mut CheckReport) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(23);
    for (case, g) in case_grids_n50() {
        let q = default_qnl(g)?;
        let nl = default_long_range(g)?;
        let mut worst = f64::INFINITY;
        for _ in 0..100 {
            let u = random_constrained(g, &mut rng);
            worst = worst.min(q.discrete_energy(&u)? - nl.discrete_energy(&u)?);
        }
        report.push(
            format!("discrete dominance {case}"),
            worst,
            -1e-10,
            worst >= -1e-10,
            "min of E_qnl - E_long over 100 random constrained fields",
        );
    }
    Ok(())
}

pub fn check_eigenvalues(report: &mut CheckReport) -> Result<()> {
    for (name, g) in experiment_grids() {
        let op = default_qnl(g)?;
        let (value, passed, detail) = match smallest_eigenvalue(&op, 1e-8, 1000) {
            Ok(e) => (e.value, e.value > 0.0, format!("residual {:e} after {} iterations", e.residual, e.iterations)),
            Err(err) => (f64::NAN, false, err.to_string()),
        };
        report.push(format!("smallest eigenvalue {name}"), value, 0.0, passed, detail);
    }
    Ok(())
}

pub fn check_first_variation(report: &mut CheckReport) -> Result<()> {
    for (k, (case, g)) in case_grids_n50().into_iter().enumerate() {
        let op = default_qnl(g)?;
        let mut u = GridField::sample(g, smooth_test_function(k as u64 + 5, 1.0));
        u.apply_constraints();
        let au = op.apply(&u)?;
        let oracle = first_variation_oracle(&op, &u, 1e-5)?;
        let scale = au.max_abs_interior();
        let gap = g.interior().map(|i| (oracle.get(i) - au.get(i)).abs()).fold(0.0, f64::max);
        let rel = gap / scale;
        report.push(format!("first variation {case}"), rel, 1e-6, rel <= 1e-6, "relative sup gap to A u");
    }
    Ok(())
}

pub fn check_max_principle(report: &mut CheckReport) -> Result<()> {
    for (case, g) in case_grids_n50() {
        let op = default_qnl(g)?;
        let stepper = TimeStepper::new(&op, DEFAULT_KAPPA, 1.0, Box::new(ZeroSource))?;
        let mut u0 = GridField::sample(g, ManufacturedProblem::initial);
        u0.apply_constraints();
        let mut last_energy = op.discrete_energy(&u0)?;
        let mut energy_increase: f64 = 0.0;
        let rec = stepper.run_observed(&u0, |_, _, u| {
            let e = op.discrete_energy(u).unwrap_or(f64::NAN);
            energy_increase = energy_increase.max(e - last_energy);
            last_energy = e;
        })?;
        let over = (rec.running_max - rec.initial_max).max(rec.initial_min.min(0.0) - rec.running_min);
        report.push(
            format!("maximum principle {case}"),
            over,
            1e-12,
            over <= 1e-12 && stepper.is_monotone(),
            format!("dt*max|A_ii| = {:.4}", stepper.cfl_margin),
        );
        report.push(
            format!("energy decay {case}"),
            energy_increase,
            0.0,
            energy_increase <= 0.0,
            "largest one-step increase of the discrete energy",
        );
    }
    Ok(())
}

pub fn check_unit_ratio(report: &mut CheckReport) -> Result<()> {
    let mut worst: f64 = 0.0;
    for r in [1usize, 2, 4, 6] {
        let g = build_grid(50, r, r)?;
        let q = default_qnl(g)?;
        let nl = default_long_range(g)?;
        for i in g.interior() {
            for j in g.interior() {
                let (a, b) = (q.entry(i, j), nl.entry(i, j));
                let scale = b.abs().max(f64::MIN_POSITIVE);
                if a != b {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
    }
    report.push("unit ratio reduction", worst, 1e-14, worst <= 1e-14, "entrywise relative gap to the long-range operator");
    Ok(())
}

/// Continuous-level energy comparisons: reconstruction equivalence and
/// coupled-energy dominance.
pub fn check_energies(report: &mut CheckReport, cells: usize) -> Result<()> {
    let delta1 = 0.12;
    let support = 1.0 + delta1;
    let quad = EnergyQuadrature::new(ScalelessKernel::INVERSE_DISTANCE, support, cells)?;
    for ratio in [2usize, 3, 5] {
        for id in 0..5 {
            let u = smooth_test_function(100 + id as u64, support);
            let gr = quad.energy_gr(&u, delta1, ratio)?;
            let short = quad.energy_delta(&u, delta1 / ratio as f64)?;
            let gap = (gr.value - short.value).abs();
            let tol = (3.0 * (gr.error_estimate + short.error_estimate)).max(1e-8);
            report.energies.push(EnergyRow {
                functional: format!("E_gr(M={ratio}) vs E_short"),
                test_function: id,
                value: gr.value,
                counterpart: short.value,
                gap,
                tolerance: tol,
                passed: gap <= tol,
            });
        }
    }
    for id in 0..20 {
        let u = smooth_test_function(200 + id as u64, support);
        let qnl = quad.energy_qnl(&u, delta1, 3)?;
        let long = quad.energy_delta(&u, delta1)?;
        let tol = qnl.error_estimate + long.error_estimate;
        report.energies.push(EnergyRow {
            functional: "E_qnl(M=3) >= E_long".into(),
            test_function: id,
            value: qnl.value,
            counterpart: long.value,
            gap: qnl.value - long.value,
            tolerance: tol,
            passed: qnl.value >= long.value - tol,
        });
    }
    Ok(())
}

/// Runs the whole suite.
pub fn run_checks(energy_cells: usize) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    check_patch_test(&mut report)?;
    check_symmetry(&mut report)?;
    check_discrete_dominance(&mut report)?;
    check_eigenvalues(&mut report)?;
    check_first_variation(&mut report)?;
    check_max_principle(&mut report)?;
    check_unit_ratio(&mut report)?;
    check_energies(&mut report, energy_cells)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_functions_vanish_outside_support() {
        let f = smooth_test_function(3, 1.12);
        assert_eq!(f(1.12), 0.0);
        assert_eq!(f(-2.0), 0.0);
        assert!(f(0.1).is_finite());
    }

    #[test]
    fn quick_suite_passes() {
        let mut r = CheckReport::default();
        check_patch_test(&mut r).unwrap();
        check_unit_ratio(&mut r).unwrap();
        check_first_variation(&mut r).unwrap();
        check_discrete_dominance(&mut r).unwrap();
        for c in &r.results {
            assert!(c.passed, "{c:?}");
        }
    }
}
