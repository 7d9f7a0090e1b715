use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use super::cases::{build_operator, Case, OperatorChoice};
use super::norms::{error_energy, error_interior_energy, error_linf};
use super::problem::{manufactured_problem, ManufacturedProblem};
use crate::dynamics::{TimeStepper, DEFAULT_KAPPA};
use crate::error::{QnlError, Result};
use crate::grid::build_grid;
use crate::kernel::ScalelessKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorKind {
    /// Sup-norm error, maximised over space and time.
    Linf,
    /// Sup-norm error at the final time only.
    LinfFinal,
    /// Gradient error over `Ω ∪ Ω_I`, maximised over time.
    Energy,
    /// Gradient error over `[-1/2, 1/2]`, maximised over time.
    InteriorEnergy,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 4] = [ErrorKind::Linf, ErrorKind::LinfFinal, ErrorKind::Energy, ErrorKind::InteriorEnergy];

    pub fn name(&self) -> &'static str {
        match self {
            ErrorKind::Linf => "linf",
            ErrorKind::LinfFinal => "linf_final",
            ErrorKind::Energy => "energy",
            ErrorKind::InteriorEnergy => "interior",
        }
    }

    /// Parses a comma-separated list such as `linf,energy,interior`.
    pub fn parse_list(s: &str) -> Result<Vec<ErrorKind>> {
        let mut kinds: Vec<ErrorKind> = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        kinds.sort();
        kinds.dedup();
        if kinds.is_empty() {
            return Err(QnlError::config("no error kinds requested"));
        }
        Ok(kinds)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorKind {
    type Err = QnlError;

    fn from_str(s: &str) -> Result<Self> {
        ErrorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| QnlError::config(format!("unknown error kind `{s}` (expected linf, linf_final, energy or interior)")))
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub case: Case,
    pub resolutions: Vec<usize>,
    pub t_final: f64,
    pub kappa: f64,
    pub kernel: ScalelessKernel,
    pub operator: OperatorChoice,
    pub error_kinds: Vec<ErrorKind>,
    /// Time-maximised errors are sampled every `max(1, steps / snapshots)`
    /// steps and at the final step.
    pub snapshots: usize,
}

impl StudyConfig {
    pub fn new(case: Case) -> Self {
        StudyConfig {
            case,
            resolutions: vec![50, 100, 200, 400],
            t_final: 1.0,
            kappa: DEFAULT_KAPPA,
            kernel: ScalelessKernel::INVERSE_DISTANCE,
            operator: OperatorChoice::Qnl,
            error_kinds: vec![ErrorKind::Linf, ErrorKind::Energy, ErrorKind::InteriorEnergy],
            snapshots: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(QnlError::config("no resolutions given"));
        }
        for w in self.resolutions.windows(2) {
            if w[1] <= w[0] || w[1] % w[0] != 0 {
                return Err(QnlError::config(format!(
                    "resolutions must be strictly increasing and nested ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if self.error_kinds.is_empty() {
            return Err(QnlError::config("no error kinds requested"));
        }
        if self.snapshots == 0 {
            return Err(QnlError::config("snapshot count must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub n_half: usize,
    pub h: f64,
    pub kind: ErrorKind,
    pub error: f64,
    /// `log(e_prev / e) / log(h_prev / h)`; absent on the coarsest row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub case: Case,
    pub operator: OperatorChoice,
    pub kernel: &'static str,
    pub kappa: f64,
    pub t_final: f64,
    pub snapshots: usize,
    /// Grouped by error kind, then by increasing resolution.
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn errors(&self, kind: ErrorKind) -> Vec<f64> {
        self.rows.iter().filter(|r| r.kind == kind).map(|r| r.error).collect()
    }

    pub fn orders(&self, kind: ErrorKind) -> Vec<f64> {
        self.rows.iter().filter(|r| r.kind == kind).filter_map(|r| r.order).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "case", "n_half", "h", "error_kind", "error", "order", "operator", "kernel", "kappa", "t_final", "snapshots",
            "build",
        ])?;
        let build = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
        for r in &self.rows {
            w.write_record([
                self.case.to_string(),
                r.n_half.to_string(),
                crate::fmt_sci(r.h),
                r.kind.to_string(),
                crate::fmt_sci(r.error),
                r.order.map(crate::fmt_sci).unwrap_or_default(),
                self.operator.to_string(),
                self.kernel.to_string(),
                crate::fmt_sci(self.kappa),
                crate::fmt_sci(self.t_final),
                self.snapshots.to_string(),
                build.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn observed_order(prev: (f64, f64), cur: (f64, f64)) -> f64 {
    (prev.1 / cur.1).ln() / (prev.0 / cur.0).ln()
}

/// Errors of one resolution, in the order of `kinds`.
fn errors_at(cfg: &StudyConfig, n_half: usize) -> Result<Vec<f64>> {
    let (r1, r2) = cfg.case.radii();
    let grid = build_grid(n_half, r1, r2)?;
    let op = build_operator(grid, cfg.operator, cfg.kernel)?;
    let problem = manufactured_problem(grid);
    let stepper = TimeStepper::new(&op, cfg.kappa, cfg.t_final, Box::new(problem.source))?;
    let steps = stepper.steps();
    let every = (steps / cfg.snapshots).max(1);
    let exact = ManufacturedProblem::exact;
    let mut vals = vec![0.0_f64; cfg.error_kinds.len()];
    let rec = stepper.run_observed(&problem.u0, |k, t, u| {
        let sampled = k % every == 0 || k == steps;
        for (v, kind) in vals.iter_mut().zip(&cfg.error_kinds) {
            let e = match kind {
                ErrorKind::Linf if sampled => error_linf(u, exact, t),
                ErrorKind::Energy if sampled => error_energy(u, exact, t),
                ErrorKind::InteriorEnergy if sampled => error_interior_energy(u, exact, t),
                _ => continue,
            };
            *v = v.max(e);
        }
    })?;
    for (v, kind) in vals.iter_mut().zip(&cfg.error_kinds) {
        if *kind == ErrorKind::LinfFinal {
            *v = error_linf(&rec.final_field, exact, rec.t_final);
        }
    }
    Ok(vals)
}

/// Runs the manufactured problem at every resolution (in parallel) and
/// tabulates errors and observed orders.
pub fn convergence_study(cfg: &StudyConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let per_res: Vec<Vec<f64>> = cfg
        .resolutions
        .par_iter()
        .map(|&n| errors_at(cfg, n))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (k, &kind) in cfg.error_kinds.iter().enumerate() {
        let mut prev: Option<(f64, f64)> = None;
        for (&n, errs) in cfg.resolutions.iter().zip(&per_res) {
            let h = 1.0 / n as f64;
            let error = errs[k];
            rows.push(ErrorRow { n_half: n, h, kind, error, order: prev.map(|p| observed_order(p, (h, error))) });
            prev = Some((h, error));
        }
    }
    Ok(ErrorReport {
        case: cfg.case,
        operator: cfg.operator,
        kernel: cfg.kernel.name,
        kappa: cfg.kappa,
        t_final: cfg.t_final,
        snapshots: cfg.snapshots,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(case: Case) -> StudyConfig {
        let mut cfg = StudyConfig::new(case);
        cfg.resolutions = vec![12, 24];
        cfg.t_final = 0.05;
        cfg.error_kinds = ErrorKind::ALL.to_vec();
        cfg
    }

    #[test]
    fn kinds_parse() {
        assert_eq!(
            ErrorKind::parse_list("interior, linf,energy,linf").unwrap(),
            vec![ErrorKind::Linf, ErrorKind::Energy, ErrorKind::InteriorEnergy]
        );
        assert!(ErrorKind::parse_list("l2").is_err());
        assert!(ErrorKind::parse_list("").is_err());
    }

    #[test]
    fn resolutions_must_nest() {
        let mut cfg = small(Case::A);
        cfg.resolutions = vec![12, 20];
        assert!(cfg.validate().is_err());
        cfg.resolutions = vec![24, 12];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn orders_follow_from_errors() {
        let rep = convergence_study(&small(Case::B)).unwrap();
        for kind in ErrorKind::ALL {
            let e = rep.errors(kind);
            let o = rep.orders(kind);
            assert_eq!(e.len(), 2);
            assert_eq!(o.len(), 1);
            assert!((o[0] - (e[0] / e[1]).log2()).abs() < 1e-12);
        }
        let first = rep.rows.iter().find(|r| r.n_half == 12).unwrap();
        assert!(first.order.is_none());
    }

    #[test]
    fn time_max_dominates_final_value() {
        let rep = convergence_study(&small(Case::C)).unwrap();
        let max = rep.errors(ErrorKind::Linf);
        let fin = rep.errors(ErrorKind::LinfFinal);
        for (a, b) in max.iter().zip(&fin) {
            assert!(a >= b);
        }
    }

    #[test]
    fn csv_is_reproducible_and_recomputable() {
        let cfg = small(Case::A);
        let mut a = Vec::new();
        convergence_study(&cfg).unwrap().write_csv(&mut a).unwrap();
        let mut b = Vec::new();
        convergence_study(&cfg).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let mut rdr = csv::Reader::from_reader(a.as_slice());
        let recs: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(recs.len(), 8);
        for pair in recs.chunks(2) {
            let e0: f64 = pair[0][4].parse().unwrap();
            let e1: f64 = pair[1][4].parse().unwrap();
            let o: f64 = pair[1][5].parse().unwrap();
            assert!(((e0 / e1).log2() - o).abs() < 1e-4);
            assert_eq!(&pair[0][5], "");
        }
    }
}
