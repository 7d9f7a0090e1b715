//! `qnl`: simulations, property checks and convergence studies for the
//! quasinonlocal diffusion solver.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnl_core::checks::{check_energies, run_checks, CheckReport};
use qnl_core::dynamics::TimeStepper;
use qnl_core::experiments::{
    build_operator, convergence_study, error_linf, manufactured_problem, singular_comparison, Case, ErrorKind,
    ManufacturedProblem, OperatorChoice, SingularConfig, StudyConfig,
};
use qnl_core::{build_grid, fmt_sci, QnlError, ScalelessKernel};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "qnl", version, about = "Quasinonlocal diffusion solver")]
struct Cli {
    /// TOML file with default values for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Kernel id (paper-2-over-s, constant, linear-decay)
    #[arg(long, global = true)]
    kernel: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the manufactured problem once and write the final field
    Run(RunArgs),
    /// Run the property suite; `check energies` runs only the energy table
    Check(CheckArgs),
    /// Convergence study against the local exact solution
    Converge(ConvergeArgs),
    /// Coupled, nonlocal and local runs from a singular initial datum
    CompareSingular(SingularArgs),
}

#[derive(Args)]
struct RunArgs {
    /// A, B, C, B2 or custom (custom needs --r1 and --r2)
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    r1: Option<usize>,
    #[arg(long)]
    r2: Option<usize>,
    #[arg(long)]
    n_half: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// qnl, nonlocal1, nonlocal2 or local
    #[arg(long)]
    operator: Option<String>,
    /// CSV destination (index, x, u_final); stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the dense interior matrix as CSV
    #[arg(long)]
    dump_operator: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// `energies` restricts the run to the continuous energy table
    suite: Option<String>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Coarse quadrature panels per axis for the energy checks
    #[arg(long)]
    cells: Option<usize>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    case: Option<String>,
    /// Comma-separated: linf, linf_final, energy, interior
    #[arg(long)]
    errors: Option<String>,
    /// Comma-separated nested resolutions
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    operator: Option<String>,
    /// Snapshots per run for time-maximised errors
    #[arg(long)]
    snapshots: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SingularArgs {
    #[arg(long)]
    n_half: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Property(String),
    Core(QnlError),
}

impl From<QnlError> for Failure {
    fn from(e: QnlError) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(QnlError::Io(e))
    }
}

fn exit_code(e: &QnlError) -> u8 {
    match e {
        QnlError::Instability { .. } | QnlError::Cfl { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property(msg)) => {
            eprintln!("property check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let kernel = ScalelessKernel::by_name(cli.kernel.as_deref().or(file.kernel.as_deref()).unwrap_or("paper-2-over-s"))?;
    match cli.command {
        Command::Run(a) => run(a, &file, kernel),
        Command::Check(a) => check(a, &file),
        Command::Converge(a) => converge(a, &file, kernel),
        Command::CompareSingular(a) => compare_singular(a, &file, kernel),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            QnlError::Config(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_case(name: Option<&str>, r1: Option<usize>, r2: Option<usize>) -> Result<Case, QnlError> {
    match name.unwrap_or("A") {
        "custom" => match (r1, r2) {
            (Some(r1), Some(r2)) => Ok(Case::Custom { r1, r2 }),
            _ => Err(QnlError::Config("case `custom` needs r1 and r2".into())),
        },
        other => other.parse(),
    }
}

fn run(a: RunArgs, file: &FileConfig, kernel: ScalelessKernel) -> Result<(), Failure> {
    let case = parse_case(a.case.as_deref().or(file.case.as_deref()), a.r1.or(file.r1), a.r2.or(file.r2))?;
    let n_half = a.n_half.or(file.n_half).unwrap_or(50);
    let t_final = a.t_final.or(file.t_final).unwrap_or(1.0);
    let kappa = a.kappa.or(file.kappa).unwrap_or(0.25);
    let operator: OperatorChoice = a.operator.as_deref().or(file.operator.as_deref()).unwrap_or("qnl").parse()?;
    let (r1, r2) = case.radii();
    let grid = build_grid(n_half, r1, r2)?;
    let op = build_operator(grid, operator, kernel)?;
    if let Some(path) = &a.dump_operator {
        op.write_dense_csv(output(Some(path))?)?;
    }
    let problem = manufactured_problem(grid);
    let stepper = TimeStepper::new(&op, kappa, t_final, Box::new(problem.source))?;
    let mut linf: f64 = 0.0;
    let rec = stepper.run_observed(&problem.u0, |_, t, u| {
        linf = linf.max(error_linf(u, ManufacturedProblem::exact, t));
    })?;
    rec.final_field.write_csv(output(a.out.as_deref())?, "u_final")?;
    eprintln!(
        "case={case} operator={operator} kernel={} n_half={n_half} steps={} dt={} cfl={} linf={} linf_final={}",
        kernel.name,
        rec.steps_taken,
        fmt_sci(stepper.dt),
        fmt_sci(stepper.cfl_margin),
        fmt_sci(linf),
        fmt_sci(error_linf(&rec.final_field, ManufacturedProblem::exact, rec.t_final)),
    );
    Ok(())
}

fn print_report(report: &CheckReport) {
    for r in &report.results {
        println!(
            "{} {} value={} tol={} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            fmt_sci(r.value),
            fmt_sci(r.tolerance),
            r.detail
        );
    }
    if !report.energies.is_empty() {
        println!("functional,test_function,value,counterpart,gap,tolerance,result");
        for e in &report.energies {
            println!(
                "{},{},{},{},{},{},{}",
                e.functional,
                e.test_function,
                fmt_sci(e.value),
                fmt_sci(e.counterpart),
                fmt_sci(e.gap),
                fmt_sci(e.tolerance),
                if e.passed { "pass" } else { "fail" }
            );
        }
    }
}

fn check(a: CheckArgs, file: &FileConfig) -> Result<(), Failure> {
    let cells = a.cells.or(file.cells).unwrap_or(256);
    let report = match a.suite.as_deref() {
        None | Some("all") => run_checks(cells)?,
        Some("energies") => {
            let mut r = CheckReport::default();
            check_energies(&mut r, cells)?;
            r
        }
        Some(other) => return Err(QnlError::Config(format!("unknown check suite `{other}`")).into()),
    };
    print_report(&report);
    if let Some(path) = &a.json {
        let mut w = output(Some(path))?;
        serde_json::to_writer_pretty(&mut w, &report).map_err(io::Error::from)?;
        w.flush()?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        let failed = report.results.iter().filter(|r| !r.passed).count()
            + report.energies.iter().filter(|r| !r.passed).count();
        Err(Failure::Property(format!("{failed} check(s) failed")))
    }
}

fn converge(a: ConvergeArgs, file: &FileConfig, kernel: ScalelessKernel) -> Result<(), Failure> {
    let case: Case = a.case.as_deref().or(file.case.as_deref()).unwrap_or("A").parse()?;
    let mut cfg = StudyConfig::new(case);
    cfg.kernel = kernel;
    if let Some(list) = a.errors.as_deref().or(file.errors.as_deref()) {
        cfg.error_kinds = ErrorKind::parse_list(list)?;
    }
    if let Some(r) = a.resolutions.or_else(|| file.resolutions.clone()) {
        cfg.resolutions = r;
    }
    cfg.t_final = a.t_final.or(file.t_final).unwrap_or(cfg.t_final);
    cfg.kappa = a.kappa.or(file.kappa).unwrap_or(cfg.kappa);
    cfg.snapshots = a.snapshots.or(file.snapshots).unwrap_or(cfg.snapshots);
    if let Some(op) = a.operator.as_deref().or(file.operator.as_deref()) {
        cfg.operator = op.parse()?;
    }
    let report = convergence_study(&cfg)?;
    let mut w = output(a.out.as_deref())?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn compare_singular(a: SingularArgs, file: &FileConfig, kernel: ScalelessKernel) -> Result<(), Failure> {
    let defaults = SingularConfig::default();
    let cfg = SingularConfig {
        n_half: a.n_half.or(file.n_half).unwrap_or(defaults.n_half),
        t_final: a.t_final.or(file.t_final).unwrap_or(defaults.t_final),
        kappa: a.kappa.or(file.kappa).unwrap_or(defaults.kappa),
        kernel,
        ..defaults
    };
    let cmp = singular_comparison(&cfg)?;
    let mut w = output(a.out.as_deref())?;
    cmp.write_csv(&mut w)?;
    w.flush()?;
    println!("{}", cmp.summary());
    Ok(())
}
