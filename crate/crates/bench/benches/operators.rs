use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use qnl_core::dynamics::{TimeStepper, ZeroSource};
use qnl_core::experiments::{build_operator, Case, ManufacturedProblem, OperatorChoice};
use qnl_core::{build_grid, GridField, ScalelessKernel};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_qnl");
    for n in [100usize, 400] {
        let (r1, r2) = Case::A.radii();
        let g = build_grid(n, r1, r2).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| build_operator(*g, OperatorChoice::Qnl, ScalelessKernel::INVERSE_DISTANCE).unwrap())
        });
    }
    group.finish();
}

fn apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply");
    for op_kind in [OperatorChoice::Qnl, OperatorChoice::Nonlocal1, OperatorChoice::Local] {
        let g = build_grid(400, 6, 2).unwrap();
        let op = build_operator(g, op_kind, ScalelessKernel::INVERSE_DISTANCE).unwrap();
        let mut u = GridField::sample(g, ManufacturedProblem::initial);
        u.apply_constraints();
        group.bench_function(op_kind.to_string(), |b| b.iter(|| op.apply(black_box(&u)).unwrap()));
    }
    group.finish();
}

fn time_loop(c: &mut Criterion) {
    let g = build_grid(400, 6, 2).unwrap();
    let op = build_operator(g, OperatorChoice::Qnl, ScalelessKernel::INVERSE_DISTANCE).unwrap();
    // 1000 steps at the finest study resolution
    let stepper = TimeStepper::new(&op, 0.25, 1000.0 * 0.25 / (400.0 * 400.0), Box::new(ZeroSource)).unwrap();
    let mut u = GridField::sample(g, ManufacturedProblem::initial);
    u.apply_constraints();
    c.bench_function("euler_1000_steps_n400", |b| b.iter(|| stepper.run(black_box(&u)).unwrap()));
}

criterion_group!(benches, assembly, apply, time_loop);
criterion_main!(benches);
