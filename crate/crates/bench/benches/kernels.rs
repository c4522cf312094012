use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use immersed_core::assembly::AssemblyOptions;
use immersed_core::config::{Expression, FunctionSpec, Parameters, PressureFamily};
use immersed_core::constitutive::ModelKind;
use immersed_core::harness::Simulation;
use immersed_core::locate::PointLocator;
use immersed_core::mesh::{generate_square_grid, Point};
use immersed_core::solver::LinearSolver;

fn ring(fluid_refinement: usize) -> Simulation {
    let p = Parameters {
        final_t: 1e-3,
        delta_t: 1e-3,
        model: ModelKind::CircumferentialFiber,
        solid_mesh: "annulus:0.5,0.5,0.25,0.0625,1,29".into(),
        solid_refinement: 2,
        fluid_mesh: "square:0,0,1,1".into(),
        fluid_refinement,
        pressure_family: PressureFamily::Dgp,
        ug: FunctionSpec::new("0; 0; 0"),
        ..Parameters::default()
    };
    Simulation::from_parameters(&p, Path::new(".")).unwrap()
}

fn locate(c: &mut Criterion) {
    let mesh = generate_square_grid(Point::zeros(), 1.0, 64).unwrap();
    let locator = PointLocator::new(&mesh);
    let mut rng = StdRng::seed_from_u64(1);
    let points: Vec<Point> =
        (0..10_000).map(|_| Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))).collect();
    c.bench_function("locate 10k points on 4096 cells", |b| {
        b.iter(|| locator.compute_point_locations(black_box(&points)).unwrap())
    });
}

fn assembly(c: &mut Criterion) {
    let sim = ring(4);
    let sys = sim.system();
    let state = sim.initial_state();
    let opts = AssemblyOptions { semi_implicit: true, use_spread_operator: true };
    let coupling = sys.coupling(&state.xi.solid).unwrap();
    c.bench_function("coupling quadrature (ring, 464 solid cells)", |b| {
        b.iter(|| sys.coupling(black_box(&state.xi.solid)).unwrap())
    });
    c.bench_function("residual (ring, 256 fluid cells)", |b| {
        b.iter(|| sys.assemble_residual_with(black_box(&state), &opts, &coupling).unwrap())
    });
    c.bench_function("jacobian (ring, 256 fluid cells)", |b| {
        b.iter(|| sys.assemble_jacobian_with(black_box(&state), 1e3, &coupling).unwrap())
    });
}

fn factorization(c: &mut Criterion) {
    let sim = ring(4);
    let sys = sim.system();
    let state = sim.initial_state();
    let coupling = sys.coupling(&state.xi.solid).unwrap();
    let jac = sys.assemble_jacobian_with(&state, 1e3, &coupling).unwrap();
    let mut solver = LinearSolver::new();
    solver.factorize(&jac).unwrap();
    let mut group = c.benchmark_group("sparse LU");
    group.sample_size(10);
    group.bench_function("refactorize coupled Jacobian", |b| b.iter(|| solver.factorize(black_box(&jac)).unwrap()));
    let fact = solver.factorize(&jac).unwrap();
    let rhs = vec![1.0; jac.n()];
    group.bench_function("solve coupled Jacobian", |b| b.iter(|| fact.solve(black_box(&rhs)).unwrap()));
    group.finish();
}

fn expressions(c: &mut Criterion) {
    let e = Expression::parse("if(y > .99, 1, 0) * sin(pi * x)^2; x * y * exp(-t)", 2).unwrap();
    c.bench_function("expression evaluation", |b| {
        b.iter(|| e.evaluate(black_box(0.3), black_box(0.995), black_box(0.1)).unwrap())
    });
}

criterion_group!(benches, locate, assembly, factorization, expressions);
criterion_main!(benches);
