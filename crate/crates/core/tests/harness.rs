use std::collections::HashMap;
use std::path::Path;

use proptest::prelude::*;

use immersed_core::assembly::{BoundarySetup, CoupledSystem, PhysicalConstants, SOLID_GEOMETRY};
use immersed_core::config::{FunctionSpec, Parameters, PressureFamily};
use immersed_core::constitutive::{ModelKind, SolidModel};
use immersed_core::harness::{
    analytic_ring_pressure, compute_solid_area, convergence_study, load_mesh, Simulation, REPORT_HEADER,
};
use immersed_core::mesh::{generate_square_grid, Point};
use immersed_core::Error;

fn workspace() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."))
}

fn small_parameters(out: &Path) -> Parameters {
    Parameters {
        final_t: 0.1,
        delta_t: 0.01,
        output_interval: 2,
        model: ModelKind::Inh0,
        viscosity: 0.1,
        elastic_modulus: 0.5,
        solid_mesh: "disk:0.6,0.5,0.2".into(),
        solid_refinement: 1,
        fluid_mesh: "square:0,0,1,1".into(),
        fluid_refinement: 2,
        output_base: out.join("run").to_string_lossy().into_owned(),
        ..Parameters::default()
    }
}

fn disk_system(refinement: usize) -> CoupledSystem {
    CoupledSystem::new(
        generate_square_grid(Point::zeros(), 1.0, 4).unwrap(),
        load_mesh("disk:0.6,0.5,0.2", refinement, Path::new(".")).unwrap(),
        PressureFamily::Dgp,
        PhysicalConstants::new(1.0, 1.0, 1.0),
        SolidModel::new(ModelKind::Inh0, 1.0),
        BoundarySetup::default(),
    )
    .unwrap()
}

/// Minimal reader for the legacy ASCII unstructured-grid files we write.
#[derive(Debug)]
struct Vtk {
    points: Vec<[f64; 3]>,
    cells: Vec<Vec<usize>>,
    cell_types: Vec<u32>,
    point_data: HashMap<String, Vec<f64>>,
}

fn read_vtk(text: &str) -> Vtk {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# vtk DataFile Version"));
    lines.next();
    assert_eq!(lines.next().unwrap().trim(), "ASCII");
    assert_eq!(lines.next().unwrap().trim(), "DATASET UNSTRUCTURED_GRID");
    let mut words = lines.flat_map(str::split_whitespace).peekable();
    let mut next = || words.next().expect("truncated file");
    assert_eq!(next(), "POINTS");
    let np: usize = next().parse().unwrap();
    next();
    let points = (0..np).map(|_| [0, 1, 2].map(|_| next().parse().unwrap())).collect();
    assert_eq!(next(), "CELLS");
    let nc: usize = next().parse().unwrap();
    let size: usize = next().parse().unwrap();
    let mut cells = Vec::new();
    let mut read = 0;
    for _ in 0..nc {
        let k: usize = next().parse().unwrap();
        cells.push((0..k).map(|_| next().parse().unwrap()).collect());
        read += k + 1;
    }
    assert_eq!(read, size);
    assert_eq!(next(), "CELL_TYPES");
    assert_eq!(next().parse::<usize>().unwrap(), nc);
    let cell_types = (0..nc).map(|_| next().parse().unwrap()).collect();
    assert_eq!(next(), "POINT_DATA");
    assert_eq!(next().parse::<usize>().unwrap(), np);
    let mut point_data = HashMap::new();
    while let Some(kind) = words.next() {
        let name = words.next().unwrap().to_string();
        words.next();
        let width = match kind {
            "VECTORS" => 3,
            "SCALARS" => {
                assert_eq!(words.next(), Some("1"));
                assert_eq!(words.next(), Some("LOOKUP_TABLE"));
                words.next();
                1
            }
            other => panic!("unexpected section {other}"),
        };
        let values = (0..np * width).map(|_| words.next().unwrap().parse().unwrap()).collect();
        point_data.insert(name, values);
    }
    Vtk { points, cells, cell_types, point_data }
}

#[test]
fn run_writes_snapshots_report_and_vtk_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = small_parameters(dir.path());
    let sim = Simulation::from_parameters(&p, workspace()).unwrap();
    let (report, state) = sim.run(true).unwrap();
    assert_eq!(report.steps, 10);
    assert_eq!(report.records.iter().map(|r| r.step).collect::<Vec<_>>(), vec![2, 4, 6, 8, 10]);
    assert!(report.errors.is_none());
    let mut vtk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".vtk"))
        .collect();
    vtk.sort();
    let mut expected: Vec<String> = [0, 2, 4, 6, 8, 10]
        .iter()
        .flat_map(|s| [format!("run-fluid-{s}.vtk"), format!("run-solid-{s}.vtk")])
        .collect();
    expected.sort();
    assert_eq!(vtk, expected);

    let sys = sim.system();
    let fluid = read_vtk(&std::fs::read_to_string(dir.path().join("run-fluid-10.vtk")).unwrap());
    assert_eq!(fluid.points.len(), sys.fluid_mesh().n_vertices());
    assert_eq!(fluid.cells.len(), sys.fluid_mesh().n_cells());
    assert!(fluid.cell_types.iter().all(|&t| t == 9));
    assert_eq!(fluid.cells[0], sys.fluid_mesh().cells()[0].to_vec());
    // the lid row carries the prescribed velocity
    let u = &fluid.point_data["u"];
    for (k, x) in fluid.points.iter().enumerate() {
        if x[1] > 0.999 && x[0] > 1e-9 && x[0] < 1.0 - 1e-9 {
            assert!((u[3 * k] - 1.0).abs() < 1e-12);
        }
    }
    assert_eq!(fluid.point_data["p"].len(), fluid.points.len());

    let solid = read_vtk(&std::fs::read_to_string(dir.path().join("run-solid-10.vtk")).unwrap());
    assert_eq!(solid.points.len(), sys.solid_mesh().n_vertices());
    assert_eq!(solid.cells.len(), sys.solid_mesh().n_cells());
    let d = &solid.point_data["displacement"];
    let ns = sys.displacement_dofs().n_scalar();
    let support = sys.displacement_dofs().support_points(sys.solid_mesh(), SOLID_GEOMETRY);
    // deformed vertex = reference vertex + displacement at that vertex
    for (k, x) in sys.solid_mesh().vertices().iter().enumerate() {
        let node = support.iter().position(|s| (s - x).norm() < 1e-12).unwrap();
        let w = [state.xi.solid[node], state.xi.solid[ns + node]];
        for c in 0..2 {
            assert!((d[3 * k + c] - w[c]).abs() < 1e-9);
            assert!((solid.points[k][c] - x[c] - w[c]).abs() < 1e-9);
        }
    }

    let mut csv = csv::Reader::from_path(dir.path().join("run-report.csv")).unwrap();
    assert_eq!(csv.headers().unwrap().iter().collect::<Vec<_>>(), REPORT_HEADER);
    let rows: Vec<csv::StringRecord> = csv.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), report.records.len());
    for (row, rec) in rows.iter().zip(&report.records) {
        assert_eq!(row[0].parse::<usize>().unwrap(), rec.step);
        assert!((row[1].parse::<f64>().unwrap() - rec.t).abs() < 1e-12);
        assert!((row[4].parse::<f64>().unwrap() - rec.solid_area).abs() < 1e-12);
    }
    assert!(!dir.path().join("run-errors.csv").exists());
}

#[test]
fn truncated_cavity_gives_one_record_per_step() {
    let text = std::fs::read_to_string(workspace().join("prms/Cavity_INH0.prm")).unwrap();
    let mut p: Parameters = text.parse().unwrap();
    p.final_t = 0.1;
    let sim = Simulation::from_parameters(&p, workspace()).unwrap();
    let (report, _) = sim.run(false).unwrap();
    assert_eq!(report.records.len(), 10);
    assert!(report.records.windows(2).all(|w| w[1].t >= w[0].t));
    assert!((report.records.last().unwrap().t - 0.1).abs() < 1e-12);
}

#[test]
fn final_step_is_recorded_off_interval() {
    let dir = tempfile::tempdir().unwrap();
    let p = Parameters { final_t: 0.05, output_interval: 2, ..small_parameters(dir.path()) };
    let (report, _) = Simulation::from_parameters(&p, workspace()).unwrap().run(false).unwrap();
    assert_eq!(report.records.iter().map(|r| r.step).collect::<Vec<_>>(), vec![2, 4, 5]);
}

#[test]
fn repeated_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = small_parameters(dir.path());
    let a = Simulation::from_parameters(&p, workspace()).unwrap().run(false).unwrap().0;
    let b = Simulation::from_parameters(&p, workspace()).unwrap().run(false).unwrap().0;
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!((x.area_change_pct - y.area_change_pct).abs() <= 1e-10 * x.area_change_pct.abs().max(1e-300));
    }
}

#[test]
fn ring_run_writes_three_error_norms() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(workspace().join("prms/RingEqm_dgp_fref4.prm")).unwrap();
    let mut p: Parameters = text.parse().unwrap();
    p.output_base = dir.path().join("ring").to_string_lossy().into_owned();
    let (report, _) = Simulation::from_parameters(&p, workspace()).unwrap().run(true).unwrap();
    let e = report.errors.unwrap();
    let mut csv = csv::Reader::from_path(dir.path().join("ring-errors.csv")).unwrap();
    assert_eq!(csv.headers().unwrap().iter().collect::<Vec<_>>(), ["cells", "dofs", "l2_u", "h1_u", "l2_p"]);
    let row = csv.records().next().unwrap().unwrap();
    assert_eq!(&row[0], "256");
    assert_eq!(&row[1], "2946");
    for (i, v) in e.as_array().iter().enumerate() {
        let written: f64 = row[2 + i].parse().unwrap();
        assert!(written > 0.0 && (written - v).abs() <= 1e-12 * v);
    }
}

#[test]
fn convergence_study_needs_two_levels_and_reports_rates() {
    let p = Parameters {
        final_t: 1e-3,
        delta_t: 1e-3,
        model: ModelKind::CircumferentialFiber,
        solid_mesh: "annulus:0.5,0.5,0.25,0.0625,1,29".into(),
        solid_refinement: 1,
        fluid_mesh: "square:0,0,1,1".into(),
        ug: FunctionSpec::new("0; 0; 0"),
        ..Parameters::default()
    };
    assert!(matches!(convergence_study(&p, &[3], workspace()), Err(Error::InvalidArgument(_))));
    let levels = convergence_study(&p, &[2, 2], workspace()).unwrap();
    assert_eq!(levels[1].rates, Some([0.0; 3]));
    assert!(levels[0].rates.is_none());
    assert_eq!(levels[0].cells, 16);
}

#[test]
fn disk_area_converges_to_circle() {
    let exact = std::f64::consts::PI * 0.04;
    let mut prev = f64::INFINITY;
    for r in 1..=3 {
        let sys = disk_system(r);
        let a = compute_solid_area(&sys, &vec![0.0; sys.n_solid()]).unwrap();
        let rel = (a - exact).abs() / exact;
        assert!(rel < prev);
        prev = rel;
    }
    assert!(prev <= 1e-3, "{prev}");
}

#[test]
fn inverted_solid_is_rejected() {
    let sys = disk_system(1);
    let w = sys.displacement_dofs().interpolate(sys.solid_mesh(), SOLID_GEOMETRY, |s| vec![-2.0 * (s.x - 0.6), 0.0]);
    assert!(matches!(compute_solid_area(&sys, &w), Err(Error::DegenerateMapping { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn area_is_invariant_under_translation_and_shear(dx in -0.3..0.3f64, dy in -0.3..0.3f64, g in -0.5..0.5f64) {
        let sys = disk_system(1);
        let zero = compute_solid_area(&sys, &vec![0.0; sys.n_solid()]).unwrap();
        let w = sys.displacement_dofs().interpolate(sys.solid_mesh(), SOLID_GEOMETRY, |s| vec![dx + g * s.y, dy]);
        let a = compute_solid_area(&sys, &w).unwrap();
        prop_assert!((a - zero).abs() < 1e-12);
    }

    #[test]
    fn ring_pressure_is_monotone_in_radius(r1 in 0.0..0.7f64, r2 in 0.0..0.7f64, mu in 0.1..5.0f64) {
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let p = |r| analytic_ring_pressure(r, 0.25, 0.0625, 1.0, mu);
        prop_assert!(p(lo) >= p(hi));
        prop_assert!((p(r1) / mu - analytic_ring_pressure(r1, 0.25, 0.0625, 1.0, 1.0)).abs() < 1e-14);
    }
}
