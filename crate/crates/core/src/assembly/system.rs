use std::sync::Mutex;

use nalgebra::Matrix2;

use crate::config::{Expression, PressureFamily};
use crate::constitutive::SolidModel;
use crate::error::{Error, Result};
use crate::fem::{cell_map, gauss_rule, DofHandler, GeometryOrder, MappingConfig, QuadratureRule, ReferenceElement};
use crate::mesh::{Mesh, Point};
use crate::solver::{Factorization, LinearSolver};
use crate::sparse::{BlockedSparseMatrix, BlockedVector, CsrMatrix, PatternBuilder};

/// Material constants and prescribed data of the coupled problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConstants {
    /// Common fluid and solid density.
    pub density: f64,
    /// Solid density in the reference configuration.
    pub solid_reference_density: f64,
    pub viscosity: f64,
    /// Scaling of the velocity coupling rows.
    pub phi_b: f64,
    /// Body force per unit mass; only the first two components are used.
    pub body_force: Expression,
    /// Dirichlet velocity data.
    pub dirichlet_data: Expression,
    /// Boundary traction on non-Dirichlet faces.
    pub neumann_data: Expression,
}

impl PhysicalConstants {
    /// Constants with `rho_s0 = rho` and zero data.
    pub fn new(density: f64, viscosity: f64, phi_b: f64) -> Self {
        Self {
            density,
            solid_reference_density: density,
            viscosity,
            phi_b,
            body_force: Expression::zero(2),
            dirichlet_data: Expression::zero(2),
            neumann_data: Expression::zero(2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("density", self.density), ("viscosity", self.viscosity), ("Phi_B", self.phi_b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, e) in [
            ("body force", &self.body_force),
            ("Dirichlet data", &self.dirichlet_data),
            ("Neumann data", &self.neumann_data),
        ] {
            if e.n_components() < 2 {
                return Err(Error::InvalidArgument(format!("{name} needs at least two components")));
            }
        }
        Ok(())
    }
}

/// Which boundary faces carry Dirichlet velocity data, and how the pressure
/// constant is fixed when the whole boundary is Dirichlet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundarySetup {
    pub all_dirichlet: bool,
    pub dirichlet_marker: u32,
    pub fix_one_pressure_dof: bool,
}

impl Default for BoundarySetup {
    fn default() -> Self {
        Self { all_dirichlet: true, dirichlet_marker: 1, fix_one_pressure_dof: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureConstraint {
    /// Some boundary is traction driven; the pressure is determined.
    None,
    /// The lowest constant-mode pressure dof is held at zero.
    FixOneDof,
    /// The pinned dof keeps its previous value and the mean is removed after the solve.
    MeanZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Evaluate the change of variables at `w_{n-1}` instead of `w_n`.
    pub semi_implicit: bool,
    /// Realize the elastic force through the solid mass projection.
    pub use_spread_operator: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { semi_implicit: true, use_spread_operator: false }
    }
}

/// Quadrature data of one mesh, precomputed for every cell.
#[derive(Debug, Clone)]
pub(crate) struct CellTables {
    pub n_q: usize,
    pub nb: usize,
    /// Shape values, `q * nb + a`.
    pub values: Vec<f64>,
    /// `(cell * n_q + q)`.
    pub jxw: Vec<f64>,
    pub points: Vec<Point>,
    /// Physical shape gradients, `(cell * n_q + q) * nb + a`.
    pub grads: Vec<[f64; 2]>,
}

impl CellTables {
    fn new(mesh: &Mesh, geometry: GeometryOrder, element: ReferenceElement, rule: &QuadratureRule) -> Result<Self> {
        let nb = element.n_basis();
        let n_q = rule.len();
        let mut values = vec![0.0; n_q * nb];
        let mut ref_grads = vec![[0.0; 2]; n_q * nb];
        for (q, &p) in rule.points.iter().enumerate() {
            element.fill_values(p, &mut values[q * nb..(q + 1) * nb]);
            element.fill_gradients(p, &mut ref_grads[q * nb..(q + 1) * nb]);
        }
        let cfg = MappingConfig::reference(geometry);
        let mut jxw = Vec::with_capacity(mesh.n_cells() * n_q);
        let mut points = Vec::with_capacity(mesh.n_cells() * n_q);
        let mut grads = Vec::with_capacity(mesh.n_cells() * n_q * nb);
        for cell in 0..mesh.n_cells() {
            let map = cell_map(mesh, &cfg, cell)?;
            for (q, &p) in rule.points.iter().enumerate() {
                let jac = map.jacobian(p);
                let det = jac.determinant();
                if det <= 0.0 {
                    return Err(Error::DegenerateMapping { cell, det });
                }
                let inv_t = inverse_transpose(&jac, det);
                jxw.push(det * rule.weights[q]);
                points.push(map.point(p));
                grads.extend(ref_grads[q * nb..(q + 1) * nb].iter().map(|g| apply(&inv_t, *g)));
            }
        }
        Ok(Self { n_q, nb, values, jxw, points, grads })
    }

    pub fn shape_values(&self, q: usize) -> &[f64] {
        &self.values[q * self.nb..(q + 1) * self.nb]
    }

    pub fn shape_grads(&self, cell: usize, q: usize) -> &[[f64; 2]] {
        let k = (cell * self.n_q + q) * self.nb;
        &self.grads[k..k + self.nb]
    }
}

pub(crate) fn inverse_transpose(jac: &Matrix2<f64>, det: f64) -> Matrix2<f64> {
    Matrix2::new(jac[(1, 1)], -jac[(1, 0)], -jac[(0, 1)], jac[(0, 0)]) / det
}

pub(crate) fn apply(m: &Matrix2<f64>, g: [f64; 2]) -> [f64; 2] {
    [m[(0, 0)] * g[0] + m[(0, 1)] * g[1], m[(1, 0)] * g[0] + m[(1, 1)] * g[1]]
}

/// A velocity dof with prescribed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DirichletDof {
    pub dof: usize,
    pub component: usize,
    pub point: Point,
}

/// Discretized fluid/solid problem: meshes, finite element fields,
/// quadrature tables and constraints.
///
/// The fluid block of every vector is `[u_x, u_y, p]`, the solid block `[w_x, w_y]`.
pub struct CoupledSystem {
    pub(crate) fluid_mesh: Mesh,
    pub(crate) solid_mesh: Mesh,
    pub(crate) velocity: DofHandler,
    pub(crate) pressure: DofHandler,
    pub(crate) displacement: DofHandler,
    pub(crate) constants: PhysicalConstants,
    pub(crate) model: SolidModel,
    pub(crate) fluid: CellTables,
    /// Pressure shape values at the fluid quadrature points, `q * np + k`.
    pub(crate) pressure_values: Vec<f64>,
    pub(crate) solid: CellTables,
    pub(crate) dirichlet: Vec<DirichletDof>,
    pub(crate) neumann_faces: Vec<(usize, usize)>,
    pub(crate) pressure_constraint: PressureConstraint,
    pub(crate) solid_mass: CsrMatrix,
    pub(crate) solid_mass_lu: Factorization,
    pub(crate) pattern_cache: Mutex<Option<(Vec<(usize, usize)>, BlockedSparseMatrix)>>,
}

/// Geometry of the solid reference configuration.
pub const SOLID_GEOMETRY: GeometryOrder = GeometryOrder::Biquadratic;
/// Geometry of the (fixed, straight-sided) fluid cells.
pub const FLUID_GEOMETRY: GeometryOrder = GeometryOrder::Bilinear;

impl CoupledSystem {
    /// Q2 velocity with the chosen degree-one pressure on the fluid mesh and a
    /// Q2 displacement on the solid mesh.
    pub fn new(
        fluid_mesh: Mesh,
        solid_mesh: Mesh,
        pressure_family: PressureFamily,
        constants: PhysicalConstants,
        model: SolidModel,
        boundary: BoundarySetup,
    ) -> Result<Self> {
        constants.validate()?;
        let q2 = ReferenceElement::q2();
        let velocity = DofHandler::new(&fluid_mesh, q2, 2);
        let pressure_element = match pressure_family {
            PressureFamily::Dgp => ReferenceElement::p1_discontinuous(),
            PressureFamily::Q => ReferenceElement::q1(),
        };
        let pressure = DofHandler::new(&fluid_mesh, pressure_element, 1);
        let displacement = DofHandler::new(&solid_mesh, q2, 2);

        let fluid_rule = gauss_rule(q2.degree() + 1)?;
        let fluid = CellTables::new(&fluid_mesh, FLUID_GEOMETRY, q2, &fluid_rule)?;
        let np = pressure_element.n_basis();
        let mut pressure_values = vec![0.0; fluid_rule.len() * np];
        for (q, &p) in fluid_rule.points.iter().enumerate() {
            pressure_element.fill_values(p, &mut pressure_values[q * np..(q + 1) * np]);
        }
        let solid = CellTables::new(&solid_mesh, SOLID_GEOMETRY, q2, &gauss_rule(q2.degree() + 2)?)?;

        let dirichlet_faces = |marker: u32| boundary.all_dirichlet || marker == boundary.dirichlet_marker;
        let mut markers: Vec<u32> = fluid_mesh.boundary_faces().iter().map(|f| f.marker).collect();
        markers.sort_unstable();
        markers.dedup();
        let support = velocity.support_points(&fluid_mesh, FLUID_GEOMETRY);
        let ns = velocity.n_scalar();
        let mut nodes: Vec<usize> = markers
            .iter()
            .filter(|&&m| dirichlet_faces(m))
            .flat_map(|&m| velocity.boundary_nodes(&fluid_mesh, m))
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut dirichlet = Vec::with_capacity(2 * nodes.len());
        for component in 0..2 {
            for &k in &nodes {
                let dof = component * ns + k;
                dirichlet.push(DirichletDof { dof, component, point: support[k] });
            }
        }
        let neumann_faces: Vec<(usize, usize)> = fluid_mesh
            .boundary_faces()
            .iter()
            .filter(|f| !dirichlet_faces(f.marker))
            .map(|f| (f.cell, f.face))
            .collect();
        let pressure_constraint = match (neumann_faces.is_empty(), boundary.fix_one_pressure_dof) {
            (false, _) => PressureConstraint::None,
            (true, true) => PressureConstraint::FixOneDof,
            (true, false) => PressureConstraint::MeanZero,
        };

        let solid_mass = scalar_mass_matrix(&displacement, &solid);
        let mut pattern = PatternBuilder::new(solid_mass.nrows(), solid_mass.nrows());
        for r in 0..solid_mass.nrows() {
            for &c in solid_mass.row(r).0 {
                pattern.insert(r, c);
            }
        }
        let mut blocked = BlockedSparseMatrix::from_global_pattern(solid_mass.nrows(), 0, &pattern);
        for r in 0..solid_mass.nrows() {
            let (cols, vals) = solid_mass.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                blocked.add(r, c, v)?;
            }
        }
        let solid_mass_lu = LinearSolver::new().factorize(&blocked)?;

        Ok(Self {
            fluid_mesh,
            solid_mesh,
            velocity,
            pressure,
            displacement,
            constants,
            model,
            fluid,
            pressure_values,
            solid,
            dirichlet,
            neumann_faces,
            pressure_constraint,
            solid_mass,
            solid_mass_lu,
            pattern_cache: Mutex::new(None),
        })
    }

    pub fn fluid_mesh(&self) -> &Mesh {
        &self.fluid_mesh
    }

    pub fn solid_mesh(&self) -> &Mesh {
        &self.solid_mesh
    }

    pub fn velocity_dofs(&self) -> &DofHandler {
        &self.velocity
    }

    pub fn pressure_dofs(&self) -> &DofHandler {
        &self.pressure
    }

    pub fn displacement_dofs(&self) -> &DofHandler {
        &self.displacement
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn model(&self) -> &SolidModel {
        &self.model
    }

    pub fn pressure_constraint(&self) -> PressureConstraint {
        self.pressure_constraint
    }

    pub fn n_velocity(&self) -> usize {
        self.velocity.n_dofs()
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure.n_dofs()
    }

    /// `n_dofs_up`.
    pub fn n_fluid(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    /// `n_dofs_W`.
    pub fn n_solid(&self) -> usize {
        self.displacement.n_dofs()
    }

    /// Velocity dofs carrying Dirichlet data, ascending.
    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.dirichlet.iter().map(|d| d.dof).collect();
        d.sort_unstable();
        d
    }

    /// Pressure row replaced by a pin, as a fluid-block index.
    pub fn pinned_pressure_dof(&self) -> Option<usize> {
        match self.pressure_constraint {
            PressureConstraint::None => None,
            _ => Some(self.n_velocity()),
        }
    }

    pub fn zero_vector(&self) -> BlockedVector {
        BlockedVector::zeros(self.n_fluid(), self.n_solid())
    }

    /// Fluid dofs (velocity, then pressure) of a fluid cell as fluid-block indices.
    pub(crate) fn fluid_cell_dofs(&self, cell: usize, out: &mut Vec<usize>) {
        self.velocity.fill_cell_dofs(cell, out);
        let nu = self.n_velocity();
        out.extend(self.pressure.cell_nodes(cell).iter().map(|&k| nu + k));
    }

    /// Interpolated initial state: `u0` (with Dirichlet values at `t0`), zero
    /// pressure and displacement `w0`.
    pub fn initial_state(&self, u0: &Expression, w0: &Expression, t0: f64) -> Result<BlockedVector> {
        let mut xi = self.zero_vector();
        let mut err = None;
        let u = self.velocity.interpolate(&self.fluid_mesh, FLUID_GEOMETRY, |x| {
            u0.evaluate(x.x, x.y, t0).unwrap_or_else(|e| {
                err.get_or_insert(e);
                vec![0.0; 2]
            })
        });
        let w = self.displacement.interpolate(&self.solid_mesh, SOLID_GEOMETRY, |x| {
            w0.evaluate(x.x, x.y, t0).unwrap_or_else(|e| {
                err.get_or_insert(e);
                vec![0.0; 2]
            })
        });
        if let Some(e) = err {
            return Err(e);
        }
        xi.fluid[..u.len()].copy_from_slice(&u);
        xi.solid.copy_from_slice(&w);
        for d in &self.dirichlet {
            xi.fluid[d.dof] = self.dirichlet_value(d, t0)?;
        }
        Ok(xi)
    }

    pub(crate) fn dirichlet_value(&self, d: &DirichletDof, t: f64) -> Result<f64> {
        self.constants.dirichlet_data.evaluate_component(d.component, d.point.x, d.point.y, t)
    }

    /// `int_Omega p / |Omega|` of the pressure in a fluid block.
    pub fn pressure_mean(&self, fluid: &[f64]) -> f64 {
        let np = self.pressure.element().n_basis();
        let nu = self.n_velocity();
        let (mut integral, mut area) = (0.0, 0.0);
        for cell in 0..self.fluid_mesh.n_cells() {
            let nodes = self.pressure.cell_nodes(cell);
            for q in 0..self.fluid.n_q {
                let jxw = self.fluid.jxw[cell * self.fluid.n_q + q];
                let psi = &self.pressure_values[q * np..(q + 1) * np];
                let p: f64 = nodes.iter().zip(psi).map(|(&k, v)| fluid[nu + k] * v).sum();
                integral += p * jxw;
                area += jxw;
            }
        }
        integral / area
    }

    /// Shifts the pressure to zero mean.
    pub fn normalize_pressure(&self, fluid: &mut [f64]) {
        let mean = self.pressure_mean(fluid);
        let nu = self.n_velocity();
        match self.pressure.element().is_continuous() {
            true => fluid[nu..].iter_mut().for_each(|p| *p -= mean),
            // only the constant Legendre mode carries the mean
            false => {
                let np = self.pressure.element().n_basis();
                fluid[nu..].iter_mut().step_by(np).for_each(|p| *p -= mean);
            }
        }
    }

    /// Solid velocity mass matrix `int_B y_i y_j` of one scalar component.
    pub fn solid_mass_matrix(&self) -> &CsrMatrix {
        &self.solid_mass
    }

    /// Scalar velocity mass matrix `int_Omega v_i v_j` on the fluid mesh.
    pub fn fluid_mass_matrix(&self) -> CsrMatrix {
        scalar_mass_matrix(&self.velocity, &self.fluid)
    }

    /// Scalar `int grad v_i . grad v_j + v_i v_j` on the fluid mesh.
    pub fn fluid_h1_matrix(&self) -> CsrMatrix {
        let t = &self.fluid;
        let mut m = scalar_pattern(&self.velocity);
        for cell in 0..self.velocity.n_cells() {
            let nodes = self.velocity.cell_nodes(cell);
            for q in 0..t.n_q {
                let jxw = t.jxw[cell * t.n_q + q];
                let (phi, g) = (t.shape_values(q), t.shape_grads(cell, q));
                for a in 0..t.nb {
                    for b in 0..t.nb {
                        let v = (phi[a] * phi[b] + g[a][0] * g[b][0] + g[a][1] * g[b][1]) * jxw;
                        m.add(nodes[a], nodes[b], v).expect("cell couplings are in the pattern");
                    }
                }
            }
        }
        m
    }

    /// Continuity rows `-int q div u` for a velocity block, unconstrained.
    pub fn continuity_defect(&self, velocity: &[f64]) -> Vec<f64> {
        let t = &self.fluid;
        let np = self.pressure.element().n_basis();
        let ns = self.velocity.n_scalar();
        let mut out = vec![0.0; self.n_pressure()];
        for cell in 0..self.fluid_mesh.n_cells() {
            let nodes = self.velocity.cell_nodes(cell);
            let pnodes = self.pressure.cell_nodes(cell);
            for q in 0..t.n_q {
                let jxw = t.jxw[cell * t.n_q + q];
                let g = t.shape_grads(cell, q);
                let div: f64 = nodes.iter().zip(g).map(|(&k, g)| velocity[k] * g[0] + velocity[ns + k] * g[1]).sum();
                let psi = &self.pressure_values[q * np..(q + 1) * np];
                for (&k, v) in pnodes.iter().zip(psi) {
                    out[k] -= v * div * jxw;
                }
            }
        }
        out
    }

    /// `int_B J[w] dV`.
    pub fn solid_area(&self, w: &[f64]) -> Result<f64> {
        let t = &self.solid;
        let ns = self.displacement.n_scalar();
        let mut area = 0.0;
        for cell in 0..self.solid_mesh.n_cells() {
            let nodes = self.displacement.cell_nodes(cell);
            for q in 0..t.n_q {
                let g = t.shape_grads(cell, q);
                let f = Matrix2::identity() + field_gradient(w, ns, nodes, g);
                let det = f.determinant();
                if det <= 0.0 {
                    return Err(Error::DegenerateMapping { cell, det });
                }
                area += det * t.jxw[cell * t.n_q + q];
            }
        }
        Ok(area)
    }
}

/// `grad w` at a quadrature point from nodal values of a two-component field.
pub(crate) fn field_gradient(w: &[f64], ns: usize, nodes: &[usize], grads: &[[f64; 2]]) -> Matrix2<f64> {
    let mut m = Matrix2::zeros();
    for (&k, g) in nodes.iter().zip(grads) {
        let (wx, wy) = (w[k], w[ns + k]);
        m[(0, 0)] += wx * g[0];
        m[(0, 1)] += wx * g[1];
        m[(1, 0)] += wy * g[0];
        m[(1, 1)] += wy * g[1];
    }
    m
}

pub(crate) fn field_value(w: &[f64], ns: usize, nodes: &[usize], phi: &[f64]) -> Point {
    nodes.iter().zip(phi).fold(Point::zeros(), |acc, (&k, v)| acc + Point::new(w[k], w[ns + k]) * *v)
}

fn scalar_pattern(dh: &DofHandler) -> CsrMatrix {
    let n = dh.n_scalar();
    let mut p = PatternBuilder::new(n, n);
    for cell in 0..dh.n_cells() {
        let nodes = dh.cell_nodes(cell);
        p.insert_block(nodes, nodes);
    }
    p.build()
}

fn scalar_mass_matrix(dh: &DofHandler, t: &CellTables) -> CsrMatrix {
    let mut m = scalar_pattern(dh);
    for cell in 0..dh.n_cells() {
        let nodes = dh.cell_nodes(cell);
        for q in 0..t.n_q {
            let jxw = t.jxw[cell * t.n_q + q];
            let phi = t.shape_values(q);
            for a in 0..t.nb {
                for b in 0..t.nb {
                    m.add(nodes[a], nodes[b], phi[a] * phi[b] * jxw).expect("cell couplings are in the pattern");
                }
            }
        }
    }
    m
}
