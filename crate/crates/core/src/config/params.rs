//! Run configuration in the `set Name = value` / `subsection ... end` dialect.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::expr::{parse_constants, Expression};
use crate::constitutive::ModelKind;
use crate::error::{Error, Result};

pub const RING_SECTION: &str = "Equilibrium Solution of Ring with Circumferential Fibers";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureFamily {
    /// Discontinuous Legendre modes (`FE_DGP`).
    Dgp,
    /// Continuous Lagrange (`FE_Q`).
    Q,
}

impl PressureFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PressureFamily::Dgp => "FE_DGP",
            PressureFamily::Q => "FE_Q",
        }
    }
}

impl FromStr for PressureFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "FE_DGP" => Ok(PressureFamily::Dgp),
            "FE_Q" => Ok(PressureFamily::Q),
            other => Err(format!("unknown pressure element '{other}' (expected FE_DGP or FE_Q)")),
        }
    }
}

/// One function subsection: constants, expression text and variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    pub constants: String,
    pub expression: String,
    pub variables: String,
}

impl FunctionSpec {
    pub fn new(expression: &str) -> Self {
        Self { constants: String::new(), expression: expression.into(), variables: "x,y,t".into() }
    }

    pub fn parse(&self, components: usize) -> Result<Expression> {
        let constants = parse_constants(&self.constants).map_err(Error::Domain)?;
        Expression::parse_with_constants(&self.expression, components, &constants)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingGeometry {
    pub edge_length: f64,
    pub inner_radius: f64,
    pub width: f64,
    pub center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub final_t: f64,
    pub delta_t: f64,
    pub output_interval: usize,
    pub force_jacobian_each_step: bool,
    pub update_jacobian_every_iteration: bool,
    pub semi_implicit: bool,
    pub use_spread_operator: bool,
    pub newton_tolerance: f64,
    pub max_newton_iterations: usize,
    pub model: ModelKind,
    pub density: f64,
    pub viscosity: f64,
    pub elastic_modulus: f64,
    pub phi_b: f64,
    pub solid_mesh: String,
    pub solid_refinement: usize,
    pub fluid_mesh: String,
    pub fluid_refinement: usize,
    pub all_dirichlet: bool,
    pub dirichlet_marker: u32,
    pub velocity_degree: usize,
    pub pressure_family: PressureFamily,
    pub fix_one_pressure_dof: bool,
    pub output_base: String,
    pub ring: RingGeometry,
    /// Initial solid displacement (2 components).
    pub w0: FunctionSpec,
    /// Body force per unit mass (velocity components plus an unused pressure slot).
    pub force: FunctionSpec,
    /// Initial velocity (3 components).
    pub u0: FunctionSpec,
    /// Dirichlet velocity data (3 components).
    pub ug: FunctionSpec,
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters {
            final_t: 1.0,
            delta_t: 0.1,
            output_interval: 1,
            force_jacobian_each_step: false,
            update_jacobian_every_iteration: false,
            semi_implicit: true,
            use_spread_operator: true,
            newton_tolerance: 1e-10,
            max_newton_iterations: 25,
            model: ModelKind::Inh0,
            density: 1.0,
            viscosity: 1.0,
            elastic_modulus: 1.0,
            phi_b: 1.0,
            solid_mesh: "meshes/solid_square.inp".into(),
            solid_refinement: 1,
            fluid_mesh: "meshes/fluid_square.inp".into(),
            fluid_refinement: 4,
            all_dirichlet: true,
            dirichlet_marker: 1,
            velocity_degree: 2,
            pressure_family: PressureFamily::Dgp,
            fix_one_pressure_dof: false,
            output_base: "out/square".into(),
            ring: RingGeometry { edge_length: 1.0, inner_radius: 0.25, width: 0.0625, center: [0.5, 0.5] },
            w0: FunctionSpec::new("0; 0"),
            force: FunctionSpec::new("0; 0; 0"),
            u0: FunctionSpec::new("0; 0; 0"),
            ug: FunctionSpec::new("if(y>.99, 1, 0); 0; 0"),
        }
    }
}

/// Parameters together with the non-fatal diagnostics found while reading them.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedParameters {
    pub parameters: Parameters,
    pub warnings: Vec<String>,
}

/// Number of components each function subsection must have.
pub const FUNCTION_SECTIONS: [(&str, usize); 4] = [("W0", 2), ("force", 3), ("u0", 3), ("ug", 3)];

fn value<T: FromStr>(key: &str, line: usize, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::InvalidValue {
        key: key.into(),
        line,
        message: format!("cannot interpret '{raw}'"),
    })
}

fn boolean(key: &str, line: usize, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" => Ok(true),
        "false" | "no" => Ok(false),
        _ => Err(Error::InvalidValue { key: key.into(), line, message: format!("'{raw}' is not a boolean") }),
    }
}

impl Parameters {
    pub fn function(&self, section: &str) -> Option<&FunctionSpec> {
        match section {
            "W0" => Some(&self.w0),
            "force" => Some(&self.force),
            "u0" => Some(&self.u0),
            "ug" => Some(&self.ug),
            _ => None,
        }
    }

    fn function_mut(&mut self, section: &str) -> Option<&mut FunctionSpec> {
        match section {
            "W0" => Some(&mut self.w0),
            "force" => Some(&mut self.force),
            "u0" => Some(&mut self.u0),
            "ug" => Some(&mut self.ug),
            _ => None,
        }
    }

    /// Applies one entry; `Ok(false)` means the key is unknown.
    fn set(&mut self, section: &[String], key: &str, raw: &str, line: usize) -> Result<bool> {
        let k = key;
        match section {
            [] => match key {
                "Final t" => self.final_t = value(k, line, raw)?,
                "Delta t" => self.delta_t = value(k, line, raw)?,
                "Interval (of time-steps) between output" => self.output_interval = value(k, line, raw)?,
                "Force J update at step beginning" => self.force_jacobian_each_step = boolean(k, line, raw)?,
                "Update J cont" => self.update_jacobian_every_iteration = boolean(k, line, raw)?,
                "Semi-implicit scheme" => self.semi_implicit = boolean(k, line, raw)?,
                "Use spread operator" => self.use_spread_operator = boolean(k, line, raw)?,
                "Newton tolerance" => self.newton_tolerance = value(k, line, raw)?,
                "Maximum Newton iterations" => self.max_newton_iterations = value(k, line, raw)?,
                "Solid constitutive model" => {
                    self.model = raw
                        .parse()
                        .map_err(|message| Error::InvalidValue { key: k.into(), line, message })?
                }
                "Density" => self.density = value(k, line, raw)?,
                "Viscosity" => self.viscosity = value(k, line, raw)?,
                "Elastic modulus" => self.elastic_modulus = value(k, line, raw)?,
                "Phi_B" => self.phi_b = value(k, line, raw)?,
                "Solid mesh" => self.solid_mesh = raw.into(),
                "Solid refinement" => self.solid_refinement = value(k, line, raw)?,
                "Fluid mesh" => self.fluid_mesh = raw.into(),
                "Fluid refinement" => self.fluid_refinement = value(k, line, raw)?,
                "All Dirichlet BC" => self.all_dirichlet = boolean(k, line, raw)?,
                "Dirichlet BC indicator" => self.dirichlet_marker = value(k, line, raw)?,
                "Velocity finite element degree" => self.velocity_degree = value(k, line, raw)?,
                "Finite element for pressure" => {
                    self.pressure_family = raw
                        .parse()
                        .map_err(|message| Error::InvalidValue { key: k.into(), line, message })?
                }
                "Fix one dof of p" => self.fix_one_pressure_dof = boolean(k, line, raw)?,
                "Output base name" => self.output_base = raw.into(),
                _ => return Ok(false),
            },
            [s] if s == RING_SECTION => match key {
                "Any edge length of the (square) control volume" => self.ring.edge_length = value(k, line, raw)?,
                "Inner radius of the ring" => self.ring.inner_radius = value(k, line, raw)?,
                "Width of the ring" => self.ring.width = value(k, line, raw)?,
                "x-coordinate of the center of the ring" => self.ring.center[0] = value(k, line, raw)?,
                "y-coordinate of the center of the ring" => self.ring.center[1] = value(k, line, raw)?,
                _ => return Ok(false),
            },
            [s] => {
                let Some(f) = self.function_mut(s) else { return Ok(false) };
                match key {
                    "Function constants" => f.constants = raw.into(),
                    "Function expression" => f.expression = raw.into(),
                    "Variable names" => f.variables = raw.into(),
                    _ => return Ok(false),
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn validate(&self, lines: &HashMap<String, usize>, warnings: &mut Vec<String>) -> Result<()> {
        let line = |k: &str| lines.get(k).copied().unwrap_or(0);
        let fail = |k: &str, message: String| Error::InvalidValue { key: k.into(), line: line(k), message };
        if !(self.delta_t > 0.0) {
            return Err(fail("Delta t", format!("must be positive, got {}", self.delta_t)));
        }
        if !(self.final_t >= self.delta_t) {
            return Err(fail("Final t", format!("must be at least Delta t ({}), got {}", self.delta_t, self.final_t)));
        }
        if self.output_interval == 0 {
            return Err(fail("Interval (of time-steps) between output", "must be at least 1".into()));
        }
        if !(self.newton_tolerance > 0.0) {
            return Err(fail("Newton tolerance", "must be positive".into()));
        }
        if self.max_newton_iterations == 0 {
            return Err(fail("Maximum Newton iterations", "must be at least 1".into()));
        }
        for (k, v) in [
            ("Density", self.density),
            ("Viscosity", self.viscosity),
            ("Elastic modulus", self.elastic_modulus),
            ("Phi_B", self.phi_b),
        ] {
            if !(v > 0.0) {
                return Err(fail(k, format!("must be positive, got {v}")));
            }
        }
        if self.velocity_degree != 2 {
            return Err(fail(
                "Velocity finite element degree",
                format!("only degree 2 is available (got {})", self.velocity_degree),
            ));
        }
        for (section, n) in FUNCTION_SECTIONS {
            let spec = self.function(section).expect("known section");
            let key = format!("{section}/Function expression");
            if let Err(e) = spec.parse(n) {
                return Err(Error::InvalidValue { line: line(&key), key, message: e.to_string() });
            }
            let vars: Vec<&str> = spec.variables.split(',').map(str::trim).collect();
            if vars != ["x", "y", "t"] {
                warnings.push(format!(
                    "subsection {section}: variable names '{}' are not supported, using x,y,t",
                    spec.variables
                ));
            }
        }
        Ok(())
    }

    pub fn to_prm(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Parameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let mut set = |key: &str, value: String| {
            let _ = writeln!(s, "set {key:<43} = {value}");
        };
        set("Final t", self.final_t.to_string());
        set("Delta t", self.delta_t.to_string());
        set("Interval (of time-steps) between output", self.output_interval.to_string());
        set("Force J update at step beginning", self.force_jacobian_each_step.to_string());
        set("Update J cont", self.update_jacobian_every_iteration.to_string());
        set("Semi-implicit scheme", self.semi_implicit.to_string());
        set("Use spread operator", self.use_spread_operator.to_string());
        set("Newton tolerance", format!("{:e}", self.newton_tolerance));
        set("Maximum Newton iterations", self.max_newton_iterations.to_string());
        set("Solid constitutive model", self.model.name().into());
        set("Density", self.density.to_string());
        set("Viscosity", self.viscosity.to_string());
        set("Elastic modulus", self.elastic_modulus.to_string());
        set("Phi_B", self.phi_b.to_string());
        set("Solid mesh", self.solid_mesh.clone());
        set("Solid refinement", self.solid_refinement.to_string());
        set("Fluid mesh", self.fluid_mesh.clone());
        set("Fluid refinement", self.fluid_refinement.to_string());
        set("All Dirichlet BC", self.all_dirichlet.to_string());
        set("Dirichlet BC indicator", self.dirichlet_marker.to_string());
        set("Velocity finite element degree", self.velocity_degree.to_string());
        set("Finite element for pressure", self.pressure_family.name().into());
        set("Fix one dof of p", self.fix_one_pressure_dof.to_string());
        set("Output base name", self.output_base.clone());
        let _ = writeln!(s, "\nsubsection {RING_SECTION}");
        let r = &self.ring;
        for (k, v) in [
            ("Any edge length of the (square) control volume", r.edge_length),
            ("Inner radius of the ring", r.inner_radius),
            ("Width of the ring", r.width),
            ("x-coordinate of the center of the ring", r.center[0]),
            ("y-coordinate of the center of the ring", r.center[1]),
        ] {
            let _ = writeln!(s, "  set {k:<48} = {v}");
        }
        let _ = writeln!(s, "end");
        for (section, _) in FUNCTION_SECTIONS {
            let spec = self.function(section).expect("known section");
            let _ = writeln!(s, "\nsubsection {section}");
            let _ = writeln!(s, "  set Function constants  = {}", spec.constants);
            let _ = writeln!(s, "  set Function expression = {}", spec.expression);
            let _ = writeln!(s, "  set Variable names      = {}", spec.variables);
            let _ = writeln!(s, "end");
        }
        f.write_str(&s)
    }
}

pub fn parse_parameters(text: &str) -> Result<ParsedParameters> {
    let mut params = Parameters::default();
    let mut warnings = Vec::new();
    let mut sections: Vec<String> = Vec::new();
    let mut key_lines = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("subsection ") {
            sections.push(rest.trim().to_string());
        } else if content == "end" {
            if sections.pop().is_none() {
                return Err(Error::Parse { line, message: "'end' without matching subsection".into() });
            }
        } else if let Some(rest) = content.strip_prefix("set ") {
            let (key, val) = rest
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, message: "expected 'set <name> = <value>'".into() })?;
            let (key, val) = (key.trim(), val.trim());
            if key.is_empty() {
                return Err(Error::Parse { line, message: "missing parameter name".into() });
            }
            if params.set(&sections, key, val, line)? {
                let path = sections.iter().map(String::as_str).chain([key]).collect::<Vec<_>>().join("/");
                key_lines.insert(path, line);
            } else {
                let path = sections.iter().map(String::as_str).chain([key]).collect::<Vec<_>>().join("/");
                warnings.push(format!("line {line}: unknown parameter '{path}' ignored"));
            }
        } else {
            return Err(Error::Parse { line, message: format!("cannot parse '{content}'") });
        }
    }
    if let Some(open) = sections.last() {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("subsection '{open}' is not closed"),
        });
    }
    params.validate(&key_lines, &mut warnings)?;
    Ok(ParsedParameters { parameters: params, warnings })
}

impl FromStr for Parameters {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed = parse_parameters(s)?;
        for w in &parsed.warnings {
            log::warn!("{w}");
        }
        Ok(parsed.parameters)
    }
}
