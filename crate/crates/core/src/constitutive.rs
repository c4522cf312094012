//! Elastic first Piola-Kirchhoff stresses of the incompressible solid models.
//!
//! Only the elastic part is returned; the reactive `-p F^{-T}` term is carried
//! by the pressure coupling in the assembled system.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::mesh::Point;

pub type Tensor = Matrix2<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationGradient {
    f: Tensor,
    j: f64,
}

impl DeformationGradient {
    pub fn new(f: Tensor) -> Self {
        Self { f, j: f.determinant() }
    }

    /// `F = I + grad_s w`.
    pub fn from_displacement_gradient(grad_w: Tensor) -> Self {
        Self::new(Tensor::identity() + grad_w)
    }

    pub fn f(&self) -> &Tensor {
        &self.f
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    /// `F^{-T}`.
    pub fn inverse_transpose(&self) -> Result<Tensor> {
        if self.j == 0.0 || !self.j.is_finite() {
            return Err(Error::SingularDeformation { det: self.j });
        }
        let f = &self.f;
        Ok(Tensor::new(f[(1, 1)], -f[(1, 0)], -f[(0, 1)], f[(0, 0)]) / self.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `mu (F - F^{-T})`: stress free in the reference configuration.
    Inh0,
    /// `mu F`.
    Inh1,
    /// `mu F (u_T x u_T)` with `u_T` the circumferential direction about a center.
    CircumferentialFiber,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Inh0 => "INH_0",
            ModelKind::Inh1 => "INH_1",
            ModelKind::CircumferentialFiber => "CircumferentialFiberModel",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "INH_0" => Ok(ModelKind::Inh0),
            "INH_1" => Ok(ModelKind::Inh1),
            "CircumferentialFiberModel" | "CircumferentialFiber" => Ok(ModelKind::CircumferentialFiber),
            other => Err(format!(
                "unknown constitutive model '{other}' (expected INH_0, INH_1 or CircumferentialFiberModel)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolidModel {
    pub kind: ModelKind,
    pub shear_modulus: f64,
    pub fiber_center: Point,
}

impl SolidModel {
    pub fn new(kind: ModelKind, shear_modulus: f64) -> Self {
        Self { kind, shear_modulus, fiber_center: Point::zeros() }
    }

    pub fn fiber(shear_modulus: f64, center: Point) -> Self {
        Self { kind: ModelKind::CircumferentialFiber, shear_modulus, fiber_center: center }
    }

    /// `u_T (x) u_T` at reference point `s`; zero at the fiber center.
    fn fiber_projector(&self, s: Point) -> Tensor {
        let d = s - self.fiber_center;
        let r = d.norm();
        if r == 0.0 {
            return Tensor::zeros();
        }
        let u = Point::new(-d.y, d.x) / r;
        u * u.transpose()
    }

    pub fn elastic_pk1(&self, f: &DeformationGradient, s: Point) -> Result<Tensor> {
        let mu = self.shear_modulus;
        Ok(match self.kind {
            ModelKind::Inh0 => (f.f - f.inverse_transpose()?) * mu,
            ModelKind::Inh1 => f.f * mu,
            ModelKind::CircumferentialFiber => f.f * self.fiber_projector(s) * mu,
        })
    }

    /// Directional derivative `dP/dF [h]`.
    pub fn elastic_tangent(&self, f: &DeformationGradient, s: Point, h: &Tensor) -> Result<Tensor> {
        let mu = self.shear_modulus;
        Ok(match self.kind {
            ModelKind::Inh0 => {
                let fit = f.inverse_transpose()?;
                (h + fit * h.transpose() * fit) * mu
            }
            ModelKind::Inh1 => h * mu,
            ModelKind::CircumferentialFiber => h * self.fiber_projector(s) * mu,
        })
    }
}

pub fn elastic_pk1(model: &SolidModel, f: &DeformationGradient, s: Point) -> Result<Tensor> {
    model.elastic_pk1(f, s)
}

pub fn elastic_tangent(model: &SolidModel, f: &DeformationGradient, s: Point, h: &Tensor) -> Result<Tensor> {
    model.elastic_tangent(f, s, h)
}
