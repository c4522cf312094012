use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Continuous tensor-product Lagrange polynomials on equispaced nodes.
    LagrangeQ,
    /// Per-cell Legendre modes of total degree <= r, no inter-cell continuity.
    LegendreP,
}

/// Scalar reference element on the unit square `[0,1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReferenceElement {
    family: Family,
    degree: usize,
}

fn lagrange_1d(degree: usize, k: usize, x: f64) -> (f64, f64) {
    match (degree, k) {
        (1, 0) => (1.0 - x, -1.0),
        (1, 1) => (x, 1.0),
        (2, 0) => (2.0 * (x - 0.5) * (x - 1.0), 4.0 * x - 3.0),
        (2, 1) => (-4.0 * x * (x - 1.0), -8.0 * x + 4.0),
        (2, 2) => (2.0 * x * (x - 0.5), 4.0 * x - 1.0),
        _ => unreachable!("unsupported 1d Lagrange basis ({degree}, {k})"),
    }
}

impl ReferenceElement {
    pub fn lagrange(degree: usize) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::InvalidArgument(format!(
                "Lagrange elements of degree {degree} are not available (1 or 2)"
            )));
        }
        Ok(Self { family: Family::LagrangeQ, degree })
    }

    pub fn legendre(degree: usize) -> Result<Self> {
        if degree > 1 {
            return Err(Error::InvalidArgument(format!(
                "discontinuous Legendre elements of degree {degree} are not available (0 or 1)"
            )));
        }
        Ok(Self { family: Family::LegendreP, degree })
    }

    pub fn q1() -> Self {
        Self { family: Family::LagrangeQ, degree: 1 }
    }

    pub fn q2() -> Self {
        Self { family: Family::LagrangeQ, degree: 2 }
    }

    pub fn p1_discontinuous() -> Self {
        Self { family: Family::LegendreP, degree: 1 }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_continuous(&self) -> bool {
        self.family == Family::LagrangeQ
    }

    pub fn n_basis(&self) -> usize {
        match self.family {
            Family::LagrangeQ => (self.degree + 1).pow(2),
            Family::LegendreP => (self.degree + 1) * (self.degree + 2) / 2,
        }
    }

    /// Reference coordinates of the Lagrange nodes, lexicographic
    /// (`index = j * (degree + 1) + i`). Empty for modal elements.
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        if self.family != Family::LagrangeQ {
            return Vec::new();
        }
        let r = self.degree;
        let mut out = Vec::with_capacity(self.n_basis());
        for j in 0..=r {
            for i in 0..=r {
                out.push([i as f64 / r as f64, j as f64 / r as f64]);
            }
        }
        out
    }

    fn check(&self, i: usize) -> Result<()> {
        if i < self.n_basis() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, n_basis: self.n_basis() })
        }
    }

    pub fn shape_value(&self, i: usize, p: [f64; 2]) -> Result<f64> {
        self.check(i)?;
        Ok(self.value_unchecked(i, p))
    }

    pub fn shape_gradient(&self, i: usize, p: [f64; 2]) -> Result<[f64; 2]> {
        self.check(i)?;
        Ok(self.gradient_unchecked(i, p))
    }

    fn value_unchecked(&self, i: usize, p: [f64; 2]) -> f64 {
        match self.family {
            Family::LagrangeQ => {
                let n = self.degree + 1;
                lagrange_1d(self.degree, i % n, p[0]).0 * lagrange_1d(self.degree, i / n, p[1]).0
            }
            Family::LegendreP => match i {
                0 => 1.0,
                1 => p[0] - 0.5,
                _ => p[1] - 0.5,
            },
        }
    }

    fn gradient_unchecked(&self, i: usize, p: [f64; 2]) -> [f64; 2] {
        match self.family {
            Family::LagrangeQ => {
                let n = self.degree + 1;
                let (fx, dx) = lagrange_1d(self.degree, i % n, p[0]);
                let (fy, dy) = lagrange_1d(self.degree, i / n, p[1]);
                [dx * fy, fx * dy]
            }
            Family::LegendreP => match i {
                0 => [0.0, 0.0],
                1 => [1.0, 0.0],
                _ => [0.0, 1.0],
            },
        }
    }

    /// All basis values at `p`, written into `out[..n_basis]`.
    pub fn fill_values(&self, p: [f64; 2], out: &mut [f64]) {
        for (i, v) in out[..self.n_basis()].iter_mut().enumerate() {
            *v = self.value_unchecked(i, p);
        }
    }

    pub fn fill_gradients(&self, p: [f64; 2], out: &mut [[f64; 2]]) {
        for (i, g) in out[..self.n_basis()].iter_mut().enumerate() {
            *g = self.gradient_unchecked(i, p);
        }
    }

    pub fn values(&self, p: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_basis()];
        self.fill_values(p, &mut out);
        out
    }

    pub fn gradients(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.n_basis()];
        self.fill_gradients(p, &mut out);
        out
    }
}
