use crate::error::{Error, Result};

/// Tensor-product rule on the unit square; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, ascending.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n from the Chebyshev-like initial guess
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1,1] -> [0,1]; z is the i-th largest root
        x[n - 1 - i] = 0.5 * (1.0 + z);
        x[i] = 0.5 * (1.0 - z);
        w[i] = 0.5 * weight;
        w[n - 1 - i] = 0.5 * weight;
    }
    (x, w)
}

pub fn gauss_rule(points_per_direction: usize) -> Result<QuadratureRule> {
    if points_per_direction == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one point".into()));
    }
    let (x, w) = gauss_legendre_1d(points_per_direction);
    let mut points = Vec::with_capacity(x.len() * x.len());
    let mut weights = Vec::with_capacity(x.len() * x.len());
    for j in 0..x.len() {
        for i in 0..x.len() {
            points.push([x[i], x[j]]);
            weights.push(w[i] * w[j]);
        }
    }
    Ok(QuadratureRule { points, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn midpoint_rule() {
        let q = gauss_rule(1).unwrap();
        assert_eq!(q.points, vec![[0.5, 0.5]]);
        assert_abs_diff_eq!(q.weights[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn three_points_integrate_degree_five() {
        let q = gauss_rule(3).unwrap();
        let s: f64 = q
            .points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p[0].powi(5) * p[1].powi(5))
            .sum();
        assert_abs_diff_eq!(s, 1.0 / 36.0, epsilon = 1e-14);
    }

    #[test]
    fn weights_positive_and_normalized() {
        for n in 1..=10 {
            let q = gauss_rule(n).unwrap();
            assert!(q.weights.iter().all(|&w| w > 0.0));
            assert_abs_diff_eq!(q.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        }
        assert!(gauss_rule(0).is_err());
    }

    #[test]
    fn exactness_degree_matches_point_count() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre_1d(n);
            for d in 0..2 * n {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert_abs_diff_eq!(s, 1.0 / (d as f64 + 1.0), epsilon = 1e-14);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }
}
