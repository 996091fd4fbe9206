//! Projection check: pi(z) = e^{-z} semiconjugates f(z) = z + 1 + e^{-z}
//! to g(w) = e^{-1} w e^{-w}, whose origin is an attracting fixed point.

use crate::catalog::FunctionSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// The projected map g(w) = e^{-1} w e^{-w}.
pub fn projected_map(w: Complex64) -> Complex64 {
    (-1.0f64).exp() * w * (-w).exp()
}

/// g'(w) = e^{-1} (1 - w) e^{-w}; g'(0) = e^{-1} < 1.
pub fn projected_map_derivative(w: Complex64) -> Complex64 {
    (-1.0f64).exp() * (Complex64::new(1.0, 0.0) - w) * (-w).exp()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SemiconjReport {
    pub samples: usize,
    pub max_residual: f64,
    pub worst_point: Complex64,
    /// |g'(0)|, which must be below one.
    pub origin_multiplier: f64,
}

/// Max over a grid in [-half, half]^2 of the relative defect of
/// pi(f(z)) = g(pi(z)) with pi(z) = e^{-z}.
pub fn semiconj_residual(side_samples: usize, half: f64) -> SemiconjReport {
    let spec = FunctionSpec::parse("fatou").expect("catalog token");
    let pi = |z: Complex64| (-z).exp();
    let mut max_residual = 0.0f64;
    let mut worst_point = Complex64::new(0.0, 0.0);
    for i in 0..side_samples {
        for j in 0..side_samples {
            let z = Complex64::new(
                -half + 2.0 * half * (j as f64 + 0.5) / side_samples as f64,
                -half + 2.0 * half * (i as f64 + 0.5) / side_samples as f64,
            );
            let fz = spec.evaluate_plain(z).expect("finite sample");
            let lhs = pi(fz);
            let rhs = projected_map(pi(z));
            let residual = (lhs - rhs).norm() / rhs.norm().max(1.0);
            if residual > max_residual {
                max_residual = residual;
                worst_point = z;
            }
        }
    }
    SemiconjReport {
        samples: side_samples * side_samples,
        max_residual,
        worst_point,
        origin_multiplier: projected_map_derivative(Complex64::new(0.0, 0.0)).norm(),
    }
}
