//! Normalized scalar Jacobi fields `j'' + K j = 0`, `j(0) = 0`, `j'(0) = 1`.

use super::geodesic::PoleGeodesic;
use super::ManifoldModel;
use crate::ode::simpson_nonuniform;

/// `J^K(u)`: `sin(ku)/k`, `u` or `sinh(ku)/k` for `K = k²`, `0`, `−k²`.
pub fn jacobi_space_form(curvature: f64, u: f64) -> f64 {
    if curvature > 0.0 {
        let k = curvature.sqrt();
        (k * u).sin() / k
    } else if curvature < 0.0 {
        let k = (-curvature).sqrt();
        (k * u).sinh() / k
    } else {
        u
    }
}

/// `∫₀^ℓ J^K(u) du`.
pub fn jacobi_integral_space_form(curvature: f64, ell: f64) -> f64 {
    if curvature > 0.0 {
        // 2 sin²(kℓ/2) = 1 − cos(kℓ), without cancellation for small kℓ
        let k = curvature.sqrt();
        2.0 * (0.5 * k * ell).sin().powi(2) / curvature
    } else if curvature < 0.0 {
        let k = (-curvature).sqrt();
        2.0 * (0.5 * k * ell).sinh().powi(2) / (-curvature)
    } else {
        0.5 * ell * ell
    }
}

/// Jacobi scalar sampled along a pole.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiProfile {
    pub u: Vec<f64>,
    pub j: Vec<f64>,
    /// Set when `j(u) ≤ 0` for some `0 < u ≤ ℓ`.
    pub conjugate_point: bool,
}

impl JacobiProfile {
    pub fn at_end(&self) -> f64 {
        self.j.last().copied().unwrap_or(0.0)
    }

    /// `∫₀^ℓ j(u) du`.
    pub fn integral(&self) -> f64 {
        simpson_nonuniform(&self.u, &self.j)
    }
}

/// Extracts `j(u)` along `pole`. Space forms use the closed form; surfaces
/// use the values integrated alongside the geodesic by
/// [`exp_map`](super::exp_map).
pub fn jacobi_scalar(model: &ManifoldModel, pole: &PoleGeodesic) -> JacobiProfile {
    let u: Vec<f64> = pole.samples.iter().map(|s| s.u).collect();
    let j: Vec<f64> = match model.constant_curvature() {
        Some(k) => u.iter().map(|&x| jacobi_space_form(k, x)).collect(),
        None => pole.samples.iter().map(|s| s.jacobi).collect(),
    };
    let conjugate_point = u.iter().zip(&j).any(|(&x, &y)| x > 0.0 && y <= 0.0);
    JacobiProfile { u, j, conjugate_point }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{exp_map, Surface};
    use nalgebra::Vector2;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn closed_forms() {
        assert!((jacobi_space_form(1.0, FRAC_PI_2) - 1.0).abs() < 1e-15);
        assert_eq!(jacobi_space_form(0.0, 2.0), 2.0);
        assert!((jacobi_space_form(-1.0, 1.0) - 1f64.sinh()).abs() < 1e-15);
        assert!((jacobi_integral_space_form(1.0, 1.0) - (1.0 - 1f64.cos())).abs() < 1e-15);
        assert!((jacobi_integral_space_form(-1.0, 1.0) - (1f64.cosh() - 1.0)).abs() < 1e-15);
        assert_eq!(jacobi_integral_space_form(0.0, 2.0), 2.0);
    }

    #[test]
    fn pseudosphere_numeric_matches_sinh() {
        let m = ManifoldModel::surface(Surface::pseudosphere());
        let p = Vector2::new(1.5, 0.0);
        let v = m.normalize(&p, &Vector2::new(0.3, 1.0));
        let pole = exp_map(&m, &p, &v, 1.0, 1.0 / 400.0).unwrap();
        let prof = jacobi_scalar(&m, &pole);
        let rel = (prof.at_end() - 1f64.sinh()).abs() / 1f64.sinh();
        assert!(rel < 1e-6, "rel {rel}");
        assert!(!prof.conjugate_point);
    }

    #[test]
    fn normalized_initial_slope() {
        let m = ManifoldModel::surface(Surface::ellipsoid(1.0, 1.0, 1.2));
        let p = Vector2::new(1.2, 0.3);
        let v = m.normalize(&p, &Vector2::new(0.2, 1.0));
        let pole = exp_map(&m, &p, &v, 0.5, 1e-4).unwrap();
        let prof = jacobi_scalar(&m, &pole);
        assert_eq!(prof.j[0], 0.0);
        assert!((prof.j[1] / prof.u[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sphere_conjugate_point_flag() {
        let m = ManifoldModel::surface(Surface::sphere(1.0));
        let p = Vector2::new(FRAC_PI_2, 0.0);
        let pole = exp_map(&m, &p, &Vector2::new(0.0, 1.0), 3.3, 0.01).unwrap();
        assert!(jacobi_scalar(&m, &pole).conjugate_point);
    }
}
