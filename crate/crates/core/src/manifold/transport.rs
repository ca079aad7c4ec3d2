//! Parallel transport along chart polylines.

use nalgebra::Vector2;

use super::{GeometryResult, ManifoldModel, Point, Tangent};
use crate::ode::rk4_step;

/// Transports `w` along the chart-straight segment `a → b` by solving
/// `ẇ^k + Γ^k_ij ẋ^i w^j = 0` with `substeps` RK4 steps.
pub fn transport_segment(
    model: &ManifoldModel,
    a: &Point,
    b: &Point,
    w: &Tangent,
    substeps: usize,
) -> GeometryResult<Tangent> {
    if model.is_euclidean() {
        return Ok(*w);
    }
    let dx = b - a;
    let n = substeps.max(1);
    let h = 1.0 / n as f64;
    let mut rhs = |tau: f64, w: &Vector2<f64>| -> GeometryResult<Vector2<f64>> {
        let x = a + dx * tau;
        model.chart_ok(&x)?;
        Ok(-model.christoffel_unchecked(&x).contract(&dx, w))
    };
    let mut y = *w;
    for i in 0..n {
        y = rk4_step(&mut rhs, i as f64 * h, &y, h)?;
    }
    Ok(y)
}

/// Transports `w0` from the first to the last point of `curve`.
pub fn parallel_transport(model: &ManifoldModel, curve: &[Point], w0: &Tangent) -> GeometryResult<Tangent> {
    if let Some(p) = curve.first() {
        model.check_point(p)?;
    }
    let mut w = *w0;
    for seg in curve.windows(2) {
        w = transport_segment(model, &seg[0], &seg[1], &w, 4)?;
    }
    Ok(w)
}
