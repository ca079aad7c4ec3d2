//! Exponential map and two-point geodesic shooting.

use nalgebra::{Matrix2, SVector, Vector2};

use super::jacobi::jacobi_space_form;
use super::{GeometryError, GeometryResult, ManifoldModel, Point, Tangent};
use crate::ode::rk4_step;

/// Unit-speed drift tolerated by [`exp_map`].
pub const UNIT_DRIFT_TOL: f64 = 1e-6;

/// One sample along a pole geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSample {
    pub u: f64,
    pub point: Point,
    pub tangent: Tangent,
    /// Normalized scalar Jacobi value `j(u)`.
    pub jacobi: f64,
}

/// Sampled unit-speed geodesic of length `length` from `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleGeodesic {
    pub base: Point,
    pub direction: Tangent,
    pub length: f64,
    pub step: f64,
    pub samples: Vec<PoleSample>,
}

impl PoleGeodesic {
    pub fn endpoint(&self) -> Point {
        self.samples.last().map(|s| s.point).unwrap_or(self.base)
    }

    pub fn end_tangent(&self) -> Tangent {
        self.samples.last().map(|s| s.tangent).unwrap_or(self.direction)
    }
}

/// Endpoint of an integrated geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointData {
    pub point: Point,
    pub tangent: Tangent,
    /// `j(length)` when requested.
    pub jacobi: Option<f64>,
}

/// Result of [`geodesic_shoot`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shot {
    /// Unit initial direction at the base point.
    pub direction: Tangent,
    /// Length of the connecting geodesic.
    pub length: f64,
    pub end: EndpointData,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Nominal integration step along the geodesic.
    pub step: f64,
    /// Fixed number of integration steps; derived from `step` and the
    /// initial length when absent. Fixing it keeps the endpoint map smooth
    /// in the length unknown.
    pub n_steps: Option<usize>,
    pub max_iter: usize,
    /// Newton stops once the chart residual drops below this.
    pub tol: f64,
    /// Largest residual still accepted after `max_iter` iterations.
    pub accept: f64,
    /// Forward-difference increment in the direction angle.
    pub fd_angle: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            n_steps: None,
            max_iter: 50,
            tol: 1e-12,
            accept: 1e-9,
            fd_angle: 1e-6,
        }
    }
}

type State = SVector<f64, 6>;

fn steps_for(length: f64, step: f64) -> usize {
    ((length / step).ceil() as usize).max(4)
}

/// Integrates the geodesic (and, on surfaces, the scalar Jacobi equation)
/// with `n` fixed RK4 steps. Returns the endpoint and optionally samples.
pub(crate) fn integrate(
    model: &ManifoldModel,
    p: &Point,
    v: &Tangent,
    length: f64,
    n: usize,
    with_jacobi: bool,
    record: bool,
) -> GeometryResult<(EndpointData, Vec<PoleSample>)> {
    let h = length / n as f64;
    let space_k = model.constant_curvature();
    let surface_jacobi = with_jacobi && space_k.is_none();
    let mut rhs = |u: f64, y: &State| -> GeometryResult<State> {
        let x = Vector2::new(y[0], y[1]);
        model.chart_ok(&x).map_err(|e| match e {
            GeometryError::OutOfDomain(..) => GeometryError::DomainExit(u),
            other => other,
        })?;
        let vel = Vector2::new(y[2], y[3]);
        let acc = -model.christoffel_unchecked(&x).contract(&vel, &vel);
        let jdd = if surface_jacobi {
            -model.gauss_unchecked(&x) * y[4]
        } else {
            0.0
        };
        Ok(State::from_column_slice(&[vel.x, vel.y, acc.x, acc.y, y[5], jdd]))
    };
    let jac = |u: f64, y: &State| match space_k {
        Some(k) => jacobi_space_form(k, u),
        None => y[4],
    };
    let mut y = State::from_column_slice(&[p.x, p.y, v.x, v.y, 0.0, 1.0]);
    let mut samples = Vec::new();
    if record {
        samples.reserve(n + 1);
        samples.push(PoleSample {
            u: 0.0,
            point: *p,
            tangent: *v,
            jacobi: 0.0,
        });
    }
    for i in 0..n {
        let u = i as f64 * h;
        y = rk4_step(&mut rhs, u, &y, h)?;
        let x = Vector2::new(y[0], y[1]);
        model.chart_ok(&x).map_err(|e| match e {
            GeometryError::OutOfDomain(..) => GeometryError::DomainExit(u + h),
            other => other,
        })?;
        if record {
            let t = Vector2::new(y[2], y[3]);
            let drift = (model.norm(&x, &t) - 1.0).abs();
            if drift > UNIT_DRIFT_TOL {
                return Err(GeometryError::StepTooLarge(drift));
            }
            samples.push(PoleSample {
                u: u + h,
                point: x,
                tangent: t,
                jacobi: jac(u + h, &y),
            });
        }
    }
    let end = EndpointData {
        point: Vector2::new(y[0], y[1]),
        tangent: Vector2::new(y[2], y[3]),
        jacobi: with_jacobi.then(|| jac(length, &y)),
    };
    Ok((end, samples))
}

fn validate(model: &ManifoldModel, p: &Point, length: f64, step: f64) -> GeometryResult<()> {
    model.check_point(p)?;
    if !(length > 0.0 && length.is_finite()) {
        return Err(GeometryError::InvalidArgument(format!(
            "length must be positive, got {length}"
        )));
    }
    if !(step > 0.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    let limit = model.max_geodesic_length();
    if length >= limit {
        return Err(GeometryError::PoleTooLong { length, limit });
    }
    Ok(())
}

/// Samples the unit-speed geodesic `u ↦ exp_p(u v)` on `[0, length]` with a
/// fixed RK4 step no larger than `step`, together with the normalized
/// Jacobi scalar `j(u)`.
pub fn exp_map(model: &ManifoldModel, p: &Point, v: &Tangent, length: f64, step: f64) -> GeometryResult<PoleGeodesic> {
    validate(model, p, length, step)?;
    let nv = model.norm(p, v);
    if (nv - 1.0).abs() > 1e-10 {
        return Err(GeometryError::NotUnit(nv));
    }
    let n = steps_for(length, step);
    let (_, samples) = integrate(model, p, v, length, n, true, true)?;
    Ok(PoleGeodesic {
        base: *p,
        direction: *v,
        length,
        step: length / n as f64,
        samples,
    })
}

/// Finds the geodesic from `p` to `q`, solving jointly for the unit initial
/// direction and the length. `length` and `v_guess` seed a damped Newton
/// iteration on the endpoint map; the angle column of the Jacobian is a
/// forward difference, the length column is the end velocity.
pub fn geodesic_shoot(
    model: &ManifoldModel,
    p: &Point,
    q: &Point,
    length: f64,
    v_guess: &Tangent,
    opts: &ShootOptions,
) -> GeometryResult<Shot> {
    validate(model, p, length, opts.step)?;
    model.check_point(q)?;
    let n = opts.n_steps.unwrap_or_else(|| steps_for(length, opts.step));
    let (e1, e2) = model.orthonormal_frame(p);
    let c = model.frame_components(p, v_guess);
    if c.norm() == 0.0 {
        return Err(GeometryError::InvalidArgument("zero direction guess".into()));
    }
    let dir = |theta: f64| e1 * theta.cos() + e2 * theta.sin();
    let limit = model.max_geodesic_length();

    let mut theta = c.y.atan2(c.x);
    let mut len = length;
    let eval = |theta: f64, len: f64| integrate(model, p, &dir(theta), len, n, false, false);
    let (mut end, _) = eval(theta, len)?;
    let mut res_vec = end.point - q;
    let mut res = res_vec.norm();
    let mut iterations = 0;
    while res > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let (end_h, _) = eval(theta + opts.fd_angle, len)?;
        let d_theta = (end_h.point - end.point) / opts.fd_angle;
        let jac = Matrix2::from_columns(&[d_theta, end.tangent]);
        let Some(delta) = jac.lu().solve(&(-res_vec)) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let t_new = theta + lambda * delta.x;
            let l_new = len + lambda * delta.y;
            if l_new > 0.0 && l_new < limit {
                if let Ok((e_new, _)) = eval(t_new, l_new) {
                    let r_new = (e_new.point - q).norm();
                    if r_new < res {
                        theta = t_new;
                        len = l_new;
                        end = e_new;
                        res_vec = e_new.point - q;
                        res = r_new;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res > opts.accept {
        return Err(GeometryError::NoConvergence {
            iterations,
            residual: res,
        });
    }
    Ok(Shot {
        direction: dir(theta),
        length: len,
        end,
        iterations,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Surface;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn flat_exp_is_straight() {
        let m = ManifoldModel::plane();
        let g = exp_map(&m, &Vector2::zeros(), &Vector2::new(1.0, 0.0), 2.0, 0.01).unwrap();
        assert!((g.endpoint() - Vector2::new(2.0, 0.0)).norm() < 1e-14);
        assert!((g.samples.last().unwrap().jacobi - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_quarter_great_circle() {
        let m = ManifoldModel::space_form(2, 1.0).unwrap();
        let p = Vector2::new(FRAC_PI_2, 0.0);
        let g = exp_map(&m, &p, &Vector2::new(0.0, 1.0), FRAC_PI_2, FRAC_PI_2 / 200.0).unwrap();
        assert!((g.endpoint() - Vector2::new(FRAC_PI_2, FRAC_PI_2)).norm() < 1e-12);
        // northward arc stays on a meridian
        let g = exp_map(&m, &p, &Vector2::new(-1.0, 0.0), 1.0, 0.005).unwrap();
        assert!((g.endpoint() - Vector2::new(FRAC_PI_2 - 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sphere_length_limit() {
        let m = ManifoldModel::space_form(2, 1.0).unwrap();
        let p = Vector2::new(FRAC_PI_2, 0.0);
        let r = exp_map(&m, &p, &Vector2::new(0.0, 1.0), PI, 0.01);
        assert!(matches!(r, Err(GeometryError::PoleTooLong { .. })));
        let long = m.with_long_poles();
        assert!(exp_map(&long, &p, &Vector2::new(0.0, 1.0), 3.0, 0.01).is_ok());
    }

    #[test]
    fn non_unit_direction_rejected() {
        let m = ManifoldModel::plane();
        let r = exp_map(&m, &Vector2::zeros(), &Vector2::new(2.0, 0.0), 1.0, 0.1);
        assert!(matches!(r, Err(GeometryError::NotUnit(_))));
    }

    #[test]
    fn paraboloid_self_convergence() {
        let m = ManifoldModel::surface(Surface::paraboloid(1.0, 3.0));
        let p = Vector2::new(1.0, 0.0);
        let v = m.normalize(&p, &Vector2::new(-1.0, 0.0));
        let coarse = exp_map(&m, &p, &v, 1.0, 1.0 / 200.0).unwrap();
        let fine = exp_map(&m, &p, &v, 1.0, 1.0 / 2000.0).unwrap();
        assert!((coarse.endpoint() - fine.endpoint()).norm() < 1e-7);
    }

    #[test]
    fn paraboloid_geodesic_residual_small() {
        let m = ManifoldModel::surface(Surface::paraboloid(1.0, 3.0));
        let p = Vector2::new(0.8, -0.3);
        let v = m.normalize(&p, &Vector2::new(-1.0, 0.7));
        let g = exp_map(&m, &p, &v, 1.2, 1.2 / 400.0).unwrap();
        let h = g.step;
        for w in g.samples.windows(3) {
            let acc = (w[2].point - w[1].point * 2.0 + w[0].point) / (h * h);
            let vel = (w[2].point - w[0].point) / (2.0 * h);
            let r = acc + m.christoffel_at(&w[1].point).unwrap().contract(&vel, &vel);
            assert!(r.norm() < 1e-4, "residual {}", r.norm());
        }
    }

    #[test]
    fn shoot_flat_and_sphere() {
        let m = ManifoldModel::plane();
        let s = geodesic_shoot(
            &m,
            &Vector2::zeros(),
            &Vector2::new(2.0, 0.0),
            2.0,
            &Vector2::new(1.0, 0.3),
            &ShootOptions::default(),
        )
        .unwrap();
        assert!((s.direction - Vector2::new(1.0, 0.0)).norm() < 1e-10);
        assert!((s.length - 2.0).abs() < 1e-10);

        let m = ManifoldModel::space_form(2, 1.0).unwrap();
        let p = Vector2::new(FRAC_PI_2, 0.0);
        let q = Vector2::new(FRAC_PI_2, FRAC_PI_2);
        let s = geodesic_shoot(&m, &p, &q, 1.4, &Vector2::new(0.1, 1.0), &ShootOptions::default()).unwrap();
        assert!((s.direction - Vector2::new(0.0, 1.0)).norm() < 1e-9);
        assert!((s.length - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn surface_distance_matches_shot_length() {
        let m = ManifoldModel::surface(Surface::paraboloid(1.0, 3.0));
        let p = Vector2::new(0.5, 0.2);
        let v = m.normalize(&p, &Vector2::new(-0.4, 1.0));
        let g = exp_map(&m, &p, &v, 0.9, 0.9 / 300.0).unwrap();
        let d = m.distance(&p, &g.endpoint(), None).unwrap();
        assert!((d - 0.9).abs() < 1e-7, "d = {d}");
    }
}
