//! Closed-form geodesic-tractor solutions in constant curvature.
//!
//! For a geodesic tractor the distance `d(s)` from the tractrix to the
//! tractor and the tractrix curvature `κ(s)` obey
//!
//! * sphere `K = k²`: `sin(kd) = sin(kd₀)·exp(−ks·cot(kℓ))`
//! * plane: `d = d₀·exp(−s/ℓ)`
//! * hyperbolic `K = −k²`: `sinh(kd) = sinh(kd₀)·exp(−ks·coth(kℓ))`
//!
//! and `κ` follows from `d` through [`kappa_from_dist`].

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifold::Point;
use crate::ode::adaptive_simpson;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceFormError {
    #[error("domain violation: {0}")]
    DomainViolation(String),
}

type Result<T> = std::result::Result<T, SpaceFormError>;

fn violation(msg: impl Into<String>) -> SpaceFormError {
    SpaceFormError::DomainViolation(msg.into())
}

/// Closed-form `d(s)`, `κ(s)` for a geodesic tractor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormSolution {
    pub curvature: f64,
    /// `√|K|`
    pub k: f64,
    pub ell: f64,
    /// Integration constant of `d(s)`; `None` on the sphere at `kℓ = π/2`,
    /// where the solution is the constant `d₀`.
    pub c_d: Option<f64>,
    /// `sin B(0)`, the sine of the pole angle at the tractor, in the
    /// normalization of the respective geometry.
    pub c_kappa: f64,
    pub d0: f64,
    /// Infinite for the cusp start `d₀ = ℓ`.
    pub kappa0: f64,
}

/// Scaled sine of the geometry: `sin(kx)`, `x`, `sinh(kx)`.
fn sn(curvature: f64, k: f64, x: f64) -> f64 {
    if curvature > 0.0 {
        (k * x).sin()
    } else if curvature < 0.0 {
        (k * x).sinh()
    } else {
        x
    }
}

/// Decay rate `r` with `sn(d(s)) = sn(d₀)·e^{−r s}`.
fn decay_rate(curvature: f64, k: f64, ell: f64) -> f64 {
    if curvature > 0.0 {
        let a = k * ell;
        // cot(π/2) rounds to ~6e-17; snap to the exact constant solution
        if (a - FRAC_PI_2).abs() < 1e-15 {
            0.0
        } else {
            k * a.cos() / a.sin()
        }
    } else if curvature < 0.0 {
        k / (k * ell).tanh()
    } else {
        1.0 / ell
    }
}

fn check_pole(curvature: f64, ell: f64, long_pole: bool) -> Result<f64> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(violation(format!("pole length must be positive, got {ell}")));
    }
    if !curvature.is_finite() {
        return Err(violation("curvature must be finite"));
    }
    let k = curvature.abs().sqrt();
    if curvature > 0.0 {
        let kl = k * ell;
        if long_pole {
            if kl >= PI {
                return Err(violation(format!("kℓ = {kl} must stay below π")));
            }
        } else if kl > FRAC_PI_2 + 1e-15 {
            return Err(violation(format!(
                "kℓ = {kl} exceeds π/2; use the long-pole construction"
            )));
        }
    }
    Ok(k)
}

/// Builds the solution with `d(0) = d0`. `d0 = ell` is the cusp start with
/// `κ(0) = ∞`.
pub fn solve_from_d0(curvature: f64, ell: f64, d0: f64) -> Result<SpaceFormSolution> {
    solve(curvature, ell, d0, false)
}

/// As [`solve_from_d0`] but admits sphere poles with `π/2 < kℓ < π`; then
/// `d` grows and stays admissible while `kd < π − kℓ`.
pub fn solve_from_d0_long(curvature: f64, ell: f64, d0: f64) -> Result<SpaceFormSolution> {
    solve(curvature, ell, d0, true)
}

fn solve(curvature: f64, ell: f64, d0: f64, long_pole: bool) -> Result<SpaceFormSolution> {
    let k = check_pole(curvature, ell, long_pole)?;
    if !(d0 > 0.0 && d0 <= ell) {
        return Err(violation(format!("need 0 < d0 <= ell, got d0 = {d0}, ell = {ell}")));
    }
    if curvature > 0.0 && k * ell > FRAC_PI_2 && k * d0 >= PI - k * ell {
        return Err(violation("long pole needs k·d0 < π − k·ell"));
    }
    let rate = decay_rate(curvature, k, ell);
    let c_d = if curvature > 0.0 {
        (rate != 0.0).then(|| -(k * d0).sin().ln() / rate)
    } else if curvature < 0.0 {
        Some(-(k * d0).sinh().ln() / rate)
    } else {
        Some(-ell * d0.ln())
    };
    let c_kappa = sn(curvature, k, d0) / sn(curvature, k, ell);
    let kappa0 = if d0 == ell {
        f64::INFINITY
    } else {
        kappa_from_dist_impl(curvature, k, ell, d0)?
    };
    Ok(SpaceFormSolution {
        curvature,
        k,
        ell,
        c_d,
        c_kappa,
        d0,
        kappa0,
    })
}

impl SpaceFormSolution {
    fn decay(&self, s: f64) -> f64 {
        (-decay_rate(self.curvature, self.k, self.ell) * s).exp()
    }

    /// `d(s)`.
    pub fn dist_at(&self, s: f64) -> f64 {
        let x = sn(self.curvature, self.k, self.d0) * self.decay(s);
        if self.curvature > 0.0 {
            x.min(1.0).asin() / self.k
        } else if self.curvature < 0.0 {
            x.asinh() / self.k
        } else {
            x
        }
    }

    /// `κ(s)`.
    pub fn kappa_at(&self, s: f64) -> Result<f64> {
        let ce = self.c_kappa * self.decay(s);
        let rad = 1.0 - ce * ce;
        if rad < 0.0 {
            return Err(violation(format!("curvature undefined at s = {s}")));
        }
        if rad == 0.0 {
            return Ok(f64::INFINITY);
        }
        let scale = if self.curvature == 0.0 {
            1.0 / self.ell
        } else {
            self.k / sn(self.curvature, self.k, self.ell)
        };
        Ok(scale * ce / rad.sqrt())
    }

    /// `d′(s)` from the first-variation ODE: `−tan(kd)·cot(kℓ)`,
    /// `−d/ℓ`, `−tanh(kd)·coth(kℓ)`.
    pub fn dist_derivative(&self, s: f64) -> f64 {
        let d = self.dist_at(s);
        let (c, k, l) = (self.curvature, self.k, self.ell);
        if c > 0.0 {
            -(k * d).tan() * (k * l).cos() / (k * l).sin()
        } else if c < 0.0 {
            -(k * d).tanh() / (k * l).tanh()
        } else {
            -d / l
        }
    }
}

fn kappa_from_dist_impl(curvature: f64, k: f64, ell: f64, d: f64) -> Result<f64> {
    if !(d >= 0.0 && d < ell) {
        return Err(violation(format!("need 0 <= d < ell, got d = {d}, ell = {ell}")));
    }
    let v = if curvature > 0.0 {
        let (kd, kl) = (k * d, k * ell);
        let rad = kd.cos().powi(2) - kl.cos().powi(2);
        if rad <= 0.0 {
            return Err(violation("cos²(kd) − cos²(kℓ) must be positive"));
        }
        k * kd.sin() / (kl.sin() * rad.sqrt())
    } else if curvature < 0.0 {
        let (kd, kl) = (k * d, k * ell);
        // cosh²(kℓ) − cosh²(kd) = sinh²(kℓ) − sinh²(kd)
        let rad = kl.sinh().powi(2) - kd.sinh().powi(2);
        if rad <= 0.0 {
            return Err(violation("cosh²(kℓ) − cosh²(kd) must be positive"));
        }
        k * kd.sinh() / (kl.sinh() * rad.sqrt())
    } else {
        d / (ell * ((ell - d) * (ell + d)).sqrt())
    };
    Ok(v)
}

/// Tractrix curvature as a function of the distance to a geodesic tractor.
pub fn kappa_from_dist(curvature: f64, ell: f64, d: f64) -> Result<f64> {
    let k = check_pole(curvature, ell, true)?;
    kappa_from_dist_impl(curvature, k, ell, d)
}

/// Leading exponent `lim (1/s) ln d(s)`: `−√K cot(ℓ√K)`, `−1/ℓ`,
/// `−√−K coth(ℓ√−K)`. Requires `ℓ√K < π` for `K > 0`.
pub fn leading_exponent(curvature: f64, ell: f64) -> f64 {
    -decay_rate(curvature, curvature.abs().sqrt(), ell)
}

/// Point of the classical flat tractrix with tractor `(t, 0)`, pole `ℓ` and
/// cusp at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPoint {
    pub point: Point,
    /// Signed arclength from the cusp.
    pub s: f64,
}

/// `γ(t) = (t − ℓ tanh(t/ℓ), ℓ / cosh(t/ℓ))`, `s(t) = sign(t) ℓ ln cosh(t/ℓ)`.
pub fn classical_tractrix(ell: f64, t: f64) -> ClassicalPoint {
    let x = t / ell;
    ClassicalPoint {
        point: Vector2::new(t - ell * x.tanh(), ell / x.cosh()),
        s: t.signum() * ell * ln_cosh(x),
    }
}

/// Inverse of the classical arclength: `t(s) = sign(s) ℓ arccosh(e^{|s|/ℓ})`.
pub fn classical_t_of_s(ell: f64, s: f64) -> f64 {
    // arccosh(e^y) = y + ln(1 + √(1 − e^{−2y}))
    let y = s.abs() / ell;
    let a = y + (-(-2.0 * y).exp_m1()).sqrt().ln_1p();
    s.signum() * ell * a
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        a.cosh().ln()
    } else {
        a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
    }
}

/// Classical distance `d(s) = ℓ e^{−s/ℓ}` and curvature
/// `κ(s) = e^{−s/ℓ} / (ℓ √(1 − e^{−2s/ℓ}))` on the pull branch `s > 0`.
pub fn classical_dist_kappa(ell: f64, s: f64) -> (f64, f64) {
    let e = (-s / ell).exp();
    let kappa = e / (ell * (-(-2.0 * s / ell).exp_m1()).sqrt());
    (ell * e, kappa)
}

/// Total curvature of the classical tractrix from the cusp to arclength `s`:
/// `arctan √(e^{2s/ℓ} − 1)`.
pub fn classical_total_curvature(ell: f64, s: f64) -> f64 {
    (2.0 * s / ell).exp_m1().sqrt().atan()
}

/// Sample of the analytic long-pole construction on the unit sphere.
///
/// Chart points are (colatitude, longitude); the tractor runs along the
/// equator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongPoleSample {
    pub s: f64,
    pub d: f64,
    /// Equatorial leg between the foot `C` and the tractor `B`.
    pub a: f64,
    /// Tractor parameter (longitude of `B`).
    pub t: f64,
    /// Tractrix point `A`.
    pub tractrix: Point,
    /// Tractor point `B`.
    pub tractor: Point,
    /// Foot `C` of the perpendicular from `A` to the equator.
    pub foot: Point,
}

/// Analytic tractrix for a pole `π/2 < ℓ < π` pulled along the equator of
/// the unit sphere, sampled at `n + 1` uniform arclengths in `[0, s_max]`.
pub fn long_pole_sphere(ell: f64, d0: f64, s_max: f64, n: usize) -> Result<Vec<LongPoleSample>> {
    let sol = solve_from_d0_long(1.0, ell, d0)?;
    if !(s_max > 0.0) || n == 0 {
        return Err(violation("need s_max > 0 and at least one interval"));
    }
    let a_of = |d: f64| (ell.cos() / d.cos()).clamp(-1.0, 1.0).acos();
    let limit = PI - ell;
    if sol.dist_at(s_max) >= limit {
        return Err(violation(format!(
            "d(s) reaches π − ℓ before s_max = {s_max}; the triangle degenerates"
        )));
    }
    // tractor speed per unit tractrix arclength: sec B = sin ℓ / (sin a · cos d)
    let integrand = |u: f64| {
        let d = sol.dist_at(u);
        ell.sin() / (a_of(d).sin() * d.cos())
    };
    let h = s_max / n as f64;
    let mut t = a_of(d0);
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let s = i as f64 * h;
        if i > 0 {
            t += adaptive_simpson(integrand, s - h, s, 1e-9 / n as f64);
        }
        let d = sol.dist_at(s);
        let a = a_of(d);
        out.push(LongPoleSample {
            s,
            d,
            a,
            t,
            tractrix: Vector2::new(FRAC_PI_2 - d, t - a),
            tractor: Vector2::new(FRAC_PI_2, t),
            foot: Vector2::new(FRAC_PI_2, t - a),
        });
    }
    Ok(out)
}
