//! Tractor curves `η(t)` in chart coordinates.
//!
//! Positions are carried as 3-vectors; two-dimensional charts use `z = 0`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "curve", rename_all = "snake_case")]
pub enum TractorShape {
    /// `start + t·velocity`; a chart line.
    Line { start: [f64; 3], velocity: [f64; 3] },
    /// `center + radius·(cos(ωt + phase), sin(ωt + phase), 0)`.
    Circle {
        center: [f64; 3],
        radius: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `(r cos ωt, r sin ωt, pitch·t)`.
    Helix { radius: f64, omega: f64, pitch: f64 },
    /// Unit-speed diameter `(tanh(kt/2), 0)` of the Poincaré disk of
    /// curvature `−k²`.
    DiskDiameter { curvature: f64 },
    /// Cubic Hermite spline through `points` with `derivs` at parameters `t`.
    Spline {
        t: Vec<f64>,
        points: Vec<[f64; 3]>,
        derivs: Vec<[f64; 3]>,
        /// Extends the spline periodically, shifting by `shift` per period.
        #[serde(default)]
        periodic: bool,
        #[serde(default)]
        shift: [f64; 3],
    },
}

/// Tractor curve with parameter range and regularity data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractorCurve {
    #[serde(flatten)]
    pub shape: TractorShape,
    pub t_range: [f64; 2],
    /// Declares the curve a geodesic of the model; enables `d(s)` output.
    #[serde(default)]
    pub geodesic: bool,
}

fn v3(a: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

fn arr(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl TractorCurve {
    pub fn new(shape: TractorShape, t_range: [f64; 2]) -> Self {
        Self {
            shape,
            t_range,
            geodesic: false,
        }
    }

    pub fn with_geodesic(mut self, geodesic: bool) -> Self {
        self.geodesic = geodesic;
        self
    }

    pub fn line(start: Vector3<f64>, velocity: Vector3<f64>, t_range: [f64; 2]) -> Self {
        Self::new(
            TractorShape::Line {
                start: arr(&start),
                velocity: arr(&velocity),
            },
            t_range,
        )
    }

    /// Unit-speed equator of the sphere of curvature `K > 0` in the
    /// (colatitude, longitude) chart. A geodesic.
    pub fn equator(curvature: f64, t_range: [f64; 2]) -> Self {
        let r = 1.0 / curvature.sqrt();
        Self::line(
            Vector3::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0),
            Vector3::new(0.0, 1.0 / r, 0.0),
            t_range,
        )
        .with_geodesic(true)
    }

    pub fn circle(center: Vector3<f64>, radius: f64, omega: f64, t_range: [f64; 2]) -> Self {
        Self::new(
            TractorShape::Circle {
                center: arr(&center),
                radius,
                omega,
                phase: 0.0,
            },
            t_range,
        )
    }

    pub fn helix(radius: f64, omega: f64, pitch: f64, t_range: [f64; 2]) -> Self {
        Self::new(TractorShape::Helix { radius, omega, pitch }, t_range)
    }

    pub fn disk_diameter(curvature: f64, t_range: [f64; 2]) -> Self {
        Self::new(TractorShape::DiskDiameter { curvature }, t_range).with_geodesic(true)
    }

    /// Hermite spline through given samples and derivatives.
    pub fn spline(t: Vec<f64>, points: Vec<Vector3<f64>>, derivs: Vec<Vector3<f64>>) -> Result<Self, SimError> {
        if t.len() < 2 || points.len() != t.len() || derivs.len() != t.len() {
            return Err(SimError::InvalidInput(
                "spline needs at least two samples with matching derivatives".into(),
            ));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidInput("spline parameters must increase".into()));
        }
        let range = [t[0], t[t.len() - 1]];
        Ok(Self::new(
            TractorShape::Spline {
                t,
                points: points.iter().map(arr).collect(),
                derivs: derivs.iter().map(arr).collect(),
                periodic: false,
                shift: [0.0; 3],
            },
            range,
        ))
    }

    /// Chord-length parametrized spline through a polyline. Derivatives are
    /// three-point estimates; a closed polyline repeats its first point last
    /// and gets periodic derivatives.
    pub fn polyline(points: &[Vector3<f64>], closed: bool) -> Result<Self, SimError> {
        let n = points.len();
        if n < 2 {
            return Err(SimError::InvalidInput("polyline needs two points".into()));
        }
        let mut t = vec![0.0];
        for w in points.windows(2) {
            let h = (w[1] - w[0]).norm();
            if h == 0.0 {
                return Err(SimError::InvalidInput("polyline has repeated points".into()));
            }
            t.push(t.last().unwrap() + h);
        }
        let deriv3 = |pm: Vector3<f64>, p0: Vector3<f64>, pp: Vector3<f64>, hm: f64, hp: f64| {
            // derivative of the parabola through three nodes, at the middle one
            (pp - p0) * (hm / (hp * (hm + hp))) + (p0 - pm) * (hp / (hm * (hm + hp)))
        };
        let mut derivs = Vec::with_capacity(n);
        for i in 0..n {
            let d = if n == 2 {
                (points[1] - points[0]) / t[1]
            } else if i > 0 && i + 1 < n {
                deriv3(
                    points[i - 1],
                    points[i],
                    points[i + 1],
                    t[i] - t[i - 1],
                    t[i + 1] - t[i],
                )
            } else if closed {
                let hm = t[n - 1] - t[n - 2];
                let hp = t[1] - t[0];
                deriv3(points[n - 2], points[0], points[1], hm, hp)
            } else if i == 0 {
                let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
                // one-sided second-order difference
                let d1 = (points[1] - points[0]) / h0;
                let d2 = (points[2] - points[1]) / h1;
                d1 + (d1 - d2) * (h0 / (h0 + h1))
            } else {
                let (h0, h1) = (t[n - 2] - t[n - 3], t[n - 1] - t[n - 2]);
                let d1 = (points[n - 2] - points[n - 3]) / h0;
                let d2 = (points[n - 1] - points[n - 2]) / h1;
                d2 + (d2 - d1) * (h1 / (h0 + h1))
            };
            derivs.push(d);
        }
        let mut c = Self::spline(t, points.to_vec(), derivs)?;
        if closed {
            c.set_periodic(Vector3::zeros());
        }
        Ok(c)
    }

    /// Marks a spline as periodic with the given shift per period.
    pub fn set_periodic(&mut self, shift_by: Vector3<f64>) {
        if let TractorShape::Spline { periodic, shift, .. } = &mut self.shape {
            *periodic = true;
            *shift = arr(&shift_by);
        }
    }

    /// Position and velocity at `t`.
    pub fn eval(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        match &self.shape {
            TractorShape::Line { start, velocity } => {
                let v = v3(velocity);
                (v3(start) + v * t, v)
            }
            TractorShape::Circle {
                center,
                radius,
                omega,
                phase,
            } => {
                let (s, c) = (omega * t + phase).sin_cos();
                (
                    v3(center) + Vector3::new(radius * c, radius * s, 0.0),
                    Vector3::new(-radius * omega * s, radius * omega * c, 0.0),
                )
            }
            TractorShape::Helix { radius, omega, pitch } => {
                let (s, c) = (omega * t).sin_cos();
                (
                    Vector3::new(radius * c, radius * s, pitch * t),
                    Vector3::new(-radius * omega * s, radius * omega * c, *pitch),
                )
            }
            TractorShape::DiskDiameter { curvature } => {
                let k = (-curvature).sqrt();
                let th = (0.5 * k * t).tanh();
                (
                    Vector3::new(th, 0.0, 0.0),
                    Vector3::new(0.5 * k * (1.0 - th * th), 0.0, 0.0),
                )
            }
            TractorShape::Spline {
                t: ts,
                points,
                derivs,
                periodic,
                shift,
            } => {
                let (t0, t1) = (ts[0], ts[ts.len() - 1]);
                let mut tt = t;
                let mut offset = Vector3::zeros();
                if *periodic {
                    let period = t1 - t0;
                    let m = ((t - t0) / period).floor();
                    tt = t - m * period;
                    offset = v3(shift) * m;
                }
                let i = ts.partition_point(|&x| x <= tt).clamp(1, ts.len() - 1) - 1;
                let h = ts[i + 1] - ts[i];
                let u = (tt - ts[i]) / h;
                let (p0, p1) = (v3(&points[i]), v3(&points[i + 1]));
                let (m0, m1) = (v3(&derivs[i]) * h, v3(&derivs[i + 1]) * h);
                let (u2, u3) = (u * u, u * u * u);
                let pos = p0 * (2.0 * u3 - 3.0 * u2 + 1.0)
                    + m0 * (u3 - 2.0 * u2 + u)
                    + p1 * (-2.0 * u3 + 3.0 * u2)
                    + m1 * (u3 - u2);
                let vel = (p0 * (6.0 * u2 - 6.0 * u)
                    + m0 * (3.0 * u2 - 4.0 * u + 1.0)
                    + p1 * (-6.0 * u2 + 6.0 * u)
                    + m1 * (3.0 * u2 - 2.0 * u))
                    / h;
                (pos + offset, vel)
            }
        }
    }

    pub fn position(&self, t: f64) -> Vector3<f64> {
        self.eval(t).0
    }

    /// The same trace run backwards: `η̃(t) = η(t₀ + t₁ − t)`.
    pub fn reversed(&self) -> Self {
        let [t0, t1] = self.t_range;
        let sample = |t: f64| self.eval(t0 + t1 - t);
        let n = 2048;
        let ts: Vec<f64> = (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect();
        let pts = ts.iter().map(|&t| sample(t).0).collect();
        let ders = ts.iter().map(|&t| -sample(t).1).collect();
        let mut out = Self::spline(ts, pts, ders).expect("valid grid");
        out.geodesic = self.geodesic;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic() {
        let f = |t: f64| Vector3::new(t * t * t - t, 2.0 * t, 0.5 * t * t);
        let df = |t: f64| Vector3::new(3.0 * t * t - 1.0, 2.0, t);
        let ts = vec![0.0, 0.3, 0.5, 1.1, 2.0];
        let c = TractorCurve::spline(
            ts.clone(),
            ts.iter().map(|&t| f(t)).collect(),
            ts.iter().map(|&t| df(t)).collect(),
        )
        .unwrap();
        for t in [0.0, 0.1, 0.77, 1.5, 2.0] {
            let (p, v) = c.eval(t);
            assert!((p - f(t)).norm() < 1e-12);
            assert!((v - df(t)).norm() < 1e-11);
        }
    }

    #[test]
    fn periodic_spline_wraps_with_shift() {
        let pts = vec![
            Vector3::zeros(),
            Vector3::new(1.0, 1.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
        ];
        let mut c = TractorCurve::polyline(&pts, false).unwrap();
        c.set_periodic(Vector3::new(2.0, 0.0, 0.0));
        let period = c.t_range[1] - c.t_range[0];
        let a = c.position(0.3);
        let b = c.position(0.3 + period);
        assert!((b - a - Vector3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn disk_diameter_has_unit_hyperbolic_speed() {
        let c = TractorCurve::disk_diameter(-1.0, [-3.0, 3.0]);
        for t in [-2.0, 0.0, 1.5] {
            let (p, v) = c.eval(t);
            let lam = 2.0 / (1.0 - p.norm_squared());
            assert!((lam * v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reversal_is_an_involution_on_lines() {
        let c = TractorCurve::line(Vector3::zeros(), Vector3::x(), [0.0, 10.0]);
        let r = c.reversed();
        assert!((r.position(2.5) - Vector3::new(7.5, 0.0, 0.0)).norm() < 1e-12);
        assert!((r.eval(2.5).1 + Vector3::x()).norm() < 1e-12);
    }
}
