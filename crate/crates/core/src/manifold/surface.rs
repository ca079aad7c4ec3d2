//! Catalog of parametric surfaces `F(u, v) -> R³` with analytic first and
//! second derivatives.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle in the parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartRect {
    pub u: [f64; 2],
    pub v: [f64; 2],
}

impl ChartRect {
    pub const fn new(u: [f64; 2], v: [f64; 2]) -> Self {
        Self { u, v }
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        p.x >= self.u[0] && p.x <= self.u[1] && p.y >= self.v[0] && p.y <= self.v[1]
    }

    /// Smallest rectangle containing all points.
    pub fn bounding(points: impl IntoIterator<Item = Vector2<f64>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut r = Self::new([first.x, first.x], [first.y, first.y]);
        for p in it {
            r.include(&p);
        }
        Some(r)
    }

    pub fn include(&mut self, p: &Vector2<f64>) {
        self.u[0] = self.u[0].min(p.x);
        self.u[1] = self.u[1].max(p.x);
        self.v[0] = self.v[0].min(p.y);
        self.v[1] = self.v[1].max(p.y);
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::new(
            [self.u[0].min(other.u[0]), self.u[1].max(other.u[1])],
            [self.v[0].min(other.v[0]), self.v[1].max(other.v[1])],
        )
    }
}

/// One term of a graph surface `z = f(u, v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum GraphTerm {
    /// `coef · u^pu · v^pv`
    Poly { coef: f64, pu: u32, pv: u32 },
    /// `amp · cos(ku·u + kv·v + phase)`
    Wave {
        amp: f64,
        ku: f64,
        kv: f64,
        #[serde(default)]
        phase: f64,
    },
}

/// Height function value and partial derivatives up to order two.
#[derive(Debug, Clone, Copy, Default)]
struct Jet2 {
    f: f64,
    fu: f64,
    fv: f64,
    fuu: f64,
    fuv: f64,
    fvv: f64,
}

fn mono(p: u32, x: f64) -> (f64, f64, f64) {
    // x^p and its first two derivatives
    let pf = p as f64;
    let v0 = x.powi(p as i32);
    let v1 = if p >= 1 { pf * x.powi(p as i32 - 1) } else { 0.0 };
    let v2 = if p >= 2 {
        pf * (pf - 1.0) * x.powi(p as i32 - 2)
    } else {
        0.0
    };
    (v0, v1, v2)
}

impl GraphTerm {
    fn jet(&self, u: f64, v: f64) -> Jet2 {
        match *self {
            GraphTerm::Poly { coef, pu, pv } => {
                let (a0, a1, a2) = mono(pu, u);
                let (b0, b1, b2) = mono(pv, v);
                Jet2 {
                    f: coef * a0 * b0,
                    fu: coef * a1 * b0,
                    fv: coef * a0 * b1,
                    fuu: coef * a2 * b0,
                    fuv: coef * a1 * b1,
                    fvv: coef * a0 * b2,
                }
            }
            GraphTerm::Wave { amp, ku, kv, phase } => {
                let arg = ku * u + kv * v + phase;
                let (s, c) = arg.sin_cos();
                Jet2 {
                    f: amp * c,
                    fu: -amp * ku * s,
                    fv: -amp * kv * s,
                    fuu: -amp * ku * ku * c,
                    fuv: -amp * ku * kv * c,
                    fvv: -amp * kv * kv * c,
                }
            }
        }
    }
}

fn graph_jet(terms: &[GraphTerm], u: f64, v: f64) -> Jet2 {
    terms.iter().fold(Jet2::default(), |acc, t| {
        let j = t.jet(u, v);
        Jet2 {
            f: acc.f + j.f,
            fu: acc.fu + j.fu,
            fv: acc.fv + j.fv,
            fuu: acc.fuu + j.fuu,
            fuv: acc.fuv + j.fuv,
            fvv: acc.fvv + j.fvv,
        }
    })
}

/// Shapes available by name. Graph-type shapes evaluate through
/// [`GraphTerm`] tables; the others carry closed-form immersions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum SurfaceShape {
    /// `(u, v, 0)`
    Plane,
    /// Round sphere in (colatitude, longitude).
    Sphere { radius: f64 },
    /// Tractroid `(sech u cos v, sech u sin v, u − tanh u)`, `u > 0`; curvature −1.
    Pseudosphere,
    /// `(a sin u cos v, b sin u sin v, c cos u)`.
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// `(R cos u, R sin u, v)`.
    Cylinder { radius: f64 },
    /// `z = a·(u² + v²)`.
    Paraboloid { a: f64 },
    /// `z = A·sin(ωu)·sin(ωv)`.
    Hilly { amplitude: f64, frequency: f64 },
    /// User graph `z = Σ terms`.
    Graph { terms: Vec<GraphTerm> },
}

/// Parametric surface chart with a rectangular domain and optional
/// periodic identifications of each coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub name: String,
    pub shape: SurfaceShape,
    pub domain: ChartRect,
    /// Period of the `u` and `v` coordinates; periodic coordinates are
    /// lifted to the universal cover and skip the domain test.
    #[serde(default)]
    pub periods: [Option<f64>; 2],
}

/// Derivatives `(F_u, F_v)` and `(F_uu, F_uv, F_vv)` at one chart point.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceFrame {
    pub fu: Vector3<f64>,
    pub fv: Vector3<f64>,
    pub fuu: Vector3<f64>,
    pub fuv: Vector3<f64>,
    pub fvv: Vector3<f64>,
}

impl Surface {
    pub fn new(name: impl Into<String>, shape: SurfaceShape, domain: ChartRect) -> Self {
        Self {
            name: name.into(),
            shape,
            domain,
            periods: [None, None],
        }
    }

    pub fn with_periods(mut self, periods: [Option<f64>; 2]) -> Self {
        self.periods = periods;
        self
    }

    pub fn plane(domain: ChartRect) -> Self {
        Self::new("plane", SurfaceShape::Plane, domain)
    }

    /// Flat square torus of side `period`, represented on its universal cover.
    pub fn flat_torus(period: f64) -> Self {
        let big = ChartRect::new([f64::NEG_INFINITY, f64::INFINITY], [f64::NEG_INFINITY, f64::INFINITY]);
        Self::new("flat_torus", SurfaceShape::Plane, big).with_periods([Some(period), Some(period)])
    }

    pub fn sphere(radius: f64) -> Self {
        Self::new(
            "sphere",
            SurfaceShape::Sphere { radius },
            ChartRect::new([1e-3, std::f64::consts::PI - 1e-3], [-1e3, 1e3]),
        )
    }

    pub fn pseudosphere() -> Self {
        Self::new(
            "pseudosphere",
            SurfaceShape::Pseudosphere,
            ChartRect::new([0.05, 8.0], [-1e3, 1e3]),
        )
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Self {
        Self::new(
            "ellipsoid",
            SurfaceShape::Ellipsoid { a, b, c },
            ChartRect::new([1e-3, std::f64::consts::PI - 1e-3], [-1e3, 1e3]),
        )
    }

    pub fn cylinder(radius: f64) -> Self {
        let tau = std::f64::consts::TAU;
        Self::new(
            "cylinder",
            SurfaceShape::Cylinder { radius },
            ChartRect::new([f64::NEG_INFINITY, f64::INFINITY], [-1e3, 1e3]),
        )
        .with_periods([Some(tau), None])
    }

    pub fn paraboloid(a: f64, half_width: f64) -> Self {
        Self::new(
            "paraboloid",
            SurfaceShape::Paraboloid { a },
            ChartRect::new([-half_width, half_width], [-half_width, half_width]),
        )
    }

    pub fn hilly(amplitude: f64, frequency: f64, domain: ChartRect) -> Self {
        Self::new("hilly", SurfaceShape::Hilly { amplitude, frequency }, domain)
    }

    pub fn graph(terms: Vec<GraphTerm>, domain: ChartRect) -> Self {
        Self::new("graph", SurfaceShape::Graph { terms }, domain)
    }

    /// True if `p` is an admissible chart point (periodic coordinates are unrestricted).
    pub fn in_domain(&self, p: &Vector2<f64>) -> bool {
        let ok_u = self.periods[0].is_some() || (p.x >= self.domain.u[0] && p.x <= self.domain.u[1]);
        let ok_v = self.periods[1].is_some() || (p.y >= self.domain.v[0] && p.y <= self.domain.v[1]);
        ok_u && ok_v && p.x.is_finite() && p.y.is_finite()
    }

    fn graph_jet(&self, p: &Vector2<f64>) -> Option<Jet2> {
        match &self.shape {
            SurfaceShape::Graph { terms } => Some(graph_jet(terms, p.x, p.y)),
            SurfaceShape::Paraboloid { a } => {
                let (u, v) = (p.x, p.y);
                Some(Jet2 {
                    f: a * (u * u + v * v),
                    fu: 2.0 * a * u,
                    fv: 2.0 * a * v,
                    fuu: 2.0 * a,
                    fuv: 0.0,
                    fvv: 2.0 * a,
                })
            }
            SurfaceShape::Hilly { amplitude, frequency } => {
                let (a, w) = (*amplitude, *frequency);
                let (su, cu) = (w * p.x).sin_cos();
                let (sv, cv) = (w * p.y).sin_cos();
                Some(Jet2 {
                    f: a * su * sv,
                    fu: a * w * cu * sv,
                    fv: a * w * su * cv,
                    fuu: -a * w * w * su * sv,
                    fuv: a * w * w * cu * cv,
                    fvv: -a * w * w * su * sv,
                })
            }
            _ => None,
        }
    }

    pub fn position(&self, p: &Vector2<f64>) -> Vector3<f64> {
        let (u, v) = (p.x, p.y);
        match &self.shape {
            SurfaceShape::Plane => Vector3::new(u, v, 0.0),
            SurfaceShape::Sphere { radius } => ellipsoid_pos(*radius, *radius, *radius, u, v),
            SurfaceShape::Ellipsoid { a, b, c } => ellipsoid_pos(*a, *b, *c, u, v),
            SurfaceShape::Pseudosphere => {
                let s = 1.0 / u.cosh();
                Vector3::new(s * v.cos(), s * v.sin(), u - u.tanh())
            }
            SurfaceShape::Cylinder { radius } => Vector3::new(radius * u.cos(), radius * u.sin(), v),
            _ => {
                let j = self.graph_jet(p).unwrap_or_default();
                Vector3::new(u, v, j.f)
            }
        }
    }

    pub fn frame(&self, p: &Vector2<f64>) -> SurfaceFrame {
        let (u, v) = (p.x, p.y);
        let z = Vector3::zeros();
        match &self.shape {
            SurfaceShape::Plane => SurfaceFrame {
                fu: Vector3::x(),
                fv: Vector3::y(),
                fuu: z,
                fuv: z,
                fvv: z,
            },
            SurfaceShape::Sphere { radius } => ellipsoid_frame(*radius, *radius, *radius, u, v),
            SurfaceShape::Ellipsoid { a, b, c } => ellipsoid_frame(*a, *b, *c, u, v),
            SurfaceShape::Pseudosphere => {
                let s = 1.0 / u.cosh();
                let t = u.tanh();
                let (sv, cv) = v.sin_cos();
                let st = s * t;
                let d_st = s * s * s - s * t * t;
                SurfaceFrame {
                    fu: Vector3::new(-st * cv, -st * sv, t * t),
                    fv: Vector3::new(-s * sv, s * cv, 0.0),
                    fuu: Vector3::new(-d_st * cv, -d_st * sv, 2.0 * t * s * s),
                    fuv: Vector3::new(st * sv, -st * cv, 0.0),
                    fvv: Vector3::new(-s * cv, -s * sv, 0.0),
                }
            }
            SurfaceShape::Cylinder { radius } => {
                let (su, cu) = u.sin_cos();
                SurfaceFrame {
                    fu: Vector3::new(-radius * su, radius * cu, 0.0),
                    fv: Vector3::z(),
                    fuu: Vector3::new(-radius * cu, -radius * su, 0.0),
                    fuv: z,
                    fvv: z,
                }
            }
            _ => {
                let j = self.graph_jet(p).unwrap_or_default();
                SurfaceFrame {
                    fu: Vector3::new(1.0, 0.0, j.fu),
                    fv: Vector3::new(0.0, 1.0, j.fv),
                    fuu: Vector3::new(0.0, 0.0, j.fuu),
                    fuv: Vector3::new(0.0, 0.0, j.fuv),
                    fvv: Vector3::new(0.0, 0.0, j.fvv),
                }
            }
        }
    }

    /// Gauss curvature from the first and second fundamental forms.
    pub fn gauss_curvature(&self, p: &Vector2<f64>) -> f64 {
        match &self.shape {
            SurfaceShape::Plane | SurfaceShape::Cylinder { .. } => 0.0,
            SurfaceShape::Sphere { radius } => 1.0 / (radius * radius),
            _ => {
                let fr = self.frame(p);
                let cross = fr.fu.cross(&fr.fv);
                let det_g = cross.norm_squared();
                let n = cross / det_g.sqrt();
                let l = fr.fuu.dot(&n);
                let m = fr.fuv.dot(&n);
                let nn = fr.fvv.dot(&n);
                (l * nn - m * m) / det_g
            }
        }
    }

    /// Closed-form range of the Gauss curvature over `rect`, for shapes
    /// where one is available.
    pub fn analytic_curvature_range(&self, rect: &ChartRect) -> Option<(f64, f64)> {
        match &self.shape {
            SurfaceShape::Plane | SurfaceShape::Cylinder { .. } => Some((0.0, 0.0)),
            SurfaceShape::Sphere { radius } => {
                let k = 1.0 / (radius * radius);
                Some((k, k))
            }
            SurfaceShape::Pseudosphere => Some((-1.0, -1.0)),
            SurfaceShape::Ellipsoid { a, b, c } => {
                // K = 1 / (a²b²c² S²),  S = sin²u·w(v) + cos²u / c²,
                // w(v) = cos²v / a² + sin²v / b²; S is bilinear in (cos²u, w).
                let (cu_lo, cu_hi) = cos2_range(rect.u[0], rect.u[1]);
                let (cv_lo, cv_hi) = cos2_range(rect.v[0], rect.v[1]);
                let w = |c2v: f64| c2v / (a * a) + (1.0 - c2v) / (b * b);
                let (w1, w2) = (w(cv_lo), w(cv_hi));
                let s = |c2u: f64, wv: f64| (1.0 - c2u) * wv + c2u / (c * c);
                let corners = [s(cu_lo, w1), s(cu_lo, w2), s(cu_hi, w1), s(cu_hi, w2)];
                let s_min = corners.iter().cloned().fold(f64::INFINITY, f64::min);
                let s_max = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let scale = a * a * b * b * c * c;
                Some((1.0 / (scale * s_max * s_max), 1.0 / (scale * s_min * s_min)))
            }
            SurfaceShape::Paraboloid { a } => {
                // K = 4a² / (1 + 4a²r²)², monotone in r²
                let r2_lo = sq_range(rect.u[0], rect.u[1]).0 + sq_range(rect.v[0], rect.v[1]).0;
                let r2_hi = sq_range(rect.u[0], rect.u[1]).1 + sq_range(rect.v[0], rect.v[1]).1;
                let k = |r2: f64| 4.0 * a * a / (1.0 + 4.0 * a * a * r2).powi(2);
                Some((k(r2_hi), k(r2_lo)))
            }
            SurfaceShape::Hilly { .. } | SurfaceShape::Graph { .. } => None,
        }
    }
}

fn ellipsoid_pos(a: f64, b: f64, c: f64, u: f64, v: f64) -> Vector3<f64> {
    let (su, cu) = u.sin_cos();
    let (sv, cv) = v.sin_cos();
    Vector3::new(a * su * cv, b * su * sv, c * cu)
}

fn ellipsoid_frame(a: f64, b: f64, c: f64, u: f64, v: f64) -> SurfaceFrame {
    let (su, cu) = u.sin_cos();
    let (sv, cv) = v.sin_cos();
    SurfaceFrame {
        fu: Vector3::new(a * cu * cv, b * cu * sv, -c * su),
        fv: Vector3::new(-a * su * sv, b * su * cv, 0.0),
        fuu: Vector3::new(-a * su * cv, -b * su * sv, -c * cu),
        fuv: Vector3::new(-a * cu * sv, b * cu * cv, 0.0),
        fvv: Vector3::new(-a * su * cv, -b * su * sv, 0.0),
    }
}

/// Range of `cos²x` for `x ∈ [lo, hi]`.
fn cos2_range(lo: f64, hi: f64) -> (f64, f64) {
    use std::f64::consts::FRAC_PI_2;
    if hi - lo >= std::f64::consts::PI {
        return (0.0, 1.0);
    }
    let mut vals = vec![lo.cos().powi(2), hi.cos().powi(2)];
    // critical points at multiples of π/2
    let first = (lo / FRAC_PI_2).ceil() as i64;
    let last = (hi / FRAC_PI_2).floor() as i64;
    for m in first..=last {
        vals.push((m as f64 * FRAC_PI_2).cos().powi(2).round());
    }
    let lo_v = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_v = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo_v, hi_v)
}

fn sq_range(lo: f64, hi: f64) -> (f64, f64) {
    let a = lo * lo;
    let b = hi * hi;
    if lo <= 0.0 && hi >= 0.0 {
        (0.0, a.max(b))
    } else {
        (a.min(b), a.max(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> Vec<(Surface, Vector2<f64>)> {
        let dom = ChartRect::new([-3.0, 3.0], [-3.0, 3.0]);
        vec![
            (Surface::sphere(1.3), Vector2::new(1.1, 0.4)),
            (Surface::pseudosphere(), Vector2::new(0.9, -0.7)),
            (Surface::ellipsoid(1.0, 1.5, 1.2), Vector2::new(1.2, 2.1)),
            (Surface::cylinder(0.8), Vector2::new(0.3, 1.0)),
            (Surface::paraboloid(1.0, 3.0), Vector2::new(0.4, -0.2)),
            (Surface::hilly(0.5, 1.3, dom), Vector2::new(0.7, 1.9)),
            (
                Surface::graph(
                    vec![
                        GraphTerm::Poly {
                            coef: 0.3,
                            pu: 3,
                            pv: 1,
                        },
                        GraphTerm::Wave {
                            amp: 0.2,
                            ku: 0.5,
                            kv: 1.5,
                            phase: 0.3,
                        },
                    ],
                    dom,
                ),
                Vector2::new(-0.6, 0.8),
            ),
        ]
    }

    #[test]
    fn first_derivatives_match_central_differences() {
        let h = 1e-5;
        for (s, p) in catalog() {
            let fr = s.frame(&p);
            let du = (s.position(&(p + Vector2::new(h, 0.0))) - s.position(&(p - Vector2::new(h, 0.0)))) / (2.0 * h);
            let dv = (s.position(&(p + Vector2::new(0.0, h))) - s.position(&(p - Vector2::new(0.0, h)))) / (2.0 * h);
            assert!((du - fr.fu).norm() < 1e-8, "{} F_u", s.name);
            assert!((dv - fr.fv).norm() < 1e-8, "{} F_v", s.name);
        }
    }

    #[test]
    fn second_derivatives_match_central_differences() {
        let h = 1e-5;
        for (s, p) in catalog() {
            let fr = s.frame(&p);
            let eu = Vector2::new(h, 0.0);
            let ev = Vector2::new(0.0, h);
            let duu = (s.frame(&(p + eu)).fu - s.frame(&(p - eu)).fu) / (2.0 * h);
            let duv = (s.frame(&(p + ev)).fu - s.frame(&(p - ev)).fu) / (2.0 * h);
            let dvv = (s.frame(&(p + ev)).fv - s.frame(&(p - ev)).fv) / (2.0 * h);
            assert!((duu - fr.fuu).norm() < 1e-7, "{} F_uu", s.name);
            assert!((duv - fr.fuv).norm() < 1e-7, "{} F_uv", s.name);
            assert!((dvv - fr.fvv).norm() < 1e-7, "{} F_vv", s.name);
        }
    }

    #[test]
    fn known_gauss_curvatures() {
        let p = Vector2::new(0.8, 0.3);
        assert!((Surface::pseudosphere().gauss_curvature(&p) + 1.0).abs() < 1e-12);
        let e = Surface::ellipsoid(1.0, 1.0, 1.2);
        // equator: a² / (b² c²); pole limit c² / (a² b²)
        let k_eq = e.gauss_curvature(&Vector2::new(std::f64::consts::FRAC_PI_2, 0.0));
        assert!((k_eq - 1.0 / 1.44).abs() < 1e-12);
        let par = Surface::paraboloid(1.0, 2.0);
        assert!((par.gauss_curvature(&Vector2::zeros()) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_range_brackets_samples() {
        let e = Surface::ellipsoid(1.0, 1.3, 1.2);
        let rect = ChartRect::new([1.0, 2.0], [0.2, 1.1]);
        let (lo, hi) = e.analytic_curvature_range(&rect).unwrap();
        for i in 0..=20 {
            for j in 0..=20 {
                let p = Vector2::new(1.0 + i as f64 / 20.0, 0.2 + 0.9 * j as f64 / 20.0);
                let k = e.gauss_curvature(&p);
                assert!(k >= lo - 1e-12 && k <= hi + 1e-12, "{k} not in [{lo}, {hi}]");
            }
        }
    }
}
