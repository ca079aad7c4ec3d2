//! Geometric substrate: charts, metrics, Christoffel symbols, geodesics,
//! parallel transport and scalar Jacobi fields.
//!
//! Two kinds of model are supported. Space forms of constant curvature `K`
//! use a fixed chart per sign of `K`: Cartesian for `K = 0`,
//! (colatitude, longitude) on the sphere of radius `1/√K` for `K > 0`, and
//! the Poincaré disk for `K < 0`. Embedded surfaces come from the
//! [`surface`] catalog. All chart-level operations are two-dimensional; a
//! flat space form of dimension three is handled by the Euclidean path of
//! the tractrix simulator.

mod geodesic;
mod jacobi;
pub mod surface;
mod transport;

pub(crate) use geodesic::integrate as integrate_geodesic;
pub use geodesic::{exp_map, geodesic_shoot, EndpointData, PoleGeodesic, PoleSample, ShootOptions, Shot};
pub use jacobi::{jacobi_integral_space_form, jacobi_scalar, jacobi_space_form, JacobiProfile};
pub use surface::{ChartRect, GraphTerm, Surface, SurfaceShape};
pub use transport::{parallel_transport, transport_segment};

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = Vector2<f64>;
pub type Tangent = Vector2<f64>;

/// Determinant threshold below which a chart is treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point ({0}, {1}) lies outside the chart domain")]
    OutOfDomain(f64, f64),
    #[error("chart is singular at ({0}, {1})")]
    SingularChart(f64, f64),
    #[error("geodesic left the chart domain at arclength {0}")]
    DomainExit(f64),
    #[error("unit-speed drift {0:e} exceeds tolerance; reduce the step")]
    StepTooLarge(f64),
    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("direction has metric norm {0}, expected a unit vector")]
    NotUnit(f64),
    #[error("geodesic length {length} reaches the antipodal limit {limit}")]
    PoleTooLong { length: f64, limit: f64 },
    #[error("chart operations need a two-dimensional model (dimension {0})")]
    Dimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type GeometryResult<T> = Result<T, GeometryError>;

/// Constant-curvature model space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceForm {
    pub dimension: usize,
    pub curvature: f64,
    /// Allows geodesics past the antipodal distance `π/√K` on spheres.
    #[serde(default)]
    pub long_poles: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldModel {
    SpaceForm(SpaceForm),
    EmbeddedSurface(Surface),
}

/// Christoffel symbols `Γ^k_ij`, stored as `gamma[k][i][j]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Christoffel(pub [[[f64; 2]; 2]; 2]);

impl Christoffel {
    /// `Γ^k_ij a^i b^j`
    #[inline]
    pub fn contract(&self, a: &Vector2<f64>, b: &Vector2<f64>) -> Vector2<f64> {
        let g = &self.0;
        let mut out = Vector2::zeros();
        for k in 0..2 {
            out[k] = g[k][0][0] * a[0] * b[0]
                + g[k][0][1] * a[0] * b[1]
                + g[k][1][0] * a[1] * b[0]
                + g[k][1][1] * a[1] * b[1];
        }
        out
    }
}

impl ManifoldModel {
    pub fn space_form(dimension: usize, curvature: f64) -> GeometryResult<Self> {
        if !(2..=3).contains(&dimension) {
            return Err(GeometryError::InvalidArgument(format!(
                "space form dimension must be 2 or 3, got {dimension}"
            )));
        }
        if dimension == 3 && curvature != 0.0 {
            return Err(GeometryError::InvalidArgument(
                "three-dimensional space forms are supported only for K = 0".into(),
            ));
        }
        if !curvature.is_finite() {
            return Err(GeometryError::InvalidArgument("curvature must be finite".into()));
        }
        Ok(ManifoldModel::SpaceForm(SpaceForm {
            dimension,
            curvature,
            long_poles: false,
        }))
    }

    /// Flat plane.
    pub fn plane() -> Self {
        ManifoldModel::SpaceForm(SpaceForm {
            dimension: 2,
            curvature: 0.0,
            long_poles: false,
        })
    }

    /// Flat three-space.
    pub fn euclidean3() -> Self {
        ManifoldModel::SpaceForm(SpaceForm {
            dimension: 3,
            curvature: 0.0,
            long_poles: false,
        })
    }

    pub fn surface(surface: Surface) -> Self {
        ManifoldModel::EmbeddedSurface(surface)
    }

    pub fn with_long_poles(mut self) -> Self {
        if let ManifoldModel::SpaceForm(sf) = &mut self {
            sf.long_poles = true;
        }
        self
    }

    pub fn dimension(&self) -> usize {
        match self {
            ManifoldModel::SpaceForm(sf) => sf.dimension,
            ManifoldModel::EmbeddedSurface(_) => 2,
        }
    }

    /// Constant curvature for space forms.
    pub fn constant_curvature(&self) -> Option<f64> {
        match self {
            ManifoldModel::SpaceForm(sf) => Some(sf.curvature),
            ManifoldModel::EmbeddedSurface(_) => None,
        }
    }

    /// True when chart coordinates are Cartesian coordinates of a flat
    /// Euclidean space (identity metric).
    pub fn is_euclidean(&self) -> bool {
        match self {
            ManifoldModel::SpaceForm(sf) => sf.curvature == 0.0,
            ManifoldModel::EmbeddedSurface(s) => matches!(s.shape, SurfaceShape::Plane),
        }
    }

    pub fn periods(&self) -> [Option<f64>; 2] {
        match self {
            ManifoldModel::SpaceForm(_) => [None, None],
            ManifoldModel::EmbeddedSurface(s) => s.periods,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ManifoldModel::SpaceForm(sf) => format!("space_form(K={})", sf.curvature),
            ManifoldModel::EmbeddedSurface(s) => s.name.clone(),
        }
    }

    /// Maximal geodesic length accepted by [`exp_map`].
    pub fn max_geodesic_length(&self) -> f64 {
        match self {
            ManifoldModel::SpaceForm(sf) if sf.curvature > 0.0 && !sf.long_poles => {
                std::f64::consts::PI / sf.curvature.sqrt()
            }
            _ => f64::INFINITY,
        }
    }

    fn require_2d(&self) -> GeometryResult<()> {
        match self.dimension() {
            2 => Ok(()),
            d => Err(GeometryError::Dimension(d)),
        }
    }

    /// Cheap admissibility test used inside integrators: domain membership
    /// and the polar singularity of the sphere chart.
    pub(crate) fn chart_ok(&self, p: &Point) -> GeometryResult<()> {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(GeometryError::OutOfDomain(p.x, p.y));
        }
        match self {
            ManifoldModel::SpaceForm(sf) => {
                if sf.curvature > 0.0 {
                    let det = p.x.sin().powi(2) / (sf.curvature * sf.curvature);
                    if det < SINGULAR_DET {
                        return Err(GeometryError::SingularChart(p.x, p.y));
                    }
                } else if sf.curvature < 0.0 && p.norm_squared() >= 1.0 {
                    return Err(GeometryError::OutOfDomain(p.x, p.y));
                }
                Ok(())
            }
            ManifoldModel::EmbeddedSurface(s) => {
                if s.in_domain(p) {
                    Ok(())
                } else {
                    Err(GeometryError::OutOfDomain(p.x, p.y))
                }
            }
        }
    }

    /// Validates a chart point.
    pub fn check_point(&self, p: &Point) -> GeometryResult<()> {
        self.require_2d()?;
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(GeometryError::OutOfDomain(p.x, p.y));
        }
        match self {
            ManifoldModel::SpaceForm(sf) => {
                let k = sf.curvature;
                if k > 0.0 {
                    let r2 = 1.0 / k;
                    let det = r2 * r2 * p.x.sin().powi(2);
                    if det < SINGULAR_DET {
                        return Err(GeometryError::SingularChart(p.x, p.y));
                    }
                } else if k < 0.0 && p.norm_squared() >= 1.0 {
                    return Err(GeometryError::OutOfDomain(p.x, p.y));
                }
                Ok(())
            }
            ManifoldModel::EmbeddedSurface(s) => {
                if !s.in_domain(p) {
                    return Err(GeometryError::OutOfDomain(p.x, p.y));
                }
                let fr = s.frame(p);
                if fr.fu.cross(&fr.fv).norm_squared() < SINGULAR_DET {
                    return Err(GeometryError::SingularChart(p.x, p.y));
                }
                Ok(())
            }
        }
    }

    /// First fundamental form at `p`.
    pub fn metric_at(&self, p: &Point) -> GeometryResult<Matrix2<f64>> {
        self.check_point(p)?;
        Ok(self.metric_unchecked(p))
    }

    pub(crate) fn metric_unchecked(&self, p: &Point) -> Matrix2<f64> {
        match self {
            ManifoldModel::SpaceForm(sf) => {
                let k = sf.curvature;
                if k == 0.0 {
                    Matrix2::identity()
                } else if k > 0.0 {
                    let r2 = 1.0 / k;
                    Matrix2::new(r2, 0.0, 0.0, r2 * p.x.sin().powi(2))
                } else {
                    let lam = 2.0 / ((-k).sqrt() * (1.0 - p.norm_squared()));
                    Matrix2::identity() * (lam * lam)
                }
            }
            ManifoldModel::EmbeddedSurface(s) => {
                let fr = s.frame(p);
                let e = fr.fu.dot(&fr.fu);
                let f = fr.fu.dot(&fr.fv);
                let g = fr.fv.dot(&fr.fv);
                Matrix2::new(e, f, f, g)
            }
        }
    }

    /// Levi-Civita connection coefficients at `p`.
    pub fn christoffel_at(&self, p: &Point) -> GeometryResult<Christoffel> {
        self.check_point(p)?;
        Ok(self.christoffel_unchecked(p))
    }

    pub(crate) fn christoffel_unchecked(&self, p: &Point) -> Christoffel {
        match self {
            ManifoldModel::SpaceForm(sf) => {
                let k = sf.curvature;
                let mut g = [[[0.0; 2]; 2]; 2];
                if k > 0.0 {
                    let (s, c) = p.x.sin_cos();
                    g[0][1][1] = -s * c;
                    g[1][0][1] = c / s;
                    g[1][1][0] = c / s;
                } else if k < 0.0 {
                    // conformal metric e^{2φ}δ with ∂_iφ = 2x_i / (1 − r²)
                    let w = 1.0 - p.norm_squared();
                    let dphi = [2.0 * p.x / w, 2.0 * p.y / w];
                    for kk in 0..2 {
                        for i in 0..2 {
                            for j in 0..2 {
                                let mut v = 0.0;
                                if i == kk {
                                    v += dphi[j];
                                }
                                if j == kk {
                                    v += dphi[i];
                                }
                                if i == j {
                                    v -= dphi[kk];
                                }
                                g[kk][i][j] = v;
                            }
                        }
                    }
                }
                Christoffel(g)
            }
            ManifoldModel::EmbeddedSurface(s) => {
                let fr = s.frame(p);
                let e = fr.fu.dot(&fr.fu);
                let f = fr.fu.dot(&fr.fv);
                let gg = fr.fv.dot(&fr.fv);
                let det = e * gg - f * f;
                let inv = [[gg / det, -f / det], [-f / det, e / det]];
                let second = [[fr.fuu, fr.fuv], [fr.fuv, fr.fvv]];
                let first = [fr.fu, fr.fv];
                let mut g = [[[0.0; 2]; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        // symbols of the first kind Γ_{l,ij} = F_ij · F_l
                        let c0 = second[i][j].dot(&first[0]);
                        let c1 = second[i][j].dot(&first[1]);
                        for (m, inv_row) in inv.iter().enumerate() {
                            g[m][i][j] = inv_row[0] * c0 + inv_row[1] * c1;
                        }
                    }
                }
                Christoffel(g)
            }
        }
    }

    /// Gauss curvature at `p`; exactly the model curvature for space forms.
    pub fn gauss_curvature(&self, p: &Point) -> GeometryResult<f64> {
        self.check_point(p)?;
        Ok(self.gauss_unchecked(p))
    }

    pub(crate) fn gauss_unchecked(&self, p: &Point) -> f64 {
        match self {
            ManifoldModel::SpaceForm(sf) => sf.curvature,
            ManifoldModel::EmbeddedSurface(s) => s.gauss_curvature(p),
        }
    }

    /// Metric inner product `⟨a, b⟩_g` at `p`.
    pub fn inner(&self, p: &Point, a: &Tangent, b: &Tangent) -> f64 {
        (a.transpose() * self.metric_unchecked(p) * b)[(0, 0)]
    }

    pub fn norm(&self, p: &Point, a: &Tangent) -> f64 {
        self.inner(p, a, a).max(0.0).sqrt()
    }

    /// Oriented metric-orthonormal frame at `p` (Gram–Schmidt on the
    /// coordinate basis).
    pub fn orthonormal_frame(&self, p: &Point) -> (Tangent, Tangent) {
        let g = self.metric_unchecked(p);
        let e1 = Vector2::new(1.0 / g[(0, 0)].sqrt(), 0.0);
        let ey = Vector2::new(0.0, 1.0);
        let proj = (e1.transpose() * g * ey)[(0, 0)];
        let w = ey - e1 * proj;
        let n = (w.transpose() * g * w)[(0, 0)].sqrt();
        (e1, w / n)
    }

    /// Components of `a` in the orthonormal frame at `p`.
    pub fn frame_components(&self, p: &Point, a: &Tangent) -> Vector2<f64> {
        let (e1, e2) = self.orthonormal_frame(p);
        Vector2::new(self.inner(p, a, &e1), self.inner(p, a, &e2))
    }

    /// Tangent vector from orthonormal-frame components.
    pub fn from_frame(&self, p: &Point, c: &Vector2<f64>) -> Tangent {
        let (e1, e2) = self.orthonormal_frame(p);
        e1 * c.x + e2 * c.y
    }

    /// Scales `a` to unit metric length.
    pub fn normalize(&self, p: &Point, a: &Tangent) -> Tangent {
        a / self.norm(p, a)
    }

    /// Signed angle from `a` to `b` at `p` (orientation from the chart).
    pub fn angle_between(&self, p: &Point, a: &Tangent, b: &Tangent) -> f64 {
        let ca = self.frame_components(p, a);
        let cb = self.frame_components(p, b);
        (ca.x * cb.y - ca.y * cb.x).atan2(ca.dot(&cb))
    }

    /// Position in the ambient model space: the round sphere of radius
    /// `1/√K` in R³, the hyperboloid sheet in Minkowski space, the plane
    /// `z = 0`, or the surface immersion.
    pub fn ambient(&self, p: &Point) -> Vector3<f64> {
        match self {
            ManifoldModel::SpaceForm(sf) => {
                let k = sf.curvature;
                if k == 0.0 {
                    Vector3::new(p.x, p.y, 0.0)
                } else if k > 0.0 {
                    let r = 1.0 / k.sqrt();
                    let (st, ct) = p.x.sin_cos();
                    let (sp, cp) = p.y.sin_cos();
                    Vector3::new(r * st * cp, r * st * sp, r * ct)
                } else {
                    let kk = (-k).sqrt();
                    let r2 = p.norm_squared();
                    let w = 1.0 - r2;
                    Vector3::new((1.0 + r2) / (w * kk), 2.0 * p.x / (w * kk), 2.0 * p.y / (w * kk))
                }
            }
            ManifoldModel::EmbeddedSurface(s) => s.position(p),
        }
    }

    /// Chart point antipodal to `p` on a sphere.
    pub fn antipode(&self, p: &Point) -> Option<Point> {
        match self {
            ManifoldModel::SpaceForm(sf) if sf.curvature > 0.0 => {
                Some(Vector2::new(std::f64::consts::PI - p.x, p.y + std::f64::consts::PI))
            }
            _ => None,
        }
    }

    /// Closed-form geodesic distance on space forms.
    pub fn space_form_distance(&self, p: &Point, q: &Point) -> Option<f64> {
        let ManifoldModel::SpaceForm(sf) = self else {
            return None;
        };
        let k = sf.curvature;
        Some(if k == 0.0 {
            (p - q).norm()
        } else if k > 0.0 {
            let a = self.ambient(p);
            let b = self.ambient(q);
            a.cross(&b).norm().atan2(a.dot(&b)) / k.sqrt()
        } else {
            let kk = (-k).sqrt();
            let delta = (p - q).norm_squared() / ((1.0 - p.norm_squared()) * (1.0 - q.norm_squared()));
            2.0 / kk * delta.sqrt().asinh()
        })
    }

    /// Geodesic distance between chart points. Closed form on space forms,
    /// shooting on surfaces (the chart segment seeds the solve unless a
    /// direction guess is given).
    pub fn distance(&self, p: &Point, q: &Point, guess: Option<&Tangent>) -> GeometryResult<f64> {
        if let Some(d) = self.space_form_distance(p, q) {
            return Ok(d);
        }
        self.check_point(p)?;
        self.check_point(q)?;
        let delta = q - p;
        if delta.norm() == 0.0 {
            return Ok(0.0);
        }
        let mid = (p + q) * 0.5;
        let len = self.norm(&mid, &delta);
        let dir = guess.copied().unwrap_or(delta);
        let opts = ShootOptions {
            step: (len / 64.0).clamp(1e-4, 0.02),
            ..ShootOptions::default()
        };
        Ok(geodesic_shoot(self, p, q, len, &dir, &opts)?.length)
    }

    /// Length of a chart polyline using the metric at each segment midpoint.
    pub fn polyline_length(&self, points: &[Point]) -> f64 {
        points
            .windows(2)
            .map(|w| {
                let mid = (w[0] + w[1]) * 0.5;
                self.norm(&mid, &(w[1] - w[0]))
            })
            .sum()
    }
}
