//! Scenario files: one TOML document naming a model, a tractor, a starting
//! pole and the runs to perform on them.
//!
//! Relative file paths inside a scenario resolve against the directory of
//! the scenario file.

use std::f64::consts::PI;
use std::io;
use std::path::{Path, PathBuf};

use nalgebra::{Rotation3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparison::{
    le_sandwich_check, rauch_length_area_check, toponogov_sandwich_check, trace_bounds, ComparisonError,
    ComparisonOptions, ComparisonReport, CurvatureBounds,
};
use crate::functionals::FunctionalError;
use crate::manifold::{exp_map, ChartRect, GeometryError, GraphTerm, ManifoldModel, Point, Surface};
use crate::shortening::{self, Mode, ShorteningError, ShorteningOptions, ShorteningRun};
use crate::spaceform::{solve_from_d0, solve_from_d0_long, SpaceFormError, SpaceFormSolution};
use crate::tractrix_sim::{pushed_simulate, simulate, SimError, SimParams, TractorCurve, TractrixTrace};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("functional evaluation failed: {0}")]
    Functional(#[from] FunctionalError),
    #[error("comparison failed: {0}")]
    Comparison(#[from] ComparisonError),
    #[error("shortening failed: {0}")]
    Shortening(#[from] ShorteningError),
    #[error("closed form failed: {0}")]
    SpaceForm(#[from] SpaceFormError),
    #[error("geometry failed: {0}")]
    Geometry(#[from] GeometryError),
}

impl ScenarioError {
    /// Configuration problems, as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(self, Self::Parse { .. } | Self::Invalid { .. } | Self::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    SpaceForm {
        curvature: f64,
        #[serde(default = "two")]
        dimension: usize,
        #[serde(default)]
        long_poles: bool,
    },
    Plane,
    FlatTorus {
        period: f64,
    },
    Sphere {
        radius: f64,
    },
    Pseudosphere,
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
    },
    Cylinder {
        radius: f64,
    },
    Paraboloid {
        a: f64,
        half_width: f64,
    },
    Hilly {
        amplitude: f64,
        frequency: f64,
        domain: ChartRect,
    },
    Graph {
        terms: Vec<GraphTerm>,
        domain: ChartRect,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<ManifoldModel> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("model.{name}"), format!("must be positive, got {x}")))
            }
        };
        let domain_ok = |d: &ChartRect| {
            if d.u[0] < d.u[1] && d.v[0] < d.v[1] {
                Ok(())
            } else {
                Err(invalid("model.domain", "needs u[0] < u[1] and v[0] < v[1]"))
            }
        };
        Ok(match self {
            Self::SpaceForm {
                curvature,
                dimension,
                long_poles,
            } => {
                let m = ManifoldModel::space_form(*dimension, *curvature)
                    .map_err(|e| invalid("model.dimension", e.to_string()))?;
                if *long_poles {
                    if *curvature <= 0.0 {
                        return Err(invalid("model.long_poles", "needs positive curvature"));
                    }
                    m.with_long_poles()
                } else {
                    m
                }
            }
            Self::Plane => ManifoldModel::plane(),
            Self::FlatTorus { period } => {
                positive("period", *period)?;
                ManifoldModel::surface(Surface::flat_torus(*period))
            }
            Self::Sphere { radius } => {
                positive("radius", *radius)?;
                ManifoldModel::surface(Surface::sphere(*radius))
            }
            Self::Pseudosphere => ManifoldModel::surface(Surface::pseudosphere()),
            Self::Ellipsoid { a, b, c } => {
                positive("a", *a)?;
                positive("b", *b)?;
                positive("c", *c)?;
                ManifoldModel::surface(Surface::ellipsoid(*a, *b, *c))
            }
            Self::Cylinder { radius } => {
                positive("radius", *radius)?;
                ManifoldModel::surface(Surface::cylinder(*radius))
            }
            Self::Paraboloid { a, half_width } => {
                positive("a", *a)?;
                positive("half_width", *half_width)?;
                ManifoldModel::surface(Surface::paraboloid(*a, *half_width))
            }
            Self::Hilly {
                amplitude,
                frequency,
                domain,
            } => {
                positive("frequency", *frequency)?;
                domain_ok(domain)?;
                ManifoldModel::surface(Surface::hilly(*amplitude, *frequency, *domain))
            }
            Self::Graph { terms, domain } => {
                domain_ok(domain)?;
                ManifoldModel::surface(Surface::graph(terms.clone(), *domain))
            }
        })
    }
}

/// Tractor curve; every variant but the file-backed ones carries its
/// parameter range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "curve", rename_all = "snake_case", deny_unknown_fields)]
pub enum TractorSpec {
    Line {
        start: Vec<f64>,
        velocity: Vec<f64>,
        t_range: [f64; 2],
        /// Declares the line a geodesic of the model.
        #[serde(default)]
        geodesic: bool,
    },
    /// Unit-speed equator of a positively curved space form.
    GreatCircle { t_range: [f64; 2] },
    /// Unit-speed circle of latitude on a positively curved space form.
    Latitude { colatitude: f64, t_range: [f64; 2] },
    Circle {
        center: Vec<f64>,
        radius: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        t_range: [f64; 2],
    },
    Helix {
        radius: f64,
        omega: f64,
        pitch: f64,
        t_range: [f64; 2],
    },
    /// Geodesic diameter of the hyperbolic Poincaré disk.
    DiskDiameter { t_range: [f64; 2] },
    /// CSV of points with a header row; parametrized by chord length.
    Polyline {
        file: PathBuf,
        #[serde(default)]
        closed: bool,
        /// Number of traversals of a closed polyline.
        #[serde(default = "one")]
        laps: f64,
    },
    /// Tractrix `gamma_*` columns of an earlier `trace.csv`.
    PreviousTractrix {
        trace: PathBuf,
        #[serde(default)]
        reversed: bool,
    },
}

fn vec3(field: &str, v: &[f64]) -> Result<Vector3<f64>> {
    match v {
        [x, y] => Ok(Vector3::new(*x, *y, 0.0)),
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(invalid(field, format!("needs 2 or 3 components, got {}", v.len()))),
    }
}

fn range_ok(r: &[f64; 2]) -> Result<()> {
    if r[0].is_finite() && r[1].is_finite() && r[0] < r[1] {
        Ok(())
    } else {
        Err(invalid("tractor.t_range", format!("needs t0 < t1, got {r:?}")))
    }
}

fn sphere_curvature(model: &ManifoldModel, curve: &str) -> Result<f64> {
    match model {
        ManifoldModel::SpaceForm(sf) if sf.curvature > 0.0 && sf.dimension == 2 => Ok(sf.curvature),
        _ => Err(invalid(
            "tractor.curve",
            format!("{curve} needs a two-dimensional space form with K > 0"),
        )),
    }
}

/// Reads numeric CSV rows with a header; blank cells are rejected.
pub fn read_points(path: &Path) -> Result<Vec<Vector3<f64>>> {
    let io_err = |e: io::Error| ScenarioError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| invalid(path.display().to_string(), e.to_string()))?
        .clone();
    let gamma: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("gamma_"))
        .map(|(i, _)| i)
        .collect();
    // a trace file contributes its tractrix columns, a plain file all of them
    let cols: Vec<usize> = if gamma.is_empty() {
        (0..header.len()).collect()
    } else {
        gamma
    };
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| invalid(path.display().to_string(), e.to_string()))?;
        let vals: std::result::Result<Vec<f64>, _> = cols.iter().map(|&i| row[i].trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| invalid(format!("{}:{}", path.display(), line + 2), e.to_string()))?;
        out.push(vec3(&format!("{}:{}", path.display(), line + 2), &vals)?);
    }
    Ok(out)
}

impl TractorSpec {
    pub fn build(&self, model: &ManifoldModel, base: &Path) -> Result<TractorCurve> {
        let curve = match self {
            Self::Line {
                start,
                velocity,
                t_range,
                geodesic,
            } => {
                range_ok(t_range)?;
                let v = vec3("tractor.velocity", velocity)?;
                if v.norm() == 0.0 {
                    return Err(invalid("tractor.velocity", "must be nonzero"));
                }
                TractorCurve::line(vec3("tractor.start", start)?, v, *t_range).with_geodesic(*geodesic)
            }
            Self::GreatCircle { t_range } => {
                range_ok(t_range)?;
                TractorCurve::equator(sphere_curvature(model, "great_circle")?, *t_range)
            }
            Self::Latitude { colatitude, t_range } => {
                range_ok(t_range)?;
                let k = sphere_curvature(model, "latitude")?;
                if !(*colatitude > 0.0 && *colatitude < PI) {
                    return Err(invalid("tractor.colatitude", "must lie in (0, pi)"));
                }
                let r = 1.0 / k.sqrt();
                TractorCurve::line(
                    Vector3::new(*colatitude, 0.0, 0.0),
                    Vector3::new(0.0, 1.0 / (r * colatitude.sin()), 0.0),
                    *t_range,
                )
                .with_geodesic((colatitude - PI / 2.0).abs() < 1e-15)
            }
            Self::Circle {
                center,
                radius,
                omega,
                phase,
                t_range,
            } => {
                range_ok(t_range)?;
                if *radius <= 0.0 || *omega == 0.0 {
                    return Err(invalid("tractor.radius", "needs radius > 0 and omega != 0"));
                }
                let mut c = TractorCurve::circle(vec3("tractor.center", center)?, *radius, *omega, *t_range);
                if let crate::tractrix_sim::TractorShape::Circle { phase: p, .. } = &mut c.shape {
                    *p = *phase;
                }
                c
            }
            Self::Helix {
                radius,
                omega,
                pitch,
                t_range,
            } => {
                range_ok(t_range)?;
                if model.dimension() != 3 {
                    return Err(invalid("tractor.curve", "helix needs a three-dimensional model"));
                }
                TractorCurve::helix(*radius, *omega, *pitch, *t_range)
            }
            Self::DiskDiameter { t_range } => {
                range_ok(t_range)?;
                match model {
                    ManifoldModel::SpaceForm(sf) if sf.curvature < 0.0 => {
                        TractorCurve::disk_diameter(sf.curvature, *t_range)
                    }
                    _ => return Err(invalid("tractor.curve", "disk_diameter needs a space form with K < 0")),
                }
            }
            Self::Polyline { file, closed, laps } => {
                let mut points = read_points(&base.join(file))?;
                if *closed && points.first() != points.last() {
                    points.push(points[0]);
                }
                let mut c = TractorCurve::polyline(&points, *closed)?;
                if !(*laps > 0.0) || (!closed && *laps != 1.0) {
                    return Err(invalid("tractor.laps", "must be positive, and 1 for open polylines"));
                }
                c.t_range[1] = c.t_range[0] + laps * (c.t_range[1] - c.t_range[0]);
                c
            }
            Self::PreviousTractrix { trace, reversed } => {
                let mut points = read_points(&base.join(trace))?;
                // a resting tractrix repeats its position
                points.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
                if *reversed {
                    points.reverse();
                }
                TractorCurve::polyline(&points, false)?
            }
        };
        if model.dimension() == 2 && curve.position(curve.t_range[0]).z != 0.0 {
            return Err(invalid("tractor", "three-dimensional tractor on a surface"));
        }
        Ok(curve)
    }
}

/// Initial tractrix point: exactly one of the three fields.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    /// `γ(t0)` in chart coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    /// Pole leaves `η(t0)` at this angle from `−η̇(t0)`, counterclockwise
    /// in the oriented frame (about the z axis in 3-space).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trailing_angle: Option<f64>,
    /// Chart direction of the pole at `η(t0)`, pointing towards `γ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole_direction: Option<Vec<f64>>,
}

impl StartSpec {
    pub fn trailing(angle: f64) -> Self {
        Self {
            trailing_angle: Some(angle),
            ..Self::default()
        }
    }

    pub fn resolve(&self, model: &ManifoldModel, tractor: &TractorCurve, ell: f64) -> Result<Vector3<f64>> {
        let given = [
            self.point.is_some(),
            self.trailing_angle.is_some(),
            self.pole_direction.is_some(),
        ];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(invalid(
                "start",
                "set exactly one of point, trailing_angle, pole_direction",
            ));
        }
        if let Some(p) = &self.point {
            return vec3("start.point", p);
        }
        let (eta, vel) = tractor.eval(tractor.t_range[0]);
        let flat = model.dimension() == 3 || model.is_euclidean();
        if let Some(a) = self.trailing_angle {
            if flat {
                let back = -vel.normalize();
                return Ok(eta + Rotation3::from_axis_angle(&Vector3::z_axis(), a) * back * ell);
            }
            let p = Vector2::new(eta.x, eta.y);
            let c = -model.frame_components(&p, &Vector2::new(vel.x, vel.y)).normalize();
            let (s, co) = a.sin_cos();
            let dir = model.from_frame(&p, &Vector2::new(co * c.x - s * c.y, s * c.x + co * c.y));
            return pole_end(model, &p, &dir, ell);
        }
        let dir = vec3(
            "start.pole_direction",
            self.pole_direction.as_ref().expect("one field set"),
        )?;
        if dir.norm() == 0.0 {
            return Err(invalid("start.pole_direction", "must be nonzero"));
        }
        if flat {
            return Ok(eta + dir.normalize() * ell);
        }
        let p = Vector2::new(eta.x, eta.y);
        pole_end(model, &p, &model.normalize(&p, &Vector2::new(dir.x, dir.y)), ell)
    }
}

fn pole_end(model: &ManifoldModel, p: &Point, dir: &Vector2<f64>, ell: f64) -> Result<Vector3<f64>> {
    let g = exp_map(model, p, dir, ell, ell / 400.0)?.endpoint();
    Ok(Vector3::new(g.x, g.y, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionalSpec {
    /// Writes length, total curvature, area and the gap bound.
    pub sweep: bool,
    /// Fits the leading exponent of `d(s)` on a geodesic tractor.
    pub leading_exponent: bool,
}

impl Default for FunctionalSpec {
    fn default() -> Self {
        Self {
            sweep: true,
            leading_exponent: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSpec {
    /// Supplied `[K_lo, K_hi]`; certified from the visited region when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
    /// Added on both sides of the bounds.
    #[serde(default)]
    pub widen: f64,
    #[serde(default = "yes")]
    pub rauch: bool,
    #[serde(default)]
    pub toponogov: bool,
    #[serde(default)]
    pub le: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole_cap: Option<f64>,
    /// Extra runs from trailing angles drawn with the scenario seed.
    #[serde(default)]
    pub random_starts: usize,
    /// Half-width of the interval the random trailing angles are drawn from.
    #[serde(default = "one")]
    pub angle_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineSpec {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub amplitude: f64,
    #[serde(default = "one")]
    pub waves: f64,
    #[serde(default = "hundred")]
    pub samples: usize,
}

fn hundred() -> usize {
    100
}

/// Initial curve of a shortening run: exactly one of the fields.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// `from + τ(to − from) + amplitude·sin(waves·π·τ)·n`, `n` the unit
    /// chart normal of the chord.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sine: Option<SineSpec>,
}

impl CurveSpec {
    pub fn build(&self, base: &Path) -> Result<Vec<Point>> {
        let given = [self.points.is_some(), self.file.is_some(), self.sine.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(invalid("shorten.curve", "set exactly one of points, file, sine"));
        }
        if let Some(p) = &self.points {
            return Ok(p.iter().map(|q| Vector2::new(q[0], q[1])).collect());
        }
        if let Some(f) = &self.file {
            return Ok(read_points(&base.join(f))?
                .iter()
                .map(|q| Vector2::new(q.x, q.y))
                .collect());
        }
        let s = self.sine.as_ref().expect("one field set");
        if s.samples < 3 {
            return Err(invalid("shorten.curve.sine.samples", "needs at least 3"));
        }
        let (a, b) = (Vector2::from(s.from), Vector2::from(s.to));
        let chord = b - a;
        if chord.norm() == 0.0 {
            return Err(invalid("shorten.curve.sine", "from and to coincide"));
        }
        let n = Vector2::new(-chord.y, chord.x).normalize();
        let m = s.samples - 1;
        let mut pts: Vec<Point> = (0..=m)
            .map(|i| {
                let tau = i as f64 / m as f64;
                a + chord * tau + n * (s.amplitude * (s.waves * PI * tau).sin())
            })
            .collect();
        pts[m] = b;
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShortenSpec {
    pub mode: Mode,
    pub ell: f64,
    pub curve: CurveSpec,
    #[serde(default)]
    pub options: ShorteningOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSpec {
    pub curvature: f64,
    pub ell: f64,
    pub d0: f64,
    pub s_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Allows `√K ℓ > π/2` on the sphere.
    #[serde(default)]
    pub long_pole: bool,
}

fn default_samples() -> usize {
    201
}

impl AnalyticSpec {
    pub fn solve(&self) -> Result<SpaceFormSolution> {
        if !(self.s_max > 0.0) || self.samples < 2 {
            return Err(invalid("analytic", "needs s_max > 0 and samples >= 2"));
        }
        Ok(if self.long_pole {
            solve_from_d0_long(self.curvature, self.ell, self.d0)?
        } else {
            solve_from_d0(self.curvature, self.ell, self.d0)?
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    /// Runs the tractor backwards from `γ(t0)`, see `pushed_simulate`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub push: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tractor: Option<TractorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<StartSpec>,
    #[serde(default)]
    pub sim: SimParams,
    #[serde(default)]
    pub functionals: FunctionalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shorten: Option<ShortenSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<AnalyticSpec>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Line of the first `key =` or `[...key]` in `text`, 1-based.
fn locate(text: &str, field: &str) -> Option<usize> {
    let key = field.rsplit('.').next()?;
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
                || (l.starts_with('[') && l.trim_end().trim_end_matches(']').ends_with(key))
        })
        .map(|i| i + 1)
}

impl ScenarioConfig {
    /// Parses and validates; `base_dir` anchors relative file paths.
    pub fn from_toml_str(text: &str, origin: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| ScenarioError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate().map_err(|e| match e {
            ScenarioError::Invalid { field, message } => {
                let at = locate(text, &field)
                    .map(|l| format!("{origin}:{l}"))
                    .unwrap_or(origin.to_string());
                ScenarioError::Invalid {
                    field: format!("{at}: {field}"),
                    message,
                }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, &path.display().to_string(), base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario of plain values serializes")
    }

    /// Range and presence checks that need no numerics.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(invalid("name", "must be a nonempty file name"));
        }
        let sim = &self.sim;
        if !(sim.dt > 0.0 && sim.dt.is_finite()) {
            return Err(invalid("sim.dt", format!("must be positive, got {}", sim.dt)));
        }
        if sim.pole_step.is_some_and(|h| !(h > 0.0)) {
            return Err(invalid("sim.pole_step", "must be positive"));
        }
        if sim.max_records == 0 {
            return Err(invalid("sim.max_records", "must be positive"));
        }
        if let Some(ell) = self.ell {
            if !(ell > 0.0 && ell.is_finite()) {
                return Err(invalid("ell", format!("must be positive, got {ell}")));
            }
        }
        let wants_sim = self.tractor.is_some() || self.start.is_some() || self.comparison.is_some();
        if wants_sim {
            for (name, present) in [
                ("model", self.model.is_some()),
                ("tractor", self.tractor.is_some()),
                ("start", self.start.is_some()),
                ("ell", self.ell.is_some()),
            ] {
                if !present {
                    return Err(invalid(name, "required for a simulation"));
                }
            }
        }
        if let Some(model) = &self.model {
            let m = model.build()?;
            if let Some(t) = &self.tractor {
                t.build(&m, &self.base_dir)?;
            }
        }
        if let Some(c) = &self.comparison {
            if let Some([lo, hi]) = c.bounds {
                if !(lo <= hi) {
                    return Err(invalid("comparison.bounds", "needs K_lo <= K_hi"));
                }
            }
            if !(c.widen >= 0.0) {
                return Err(invalid("comparison.widen", "must be nonnegative"));
            }
            if c.pole_cap.is_some_and(|p| !(p > 0.0)) {
                return Err(invalid("comparison.pole_cap", "must be positive"));
            }
            if c.random_starts > 0 && self.start.as_ref().is_none_or(|s| s.trailing_angle.is_none()) {
                return Err(invalid("comparison.random_starts", "needs start.trailing_angle"));
            }
        }
        if let Some(s) = &self.shorten {
            if self.model.is_none() {
                return Err(invalid("model", "required for shortening"));
            }
            if !(s.ell > 0.0) {
                return Err(invalid("shorten.ell", "must be positive"));
            }
            let o = &s.options;
            if o.samples < 8 || o.max_iter == 0 || o.substeps == 0 || o.pole_steps == 0 {
                return Err(invalid(
                    "shorten.options",
                    "needs samples >= 8 and positive max_iter, substeps, pole_steps",
                ));
            }
            s.curve.build(&self.base_dir)?;
        }
        if let Some(a) = &self.analytic {
            if !(a.ell > 0.0) {
                return Err(invalid("analytic.ell", "must be positive"));
            }
            if !(a.s_max > 0.0) || a.samples < 2 {
                return Err(invalid("analytic.s_max", "needs s_max > 0 and samples >= 2"));
            }
        }
        Ok(())
    }

    pub fn has_simulation(&self) -> bool {
        self.tractor.is_some()
    }

    pub fn build_model(&self) -> Result<ManifoldModel> {
        self.model.as_ref().ok_or_else(|| invalid("model", "missing"))?.build()
    }

    pub fn build_tractor(&self, model: &ManifoldModel) -> Result<TractorCurve> {
        self.tractor
            .as_ref()
            .ok_or_else(|| invalid("tractor", "missing"))?
            .build(model, &self.base_dir)
    }

    fn ell(&self) -> Result<f64> {
        self.ell.ok_or_else(|| invalid("ell", "missing"))
    }

    /// Runs the configured simulation.
    pub fn simulate(&self) -> Result<TractrixTrace> {
        let start = self.start.clone().ok_or_else(|| invalid("start", "missing"))?;
        self.simulate_from(&start)
    }

    pub fn simulate_from(&self, start: &StartSpec) -> Result<TractrixTrace> {
        let model = self.build_model()?;
        let tractor = self.build_tractor(&model)?;
        let ell = self.ell()?;
        let g0 = start.resolve(&model, &tractor, ell)?;
        Ok(if self.push {
            pushed_simulate(&model, &tractor, &g0, ell, &self.sim)?
        } else {
            simulate(&model, &tractor, &g0, ell, &self.sim)?
        })
    }

    /// Comparison checks on `trace` and on the seeded random starts.
    pub fn verify(&self, trace: &TractrixTrace) -> Result<ComparisonReport> {
        let spec = self
            .comparison
            .as_ref()
            .ok_or_else(|| invalid("comparison", "missing"))?;
        let mut report = ComparisonReport::new(self.name.clone());
        report.merge(check_trace(trace, spec, "")?);
        if spec.random_starts > 0 {
            let base = self
                .start
                .as_ref()
                .and_then(|s| s.trailing_angle)
                .ok_or_else(|| invalid("comparison.random_starts", "needs start.trailing_angle"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for i in 0..spec.random_starts {
                let a = base + rng.random_range(-spec.angle_spread..=spec.angle_spread);
                let tr = self.simulate_from(&StartSpec::trailing(a))?;
                report.merge(check_trace(&tr, spec, &format!("start{i}_"))?);
            }
        }
        Ok(report)
    }

    pub fn shorten(&self) -> Result<ShorteningRun> {
        let spec = self.shorten.as_ref().ok_or_else(|| invalid("shorten", "missing"))?;
        let model = self.build_model()?;
        let curve = spec.curve.build(&self.base_dir)?;
        Ok(match spec.mode {
            Mode::SelfRepeated => {
                let (p, q) = (curve[0], curve[curve.len() - 1]);
                shortening::self_repeated(&model, &p, &q, &curve, spec.ell, &spec.options)?
            }
            Mode::LoopRepeated => shortening::loop_repeated(&model, &curve, spec.ell, &spec.options)?,
        })
    }

    pub fn analytic(&self) -> Result<SpaceFormSolution> {
        self.analytic
            .as_ref()
            .ok_or_else(|| invalid("analytic", "missing"))?
            .solve()
    }
}

fn check_trace(trace: &TractrixTrace, spec: &ComparisonSpec, prefix: &str) -> Result<ComparisonReport> {
    let opts = ComparisonOptions {
        pole_cap: spec.pole_cap.unwrap_or(f64::INFINITY),
    };
    let bounds = match spec.bounds {
        Some([lo, hi]) => CurvatureBounds::supplied(lo, hi),
        None => trace_bounds(trace)?,
    }
    .widened(spec.widen);
    let mut report = ComparisonReport::new(trace.model.name());
    if spec.rauch {
        report.merge(rauch_length_area_check(trace, &bounds, &opts)?);
    }
    if spec.toponogov {
        let d0 = trace
            .records
            .first()
            .and_then(|r| r.d)
            .ok_or_else(|| invalid("comparison.toponogov", "needs a geodesic tractor with distances"))?;
        let ell = trace.ell;
        let hi = solve_from_d0(bounds.k_hi, ell, d0)?;
        let lo = solve_from_d0(bounds.k_lo, ell, d0)?;
        report.merge(toponogov_sandwich_check(trace, &hi, &lo, &opts)?);
    }
    if spec.le {
        report.merge(le_sandwich_check(trace, &bounds, &opts)?);
    }
    for c in &mut report.checks {
        c.name = format!("{prefix}{}", c.name);
    }
    Ok(report)
}
