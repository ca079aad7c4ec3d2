//! Tractrix propagation for a given tractor and pole length.
//!
//! The tractrix point `γ` moves along its pole with rate
//! `ṡ = ⟨η̇, T(ℓ)⟩_g`, where `T(ℓ)` is the unit pole tangent at the tractor.
//! Euclidean charts use the explicit projection `γ̇ = ⟨η̇, λ̂⟩ λ̂`; other
//! models shoot the pole geodesic at every right-hand-side evaluation. Both
//! paths restore the exact pole length after each step. Push and pull
//! share this ODE; the sign of `ṡ` tells them apart.

mod tractor;

pub use tractor::{TractorCurve, TractorShape};

use std::cell::Cell;

use nalgebra::{SVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifold::{
    exp_map, geodesic_shoot, jacobi_integral_space_form, jacobi_scalar, jacobi_space_form, transport_segment,
    GeometryError, ManifoldModel, Point, ShootOptions, Shot, Tangent,
};
use crate::ode::{brent_minimize, rk4_step};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("pole shooting lost at t = {t}: {source}")]
    ShootingLost { t: f64, source: GeometryError },
    #[error("chart singular at t = {t}: {source}")]
    ChartSingular { t: f64, source: GeometryError },
    #[error("geometry error at t = {t}: {source}")]
    Geometry { t: f64, source: GeometryError },
    #[error("{needed} records exceed the limit of {limit}")]
    RecordOverflow { needed: usize, limit: usize },
    #[error("pole length drift {drift:e} at t = {t}")]
    PoleLengthDrift { t: f64, drift: f64 },
    #[error("initial motion is a pull (ds/dt = {speed}); a push needs ds/dt < 0")]
    NotPushed { speed: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn classify(t: f64, e: GeometryError) -> SimError {
    match e {
        GeometryError::NoConvergence { .. } => SimError::ShootingLost { t, source: e },
        GeometryError::SingularChart(..) => SimError::ChartSingular { t, source: e },
        _ => SimError::Geometry { t, source: e },
    }
}

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Tractor parameter step; one record per step.
    pub dt: f64,
    /// Pole integration step; `ℓ/200` when absent.
    pub pole_step: Option<f64>,
    /// Relative speed `|ṡ|/|η̇|` below which a record counts as singular.
    pub cusp_speed_eps: f64,
    pub max_records: usize,
    /// Uses pole shooting even on Euclidean charts.
    pub force_general: bool,
    /// Emits `d(s)` for geodesic tractors.
    pub distances: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.01,
            pole_step: None,
            cusp_speed_eps: 1e-6,
            max_records: 2_000_000,
            force_general: false,
            distances: true,
        }
    }
}

/// One time sample of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    /// Arclength travelled by the tractrix, `∫|ṡ| dt`.
    pub s: f64,
    pub gamma: Vector3<f64>,
    /// Unit pole direction at `γ`.
    pub pole_dir: Vector3<f64>,
    pub eta: Vector3<f64>,
    pub eta_dot: Vector3<f64>,
    /// `|η̇|_g`
    pub eta_speed: f64,
    /// Unit pole tangent at `η`.
    pub pole_end_tangent: Vector3<f64>,
    pub pole_length: f64,
    /// Signed `ṡ = ⟨η̇, T(ℓ)⟩_g`.
    pub speed: f64,
    /// Pole turning rate `|D_t v|`, signed by orientation on surfaces.
    pub omega: f64,
    /// `J_s(ℓ)`
    pub jacobi_end: f64,
    /// `∫₀^ℓ J_s(u) du`
    pub jacobi_integral: f64,
    pub d: Option<f64>,
    /// `κ = |ω|/|ṡ|`; `None` at cusps and masked records.
    pub kappa: Option<f64>,
    /// Independent curvature estimate, see [`TractrixTrace`].
    pub kappa_check: Option<f64>,
    /// `+1` pull, `−1` push.
    pub sigma: i8,
    pub cusp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuspKind {
    /// `ṡ` changes sign. The oriented tangent of `γ` reverses but the pole
    /// line does not turn, so the turning angle is 0.
    Flip,
    /// `γ` rests while the pole rotates.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cusp {
    pub t: f64,
    pub s: f64,
    /// Turning angle of the wagon pole across the singular point.
    pub turning_angle: f64,
    pub kind: CuspKind,
}

/// Time-ordered simulation output.
///
/// On Euclidean charts `kappa` uses the analytic pole rotation and
/// `kappa_check` a finite difference of the pole direction. Elsewhere
/// `kappa` comes from the speed identity `η̇ = ṡ T + ω J_s(ℓ) N` and
/// `kappa_check` is the covariant finite difference (pole angle against a
/// parallel frame along `γ`).
#[derive(Debug, Clone, PartialEq)]
pub struct TractrixTrace {
    pub records: Vec<TraceRecord>,
    pub cusps: Vec<Cusp>,
    pub ell: f64,
    pub dt: f64,
    pub dimension: usize,
    pub model: ManifoldModel,
    pub geodesic_tractor: bool,
    /// Some pole had `j(u) ≤ 0` for `0 < u ≤ ℓ`.
    pub conjugate_point: bool,
}

impl TractrixTrace {
    pub fn regular(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.kappa.is_some())
    }

    pub fn flip_cusps(&self) -> usize {
        self.cusps.iter().filter(|c| c.kind == CuspKind::Flip).count()
    }

    /// Records and cusps with `t0 ≤ t ≤ t1`; everything else is kept.
    pub fn window(&self, t0: f64, t1: f64) -> Self {
        let inside = |t: f64| t >= t0 && t <= t1;
        Self {
            records: self.records.iter().filter(|r| inside(r.t)).copied().collect(),
            cusps: self.cusps.iter().filter(|c| inside(c.t)).copied().collect(),
            model: self.model.clone(),
            ..*self
        }
    }

    pub fn total_arclength(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.s - a.s,
            _ => 0.0,
        }
    }
}

fn xy(v: &Vector3<f64>) -> Vector2<f64> {
    Vector2::new(v.x, v.y)
}

fn lift(v: &Vector2<f64>) -> Vector3<f64> {
    Vector3::new(v.x, v.y, 0.0)
}

/// Velocity `γ̇ = ⟨η̇, λ̂⟩ λ̂` with `λ̂ = (η − γ)/ℓ`.
pub fn euclidean_rhs(
    eta: &Vector3<f64>,
    eta_prime: &Vector3<f64>,
    gamma: &Vector3<f64>,
    ell: f64,
) -> Result<Vector3<f64>, SimError> {
    let lam = eta - gamma;
    let drift = (lam.norm() - ell).abs();
    if drift > 1e-6 {
        return Err(SimError::PoleLengthDrift { t: f64::NAN, drift });
    }
    let hat = lam / ell;
    Ok(hat * eta_prime.dot(&hat))
}

fn point_distance(
    model: &ManifoldModel,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    guess: Option<&Tangent>,
) -> Result<f64, GeometryError> {
    if model.is_euclidean() {
        Ok((a - b).norm())
    } else {
        model.distance(&xy(a), &xy(b), guess)
    }
}

fn validate(model: &ManifoldModel, tractor: &TractorCurve, ell: f64, params: &SimParams) -> Result<usize, SimError> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(SimError::InvalidInput(format!(
            "pole length must be positive, got {ell}"
        )));
    }
    if !(params.dt > 0.0) || !(params.cusp_speed_eps > 0.0) || params.max_records == 0 {
        return Err(SimError::InvalidInput("simulation parameters must be positive".into()));
    }
    if params.pole_step.is_some_and(|h| !(h > 0.0)) {
        return Err(SimError::InvalidInput("pole step must be positive".into()));
    }
    let [t0, t1] = tractor.t_range;
    if !(t1 > t0) {
        return Err(SimError::InvalidInput("tractor range must be increasing".into()));
    }
    if model.dimension() == 3 && !model.is_euclidean() {
        return Err(SimError::InvalidInput("three-dimensional runs need K = 0".into()));
    }
    let n = ((t1 - t0) / params.dt).round().max(1.0) as usize;
    if n + 1 > params.max_records {
        return Err(SimError::RecordOverflow {
            needed: n + 1,
            limit: params.max_records,
        });
    }
    Ok(n)
}

/// Pulls (or pushes) the tractrix starting at `gamma0` along `tractor`.
pub fn simulate(
    model: &ManifoldModel,
    tractor: &TractorCurve,
    gamma0: &Vector3<f64>,
    ell: f64,
    params: &SimParams,
) -> Result<TractrixTrace, SimError> {
    let n = validate(model, tractor, ell, params)?;
    let t0 = tractor.t_range[0];
    let eta0 = tractor.position(t0);
    let d0 = point_distance(model, gamma0, &eta0, None).map_err(|e| classify(t0, e))?;
    if (d0 - ell).abs() > 1e-6 {
        return Err(SimError::PoleLengthDrift {
            t: t0,
            drift: (d0 - ell).abs(),
        });
    }
    let mut trace = if model.is_euclidean() && !params.force_general {
        euclidean_path(model, tractor, gamma0, ell, n)?
    } else {
        general_path(model, tractor, gamma0, ell, params, n)?
    };
    if tractor.geodesic && params.distances {
        fill_distances(&mut trace, tractor)?;
    }
    finalize(&mut trace, params.cusp_speed_eps);
    Ok(trace)
}

/// Runs [`simulate`] and requires the pole to start out pushed
/// (`ṡ < 0`). Equivalently, a pull along the reversed tractor read
/// backwards in time.
pub fn pushed_simulate(
    model: &ManifoldModel,
    tractor: &TractorCurve,
    gamma0: &Vector3<f64>,
    ell: f64,
    params: &SimParams,
) -> Result<TractrixTrace, SimError> {
    let trace = simulate(model, tractor, gamma0, ell, params)?;
    let eps = params.cusp_speed_eps;
    if let Some(r) = trace.records.iter().find(|r| r.speed.abs() > eps * r.eta_speed) {
        if r.speed > 0.0 {
            return Err(SimError::NotPushed { speed: r.speed });
        }
    }
    Ok(trace)
}

fn euclidean_path(
    model: &ManifoldModel,
    tractor: &TractorCurve,
    gamma0: &Vector3<f64>,
    ell: f64,
    n: usize,
) -> Result<TractrixTrace, SimError> {
    let [t0, t1] = tractor.t_range;
    let h = (t1 - t0) / n as f64;
    let planar = model.dimension() == 2;
    let mut rhs = |t: f64, y: &SVector<f64, 4>| -> Result<SVector<f64, 4>, SimError> {
        let (eta, eta_dot) = tractor.eval(t);
        let g = Vector3::new(y[0], y[1], y[2]);
        let lam = eta - g;
        let hat = lam / lam.norm();
        let sd = eta_dot.dot(&hat);
        let v = hat * sd;
        Ok(SVector::<f64, 4>::new(v.x, v.y, v.z, sd.abs()))
    };
    let make_record = |t: f64, y: &SVector<f64, 4>| -> TraceRecord {
        let (eta, eta_dot) = tractor.eval(t);
        let g = Vector3::new(y[0], y[1], y[2]);
        let lam = eta - g;
        let pole_length = lam.norm();
        let hat = lam / pole_length;
        let sd = eta_dot.dot(&hat);
        let rot = (eta_dot - hat * sd) / ell;
        let omega = if planar {
            hat.x * rot.y - hat.y * rot.x
        } else {
            rot.norm()
        };
        TraceRecord {
            t,
            s: y[3],
            gamma: g,
            pole_dir: hat,
            eta,
            eta_dot,
            eta_speed: eta_dot.norm(),
            pole_end_tangent: hat,
            pole_length,
            speed: sd,
            omega,
            jacobi_end: ell,
            jacobi_integral: 0.5 * ell * ell,
            d: None,
            kappa: None,
            kappa_check: None,
            sigma: 1,
            cusp: false,
        }
    };
    let mut y = SVector::<f64, 4>::new(gamma0.x, gamma0.y, if planar { 0.0 } else { gamma0.z }, 0.0);
    {
        // start exactly on the pole circle
        let eta = tractor.position(t0);
        let lam = eta - Vector3::new(y[0], y[1], y[2]);
        let g = eta - lam * (ell / lam.norm());
        y.fixed_rows_mut::<3>(0).copy_from(&g);
    }
    let mut records = Vec::with_capacity(n + 1);
    records.push(make_record(t0, &y));
    for i in 0..n {
        let t = t0 + i as f64 * h;
        y = rk4_step(&mut rhs, t, &y, h)?;
        let tn = t0 + (i + 1) as f64 * h;
        let eta = tractor.position(tn);
        let lam = eta - Vector3::new(y[0], y[1], y[2]);
        let g = eta - lam * (ell / lam.norm());
        y.fixed_rows_mut::<3>(0).copy_from(&g);
        records.push(make_record(tn, &y));
    }
    // finite-difference cross-check of the pole rotation
    let dirs: Vec<Vector3<f64>> = records.iter().map(|r| r.pole_dir).collect();
    let m = records.len();
    for (i, rec) in records.iter_mut().enumerate() {
        let (a, b, span) = if m < 3 {
            (0, m - 1, (m - 1) as f64)
        } else if i == 0 {
            (0, 1, 1.0)
        } else if i + 1 == m {
            (m - 2, m - 1, 1.0)
        } else {
            (i - 1, i + 1, 2.0)
        };
        let ang = dirs[a].cross(&dirs[b]).norm().atan2(dirs[a].dot(&dirs[b]));
        rec.kappa_check = Some(ang / (span * h));
    }
    Ok(TractrixTrace {
        records,
        cusps: Vec::new(),
        ell,
        dt: h,
        dimension: model.dimension(),
        model: model.clone(),
        geodesic_tractor: tractor.geodesic,
        conjugate_point: false,
    })
}

struct Shooter<'a> {
    model: &'a ManifoldModel,
    ell: f64,
    opts: ShootOptions,
    warm: Cell<Tangent>,
}

impl Shooter<'_> {
    fn shoot(&self, t: f64, gamma: &Point, eta: &Point) -> Result<Shot, SimError> {
        let shot = geodesic_shoot(self.model, gamma, eta, self.ell, &self.warm.get(), &self.opts)
            .map_err(|e| classify(t, e))?;
        self.warm.set(shot.direction);
        Ok(shot)
    }

    /// Moves `γ` along its pole until the pole has length `ℓ`.
    fn project(&self, t: f64, gamma: Point, eta: &Point) -> Result<(Point, Shot), SimError> {
        let mut g = gamma;
        let mut shot = self.shoot(t, &g, eta)?;
        for _ in 0..4 {
            let excess = shot.length - self.ell;
            if excess.abs() < 1e-14 * self.ell {
                break;
            }
            let dir = if excess > 0.0 { shot.direction } else { -shot.direction };
            let (end, _) = crate::manifold::integrate_geodesic(self.model, &g, &dir, excess.abs(), 4, false, false)
                .map_err(|e| classify(t, e))?;
            g = end.point;
            shot = self.shoot(t, &g, eta)?;
        }
        Ok((g, shot))
    }
}

fn general_path(
    model: &ManifoldModel,
    tractor: &TractorCurve,
    gamma0: &Vector3<f64>,
    ell: f64,
    params: &SimParams,
    n: usize,
) -> Result<TractrixTrace, SimError> {
    let [t0, t1] = tractor.t_range;
    let h = (t1 - t0) / n as f64;
    let pole_step = params.pole_step.unwrap_or(ell / 200.0);
    let n_pole = ((ell / pole_step).ceil() as usize).max(8);
    let shooter = Shooter {
        model,
        ell,
        opts: ShootOptions {
            step: pole_step,
            n_steps: Some(n_pole),
            tol: 1e-13,
            ..ShootOptions::default()
        },
        warm: Cell::new(Vector2::zeros()),
    };
    let g0 = xy(gamma0);
    let e0 = xy(&tractor.position(t0));
    model.check_point(&g0).map_err(|e| classify(t0, e))?;
    // chart chord as the first direction guess
    shooter.warm.set(e0 - g0);

    let pole_data = |g: &Point, v: &Tangent, len: f64| -> Result<(f64, f64, bool), GeometryError> {
        if let Some(k) = model.constant_curvature() {
            return Ok((jacobi_space_form(k, len), jacobi_integral_space_form(k, len), false));
        }
        let pole = exp_map(model, g, &model.normalize(g, v), len, pole_step)?;
        let prof = jacobi_scalar(model, &pole);
        Ok((prof.at_end(), prof.integral(), prof.conjugate_point))
    };

    let mut conjugate = false;
    let mut make_record = |t: f64, g: &Point, s: f64, shot: &Shot| -> Result<TraceRecord, SimError> {
        let (eta, eta_dot) = tractor.eval(t);
        let ep = xy(&eta);
        let tan = model.normalize(&ep, &shot.end.tangent);
        let ed = xy(&eta_dot);
        let sd = model.inner(&ep, &ed, &tan);
        let (j_end, j_int, conj) = pole_data(g, &shot.direction, shot.length).map_err(|e| classify(t, e))?;
        conjugate |= conj;
        // speed identity: ⟨η̇, N(ℓ)⟩ = ω J_s(ℓ)
        let c = model.frame_components(&ep, &tan);
        let normal = model.from_frame(&ep, &Vector2::new(-c.y, c.x));
        let omega_speed = model.inner(&ep, &ed, &normal) / j_end;
        Ok(TraceRecord {
            t,
            s,
            gamma: lift(g),
            pole_dir: lift(&shot.direction),
            eta,
            eta_dot,
            eta_speed: model.norm(&ep, &ed),
            pole_end_tangent: lift(&tan),
            pole_length: shot.length,
            speed: sd,
            omega: omega_speed,
            jacobi_end: j_end,
            jacobi_integral: j_int,
            d: None,
            kappa: None,
            kappa_check: None,
            sigma: 1,
            cusp: false,
        })
    };

    let mut rhs = |t: f64, y: &SVector<f64, 3>| -> Result<SVector<f64, 3>, SimError> {
        let g = Vector2::new(y[0], y[1]);
        let (eta, eta_dot) = tractor.eval(t);
        let ep = xy(&eta);
        let shot = shooter.shoot(t, &g, &ep)?;
        let tan = model.normalize(&ep, &shot.end.tangent);
        let sd = model.inner(&ep, &xy(&eta_dot), &tan);
        let v = shot.direction * sd;
        Ok(SVector::<f64, 3>::new(v.x, v.y, sd.abs()))
    };

    let (g, shot) = shooter.project(t0, g0, &e0)?;
    let mut y = SVector::<f64, 3>::new(g.x, g.y, 0.0);
    let mut records = Vec::with_capacity(n + 1);
    records.push(make_record(t0, &g, 0.0, &shot)?);
    let mut prev_angle: Option<f64> = None;
    let angle_of = |g: &Point, v: &Tangent| {
        let c = model.frame_components(g, v);
        c.y.atan2(c.x)
    };
    let mut cur_angle = angle_of(&g, &shot.direction);
    for i in 0..n {
        let t = t0 + i as f64 * h;
        // warm start: previous direction advanced by the previous increment
        if let Some(pa) = prev_angle {
            let mut inc = cur_angle - pa;
            inc = (inc + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
            let gp = Vector2::new(y[0], y[1]);
            let a = cur_angle + inc;
            shooter.warm.set(model.from_frame(&gp, &Vector2::new(a.cos(), a.sin())));
        }
        let y_new = rk4_step(&mut rhs, t, &y, h)?;
        let tn = t0 + (i + 1) as f64 * h;
        let en = xy(&tractor.position(tn));
        let (g, shot) = shooter.project(tn, Vector2::new(y_new[0], y_new[1]), &en)?;
        y = SVector::<f64, 3>::new(g.x, g.y, y_new[2]);
        records.push(make_record(tn, &g, y[2], &shot)?);
        prev_angle = Some(cur_angle);
        cur_angle = angle_of(&g, &shot.direction);
    }

    // covariant finite difference: pole angle against a parallel frame
    let mut frame = {
        let g = xy(&records[0].gamma);
        model.orthonormal_frame(&g).0
    };
    let mut phi = Vec::with_capacity(records.len());
    let mut last = 0.0f64;
    for (i, r) in records.iter().enumerate() {
        let g = xy(&r.gamma);
        if i > 0 {
            let gp = xy(&records[i - 1].gamma);
            frame = transport_segment(model, &gp, &g, &frame, 4).map_err(|e| classify(r.t, e))?;
            frame = model.normalize(&g, &frame);
        }
        let a = model.angle_between(&g, &frame, &xy(&r.pole_dir));
        let a = if i == 0 {
            a
        } else {
            last + (a - last + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI
        };
        phi.push(a);
        last = a;
    }
    let omega_fd = differentiate(&phi, h);
    for (r, w) in records.iter_mut().zip(omega_fd) {
        // the speed identity is pointwise; it degenerates only where J_s(ℓ) → 0
        if r.jacobi_end.abs() < 1e-8 || !r.omega.is_finite() {
            r.omega = w;
        }
        r.kappa_check = Some(w.abs());
    }
    Ok(TractrixTrace {
        records,
        cusps: Vec::new(),
        ell,
        dt: h,
        dimension: 2,
        model: model.clone(),
        geodesic_tractor: tractor.geodesic,
        conjugate_point: conjugate,
    })
}

/// Second-order finite-difference derivative on a uniform grid.
fn differentiate(f: &[f64], h: f64) -> Vec<f64> {
    let m = f.len();
    match m {
        0 => vec![],
        1 => vec![0.0],
        2 => vec![(f[1] - f[0]) / h; 2],
        _ => (0..m)
            .map(|i| {
                if i == 0 {
                    (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
                } else if i + 1 == m {
                    (3.0 * f[m - 1] - 4.0 * f[m - 2] + f[m - 3]) / (2.0 * h)
                } else {
                    (f[i + 1] - f[i - 1]) / (2.0 * h)
                }
            })
            .collect(),
    }
}

/// Distance from each tractrix point to the geodesic tractor, minimized
/// over the tractor parameter.
fn fill_distances(trace: &mut TractrixTrace, tractor: &TractorCurve) -> Result<(), SimError> {
    let model = trace.model.clone();
    let ell = trace.ell;
    let h = trace.dt;
    let mut foot: Option<f64> = None;
    let mut guess: Option<Tangent> = None;
    for r in trace.records.iter_mut() {
        let speed = r.eta_speed.max(1e-300);
        let reach = 1.1 * ell / speed;
        let dist = |tau: f64, guess: Option<&Tangent>| -> f64 {
            point_distance(&model, &r.gamma, &tractor.position(tau), guess).unwrap_or(f64::INFINITY)
        };
        let g = guess;
        let local = foot.map(|f| {
            let w = 3.0 * h.max(1e-3);
            let (x, fx) = brent_minimize(|tau| dist(tau, g.as_ref()), f - w, f + w, 1e-11);
            (x, fx, (x - (f - w)).abs() < 1e-3 * w || ((f + w) - x).abs() < 1e-3 * w)
        });
        let (tau, d) = match local {
            Some((x, fx, false)) => (x, fx),
            _ => {
                let m = 64;
                let grid: Vec<f64> = (0..=m)
                    .map(|i| r.t - reach + 2.0 * reach * i as f64 / m as f64)
                    .collect();
                let vals: Vec<f64> = grid.iter().map(|&tau| dist(tau, None)).collect();
                let j = vals
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(j, _)| j)
                    .unwrap_or(0);
                let lo = grid[j.saturating_sub(1)];
                let hi = grid[(j + 1).min(m)];
                brent_minimize(|tau| dist(tau, None), lo, hi, 1e-11)
            }
        };
        if !d.is_finite() {
            return Err(SimError::Geometry {
                t: r.t,
                source: GeometryError::InvalidArgument("foot point not found".into()),
            });
        }
        foot = Some(tau);
        if !model.is_euclidean() {
            let q = xy(&tractor.position(tau));
            guess = Some(q - xy(&r.gamma));
        }
        r.d = Some(d);
    }
    Ok(())
}

/// Assigns pull/push signs, detects cusps, and sets the masked curvature.
fn finalize(trace: &mut TractrixTrace, eps: f64) {
    let recs = &mut trace.records;
    let m = recs.len();
    if m == 0 {
        return;
    }
    let h = trace.dt;
    let irregular: Vec<bool> = recs
        .iter()
        .map(|r| r.speed.abs() < eps * r.eta_speed || r.eta_speed == 0.0)
        .collect();
    // signs, with zero speeds inheriting a neighbouring sign
    let mut sign: Vec<i8> = recs
        .iter()
        .map(|r| {
            if r.speed > 0.0 {
                1
            } else if r.speed < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect();
    for i in 1..m {
        if sign[i] == 0 {
            sign[i] = sign[i - 1];
        }
    }
    for i in (0..m.saturating_sub(1)).rev() {
        if sign[i] == 0 {
            sign[i] = sign[i + 1];
        }
    }
    for (r, s) in recs.iter_mut().zip(&sign) {
        r.sigma = if *s == 0 { 1 } else { *s };
    }

    // stationary runs: at least three consecutive irregular records
    let mut in_run = vec![false; m];
    let mut cusps = Vec::new();
    let mut i = 0;
    while i < m {
        if !irregular[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < m && irregular[i] {
            i += 1;
        }
        let end = i; // exclusive
        if end - start >= 3 {
            let mut turn = 0.0;
            for j in start..end - 1 {
                turn += 0.5 * h * (recs[j].omega.abs() + recs[j + 1].omega.abs());
            }
            let mid = (start + end - 1) / 2;
            cusps.push(Cusp {
                t: recs[mid].t,
                s: recs[mid].s,
                turning_angle: turn,
                kind: CuspKind::Stationary,
            });
            let before = start.checked_sub(1).map(|j| recs[j].sigma);
            let after = (end < m).then(|| recs[end].sigma);
            if let (Some(b), Some(a)) = (before, after) {
                if a != b {
                    cusps.push(Cusp {
                        t: recs[mid].t,
                        s: recs[mid].s,
                        turning_angle: 0.0,
                        kind: CuspKind::Flip,
                    });
                }
            }
            for flag in &mut in_run[start..end] {
                *flag = true;
            }
        }
    }
    for i in 0..m.saturating_sub(1) {
        if recs[i].sigma != recs[i + 1].sigma && !in_run[i] && !in_run[i + 1] {
            let (a, b) = (recs[i].speed, recs[i + 1].speed);
            let frac = if a != b { (a / (a - b)).clamp(0.0, 1.0) } else { 0.5 };
            let t = recs[i].t + frac * (recs[i + 1].t - recs[i].t);
            let s = recs[i].s + frac * (recs[i + 1].s - recs[i].s);
            cusps.push(Cusp {
                t,
                s,
                turning_angle: 0.0,
                kind: CuspKind::Flip,
            });
            let near = if frac < 0.5 { i } else { i + 1 };
            recs[near].cusp = true;
        }
    }
    cusps.sort_by(|a, b| a.t.total_cmp(&b.t));

    let ell = trace.ell;
    let geodesic = trace.geodesic_tractor;
    for (k, r) in recs.iter_mut().enumerate() {
        let near_cusp_d = geodesic && r.d.is_some_and(|d| (ell - d).abs() < 1e-4);
        let masked = irregular[k] || in_run[k] || r.cusp || near_cusp_d;
        if masked {
            r.kappa = None;
            r.kappa_check = None;
        } else {
            r.kappa = Some(r.omega.abs() / r.speed.abs());
            r.kappa_check = r.kappa_check.map(|w| w / r.speed.abs());
        }
    }
    trace.cusps = cusps;
}

/// Curve sample used by [`tractor_from_tractrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub t: f64,
    pub point: Vector3<f64>,
    /// Any nonzero tangent; it is normalized.
    pub tangent: Vector3<f64>,
}

/// Tractor whose tractrix is the given curve: `η = exp(γ, sign·γ̂′, ℓ)`,
/// sampled on the curve's parameter grid and joined by a Hermite spline
/// with fourth-order difference derivatives. `sign = +1` makes `γ` a
/// pulled tractrix.
pub fn tractor_from_tractrix(
    model: &ManifoldModel,
    curve: &[CurveSample],
    ell: f64,
    sign: f64,
    closed: bool,
) -> Result<TractorCurve, SimError> {
    if curve.len() < 5 {
        return Err(SimError::InvalidInput("need at least five curve samples".into()));
    }
    let mut pts = Vec::with_capacity(curve.len());
    for c in curve {
        let p = if model.is_euclidean() {
            let tn = c.tangent.norm();
            if tn == 0.0 {
                return Err(SimError::InvalidInput("zero tangent".into()));
            }
            if model.dimension() == 2 {
                lift(&(xy(&c.point) + xy(&c.tangent) * (sign * ell / tn)))
            } else {
                c.point + c.tangent * (sign * ell / tn)
            }
        } else {
            let g = xy(&c.point);
            let v = model.normalize(&g, &xy(&c.tangent)) * sign.signum();
            let pole = exp_map(model, &g, &v, ell, ell / 200.0).map_err(|e| classify(c.t, e))?;
            lift(&pole.endpoint())
        };
        pts.push(p);
    }
    let ts: Vec<f64> = curve.iter().map(|c| c.t).collect();
    let m = pts.len();
    let hs: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    let h = hs[0];
    if hs.iter().any(|x| (x - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return Err(SimError::InvalidInput("curve samples must be uniform in t".into()));
    }
    // closed curves repeat the first sample last
    let at = |i: isize| -> Vector3<f64> {
        if closed {
            let period = (m - 1) as isize;
            pts[i.rem_euclid(period) as usize]
        } else {
            pts[i.clamp(0, m as isize - 1) as usize]
        }
    };
    let mut derivs = Vec::with_capacity(m);
    for i in 0..m as isize {
        let d = if closed || (i >= 2 && i + 2 < m as isize) {
            (at(i - 2) - at(i - 1) * 8.0 + at(i + 1) * 8.0 - at(i + 2)) / (12.0 * h)
        } else if i < 2 {
            // one-sided fourth order
            let j = i as usize;
            let b = j.min(m - 5);
            let f = |k: usize| pts[b + k];
            let x = (j - b) as f64;
            one_sided(&[f(0), f(1), f(2), f(3), f(4)], x) / h
        } else {
            let j = i as usize;
            let b = m - 5;
            let f = |k: usize| pts[b + k];
            let x = (j - b) as f64;
            one_sided(&[f(0), f(1), f(2), f(3), f(4)], x) / h
        };
        derivs.push(d);
    }
    let mut out = TractorCurve::spline(ts, pts, derivs)?;
    if closed {
        out.set_periodic(Vector3::zeros());
    }
    Ok(out)
}

/// Derivative at node `x ∈ {0,…,4}` of the quartic through five unit-spaced values.
fn one_sided(f: &[Vector3<f64>; 5], x: f64) -> Vector3<f64> {
    let w: [f64; 5] = match x as usize {
        0 => [-25.0, 48.0, -36.0, 16.0, -3.0],
        1 => [-3.0, -10.0, 18.0, -6.0, 1.0],
        2 => [1.0, -8.0, 0.0, 8.0, -1.0],
        3 => [-1.0, 6.0, -18.0, 10.0, 3.0],
        _ => [3.0, -16.0, 36.0, -48.0, 25.0],
    };
    (0..5).fold(Vector3::zeros(), |acc, k| acc + f[k] * (w[k] / 12.0))
}

#[cfg(test)]
mod tests;
