//! Repeated tractor/tractrix processes that shorten curves towards geodesics.
//!
//! Every round the current curve is a pole geodesic `A → p` of length `ℓ`
//! followed by a tractor `p → B`. Pulling the tractrix from `A` along the
//! tractor ends at a point `q` whose pole reaches `B`, so the new curve is
//! the tractrix followed by the pole `q → B`. The self-repeated process then
//! reverses the curve; the loop process shifts its start by the deck
//! translation instead.

use std::io;
use std::path::Path;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifold::{exp_map, geodesic_shoot, GeometryError, ManifoldModel, Point, ShootOptions};
use crate::tractrix_sim::{simulate, SimError, SimParams, TractorCurve};

#[derive(Debug, Error)]
pub enum ShorteningError {
    #[error("endpoint distance {distance} is shorter than the pole {ell}")]
    PoleTooLong { distance: f64, ell: f64 },
    #[error("pole {ell} exceeds the injectivity bound {bound}")]
    AboveInjectivity { ell: f64, bound: f64 },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("iterate moved by {step}, more than the injectivity bound {bound}")]
    HomotopyJump { step: f64, bound: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, ShorteningError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SelfRepeated,
    LoopRepeated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Geodesic residual below `residual_tol`.
    Residual,
    /// Length decrease per round below `length_tol`, or a round that did
    /// not shorten (that round is discarded).
    LengthStalled,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShorteningOptions {
    pub residual_tol: f64,
    pub length_tol: f64,
    pub max_iter: usize,
    /// Points per tractor polyline.
    pub samples: usize,
    /// Simulation steps per polyline sample.
    pub substeps: usize,
    /// RK4 steps along each pole on non-Euclidean charts.
    pub pole_steps: usize,
}

impl Default for ShorteningOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-4,
            length_tol: 1e-10,
            max_iter: 500,
            samples: 400,
            substeps: 2,
            pole_steps: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub curve: Vec<Point>,
    pub length: f64,
    /// Largest geodesic curvature `‖D_γ′γ′‖` over interior samples.
    pub residual: f64,
    /// Chart Hausdorff distance to the previous iterate.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShorteningRun {
    pub mode: Mode,
    pub endpoints: Option<[Point; 2]>,
    pub initial_curve: Vec<Point>,
    pub ell: f64,
    /// Chart translation from the start to the end of every loop lift.
    pub deck: Option<Vector2<f64>>,
    pub iterates: Vec<Iterate>,
    pub stop_reason: StopReason,
}

impl ShorteningRun {
    pub fn last(&self) -> &Iterate {
        self.iterates.last().expect("a run holds the initial curve")
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.iterates.iter().map(|i| i.length).collect()
    }

    /// `iter,length,residual`
    pub fn history_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["iter", "length", "residual"]).expect("in-memory write");
        for (i, it) in self.iterates.iter().enumerate() {
            w.write_record(&[i.to_string(), it.length.to_string(), it.residual.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }

    /// Writes `history.csv` and one `iter_<n>.csv` per iterate.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("history.csv"), self.history_csv())?;
        for (i, it) in self.iterates.iter().enumerate() {
            std::fs::write(dir.join(format!("iter_{i}.csv")), curve_csv(&it.curve))?;
        }
        Ok(())
    }
}

/// `u,v` per point.
pub fn curve_csv(curve: &[Point]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["u", "v"]).expect("in-memory write");
    for p in curve {
        w.write_record(&[p.x.to_string(), p.y.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

/// Half the length of the shortest closed geodesic given by a chart period,
/// `π/√K` on spheres, unbounded otherwise.
pub fn injectivity_bound(model: &ManifoldModel) -> f64 {
    if let Some(k) = model.constant_curvature().filter(|k| *k > 0.0) {
        if matches!(model, ManifoldModel::SpaceForm(_)) {
            return std::f64::consts::PI / k.sqrt();
        }
    }
    let origin = Vector2::zeros();
    let mut bound = f64::INFINITY;
    for (i, p) in model.periods().iter().enumerate() {
        if let Some(p) = p {
            let mut e = Vector2::zeros();
            e[i] = *p;
            bound = bound.min(0.5 * model.norm(&origin, &e));
        }
    }
    bound
}

/// Uniform resampling by chart arclength; repeated points are dropped.
pub fn resample(curve: &[Point], n: usize) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::with_capacity(curve.len());
    for p in curve {
        if pts.last().is_none_or(|q: &Point| (p - q).norm() > 1e-12) {
            pts.push(*p);
        }
    }
    if pts.len() < 2 || n < 2 {
        return pts;
    }
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let target = total * i as f64 / (n - 1) as f64;
        while k + 2 < cum.len() && cum[k + 1] < target {
            k += 1;
        }
        let h = cum[k + 1] - cum[k];
        let tau = ((target - cum[k]) / h).clamp(0.0, 1.0);
        out.push(pts[k] + (pts[k + 1] - pts[k]) * tau);
    }
    *out.last_mut().unwrap() = *pts.last().unwrap();
    out[0] = pts[0];
    out
}

/// Largest geodesic curvature over interior vertices, from three-point
/// differences in chart arclength.
pub fn geodesic_residual(model: &ManifoldModel, curve: &[Point]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for w in curve.windows(3) {
        let (a, b) = (w[1] - w[0], w[2] - w[1]);
        let (h1, h2) = (a.norm(), b.norm());
        if h1 == 0.0 || h2 == 0.0 {
            continue;
        }
        let den = h1 * h2 * (h1 + h2);
        let d1 = (b * (h1 * h1) + a * (h2 * h2)) / den;
        let d2 = (b * h1 - a * h2) * (2.0 / den);
        let x = w[1];
        let acc = d2 + model.christoffel_at(&x)?.contract(&d1, &d1);
        let speed2 = model.inner(&x, &d1, &d1);
        let normal = acc - d1 * (model.inner(&x, &acc, &d1) / speed2);
        worst = worst.max(model.norm(&x, &normal) / speed2);
    }
    Ok(worst)
}

fn lift3(p: &Point) -> Vector3<f64> {
    Vector3::new(p.x, p.y, 0.0)
}

fn chord_guess(model: &ManifoldModel, a: &Point, b: &Point) -> Vector2<f64> {
    model.normalize(a, &(b - a))
}

fn distance(model: &ManifoldModel, a: &Point, b: &Point) -> Result<f64> {
    let g = chord_guess(model, a, b);
    Ok(model.distance(a, b, Some(&g))?)
}

/// Pole geodesic `a → p` of length `ell`, sampled.
fn pole_samples(model: &ManifoldModel, a: &Point, p: &Point, ell: f64, n: usize) -> Result<Vec<Point>> {
    let step = ell / n as f64;
    let opts = ShootOptions {
        step,
        ..ShootOptions::default()
    };
    let shot = geodesic_shoot(model, a, p, ell, &chord_guess(model, a, p), &opts)?;
    let geo = exp_map(model, a, &shot.direction, ell, step)?;
    let mut pts: Vec<Point> = geo.samples.iter().map(|s| s.point).collect();
    *pts.last_mut().unwrap() = *p;
    Ok(pts)
}

/// First point along `curve` at geodesic distance `ell` from its start,
/// with the index of the next vertex.
fn splice_point(model: &ManifoldModel, curve: &[Point], ell: f64) -> Result<(Point, usize)> {
    let a = curve[0];
    let mut prev = 0.0;
    for k in 1..curve.len() {
        let d = distance(model, &a, &curve[k])?;
        if d >= ell {
            let (x0, x1) = (curve[k - 1], curve[k]);
            let (mut lo, mut hi) = (0.0, 1.0);
            let (mut flo, _) = (prev - ell, d - ell);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let f = distance(model, &a, &(x0 + (x1 - x0) * mid))? - ell;
                if (f < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = f;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 {
                    break;
                }
            }
            let tau = 0.5 * (lo + hi);
            return Ok((x0 + (x1 - x0) * tau, k));
        }
        prev = d;
    }
    Err(ShorteningError::InvalidCurve(format!(
        "no point of the curve is at distance {ell} from its start"
    )))
}

/// Pulls the tractrix from `a` along the polyline `tractor`; returns the
/// tractrix polyline from `a` to its end point.
fn pull(model: &ManifoldModel, a: &Point, tractor: &[Point], ell: f64, opts: &ShorteningOptions) -> Result<Vec<Point>> {
    let pts: Vec<Vector3<f64>> = tractor.iter().map(lift3).collect();
    let curve = TractorCurve::polyline(&pts, false)?;
    let span = curve.t_range[1] - curve.t_range[0];
    let params = SimParams {
        dt: span / (opts.samples * opts.substeps) as f64,
        pole_step: Some(ell / opts.pole_steps.max(4) as f64),
        distances: false,
        ..SimParams::default()
    };
    let trace = simulate(model, &curve, &lift3(a), ell, &params)?;
    let gamma: Vec<Point> = trace
        .records
        .iter()
        .map(|r| Vector2::new(r.gamma.x, r.gamma.y))
        .collect();
    Ok(resample(&gamma, opts.samples))
}

fn hausdorff(a: &[Point], b: &[Point], shifts: &[Vector2<f64>]) -> f64 {
    let one_way = |x: &[Point], y: &[Point]| {
        x.iter()
            .map(|p| {
                shifts
                    .iter()
                    .flat_map(|s| y.iter().map(move |q| (p - (q + s)).norm()))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// State of one round: pole `a → p` and tractor `p → b`.
struct Splice {
    a: Point,
    pole: Vec<Point>,
    tractor: Vec<Point>,
}

impl Splice {
    fn curve(&self) -> Vec<Point> {
        let mut c = self.pole.clone();
        c.extend_from_slice(&self.tractor[1..]);
        c
    }

    fn measure(&self, model: &ManifoldModel, ell: f64) -> Result<(Vec<Point>, f64, f64)> {
        let curve = self.curve();
        let length = ell + model.polyline_length(&self.tractor);
        let residual = geodesic_residual(model, &curve)?;
        Ok((curve, length, residual))
    }
}

fn first_splice(model: &ManifoldModel, curve: &[Point], ell: f64, opts: &ShorteningOptions) -> Result<Splice> {
    let (p, next) = splice_point(model, curve, ell)?;
    let a = curve[0];
    let mut tractor = vec![p];
    tractor.extend(curve[next..].iter().copied().filter(|x| (x - p).norm() > 1e-9));
    if tractor.len() < 2 {
        return Err(ShorteningError::InvalidCurve("nothing left to pull along".into()));
    }
    let pole_n = (opts.samples / 10).max(8);
    Ok(Splice {
        a,
        pole: pole_samples(model, &a, &p, ell, pole_n)?,
        tractor: resample(&tractor, opts.samples),
    })
}

fn validate(curve: &[Point], ell: f64) -> Result<()> {
    if curve.len() < 2 {
        return Err(ShorteningError::InvalidCurve("curve needs two points".into()));
    }
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(ShorteningError::InvalidCurve(format!("pole length {ell}")));
    }
    if curve.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(ShorteningError::InvalidCurve("non-finite point".into()));
    }
    Ok(())
}

/// Runs the rounds; `next` turns the tractrix of a round into the next
/// splice and the stored iterate curve.
fn run<F>(
    model: &ManifoldModel,
    initial: &[Point],
    ell: f64,
    opts: &ShorteningOptions,
    shifts: &[Vector2<f64>],
    mut next: F,
) -> Result<(Vec<Iterate>, StopReason)>
where
    F: FnMut(&Splice, Vec<Point>, usize) -> Result<(Splice, Vec<Point>)>,
{
    let bound = injectivity_bound(model);
    let mut iterates = vec![Iterate {
        curve: initial.to_vec(),
        length: model.polyline_length(initial),
        residual: geodesic_residual(model, initial)?,
        step: 0.0,
    }];
    if iterates[0].residual < opts.residual_tol {
        return Ok((iterates, StopReason::Residual));
    }
    let mut splice = first_splice(model, initial, ell, opts)?;
    for round in 1..=opts.max_iter {
        let gamma = pull(model, &splice.a, &splice.tractor, ell, opts)?;
        let (new_splice, oriented) = next(&splice, gamma, round)?;
        let (_, length, residual) = new_splice.measure(model, ell)?;
        let prev = iterates.last().unwrap();
        if length > prev.length + 1e-9 {
            return Ok((iterates, StopReason::LengthStalled));
        }
        let step = hausdorff(&oriented, &prev.curve, shifts);
        if step > bound {
            return Err(ShorteningError::HomotopyJump { step, bound });
        }
        let decrease = prev.length - length;
        iterates.push(Iterate {
            curve: oriented,
            length,
            residual,
            step,
        });
        if residual < opts.residual_tol {
            return Ok((iterates, StopReason::Residual));
        }
        if decrease < opts.length_tol {
            return Ok((iterates, StopReason::LengthStalled));
        }
        splice = new_splice;
    }
    Ok((iterates, StopReason::MaxIter))
}

/// Shortens a curve from `p` to `q` with fixed endpoints.
pub fn self_repeated(
    model: &ManifoldModel,
    p: &Point,
    q: &Point,
    initial: &[Point],
    ell: f64,
    opts: &ShorteningOptions,
) -> Result<ShorteningRun> {
    validate(initial, ell)?;
    let ends_ok = (initial[0] - p).norm() < 1e-12 && (initial[initial.len() - 1] - q).norm() < 1e-12;
    if !ends_ok {
        return Err(ShorteningError::InvalidCurve("curve does not connect P to Q".into()));
    }
    let distance = distance(model, p, q)?;
    if distance < ell {
        return Err(ShorteningError::PoleTooLong { distance, ell });
    }
    let pole_n = (opts.samples / 10).max(8);
    let (iterates, stop_reason) = run(model, initial, ell, opts, &[Vector2::zeros()], |old, gamma, round| {
        // the reversed curve starts at the far end with the final pole
        let b = *old.tractor.last().unwrap();
        let end = *gamma.last().unwrap();
        let mut tractor = gamma;
        tractor.reverse();
        // endpoints stay fixed exactly
        *tractor.last_mut().unwrap() = old.a;
        let splice = Splice {
            a: b,
            pole: pole_samples(model, &b, &end, ell, pole_n)?,
            tractor,
        };
        let mut oriented = splice.curve();
        if round % 2 == 1 {
            oriented.reverse();
        }
        Ok((splice, oriented))
    })?;
    Ok(ShorteningRun {
        mode: Mode::SelfRepeated,
        endpoints: Some([*p, *q]),
        initial_curve: initial.to_vec(),
        ell,
        deck: None,
        iterates,
        stop_reason,
    })
}

/// Shortens a closed curve in its free homotopy class. `lift` is a chart
/// polyline whose end is its start moved by a deck translation (a
/// combination of the chart periods, zero on charts without identifications).
pub fn loop_repeated(
    model: &ManifoldModel,
    lift: &[Point],
    ell: f64,
    opts: &ShorteningOptions,
) -> Result<ShorteningRun> {
    validate(lift, ell)?;
    let deck = lift[lift.len() - 1] - lift[0];
    let periods = model.periods();
    for i in 0..2 {
        let ok = match periods[i] {
            Some(p) => ((deck[i] / p).round() * p - deck[i]).abs() < 1e-9,
            None => deck[i].abs() < 1e-9,
        };
        if !ok {
            return Err(ShorteningError::InvalidCurve("loop is not closed in the chart".into()));
        }
    }
    let bound = injectivity_bound(model);
    if ell >= bound {
        return Err(ShorteningError::AboveInjectivity { ell, bound });
    }
    let pole_n = (opts.samples / 10).max(8);
    let shifts = [Vector2::zeros(), deck, -deck];
    let (iterates, stop_reason) = run(model, lift, ell, opts, &shifts, |old, gamma, _| {
        // the final pole runs from the tractrix end to the translated start
        let start = *gamma.last().unwrap() - deck;
        let splice = Splice {
            a: start,
            pole: pole_samples(model, &start, &old.a, ell, pole_n)?,
            tractor: gamma,
        };
        let curve = splice.curve();
        Ok((splice, curve))
    })?;
    Ok(ShorteningRun {
        mode: Mode::LoopRepeated,
        endpoints: None,
        initial_curve: lift.to_vec(),
        ell,
        deck: Some(deck),
        iterates,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{ChartRect, Surface};
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn sine_curve(p: Point, q: Point, amp: f64, waves: f64, n: usize) -> Vec<Point> {
        let d = q - p;
        let nrm = Vector2::new(-d.y, d.x).normalize();
        let mut c: Vec<Point> = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                p + d * t + nrm * (amp * (waves * PI * t).sin())
            })
            .collect();
        c[n] = q;
        c
    }

    fn assert_monotone(run: &ShorteningRun) {
        for w in run.iterates.windows(2) {
            assert!(w[1].length <= w[0].length + 1e-9, "{} > {}", w[1].length, w[0].length);
        }
    }

    #[test]
    fn resample_is_uniform() {
        let c = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 2.0),
        ];
        let r = resample(&c, 7);
        assert_eq!(r.len(), 7);
        assert_eq!(r[6], Vector2::new(1.0, 2.0));
        for w in r.windows(2) {
            assert!(((w[1] - w[0]).norm() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_of_circle_is_its_curvature() {
        let m = ManifoldModel::plane();
        let c: Vec<Point> = (0..100)
            .map(|i| 2.0 * Vector2::new((i as f64 * 0.05).cos(), (i as f64 * 0.05).sin()))
            .collect();
        assert!((geodesic_residual(&m, &c).unwrap() - 0.5).abs() < 1e-3);
        // latitude at colatitude θ has geodesic curvature cot θ
        let s = ManifoldModel::space_form(2, 1.0).unwrap();
        let lat: Vec<Point> = (0..200).map(|i| Vector2::new(1.0, i as f64 * 0.01)).collect();
        let r = geodesic_residual(&s, &lat).unwrap();
        assert!((r - 1f64.cos() / 1f64.sin()).abs() < 1e-4, "{r}");
        let eq: Vec<Point> = (0..200).map(|i| Vector2::new(FRAC_PI_2, i as f64 * 0.01)).collect();
        assert!(geodesic_residual(&s, &eq).unwrap() < 1e-9);
    }

    #[test]
    fn flat_chord() {
        let m = ManifoldModel::plane();
        let (p, q) = (Vector2::new(0.0, 0.0), Vector2::new(10.0, 0.0));
        let init = sine_curve(p, q, 0.8, 3.0, 300);
        let run = self_repeated(&m, &p, &q, &init, 3.0, &ShorteningOptions::default()).unwrap();
        assert_monotone(&run);
        let last = run.last();
        assert!(
            (last.length - 10.0).abs() < 1e-4,
            "{} {:?}",
            last.length,
            run.stop_reason
        );
        for it in &run.iterates {
            assert_eq!(it.curve[0], p);
            assert_eq!(*it.curve.last().unwrap(), q);
        }
    }

    #[test]
    fn sphere_quarter_equator() {
        let m = ManifoldModel::space_form(2, 1.0).unwrap();
        let (p, q) = (Vector2::new(FRAC_PI_2, 0.0), Vector2::new(FRAC_PI_2, FRAC_PI_2));
        let init: Vec<Point> = (0..=200)
            .map(|i| {
                let t = i as f64 / 200.0;
                Vector2::new(FRAC_PI_2 - 0.4 * (PI * t).sin(), FRAC_PI_2 * t)
            })
            .collect();
        let run = self_repeated(&m, &p, &q, &init, 0.8, &ShorteningOptions::default()).unwrap();
        assert_monotone(&run);
        assert!((run.last().length - FRAC_PI_2).abs() < 1e-3, "{}", run.last().length);
    }

    #[test]
    fn pole_longer_than_distance_rejected() {
        let m = ManifoldModel::plane();
        let (p, q) = (Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0));
        let init = sine_curve(p, q, 0.1, 1.0, 20);
        assert!(matches!(
            self_repeated(&m, &p, &q, &init, 2.0, &ShorteningOptions::default()),
            Err(ShorteningError::PoleTooLong { .. })
        ));
    }

    #[test]
    fn flat_torus_loop() {
        let m = ManifoldModel::surface(Surface::flat_torus(4.0));
        let lift: Vec<Point> = (0..=300)
            .map(|i| {
                let t = i as f64 / 300.0;
                Vector2::new(4.0 * t, 1.0 + 0.3 * (TAU * t).sin() + 0.1 * (3.0 * TAU * t).sin())
            })
            .collect();
        let run = loop_repeated(&m, &lift, 1.5, &ShorteningOptions::default()).unwrap();
        assert_monotone(&run);
        assert!((run.last().length - 4.0).abs() < 1e-3, "{}", run.last().length);
        let deck = run.deck.unwrap();
        for it in &run.iterates {
            let d = it.curve.last().unwrap() - it.curve[0];
            assert!((d - deck).norm() < 1e-9);
        }
    }

    #[test]
    fn cylinder_loop_becomes_horizontal_circle() {
        let r = 0.8;
        let m = ManifoldModel::surface(Surface::cylinder(r));
        let lift: Vec<Point> = (0..=300)
            .map(|i| {
                let t = i as f64 / 300.0;
                Vector2::new(TAU * t, 0.4 * (TAU * t).sin())
            })
            .collect();
        let run = loop_repeated(&m, &lift, 1.0, &ShorteningOptions::default()).unwrap();
        assert_monotone(&run);
        let last = run.last();
        assert!((last.length - TAU * r).abs() < 1e-3, "{}", last.length);
        let (lo, hi) = last
            .curve
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.y), b.max(p.y)));
        assert!(hi - lo < 1e-2);
    }

    #[test]
    fn geodesic_loop_is_returned_unchanged() {
        let m = ManifoldModel::surface(Surface::flat_torus(4.0));
        let lift: Vec<Point> = (0..=50).map(|i| Vector2::new(0.08 * i as f64, 1.0)).collect();
        let run = loop_repeated(&m, &lift, 1.0, &ShorteningOptions::default()).unwrap();
        assert_eq!(run.iterates.len(), 1);
        assert_eq!(run.stop_reason, StopReason::Residual);
        assert_eq!(run.last().curve, lift);
    }

    #[test]
    fn open_loop_and_long_pole_rejected() {
        let m = ManifoldModel::surface(Surface::flat_torus(4.0));
        let lift: Vec<Point> = (0..=50).map(|i| Vector2::new(0.07 * i as f64, 1.0)).collect();
        assert!(matches!(
            loop_repeated(&m, &lift, 1.0, &ShorteningOptions::default()),
            Err(ShorteningError::InvalidCurve(_))
        ));
        let lift: Vec<Point> = (0..=50).map(|i| Vector2::new(0.08 * i as f64, 1.0)).collect();
        assert!(matches!(
            loop_repeated(&m, &lift, 2.5, &ShorteningOptions::default()),
            Err(ShorteningError::AboveInjectivity { .. })
        ));
    }

    #[test]
    fn hilly_basin_points() {
        let m = ManifoldModel::surface(Surface::hilly(0.3, 1.0, ChartRect::new([-4.0, 4.0], [-4.0, 4.0])));
        let (p, q) = (Vector2::new(-2.0, -1.0), Vector2::new(2.0, 1.0));
        let init = sine_curve(p, q, 0.5, 2.0, 200);
        let run = self_repeated(
            &m,
            &p,
            &q,
            &init,
            1.5,
            &ShorteningOptions {
                residual_tol: 1e-3,
                ..ShorteningOptions::default()
            },
        )
        .unwrap();
        assert_monotone(&run);
        assert!(
            run.last().residual < 1e-3,
            "{:?} {}",
            run.stop_reason,
            run.last().residual
        );
        assert!(run.last().length <= run.iterates[0].length);
    }

    #[test]
    fn history_export() {
        let m = ManifoldModel::plane();
        let (p, q) = (Vector2::new(0.0, 0.0), Vector2::new(5.0, 0.0));
        let init = sine_curve(p, q, 0.3, 1.0, 100);
        let opts = ShorteningOptions {
            max_iter: 3,
            ..ShorteningOptions::default()
        };
        let run = self_repeated(&m, &p, &q, &init, 2.0, &opts).unwrap();
        assert_eq!(run.stop_reason, StopReason::MaxIter);
        let csv = run.history_csv();
        assert!(csv.starts_with("iter,length,residual\n"));
        assert_eq!(csv.lines().count(), run.iterates.len() + 1);
        let dir = std::env::temp_dir().join(format!("shorten_{}", std::process::id()));
        run.write_to(&dir).unwrap();
        assert!(dir.join("iter_3.csv").exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
