//! Length, curvature and area functionals of a simulated trace.
//!
//! Integrals are taken in the simulation time `t`. With `κ ds = |ω| dt` and
//! `√(1 + κ²J²) ds = √(ṡ² + ω²J²) dt` every integrand stays bounded through
//! cusps, so no special panels are needed near singular points.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::simpson_nonuniform;
use crate::tractrix_sim::{CuspKind, TractrixTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("trace has {0} records, at least 2 are needed")]
    TooShort(usize),
    #[error("Jacobi value missing or not finite at t = {0}")]
    MissingJacobi(f64),
    #[error("non-positive sample {value} at s = {s} inside the fit window")]
    NonPositiveSample { s: f64, value: f64 },
    #[error("fit window holds {0} samples, at least 20 are needed")]
    WindowTooSmall(usize),
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, FunctionalError>;

/// Tractor length from the integral formula next to the measured polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TractorLength {
    pub formula: f64,
    pub polyline: f64,
}

impl TractorLength {
    pub fn relative_error(&self) -> f64 {
        (self.formula - self.polyline).abs() / self.polyline.max(f64::MIN_POSITIVE)
    }
}

/// Aggregate functionals of one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    #[serde(rename = "L_gamma")]
    pub l_gamma: f64,
    #[serde(rename = "L_eta")]
    pub l_eta: f64,
    /// Polyline length of the tractor samples.
    #[serde(rename = "L_eta_polyline")]
    pub l_eta_polyline: f64,
    #[serde(rename = "K_total")]
    pub k_total: f64,
    pub area: f64,
    pub ell: f64,
    pub gap_bound: f64,
    #[serde(skip)]
    pub jacobi_at_ell: Vec<f64>,
}

impl SweepResult {
    pub fn evaluate(trace: &TractrixTrace) -> Result<Self> {
        check(trace)?;
        let len = tractor_length(trace)?;
        let l_gamma = trace.total_arclength();
        Ok(Self {
            l_gamma,
            l_eta: len.formula,
            l_eta_polyline: len.polyline,
            k_total: total_curvature(trace),
            area: sweep_area(trace)?,
            ell: trace.ell,
            gap_bound: trace_gap_bound(trace)?,
            jacobi_at_ell: trace.records.iter().map(|r| r.jacobi_end).collect(),
        })
    }

    /// Flat key/value record.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain float record serializes")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

fn check(trace: &TractrixTrace) -> Result<()> {
    if trace.records.len() < 2 {
        return Err(FunctionalError::TooShort(trace.records.len()));
    }
    match trace
        .records
        .iter()
        .find(|r| !r.jacobi_end.is_finite() || !r.jacobi_integral.is_finite())
    {
        Some(r) => Err(FunctionalError::MissingJacobi(r.t)),
        None => Ok(()),
    }
}

fn integrate<F: Fn(&crate::tractrix_sim::TraceRecord) -> f64>(trace: &TractrixTrace, f: F) -> f64 {
    let t: Vec<f64> = trace.records.iter().map(|r| r.t).collect();
    let y: Vec<f64> = trace.records.iter().map(f).collect();
    simpson_nonuniform(&t, &y)
}

/// `∫ √(1 + κ² J_s(ℓ)²) ds` together with the polyline length of `η`.
pub fn tractor_length(trace: &TractrixTrace) -> Result<TractorLength> {
    check(trace)?;
    let formula = integrate(trace, |r| r.speed.hypot(r.omega * r.jacobi_end));
    let polyline = if trace.dimension == 3 {
        trace.records.windows(2).map(|w| (w[1].eta - w[0].eta).norm()).sum()
    } else {
        let pts: Vec<Vector2<f64>> = trace.records.iter().map(|r| Vector2::new(r.eta.x, r.eta.y)).collect();
        trace.model.polyline_length(&pts)
    };
    Ok(TractorLength { formula, polyline })
}

/// `∫∫ κ(s) J_s(u) du ds`, coverings counted with multiplicity.
pub fn sweep_area(trace: &TractrixTrace) -> Result<f64> {
    check(trace)?;
    Ok(integrate(trace, |r| r.omega.abs() * r.jacobi_integral))
}

/// `∫ κ ds` plus the pole turning angle at flip cusps (zero: the pole line
/// is continuous there). Stationary cusps are inside the `|ω|` integral.
pub fn total_curvature(trace: &TractrixTrace) -> f64 {
    if trace.records.len() < 2 {
        return 0.0;
    }
    let flips: f64 = trace
        .cusps
        .iter()
        .filter(|c| c.kind == CuspKind::Flip)
        .map(|c| c.turning_angle)
        .sum();
    integrate(trace, |r| r.omega.abs()) + flips
}

/// `L (√(1 + m²) − 1)` with `m = I / L` the mean of `κ J_s(ℓ)` over
/// arclength and `I` its integral. Written as `I² / (√(L² + I²) + L)`, which
/// stays finite as `L → 0` (a stationary tractrix gives the bound `I`).
pub fn gap_bound_from_integral(l_gamma: f64, integral: f64) -> f64 {
    let den = l_gamma.hypot(integral) + l_gamma;
    if den <= 0.0 {
        return 0.0;
    }
    integral * integral / den
}

/// Lower bound for `L(η) − L(γ)` from curvature samples on a common
/// increasing arclength grid.
pub fn length_gap_bound(s: &[f64], kappa: &[f64], jacobi_at_ell: &[f64]) -> Result<f64> {
    if s.len() != kappa.len() {
        return Err(FunctionalError::LengthMismatch(s.len(), kappa.len()));
    }
    if s.len() != jacobi_at_ell.len() {
        return Err(FunctionalError::LengthMismatch(s.len(), jacobi_at_ell.len()));
    }
    if s.len() < 2 {
        return Ok(0.0);
    }
    let l = s[s.len() - 1] - s[0];
    let kj: Vec<f64> = kappa.iter().zip(jacobi_at_ell).map(|(k, j)| (k * j).abs()).collect();
    Ok(gap_bound_from_integral(l, simpson_nonuniform(s, &kj)))
}

/// [`length_gap_bound`] evaluated in time, valid through cusps.
pub fn trace_gap_bound(trace: &TractrixTrace) -> Result<f64> {
    check(trace)?;
    let i = integrate(trace, |r| (r.omega * r.jacobi_end).abs());
    Ok(gap_bound_from_integral(trace.total_arclength(), i))
}

/// Least-squares fit of `ln f(s)` over the last half of the `s` range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadingExponent {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
    /// `R² > 0.999`
    pub confident: bool,
}

pub const LE_MIN_SAMPLES: usize = 20;
pub const LE_R2_GATE: f64 = 0.999;

pub fn leading_exponent_estimate(s: &[f64], f: &[f64]) -> Result<LeadingExponent> {
    if s.len() != f.len() {
        return Err(FunctionalError::LengthMismatch(s.len(), f.len()));
    }
    let (lo, hi) = s
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let cut = lo + 0.5 * (hi - lo);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&x, &y) in s.iter().zip(f) {
        if x < cut {
            continue;
        }
        if !(y > 0.0) {
            return Err(FunctionalError::NonPositiveSample { s: x, value: y });
        }
        xs.push(x);
        ys.push(y.ln());
    }
    let n = xs.len();
    if n < LE_MIN_SAMPLES {
        return Err(FunctionalError::WindowTooSmall(n));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // a series constant up to rounding is fitted exactly
    let r_squared = if syy <= 1e-24 * nf * (1.0 + my * my) {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(LeadingExponent {
        slope,
        intercept,
        r_squared,
        samples: n,
        confident: r_squared > LE_R2_GATE,
    })
}

/// Leading exponent of the distance `d(s)` between tractrix and a geodesic
/// tractor, over regular records.
pub fn trace_leading_exponent(trace: &TractrixTrace) -> Result<LeadingExponent> {
    let (s, d): (Vec<f64>, Vec<f64>) = trace
        .records
        .iter()
        .filter(|r| r.kappa.is_some())
        .filter_map(|r| r.d.map(|d| (r.s, d)))
        .unzip();
    leading_exponent_estimate(&s, &d)
}
