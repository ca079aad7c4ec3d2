//! Plot-ready text output. Floats use Rust's shortest round-trip decimal
//! form, which never depends on the locale.

use serde::Serialize;

use crate::functionals::LeadingExponent;
use crate::spaceform::{leading_exponent, SpaceFormSolution};
use crate::tractrix_sim::{Cusp, TractrixTrace};

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of ascii fields")
}

fn cell(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map(|v| v.to_string()).unwrap_or_default()
}

/// `t,s,gamma_1,gamma_2[,gamma_3],eta_1,eta_2[,eta_3],d,kappa,sigma`; masked
/// values are empty cells.
pub fn trace_csv(trace: &TractrixTrace) -> String {
    let dim = trace.dimension;
    let mut header = vec!["t".to_string(), "s".to_string()];
    for name in ["gamma", "eta"] {
        header.extend((1..=dim).map(|i| format!("{name}_{i}")));
    }
    header.extend(["d", "kappa", "sigma"].map(String::from));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for r in &trace.records {
        let mut row = vec![r.t.to_string(), r.s.to_string()];
        row.extend((0..dim).map(|i| r.gamma[i].to_string()));
        row.extend((0..dim).map(|i| r.eta[i].to_string()));
        row.push(cell(r.d));
        row.push(cell(r.kappa));
        row.push(r.sigma.to_string());
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

#[derive(Serialize)]
struct CuspFile<'a> {
    flips: usize,
    stationary: usize,
    conjugate_point: bool,
    cusps: &'a [Cusp],
}

/// Cusp list as TOML.
pub fn cusps_toml(trace: &TractrixTrace) -> String {
    let flips = trace.flip_cusps();
    let file = CuspFile {
        flips,
        stationary: trace.cusps.len() - flips,
        conjugate_point: trace.conjugate_point,
        cusps: &trace.cusps,
    };
    toml::to_string(&file).expect("cusp records serialize")
}

/// `s,d,kappa` on `samples` equal steps of `[0, s_max]`.
pub fn analytic_csv(sol: &SpaceFormSolution, s_max: f64, samples: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "d", "kappa"]).expect("in-memory write");
    let n = samples.max(2);
    for i in 0..n {
        let s = s_max * i as f64 / (n - 1) as f64;
        let d = sol.dist_at(s);
        let k = sol.kappa_at(s).ok();
        w.write_record(&[s.to_string(), cell(Some(d)), cell(k)])
            .expect("in-memory write");
    }
    finish(w)
}

#[derive(Serialize)]
struct LeFile {
    curvature: f64,
    ell: f64,
    leading_exponent: f64,
    d0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_d: Option<f64>,
    c_kappa: f64,
}

/// Leading exponent and integration constants as TOML.
pub fn le_text(sol: &SpaceFormSolution) -> String {
    toml::to_string(&LeFile {
        curvature: sol.curvature,
        ell: sol.ell,
        leading_exponent: leading_exponent(sol.curvature, sol.ell),
        d0: sol.d0,
        c_d: sol.c_d,
        c_kappa: sol.c_kappa,
    })
    .expect("plain floats serialize")
}

/// Fitted leading exponent as TOML.
pub fn le_fit_toml(fit: &LeadingExponent) -> String {
    toml::to_string(fit).expect("plain fit record serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldModel;
    use crate::spaceform::{classical_tractrix, solve_from_d0};
    use crate::tractrix_sim::{simulate, SimParams, TractorCurve};
    use nalgebra::Vector3;

    #[test]
    fn trace_header_and_masks() {
        let tractor = TractorCurve::line(Vector3::zeros(), Vector3::x(), [0.0, 1.0]).with_geodesic(true);
        let g = classical_tractrix(2.0, 0.0).point;
        let params = SimParams {
            dt: 0.1,
            ..SimParams::default()
        };
        let tr = simulate(
            &ManifoldModel::plane(),
            &tractor,
            &Vector3::new(g.x, g.y, 0.0),
            2.0,
            &params,
        )
        .unwrap();
        let text = trace_csv(&tr);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,s,gamma_1,gamma_2,eta_1,eta_2,d,kappa,sigma"));
        // the cusp start has no curvature
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[7], "");
        assert_eq!(first[0], "0");
        assert_eq!(text.lines().count(), tr.records.len() + 1);
    }

    #[test]
    fn three_dimensional_header() {
        let tractor = TractorCurve::helix(1.0, 1.0, 0.2, [0.0, 0.5]);
        let g0 = tractor.position(0.0) - Vector3::new(0.5, 0.0, 0.0);
        let tr = simulate(&ManifoldModel::euclidean3(), &tractor, &g0, 0.5, &SimParams::default()).unwrap();
        assert!(trace_csv(&tr).starts_with("t,s,gamma_1,gamma_2,gamma_3,eta_1,eta_2,eta_3,d,kappa,sigma\n"));
    }

    #[test]
    fn analytic_flat_columns() {
        let sol = solve_from_d0(0.0, 2.0, 2.0).unwrap();
        let text = analytic_csv(&sol, 4.0, 3);
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
            .collect();
        assert_eq!(rows[1][0], 2.0);
        assert!((rows[1][1] - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        // κ(0) is infinite at the cusp start and left empty
        assert!(rows[0][2].is_nan());
        let le = le_text(&sol);
        assert!(le.contains("leading_exponent = -0.5"), "{le}");
    }

    #[test]
    fn floats_round_trip() {
        let x = 0.1 + 0.2;
        assert_eq!(cell(Some(x)).parse::<f64>().unwrap(), x);
        assert_eq!(cell(Some(f64::INFINITY)), "");
    }
}
