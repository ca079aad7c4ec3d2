use super::*;
use crate::spaceform::{classical_dist_kappa, classical_tractrix, long_pole_sphere, solve_from_d0};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

fn classical_trace(t_range: [f64; 2], dt: f64) -> TractrixTrace {
    let model = ManifoldModel::plane();
    let tractor = TractorCurve::line(Vector3::zeros(), Vector3::x(), t_range).with_geodesic(true);
    let g0 = classical_tractrix(2.0, t_range[0]).point;
    let params = SimParams {
        dt,
        ..SimParams::default()
    };
    simulate(&model, &tractor, &lift(&g0), 2.0, &params).unwrap()
}

#[test]
fn euclidean_rhs_examples() {
    let eta = Vector3::new(2.0, 0.0, 0.0);
    let v = euclidean_rhs(&eta, &Vector3::x(), &Vector3::zeros(), 2.0).unwrap();
    assert_eq!(v, Vector3::x());
    let v = euclidean_rhs(&eta, &Vector3::y(), &Vector3::zeros(), 2.0).unwrap();
    assert_eq!(v, Vector3::zeros());
    assert!(matches!(
        euclidean_rhs(&eta, &Vector3::x(), &Vector3::zeros(), 1.0),
        Err(SimError::PoleLengthDrift { .. })
    ));
}

#[test]
fn classical_tractrix_reproduced() {
    let tr = classical_trace([0.0, 10.0], 0.005);
    for r in &tr.records {
        let exact = classical_tractrix(2.0, r.t);
        assert!((xy(&r.gamma) - exact.point).norm() < 1e-6);
        assert!((r.s - exact.s).abs() < 1e-6);
        let (d, k) = classical_dist_kappa(2.0, r.s);
        assert!((r.d.unwrap() - d).abs() < 1e-6, "t={} d={:?} vs {d}", r.t, r.d);
        if r.s > 0.05 {
            let kr = r.kappa.unwrap();
            assert!((kr - k).abs() / k < 1e-4);
        }
    }
    // starting at the cusp is not a flip
    assert_eq!(tr.flip_cusps(), 0);
    assert!(tr.records[0].kappa.is_none());
}

#[test]
fn cusp_crossing_detected_once() {
    let tr = classical_trace([-6.0, 6.0], 0.01);
    let flips: Vec<_> = tr.cusps.iter().filter(|c| c.kind == CuspKind::Flip).collect();
    assert_eq!(flips.len(), 1);
    assert!(flips[0].t.abs() < 1e-6);
    assert_eq!(flips[0].turning_angle, 0.0);
    assert_eq!(tr.records[0].sigma, -1);
    assert_eq!(tr.records.last().unwrap().sigma, 1);
    // s nondecreasing, sigma constant between cusps
    for w in tr.records.windows(2) {
        assert!(w[1].s >= w[0].s);
        if w[0].sigma != w[1].sigma {
            assert!((w[0].t..=w[1].t).contains(&flips[0].t));
        }
    }
}

#[test]
fn pure_pull_has_no_cusp() {
    let tr = classical_trace([1.0, 6.0], 0.01);
    assert!(tr.cusps.is_empty());
    assert!(tr.records.iter().all(|r| r.sigma == 1));
}

#[test]
fn geodesic_aligned_start_stays_straight() {
    let model = ManifoldModel::plane();
    let tractor = TractorCurve::line(Vector3::zeros(), Vector3::x(), [0.0, 5.0]).with_geodesic(true);
    let tr = simulate(
        &model,
        &tractor,
        &Vector3::new(-2.0, 0.0, 0.0),
        2.0,
        &SimParams::default(),
    )
    .unwrap();
    for r in &tr.records {
        assert!(r.gamma.y.abs() < 1e-15);
        assert!(r.kappa.unwrap() < 1e-12);
        assert!(r.d.unwrap() < 1e-9);
    }
}

#[test]
fn circle_of_pole_radius_gives_stationary_cusp() {
    let model = ManifoldModel::plane();
    let ell = 1.5;
    let tractor = TractorCurve::circle(Vector3::zeros(), ell, 1.0, [0.0, 2.0 * PI]);
    let tr = simulate(&model, &tractor, &Vector3::zeros(), ell, &SimParams::default()).unwrap();
    assert_eq!(tr.cusps.len(), 1);
    let c = tr.cusps[0];
    assert_eq!(c.kind, CuspKind::Stationary);
    assert!((c.turning_angle - 2.0 * PI).abs() < 1e-9);
    assert!(tr.records.iter().all(|r| r.gamma.norm() < 1e-12 && r.kappa.is_none()));
}

#[test]
fn general_path_matches_euclidean_path() {
    let model = ManifoldModel::plane();
    let tractor = TractorCurve::circle(Vector3::new(0.5, 0.0, 0.0), 3.0, 0.4, [0.0, 4.0]);
    let g0 = tractor.position(0.0) - Vector3::new(0.0, 2.0, 0.0);
    let fast = simulate(&model, &tractor, &g0, 2.0, &SimParams::default()).unwrap();
    let params = SimParams {
        force_general: true,
        ..SimParams::default()
    };
    let slow = simulate(&model, &tractor, &g0, 2.0, &params).unwrap();
    for (a, b) in fast.records.iter().zip(&slow.records) {
        assert!((a.gamma - b.gamma).norm() < 1e-7);
        assert!((a.s - b.s).abs() < 1e-7);
    }
    // κ estimators agree away from cusps
    for r in slow.regular() {
        let (k, c) = (r.kappa.unwrap(), r.kappa_check.unwrap());
        assert!((k - c).abs() < 1e-3 * k.max(c) + 1e-5, "{k} vs {c}");
    }
}

#[test]
fn pole_length_and_tangency_invariants() {
    let model = ManifoldModel::surface(crate::manifold::Surface::paraboloid(0.3, 4.0));
    let tractor = TractorCurve::line(Vector3::new(-1.0, 0.5, 0.0), Vector3::new(1.0, 0.1, 0.0), [0.0, 2.0]);
    let eta0 = Vector2::new(-1.0, 0.5);
    let v = model.normalize(&eta0, &Vector2::new(0.3, -1.0));
    let g0 = exp_map(&model, &eta0, &v, 0.8, 0.002).unwrap().endpoint();
    let params = SimParams {
        dt: 0.02,
        ..SimParams::default()
    };
    let tr = simulate(&model, &tractor, &lift(&g0), 0.8, &params).unwrap();
    for r in &tr.records {
        let d = model
            .distance(&xy(&r.gamma), &xy(&r.eta), Some(&xy(&r.pole_dir)))
            .unwrap();
        assert!((d - 0.8).abs() < 1e-6, "pole length {d}");
    }
    for w in tr.records.windows(3) {
        let vel = xy(&w[2].gamma) - xy(&w[0].gamma);
        // a chord straddling a cusp says nothing about the tangent
        let near_cusp = tr.cusps.iter().any(|c| (c.t - w[1].t).abs() < 3.0 * params.dt);
        if w[1].kappa.is_some() && !near_cusp {
            let ang = model.angle_between(&xy(&w[1].gamma), &vel, &xy(&w[1].pole_dir)).abs();
            let ang = ang.min(PI - ang);
            // the chord of a central difference deviates by O(dt²) from the tangent
            assert!(ang < 5e-3, "tangency {ang}");
        }
    }
    for r in tr.regular() {
        let (k, c) = (r.kappa.unwrap(), r.kappa_check.unwrap());
        assert!((k - c).abs() < 1e-3 * k.max(c) + 1e-5, "{k} vs {c}");
    }
}

#[test]
fn sphere_short_pole_matches_closed_form() {
    let model = ManifoldModel::space_form(2, 1.0).unwrap();
    let (ell, d0) = (FRAC_PI_4, PI / 8.0);
    let sol = solve_from_d0(1.0, ell, d0).unwrap();
    // tractor point at the end of the pole, a = arccos(cos ℓ / cos d0) ahead of the foot
    let a0 = (ell.cos() / d0.cos()).acos();
    let tractor = TractorCurve::equator(1.0, [a0, a0 + 3.0]);
    let g0 = Vector3::new(FRAC_PI_2 - d0, 0.0, 0.0);
    let params = SimParams {
        dt: 0.01,
        ..SimParams::default()
    };
    let tr = simulate(&model, &tractor, &g0, ell, &params).unwrap();
    for r in &tr.records {
        let d = r.d.unwrap();
        assert!(
            (d - sol.dist_at(r.s)).abs() < 1e-5,
            "s={} d={d} vs {}",
            r.s,
            sol.dist_at(r.s)
        );
        if let Some(k) = r.kappa {
            let kc = sol.kappa_at(r.s).unwrap();
            assert!((k - kc).abs() < 1e-4 * kc);
        }
    }
}

#[test]
fn long_pole_sphere_matches_simulation() {
    let model = ManifoldModel::space_form(2, 1.0).unwrap().with_long_poles();
    let ell = 3.0 * FRAC_PI_4;
    let d0 = 3.0 * PI / 80.0;
    let analytic = long_pole_sphere(ell, d0, 1.4, 140).unwrap();
    let a0 = analytic[0].t;
    let t_end = analytic.last().unwrap().t;
    let tractor = TractorCurve::equator(1.0, [a0, t_end]);
    let params = SimParams {
        dt: (t_end - a0) / 400.0,
        ..SimParams::default()
    };
    let tr = simulate(&model, &tractor, &Vector3::new(FRAC_PI_2 - d0, 0.0, 0.0), ell, &params).unwrap();
    let sol = crate::spaceform::solve_from_d0_long(1.0, ell, d0).unwrap();
    for r in &tr.records {
        assert!((r.d.unwrap() - sol.dist_at(r.s)).abs() < 1e-5);
        assert!((r.pole_length - ell).abs() < 1e-9);
    }
    // tractrix positions along the analytic trace
    let last = tr.records.last().unwrap();
    let an = analytic.last().unwrap();
    assert!((last.s - an.s).abs() < 1e-5, "s {} vs {}", last.s, an.s);
    assert!((xy(&last.gamma) - an.tractrix).norm() < 1e-5);
}

#[test]
fn push_is_time_reversed_pull() {
    let model = ManifoldModel::plane();
    let pull = classical_trace([0.5, 6.0], 0.005);
    let end = pull.records.last().unwrap().gamma;
    let back = TractorCurve::line(Vector3::new(6.5, 0.0, 0.0), -Vector3::x(), [0.5, 6.0]);
    let params = SimParams {
        dt: 0.005,
        ..SimParams::default()
    };
    let push = pushed_simulate(&model, &back, &end, 2.0, &params).unwrap();
    let m = pull.records.len();
    for (i, r) in push.records.iter().enumerate() {
        assert_eq!(r.sigma, -1);
        let q = &pull.records[m - 1 - i];
        assert!((r.gamma - q.gamma).norm() < 1e-6);
    }
    assert!(matches!(
        pushed_simulate(
            &model,
            &TractorCurve::line(Vector3::zeros(), Vector3::x(), [0.5, 2.0]),
            &lift(&classical_tractrix(2.0, 0.5).point),
            2.0,
            &params
        ),
        Err(SimError::NotPushed { .. })
    ));
}

#[test]
fn tractor_from_tractrix_round_trip() {
    let model = ManifoldModel::plane();
    let ell = 1.0;
    let gamma = |t: f64| Vector3::new(t, 0.3 * t.sin(), 0.0);
    let dgamma = |t: f64| Vector3::new(1.0, 0.3 * t.cos(), 0.0);
    let n = 600;
    let samples: Vec<CurveSample> = (0..=n)
        .map(|i| {
            let t = 6.0 * i as f64 / n as f64;
            CurveSample {
                t,
                point: gamma(t),
                tangent: dgamma(t),
            }
        })
        .collect();
    let tractor = tractor_from_tractrix(&model, &samples, ell, 1.0, false).unwrap();
    let tr = simulate(&model, &tractor, &gamma(0.0), ell, &SimParams::default()).unwrap();
    for r in &tr.records {
        assert!((r.gamma - gamma(r.t)).norm() < 1e-5, "t={}", r.t);
    }
    // straight segment: tractor shifted by ℓ
    let line: Vec<CurveSample> = (0..=10)
        .map(|i| CurveSample {
            t: i as f64,
            point: Vector3::new(i as f64, 1.0, 0.0),
            tangent: Vector3::x(),
        })
        .collect();
    let tl = tractor_from_tractrix(&model, &line, 2.0, 1.0, false).unwrap();
    assert!((tl.position(3.5) - Vector3::new(5.5, 1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn record_overflow_reported() {
    let model = ManifoldModel::plane();
    let tractor = TractorCurve::line(Vector3::zeros(), Vector3::x(), [0.0, 10.0]);
    let params = SimParams {
        max_records: 10,
        ..SimParams::default()
    };
    assert!(matches!(
        simulate(&model, &tractor, &Vector3::new(0.0, 2.0, 0.0), 2.0, &params),
        Err(SimError::RecordOverflow { .. })
    ));
}

#[test]
fn sphere_pole_singularity_aborts() {
    let model = ManifoldModel::space_form(2, 1.0).unwrap();
    // tractor runs through the chart pole
    let tractor = TractorCurve::line(Vector3::new(0.6, 0.0, 0.0), Vector3::new(-1.0, 0.0, 0.0), [0.0, 1.0]);
    let r = simulate(
        &model,
        &tractor,
        &Vector3::new(1.1, 0.0, 0.0),
        0.5,
        &SimParams::default(),
    );
    assert!(matches!(
        r,
        Err(SimError::ChartSingular { .. }) | Err(SimError::Geometry { .. }) | Err(SimError::ShootingLost { .. })
    ));
}

#[test]
fn window_keeps_inner_records() {
    let tr = classical_trace([-3.0, 3.0], 0.01);
    let w = tr.window(-1.0, 1.0);
    assert!(w.records.iter().all(|r| (-1.0..=1.0).contains(&r.t)));
    assert_eq!(w.records.len(), 201);
    // the flip at t = 0 stays, nothing else does
    assert_eq!(w.cusps.len(), tr.cusps.len());
    assert!(tr.window(0.5, 1.0).cusps.is_empty());
    assert_eq!(w.ell, tr.ell);
}
