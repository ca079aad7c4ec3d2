use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn tractrix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tractrix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = tractrix(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a CSV file as optional floats, keyed by the header.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().ok()).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(&format!("{key} ="))).unwrap();
    line.split('=').nth(1).unwrap().trim().parse().unwrap()
}

#[test]
fn classical_simulation_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("classical.toml");
    run_ok(&["simulate", "--config", s(&cfg), "--out", s(dir.path())]);
    let (h, rows) = table(&dir.path().join("trace.csv"));
    let (is, id) = (col(&h, "s"), col(&h, "d"));
    assert!(rows.len() > 1000);
    for r in &rows {
        let (s, d) = (r[is].unwrap(), r[id].unwrap());
        assert!((d - 2.0 * (-s / 2.0).exp()).abs() < 1e-6);
    }
    let sweep = fs::read_to_string(dir.path().join("sweep.txt")).unwrap();
    assert!(field(&sweep, "K_total") > 1.5);
    let cusps = fs::read_to_string(dir.path().join("cusps.txt")).unwrap();
    assert!(cusps.contains("flips = 0"), "{cusps}");
    let le = fs::read_to_string(dir.path().join("le_fit.txt")).unwrap();
    assert!((field(&le, "slope") + 0.5).abs() < 5e-3, "{le}");
}

#[test]
fn hilly_matches_golden_trace() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "simulate",
        "--config",
        s(&scenarios().join("hilly.toml")),
        "--out",
        s(dir.path()),
    ]);
    let (h, rows) = table(&dir.path().join("trace.csv"));
    let (hg, golden) = table(&scenarios().join("golden/hilly_trace.csv"));
    assert_eq!(h, hg);
    assert_eq!(rows.len(), golden.len());
    for (r, g) in rows.iter().zip(&golden) {
        for (a, b) in r.iter().zip(g) {
            match (a, b) {
                (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{a} vs {b}"),
                (None, None) => {}
                _ => panic!("masked cells differ"),
            }
        }
    }
}

#[test]
fn helix_has_one_persistent_cusp() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "simulate",
        "--config",
        s(&scenarios().join("helix3d.toml")),
        "--out",
        s(dir.path()),
    ]);
    let cusps = fs::read_to_string(dir.path().join("cusps.txt")).unwrap();
    assert!(cusps.contains("flips = 1\n"), "{cusps}");
    let (h, rows) = table(&dir.path().join("trace.csv"));
    assert!(h.contains(&"gamma_3".to_string()));
    // pulled after the flip until the end
    let sig = col(&h, "sigma");
    assert_eq!(rows.last().unwrap()[sig], Some(1.0));
}

#[test]
fn simulate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = scenarios().join("paraboloid.toml");
    for d in [&a, &b] {
        run_ok(&["simulate", "--config", s(&cfg), "--out", s(d.path())]);
    }
    for f in ["trace.csv", "sweep.txt", "cusps.txt"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

const SEEDED: &str = r#"
name = "seeded"
ell = 0.5

[model]
kind = "space_form"
curvature = 1.0

[tractor]
curve = "great_circle"
t_range = [0.0, 1.0]

[start]
trailing_angle = 0.3

[sim]
dt = 0.02

[comparison]
random_starts = 2
"#;

#[test]
fn seeded_verify_is_reproducible() {
    let work = tempfile::tempdir().unwrap();
    let cfg = work.path().join("seeded.toml");
    fs::write(&cfg, SEEDED).unwrap();
    let report = |seed: &str, name: &str| {
        let out = work.path().join(name);
        run_ok(&["verify", "--config", s(&cfg), "--out", s(&out), "--seed", seed]);
        fs::read_to_string(out.join("report.toml")).unwrap()
    };
    let (a, b, c) = (report("11", "a"), report("11", "b"), report("12", "c"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.contains("start1_rauch_area_upper_curvature"));
}

#[test]
fn analytic_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "analytic",
        "--curvature",
        "-1",
        "--ell",
        "1",
        "--d0",
        "0.5",
        "--out",
        s(dir.path()),
    ]);
    let le = fs::read_to_string(dir.path().join("le.txt")).unwrap();
    let coth1 = 1.0f64.cosh() / 1.0f64.sinh();
    assert!((field(&le, "leading_exponent") + coth1).abs() < 1e-14, "{le}");

    run_ok(&[
        "analytic",
        "--curvature",
        "1",
        "--ell",
        "1.5707963267948966",
        "--d0",
        "0.4",
        "--out",
        s(dir.path()),
    ]);
    let (h, rows) = table(&dir.path().join("analytic.csv"));
    let (id, ik) = (col(&h, "d"), col(&h, "kappa"));
    for r in &rows {
        assert!((r[id].unwrap() - 0.4).abs() < 1e-12);
        assert!((r[ik].unwrap() - rows[0][ik].unwrap()).abs() < 1e-12);
    }
}

#[test]
fn analytic_flat_scenario() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "analytic",
        "--config",
        s(&scenarios().join("analytic_flat.toml")),
        "--out",
        s(dir.path()),
    ]);
    let (h, rows) = table(&dir.path().join("analytic.csv"));
    let (is, id, ik) = (col(&h, "s"), col(&h, "d"), col(&h, "kappa"));
    for r in rows.iter().skip(1) {
        let s = r[is].unwrap();
        let d = 2.0 * (-s / 2.0).exp();
        assert!((r[id].unwrap() - d).abs() < 1e-14);
        // κ = d / (ℓ √(ℓ² − d²)) in the plane
        let k = d / (2.0 * (4.0 - d * d).sqrt());
        assert!((r[ik].unwrap() - k).abs() <= 1e-9 * k);
    }
}

#[test]
fn shorten_writes_history() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "shorten",
        "--config",
        s(&scenarios().join("shorten_flat.toml")),
        "--out",
        s(dir.path()),
    ]);
    let (h, rows) = table(&dir.path().join("history.csv"));
    let il = col(&h, "length");
    let lengths: Vec<f64> = rows.iter().map(|r| r[il].unwrap()).collect();
    assert!(lengths.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    assert!((lengths.last().unwrap() - 10.0).abs() < 1e-4);
    for i in 0..rows.len() {
        assert!(dir.path().join(format!("iter_{i}.csv")).exists());
    }
}

#[test]
fn previous_tractrix_as_tractor() {
    let work = tempfile::tempdir().unwrap();
    let first = work.path().join("first");
    run_ok(&[
        "simulate",
        "--config",
        s(&scenarios().join("classical.toml")),
        "--out",
        s(&first),
    ]);
    let cfg = work.path().join("second.toml");
    fs::write(
        &cfg,
        r#"
name = "second"
ell = 0.5

[model]
kind = "plane"

[tractor]
curve = "previous_tractrix"
trace = "first/trace.csv"

[start]
trailing_angle = 0.0

[sim]
dt = 0.01
"#,
    )
    .unwrap();
    run_ok(&["simulate", "--config", s(&cfg), "--out", s(&work.path().join("out"))]);
    let sweep = fs::read_to_string(work.path().join("out/sweep.txt")).unwrap();
    let rel = (field(&sweep, "L_eta") - field(&sweep, "L_eta_polyline")).abs() / field(&sweep, "L_eta_polyline");
    assert!(rel < 1e-3, "{sweep}");
}

#[test]
fn exit_codes() {
    let work = tempfile::tempdir().unwrap();
    let out = work.path().join("out");

    let missing = tractrix(&["simulate", "--config", "no/such/file.toml"]);
    assert_eq!(code(&missing), 1);

    let bad = work.path().join("bad.toml");
    fs::write(&bad, SEEDED.replace("ell = 0.5", "ell = 0.0")).unwrap();
    let r = tractrix(&["simulate", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(code(&r), 1);
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("bad.toml:3: ell"), "{err}");

    let typo = work.path().join("typo.toml");
    fs::write(&typo, SEEDED.replace("dt = 0.02", "dtt = 0.02")).unwrap();
    let r = tractrix(&["simulate", "--config", s(&typo), "--out", s(&out)]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("dtt"));

    // the tractor runs over the north pole of the chart
    let singular = work.path().join("singular.toml");
    fs::write(
        &singular,
        SEEDED.replace(
            "curve = \"great_circle\"\nt_range = [0.0, 1.0]",
            "curve = \"line\"\nstart = [0.3, 0.0]\nvelocity = [-1.0, 0.0]\nt_range = [0.0, 1.0]",
        ),
    )
    .unwrap();
    assert_eq!(
        code(&tractrix(&["simulate", "--config", s(&singular), "--out", s(&out)])),
        2
    );

    // with exact bounds the exponent sandwich is an equality the fit misses
    let sphere = fs::read_to_string(scenarios().join("sphere.toml")).unwrap();
    let exact = work.path().join("exact.toml");
    fs::write(&exact, sphere.replace("widen = 0.02\n", "")).unwrap();
    let r = tractrix(&["verify", "--config", s(&exact), "--out", s(&out)]);
    assert_eq!(code(&r), 3, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn gallery_runs_a_directory() {
    let work = tempfile::tempdir().unwrap();
    let dir = work.path().join("scen");
    fs::create_dir(&dir).unwrap();
    fs::copy(scenarios().join("analytic_flat.toml"), dir.join("analytic_flat.toml")).unwrap();
    fs::copy(scenarios().join("circle3d.toml"), dir.join("circle3d.toml")).unwrap();
    fs::write(dir.join("seeded.toml"), SEEDED).unwrap();
    let out = work.path().join("gal");
    let r = run_ok(&["gallery", "--config", s(&dir), "--out", s(&out), "--jobs", "2"]);
    let text = String::from_utf8_lossy(&r.stdout);
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(out.join("analytic_flat/analytic.csv").exists());
    assert!(out.join("circle3d/report.toml").exists());
    assert!(out.join("seeded/trace.csv").exists());

    fs::write(dir.join("broken.toml"), "name = \"broken\"\nell = -1.0\n").unwrap();
    let r = tractrix(&["gallery", "--config", s(&dir), "--out", s(&out)]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stdout).contains("broken: FAILED"));
}
