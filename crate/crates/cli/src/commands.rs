use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use tractrix_core::export::{analytic_csv, cusps_toml, le_fit_toml, le_text, trace_csv};
use tractrix_core::functionals::{trace_leading_exponent, SweepResult};
use tractrix_core::scenario::{AnalyticSpec, ScenarioConfig, ScenarioError};

use crate::{AnalyticArgs, Common};

pub enum Failure {
    Scenario(ScenarioError),
    /// Number of failed, non-skipped checks.
    Verification(usize),
    /// Exit code and message per failed scenario.
    Gallery(Vec<(u8, String)>),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Scenario(e) if e.is_validation() => 1,
            Failure::Scenario(_) => 2,
            Failure::Verification(_) => 3,
            Failure::Gallery(v) => v.iter().map(|x| x.0).max().unwrap_or(0),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Scenario(e)
    }
}

type Outcome = Result<(), Failure>;

/// Names of the runs a scenario completed.
type RunResult = Result<Vec<String>, Failure>;

fn write(dir: &Path, name: &str, text: &str) -> Result<(), ScenarioError> {
    let path = dir.join(name);
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(&path, text))
        .map_err(|e| ScenarioError::Io { path, source: e })
}

fn load(common: &Common) -> Result<ScenarioConfig, ScenarioError> {
    let path = common.config.as_ref().ok_or_else(|| ScenarioError::Invalid {
        field: "--config".into(),
        message: "a scenario file is required".into(),
    })?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ScenarioConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

fn run_simulate(cfg: &ScenarioConfig, dir: &Path) -> Result<(), ScenarioError> {
    let trace = cfg.simulate()?;
    write(dir, "trace.csv", &trace_csv(&trace))?;
    write(dir, "cusps.txt", &cusps_toml(&trace))?;
    if cfg.functionals.sweep {
        write(dir, "sweep.txt", &SweepResult::evaluate(&trace)?.to_toml())?;
    }
    if cfg.functionals.leading_exponent {
        write(dir, "le_fit.txt", &le_fit_toml(&trace_leading_exponent(&trace)?))?;
    }
    Ok(())
}

fn run_analytic(spec: &AnalyticSpec, dir: &Path) -> Result<(), ScenarioError> {
    let sol = spec.solve()?;
    write(dir, "analytic.csv", &analytic_csv(&sol, spec.s_max, spec.samples))?;
    write(dir, "le.txt", &le_text(&sol))
}

fn run_shorten(cfg: &ScenarioConfig, dir: &Path) -> Result<(), ScenarioError> {
    let run = cfg.shorten()?;
    run.write_to(dir).map_err(|e| ScenarioError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Writes `report.toml`; returns the number of failed checks.
fn run_verify(cfg: &ScenarioConfig, dir: &Path) -> Result<usize, ScenarioError> {
    let trace = cfg.simulate()?;
    let report = cfg.verify(&trace)?;
    write(dir, "report.toml", &report.to_toml())?;
    Ok(report.failures().count())
}

pub fn simulate(common: &Common) -> Outcome {
    let cfg = load(common)?;
    run_simulate(&cfg, &out_dir(common, &cfg))?;
    Ok(())
}

pub fn analytic(args: &AnalyticArgs) -> Outcome {
    let flags = (args.curvature, args.ell, args.d0);
    let (spec, dir) = match (&args.common.config, flags) {
        (None, (Some(curvature), Some(ell), Some(d0))) => {
            let spec = AnalyticSpec {
                curvature,
                ell,
                d0,
                s_max: args.s_max,
                samples: args.samples,
                long_pole: args.long_pole,
            };
            (
                spec,
                args.common.out.clone().unwrap_or_else(|| PathBuf::from("out/analytic")),
            )
        }
        (Some(_), _) => {
            let cfg = load(&args.common)?;
            let spec = cfg.analytic.ok_or_else(|| ScenarioError::Invalid {
                field: "analytic".into(),
                message: "scenario has no [analytic] section".into(),
            })?;
            (spec, out_dir(&args.common, &cfg))
        }
        _ => {
            return Err(ScenarioError::Invalid {
                field: "--config".into(),
                message: "give a scenario file or all of --curvature, --ell, --d0".into(),
            }
            .into())
        }
    };
    run_analytic(&spec, &dir)?;
    Ok(())
}

pub fn shorten(common: &Common) -> Outcome {
    let cfg = load(common)?;
    run_shorten(&cfg, &out_dir(common, &cfg))?;
    Ok(())
}

pub fn verify(common: &Common) -> Outcome {
    let cfg = load(common)?;
    match run_verify(&cfg, &out_dir(common, &cfg))? {
        0 => Ok(()),
        n => Err(Failure::Verification(n)),
    }
}

/// Every run a scenario declares, into `dir`.
fn run_all(cfg: &ScenarioConfig, dir: &Path) -> RunResult {
    let mut done = Vec::new();
    if cfg.has_simulation() {
        run_simulate(cfg, dir)?;
        done.push("simulate");
    }
    if cfg.comparison.is_some() {
        let failed = run_verify(cfg, dir)?;
        if failed > 0 {
            return Err(Failure::Verification(failed));
        }
        done.push("verify");
    }
    if let Some(spec) = &cfg.analytic {
        run_analytic(spec, dir)?;
        done.push("analytic");
    }
    if cfg.shorten.is_some() {
        run_shorten(cfg, dir)?;
        done.push("shorten");
    }
    Ok(done.into_iter().map(String::from).collect())
}

fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    let entries = fs::read_dir(dir).map_err(|e| ScenarioError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn gallery(common: &Common) -> Outcome {
    let dir = common.config.clone().unwrap_or_else(|| PathBuf::from("scenarios"));
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("gallery"));
    let files = scenario_files(&dir)?;
    let next = AtomicUsize::new(0);
    // one slot per scenario keeps the summary in file order
    let results: Mutex<Vec<Option<RunResult>>> = Mutex::new((0..files.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..common.jobs.clamp(1, files.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = files.get(i) else { break };
                let result = ScenarioConfig::load(path).map_err(Failure::from).and_then(|mut cfg| {
                    if let Some(seed) = common.seed {
                        cfg.seed = seed;
                    }
                    run_all(&cfg, &out.join(&cfg.name))
                });
                results.lock().expect("no worker panicked")[i] = Some(result);
            });
        }
    });
    let mut failed = Vec::new();
    for (path, result) in files.iter().zip(results.into_inner().expect("workers joined")) {
        let name = path.file_stem().unwrap_or_default().to_string_lossy();
        match result.expect("every slot filled") {
            Ok(done) => println!("{name}: ok ({})", done.join(", ")),
            Err(f) => {
                println!("{name}: FAILED ({f})");
                failed.push((f.code(), format!("{name}: {f}")));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Gallery(failed))
    }
}
