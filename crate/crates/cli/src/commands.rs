use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dppa_core::algorithms::{
    self, parse_trajectory_csv, AlgoConfig, Algorithm, Monitors, Trajectory, TrajectoryRow,
};
use dppa_core::instance::{self, Instance, InstanceMeta};
use dppa_core::theory::{self, AnalysisReport};
use serde::Serialize;

use crate::eta::EtaSpec;
use crate::manifest::{
    default_manifest_path, record_path, sha256_hex, RunManifest, MANIFEST_VERSION,
};
use crate::plot::{render_svg, Series};
use crate::verify::{verify_trajectory, Check, Status};
use crate::{
    AnalyzeArgs, GenerateArgs, Invalid, Outcome, PlotArgs, RunArgs, SweepArgs, VerifyArgs,
};

/// Fraction of trailing rounds averaged into a plateau value.
pub const PLATEAU_FRACTION: f64 = 0.1;

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialization is infallible");
    s.push('\n');
    s
}

/// Reads and validates an instance, returning it with the SHA-256 of its bytes.
pub fn load_instance(path: &Path) -> Result<(Instance, String)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Invalid(format!("{} is not UTF-8", path.display())))?;
    let inst = Instance::from_json(text)
        .map_err(|e| Invalid(format!("invalid instance {}: {e}", path.display())))?;
    Ok((inst, sha256_hex(&bytes)))
}

fn load_trajectory(path: &Path) -> Result<(Vec<TrajectoryRow>, String)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Invalid(format!("{} is not UTF-8", path.display())))?;
    let rows = parse_trajectory_csv(text)
        .map_err(|e| Invalid(format!("invalid trajectory {}: {e}", path.display())))?;
    Ok((rows, sha256_hex(&bytes)))
}

pub fn generate(a: &GenerateArgs) -> Result<Outcome> {
    let meta = InstanceMeta {
        n: a.n,
        m: a.m,
        d: a.d,
        link_prob: a.link_prob,
        seed: a.seed,
        scale: a.scale,
        weights: a.weights,
    };
    let inst = instance::generate(&meta)?;
    let json = inst.to_json();
    write_out(a.out.as_deref(), &json)?;
    if let Some(p) = &a.out {
        eprintln!(
            "wrote {} ({} edges, rho_w = {:.6}, sha256 {})",
            p.display(),
            inst.graph().edges().len(),
            inst.mixing().rho_w(),
            sha256_hex(json.as_bytes())
        );
    }
    Ok(Outcome::Ok)
}

pub fn analyze(a: &AnalyzeArgs) -> Result<Outcome> {
    let (inst, _) = load_instance(&a.instance)?;
    let report = theory::analyze(inst.costs(), inst.mixing())?;
    write_out(a.out.as_deref(), &pretty(&report))?;
    if !report.bound_checks_enabled() {
        eprintln!("note: aggregate cost is not strongly convex; bound checks are disabled");
    }
    Ok(Outcome::Ok)
}

/// Runs `algo` from the zero state. DPPA runs on strongly convex instances
/// also record the inequality residuals and the fixed-point ledger.
pub fn simulate(
    inst: &Instance,
    report: &AnalysisReport,
    algo: Algorithm,
    eta: f64,
    rounds: u64,
) -> Result<Trajectory> {
    let xstar = report.xstar.as_ref().ok_or_else(|| {
        anyhow!("the aggregate cost has no unique minimizer; nothing to measure errors against")
    })?;
    let monitors = match (algo, report.constants()) {
        (Algorithm::Dppa, Some(c)) => {
            let fp = theory::solve_network_fixed_point(inst.costs(), inst.mixing(), eta)?;
            Some(Monitors::from_constants(&c, Some(fp)))
        }
        _ => None,
    };
    let cfg = AlgoConfig::new(eta, rounds);
    Ok(algorithms::run(
        algo,
        &cfg,
        inst.mixing(),
        inst.costs(),
        xstar,
        monitors.as_ref(),
    )?)
}

fn outcome_of(tr: &Trajectory) -> Outcome {
    if tr.diverged {
        Outcome::Diverged
    } else {
        Outcome::Ok
    }
}

fn summarize(tr: &Trajectory) -> String {
    let last = tr.rows.last().expect("trajectory has its initial row");
    format!(
        "{} eta = {:e}: {} rounds, final mean_err = {:.6e}{}",
        tr.algorithm,
        tr.eta,
        last.t,
        last.err.mean_err,
        if tr.diverged { " (diverged)" } else { "" }
    )
}

struct RunOutput {
    trajectory: Trajectory,
    csv: String,
    manifest: RunManifest,
}

#[allow(clippy::too_many_arguments)]
fn run_and_record(
    inst: &Instance,
    inst_sha: &str,
    inst_path: &Path,
    algo: Algorithm,
    eta_spec: &EtaSpec,
    rounds: u64,
    csv_path: &Path,
    manifest_path: &Path,
) -> Result<RunOutput> {
    let report = theory::analyze(inst.costs(), inst.mixing())?;
    let eta = eta_spec.resolve(Some(&report))?;
    let trajectory = simulate(inst, &report, algo, eta, rounds)?;
    let csv = trajectory.to_csv();
    fs::write(csv_path, &csv).with_context(|| format!("writing {}", csv_path.display()))?;
    let manifest = RunManifest {
        version: MANIFEST_VERSION,
        instance: record_path(manifest_path, inst_path)?,
        instance_sha256: inst_sha.to_string(),
        algorithm: algo,
        eta,
        eta_expr: eta_spec.to_string(),
        rounds,
        init: "zeros".into(),
        trajectory: record_path(manifest_path, csv_path)?,
        trajectory_sha256: sha256_hex(csv.as_bytes()),
        rounds_completed: trajectory.rows.last().map_or(0, |r| r.t),
        diverged: trajectory.diverged,
        constants: report,
    };
    fs::write(manifest_path, manifest.to_json())
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(RunOutput {
        trajectory,
        csv,
        manifest,
    })
}

pub fn run(a: &RunArgs) -> Result<Outcome> {
    if let Some(mpath) = &a.manifest {
        return replay(mpath, a.out.as_deref());
    }
    let inst_path = a.instance.as_ref().expect("clap enforces an instance");
    let eta = a.eta.as_ref().expect("clap enforces a stepsize");
    let out = a.out.as_ref().expect("clap enforces an output path");
    let (inst, sha) = load_instance(inst_path)?;
    let mpath = a
        .manifest_out
        .clone()
        .unwrap_or_else(|| default_manifest_path(out));
    let res = run_and_record(
        &inst,
        &sha,
        inst_path,
        a.algo.into(),
        eta,
        a.rounds,
        out,
        &mpath,
    )?;
    eprintln!("{}", summarize(&res.trajectory));
    eprintln!("wrote {} and {}", out.display(), mpath.display());
    Ok(outcome_of(&res.trajectory))
}

fn replay(mpath: &Path, out: Option<&Path>) -> Result<Outcome> {
    let m = RunManifest::load(mpath).map_err(|e| Invalid(format!("{e:#}")))?;
    let inst_path = m.instance_path(mpath);
    let (inst, sha) = load_instance(&inst_path)?;
    if sha != m.instance_sha256 {
        return Err(Invalid(format!(
            "{} has changed since the run was recorded",
            inst_path.display()
        ))
        .into());
    }
    let report = theory::analyze(inst.costs(), inst.mixing())?;
    let tr = simulate(&inst, &report, m.algorithm, m.eta, m.rounds)?;
    let csv = tr.to_csv();
    let digest = sha256_hex(csv.as_bytes());
    if let Some(p) = out {
        fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?;
    }
    if digest != m.trajectory_sha256 {
        return Err(Invalid(format!(
            "replay produced trajectory digest {digest}, manifest records {}",
            m.trajectory_sha256
        ))
        .into());
    }
    let recorded = m.trajectory_path(mpath);
    if let Ok(bytes) = fs::read(&recorded) {
        if bytes != csv.as_bytes() {
            return Err(Invalid(format!(
                "{} differs from the replayed trajectory",
                recorded.display()
            ))
            .into());
        }
    }
    eprintln!("{}", summarize(&tr));
    eprintln!("replay reproduces {} (sha256 {digest})", m.trajectory);
    Ok(outcome_of(&tr))
}

#[derive(Serialize)]
struct DigestCheck {
    name: &'static str,
    status: Status,
    detail: String,
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome> {
    let (inst_path, traj_path, eta_spec, algo, expected) = match &a.manifest {
        Some(mpath) => {
            let m = RunManifest::load(mpath).map_err(|e| Invalid(format!("{e:#}")))?;
            let expected = (m.instance_sha256.clone(), m.trajectory_sha256.clone());
            (
                m.instance_path(mpath),
                m.trajectory_path(mpath),
                EtaSpec::literal(m.eta),
                m.algorithm,
                Some(expected),
            )
        }
        None => (
            a.instance.clone().expect("clap enforces an instance"),
            a.trajectory.clone().expect("clap enforces a trajectory"),
            a.eta.expect("clap enforces a stepsize"),
            a.algo.into(),
            None,
        ),
    };
    let (inst, inst_sha) = load_instance(&inst_path)?;
    let (rows, traj_sha) = load_trajectory(&traj_path)?;
    let report = theory::analyze(inst.costs(), inst.mixing())?;
    let eta = eta_spec.resolve(Some(&report))?;

    let mut digests = Vec::new();
    if let Some((want_inst, want_traj)) = expected {
        if inst_sha != want_inst {
            return Err(Invalid(format!(
                "{} does not match the manifest's instance digest",
                inst_path.display()
            ))
            .into());
        }
        let ok = traj_sha == want_traj;
        digests.push(DigestCheck {
            name: "trajectory_digest",
            status: if ok { Status::Pass } else { Status::Fail },
            detail: if ok {
                "trajectory bytes match the manifest".into()
            } else {
                format!("trajectory digest {traj_sha} differs from the manifest")
            },
        });
    }

    let vr = verify_trajectory(&inst, &rows, algo, eta).map_err(|e| Invalid(format!("{e:#}")))?;
    let passed = vr.passed && digests.iter().all(|d| d.status != Status::Fail);

    #[derive(Serialize)]
    struct Full<'a> {
        instance: String,
        trajectory: String,
        #[serde(flatten)]
        report: &'a crate::verify::VerifyReport,
        integrity: &'a [DigestCheck],
        all_passed: bool,
    }
    let full = Full {
        instance: inst_path.display().to_string(),
        trajectory: traj_path.display().to_string(),
        report: &vr,
        integrity: &digests,
        all_passed: passed,
    };
    write_out(a.out.as_deref(), &pretty(&full))?;
    for c in &vr.checks {
        eprintln!("{}", describe(c));
    }
    for d in &digests {
        eprintln!("{:<16} {}", d.name, status_word(d.status));
    }
    Ok(if passed {
        Outcome::Ok
    } else {
        Outcome::Invalid
    })
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::NotApplicable => "N/A",
    }
}

fn describe(c: &Check) -> String {
    match (c.worst_margin, c.worst_t) {
        (Some(m), Some(t)) => format!(
            "{:<16} {:<4} worst margin {m:.3e} at t = {t}",
            c.name,
            status_word(c.status)
        ),
        _ => format!("{:<16} {:<4} {}", c.name, status_word(c.status), c.detail),
    }
}

pub fn plot(a: &PlotArgs) -> Result<Outcome> {
    if !a.labels.is_empty() && a.labels.len() != a.csv.len() {
        bail!(
            "{} labels given for {} trajectories",
            a.labels.len(),
            a.csv.len()
        );
    }
    let data: Vec<Vec<TrajectoryRow>> = a
        .csv
        .iter()
        .map(|p| load_trajectory(p).map(|(rows, _)| rows))
        .collect::<Result<_>>()?;
    let series: Vec<Series<'_>> = data
        .iter()
        .zip(&a.csv)
        .enumerate()
        .map(|(i, (rows, path))| Series {
            label: a.labels.get(i).cloned().unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            }),
            rows,
        })
        .collect();
    let svg = render_svg(&series, &a.title)?;
    fs::write(&a.out, svg).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!("wrote {}", a.out.display());
    Ok(Outcome::Ok)
}

#[derive(Debug, Serialize)]
pub struct SweepEntry {
    pub eta_expr: String,
    pub eta: f64,
    pub trajectory: String,
    pub manifest: String,
    pub diverged: bool,
    pub final_mean_err: f64,
    /// Mean of `mean_err` over the last tenth of the recorded rounds.
    pub plateau: f64,
}

pub fn sweep(a: &SweepArgs) -> Result<Outcome> {
    if a.etas.is_empty() {
        bail!("no stepsizes given");
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let (inst, sha) = load_instance(&a.instance)?;
    let algo: Algorithm = a.algo.into();
    let mut entries = Vec::new();
    let mut trajectories = Vec::new();
    for (i, spec) in a.etas.iter().enumerate() {
        let stem = format!("{algo}_{i:02}");
        let csv_path: PathBuf = a.out.join(format!("{stem}.csv"));
        let mpath = a.out.join(format!("{stem}.manifest.json"));
        let res = run_and_record(
            &inst,
            &sha,
            &a.instance,
            algo,
            spec,
            a.rounds,
            &csv_path,
            &mpath,
        )?;
        eprintln!("{}", summarize(&res.trajectory));
        debug_assert_eq!(
            res.manifest.trajectory_sha256,
            sha256_hex(res.csv.as_bytes())
        );
        entries.push(SweepEntry {
            eta_expr: spec.to_string(),
            eta: res.manifest.eta,
            trajectory: res.manifest.trajectory.clone(),
            manifest: format!("{stem}.manifest.json"),
            diverged: res.trajectory.diverged,
            final_mean_err: res
                .trajectory
                .rows
                .last()
                .map_or(f64::NAN, |r| r.err.mean_err),
            plateau: res.trajectory.plateau(PLATEAU_FRACTION),
        });
        trajectories.push(res.trajectory);
    }
    let series: Vec<Series<'_>> = trajectories
        .iter()
        .map(|t| Series {
            label: format!("{} η = {}", t.algorithm, t.eta),
            rows: &t.rows,
        })
        .collect();
    let svg = render_svg(&series, &format!("{algo} stepsize sweep"))?;
    fs::write(a.out.join("sweep.svg"), svg)?;
    fs::write(a.out.join("summary.json"), pretty(&entries))?;
    eprintln!("wrote {}", a.out.display());
    Ok(if entries.iter().any(|e| e.diverged) {
        Outcome::Diverged
    } else {
        Outcome::Ok
    })
}
