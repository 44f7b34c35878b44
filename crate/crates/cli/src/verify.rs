//! Checks a recorded trajectory against the bounds and per-round
//! inequalities of the proximal method, recomputing every constant from the
//! instance.

use anyhow::{bail, Result};
use dppa_core::algorithms::{inequality_residuals, Algorithm, Monitors, TrajectoryRow};
use dppa_core::instance::Instance;
use dppa_core::theory::{self, InstanceConstants};
use serde::Serialize;

/// Absolute slack for the trajectory bounds and the ledger.
pub const BOUND_SLACK: f64 = 1e-9;
/// Largest allowed per-round inequality residual.
pub const RESIDUAL_SLACK: f64 = 1e-7;
/// Relative tolerance when matching the first row to the zero initial state.
const INIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "n/a")]
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    /// Smallest `allowed - observed` over all rounds; negative means violated.
    pub worst_margin: Option<f64>,
    pub worst_t: Option<u64>,
    pub detail: String,
}

impl Check {
    fn na(name: &'static str, detail: impl Into<String>) -> Self {
        Check {
            name,
            status: Status::NotApplicable,
            worst_margin: None,
            worst_t: None,
            detail: detail.into(),
        }
    }

    /// Pass iff every margin is at least `-slack`. NaN margins fail.
    fn from_margins(
        name: &'static str,
        slack: f64,
        detail: String,
        margins: impl Iterator<Item = (u64, f64)>,
    ) -> Self {
        let mut worst: Option<(u64, f64)> = None;
        for (t, m) in margins {
            let replace = match worst {
                None => true,
                Some((_, w)) => m.is_nan() || (!w.is_nan() && m < w),
            };
            if replace {
                worst = Some((t, m));
            }
        }
        let status = match worst {
            None => Status::NotApplicable,
            Some((_, m)) if m >= -slack => Status::Pass,
            Some(_) => Status::Fail,
        };
        Check {
            name,
            status,
            worst_margin: worst.map(|w| w.1),
            worst_t: worst.map(|w| w.0),
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub algorithm: Algorithm,
    pub eta: f64,
    pub rounds: u64,
    pub radius: Option<f64>,
    pub radius_source: Option<&'static str>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

const CHECK_NAMES: [&str; 5] = [
    "bound_a",
    "bound_b",
    "residual_r1",
    "residual_r2",
    "ledger_monotone",
];

fn all_na(algorithm: Algorithm, eta: f64, rounds: u64, why: &str) -> VerifyReport {
    VerifyReport {
        algorithm,
        eta,
        rounds,
        radius: None,
        radius_source: None,
        checks: CHECK_NAMES.iter().map(|&n| Check::na(n, why)).collect(),
        passed: true,
    }
}

/// Errors when the first row is not the zero initial state of `inst`, which
/// is how a trajectory from a different instance is detected.
pub fn verify_trajectory(
    inst: &Instance,
    rows: &[TrajectoryRow],
    algorithm: Algorithm,
    eta: f64,
) -> Result<VerifyReport> {
    if rows.is_empty() {
        bail!("trajectory is empty");
    }
    let rounds = rows.len() as u64 - 1;
    let report = theory::analyze(inst.costs(), inst.mixing())?;
    let Some(consts) = report.constants() else {
        return Ok(all_na(
            algorithm,
            eta,
            rounds,
            "aggregate cost is not strongly convex",
        ));
    };
    check_initial_row(&consts, &rows[0])?;
    if algorithm == Algorithm::Dgd {
        return Ok(all_na(
            algorithm,
            eta,
            rounds,
            "inequalities are stated for the proximal method only",
        ));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        bail!("eta must be positive, got {eta}");
    }

    let a0 = rows[0].err.a_t;
    let b0 = rows[0].err.b_t;
    let b1 = rows.get(1).map_or(b0, |r| r.err.b_t);
    let (radius, source) = match theory::radius_r(&consts, eta, a0, b0, b1) {
        Ok(r) => (r, "radius formula"),
        Err(_) => {
            let sup = rows
                .iter()
                .fold(0.0_f64, |acc, r| acc.max(r.err.a_t).max(r.err.b_t));
            (sup, "measured supremum")
        }
    };

    let bound_a = Check::from_margins(
        "bound_a",
        BOUND_SLACK,
        format!("A_t below the decaying bound with R = {radius:.6e} ({source})"),
        rows.iter().map(|r| {
            (
                r.t,
                theory::optimality_bound(r.t, &consts, eta, a0, b0, radius) - r.err.a_t,
            )
        }),
    );
    let bound_b = Check::from_margins(
        "bound_b",
        BOUND_SLACK,
        format!("B_t below the consensus bound with R = {radius:.6e} ({source})"),
        rows.iter().map(|r| {
            (
                r.t,
                theory::consensus_bound(r.t, &consts, eta, b0, radius) - r.err.b_t,
            )
        }),
    );

    let mon = Monitors::from_constants(&consts, None);
    let res: Vec<(u64, f64, f64)> = rows
        .windows(2)
        .map(|w| {
            let (r1, r2) = inequality_residuals(eta, consts.rho_w, &mon, &w[0].err, &w[1].err);
            (w[1].t, r1, r2)
        })
        .collect();
    let r1 = Check::from_margins(
        "residual_r1",
        0.0,
        format!("(1+ηα)A_t - A_(t-1) - ηL B_t <= {RESIDUAL_SLACK:e}"),
        res.iter().map(|&(t, r, _)| (t, RESIDUAL_SLACK - r)),
    );
    let r2 = Check::from_margins(
        "residual_r2",
        0.0,
        format!("B_t - ρB_(t-1) - ηL B_t - ηL A_t - ηD <= {RESIDUAL_SLACK:e}"),
        res.iter().map(|&(t, _, r)| (t, RESIDUAL_SLACK - r)),
    );

    let ledger = if rows.iter().all(|r| r.ledger.is_some()) {
        Check::from_margins(
            "ledger_monotone",
            BOUND_SLACK,
            "distance to the penalized fixed point never grows".into(),
            rows.windows(2)
                .map(|w| (w[1].t, w[0].ledger.unwrap() - w[1].ledger.unwrap())),
        )
    } else {
        Check::na("ledger_monotone", "trajectory has no ledger column")
    };

    let checks = vec![bound_a, bound_b, r1, r2, ledger];
    let passed = checks.iter().all(|c| c.status != Status::Fail);
    Ok(VerifyReport {
        algorithm,
        eta,
        rounds,
        radius: Some(radius),
        radius_source: Some(source),
        checks,
        passed,
    })
}

fn check_initial_row(consts: &InstanceConstants, row: &TrajectoryRow) -> Result<()> {
    let expect = consts.xstar.iter().map(|v| v * v).sum::<f64>().sqrt();
    let close = |v: f64| (v - expect).abs() <= INIT_TOL * (1.0 + expect);
    if row.t != 0 || !close(row.err.a_t) || !close(row.err.mean_err) || row.err.b_t.abs() > INIT_TOL
    {
        bail!(
            "first trajectory row does not match a zero start on this instance \
             (expected A_0 = mean_err_0 = {expect:.12e}, B_0 = 0; found {:.12e}, {:.12e}, {:.12e})",
            row.err.a_t,
            row.err.mean_err,
            row.err.b_t
        );
    }
    Ok(())
}
