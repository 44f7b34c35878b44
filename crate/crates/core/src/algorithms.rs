//! Synchronous DPPA and DGD rounds, error functionals and trajectory records.
//!
//! One round of either method mixes first (`x̂ = W x`), then every agent
//! updates locally:
//!
//! - DPPA: `x_i(t+1) = prox_{η f_i}(x̂_i)` (implicit step)
//! - DGD:  `x_i(t+1) = x̂_i - η ∇f_i(x_i(t))` (explicit step at the old iterate)

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::costs::{check_eta, CostFunction, ProxFn};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::mixing::MixingMatrix;
use crate::theory::InstanceConstants;

pub const DEFAULT_OVERFLOW_GUARD: f64 = 1e12;

pub const CSV_HEADER: [&str; 8] = [
    "t",
    "a_t",
    "b_t",
    "mean_err",
    "log10_mean_err",
    "r1",
    "r2",
    "ledger",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dppa,
    Dgd,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Dppa => "dppa",
            Algorithm::Dgd => "dgd",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dppa" => Ok(Algorithm::Dppa),
            "dgd" => Ok(Algorithm::Dgd),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm {other:?}"
            ))),
        }
    }
}

/// Stacked iterate: row `i` is agent `i`'s point.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    t: u64,
    x: Mat,
    xbar: Vec<f64>,
}

impl NetworkState {
    pub fn new(t: u64, x: Mat) -> Self {
        let xbar = x.column_means();
        NetworkState { t, x, xbar }
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        NetworkState::new(0, Mat::zeros(n, d))
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn x(&self) -> &Mat {
        &self.x
    }

    pub fn xbar(&self) -> &[f64] {
        &self.xbar
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorFunctionals {
    /// `||x̄ - x*||`
    pub a_t: f64,
    /// `(1/√n) ||x - 1 x̄ᵀ||_F`
    pub b_t: f64,
    /// `(1/n) Σ_k ||x_k - x*||`
    pub mean_err: f64,
}

pub fn error_functionals(state: &NetworkState, xstar: &[f64]) -> ErrorFunctionals {
    let n = state.n() as f64;
    let a_t = linalg::norm(&linalg::sub(state.xbar(), xstar));
    let mut spread = 0.0;
    let mut dist = 0.0;
    for k in 0..state.n() {
        let row = state.x.row(k);
        for (v, m) in row.iter().zip(state.xbar()) {
            spread += (v - m) * (v - m);
        }
        dist += linalg::norm(&linalg::sub(row, xstar));
    }
    ErrorFunctionals {
        a_t,
        b_t: (spread / n).sqrt(),
        mean_err: dist / n,
    }
}

/// `Σ_k ||x_k - x_k*||` against a stationary point of the penalized cost.
pub fn disagreement_ledger(state: &NetworkState, fp: &Mat) -> f64 {
    (0..state.n()).fold(0.0, |acc, k| {
        acc + linalg::norm(&linalg::sub(state.x.row(k), fp.row(k)))
    })
}

fn check_shapes<C: CostFunction>(
    state: &NetworkState,
    m: &MixingMatrix,
    costs: &[C],
) -> Result<()> {
    if state.n() != m.n() || costs.len() != m.n() {
        return Err(Error::dims(
            format!("{} agents", m.n()),
            format!("{} state rows and {} costs", state.n(), costs.len()),
        ));
    }
    if let Some(c) = costs.iter().find(|c| c.dim() != state.d()) {
        return Err(Error::dims(
            format!("cost dimension {}", state.d()),
            format!("{}", c.dim()),
        ));
    }
    Ok(())
}

/// One DPPA round.
pub fn dppa_step<C: CostFunction>(
    state: &NetworkState,
    m: &MixingMatrix,
    costs: &[C],
    eta: f64,
) -> Result<NetworkState> {
    check_eta(eta)?;
    check_shapes(state, m, costs)?;
    let mut next = m.mix(&state.x)?;
    for (i, c) in costs.iter().enumerate() {
        let p = c.prox(next.row(i), eta)?;
        next.row_mut(i).copy_from_slice(&p);
    }
    Ok(NetworkState::new(state.t + 1, next))
}

/// One DGD round.
pub fn dgd_step<C: CostFunction>(
    state: &NetworkState,
    m: &MixingMatrix,
    costs: &[C],
    eta: f64,
) -> Result<NetworkState> {
    check_eta(eta)?;
    check_shapes(state, m, costs)?;
    let mut next = m.mix(&state.x)?;
    for (i, c) in costs.iter().enumerate() {
        let g = c.gradient(state.x.row(i));
        linalg::axpy(-eta, &g, next.row_mut(i));
    }
    Ok(NetworkState::new(state.t + 1, next))
}

/// `||x̄(t+1) + (η/n) Σ_k ∇f_k(x_k(t+1)) - x̄(t)||`; zero for an exact DPPA step
/// with doubly stochastic `W`.
pub fn averaged_identity_residual<C: CostFunction>(
    prev: &NetworkState,
    next: &NetworkState,
    costs: &[C],
    eta: f64,
) -> f64 {
    let n = costs.len() as f64;
    let mut r = linalg::sub(next.xbar(), prev.xbar());
    for (k, c) in costs.iter().enumerate() {
        linalg::axpy(eta / n, &c.gradient(next.x.row(k)), &mut r);
    }
    linalg::norm(&r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoConfig {
    pub eta: f64,
    pub rounds: u64,
    /// Initial `n × d` state; `None` means all zeros.
    pub init: Option<Mat>,
    pub overflow_guard: f64,
}

impl AlgoConfig {
    pub fn new(eta: f64, rounds: u64) -> Self {
        AlgoConfig {
            eta,
            rounds,
            init: None,
            overflow_guard: DEFAULT_OVERFLOW_GUARD,
        }
    }

    fn validate(&self) -> Result<()> {
        check_eta(self.eta)?;
        if self.rounds == 0 {
            return Err(Error::InvalidArgument("rounds must be at least 1".into()));
        }
        if !(self.overflow_guard > 0.0) {
            return Err(Error::InvalidArgument(
                "overflow guard must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Constants the per-round inequality monitors are evaluated with.
#[derive(Debug, Clone, PartialEq)]
pub struct Monitors {
    pub alpha: f64,
    pub l_smooth: f64,
    pub d_const: f64,
    /// Stationary point of the penalized cost at the run's stepsize; enables
    /// the ledger column.
    pub fixed_point: Option<Mat>,
}

impl Monitors {
    pub fn from_constants(c: &InstanceConstants, fixed_point: Option<Mat>) -> Self {
        Monitors {
            alpha: c.alpha,
            l_smooth: c.l_smooth,
            d_const: c.d_const,
            fixed_point,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: u64,
    pub err: ErrorFunctionals,
    /// `(1+ηα)A_t - A_{t-1} - ηL B_t`; absent at `t = 0`.
    pub r1: Option<f64>,
    /// `B_t - ρ B_{t-1} - ηL B_t - ηL A_t - ηD`; absent at `t = 0`.
    pub r2: Option<f64>,
    pub ledger: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub algorithm: Algorithm,
    pub eta: f64,
    pub rows: Vec<TrajectoryRow>,
    pub final_state: NetworkState,
    pub diverged: bool,
}

/// `(r1, r2)` for the step from `prev` to `cur`; both are `<= 0` along exact
/// DPPA iterations.
pub fn inequality_residuals(
    eta: f64,
    rho: f64,
    mon: &Monitors,
    prev: &ErrorFunctionals,
    cur: &ErrorFunctionals,
) -> (f64, f64) {
    let el = eta * mon.l_smooth;
    let r1 = (1.0 + eta * mon.alpha) * cur.a_t - prev.a_t - el * cur.b_t;
    let r2 = cur.b_t - rho * prev.b_t - el * cur.b_t - el * cur.a_t - eta * mon.d_const;
    (r1, r2)
}

/// Runs `cfg.rounds` synchronous rounds and records the error functionals and
/// monitors after each. Stops early, with `diverged` set, once an entry
/// exceeds `cfg.overflow_guard` in magnitude or stops being finite.
pub fn run<C: CostFunction + Sync>(
    algo: Algorithm,
    cfg: &AlgoConfig,
    m: &MixingMatrix,
    costs: &[C],
    xstar: &[f64],
    monitors: Option<&Monitors>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = m.n();
    let d = xstar.len();
    let mut state = match &cfg.init {
        Some(x) => NetworkState::new(0, x.clone()),
        None => NetworkState::zeros(n, d),
    };
    check_shapes(&state, m, costs)?;
    if let Some(fp) = monitors.and_then(|mon| mon.fixed_point.as_ref()) {
        if fp.rows() != n || fp.cols() != d {
            return Err(Error::dims(
                format!("{n}x{d} fixed point"),
                format!("{}x{}", fp.rows(), fp.cols()),
            ));
        }
    }
    let prox: Vec<ProxFn<'_>> = match algo {
        Algorithm::Dppa => costs
            .iter()
            .map(|c| c.prepare_prox(cfg.eta))
            .collect::<Result<_>>()?,
        Algorithm::Dgd => Vec::new(),
    };

    let ledger_of = |s: &NetworkState| {
        monitors
            .and_then(|mon| mon.fixed_point.as_ref())
            .map(|fp| disagreement_ledger(s, fp))
    };
    let mut prev_err = error_functionals(&state, xstar);
    let mut rows = vec![TrajectoryRow {
        t: 0,
        err: prev_err,
        r1: None,
        r2: None,
        ledger: ledger_of(&state),
    }];
    let mut diverged = false;

    for _ in 0..cfg.rounds {
        let mut next = m.mix(&state.x)?;
        match algo {
            Algorithm::Dppa => {
                for (i, p) in prox.iter().enumerate() {
                    let v = p(next.row(i))?;
                    next.row_mut(i).copy_from_slice(&v);
                }
            }
            Algorithm::Dgd => {
                for (i, c) in costs.iter().enumerate() {
                    let g = c.gradient(state.x.row(i));
                    linalg::axpy(-cfg.eta, &g, next.row_mut(i));
                }
            }
        }
        state = NetworkState::new(state.t + 1, next);
        let err = error_functionals(&state, xstar);
        let (r1, r2) = match monitors {
            Some(mon) => {
                let (a, b) = inequality_residuals(cfg.eta, m.rho_w(), mon, &prev_err, &err);
                (Some(a), Some(b))
            }
            None => (None, None),
        };
        rows.push(TrajectoryRow {
            t: state.t,
            err,
            r1,
            r2,
            ledger: ledger_of(&state),
        });
        prev_err = err;
        if !state.x.is_finite() || state.x.max_abs() > cfg.overflow_guard {
            diverged = true;
            break;
        }
    }

    Ok(Trajectory {
        algorithm: algo,
        eta: cfg.eta,
        rows,
        final_state: state,
        diverged,
    })
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }

    /// Mean of `mean_err` over the trailing `fraction` of recorded rounds.
    pub fn plateau(&self, fraction: f64) -> f64 {
        plateau(&self.rows, fraction)
    }
}

pub fn plateau(rows: &[TrajectoryRow], fraction: f64) -> f64 {
    let take = ((rows.len() as f64 * fraction).ceil() as usize).clamp(1, rows.len().max(1));
    let tail = &rows[rows.len() - take..];
    tail.iter().map(|r| r.err.mean_err).sum::<f64>() / take as f64
}

/// Trajectory CSV: `t,a_t,b_t,mean_err,log10_mean_err,r1,r2,ledger`, floats
/// with 17 significant digits, empty fields for absent monitors.
pub fn rows_to_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let fields = [
            r.t.to_string(),
            fmt_f64(r.err.a_t),
            fmt_f64(r.err.b_t),
            fmt_f64(r.err.mean_err),
            fmt_f64(r.err.mean_err.log10()),
            fmt_opt(r.r1),
            fmt_opt(r.r2),
            fmt_opt(r.ledger),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parses a trajectory CSV. Rejects wrong headers, non-contiguous rounds,
/// negative error functionals, and `log10_mean_err` values that disagree with
/// `mean_err`.
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Parse(format!(
                "row {line}: expected 8 fields, got {}",
                rec.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "row {line}: bad number {:?} in column {}",
                    &rec[i], CSV_HEADER[i]
                ))
            })
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let t: u64 = rec[0]
            .parse()
            .map_err(|_| Error::Parse(format!("row {line}: bad round {:?}", &rec[0])))?;
        if t != line as u64 {
            return Err(Error::Parse(format!(
                "row {line}: expected round {line}, got {t}"
            )));
        }
        let err = ErrorFunctionals {
            a_t: num(1)?,
            b_t: num(2)?,
            mean_err: num(3)?,
        };
        for (v, name) in [
            (err.a_t, "a_t"),
            (err.b_t, "b_t"),
            (err.mean_err, "mean_err"),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Parse(format!(
                    "row {line}: {name} must be nonnegative, got {v}"
                )));
            }
        }
        let log = num(4)?;
        let expect = err.mean_err.log10();
        let agrees = if expect.is_finite() {
            (log - expect).abs() <= 1e-12 * (1.0 + expect.abs())
        } else {
            log == expect
        };
        if !agrees {
            return Err(Error::Parse(format!(
                "row {line}: log10_mean_err disagrees with mean_err"
            )));
        }
        rows.push(TrajectoryRow {
            t,
            err,
            r1: opt(5)?,
            r2: opt(6)?,
            ledger: opt(7)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse("trajectory has no rows".into()));
    }
    Ok(rows)
}
