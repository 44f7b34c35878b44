//! Instance constants, stepsize thresholds, fixed points and convergence
//! bounds for the distributed proximal point method.
//!
//! Conventions:
//! - `L` is the largest per-agent smoothness constant `max_i L_i`.
//! - `alpha` is the strong convexity constant of the *average* cost
//!   `(1/n) Σ f_i`. The averaged recursion
//!   `x̄(t+1) + (η/n) Σ ∇f_k(x_k(t+1)) = x̄(t)` is what the per-round
//!   inequality `(1+ηα) A_{t+1} <= A_t + ηL B_{t+1}` is built on, so `alpha`
//!   must be measured on the same scale.
//! - `D = max_i ||∇f_i(x*)||`.

use serde::{Deserialize, Serialize};

use crate::costs::{check_eta, CostFunction, QuadraticCost};
use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, Mat};
use crate::mixing::MixingMatrix;

/// Below this (relative to the Hessian scale) the aggregate Hessian is
/// treated as singular.
const SINGULAR_REL_TOL: f64 = 1e-12;

/// Constants of one problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConstants {
    #[serde(rename = "L")]
    pub l_smooth: f64,
    pub alpha: f64,
    #[serde(rename = "D")]
    pub d_const: f64,
    pub rho_w: f64,
    pub lambda_min: f64,
    /// DGD stability threshold `(1 + λ_min(W)) / L`.
    pub eta_c: f64,
    /// Positive root of the DPPA stability quadratic.
    pub eta_dppa: f64,
    pub xstar: Vec<f64>,
}

impl InstanceConstants {
    pub fn compute(costs: &[QuadraticCost], m: &MixingMatrix) -> Result<Self> {
        check_costs(costs, Some(m))?;
        let l_smooth = max_smoothness(costs);
        let alpha = strong_convexity_alpha(costs)?;
        let xstar = solve_global_optimum(costs)?;
        let d_const = gradient_spread(costs, &xstar);
        let eta_c = dgd_stability_threshold(l_smooth, m.lambda_min())?;
        let eta_dppa = dppa_stability_threshold(alpha, l_smooth, m.rho_w())?;
        Ok(InstanceConstants {
            l_smooth,
            alpha,
            d_const,
            rho_w: m.rho_w(),
            lambda_min: m.lambda_min(),
            eta_c,
            eta_dppa,
            xstar,
        })
    }
}

/// Constants report that tolerates degenerate instances: when the aggregate
/// Hessian is singular, `alpha` is reported as computed (about 0) and the
/// optimizer-dependent fields are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    #[serde(rename = "L")]
    pub l_smooth: f64,
    pub alpha: f64,
    #[serde(rename = "D")]
    pub d_const: Option<f64>,
    pub rho_w: f64,
    pub lambda_min: f64,
    pub eta_c: Option<f64>,
    pub eta_dppa: Option<f64>,
    pub xstar: Option<Vec<f64>>,
}

impl AnalysisReport {
    pub fn constants(&self) -> Option<InstanceConstants> {
        Some(InstanceConstants {
            l_smooth: self.l_smooth,
            alpha: self.alpha,
            d_const: self.d_const?,
            rho_w: self.rho_w,
            lambda_min: self.lambda_min,
            eta_c: self.eta_c?,
            eta_dppa: self.eta_dppa?,
            xstar: self.xstar.clone()?,
        })
    }

    /// Whether the strong-convexity-based checks apply to this instance.
    pub fn bound_checks_enabled(&self) -> bool {
        self.xstar.is_some()
    }
}

pub fn analyze(costs: &[QuadraticCost], m: &MixingMatrix) -> Result<AnalysisReport> {
    check_costs(costs, Some(m))?;
    match InstanceConstants::compute(costs, m) {
        Ok(c) => Ok(AnalysisReport {
            l_smooth: c.l_smooth,
            alpha: c.alpha,
            d_const: Some(c.d_const),
            rho_w: c.rho_w,
            lambda_min: c.lambda_min,
            eta_c: Some(c.eta_c),
            eta_dppa: Some(c.eta_dppa),
            xstar: Some(c.xstar),
        }),
        Err(Error::SingularHessian { alpha }) => {
            let l_smooth = max_smoothness(costs);
            Ok(AnalysisReport {
                l_smooth,
                alpha,
                d_const: None,
                rho_w: m.rho_w(),
                lambda_min: m.lambda_min(),
                eta_c: (l_smooth > 0.0).then(|| (1.0 + m.lambda_min()) / l_smooth),
                eta_dppa: None,
                xstar: None,
            })
        }
        Err(e) => Err(e),
    }
}

fn check_costs(costs: &[QuadraticCost], m: Option<&MixingMatrix>) -> Result<usize> {
    let first = costs
        .first()
        .ok_or_else(|| Error::InvalidArgument("need at least one cost".into()))?;
    let d = first.dim();
    if let Some(bad) = costs.iter().find(|c| c.dim() != d) {
        return Err(Error::dims(
            format!("cost dimension {d}"),
            format!("{}", bad.dim()),
        ));
    }
    if let Some(m) = m {
        if m.n() != costs.len() {
            return Err(Error::dims(
                format!("{} costs", m.n()),
                format!("{}", costs.len()),
            ));
        }
    }
    Ok(d)
}

fn max_smoothness(costs: &[QuadraticCost]) -> f64 {
    costs.iter().fold(0.0_f64, |acc, c| acc.max(c.smoothness()))
}

/// `max_i ||∇f_i(x)||`.
pub fn gradient_spread<C: CostFunction>(costs: &[C], x: &[f64]) -> f64 {
    costs
        .iter()
        .fold(0.0_f64, |acc, c| acc.max(linalg::norm(&c.gradient(x))))
}

fn aggregate(costs: &[QuadraticCost]) -> (Mat, Vec<f64>) {
    let d = costs[0].dim();
    let mut h = Mat::zeros(d, d);
    let mut b = vec![0.0; d];
    for c in costs {
        h = h.add(&c.hessian()).expect("dimensions checked");
        linalg::axpy(1.0, &c.linear_term(), &mut b);
    }
    (h, b)
}

/// Smallest eigenvalue of `(1/n) Σ 2c_i A_iᵀA_i`.
pub fn strong_convexity_alpha(costs: &[QuadraticCost]) -> Result<f64> {
    check_costs(costs, None)?;
    let (h, _) = aggregate(costs);
    let avg = h.scale(1.0 / costs.len() as f64);
    Ok(linalg::symmetric_eigenvalues(&avg)?[0])
}

/// Minimizer of `Σ f_i` from the normal equations.
pub fn solve_global_optimum(costs: &[QuadraticCost]) -> Result<Vec<f64>> {
    check_costs(costs, None)?;
    let (h, b) = aggregate(costs);
    let alpha_sum = linalg::symmetric_eigenvalues(&h)?[0];
    let scale = h.max_abs().max(1.0);
    if alpha_sum <= SINGULAR_REL_TOL * scale {
        return Err(Error::SingularHessian {
            alpha: alpha_sum / costs.len() as f64,
        });
    }
    let chol = Cholesky::new(&h).map_err(|_| Error::SingularHessian {
        alpha: alpha_sum / costs.len() as f64,
    })?;
    solve_refined(&h, &chol, &b)
}

/// Cholesky solve plus one step of iterative refinement.
fn solve_refined(a: &Mat, chol: &Cholesky, b: &[f64]) -> Result<Vec<f64>> {
    let mut x = chol.solve(b)?;
    let ax = a.matvec(&x)?;
    let r = linalg::sub(b, &ax);
    let dx = chol.solve(&r)?;
    linalg::axpy(1.0, &dx, &mut x);
    Ok(x)
}

/// `(1 + λ_min(W)) / L`.
pub fn dgd_stability_threshold(l: f64, lambda_min: f64) -> Result<f64> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "L must be positive, got {l}"
        )));
    }
    Ok((1.0 + lambda_min) / l)
}

/// Left side minus right side of the DPPA stepsize condition:
/// `q(η) = η²(α² + αL) + η(α + L - (1-ρ)α²/L) - (1-ρ)α/L`.
/// The condition holds exactly where `q(η) < 0`.
pub fn stability_quadratic(eta: f64, alpha: f64, l: f64, rho_w: f64) -> f64 {
    let (a, b, c) = stability_coefficients(alpha, l, rho_w);
    (a * eta + b) * eta - c
}

fn stability_coefficients(alpha: f64, l: f64, rho_w: f64) -> (f64, f64, f64) {
    let gap = 1.0 - rho_w;
    (
        alpha * alpha + alpha * l,
        alpha + l - gap * alpha * alpha / l,
        gap * alpha / l,
    )
}

/// Positive root of [`stability_quadratic`]; the DPPA condition holds for
/// every `η` in `(0, root)`.
pub fn dppa_stability_threshold(alpha: f64, l: f64, rho_w: f64) -> Result<f64> {
    if !(alpha > 0.0 && l.is_finite() && alpha <= l * (1.0 + 1e-9)) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < alpha <= L, got alpha = {alpha}, L = {l}"
        )));
    }
    if !((0.0..1.0).contains(&rho_w)) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= rho_w < 1, got {rho_w}"
        )));
    }
    let (a, b, c) = stability_coefficients(alpha, l, rho_w);
    // 2c / (b + sqrt(b² + 4ac)) avoids cancellation when 4ac << b².
    Ok(2.0 * c / (b + (b * b + 4.0 * a * c).sqrt()))
}

/// Assembles `K = blockdiag(∇²f_k) + (1/η)(I - W) ⊗ I_d` and the stacked
/// linear terms, so `∇F_η(x) = K x - b`.
fn penalized_system(hessians: &[Mat], linear: &[Vec<f64>], w: &Mat, eta: f64) -> (Mat, Vec<f64>) {
    let n = hessians.len();
    let d = hessians[0].rows();
    let mut k = Mat::zeros(n * d, n * d);
    let inv_eta = 1.0 / eta;
    for (blk, h) in hessians.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                k[(blk * d + i, blk * d + j)] = h[(i, j)];
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            let coupling = if a == b { 1.0 - w[(a, b)] } else { -w[(a, b)] } * inv_eta;
            if coupling == 0.0 {
                continue;
            }
            for i in 0..d {
                k[(a * d + i, b * d + i)] += coupling;
            }
        }
    }
    let rhs = linear.iter().flatten().copied().collect();
    (k, rhs)
}

fn check_network(costs: &[QuadraticCost], m: &MixingMatrix, eta: f64) -> Result<usize> {
    check_eta(eta)?;
    check_costs(costs, Some(m))
}

/// Stationary point of `F_η(x) = Σ f_k(x_k) + xᵀ(I - W)x / (2η)`, returned
/// as an `n × d` matrix. This is the fixed point of the DPPA map.
pub fn solve_network_fixed_point(
    costs: &[QuadraticCost],
    m: &MixingMatrix,
    eta: f64,
) -> Result<Mat> {
    let d = check_network(costs, m, eta)?;
    let hess: Vec<Mat> = costs.iter().map(QuadraticCost::hessian).collect();
    let lin: Vec<Vec<f64>> = costs.iter().map(QuadraticCost::linear_term).collect();
    let (k, rhs) = penalized_system(&hess, &lin, m.w(), eta);
    let chol = Cholesky::new(&k).map_err(|_| Error::SingularHessian { alpha: 0.0 })?;
    let x = solve_refined(&k, &chol, &rhs)?;
    Mat::from_row_major(costs.len(), d, x)
}

/// `||∇F_η(x)||` for a stacked `n × d` point.
pub fn network_stationarity_residual(
    costs: &[QuadraticCost],
    m: &MixingMatrix,
    eta: f64,
    x: &Mat,
) -> Result<f64> {
    check_network(costs, m, eta)?;
    let wx = m.mix(x)?;
    let mut acc = 0.0;
    for (k, c) in costs.iter().enumerate() {
        let g = c.gradient(x.row(k));
        for (j, gj) in g.iter().enumerate() {
            let r = gj + (x[(k, j)] - wx[(k, j)]) / eta;
            acc += r * r;
        }
    }
    Ok(acc.sqrt())
}

/// Whether `F_η` is bounded below and attains its minimum: its Hessian is
/// positive semidefinite and the stationarity system is consistent.
pub fn check_f_eta_bounded_below(
    costs: &[QuadraticCost],
    m: &MixingMatrix,
    eta: f64,
) -> Result<bool> {
    check_network(costs, m, eta)?;
    let hess: Vec<Mat> = costs.iter().map(QuadraticCost::hessian).collect();
    let lin: Vec<Vec<f64>> = costs.iter().map(QuadraticCost::linear_term).collect();
    f_eta_bounded_below(&hess, &lin, m.w(), eta)
}

pub(crate) fn f_eta_bounded_below(
    hessians: &[Mat],
    linear: &[Vec<f64>],
    w: &Mat,
    eta: f64,
) -> Result<bool> {
    let (k, rhs) = penalized_system(hessians, linear, w, eta);
    let eig = linalg::symmetric_eigen(&k)?;
    let scale = eig.values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let tol = 1e-10 * scale;
    if eig.values[0] < -tol {
        return Ok(false);
    }
    let b_norm = linalg::norm(&rhs).max(1.0);
    let dim = rhs.len();
    for (idx, &lambda) in eig.values.iter().enumerate() {
        if lambda.abs() > tol {
            break;
        }
        let proj = (0..dim).fold(0.0, |acc, r| acc + eig.vectors[(r, idx)] * rhs[r]);
        if proj.abs() > 1e-9 * b_norm {
            return Ok(false);
        }
    }
    Ok(true)
}

fn pow_u(base: f64, t: u64) -> f64 {
    match i32::try_from(t) {
        Ok(k) => base.powi(k),
        Err(_) => base.powf(t as f64),
    }
}

/// Upper bound on `A_t = ||x̄(t) - x*||`:
///
/// `A_0/(1+ηα)^t + tηL·B_0·ρ/(1+ηα)·max(ρ, 1/(1+ηα))^(t-1) + ηL(2RL+D)/(α(1-ρ))`
///
/// with the middle term taken as 0 at `t = 0`.
pub fn optimality_bound(
    t: u64,
    consts: &InstanceConstants,
    eta: f64,
    a0: f64,
    b0: f64,
    r: f64,
) -> f64 {
    let InstanceConstants {
        l_smooth: l,
        alpha,
        d_const: d,
        rho_w: rho,
        ..
    } = *consts;
    let q = 1.0 + eta * alpha;
    let decay = a0 / pow_u(q, t);
    let transient = if t == 0 {
        0.0
    } else {
        t as f64 * eta * l * b0 * rho / q * pow_u(rho.max(1.0 / q), t - 1)
    };
    let floor = eta * l * (2.0 * r * l + d) / (alpha * (1.0 - rho));
    decay + transient + floor
}

/// Upper bound on `B_t`: `ρ^t B_0 + η(2RL+D)/(1-ρ)`.
pub fn consensus_bound(t: u64, consts: &InstanceConstants, eta: f64, b0: f64, r: f64) -> f64 {
    let rho = consts.rho_w;
    pow_u(rho, t) * b0 + eta * (2.0 * r * consts.l_smooth + consts.d_const) / (1.0 - rho)
}

/// Denominator of the last entry of the radius formula,
/// `(α/L)(1 - ηL - η²L²/(1+ηα)) - (α/L)ρ - ηL/(1+ηα)`.
/// Positive exactly when the DPPA stepsize condition holds strictly.
pub fn radius_denominator(alpha: f64, l: f64, rho_w: f64, eta: f64) -> f64 {
    let c = alpha / l;
    let q = 1.0 + eta * alpha;
    c * (1.0 - eta * l - eta * eta * l * l / q) - c * rho_w - eta * l / q
}

/// `R = max{A_0, (L/α)B_0, (L/α)B_1, ηD / denominator}`, the uniform bound
/// with `A_t <= R` and `B_t <= (α/L) R`.
pub fn radius_r(consts: &InstanceConstants, eta: f64, a0: f64, b0: f64, b1: f64) -> Result<f64> {
    check_eta(eta)?;
    let l = consts.l_smooth;
    let alpha = consts.alpha;
    let den = radius_denominator(alpha, l, consts.rho_w, eta);
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator { value: den });
    }
    let ratio = l / alpha;
    Ok(a0
        .max(ratio * b0)
        .max(ratio * b1)
        .max(eta * consts.d_const / den))
}
