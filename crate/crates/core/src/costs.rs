//! Local cost functions and their proximal maps.
//!
//! The proximal map `prox_{ηf}(v) = argmin_x f(x) + ||x - v||² / (2η)` is the
//! implicit step each agent takes in the distributed proximal point method.
//! Quadratics get a closed form through a Cholesky solve; anything else goes
//! through [`prox_generic`], which is also the oracle for the closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, Mat};

/// Relative tolerance used for the power iteration behind `L_i`.
pub const SMOOTHNESS_TOL: f64 = 1e-10;

/// Optimality tolerance used when a cost has no closed-form prox.
pub const DEFAULT_PROX_TOL: f64 = 1e-11;

pub const PROX_ITERATION_CAP: usize = 1_000_000;

/// A prepared proximal map for one stepsize.
pub type ProxFn<'a> = Box<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'a>;

/// Differentiable local objective `f_i: R^d -> R`.
pub trait CostFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Lipschitz constant of the gradient.
    fn smoothness(&self) -> f64;

    fn prox(&self, v: &[f64], eta: f64) -> Result<Vec<f64>> {
        prox_generic(self, v, eta, DEFAULT_PROX_TOL)
    }

    /// Returns the proximal map for a fixed `eta`, letting implementations
    /// factor once and reuse across rounds.
    fn prepare_prox(&self, eta: f64) -> Result<ProxFn<'_>>
    where
        Self: Sync,
    {
        check_eta(eta)?;
        Ok(Box::new(move |v: &[f64]| self.prox(v, eta)))
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "stepsize must be positive and finite, got {eta}"
        )))
    }
}

/// `f(x) = c ||A x - y||²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuadratic", into = "RawQuadratic")]
pub struct QuadraticCost {
    a: Mat,
    y: Vec<f64>,
    scale: f64,
    /// `A^T A`, cached.
    gram: Mat,
    /// `A^T y`, cached.
    aty: Vec<f64>,
    smoothness: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuadratic {
    a: Mat,
    y: Vec<f64>,
    scale: f64,
}

impl TryFrom<RawQuadratic> for QuadraticCost {
    type Error = Error;
    fn try_from(raw: RawQuadratic) -> Result<Self> {
        QuadraticCost::new(raw.a, raw.y, raw.scale)
    }
}

impl From<QuadraticCost> for RawQuadratic {
    fn from(q: QuadraticCost) -> Self {
        RawQuadratic {
            a: q.a,
            y: q.y,
            scale: q.scale,
        }
    }
}

/// Largest accepted row or column count for a serialized cost matrix.
const MAX_COST_DIM: usize = 4096;

impl QuadraticCost {
    pub fn new(a: Mat, y: Vec<f64>, scale: f64) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::InvalidArgument(
                "cost matrix must be non-empty".into(),
            ));
        }
        if a.rows() > MAX_COST_DIM || a.cols() > MAX_COST_DIM {
            return Err(Error::InvalidArgument("cost matrix is too large".into()));
        }
        if y.len() != a.rows() {
            return Err(Error::dims(
                format!("y of length {}", a.rows()),
                format!("{}", y.len()),
            ));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if !a.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("cost data must be finite".into()));
        }
        let gram = a.gram();
        let aty = a.tr_matvec(&y)?;
        let smoothness =
            2.0 * scale * linalg::power_iteration_max(&gram, SMOOTHNESS_TOL * 1e-3, 1_000_000)?;
        Ok(QuadraticCost {
            a,
            y,
            scale,
            gram,
            aty,
            smoothness,
        })
    }

    /// `c = 1/2` convention, so `L_i = λ_max(AᵀA)`.
    pub fn half(a: Mat, y: Vec<f64>) -> Result<Self> {
        QuadraticCost::new(a, y, 0.5)
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Hessian `2c AᵀA`.
    pub fn hessian(&self) -> Mat {
        self.gram.scale(2.0 * self.scale)
    }

    /// Linear term `2c Aᵀy`, so `∇f(x) = hessian·x - linear_term`.
    pub fn linear_term(&self) -> Vec<f64> {
        self.aty.iter().map(|v| 2.0 * self.scale * v).collect()
    }

    fn prox_system(&self, eta: f64) -> Result<Cholesky> {
        let d = self.dim();
        let mut k = self.gram.scale(2.0 * self.scale * eta);
        for i in 0..d {
            k[(i, i)] += 1.0;
        }
        Cholesky::new(&k)
    }

    fn prox_rhs(&self, v: &[f64], eta: f64) -> Vec<f64> {
        let s = 2.0 * self.scale * eta;
        self.aty.iter().zip(v).map(|(a, vi)| s * a + vi).collect()
    }
}

impl CostFunction for QuadraticCost {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = self.a.matvec(x).expect("dimension checked by caller");
        let res = linalg::sub(&r, &self.y);
        self.scale * linalg::dot(&res, &res)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let gx = self.gram.matvec(x).expect("dimension checked by caller");
        gx.iter()
            .zip(&self.aty)
            .map(|(g, b)| 2.0 * self.scale * (g - b))
            .collect()
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn prox(&self, v: &[f64], eta: f64) -> Result<Vec<f64>> {
        prox_quadratic(self, v, eta)
    }

    fn prepare_prox(&self, eta: f64) -> Result<ProxFn<'_>> {
        check_eta(eta)?;
        let chol = self.prox_system(eta)?;
        let d = self.dim();
        Ok(Box::new(move |v: &[f64]| {
            if v.len() != d {
                return Err(Error::dims(
                    format!("point of length {d}"),
                    format!("{}", v.len()),
                ));
            }
            chol.solve(&self.prox_rhs(v, eta))
        }))
    }
}

/// Closed-form prox of a quadratic: solves `(2cη AᵀA + I) x = 2cη Aᵀy + v`.
pub fn prox_quadratic(q: &QuadraticCost, v: &[f64], eta: f64) -> Result<Vec<f64>> {
    q.prepare_prox(eta)?(v)
}

/// Prox by gradient descent on `φ(x) = f(x) + ||x - v||² / (2η)`, warm-started
/// at `v` with step `1 / (L + 1/η)`. Stops once
/// `||∇f(x) + (x - v)/η|| <= tol (1 + ||v||)`.
pub fn prox_generic<F: CostFunction + ?Sized>(
    f: &F,
    v: &[f64],
    eta: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    check_eta(eta)?;
    if v.len() != f.dim() {
        return Err(Error::dims(
            format!("point of length {}", f.dim()),
            format!("{}", v.len()),
        ));
    }
    let inv_eta = 1.0 / eta;
    let step = 1.0 / (f.smoothness() + inv_eta);
    let target = tol * (1.0 + linalg::norm(v));
    let mut x = v.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..PROX_ITERATION_CAP {
        let g = f.gradient(&x);
        let grad_phi: Vec<f64> = g
            .iter()
            .zip(x.iter().zip(v))
            .map(|(gi, (xi, vi))| gi + (xi - vi) * inv_eta)
            .collect();
        residual = linalg::norm(&grad_phi);
        if residual <= target {
            return Ok(x);
        }
        linalg::axpy(-step, &grad_phi, &mut x);
    }
    Err(Error::ProxDidNotConverge {
        iterations: PROX_ITERATION_CAP,
        residual,
    })
}

/// `||∇f(x⁺) + (x⁺ - v)/η||`, the first-order optimality residual of a prox output.
pub fn prox_residual<F: CostFunction + ?Sized>(f: &F, v: &[f64], x_plus: &[f64], eta: f64) -> f64 {
    let g = f.gradient(x_plus);
    let r: Vec<f64> = g
        .iter()
        .zip(x_plus.iter().zip(v))
        .map(|(gi, (xi, vi))| gi + (xi - vi) / eta)
        .collect();
    linalg::norm(&r)
}

/// `2c·λ_max(AᵀA)` by power iteration.
pub fn smoothness_constant(q: &QuadraticCost) -> f64 {
    q.smoothness()
}

/// `f ≡ 0` on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCost {
    pub dim: usize,
}

impl CostFunction for ZeroCost {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn smoothness(&self) -> f64 {
        0.0
    }
}

/// `f(x) = (α/2)||x||²`, with `prox(v) = v / (1 + ηα)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicQuadratic {
    pub dim: usize,
    pub alpha: f64,
}

impl CostFunction for IsotropicQuadratic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.alpha * linalg::dot(x, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| self.alpha * v).collect()
    }
    fn smoothness(&self) -> f64 {
        self.alpha.abs()
    }
}
