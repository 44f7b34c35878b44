//! Doubly stochastic mixing matrices and their spectral quantities.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::netgraph::CommGraph;

/// Tolerance for row/column sums and symmetry.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// How off-diagonal weights are derived from node degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRule {
    /// `w_ij = 1 / max(deg i, deg j)`. The node of largest degree always ends
    /// up with `w_ii = 0`.
    MaxDegree,
    /// `w_ij = 1 / (1 + max(deg i, deg j))`. Every diagonal entry is at least
    /// `1 / (1 + deg i)`.
    #[default]
    MaxDegreePlusOne,
}

impl WeightRule {
    fn edge_weight(self, di: usize, dj: usize) -> f64 {
        let m = di.max(dj) as f64;
        match self {
            WeightRule::MaxDegree => 1.0 / m,
            WeightRule::MaxDegreePlusOne => 1.0 / (m + 1.0),
        }
    }
}

impl fmt::Display for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightRule::MaxDegree => "max-degree",
            WeightRule::MaxDegreePlusOne => "max-degree-plus-one",
        })
    }
}

impl std::str::FromStr for WeightRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-degree" => Ok(WeightRule::MaxDegree),
            "max-degree-plus-one" => Ok(WeightRule::MaxDegreePlusOne),
            other => Err(Error::InvalidArgument(format!(
                "unknown weight rule {other:?}"
            ))),
        }
    }
}

/// Symmetric mixing matrix `W` with cached `rho_w = ||W - 11ᵀ/n||₂` and
/// `lambda_min = λ_min(W)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixing", into = "RawMixing")]
pub struct MixingMatrix {
    w: Mat,
    rho_w: f64,
    lambda_min: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMixing {
    w: Mat,
    rho_w: f64,
    lambda_min: f64,
}

impl TryFrom<RawMixing> for MixingMatrix {
    type Error = Error;
    fn try_from(raw: RawMixing) -> Result<Self> {
        if raw.w.rows() > crate::netgraph::MAX_AGENTS {
            return Err(Error::InvalidArgument("mixing matrix is too large".into()));
        }
        let m = MixingMatrix::from_dense(raw.w)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
        if !close(raw.rho_w, m.rho_w) || !close(raw.lambda_min, m.lambda_min) {
            return Err(Error::Parse(format!(
                "stored spectral quantities (rho_w = {}, lambda_min = {}) disagree with W \
                 (rho_w = {}, lambda_min = {})",
                raw.rho_w, raw.lambda_min, m.rho_w, m.lambda_min
            )));
        }
        Ok(m)
    }
}

impl From<MixingMatrix> for RawMixing {
    fn from(m: MixingMatrix) -> Self {
        RawMixing {
            w: m.w,
            rho_w: m.rho_w,
            lambda_min: m.lambda_min,
        }
    }
}

/// A reason a matrix fails the doubly stochastic / positive-diagonal contract.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotSquare { rows: usize, cols: usize },
    NonFinite { row: usize, col: usize },
    Asymmetric { row: usize, col: usize },
    NegativeEntry { row: usize, col: usize, value: f64 },
    RowSum { row: usize, sum: f64 },
    ColumnSum { col: usize, sum: f64 },
    ZeroDiagonal { node: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            Violation::NonFinite { row, col } => write!(f, "non-finite entry at ({row}, {col})"),
            Violation::Asymmetric { row, col } => write!(f, "asymmetric at ({row}, {col})"),
            Violation::NegativeEntry { row, col, value } => {
                write!(f, "negative entry {value} at ({row}, {col})")
            }
            Violation::RowSum { row, sum } => write!(f, "row sum ≠ 1 at row {row} (sum = {sum})"),
            Violation::ColumnSum { col, sum } => {
                write!(f, "column sum ≠ 1 at column {col} (sum = {sum})")
            }
            Violation::ZeroDiagonal { node } => write!(f, "zero diagonal at node {node}"),
        }
    }
}

impl MixingMatrix {
    /// Wraps a dense symmetric matrix and computes its spectral quantities.
    /// Only symmetry is enforced here; see [`validate_weights`] for the
    /// full stochasticity contract.
    pub fn from_dense(w: Mat) -> Result<Self> {
        if !w.is_square() || w.rows() == 0 {
            return Err(Error::dims(
                "non-empty square matrix",
                format!("{}x{}", w.rows(), w.cols()),
            ));
        }
        let (rho_w, lambda_min) = spectral_gap_quantities(&w)?;
        Ok(MixingMatrix {
            w,
            rho_w,
            lambda_min,
        })
    }

    pub fn n(&self) -> usize {
        self.w.rows()
    }

    pub fn w(&self) -> &Mat {
        &self.w
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    pub fn rho_w(&self) -> f64 {
        self.rho_w
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// `W x` for a stacked `n × d` state.
    pub fn mix(&self, x: &Mat) -> Result<Mat> {
        if x.rows() != self.n() {
            return Err(Error::dims(
                format!("{} rows", self.n()),
                format!("{} rows", x.rows()),
            ));
        }
        self.w.matmul(x)
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_weights(&self.w)
    }

    /// Off-diagonal sparsity agrees with the graph.
    pub fn matches_graph(&self, g: &CommGraph) -> bool {
        if g.n() != self.n() {
            return false;
        }
        (0..self.n()).all(|i| {
            (0..self.n())
                .filter(|&j| j != i)
                .all(|j| (self.w[(i, j)] > 0.0) == g.has_edge(i, j))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mixing serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Metropolis weights with the plain max-degree rule,
/// `w_ij = 1 / max(deg i, deg j)` on edges and `w_ii = 1 - Σ_j w_ij`.
pub fn metropolis_weights(g: &CommGraph) -> Result<MixingMatrix> {
    metropolis_weights_with(g, WeightRule::MaxDegree)
}

pub fn metropolis_weights_with(g: &CommGraph, rule: WeightRule) -> Result<MixingMatrix> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.n();
    let mut w = Mat::zeros(n, n);
    for &(i, j) in g.edges() {
        let v = rule.edge_weight(g.degree(i), g.degree(j));
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = g.neighbors(i).iter().fold(0.0, |acc, &j| acc + w[(i, j)]);
        // Clamp the rounding residue of 1 - deg * (1/deg).
        let diag = 1.0 - off;
        w[(i, i)] = if diag.abs() < STOCHASTIC_TOL {
            0.0
        } else {
            diag
        };
    }
    MixingMatrix::from_dense(w)
}

/// Lists every way `w` fails to be a symmetric, nonnegative, doubly
/// stochastic matrix with a strictly positive diagonal. Empty means valid.
pub fn validate_weights(w: &Mat) -> Vec<Violation> {
    let mut out = Vec::new();
    if !w.is_square() {
        out.push(Violation::NotSquare {
            rows: w.rows(),
            cols: w.cols(),
        });
        return out;
    }
    let n = w.rows();
    for i in 0..n {
        for j in 0..n {
            let v = w[(i, j)];
            if !v.is_finite() {
                out.push(Violation::NonFinite { row: i, col: j });
            } else if v < 0.0 {
                out.push(Violation::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            if j > i && (v - w[(j, i)]).abs() > STOCHASTIC_TOL {
                out.push(Violation::Asymmetric { row: i, col: j });
            }
        }
    }
    for i in 0..n {
        let sum = w.row(i).iter().sum::<f64>();
        if !((sum - 1.0).abs() <= STOCHASTIC_TOL) {
            out.push(Violation::RowSum { row: i, sum });
        }
    }
    for j in 0..n {
        let sum = (0..n).fold(0.0, |acc, i| acc + w[(i, j)]);
        if !((sum - 1.0).abs() <= STOCHASTIC_TOL) {
            out.push(Violation::ColumnSum { col: j, sum });
        }
    }
    for i in 0..n {
        if !(w[(i, i)] > 0.0) {
            out.push(Violation::ZeroDiagonal { node: i });
        }
    }
    out
}

/// `(rho_w, lambda_min)` for a symmetric `W`: the spectral norm of
/// `W - 11ᵀ/n` and the smallest eigenvalue of `W`.
pub fn spectral_gap_quantities(w: &Mat) -> Result<(f64, f64)> {
    if !w.is_square() || w.rows() == 0 {
        return Err(Error::dims(
            "non-empty square matrix",
            format!("{}x{}", w.rows(), w.cols()),
        ));
    }
    let n = w.rows();
    let lambda_min = linalg::symmetric_eigenvalues(w)?[0];
    let mut centered = w.clone();
    let avg = 1.0 / n as f64;
    for i in 0..n {
        for j in 0..n {
            centered[(i, j)] -= avg;
        }
    }
    let ev = linalg::symmetric_eigenvalues(&centered)?;
    let rho_w = ev[0].abs().max(ev[n - 1].abs());
    Ok((rho_w, lambda_min))
}

/// Free-function form of [`MixingMatrix::mix`].
pub fn mix(m: &MixingMatrix, x: &Mat) -> Result<Mat> {
    m.mix(x)
}
