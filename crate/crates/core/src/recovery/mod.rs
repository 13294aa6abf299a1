//! Sparse spectrum recovery from compressed measurements.
//!
//! Three solvers share one operator, `A = Θ · F⁻¹ · diag(h)`:
//!
//! * [`solve_bp`]: basis pursuit, `min ‖s‖₁ s.t. A s = z`, by ADMM.
//! * [`solve_lasso`]: `min ‖s‖₁ + λ‖z − A s‖₂²`, also by ADMM. Note that λ
//!   weights the *data* term here, so small λ drives the solution to zero and
//!   large λ approaches basis pursuit.
//! * [`solve_omp`]: orthogonal matching pursuit.

pub mod dft;
mod admm;
mod omp;
mod operator;

pub use admm::{solve_bp, solve_lasso};
pub use omp::solve_omp;
pub use operator::RecoveryOperator;
pub(crate) use operator::GramSolver;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::MeasurementRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Bp,
    Lasso,
    Omp,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Bp => "bp",
            SolverKind::Lasso => "lasso",
            SolverKind::Omp => "omp",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bp" => Ok(SolverKind::Bp),
            "lasso" => Ok(SolverKind::Lasso),
            "omp" => Ok(SolverKind::Omp),
            other => Err(Error::Parse(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Data-term weight for LASSO. `None` picks `1e6 / ‖z‖₂`.
    pub lambda: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub omp_sparsity: usize,
    /// Try a least-squares refit on the detected support during BP.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            lambda: None,
            tol: 1e-6,
            max_iter: 2000,
            omp_sparsity: 64,
            polish: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidConfig("lambda must be finite and >= 0".into()));
            }
        }
        Ok(())
    }
}

/// Recovered `N`-bin spectrum plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub s_hat: Vec<Complex64>,
    /// `‖z − A ŝ‖₂`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub solver: SolverKind,
    pub converged: bool,
    pub sample_rate_hz: f64,
    /// Per-iteration progress: measurement residual for OMP, primal
    /// residual `‖x − v‖` for the ADMM solvers.
    pub trace: Vec<f64>,
}

impl SpectrumEstimate {
    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz / self.s_hat.len() as f64
    }

    pub fn l1_norm(&self) -> f64 {
        self.s_hat.iter().map(|v| v.norm()).sum()
    }
}

/// One JSON-lines diagnostic record per solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub solver: SolverKind,
    pub iterations: usize,
    pub converged: bool,
    pub residual_norm: f64,
    pub l1_norm: f64,
    pub n_bins: usize,
    pub n_measurements: usize,
}

impl SolveDiagnostics {
    pub fn new(est: &SpectrumEstimate, n_measurements: usize) -> Self {
        SolveDiagnostics {
            solver: est.solver,
            iterations: est.iterations,
            converged: est.converged,
            residual_norm: est.residual_norm,
            l1_norm: est.l1_norm(),
            n_bins: est.s_hat.len(),
            n_measurements,
        }
    }
}

pub fn solve(kind: SolverKind, z: &MeasurementRecord, op: &RecoveryOperator, opts: &SolverOptions) -> Result<SpectrumEstimate> {
    match kind {
        SolverKind::Bp => solve_bp(z, op, opts),
        SolverKind::Lasso => solve_lasso(z, op, opts),
        SolverKind::Omp => solve_omp(z, op, opts),
    }
}

pub(crate) fn check_dims(z: &MeasurementRecord, op: &RecoveryOperator) -> Result<()> {
    if z.z.len() != op.rows() {
        return Err(Error::DimensionMismatch {
            expected: op.rows(),
            got: z.z.len(),
        });
    }
    if z.sensing.spec() != op.sensing().spec() {
        return Err(Error::InvalidConfig(
            "measurement record and operator use different sensing matrices".into(),
        ));
    }
    Ok(())
}

pub(crate) fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn residual(op: &RecoveryOperator, z: &[Complex64], s: &[Complex64]) -> Result<f64> {
    let az = op.forward(s)?;
    Ok(az.iter().zip(z).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>().sqrt())
}
