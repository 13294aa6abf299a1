//! ADMM for basis pursuit and the λ-on-data LASSO.
//!
//! Both problems are split as `min ‖v‖₁ + g(x)  s.t.  x = v` where `g` is the
//! indicator of `{A x = z}` (BP) or `λ‖z − A x‖²` (LASSO). Complex entries are
//! shrunk as a real/imaginary pair, i.e. by magnitude. The x-update only needs
//! `(δ I + A Aᴴ)⁻¹`, which is a scalar for row-subsampling operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{check_dims, norm2, residual, GramSolver, RecoveryOperator, SolverKind, SolverOptions, SpectrumEstimate};
use crate::error::Result;
use crate::frontend::MeasurementRecord;

const RHO_BALANCE: f64 = 10.0;
const RHO_STEP: f64 = 2.0;
const POLISH_STABLE_ITERS: usize = 5;
const POLISH_MAX_SUPPORT: usize = 256;

#[derive(Clone, Copy)]
enum Mode {
    Bp,
    Lasso { lambda: f64 },
}

impl Mode {
    fn delta(self, rho: f64) -> f64 {
        match self {
            Mode::Bp => 0.0,
            Mode::Lasso { lambda } => rho / (2.0 * lambda),
        }
    }
}

/// Basis pursuit: `min ‖s‖₁` subject to `A s = z`.
///
/// Returns the feasible ADMM iterate. When the iterate's support settles on a
/// small set, a least-squares refit on that support is tried and kept if it is
/// exactly feasible with no larger ℓ1 norm. A non-converged run still returns
/// `Ok` with `converged = false`.
pub fn solve_bp(z: &MeasurementRecord, op: &RecoveryOperator, opts: &SolverOptions) -> Result<SpectrumEstimate> {
    check_dims(z, op)?;
    opts.validate()?;
    if op.rows() == op.dft_size() {
        // Square and invertible: the constraint set is a single point.
        let gram = GramSolver::new(op, 0.0)?;
        let s_hat = op.adjoint(&gram.solve(op, &z.z)?)?;
        return finish(op, z, s_hat, 0, true, SolverKind::Bp, Vec::new());
    }
    run(z, op, opts, Mode::Bp)
}

/// `min ‖s‖₁ + λ‖z − A s‖₂²`, with λ defaulting to `1e6 / ‖z‖₂`.
pub fn solve_lasso(z: &MeasurementRecord, op: &RecoveryOperator, opts: &SolverOptions) -> Result<SpectrumEstimate> {
    check_dims(z, op)?;
    opts.validate()?;
    let z_norm = norm2(&z.z);
    let lambda = opts.lambda.unwrap_or(if z_norm > 0.0 { 1e6 / z_norm } else { 1.0 });
    if lambda == 0.0 {
        let n = op.dft_size();
        return finish(op, z, vec![Complex64::new(0.0, 0.0); n], 0, true, SolverKind::Lasso, Vec::new());
    }
    run(z, op, opts, Mode::Lasso { lambda })
}

fn soft_threshold(a: Complex64, t: f64) -> Complex64 {
    let mag = a.norm();
    if mag <= t {
        Complex64::new(0.0, 0.0)
    } else {
        a * (1.0 - t / mag)
    }
}

fn run(z: &MeasurementRecord, op: &RecoveryOperator, opts: &SolverOptions, mode: Mode) -> Result<SpectrumEstimate> {
    let n = op.dft_size();
    let solver = match mode {
        Mode::Bp => SolverKind::Bp,
        Mode::Lasso { .. } => SolverKind::Lasso,
    };
    let zero = Complex64::new(0.0, 0.0);
    let z_norm = norm2(&z.z);
    if z_norm == 0.0 {
        return finish(op, z, vec![zero; n], 0, true, solver, Vec::new());
    }

    let atz = op.adjoint(&z.z)?;
    let scale = atz.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut rho = 10.0 / scale;
    let mut gram = GramSolver::new(op, mode.delta(rho))?;
    let eps_abs = 1e-3 * opts.tol * z_norm;

    let mut x = vec![zero; n];
    let mut v = vec![zero; n];
    let mut u = vec![zero; n];
    let mut w = vec![zero; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let mut support: Vec<usize> = Vec::new();
    let mut stable = 0usize;
    let mut last_polished: Vec<usize> = Vec::new();

    for it in 1..=opts.max_iter {
        iterations = it;
        for i in 0..n {
            w[i] = v[i] - u[i];
        }
        match mode {
            Mode::Bp => {
                let mut r = op.forward(&w)?;
                for (ri, zi) in r.iter_mut().zip(&z.z) {
                    *ri -= zi;
                }
                let corr = op.adjoint(&gram.solve(op, &r)?)?;
                for i in 0..n {
                    x[i] = w[i] - corr[i];
                }
            }
            Mode::Lasso { lambda } => {
                let b: Vec<Complex64> = (0..n).map(|i| atz[i] * (2.0 * lambda) + w[i] * rho).collect();
                let corr = op.adjoint(&gram.solve(op, &op.forward(&b)?)?)?;
                for i in 0..n {
                    x[i] = (b[i] - corr[i]) / rho;
                }
            }
        }

        let t = 1.0 / rho;
        let mut dv = 0.0;
        let mut r_sq = 0.0;
        for i in 0..n {
            let nv = soft_threshold(x[i] + u[i], t);
            dv += (nv - v[i]).norm_sqr();
            v[i] = nv;
            u[i] += x[i] - nv;
            r_sq += (x[i] - nv).norm_sqr();
        }
        let r_norm = r_sq.sqrt();
        let s_norm = rho * dv.sqrt();
        trace.push(r_norm);

        let eps_pri = opts.tol * norm2(&x).max(norm2(&v)) + eps_abs;
        let eps_dual = opts.tol * rho * norm2(&u) + eps_abs;
        if r_norm <= eps_pri && s_norm <= eps_dual {
            converged = true;
            break;
        }

        if let Mode::Bp = mode {
            if opts.polish {
                let current: Vec<usize> = (0..n).filter(|&i| v[i] != zero).collect();
                if current == support {
                    stable += 1;
                } else {
                    support = current;
                    stable = 0;
                }
                let limit = (op.rows() / 2).min(POLISH_MAX_SUPPORT);
                if stable >= POLISH_STABLE_ITERS && !support.is_empty() && support.len() <= limit && support != last_polished {
                    last_polished = support.clone();
                    if let Some(p) = polish(op, &z.z, &support, z_norm, opts.tol, l1(&x))? {
                        return finish(op, z, p, it, true, solver, trace);
                    }
                }
            }
        }

        if it % 5 == 0 {
            let factor = if r_norm > RHO_BALANCE * s_norm {
                Some(RHO_STEP)
            } else if s_norm > RHO_BALANCE * r_norm {
                Some(1.0 / RHO_STEP)
            } else {
                None
            };
            if let Some(f) = factor {
                rho *= f;
                for ui in u.iter_mut() {
                    *ui /= f;
                }
                gram.set_delta(mode.delta(rho))?;
            }
        }
    }

    let s_hat = match mode {
        Mode::Bp => x,
        Mode::Lasso { .. } => v,
    };
    finish(op, z, s_hat, iterations, converged, solver, trace)
}

fn l1(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).sum()
}

/// Least-squares refit on `support`; `Some` only if the refit reproduces `z`
/// to well within tolerance and does not increase the ℓ1 norm.
fn polish(
    op: &RecoveryOperator,
    z: &[Complex64],
    support: &[usize],
    z_norm: f64,
    tol: f64,
    l1_bound: f64,
) -> Result<Option<Vec<Complex64>>> {
    let m = op.rows();
    let k = support.len();
    let mut a = DMatrix::<Complex64>::zeros(m, k);
    for (c, &j) in support.iter().enumerate() {
        for (r, val) in op.column(j)?.into_iter().enumerate() {
            a[(r, c)] = val;
        }
    }
    let ah = a.adjoint();
    let Some(chol) = (&ah * &a).cholesky() else {
        return Ok(None);
    };
    let coeffs = chol.solve(&(&ah * DVector::from_column_slice(z)));
    let mut s = vec![Complex64::new(0.0, 0.0); op.dft_size()];
    for (c, &j) in support.iter().enumerate() {
        s[j] = coeffs[c];
    }
    let res = residual(op, z, &s)?;
    if res <= 1e-3 * tol * z_norm && l1(&s) <= l1_bound * (1.0 + 1e-9) {
        Ok(Some(s))
    } else {
        Ok(None)
    }
}

fn finish(
    op: &RecoveryOperator,
    z: &MeasurementRecord,
    s_hat: Vec<Complex64>,
    iterations: usize,
    converged: bool,
    solver: SolverKind,
    trace: Vec<f64>,
) -> Result<SpectrumEstimate> {
    let residual_norm = residual(op, &z.z, &s_hat)?;
    Ok(SpectrumEstimate {
        s_hat,
        residual_norm,
        iterations,
        solver,
        converged,
        sample_rate_hz: z.sample_rate_hz,
        trace,
    })
}
