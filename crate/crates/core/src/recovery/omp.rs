use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{check_dims, norm2, residual, RecoveryOperator, SolverKind, SolverOptions, SpectrumEstimate};
use crate::error::{Error, Result};
use crate::frontend::MeasurementRecord;

/// Orthogonal matching pursuit.
///
/// Each iteration adds the atom with the largest `|Aᴴ r|` and refits all
/// selected atoms by least squares. Stops after `omp_sparsity` atoms or once
/// `‖r‖₂ ≤ tol·‖z‖₂`.
pub fn solve_omp(z: &MeasurementRecord, op: &RecoveryOperator, opts: &SolverOptions) -> Result<SpectrumEstimate> {
    check_dims(z, op)?;
    opts.validate()?;
    if opts.omp_sparsity == 0 {
        return Err(Error::InvalidConfig("omp_sparsity must be >= 1".into()));
    }
    let n = op.dft_size();
    let m = op.rows();
    let zero = Complex64::new(0.0, 0.0);
    let z_norm = norm2(&z.z);
    let target = opts.tol * z_norm;

    let max_atoms = opts.omp_sparsity.min(m).min(n);
    let mut selected: Vec<usize> = Vec::with_capacity(max_atoms);
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(max_atoms);
    let mut gram = DMatrix::<Complex64>::zeros(0, 0);
    let mut coeffs = DVector::<Complex64>::zeros(0);
    let mut r = z.z.clone();
    let mut trace = Vec::new();
    let mut converged = norm2(&r) <= target;

    while !converged && selected.len() < max_atoms {
        let corr = op.adjoint(&r)?;
        let mut best = None;
        let mut best_mag = -1.0;
        for (j, c) in corr.iter().enumerate() {
            if c.norm() > best_mag && !selected.contains(&j) {
                best_mag = c.norm();
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        let col = op.column(j)?;

        // Grow the Gram matrix of the selected atoms by one row/column.
        let k = selected.len();
        let mut g = DMatrix::<Complex64>::zeros(k + 1, k + 1);
        g.view_mut((0, 0), (k, k)).copy_from(&gram);
        for (i, other) in columns.iter().enumerate() {
            let ip: Complex64 = other.iter().zip(&col).map(|(a, b)| a.conj() * b).sum();
            g[(i, k)] = ip;
            g[(k, i)] = ip.conj();
        }
        g[(k, k)] = Complex64::new(col.iter().map(|c| c.norm_sqr()).sum(), 0.0);

        let Some(chol) = g.clone().cholesky() else {
            // New atom is numerically dependent on the current ones.
            break;
        };
        selected.push(j);
        columns.push(col);
        gram = g;

        let rhs = DVector::from_iterator(
            columns.len(),
            columns
                .iter()
                .map(|c| c.iter().zip(&z.z).map(|(a, b)| a.conj() * b).sum::<Complex64>()),
        );
        coeffs = chol.solve(&rhs);

        r = z.z.clone();
        for (c, col) in columns.iter().enumerate() {
            for (ri, a) in r.iter_mut().zip(col) {
                *ri -= a * coeffs[c];
            }
        }
        let rn = norm2(&r);
        trace.push(rn);
        converged = rn <= target;
    }

    let mut s_hat = vec![zero; n];
    for (c, &j) in selected.iter().enumerate() {
        s_hat[j] = coeffs[c];
    }
    let residual_norm = residual(op, &z.z, &s_hat)?;
    Ok(SpectrumEstimate {
        s_hat,
        residual_norm,
        iterations: selected.len(),
        solver: SolverKind::Omp,
        // Stopping on the sparsity budget counts as success.
        converged: converged || selected.len() == max_atoms,
        sample_rate_hz: z.sample_rate_hz,
        trace,
    })
}
