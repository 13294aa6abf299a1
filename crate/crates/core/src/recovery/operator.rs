use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;

use super::dft::{dft_in_place, Direction};
use crate::error::{Error, Result};
use crate::frontend::{SensingKind, SensingMatrix};

/// Composite measurement operator `A = Θ · F⁻¹ · diag(h)` mapping an `N`-bin
/// spectrum to `M` compressed time-domain measurements.
#[derive(Debug, Clone)]
pub struct RecoveryOperator {
    sensing: SensingMatrix,
    channel_gains: Vec<Complex64>,
}

impl RecoveryOperator {
    pub fn new(sensing: SensingMatrix, channel_gains: Vec<Complex64>) -> Result<Self> {
        let n = sensing.cols();
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if channel_gains.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: channel_gains.len(),
            });
        }
        if channel_gains.iter().any(|g| !(g.norm() > 0.0 && g.norm().is_finite())) {
            return Err(Error::InvalidConfig("channel gains must be finite and non-zero".into()));
        }
        Ok(RecoveryOperator { sensing, channel_gains })
    }

    /// Operator with unit channel gains.
    pub fn unit(sensing: SensingMatrix) -> Result<Self> {
        let n = sensing.cols();
        Self::new(sensing, vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn sensing(&self) -> &SensingMatrix {
        &self.sensing
    }

    pub fn channel_gains(&self) -> &[Complex64] {
        &self.channel_gains
    }

    pub fn dft_size(&self) -> usize {
        self.sensing.cols()
    }

    pub fn rows(&self) -> usize {
        self.sensing.rows()
    }

    /// True when `A Aᴴ = I`, i.e. row subsampling with unit-modulus gains.
    pub fn is_tight(&self) -> bool {
        self.sensing.kind() == SensingKind::RandomSubsample
            && self.channel_gains.iter().all(|g| (g.norm_sqr() - 1.0).abs() < 1e-12)
    }

    /// `A s`.
    pub fn forward(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dft_size();
        if s.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: s.len() });
        }
        let mut t: Vec<Complex64> = s.iter().zip(&self.channel_gains).map(|(a, h)| a * h).collect();
        dft_in_place(&mut t, Direction::Inverse)?;
        self.sensing.apply(&t)
    }

    /// `Aᴴ y`.
    pub fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut t = self.sensing.apply_transpose(y)?;
        dft_in_place(&mut t, Direction::Forward)?;
        for (v, h) in t.iter_mut().zip(&self.channel_gains) {
            *v *= h.conj();
        }
        Ok(t)
    }

    /// Column `j` of `A`.
    pub fn column(&self, j: usize) -> Result<Vec<Complex64>> {
        let mut e = vec![Complex64::new(0.0, 0.0); self.dft_size()];
        e[j] = Complex64::new(1.0, 0.0);
        self.forward(&e)
    }

    /// Dense `M × N` matrix. Test-oracle use only; refuses `N > 512`.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        let n = self.dft_size();
        if n > 512 {
            return Err(Error::InvalidConfig(format!("dense operator refused for N = {n} > 512")));
        }
        let mut a = DMatrix::zeros(self.rows(), n);
        for j in 0..n {
            let col = self.column(j)?;
            for (i, v) in col.into_iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        Ok(a)
    }
}

/// Solver for `(δ I + A Aᴴ) y = b`, the only linear system the ADMM updates need.
pub(crate) enum GramSolver {
    Tight { delta: f64 },
    Dense {
        gram: DMatrix<Complex64>,
        chol: Cholesky<Complex64, Dyn>,
        delta: f64,
    },
    Iterative { delta: f64 },
}

/// Largest `M` for which the Gram matrix is formed and factored explicitly.
const DENSE_GRAM_LIMIT: usize = 1024;

impl GramSolver {
    pub(crate) fn new(op: &RecoveryOperator, delta: f64) -> Result<Self> {
        if op.is_tight() {
            return Ok(GramSolver::Tight { delta });
        }
        let m = op.rows();
        if m > DENSE_GRAM_LIMIT {
            return Ok(GramSolver::Iterative { delta });
        }
        let mut gram = DMatrix::zeros(m, m);
        let mut e = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..m {
            e.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            e[i] = Complex64::new(1.0, 0.0);
            let col = op.forward(&op.adjoint(&e)?)?;
            for (r, v) in col.into_iter().enumerate() {
                gram[(r, i)] = v;
            }
        }
        let chol = factor(&gram, delta)?;
        Ok(GramSolver::Dense { gram, chol, delta })
    }

    pub(crate) fn set_delta(&mut self, new_delta: f64) -> Result<()> {
        match self {
            GramSolver::Tight { delta } | GramSolver::Iterative { delta } => *delta = new_delta,
            GramSolver::Dense { gram, chol, delta } => {
                if *delta != new_delta {
                    *chol = factor(gram, new_delta)?;
                    *delta = new_delta;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn solve(&self, op: &RecoveryOperator, b: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            GramSolver::Tight { delta } => Ok(b.iter().map(|v| v / (1.0 + delta)).collect()),
            GramSolver::Dense { chol, .. } => {
                let rhs = DMatrix::from_column_slice(b.len(), 1, b);
                Ok(chol.solve(&rhs).as_slice().to_vec())
            }
            GramSolver::Iterative { delta } => conjugate_gradient(op, *delta, b),
        }
    }
}

fn factor(gram: &DMatrix<Complex64>, delta: f64) -> Result<Cholesky<Complex64, Dyn>> {
    let mut g = gram.clone();
    for i in 0..g.nrows() {
        g[(i, i)] += Complex64::new(delta, 0.0);
    }
    Cholesky::new(g).ok_or_else(|| Error::InvalidConfig("A Aᴴ is not positive definite".into()))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn conjugate_gradient(op: &RecoveryOperator, delta: f64, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let apply = |v: &[Complex64]| -> Result<Vec<Complex64>> {
        let mut out = op.forward(&op.adjoint(v)?)?;
        for (o, x) in out.iter_mut().zip(v) {
            *o += x * delta;
        }
        Ok(out)
    };
    let b_norm = dot(b, b).re.sqrt();
    let mut x = vec![Complex64::new(0.0, 0.0); b.len()];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs = dot(&r, &r).re;
    for _ in 0..(4 * b.len()).max(50) {
        let ap = apply(&p)?;
        let alpha = rs / dot(&p, &ap).re;
        for i in 0..x.len() {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rs_new = dot(&r, &r).re;
        if rs_new.sqrt() <= 1e-13 * b_norm {
            break;
        }
        let beta = rs_new / rs;
        for i in 0..p.len() {
            p[i] = r[i] + p[i] * beta;
        }
        rs = rs_new;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::build_sensing_matrix;
    use rand::Rng;

    fn random_vec(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = crate::seed::rng(seed);
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn gains(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = crate::seed::rng(seed);
        (0..n)
            .map(|_| Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..6.28)))
            .collect()
    }

    #[test]
    fn adjoint_inner_product() {
        for kind in [SensingKind::RandomSubsample, SensingKind::Bernoulli] {
            let s = build_sensing_matrix(40, 128, kind, 5).unwrap();
            let op = RecoveryOperator::new(s, gains(128, 2)).unwrap();
            let x = random_vec(128, 3);
            let y = random_vec(40, 4);
            let lhs = dot(&op.forward(&x).unwrap(), &y);
            let rhs = dot(&x, &op.adjoint(&y).unwrap());
            assert!((lhs - rhs).norm() < 1e-10, "{kind:?}");
        }
    }

    #[test]
    fn forward_matches_dense() {
        let s = build_sensing_matrix(20, 64, SensingKind::Bernoulli, 8).unwrap();
        let op = RecoveryOperator::new(s, gains(64, 1)).unwrap();
        let a = op.to_dense().unwrap();
        let x = random_vec(64, 9);
        let xv = nalgebra::DVector::from_vec(x.clone());
        let dense = &a * xv;
        let fast = op.forward(&x).unwrap();
        for i in 0..20 {
            assert!((dense[i] - fast[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn gram_solvers_agree() {
        let s = build_sensing_matrix(24, 64, SensingKind::Bernoulli, 12).unwrap();
        let op = RecoveryOperator::new(s, gains(64, 3)).unwrap();
        let b = random_vec(24, 13);
        let dense = GramSolver::new(&op, 0.3).unwrap().solve(&op, &b).unwrap();
        let cg = GramSolver::Iterative { delta: 0.3 }.solve(&op, &b).unwrap();
        for (a, c) in dense.iter().zip(&cg) {
            assert!((a - c).norm() < 1e-9);
        }
    }

    #[test]
    fn tight_detection() {
        let s = build_sensing_matrix(8, 16, SensingKind::RandomSubsample, 0).unwrap();
        assert!(RecoveryOperator::unit(s.clone()).unwrap().is_tight());
        assert!(!RecoveryOperator::new(s, gains(16, 0)).unwrap().is_tight());
    }

    #[test]
    fn rejects_bad_gains() {
        let s = build_sensing_matrix(8, 16, SensingKind::RandomSubsample, 0).unwrap();
        assert!(RecoveryOperator::new(s.clone(), vec![Complex64::new(1.0, 0.0); 15]).is_err());
        let mut g = vec![Complex64::new(1.0, 0.0); 16];
        g[3] = Complex64::new(0.0, 0.0);
        assert!(RecoveryOperator::new(s, g).is_err());
    }
}
