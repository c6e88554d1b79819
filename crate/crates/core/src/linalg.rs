//! Small dense helpers, compensated summation, and the dominant-eigenvalue
//! routine used by the MM phase solver.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)] // float math for no_std builds
use num_traits::Float;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sum a slice of addends with compensation.
pub fn compensated(terms: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &t in terms {
        acc.add(t);
    }
    acc.value()
}

/// `x^H y`
#[inline]
pub fn dotc(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// `x^H M x` for Hermitian `M`, real part.
pub fn hermitian_form(m: &CMatrix, x: &CVector) -> f64 {
    (x.adjoint() * m * x)[(0, 0)].re
}

/// Hermitian linear operator exposed through matrix-vector products.
pub trait HermitianOperator {
    fn dim(&self) -> usize;

    /// `out = M x`
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]);

    /// An upper bound on the spectral radius.
    fn norm_bound(&self) -> f64;

    /// Dense materialization, when affordable.
    fn to_dense(&self) -> Option<CMatrix> {
        None
    }

    /// Exact largest eigenvalue, used when power iteration stalls.
    fn exact_lambda_max(&self) -> Option<f64> {
        self.to_dense().map(|d| dense_lambda_max(&d))
    }
}

impl HermitianOperator for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.nrows();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                acc += self[(i, j)] * xj;
            }
            *o = acc;
        }
    }

    fn norm_bound(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn to_dense(&self) -> Option<CMatrix> {
        Some(self.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    PowerIteration,
    DenseFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominantEigen {
    pub value: f64,
    pub iterations: usize,
    pub method: EigenMethod,
}

/// Largest algebraic eigenvalue of a Hermitian operator.
///
/// Power iteration runs on the shifted operator `M + sI` with `s` the norm
/// bound, so every eigenvalue of the iterate is nonnegative and the dominant
/// one corresponds to the largest algebraic eigenvalue of `M`. The start vector
/// is the normalized all-ones vector. Iteration stops once the eigen-residual
/// `‖Mx - λx‖` drops below `tol` times the shift. If that has not happened
/// after `max_iter` products, the operator's exact routine is used instead
/// when it has one.
pub fn lambda_max<M: HermitianOperator + ?Sized>(op: &M, tol: f64, max_iter: usize) -> DominantEigen {
    let n = op.dim();
    if n == 0 {
        return DominantEigen { value: 0.0, iterations: 0, method: EigenMethod::PowerIteration };
    }
    let shift = op.norm_bound();
    if shift == 0.0 {
        return DominantEigen { value: 0.0, iterations: 0, method: EigenMethod::PowerIteration };
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut x = vec![Complex64::new(scale, 0.0); n];
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    let mut rayleigh = 0.0;
    for it in 1..=max_iter {
        op.apply(&x, &mut y);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += xi * shift;
        }
        rayleigh = dotc(&x, &y).re;
        let residual = y.iter().zip(&x).map(|(yi, xi)| (yi - xi * rayleigh).norm_sqr()).sum::<f64>().sqrt();
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return DominantEigen { value: -shift, iterations: it, method: EigenMethod::PowerIteration };
        }
        if residual <= tol * shift {
            return DominantEigen { value: rayleigh - shift, iterations: it, method: EigenMethod::PowerIteration };
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    match op.exact_lambda_max() {
        Some(value) => DominantEigen { value, iterations: max_iter, method: EigenMethod::DenseFallback },
        None => DominantEigen { value: rayleigh - shift, iterations: max_iter, method: EigenMethod::PowerIteration },
    }
}

/// Largest eigenvalue of a dense Hermitian matrix.
pub fn dense_lambda_max(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(m.clone());
    eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Hermitian part `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Unit-modulus projection; zero entries keep the fallback value.
pub fn unit_modulus(v: &[Complex64], fallback: &[Complex64]) -> Vec<Complex64> {
    v.iter()
        .zip(fallback)
        .map(|(z, f)| {
            let r = z.norm();
            if r > 0.0 && r.is_finite() {
                z / r
            } else {
                *f
            }
        })
        .collect()
}
