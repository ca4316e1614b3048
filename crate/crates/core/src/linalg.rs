//! Dense complex linear algebra shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let n = m.nrows();
        // Symmetrize first so that round-off asymmetry cannot leak into the
        // spectrum.
        let sym = (m + m.adjoint()).scale(0.5);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    /// `V f(Λ) V*` for a scalar function of the eigenvalues.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (c, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            scaled.column_mut(c).iter_mut().for_each(|z| *z *= w);
        }
        let mut out = CMatrix::zeros(n, n);
        out.gemm(Complex64::new(1.0, 0.0), &scaled, &self.vectors.adjoint(), Complex64::new(0.0, 0.0));
        out
    }
}

/// `exp(-i tau h)` for Hermitian `h`.
pub fn unitary_propagator(h: &CMatrix, tau: f64) -> CMatrix {
    HermitianEigen::new(h).apply_fn(|lam| Complex64::from_polar(1.0, -tau * lam))
}

/// `U A U*`.
pub fn conjugate(u: &CMatrix, a: &CMatrix) -> CMatrix {
    u * a * u.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Frobenius norm.
pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_entry(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖A - A*‖_max`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    max_abs_entry(&(a - a.adjoint()))
}

/// `‖A² - A‖_F`.
pub fn idempotency_defect(a: &CMatrix) -> f64 {
    frobenius(&(a * a - a))
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Singular values, descending.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    let svd = nalgebra::linalg::SVD::try_new(a.clone(), false, false, f64::EPSILON, 10_000)
        .ok_or(Error::SvdNonConvergence)?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real_diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ))
}

/// In-place multidimensional DFT over a row-major `d^ds` array (first axis
/// slowest). Unnormalized: `X_m = Σ_j x_j exp(∓2πi j·m/d)`.
pub fn fft_nd(data: &mut [Complex64], d: usize, ds: usize, inverse: bool) {
    assert_eq!(data.len(), d.pow(ds as u32));
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(d)
    } else {
        planner.plan_fft_forward(d)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); d];
    for axis in 0..ds {
        let stride = d.pow((ds - 1 - axis) as u32);
        let block = stride * d;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (i, z) in line.iter_mut().enumerate() {
                    *z = data[base + i * stride];
                }
                fft.process(&mut line);
                for (i, z) in line.iter().enumerate() {
                    data[base + i * stride] = *z;
                }
            }
        }
    }
}
