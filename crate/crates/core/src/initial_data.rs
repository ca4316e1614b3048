//! Semiclassically structured initial density matrices.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::diagnostics::{commutator_momentum, commutator_phase};
use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, idempotency_defect, trace, CMatrix, HermitianEigen};
use crate::model::{kinetic_operator, Lattice};

/// One-particle reduced density: a Hermitian matrix with spectrum in `[0, 1]`
/// together with its intended trace.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub matrix: CMatrix,
    pub n_particles: usize,
}

pub const SPECTRUM_TOL: f64 = 1e-10;

impl DensityMatrix {
    pub fn new(matrix: CMatrix, n_particles: usize) -> Self {
        Self { matrix, n_particles }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn idempotency_defect(&self) -> f64 {
        idempotency_defect(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        HermitianEigen::new(&self.matrix).values
    }

    /// Rejects matrices that are not Hermitian or whose spectrum leaves
    /// `[-1e-10, 1 + 1e-10]`.
    pub fn validate(&self) -> Result<()> {
        if self.matrix.nrows() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: self.matrix.nrows(), found: self.matrix.ncols() });
        }
        let herm = hermiticity_defect(&self.matrix);
        if herm > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix not Hermitian (defect {herm:e})")));
        }
        for lam in self.eigenvalues() {
            if !(-SPECTRUM_TOL..=1.0 + SPECTRUM_TOL).contains(&lam) {
                return Err(Error::NotADensity(lam));
            }
        }
        Ok(())
    }
}

/// Momentum indices of the `n` smallest `|p_k|`, ties broken
/// lexicographically on the integer vector `k`.
pub fn fermi_ball(lattice: &Lattice, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > lattice.site_count() {
        return Err(Error::InvalidArgument(format!(
            "cannot fill {n} orbitals on a lattice with {} sites",
            lattice.site_count()
        )));
    }
    let mut order: Vec<(i64, Vec<i64>, usize)> = (0..lattice.momentum_count())
        .map(|k| {
            let m = lattice.momentum_multi(k);
            (m.iter().map(|c| c * c).sum(), m, k)
        })
        .collect();
    order.sort();
    Ok(order.into_iter().take(n).map(|(_, _, k)| k).collect())
}

/// `ω = Σ_{k ∈ occupied} |e_k⟩⟨e_k|` for normalized plane waves `e_k`.
pub fn plane_wave_projection(lattice: &Lattice, occupied: &[usize]) -> Result<DensityMatrix> {
    let s = lattice.site_count();
    if occupied.is_empty() {
        return Err(Error::InvalidArgument("occupied set is empty".into()));
    }
    if occupied.len() > s {
        return Err(Error::InvalidArgument(format!("{} orbitals exceed {s} sites", occupied.len())));
    }
    let mut seen = vec![false; s];
    for &k in occupied {
        if k >= s {
            return Err(Error::InvalidArgument(format!("momentum index {k} out of range")));
        }
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidArgument(format!("duplicate momentum index {k}")));
        }
    }
    let f = lattice.fourier_matrix();
    let mut rows = CMatrix::zeros(occupied.len(), s);
    for (r, &k) in occupied.iter().enumerate() {
        rows.set_row(r, &f.row(k));
    }
    let matrix = rows.adjoint() * rows;
    Ok(DensityMatrix::new(matrix, occupied.len()))
}

/// Projection onto the `n` lowest eigenvectors of `-ħ²Δ + V_ext`.
pub fn trapped_slater(lattice: &Lattice, hbar: f64, v_ext: &[f64], n: usize) -> Result<DensityMatrix> {
    let s = lattice.site_count();
    if v_ext.len() != s {
        return Err(Error::DimensionMismatch { expected: s, found: v_ext.len() });
    }
    if let Some(bad) = v_ext.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("external potential sample {bad} is not a finite real")));
    }
    if n == 0 || n > s {
        return Err(Error::InvalidArgument(format!("cannot fill {n} orbitals on {s} sites")));
    }
    let mut h = kinetic_operator(lattice, hbar);
    for (j, v) in v_ext.iter().enumerate() {
        h[(j, j)] += Complex64::new(*v, 0.0);
    }
    let eig = HermitianEigen::new(&h);
    let tol = 1e-10;
    if n < s && (eig.values[n] - eig.values[n - 1]).abs() <= tol {
        return Err(Error::DegenerateFermiLevel { below: eig.values[n - 1], above: eig.values[n], tol });
    }
    let occ = eig.vectors.columns(0, n);
    Ok(DensityMatrix::new(occ * occ.adjoint(), n))
}

/// Harmonic-like trap `strength·dist(x, centre)²` on the torus, with
/// `centre = ℓ/2` on every axis.
pub fn harmonic_trap(lattice: &Lattice, strength: f64) -> Vec<f64> {
    let l = lattice.length();
    (0..lattice.site_count())
        .map(|j| {
            lattice
                .site_position(j)
                .iter()
                .map(|x| {
                    let dx = x - 0.5 * l;
                    let dx = dx - l * (dx / l).round();
                    dx * dx
                })
                .sum::<f64>()
                * strength
        })
        .collect()
}

/// A real phase-space function sampled at `(ħ p_k, x_j)`; row `k`, column `j`.
#[derive(Clone, Debug)]
pub struct PhaseSpaceSymbol {
    pub values: Vec<f64>,
    momenta: usize,
    sites: usize,
}

impl PhaseSpaceSymbol {
    pub fn from_values(lattice: &Lattice, values: Vec<f64>) -> Result<Self> {
        let s = lattice.site_count();
        if values.len() != s * s {
            return Err(Error::DimensionMismatch { expected: s * s, found: values.len() });
        }
        Ok(Self { values, momenta: s, sites: s })
    }

    /// Samples `m(p, x)` with `p = ħ p_k` the classical momentum.
    pub fn sample(lattice: &Lattice, hbar: f64, m: impl Fn(&[f64], &[f64]) -> f64) -> Self {
        let s = lattice.site_count();
        let mut values = Vec::with_capacity(s * s);
        for k in 0..s {
            let p: Vec<f64> = lattice.momentum(k).iter().map(|q| hbar * q).collect();
            for j in 0..s {
                values.push(m(&p, &lattice.site_position(j)));
            }
        }
        Self { values, momenta: s, sites: s }
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.sites + j]
    }
}

/// Lattice midpoint of `(x_j + x_i)/2` along the minimal image, with half-step
/// ties resolved toward `x_j`.
fn midpoint_toward(lattice: &Lattice, j: usize, i: usize) -> usize {
    let base = lattice.site_multi(i);
    let off = lattice.wrapped_offset(j, i);
    let d = lattice.d() as i64;
    let multi: Vec<usize> = base
        .iter()
        .zip(&off)
        .map(|(&b, &o)| {
            let half = if o % 2 == 0 { o / 2 } else { (o + o.signum()) / 2 };
            (b as i64 + half).rem_euclid(d) as usize
        })
        .collect();
    lattice.site_flat(&multi)
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Discrete Weyl quantization
/// `ω_{x,y} = S^{-1} Σ_k M(ħp_k, (x+y)/2) exp(i p_k·(x-y))`.
///
/// The midpoint is the nearest lattice sample; half-step ties are taken toward
/// `x` and the result is Hermitized, which averages the two tie choices.
pub fn weyl_quantize(symbol: &PhaseSpaceSymbol, lattice: &Lattice, hbar: f64) -> Result<DensityMatrix> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let s = lattice.site_count();
    if symbol.momenta != s || symbol.sites != s {
        return Err(Error::DimensionMismatch { expected: s, found: symbol.sites });
    }
    // Column m of the symbol, transformed back to relative coordinates.
    let kernels: Vec<Vec<Complex64>> = (0..s)
        .map(|m| {
            let col: Vec<Complex64> = (0..s).map(|k| Complex64::new(symbol.get(k, m) / s as f64, 0.0)).collect();
            lattice.from_fourier(&col)
        })
        .collect();
    let raw = CMatrix::from_fn(s, s, |j, i| {
        let mid = midpoint_toward(lattice, j, i);
        kernels[mid][lattice.site_difference(j, i)]
    });
    let matrix = hermitize(&raw);
    let n = trace(&matrix).re.round().max(0.0) as usize;
    Ok(DensityMatrix::new(matrix, n))
}

/// Fourier transform of the indicator of the ball `|q| ≤ c` in `ds`
/// dimensions, as a function of `r = |ξ|`.
pub fn fermi_ball_kernel(ds: usize, c: f64, r: f64) -> f64 {
    match ds {
        1 => {
            if r == 0.0 {
                2.0 * c
            } else {
                2.0 * (c * r).sin() / r
            }
        }
        2 => {
            if r == 0.0 {
                PI * c * c
            } else {
                2.0 * PI * c * bessel_j1(c * r) / r
            }
        }
        _ => {
            let z = c * r;
            if z < 1e-2 {
                let z2 = z * z;
                4.0 * PI * c.powi(3) * (1.0 / 3.0 - z2 / 30.0 + z2 * z2 / 840.0)
            } else {
                4.0 * PI / (r * r) * ((c * r).sin() / r - c * (c * r).cos())
            }
        }
    }
}

/// `J_1(z) = π^{-1} ∫_0^π cos(θ - z sin θ) dθ`, by the trapezoid rule, which
/// converges geometrically for this periodic integrand.
fn bessel_j1(z: f64) -> f64 {
    let n = (2.0 * z.abs()) as usize + 64;
    let h = PI / n as f64;
    let f = |t: f64| (t - z * t.sin()).cos();
    let inner: f64 = (1..n).map(|i| f(i as f64 * h)).sum();
    (inner + 0.5 * (f(0.0) + f(PI))) * h / PI
}

/// Kernel ansatz `ω(x;y) = ħ^{-ds} φ((x-y)/ħ) χ((x+y)/2)` with `φ` the
/// Fourier transform of the Fermi ball of radius `fermi_radius`.
///
/// The result is Hermitized but not a projection in general; its projection
/// defect `‖ω² - ω‖_F` is returned alongside.
pub fn kernel_ansatz(chi: &[f64], fermi_radius: f64, lattice: &Lattice, hbar: f64) -> Result<(DensityMatrix, f64)> {
    let s = lattice.site_count();
    if chi.len() != s {
        return Err(Error::DimensionMismatch { expected: s, found: chi.len() });
    }
    if chi.iter().any(|&c| !(c >= 0.0)) {
        return Err(Error::InvalidArgument("chi must be non-negative".into()));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let ds = lattice.ds();
    let prefactor = lattice.cell_volume() / hbar.powi(ds as i32);
    let raw = CMatrix::from_fn(s, s, |j, i| {
        let r = lattice.displacement(j, i).iter().map(|x| x * x).sum::<f64>().sqrt();
        let mid = midpoint_toward(lattice, j, i);
        Complex64::new(prefactor * fermi_ball_kernel(ds, fermi_radius, r / hbar) * chi[mid], 0.0)
    });
    let matrix = hermitize(&raw);
    let defect = idempotency_defect(&matrix);
    let n = trace(&matrix).re.round().max(0.0) as usize;
    Ok((DensityMatrix::new(matrix, n), defect))
}

#[derive(Clone, Debug)]
pub struct SemiclassicalReport {
    /// `sup_p tr|[e^{ip·x}, ω]| / ((1+|p|) N ħ)`.
    pub c_phase: f64,
    /// `Σ_axes tr|[ħ∇, ω]| / (N ħ)`.
    pub c_momentum: f64,
    pub p_set: Vec<Vec<f64>>,
}

/// Nonzero lattice momenta with `|k_i| ≤ 4` on every axis.
pub fn default_p_set(lattice: &Lattice) -> Vec<Vec<f64>> {
    (0..lattice.momentum_count())
        .filter(|&k| {
            let m = lattice.momentum_multi(k);
            m.iter().all(|c| c.abs() <= 4) && m.iter().any(|&c| c != 0)
        })
        .map(|k| lattice.momentum(k))
        .collect()
}

/// Measures the constants of the semiclassical commutator bounds for `ω`,
/// normalized by `N ħ` with `N = omega.n_particles`.
pub fn semiclassical_constant(
    omega: &DensityMatrix,
    lattice: &Lattice,
    hbar: f64,
    p_set: &[Vec<f64>],
) -> Result<SemiclassicalReport> {
    if p_set.is_empty() {
        return Err(Error::InvalidArgument("momentum set is empty".into()));
    }
    let norm = omega.n_particles.max(1) as f64 * hbar;
    let mut c_phase: f64 = 0.0;
    for p in p_set {
        let abs_p = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        let value = commutator_phase(&omega.matrix, p, lattice)?;
        c_phase = c_phase.max(value / ((1.0 + abs_p) * norm));
    }
    let c_momentum = commutator_momentum(&omega.matrix, hbar, lattice)? / norm;
    Ok(SemiclassicalReport { c_phase, c_momentum, p_set: p_set.to_vec() })
}
