//! Lattices, interaction potentials and the elementary one-particle operators.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{fft_nd, real_diagonal, CMatrix};

/// Periodic grid `{0, a, …, (d-1)a}^ds` on the torus `[0, ℓ)^ds`, together with
/// the paired momentum grid `p_k = (2π/ℓ) k`, `k_i ∈ {-⌊d/2⌋, …, ⌈d/2⌉-1}`.
///
/// Sites and momenta are enumerated row-major (first axis slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    ds: usize,
    d: usize,
    length: f64,
    spacing: f64,
}

impl Lattice {
    pub fn new(ds: usize, d: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&ds) {
            return Err(Error::InvalidLattice(format!("dimension {ds} not in {{1, 2, 3}}")));
        }
        if d < 2 {
            return Err(Error::InvalidLattice(format!("need at least 2 sites per axis, got {d}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidLattice(format!("side length {length} must be positive")));
        }
        Ok(Self { ds, d, length, spacing: length / d as f64 })
    }

    pub fn ds(&self) -> usize {
        self.ds
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn site_count(&self) -> usize {
        self.d.pow(self.ds as u32)
    }

    /// `a^ds`, the volume of one lattice cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.ds as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.ds as i32)
    }

    /// Per-axis integer coordinates of a flat site index.
    pub fn site_multi(&self, j: usize) -> Vec<usize> {
        let mut out = vec![0; self.ds];
        let mut rest = j;
        for axis in (0..self.ds).rev() {
            out[axis] = rest % self.d;
            rest /= self.d;
        }
        out
    }

    pub fn site_flat(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &m| acc * self.d + (m % self.d))
    }

    pub fn site_position(&self, j: usize) -> Vec<f64> {
        self.site_multi(j).iter().map(|&m| m as f64 * self.spacing).collect()
    }

    /// Index of the site `x_j - x_i` (mod ℓ).
    pub fn site_difference(&self, j: usize, i: usize) -> usize {
        let a = self.site_multi(j);
        let b = self.site_multi(i);
        let diff: Vec<usize> = a.iter().zip(&b).map(|(&x, &y)| (x + self.d - y) % self.d).collect();
        self.site_flat(&diff)
    }

    /// Index of `-x_j` (mod ℓ).
    pub fn site_negation(&self, j: usize) -> usize {
        let m: Vec<usize> = self.site_multi(j).iter().map(|&x| (self.d - x) % self.d).collect();
        self.site_flat(&m)
    }

    /// Per-axis minimal-image integer offset of `x_j - x_i`, in `[-⌊d/2⌋, ⌈d/2⌉)`.
    pub fn wrapped_offset(&self, j: usize, i: usize) -> Vec<i64> {
        let a = self.site_multi(j);
        let b = self.site_multi(i);
        a.iter().zip(&b).map(|(&x, &y)| self.wrap_index(x as i64 - y as i64)).collect()
    }

    /// Minimal-image displacement `x_j - x_i`.
    pub fn displacement(&self, j: usize, i: usize) -> Vec<f64> {
        self.wrapped_offset(j, i).iter().map(|&o| o as f64 * self.spacing).collect()
    }

    pub(crate) fn wrap_index(&self, offset: i64) -> i64 {
        let d = self.d as i64;
        let half = d / 2;
        (offset + half).rem_euclid(d) - half
    }

    pub fn momentum_count(&self) -> usize {
        self.site_count()
    }

    /// Integer momentum vector `k` of a flat momentum index.
    pub fn momentum_multi(&self, k: usize) -> Vec<i64> {
        let half = (self.d / 2) as i64;
        self.site_multi(k).iter().map(|&c| c as i64 - half).collect()
    }

    pub fn momentum_index(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.ds {
            return None;
        }
        let half = (self.d / 2) as i64;
        let mut multi = Vec::with_capacity(self.ds);
        for &c in k {
            let shifted = c + half;
            if shifted < 0 || shifted >= self.d as i64 {
                return None;
            }
            multi.push(shifted as usize);
        }
        Some(self.site_flat(&multi))
    }

    pub fn momentum(&self, k: usize) -> Vec<f64> {
        let step = 2.0 * PI / self.length;
        self.momentum_multi(k).iter().map(|&c| c as f64 * step).collect()
    }

    pub fn momentum_norm(&self, k: usize) -> f64 {
        self.momentum(k).iter().map(|p| p * p).sum::<f64>().sqrt()
    }

    /// Position of momentum index `k` in the unshifted DFT layout used by
    /// [`fft_nd`].
    pub fn fft_bin(&self, k: usize) -> usize {
        let d = self.d as i64;
        let multi: Vec<usize> = self.momentum_multi(k).iter().map(|&c| c.rem_euclid(d) as usize).collect();
        self.site_flat(&multi)
    }

    /// Unitary lattice Fourier transform, `F[k, j] = exp(-i p_k·x_j) / √S`.
    pub fn fourier_matrix(&self) -> CMatrix {
        let s = self.site_count();
        let norm = 1.0 / (s as f64).sqrt();
        let momenta: Vec<Vec<f64>> = (0..s).map(|k| self.momentum(k)).collect();
        let positions: Vec<Vec<f64>> = (0..s).map(|j| self.site_position(j)).collect();
        CMatrix::from_fn(s, s, |k, j| {
            let phase: f64 = momenta[k].iter().zip(&positions[j]).map(|(p, x)| p * x).sum();
            Complex64::from_polar(norm, -phase)
        })
    }

    /// Normalized plane wave `e_k(x_j) = exp(i p_k·x_j) / √S`.
    pub fn plane_wave(&self, k: usize) -> Vec<Complex64> {
        let s = self.site_count();
        let norm = 1.0 / (s as f64).sqrt();
        let p = self.momentum(k);
        (0..s)
            .map(|j| {
                let phase: f64 = p.iter().zip(self.site_position(j)).map(|(p, x)| p * x).sum();
                Complex64::from_polar(norm, phase)
            })
            .collect()
    }

    /// Forward transform of a site function into momentum-grid coefficients
    /// `f̂(p_k) = (1/S) Σ_j f(x_j) exp(-i p_k·x_j)`, so that
    /// `f(x) = Σ_k f̂(p_k) exp(i p_k·x)`.
    pub fn to_fourier(&self, f: &[Complex64]) -> Vec<Complex64> {
        let s = self.site_count();
        let mut buf = f.to_vec();
        fft_nd(&mut buf, self.d, self.ds, false);
        let inv = 1.0 / s as f64;
        (0..s).map(|k| buf[self.fft_bin(k)] * inv).collect()
    }

    /// Inverse of [`Lattice::to_fourier`].
    pub fn from_fourier(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let s = self.site_count();
        let mut buf = vec![Complex64::new(0.0, 0.0); s];
        for (k, c) in coeffs.iter().enumerate() {
            buf[self.fft_bin(k)] = *c;
        }
        fft_nd(&mut buf, self.d, self.ds, true);
        buf
    }
}

/// Particle number and Planck constant of a run. The mean-field coupling is
/// always `1/N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    n_particles: usize,
    hbar: f64,
}

impl ModelParams {
    /// `ħ = N^(-1/ds)`.
    pub fn new(n_particles: usize, lattice: &Lattice) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::InvalidArgument("particle number must be positive".into()));
        }
        let hbar = (n_particles as f64).powf(-1.0 / lattice.ds() as f64);
        Ok(Self { n_particles, hbar })
    }

    pub fn with_hbar(n_particles: usize, hbar: f64) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::InvalidArgument("particle number must be positive".into()));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { n_particles, hbar })
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn coupling(&self) -> f64 {
        1.0 / self.n_particles as f64
    }
}

/// Named interaction shapes.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// `λ exp(-|x|²/2σ²)`, periodized over 5 images per axis.
    Gaussian { lambda: f64, sigma: f64 },
    /// `λ Σ_axes cos(2π·mode·x_axis/ℓ)`.
    Cosine { lambda: f64, mode: u32 },
    /// Real-space samples in site order.
    Table(Vec<f64>),
}

/// Interaction `V` in real space and on the momentum grid, with the
/// convention `V(x) = Σ_k V̂(p_k) exp(i p_k·x)`.
#[derive(Clone, Debug)]
pub struct Potential {
    real_space: Vec<f64>,
    fourier: Vec<Complex64>,
    assumption_weight: f64,
}

const GAUSSIAN_IMAGES: i64 = 2;

impl Potential {
    pub fn build(spec: &PotentialSpec, lattice: &Lattice) -> Result<Self> {
        let s = lattice.site_count();
        let samples = match spec {
            PotentialSpec::Zero => vec![0.0; s],
            PotentialSpec::Gaussian { lambda, sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::InvalidPotential(format!("gaussian width {sigma} must be positive")));
                }
                (0..s).map(|j| lambda * periodized_gaussian(lattice, j, *sigma)).collect()
            }
            PotentialSpec::Cosine { lambda, mode } => {
                let q = 2.0 * PI * *mode as f64 / lattice.length();
                (0..s)
                    .map(|j| lambda * lattice.site_position(j).iter().map(|x| (q * x).cos()).sum::<f64>())
                    .collect()
            }
            PotentialSpec::Table(values) => {
                if values.len() != s {
                    return Err(Error::InvalidPotential(format!(
                        "table has {} samples, lattice has {s} sites",
                        values.len()
                    )));
                }
                if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::InvalidPotential(format!("non-finite sample {bad}")));
                }
                let worst = (0..s)
                    .map(|j| (values[j] - values[lattice.site_negation(j)]).abs())
                    .fold(0.0, f64::max);
                if worst > 1e-10 {
                    return Err(Error::InvalidPotential(format!(
                        "table is not even under x -> -x (deviation {worst:e})"
                    )));
                }
                // Remove the admissible residual asymmetry so V̂ is real.
                (0..s).map(|j| 0.5 * (values[j] + values[lattice.site_negation(j)])).collect()
            }
        };
        Ok(Self::from_samples(samples, lattice))
    }

    fn from_samples(real_space: Vec<f64>, lattice: &Lattice) -> Self {
        let complex: Vec<Complex64> = real_space.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let raw = lattice.to_fourier(&complex);
        // Real and even samples have a real, even transform.
        let fourier: Vec<Complex64> = (0..raw.len())
            .map(|k| {
                let minus: Vec<i64> = lattice.momentum_multi(k).iter().map(|c| -c).collect();
                let partner = lattice.momentum_index(&minus).map_or(raw[k].re, |m| raw[m].re);
                Complex64::new(0.5 * (raw[k].re + partner), 0.0)
            })
            .collect();
        let assumption_weight = (0..lattice.momentum_count())
            .map(|k| (1.0 + lattice.momentum_norm(k)).powi(2) * fourier[k].norm())
            .sum();
        Self { real_space, fourier, assumption_weight }
    }

    /// Parses the table format: one decimal sample per line, blank lines and
    /// `#` comments ignored.
    pub fn parse_table(text: &str) -> Result<Vec<f64>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| {
                let t = l.trim();
                !t.is_empty() && !t.starts_with('#')
            })
            .map(|(n, l)| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidPotential(format!("line {}: {e}", n + 1)))
            })
            .collect()
    }

    pub fn real_space(&self) -> &[f64] {
        &self.real_space
    }

    pub fn fourier(&self) -> &[Complex64] {
        &self.fourier
    }

    /// `Σ_k (1+|p_k|)² |V̂(p_k)|`.
    pub fn assumption_weight(&self) -> f64 {
        self.assumption_weight
    }

    pub fn is_zero(&self) -> bool {
        self.real_space.iter().all(|&v| v == 0.0)
    }

    /// `V(x_j - x_i)`.
    pub fn pair(&self, lattice: &Lattice, j: usize, i: usize) -> f64 {
        self.real_space[lattice.site_difference(j, i)]
    }

    /// Matrix `W[j, i] = V(x_j - x_i)`.
    pub fn pair_matrix(&self, lattice: &Lattice) -> Vec<f64> {
        let s = lattice.site_count();
        let mut out = vec![0.0; s * s];
        for j in 0..s {
            for i in 0..s {
                out[j * s + i] = self.pair(lattice, j, i);
            }
        }
        out
    }

    /// `max_x Σ_y |V(x - y)|`.
    pub fn max_row_sum(&self) -> f64 {
        // Translation invariance makes every row a permutation of the samples.
        self.real_space.iter().map(|v| v.abs()).sum()
    }
}

fn periodized_gaussian(lattice: &Lattice, j: usize, sigma: f64) -> f64 {
    let l = lattice.length();
    let offsets = lattice.wrapped_offset(j, 0);
    let per_axis: Vec<f64> = offsets
        .iter()
        .map(|&o| {
            let x = o as f64 * lattice.spacing();
            (-GAUSSIAN_IMAGES..=GAUSSIAN_IMAGES)
                .map(|n| {
                    let y = x + n as f64 * l;
                    (-y * y / (2.0 * sigma * sigma)).exp()
                })
                .sum()
        })
        .collect();
    per_axis.iter().product()
}

/// A one-particle operator as a dense matrix on site-basis vectors.
pub type OneParticleOperator = CMatrix;

fn momentum_diagonal(lattice: &Lattice, f: impl Fn(&[f64]) -> Complex64) -> OneParticleOperator {
    let fm = lattice.fourier_matrix();
    let s = lattice.site_count();
    let mut scaled = fm.clone();
    for k in 0..s {
        let w = f(&lattice.momentum(k));
        scaled.row_mut(k).iter_mut().for_each(|z| *z *= w);
    }
    fm.adjoint() * scaled
}

/// `-ħ²Δ = F* diag(ħ²|p_k|²) F`.
pub fn kinetic_operator(lattice: &Lattice, hbar: f64) -> OneParticleOperator {
    let mut k = momentum_diagonal(lattice, |p| Complex64::new(hbar * hbar * p.iter().map(|x| x * x).sum::<f64>(), 0.0));
    // Exactly Hermitian.
    k = (&k + k.adjoint()).scale(0.5);
    k
}

/// Component `axis` of `ħ∇ = F* diag(iħp_k) F`.
pub fn momentum_operator(lattice: &Lattice, hbar: f64, axis: usize) -> Result<OneParticleOperator> {
    if axis >= lattice.ds() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range for ds = {}", lattice.ds())));
    }
    let mut m = momentum_diagonal(lattice, |p| Complex64::new(0.0, hbar * p[axis]));
    m = (&m - m.adjoint()).scale(0.5);
    Ok(m)
}

/// Multiplication by `exp(i r·x)`.
pub fn phase_operator(lattice: &Lattice, r: &[f64]) -> OneParticleOperator {
    let s = lattice.site_count();
    let phases: Vec<Complex64> = (0..s)
        .map(|j| {
            let phase: f64 = lattice.site_position(j).iter().zip(r).map(|(x, r)| x * r).sum();
            Complex64::from_polar(1.0, phase)
        })
        .collect();
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(phases))
}

/// Multiplication by a real site function.
pub fn multiplication_operator(values: &[f64]) -> OneParticleOperator {
    real_diagonal(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, identity, max_abs_entry, HermitianEigen};

    #[test]
    fn lattice_examples() {
        let l = Lattice::new(1, 8, 1.0).unwrap();
        let sites: Vec<f64> = (0..8).map(|j| l.site_position(j)[0]).collect();
        assert_eq!(sites, vec![0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875]);
        let ks: Vec<i64> = (0..8).map(|k| l.momentum_multi(k)[0]).collect();
        assert_eq!(ks, vec![-4, -3, -2, -1, 0, 1, 2, 3]);
        assert!((l.momentum(0)[0] + 8.0 * PI).abs() < 1e-15);

        let l = Lattice::new(1, 2, 2.0).unwrap();
        assert_eq!(l.spacing(), 1.0);
        assert!((l.momentum(0)[0] + PI).abs() < 1e-15);
        assert_eq!(l.momentum(1)[0], 0.0);

        assert_eq!(Lattice::new(3, 4, 1.0).unwrap().site_count(), 64);
    }

    #[test]
    fn lattice_rejects_bad_input() {
        assert!(Lattice::new(0, 8, 1.0).is_err());
        assert!(Lattice::new(4, 8, 1.0).is_err());
        assert!(Lattice::new(1, 1, 1.0).is_err());
        assert!(Lattice::new(1, 8, 0.0).is_err());
        assert!(Lattice::new(1, 8, -1.0).is_err());
    }

    #[test]
    fn odd_lattice_momenta() {
        let l = Lattice::new(1, 5, 1.0).unwrap();
        let ks: Vec<i64> = (0..5).map(|k| l.momentum_multi(k)[0]).collect();
        assert_eq!(ks, vec![-2, -1, 0, 1, 2]);
    }

    #[test]
    fn default_hbar() {
        let l1 = Lattice::new(1, 8, 1.0).unwrap();
        assert_eq!(ModelParams::new(8, &l1).unwrap().hbar(), 0.125);
        let l3 = Lattice::new(3, 4, 1.0).unwrap();
        let p = ModelParams::new(27, &l3).unwrap();
        assert!((p.hbar() - 1.0 / 3.0).abs() < 1e-15);
        assert!(ModelParams::with_hbar(4, 0.0).is_err());
        assert!(ModelParams::new(0, &l1).is_err());
    }

    #[test]
    fn fourier_round_trip() {
        for (ds, d) in [(1, 7), (1, 8), (2, 4), (3, 3)] {
            let l = Lattice::new(ds, d, 1.3).unwrap();
            let s = l.site_count();
            let v: Vec<Complex64> = (0..s).map(|j| Complex64::new((j as f64 * 0.7).sin(), (j as f64).cos())).collect();
            let back = l.from_fourier(&l.to_fourier(&v));
            for (a, b) in v.iter().zip(&back) {
                assert!((a - b).norm() < 1e-12);
            }
            let f = l.fourier_matrix();
            assert!(max_abs_entry(&(f.adjoint() * &f - identity(s))) < 1e-12);
        }
    }

    #[test]
    fn zero_potential() {
        let l = Lattice::new(1, 8, 1.0).unwrap();
        let v = Potential::build(&PotentialSpec::Zero, &l).unwrap();
        assert!(v.fourier().iter().all(|c| c.norm() == 0.0));
        assert_eq!(v.assumption_weight(), 0.0);
    }

    #[test]
    fn cosine_potential_single_mode() {
        let l = Lattice::new(1, 8, 1.0).unwrap();
        let v = Potential::build(&PotentialSpec::Cosine { lambda: 1.0, mode: 1 }, &l).unwrap();
        for k in 0..8 {
            let kk = l.momentum_multi(k)[0];
            let expected = if kk.abs() == 1 { 0.5 } else { 0.0 };
            assert!((v.fourier()[k] - Complex64::new(expected, 0.0)).norm() < 1e-14, "k = {kk}");
        }
        let w = (1.0 + 2.0 * PI).powi(2);
        assert!((v.assumption_weight() - w).abs() < 1e-12);
    }

    #[test]
    fn gaussian_weight_matches_direct_sum() {
        // Direct DFT per momentum, independent of the FFT path.
        let l = Lattice::new(1, 64, 1.0).unwrap();
        let v = Potential::build(&PotentialSpec::Gaussian { lambda: 1.0, sigma: 0.2 }, &l).unwrap();
        let mut weight = 0.0;
        for k in 0..64 {
            let p = l.momentum(k)[0];
            let coeff: Complex64 = (0..64)
                .map(|j| v.real_space()[j] * Complex64::from_polar(1.0, -p * l.site_position(j)[0]))
                .sum::<Complex64>()
                / 64.0;
            assert!(coeff.im.abs() < 1e-12);
            assert!((coeff - v.fourier()[k]).norm() < 1e-14);
            // Reduce the phase exactly before taking the cosine.
            let kk = l.momentum_multi(k)[0];
            let cosine: f64 = (0..64i64)
                .map(|j| v.real_space()[j as usize] * (2.0 * PI * (kk * j).rem_euclid(64) as f64 / 64.0).cos())
                .sum::<f64>()
                / 64.0;
            weight += (1.0 + p.abs()).powi(2) * cosine.abs();
        }
        assert!(weight.is_finite());
        assert!((weight - v.assumption_weight()).abs() < 1e-10, "{weight} {}", v.assumption_weight());
    }

    #[test]
    fn potentials_are_even() {
        for (ds, d) in [(1, 64), (1, 9), (2, 8)] {
            let l = Lattice::new(ds, d, 1.0).unwrap();
            for spec in [
                PotentialSpec::Gaussian { lambda: 1.0, sigma: 0.2 },
                PotentialSpec::Cosine { lambda: 0.5, mode: 2 },
            ] {
                let v = Potential::build(&spec, &l).unwrap();
                for j in 0..l.site_count() {
                    let diff = v.real_space()[j] - v.real_space()[l.site_negation(j)];
                    assert!(diff.abs() <= 1e-10);
                }
                for c in v.fourier() {
                    assert!(c.im.abs() < 1e-12);
                }
                for k in 0..l.site_count() {
                    let neg: Vec<i64> = l.momentum_multi(k).iter().map(|c| -c).collect();
                    if let Some(kn) = l.momentum_index(&neg) {
                        assert!((v.fourier()[k] - v.fourier()[kn]).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn potential_errors() {
        let l = Lattice::new(1, 4, 1.0).unwrap();
        assert!(Potential::build(&PotentialSpec::Gaussian { lambda: 1.0, sigma: 0.0 }, &l).is_err());
        assert!(Potential::build(&PotentialSpec::Table(vec![1.0, 2.0]), &l).is_err());
        assert!(Potential::build(&PotentialSpec::Table(vec![1.0, 2.0, 3.0, 4.0]), &l).is_err());
        let ok = Potential::build(&PotentialSpec::Table(vec![1.0, 0.5, 0.25, 0.5]), &l).unwrap();
        assert!((ok.fourier()[2].re - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn table_parsing() {
        let parsed = Potential::parse_table("1.0\n# comment\n0.5\n\n2.5e-1\n0.5\n").unwrap();
        assert_eq!(parsed, vec![1.0, 0.5, 0.25, 0.5]);
        assert!(Potential::parse_table("1.0\nabc\n").is_err());
    }

    #[test]
    fn kinetic_two_mode_spectrum() {
        let l = Lattice::new(1, 2, 2.0).unwrap();
        let k = kinetic_operator(&l, 1.0);
        let eig = HermitianEigen::new(&k);
        assert!(eig.values[0].abs() < 1e-12);
        assert!((eig.values[1] - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn kinetic_trace_matches_momentum_sum() {
        let l = Lattice::new(1, 8, 1.0).unwrap();
        let hbar = 0.5;
        let k = kinetic_operator(&l, hbar);
        let direct: f64 = (0..8).map(|i| hbar * hbar * l.momentum(i)[0].powi(2)).sum();
        let tr: Complex64 = k.diagonal().iter().sum();
        assert!((tr.re - direct).abs() < 1e-10 * direct);
        assert!(tr.im.abs() < 1e-12);
    }

    #[test]
    fn momentum_operator_properties() {
        let l = Lattice::new(1, 2, 2.0).unwrap();
        let m = momentum_operator(&l, 1.0, 0).unwrap();
        assert!(max_abs_entry(&(&m + m.adjoint())) < 1e-12);
        // Eigenvalues of the Hermitian -i·m are {-π, 0}.
        let eig = HermitianEigen::new(&m.scale(1.0).map(|z| z * Complex64::new(0.0, -1.0)));
        assert!((eig.values[0] + PI).abs() < 1e-12);
        assert!(eig.values[1].abs() < 1e-12);
        assert!(momentum_operator(&l, 1.0, 1).is_err());

        let l = Lattice::new(1, 8, 1.0).unwrap();
        let hbar = 0.3;
        let m = momentum_operator(&l, hbar, 0).unwrap();
        for k in 0..8 {
            let e = nalgebra::DVector::from_vec(l.plane_wave(k));
            let lhs = &m * &e;
            let expected = e.map(|z| z * Complex64::new(0.0, hbar * l.momentum(k)[0]));
            assert!((lhs - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn kinetic_and_momentum_commute() {
        for (ds, d) in [(1, 8), (2, 4), (3, 3)] {
            let l = Lattice::new(ds, d, 1.0).unwrap();
            let k = kinetic_operator(&l, 0.4);
            let ms: Vec<_> = (0..ds).map(|a| momentum_operator(&l, 0.4, a).unwrap()).collect();
            for m in &ms {
                assert!(max_abs_entry(&commutator(&k, m)) <= 1e-11);
                for m2 in &ms {
                    assert!(max_abs_entry(&commutator(m, m2)) <= 1e-11);
                }
            }
            assert!(max_abs_entry(&(&k - k.adjoint())) < 1e-12);
            let eig = HermitianEigen::new(&k);
            assert!(eig.values[0] > -1e-10);
        }
    }

    #[test]
    fn phase_operator_properties() {
        let l = Lattice::new(1, 8, 1.0).unwrap();
        assert!(max_abs_entry(&(phase_operator(&l, &[0.0]) - identity(8))) < 1e-15);
        let u = phase_operator(&l, &[1.2345]);
        assert!(max_abs_entry(&(&u * u.adjoint() - identity(8))) < 1e-14);

        // On-grid r shifts momenta by one step: F U F* is a cyclic shift.
        let f = l.fourier_matrix();
        let shifted = &f * phase_operator(&l, &[2.0 * PI]) * f.adjoint();
        for row in 0..8 {
            for col in 0..8 {
                let expected = if row == (col + 1) % 8 { 1.0 } else { 0.0 };
                assert!((shifted[(row, col)] - Complex64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }
}
