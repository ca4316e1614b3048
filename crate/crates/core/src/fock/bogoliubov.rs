//! Particle-hole Bogoliubov transformations and their implementors.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FockOperator, FockSpace, FockVector};
use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, idempotency_defect, trace, CMatrix, CVector, HermitianEigen};

/// The pair `(u, v)` of a pairing-free Bogoliubov map built from a
/// projection `ω = Σ_j |f_j⟩⟨f_j|`.
#[derive(Clone, Debug)]
pub struct BogoliubovSpec {
    /// `1 - ω`.
    pub u: CMatrix,
    /// `Σ_j |conj f_j⟩⟨f_j|`.
    pub v: CMatrix,
    pub orbitals: Vec<CVector>,
}

impl BogoliubovSpec {
    /// `‖u*u + v*v - 1‖_max`.
    pub fn normalization_defect(&self) -> f64 {
        let n = self.u.nrows();
        crate::linalg::max_abs_entry(&(self.u.adjoint() * &self.u + self.v.adjoint() * &self.v - CMatrix::identity(n, n)))
    }

    /// `‖u* conj(v) + v* conj(u)‖_max`.
    pub fn pairing_defect(&self) -> f64 {
        crate::linalg::max_abs_entry(&(self.u.adjoint() * self.v.conjugate() + self.v.adjoint() * self.u.conjugate()))
    }
}

fn fix_phase(mut f: CVector) -> CVector {
    if let Some(first) = f.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = first.conj() / first.norm();
        f.iter_mut().for_each(|z| *z *= phase);
    }
    f
}

/// Orbitals are eigenvectors of `ω` for eigenvalue one, in descending
/// eigenvalue order as returned by the eigensolver, each with its first
/// nonzero component made real and positive.
pub fn bogoliubov_from_projection(omega: &CMatrix) -> Result<BogoliubovSpec> {
    let l = omega.nrows();
    if omega.ncols() != l {
        return Err(Error::DimensionMismatch { expected: l, found: omega.ncols() });
    }
    let defect = idempotency_defect(omega).max(hermiticity_defect(omega));
    if defect > 1e-10 {
        return Err(Error::NotAProjection(defect));
    }
    let n = trace(omega).re.round() as usize;
    let eig = HermitianEigen::new(omega);
    let orbitals: Vec<CVector> = (0..n).map(|j| fix_phase(eig.vectors.column(l - 1 - j).into_owned())).collect();
    let mut v = CMatrix::zeros(l, l);
    for f in &orbitals {
        v += f.conjugate() * f.adjoint();
    }
    Ok(BogoliubovSpec { u: CMatrix::identity(l, l) - omega, v, orbitals })
}

/// `R = B_1 ⋯ B_N · Π_j (1 - 2 n(f_j)) · (-1)^(N 𝒩)` with
/// `B_j = a*(f_j) + a(f_j)`.
///
/// The bare product of the `B_j` intertwines `a(f)` only up to signs that
/// depend on `N` and on whether `f` is occupied; the two trailing parity
/// factors remove them and act trivially on the vacuum, so
/// `RΩ = a*(f_1) ⋯ a*(f_N) Ω`.
#[derive(Clone, Debug)]
pub struct BogoliubovImplementor {
    space: FockSpace,
    orbitals: Vec<CVector>,
}

impl BogoliubovImplementor {
    pub fn particle_count(&self) -> usize {
        self.orbitals.len()
    }

    fn flip(&self, f: &CVector, psi: &FockVector) -> FockVector {
        psi.create(f).add(&psi.annihilate(f))
    }

    fn parities(&self, psi: &FockVector) -> FockVector {
        let mut out = psi.clone();
        for f in &self.orbitals {
            let occupied = out.annihilate(f).create(f);
            out = out.sub(&occupied.scaled(Complex64::new(2.0, 0.0)));
        }
        if self.orbitals.len() % 2 == 1 {
            for (b, z) in out.amplitudes.iter_mut().enumerate() {
                if b.count_ones() % 2 == 1 {
                    *z = -*z;
                }
            }
        }
        out
    }

    pub fn apply(&self, psi: &FockVector) -> FockVector {
        let mut out = self.parities(psi);
        for f in self.orbitals.iter().rev() {
            out = self.flip(f, &out);
        }
        out
    }

    pub fn apply_adjoint(&self, psi: &FockVector) -> FockVector {
        let mut out = psi.clone();
        for f in &self.orbitals {
            out = self.flip(f, &out);
        }
        self.parities(&out)
    }

    /// `RΩ`.
    pub fn vacuum_image(&self) -> FockVector {
        self.apply(&FockVector::vacuum(self.space))
    }

    /// Sparse matrix of `R`, column by column.
    pub fn to_operator(&self) -> FockOperator {
        let dim = self.space.dim();
        let mut triplets = Vec::new();
        for b in 0..dim {
            let col = self.apply(&FockVector::basis(self.space, b));
            for (r, z) in col.amplitudes.iter().enumerate() {
                if z.norm() > 1e-15 {
                    triplets.push((r, b, *z));
                }
            }
        }
        FockOperator::from_triplets(dim, triplets)
    }

    /// Largest of `|‖Rψ‖ - ‖ψ‖|` and `‖R*Rψ - ψ‖` over seeded random probes.
    pub fn unitarity_defect(&self, probes: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..probes {
            let amps = CVector::from_fn(self.space.dim(), |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let psi = FockVector { amplitudes: amps, space: self.space }.normalized();
            let r = self.apply(&psi);
            worst = worst.max((r.norm() - 1.0).abs());
            worst = worst.max(self.apply_adjoint(&r).sub(&psi).norm());
        }
        worst
    }
}

pub fn implement_bogoliubov(space: FockSpace, spec: &BogoliubovSpec) -> Result<BogoliubovImplementor> {
    space.check_one_particle(spec.u.nrows())?;
    let r = BogoliubovImplementor { space, orbitals: spec.orbitals.clone() };
    let defect = r.unitarity_defect(3, 0x5eed);
    if defect > 1e-8 {
        return Err(Error::NonUnitary(defect));
    }
    Ok(r)
}

/// The Slater determinant `R_ν Ω` with one-particle density `ω`.
pub fn quasi_free_state(space: FockSpace, omega: &CMatrix) -> Result<FockVector> {
    let spec = bogoliubov_from_projection(omega)?;
    Ok(implement_bogoliubov(space, &spec)?.vacuum_image())
}
