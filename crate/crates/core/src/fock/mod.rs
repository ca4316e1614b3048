//! Exact second-quantized oracle on tiny one-dimensional lattices.
//!
//! Basis states are occupation bitmasks ordered by integer value, bit `x`
//! standing for site `x`. Jordan-Wigner signs count occupied modes below the
//! acted-on site.

mod bogoliubov;
mod bounds;
mod evolution;
mod operator;
mod rdm;

pub use bogoliubov::{
    bogoliubov_from_projection, implement_bogoliubov, quasi_free_state, BogoliubovImplementor, BogoliubovSpec,
};
pub use bounds::{car_defect, verify_operator_bounds, BoundCheck, BoundsReport};
pub use evolution::{exact_evolve, fluctuation_evolve, ExactPropagator, FluctuationDynamics, DENSE_SECTOR_LIMIT};
pub use operator::FockOperator;
pub use rdm::{generalized_density, number_moment, rdm1, rdmk, wick_rdmk, RdmTensor};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::model::{kinetic_operator, Lattice, ModelParams, Potential};

pub const MAX_SITES: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    l_sites: usize,
}

impl FockSpace {
    pub fn new(l_sites: usize) -> Result<Self> {
        if l_sites == 0 || l_sites > MAX_SITES {
            return Err(Error::InvalidArgument(format!(
                "Fock space needs 1..={MAX_SITES} sites, got {l_sites}"
            )));
        }
        Ok(Self { l_sites })
    }

    pub fn l_sites(&self) -> usize {
        self.l_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.l_sites
    }

    /// Bitmasks with exactly `n` set bits, ascending.
    pub fn sector(&self, n: usize) -> Vec<usize> {
        (0..self.dim()).filter(|b| b.count_ones() as usize == n).collect()
    }

    fn check_site(&self, x: usize) -> Result<()> {
        if x >= self.l_sites {
            return Err(Error::InvalidArgument(format!("site {x} out of range for L = {}", self.l_sites)));
        }
        Ok(())
    }

    fn check_one_particle(&self, found: usize) -> Result<()> {
        if found != self.l_sites {
            return Err(Error::DimensionMismatch { expected: self.l_sites, found });
        }
        Ok(())
    }
}

/// `(-1)^(number of occupied modes below x)`.
#[inline]
pub(crate) fn jw_sign(b: usize, x: usize) -> f64 {
    if (b & ((1 << x) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub amplitudes: CVector,
    space: FockSpace,
}

impl FockVector {
    pub fn vacuum(space: FockSpace) -> Self {
        Self::basis(space, 0)
    }

    pub fn basis(space: FockSpace, mask: usize) -> Self {
        let mut amplitudes = CVector::zeros(space.dim());
        amplitudes[mask] = Complex64::new(1.0, 0.0);
        Self { amplitudes, space }
    }

    pub fn from_amplitudes(space: FockSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: amplitudes.len() });
        }
        Ok(Self { amplitudes, space })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.unscale_mut(n);
        }
        self
    }

    /// The sector holding the state, ignoring sectors whose weight is below
    /// `1e-24` of the total.
    pub fn particle_number(&self) -> Option<usize> {
        let w = self.sector_weights();
        let total: f64 = w.iter().sum();
        let mut occupied = w.iter().enumerate().filter(|(_, p)| **p > 1e-24 * total);
        match (occupied.next(), occupied.next()) {
            (Some((n, _)), None) => Some(n),
            _ => None,
        }
    }

    /// `‖ψ^(n)‖²` for `n = 0..=L`.
    pub fn sector_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.space.l_sites + 1];
        for (b, z) in self.amplitudes.iter().enumerate() {
            w[b.count_ones() as usize] += z.norm_sqr();
        }
        w
    }

    /// `a_x ψ`.
    pub fn annihilate_site(&self, x: usize) -> FockVector {
        let mut out = CVector::zeros(self.space.dim());
        for (b, z) in self.amplitudes.iter().enumerate() {
            if b & (1 << x) != 0 && *z != Complex64::new(0.0, 0.0) {
                out[b ^ (1 << x)] += z * jw_sign(b, x);
            }
        }
        FockVector { amplitudes: out, space: self.space }
    }

    /// `a*_x ψ`.
    pub fn create_site(&self, x: usize) -> FockVector {
        let mut out = CVector::zeros(self.space.dim());
        for (b, z) in self.amplitudes.iter().enumerate() {
            if b & (1 << x) == 0 && *z != Complex64::new(0.0, 0.0) {
                out[b | (1 << x)] += z * jw_sign(b, x);
            }
        }
        FockVector { amplitudes: out, space: self.space }
    }

    /// `a(f) ψ = Σ_x conj(f(x)) a_x ψ`.
    pub fn annihilate(&self, f: &CVector) -> FockVector {
        let mut out = CVector::zeros(self.space.dim());
        for (b, z) in self.amplitudes.iter().enumerate() {
            if *z == Complex64::new(0.0, 0.0) {
                continue;
            }
            for x in 0..self.space.l_sites {
                if b & (1 << x) != 0 {
                    out[b ^ (1 << x)] += z * f[x].conj() * jw_sign(b, x);
                }
            }
        }
        FockVector { amplitudes: out, space: self.space }
    }

    /// `a*(f) ψ = Σ_x f(x) a*_x ψ`.
    pub fn create(&self, f: &CVector) -> FockVector {
        let mut out = CVector::zeros(self.space.dim());
        for (b, z) in self.amplitudes.iter().enumerate() {
            if *z == Complex64::new(0.0, 0.0) {
                continue;
            }
            for x in 0..self.space.l_sites {
                if b & (1 << x) == 0 {
                    out[b | (1 << x)] += z * f[x] * jw_sign(b, x);
                }
            }
        }
        FockVector { amplitudes: out, space: self.space }
    }

    pub fn scaled(&self, c: Complex64) -> FockVector {
        FockVector { amplitudes: self.amplitudes.map(|z| z * c), space: self.space }
    }

    pub fn add(&self, other: &FockVector) -> FockVector {
        FockVector { amplitudes: &self.amplitudes + &other.amplitudes, space: self.space }
    }

    pub fn sub(&self, other: &FockVector) -> FockVector {
        FockVector { amplitudes: &self.amplitudes - &other.amplitudes, space: self.space }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderKind {
    Create,
    Annihilate,
}

pub fn ladder(space: FockSpace, site: usize, kind: LadderKind) -> Result<FockOperator> {
    space.check_site(site)?;
    let bit = 1 << site;
    let mut triplets = Vec::with_capacity(space.dim() / 2);
    for b in 0..space.dim() {
        let occupied = b & bit != 0;
        match kind {
            LadderKind::Annihilate if occupied => triplets.push((b ^ bit, b, Complex64::new(jw_sign(b, site), 0.0))),
            LadderKind::Create if !occupied => triplets.push((b | bit, b, Complex64::new(jw_sign(b, site), 0.0))),
            _ => {}
        }
    }
    Ok(FockOperator::from_triplets(space.dim(), triplets))
}

/// `dΓ(O) = Σ_xy O_xy a*_x a_y`.
pub fn d_gamma(space: FockSpace, o: &CMatrix) -> Result<FockOperator> {
    space.check_one_particle(o.nrows())?;
    space.check_one_particle(o.ncols())?;
    let l = space.l_sites;
    let mut triplets = Vec::new();
    for b in 0..space.dim() {
        for y in (0..l).filter(|y| b & (1 << y) != 0) {
            let b1 = b ^ (1 << y);
            let s1 = jw_sign(b, y);
            for x in (0..l).filter(|x| b1 & (1 << x) == 0) {
                let c = o[(x, y)];
                if c != Complex64::new(0.0, 0.0) {
                    triplets.push((b1 | (1 << x), b, c * (s1 * jw_sign(b1, x))));
                }
            }
        }
    }
    Ok(FockOperator::from_triplets(space.dim(), triplets))
}

/// `Σ_xy O_xy a_x a_y`.
pub fn pair_annihilation(space: FockSpace, o: &CMatrix) -> Result<FockOperator> {
    space.check_one_particle(o.nrows())?;
    let l = space.l_sites;
    let mut triplets = Vec::new();
    for b in 0..space.dim() {
        for y in (0..l).filter(|y| b & (1 << y) != 0) {
            let b1 = b ^ (1 << y);
            let s1 = jw_sign(b, y);
            for x in (0..l).filter(|x| b1 & (1 << x) != 0) {
                triplets.push((b1 ^ (1 << x), b, o[(x, y)] * (s1 * jw_sign(b1, x))));
            }
        }
    }
    Ok(FockOperator::from_triplets(space.dim(), triplets))
}

/// `Σ_xy O_xy a*_x a*_y`.
pub fn pair_creation(space: FockSpace, o: &CMatrix) -> Result<FockOperator> {
    space.check_one_particle(o.nrows())?;
    let l = space.l_sites;
    let mut triplets = Vec::new();
    for b in 0..space.dim() {
        for y in (0..l).filter(|y| b & (1 << y) == 0) {
            let b1 = b | (1 << y);
            let s1 = jw_sign(b, y);
            for x in (0..l).filter(|x| b1 & (1 << x) == 0) {
                triplets.push((b1 | (1 << x), b, o[(x, y)] * (s1 * jw_sign(b1, x))));
            }
        }
    }
    Ok(FockOperator::from_triplets(space.dim(), triplets))
}

pub fn number_operator(space: FockSpace) -> FockOperator {
    FockOperator::diagonal((0..space.dim()).map(|b| b.count_ones() as f64).collect())
}

/// `H = dΓ(-ħ²Δ) + (1/2N) Σ_{x≠y} V(x-y) n_x n_y`.
///
/// With matrix-convention kernels the pair term carries no extra volume
/// factor, which makes `⟨H⟩` on a Slater state equal the Hartree-Fock energy
/// of its one-particle density.
pub fn hamiltonian(space: FockSpace, v: &Potential, params: &ModelParams, lattice: &Lattice) -> Result<FockOperator> {
    if lattice.ds() != 1 {
        return Err(Error::InvalidArgument("Fock Hamiltonian needs a one-dimensional lattice".into()));
    }
    space.check_one_particle(lattice.site_count())?;
    let kinetic = d_gamma(space, &kinetic_operator(lattice, params.hbar()))?;
    if v.is_zero() {
        return Ok(kinetic);
    }
    let l = space.l_sites;
    let c = 0.5 * params.coupling();
    let diag: Vec<f64> = (0..space.dim())
        .map(|b| {
            let mut e = 0.0;
            for x in (0..l).filter(|x| b & (1 << x) != 0) {
                for y in (0..l).filter(|&y| y != x && b & (1 << y) != 0) {
                    e += v.pair(lattice, x, y);
                }
            }
            c * e
        })
        .collect();
    Ok(kinetic.add(&FockOperator::diagonal(diag)))
}
