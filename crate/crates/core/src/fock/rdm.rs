//! Reduced densities, Wick contractions and number moments.

use num_complex::Complex64;

use super::{FockSpace, FockVector};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// `γ(x;y) = ⟨ψ, a*_y a_x ψ⟩ = ⟨a_y ψ, a_x ψ⟩`.
pub fn rdm1(psi: &FockVector) -> CMatrix {
    let l = psi.space().l_sites();
    let lowered: Vec<FockVector> = (0..l).map(|x| psi.annihilate_site(x)).collect();
    CMatrix::from_fn(l, l, |x, y| lowered[y].inner(&lowered[x]))
}

/// A `k`-particle kernel stored as an `L^k × L^k` matrix; the row index
/// enumerates `(x_1, …, x_k)` with `x_1` slowest, the column `(x'_1, …, x'_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RdmTensor {
    pub l: usize,
    pub k: usize,
    pub data: CMatrix,
}

impl RdmTensor {
    fn flat(&self, xs: &[usize]) -> usize {
        xs.iter().fold(0, |acc, &x| acc * self.l + x)
    }

    pub fn get(&self, xs: &[usize], ys: &[usize]) -> Complex64 {
        self.data[(self.flat(xs), self.flat(ys))]
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn max_abs_diff(&self, other: &RdmTensor) -> f64 {
        crate::linalg::max_abs_entry(&(&self.data - &other.data))
    }
}

fn multi_index(mut flat: usize, l: usize, k: usize) -> Vec<usize> {
    let mut xs = vec![0; k];
    for slot in xs.iter_mut().rev() {
        *slot = flat % l;
        flat /= l;
    }
    xs
}

pub const MAX_RDM_ORDER: usize = 3;

/// `γ^(k)(x⃗; x⃗') = ⟨ψ, a*_{x'_1} ⋯ a*_{x'_k} a_{x_k} ⋯ a_{x_1} ψ⟩`.
pub fn rdmk(psi: &FockVector, k: usize) -> Result<RdmTensor> {
    if k == 0 || k > MAX_RDM_ORDER {
        return Err(Error::InvalidArgument(format!("rdm order {k} outside 1..={MAX_RDM_ORDER}")));
    }
    let weights = psi.sector_weights();
    let total: f64 = weights.iter().sum();
    let mean_n: f64 = weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum::<f64>() / total;
    if (k as f64) > mean_n + 1e-9 {
        return Err(Error::InvalidArgument(format!("rdm order {k} exceeds mean particle number {mean_n}")));
    }
    let l = psi.space().l_sites();
    let count = l.pow(k as u32);
    // Column c holds a_{x_k} ⋯ a_{x_1} ψ.
    let mut lowered = CMatrix::zeros(psi.space().dim(), count);
    for c in 0..count {
        let xs = multi_index(c, l, k);
        let mut v = psi.clone();
        for &x in &xs {
            v = v.annihilate_site(x);
        }
        lowered.set_column(c, &v.amplitudes);
    }
    let data = lowered.adjoint() * &lowered;
    Ok(RdmTensor { l, k, data: data.transpose() })
}

/// `ω^(k)(x⃗; x⃗') = det[ω(x_i; x'_j)]`.
pub fn wick_rdmk(omega: &CMatrix, k: usize) -> Result<RdmTensor> {
    if k == 0 {
        return Err(Error::InvalidArgument("rdm order must be at least 1".into()));
    }
    let l = omega.nrows();
    let count = l.pow(k as u32);
    let mut data = CMatrix::zeros(count, count);
    for r in 0..count {
        let xs = multi_index(r, l, k);
        for c in 0..count {
            let ys = multi_index(c, l, k);
            data[(r, c)] = CMatrix::from_fn(k, k, |i, j| omega[(xs[i], ys[j])]).determinant();
        }
    }
    Ok(RdmTensor { l, k, data })
}

/// `Γ = [[γ, α], [-conj α, 1 - conj γ]]` with `α(x;y) = ⟨ψ, a_y a_x ψ⟩`.
pub fn generalized_density(psi: &FockVector) -> CMatrix {
    let l = psi.space().l_sites();
    let gamma = rdm1(psi);
    let raised: Vec<FockVector> = (0..l).map(|y| psi.create_site(y)).collect();
    let lowered: Vec<FockVector> = (0..l).map(|x| psi.annihilate_site(x)).collect();
    // ⟨ψ, a_y a_x ψ⟩ = ⟨a*_y ψ, a_x ψ⟩.
    let alpha = CMatrix::from_fn(l, l, |x, y| raised[y].inner(&lowered[x]));
    let mut g = CMatrix::zeros(2 * l, 2 * l);
    g.view_mut((0, 0), (l, l)).copy_from(&gamma);
    g.view_mut((0, l), (l, l)).copy_from(&alpha);
    g.view_mut((l, 0), (l, l)).copy_from(&alpha.map(|z| -z.conj()));
    g.view_mut((l, l), (l, l)).copy_from(&(CMatrix::identity(l, l) - gamma.conjugate()));
    g
}

/// `⟨ξ, (𝒩+1)^k ξ⟩ / ‖ξ‖²`.
pub fn number_moment(xi: &FockVector, k: u32) -> Result<f64> {
    if k > 6 {
        return Err(Error::InvalidArgument(format!("moment order {k} exceeds 6")));
    }
    let w = xi.sector_weights();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("zero vector has no number moments".into()));
    }
    Ok(w.iter().enumerate().map(|(n, p)| p * ((n + 1) as f64).powi(k as i32)).sum::<f64>() / total)
}

pub(crate) fn random_vector(space: FockSpace, rng: &mut impl rand::Rng) -> FockVector {
    let amps = CVector::from_fn(space.dim(), |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    FockVector { amplitudes: amps, space }.normalized()
}
