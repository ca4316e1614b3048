//! Exact many-body propagation and the fluctuation dynamics.

use std::collections::HashMap;

use num_complex::Complex64;

use super::{hamiltonian, implement_bogoliubov, BogoliubovImplementor, FockOperator, FockSpace, FockVector};
use crate::error::{Error, Result};
use crate::initial_data::DensityMatrix;
use crate::linalg::{CMatrix, CVector, HermitianEigen};
use crate::meanfield::{MeanField, MeanFieldKind, Scheme};
use crate::model::{Lattice, ModelParams, Potential};

/// Sectors up to this dimension are diagonalized densely.
pub const DENSE_SECTOR_LIMIT: usize = 4096;

const KRYLOV_TOL: f64 = 1e-10;
const KRYLOV_MAX_DIM: usize = 40;

#[derive(Clone, Debug)]
struct Sector {
    masks: Vec<usize>,
    eigen: Option<HermitianEigen>,
}

/// `exp(-iHt/ħ)` for a number-conserving Hermitian `H`, sector by sector.
/// Dense eigendecompositions are cached, so repeated calls with different
/// `t` reuse them.
#[derive(Clone, Debug)]
pub struct ExactPropagator {
    space: FockSpace,
    h: FockOperator,
    hbar: f64,
    dense_limit: usize,
    sectors: HashMap<usize, Sector>,
}

impl ExactPropagator {
    pub fn new(space: FockSpace, h: FockOperator, hbar: f64) -> Result<Self> {
        if h.dim() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: h.dim() });
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        let rule = h.selection_rule();
        if rule.iter().any(|&d| d != 0) {
            return Err(Error::InvalidArgument(format!("Hamiltonian changes particle number by {rule:?}")));
        }
        let herm = h.hermiticity_defect();
        if herm > 1e-10 {
            return Err(Error::InvalidArgument(format!("Hamiltonian not Hermitian (defect {herm:e})")));
        }
        Ok(Self { space, h, hbar, dense_limit: DENSE_SECTOR_LIMIT, sectors: HashMap::new() })
    }

    /// Sectors larger than `limit` use Krylov propagation.
    pub fn with_dense_limit(mut self, limit: usize) -> Self {
        self.dense_limit = limit;
        self.sectors.clear();
        self
    }

    pub fn hamiltonian(&self) -> &FockOperator {
        &self.h
    }

    fn ensure_sector(&mut self, n: usize) {
        let (space, dense_limit, h) = (self.space, self.dense_limit, &self.h);
        self.sectors.entry(n).or_insert_with(|| {
            let masks = space.sector(n);
            let eigen = (masks.len() <= dense_limit).then(|| {
                let mut pos = vec![usize::MAX; space.dim()];
                for (i, &b) in masks.iter().enumerate() {
                    pos[b] = i;
                }
                let mut m = CMatrix::zeros(masks.len(), masks.len());
                for (i, &b) in masks.iter().enumerate() {
                    for (c, v) in h.row(b) {
                        m[(i, pos[c])] += v;
                    }
                }
                HermitianEigen::new(&m)
            });
            Sector { masks, eigen }
        });
    }

    pub fn evolve(&mut self, psi: &FockVector, t: f64) -> Result<FockVector> {
        if psi.space() != self.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), found: psi.space().dim() });
        }
        if t == 0.0 {
            return Ok(psi.clone());
        }
        let tau = t / self.hbar;
        let mut out = CVector::zeros(self.space.dim());
        let weights = psi.sector_weights();
        for (n, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            self.ensure_sector(n);
            let sector = &self.sectors[&n];
            let h = &self.h;
            let local = CVector::from_iterator(sector.masks.len(), sector.masks.iter().map(|&b| psi.amplitudes[b]));
            let evolved = match &sector.eigen {
                Some(eig) => {
                    let coeffs = eig.vectors.adjoint() * &local;
                    let phased = CVector::from_iterator(
                        coeffs.len(),
                        coeffs.iter().zip(&eig.values).map(|(c, l)| c * Complex64::from_polar(1.0, -tau * l)),
                    );
                    &eig.vectors * phased
                }
                None => {
                    let masks = &sector.masks;
                    let dim = self.space.dim();
                    let apply = |v: &CVector| {
                        let mut full = CVector::zeros(dim);
                        for (i, &b) in masks.iter().enumerate() {
                            full[b] = v[i];
                        }
                        let hv = h.apply_vec(&full);
                        CVector::from_iterator(masks.len(), masks.iter().map(|&b| hv[b]))
                    };
                    krylov_expm(apply, &local, tau)?
                }
            };
            for (i, &b) in sector.masks.iter().enumerate() {
                out[b] = evolved[i];
            }
        }
        FockVector::from_amplitudes(self.space, out)
    }
}

/// `exp(-iτH) v` by Lanczos with full reorthogonalization and adaptive
/// substeps. A substep is accepted when both the residual estimate and the
/// change from the previous Krylov dimension are below `1e-10` relative to
/// `‖v‖`.
pub(crate) fn krylov_expm(apply: impl Fn(&CVector) -> CVector, v: &CVector, tau: f64) -> Result<CVector> {
    let norm0 = v.norm();
    if norm0 == 0.0 {
        return Ok(v.clone());
    }
    let mut state = v.clone();
    let mut remaining = tau;
    let mut step = tau;
    let mut last_err = 0.0;
    while remaining.abs() > 0.0 {
        if step.abs() < 1e-12 * tau.abs() {
            return Err(Error::KrylovNonConvergence(last_err));
        }
        let h = if step.abs() > remaining.abs() { remaining } else { step };
        let beta0 = state.norm();
        let mut basis: Vec<CVector> = vec![state.unscale(beta0)];
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        let mut accepted = None;
        let mut previous: Option<CVector> = None;
        for m in 0..KRYLOV_MAX_DIM.min(v.len()) {
            let mut w = apply(&basis[m]);
            let a = basis[m].dotc(&w).re;
            alpha.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dotc(&w);
                    w -= q * c;
                }
            }
            let b = w.norm();
            let dim = m + 1;
            let t = tridiagonal(&alpha, &beta);
            let eig = HermitianEigen::new(&t);
            let e1: CVector = eig.vectors.row(0).adjoint();
            let phased = CVector::from_iterator(
                dim,
                e1.iter().zip(&eig.values).map(|(c, l)| c * Complex64::from_polar(1.0, -h * l)),
            );
            let y = &eig.vectors * phased;
            let residual = b * y[dim - 1].norm();
            let change = match &previous {
                Some(p) => (0..dim).map(|i| (y[i] - p.get(i).copied().unwrap_or_default()).norm_sqr()).sum::<f64>().sqrt(),
                None => f64::INFINITY,
            };
            let err = residual.max(change) * beta0 / norm0;
            last_err = err;
            if b < 1e-14 || err < KRYLOV_TOL || dim == v.len() {
                accepted = Some(y);
                break;
            }
            previous = Some(y);
            beta.push(b);
            basis.push(w.unscale(b));
        }
        match accepted {
            Some(y) => {
                let mut next = CVector::zeros(v.len());
                for (q, c) in basis.iter().zip(y.iter()) {
                    next += q * (*c * beta0);
                }
                state = next;
                remaining -= h;
                step = h * 1.5;
            }
            None => step = h * 0.5,
        }
    }
    Ok(state)
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> CMatrix {
    let m = alpha.len();
    let mut t = CMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = Complex64::new(alpha[i], 0.0);
        if i + 1 < m {
            t[(i, i + 1)] = Complex64::new(beta[i], 0.0);
            t[(i + 1, i)] = Complex64::new(beta[i], 0.0);
        }
    }
    t
}

pub fn exact_evolve(psi: &FockVector, h: &FockOperator, t: f64, hbar: f64) -> Result<FockVector> {
    ExactPropagator::new(psi.space(), h.clone(), hbar)?.evolve(psi, t)
}

/// `U(t;0) ξ = R*_{ν_t} e^{-iHt/ħ} R_{ν_0} ξ`, with `ω_t` obtained by running
/// the Hartree-Fock integrator up to each requested time.
pub struct FluctuationDynamics {
    space: FockSpace,
    propagator: ExactPropagator,
    meanfield: MeanField,
    omega0: DensityMatrix,
    r0: BogoliubovImplementor,
    dt: f64,
    scheme: Scheme,
}

impl FluctuationDynamics {
    pub fn new(
        omega0: &DensityMatrix,
        v: &Potential,
        params: &ModelParams,
        lattice: &Lattice,
        dt: f64,
        scheme: Scheme,
    ) -> Result<Self> {
        let space = FockSpace::new(lattice.site_count())?;
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let h = hamiltonian(space, v, params, lattice)?;
        let propagator = ExactPropagator::new(space, h, params.hbar())?;
        let spec = super::bogoliubov_from_projection(&omega0.matrix)?;
        let r0 = implement_bogoliubov(space, &spec)?;
        Ok(Self {
            space,
            propagator,
            meanfield: MeanField::new(MeanFieldKind::HartreeFock, v, *params, lattice),
            omega0: omega0.clone(),
            r0,
            dt,
            scheme,
        })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    /// Mean-field state at `t`, integrated from `ω_0` with the largest step
    /// not exceeding `dt` that divides `t`.
    pub fn meanfield_state(&self, t: f64) -> CMatrix {
        let mut omega = self.omega0.matrix.clone();
        if t > 0.0 {
            let steps = (t / self.dt).ceil().max(1.0) as usize;
            let h = t / steps as f64;
            for _ in 0..steps {
                omega = self.meanfield.step(&omega, h, self.scheme);
            }
        }
        omega
    }

    pub fn evolve(&mut self, xi: &FockVector, t: f64) -> Result<FockVector> {
        self.evolve_with_state(xi, t).map(|(v, _)| v)
    }

    /// Also returns the mean-field density used at time `t`.
    pub fn evolve_with_state(&mut self, xi: &FockVector, t: f64) -> Result<(FockVector, CMatrix)> {
        if xi.space() != self.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), found: xi.space().dim() });
        }
        let omega_t = self.meanfield_state(t);
        let full = self.propagator.evolve(&self.r0.apply(xi), t)?;
        let rt = implement_bogoliubov(self.space, &super::bogoliubov_from_projection(&omega_t)?)?;
        Ok((rt.apply_adjoint(&full), omega_t))
    }
}

pub fn fluctuation_evolve(
    xi: &FockVector,
    t: f64,
    omega0: &DensityMatrix,
    v: &Potential,
    params: &ModelParams,
    lattice: &Lattice,
    dt: f64,
) -> Result<FockVector> {
    FluctuationDynamics::new(omega0, v, params, lattice, dt, Scheme::default())?.evolve(xi, t)
}
