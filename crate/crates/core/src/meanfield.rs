//! Hartree-Fock and Hartree flows for one-particle density matrices.

use num_complex::Complex64;

use crate::diagnostics::trace_norm;
use crate::error::{Error, Result};
use crate::initial_data::DensityMatrix;
use crate::linalg::{fft_nd, idempotency_defect, trace, unitary_propagator, CMatrix, HermitianEigen};
use crate::model::{kinetic_operator, Lattice, ModelParams, OneParticleOperator, Potential};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeanFieldKind {
    HartreeFock,
    Hartree,
    /// Interaction ignored; generator `-ħ²Δ`.
    Free,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    #[default]
    MidpointExponential,
    EulerExponential,
    /// Strang splitting: exact half steps of the one-body part around a
    /// midpoint-exponential mean-field kick. For a single orbital the kick
    /// is the identity, so Hartree-Fock and free flows agree to round-off.
    SplitMidpoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub snapshot_stride: usize,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self { dt, t_final, scheme: Scheme::default(), snapshot_stride: 1 }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) {
            return Err(Error::InvalidArgument(format!(
                "t_final {} must be at least dt {}",
                self.t_final, self.dt
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument("snapshot_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps, `round(t_final / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

pub type HookFn<'a> = Box<dyn Fn(f64, &DensityMatrix) -> Result<f64> + 'a>;

/// Scalar quantity evaluated on snapshots during `evolve`.
pub struct Hook<'a> {
    pub name: String,
    pub eval: HookFn<'a>,
}

impl<'a> Hook<'a> {
    pub fn new(name: impl Into<String>, eval: impl Fn(f64, &DensityMatrix) -> Result<f64> + 'a) -> Self {
        Self { name: name.into(), eval: Box::new(eval) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub trace: f64,
    pub energy: f64,
    pub idempotency_defect: f64,
    /// One entry per hook; `None` between snapshots.
    pub hooks: Vec<Option<f64>>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub records: Vec<StepRecord>,
    pub hook_names: Vec<String>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn max_idempotency_defect(&self) -> f64 {
        self.records.iter().map(|r| r.idempotency_defect).fold(0.0, f64::max)
    }

    pub fn max_trace_drift(&self) -> f64 {
        let t0 = self.records[0].trace;
        self.records.iter().map(|r| (r.trace - t0).abs()).fold(0.0, f64::max)
    }

    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.records[0].energy;
        let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
        self.records.iter().map(|r| (r.energy - e0).abs() / scale).fold(0.0, f64::max)
    }

    /// Columns `t, trace, energy, idempotency_defect` and one per hook.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,trace,energy,idempotency_defect");
        for name in &self.hook_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}", r.t, r.trace, r.energy, r.idempotency_defect));
            for h in &r.hooks {
                out.push(',');
                if let Some(v) = h {
                    out.push_str(&format!("{v:.17e}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// `ρ(x_j) = ω_jj / (N a^ds)`.
pub fn density_profile(omega: &DensityMatrix, lattice: &Lattice) -> Result<Vec<f64>> {
    check_dim(omega.dim(), lattice)?;
    let n = omega.trace();
    if !(n > 0.0) {
        return Err(Error::InvalidArgument(format!("density profile needs positive trace, got {n}")));
    }
    let scale = 1.0 / (n * lattice.cell_volume());
    Ok(omega.matrix.diagonal().iter().map(|z| z.re * scale).collect())
}

fn check_dim(found: usize, lattice: &Lattice) -> Result<()> {
    if found != lattice.site_count() {
        return Err(Error::DimensionMismatch { expected: lattice.site_count(), found });
    }
    Ok(())
}

/// `(V∗ρ)(x) = a^ds Σ_y V(x-y) ρ(y)`, by FFT.
pub fn convolve(values: &[f64], v: &Potential, lattice: &Lattice) -> Vec<f64> {
    let s = lattice.site_count();
    let (d, ds) = (lattice.d(), lattice.ds());
    let mut fv: Vec<Complex64> = v.real_space().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut fr: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_nd(&mut fv, d, ds, false);
    fft_nd(&mut fr, d, ds, false);
    for (a, b) in fr.iter_mut().zip(&fv) {
        *a *= b;
    }
    fft_nd(&mut fr, d, ds, true);
    let scale = lattice.cell_volume() / s as f64;
    fr.iter().map(|z| z.re * scale).collect()
}

/// Diagonal operator `V∗ρ`.
pub fn direct_term(rho: &[f64], v: &Potential, lattice: &Lattice) -> Result<OneParticleOperator> {
    check_dim(rho.len(), lattice)?;
    Ok(crate::linalg::real_diagonal(&convolve(rho, v, lattice)))
}

/// `X_xy = V(x-y) ω_xy / N`.
///
/// `ω_xy` already carries the cell volume, so no further `a^ds` appears.
pub fn exchange_term(omega: &DensityMatrix, v: &Potential, lattice: &Lattice) -> Result<OneParticleOperator> {
    check_dim(omega.dim(), lattice)?;
    let pair = v.pair_matrix(lattice);
    let s = lattice.site_count();
    let c = 1.0 / omega.n_particles.max(1) as f64;
    Ok(CMatrix::from_fn(s, s, |j, i| omega.matrix[(j, i)] * (c * pair[j * s + i])))
}

/// Precomputed pieces of a mean-field flow.
#[derive(Clone, Debug)]
pub struct MeanField {
    kind: MeanFieldKind,
    lattice: Lattice,
    params: ModelParams,
    potential: Potential,
    kinetic: CMatrix,
    pair: Vec<f64>,
    v_ext: Option<Vec<f64>>,
    one_body_eigen: HermitianEigen,
}

impl MeanField {
    pub fn new(kind: MeanFieldKind, potential: &Potential, params: ModelParams, lattice: &Lattice) -> Self {
        let kinetic = kinetic_operator(lattice, params.hbar());
        Self {
            kind,
            lattice: lattice.clone(),
            params,
            potential: potential.clone(),
            one_body_eigen: HermitianEigen::new(&kinetic),
            kinetic,
            pair: potential.pair_matrix(lattice),
            v_ext: None,
        }
    }

    /// Adds a static external potential to the one-body part.
    pub fn with_external(mut self, v_ext: Vec<f64>) -> Result<Self> {
        check_dim(v_ext.len(), &self.lattice)?;
        self.v_ext = Some(v_ext);
        self.one_body_eigen = HermitianEigen::new(&self.one_body());
        Ok(self)
    }

    pub fn kind(&self) -> MeanFieldKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    fn one_body(&self) -> CMatrix {
        let mut h = self.kinetic.clone();
        if let Some(v) = &self.v_ext {
            for (j, x) in v.iter().enumerate() {
                h[(j, j)] += Complex64::new(*x, 0.0);
            }
        }
        h
    }

    /// `h(ω)`, Hermitian by construction.
    pub fn generator(&self, omega: &CMatrix) -> CMatrix {
        let mut h = self.one_body();
        if self.kind == MeanFieldKind::Free || self.potential.is_zero() {
            return h;
        }
        let c = self.params.coupling();
        let s = self.lattice.site_count();
        let diag: Vec<f64> = omega.diagonal().iter().map(|z| z.re * c / self.lattice.cell_volume()).collect();
        let direct = convolve(&diag, &self.potential, &self.lattice);
        for (j, x) in direct.iter().enumerate() {
            h[(j, j)] += Complex64::new(*x, 0.0);
        }
        if self.kind == MeanFieldKind::HartreeFock {
            for i in 0..s {
                for j in 0..s {
                    h[(j, i)] -= omega[(j, i)] * (c * self.pair[j * s + i]);
                }
            }
        }
        (&h + h.adjoint()).scale(0.5)
    }

    /// `E(ω) = tr((-ħ²Δ + V_ext) ω) + (1/2N) Σ V(x-y) (ω_xx ω_yy - |ω_xy|²)`.
    pub fn energy(&self, omega: &CMatrix) -> f64 {
        let one = (self.one_body() * omega).trace().re;
        if self.potential.is_zero() {
            return one;
        }
        let s = self.lattice.site_count();
        let mut inter = 0.0;
        for j in 0..s {
            for i in 0..s {
                let w = self.pair[j * s + i];
                inter += w * (omega[(j, j)].re * omega[(i, i)].re - omega[(j, i)].norm_sqr());
            }
        }
        one + 0.5 * self.params.coupling() * inter
    }

    pub fn step(&self, omega: &CMatrix, dt: f64, scheme: Scheme) -> CMatrix {
        let tau = dt / self.params.hbar();
        if scheme == Scheme::SplitMidpoint {
            let half = self.one_body_eigen.apply_fn(|l| Complex64::from_polar(1.0, -0.5 * tau * l));
            let mut w = &half * omega * half.adjoint();
            if self.kind != MeanFieldKind::Free && !self.potential.is_zero() {
                let one = self.one_body();
                let u0 = unitary_propagator(&(self.generator(&w) - &one), tau);
                let pred = &u0 * &w * u0.adjoint();
                let mid = (&w + &pred).scale(0.5);
                let u = unitary_propagator(&(self.generator(&mid) - &one), tau);
                w = &u * &w * u.adjoint();
            }
            return &half * w * half.adjoint();
        }
        let u0 = unitary_propagator(&self.generator(omega), tau);
        let pred = &u0 * omega * u0.adjoint();
        let u = match scheme {
            Scheme::EulerExponential | Scheme::SplitMidpoint => return pred,
            Scheme::MidpointExponential => {
                if self.kind == MeanFieldKind::Free || self.potential.is_zero() {
                    return pred;
                }
                let mid = (omega + &pred).scale(0.5);
                unitary_propagator(&self.generator(&mid), tau)
            }
        };
        &u * omega * u.adjoint()
    }

    /// Integrates from `omega0` and records scalars every step and hooks and
    /// states every `snapshot_stride` steps. The final state is always kept.
    pub fn evolve(&self, omega0: &DensityMatrix, cfg: &EvolutionConfig, hooks: &[Hook<'_>]) -> Result<Trajectory> {
        cfg.validate()?;
        check_dim(omega0.dim(), &self.lattice)?;
        omega0.validate()?;
        let steps = cfg.steps();
        let defect0 = idempotency_defect(&omega0.matrix);
        let mut traj = Trajectory {
            times: Vec::new(),
            states: Vec::new(),
            records: Vec::with_capacity(steps + 1),
            hook_names: hooks.iter().map(|h| h.name.clone()).collect(),
        };
        let mut omega = omega0.matrix.clone();
        for n in 0..=steps {
            if n > 0 {
                omega = self.step(&omega, cfg.dt, cfg.scheme);
            }
            let t = n as f64 * cfg.dt;
            let defect = idempotency_defect(&omega);
            if !defect.is_finite() || defect > defect0 + 1e-4 {
                return Err(Error::IntegratorBlowUp { t, defect });
            }
            let snapshot = n % cfg.snapshot_stride == 0 || n == steps;
            let mut values = vec![None; hooks.len()];
            if snapshot {
                let state = DensityMatrix::new(omega.clone(), omega0.n_particles);
                for (slot, hook) in values.iter_mut().zip(hooks) {
                    *slot = Some((hook.eval)(t, &state)?);
                }
                traj.times.push(t);
                traj.states.push(state);
            }
            traj.records.push(StepRecord {
                t,
                trace: trace(&omega).re,
                energy: self.energy(&omega),
                idempotency_defect: defect,
                hooks: values,
            });
        }
        Ok(traj)
    }
}

pub fn generator(
    omega: &DensityMatrix,
    kind: MeanFieldKind,
    v: &Potential,
    params: &ModelParams,
    lattice: &Lattice,
) -> Result<OneParticleOperator> {
    check_dim(omega.dim(), lattice)?;
    Ok(MeanField::new(kind, v, *params, lattice).generator(&omega.matrix))
}

pub fn step(
    omega: &DensityMatrix,
    cfg: &EvolutionConfig,
    kind: MeanFieldKind,
    v: &Potential,
    params: &ModelParams,
    lattice: &Lattice,
) -> Result<DensityMatrix> {
    if !(cfg.dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {}", cfg.dt)));
    }
    check_dim(omega.dim(), lattice)?;
    let mf = MeanField::new(kind, v, *params, lattice);
    Ok(DensityMatrix::new(mf.step(&omega.matrix, cfg.dt, cfg.scheme), omega.n_particles))
}

pub fn evolve(
    omega0: &DensityMatrix,
    cfg: &EvolutionConfig,
    kind: MeanFieldKind,
    v: &Potential,
    params: &ModelParams,
    lattice: &Lattice,
    hooks: &[Hook<'_>],
) -> Result<Trajectory> {
    MeanField::new(kind, v, *params, lattice).evolve(omega0, cfg, hooks)
}

pub fn hf_energy(
    omega: &DensityMatrix,
    v: &Potential,
    params: &ModelParams,
    lattice: &Lattice,
    v_ext: Option<&[f64]>,
) -> Result<f64> {
    check_dim(omega.dim(), lattice)?;
    let mut mf = MeanField::new(MeanFieldKind::HartreeFock, v, *params, lattice);
    if let Some(ext) = v_ext {
        mf = mf.with_external(ext.to_vec())?;
    }
    Ok(mf.energy(&omega.matrix))
}

/// Trace-norm gap between Hartree-Fock and Hartree flows from the same data.
#[derive(Clone, Debug, PartialEq)]
pub struct GapSeries {
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
}

impl GapSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,trace_gap\n");
        for (t, g) in self.times.iter().zip(&self.gaps) {
            out.push_str(&format!("{t:.17e},{g:.17e}\n"));
        }
        out
    }
}

pub fn compare_hf_hartree(
    omega0: &DensityMatrix,
    cfg: &EvolutionConfig,
    v: &Potential,
    params: &ModelParams,
    lattice: &Lattice,
) -> Result<GapSeries> {
    let hf = evolve(omega0, cfg, MeanFieldKind::HartreeFock, v, params, lattice, &[])?;
    let h = evolve(omega0, cfg, MeanFieldKind::Hartree, v, params, lattice, &[])?;
    let gaps = hf
        .states
        .iter()
        .zip(&h.states)
        .map(|(a, b)| trace_norm(&(&a.matrix - &b.matrix)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GapSeries { times: hf.times, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{fermi_ball, harmonic_trap, plane_wave_projection, trapped_slater};
    use crate::linalg::{c64, frobenius, hermiticity_defect, max_abs_entry};
    use crate::model::PotentialSpec;
    use std::f64::consts::PI;

    fn gaussian(l: &Lattice, lambda: f64, sigma: f64) -> Potential {
        Potential::build(&PotentialSpec::Gaussian { lambda, sigma }, l).unwrap()
    }

    fn released(l: &Lattice, hbar: f64, n: usize) -> DensityMatrix {
        trapped_slater(l, hbar, &harmonic_trap(l, 500.0), n).unwrap()
    }

    #[test]
    fn density_profile_examples() {
        let l = Lattice::new(1, 16, 2.0).unwrap();
        let ball = plane_wave_projection(&l, &fermi_ball(&l, 3).unwrap()).unwrap();
        let rho = density_profile(&ball, &l).unwrap();
        assert!(rho.iter().all(|r| (r - 0.5).abs() < 1e-12));

        let mut m = CMatrix::zeros(16, 16);
        m[(0, 0)] = c64(3.0, 0.0);
        let rho = density_profile(&DensityMatrix::new(m, 3), &l).unwrap();
        assert!((rho[0] * l.cell_volume() - 1.0).abs() < 1e-14);
        assert!(rho[1..].iter().all(|&r| r == 0.0));

        let l = Lattice::new(1, 64, 1.0).unwrap();
        let trapped = released(&l, 0.25, 4);
        let rho = density_profile(&trapped, &l).unwrap();
        let total: f64 = rho.iter().sum::<f64>() * l.cell_volume();
        assert!((total - 1.0).abs() < 1e-10);
        let peak = rho.iter().cloned().fold(0.0, f64::max);
        let argmax = rho.iter().position(|&r| r == peak).unwrap();
        assert!(rho[0] < 1e-3 * peak && (24..=40).contains(&argmax));
    }

    #[test]
    fn direct_term_matches_direct_convolution() {
        let l = Lattice::new(2, 6, 1.5).unwrap();
        let v = gaussian(&l, 1.3, 0.3);
        let s = l.site_count();
        let rho: Vec<f64> = (0..s).map(|j| 1.0 + (j as f64 * 0.7).sin()).collect();
        let fast = direct_term(&rho, &v, &l).unwrap();
        for x in 0..s {
            let slow: f64 = (0..s).map(|y| v.pair(&l, x, y) * rho[y]).sum::<f64>() * l.cell_volume();
            assert!((fast[(x, x)].re - slow).abs() < 1e-12);
        }
        assert!(direct_term(&rho, &Potential::build(&PotentialSpec::Zero, &l).unwrap(), &l)
            .unwrap()
            .iter()
            .all(|z| z.norm() < 1e-15));

        let uniform = vec![1.0 / l.volume(); s];
        let c = direct_term(&uniform, &v, &l).unwrap();
        let v0 = v.fourier()[l.momentum_index(&[0, 0]).unwrap()].re;
        for x in 0..s {
            assert!((c[(x, x)].re - v0).abs() < 1e-12);
        }

        let mut point = vec![0.0; s];
        point[0] = 1.0 / l.cell_volume();
        let c = direct_term(&point, &v, &l).unwrap();
        for x in 0..s {
            assert!((c[(x, x)].re - v.real_space()[x]).abs() < 1e-12);
        }
    }

    #[test]
    fn exchange_examples() {
        let l = Lattice::new(1, 32, 1.0).unwrap();
        let omega = released(&l, 0.3, 3);
        let zero = Potential::build(&PotentialSpec::Zero, &l).unwrap();
        assert!(max_abs_entry(&exchange_term(&omega, &zero, &l).unwrap()) == 0.0);
        let v = gaussian(&l, 1.0, 0.2);
        let x = exchange_term(&omega, &v, &l).unwrap();
        assert!(hermiticity_defect(&x) < 1e-12);
        // tr|X| ≤ (1/N) max_x Σ_y |V(x-y)| tr ω
        let bound = v.max_row_sum() * omega.trace() / omega.n_particles as f64;
        assert!(trace_norm(&x).unwrap() <= bound + 1e-12);
    }

    #[test]
    fn single_orbital_cancellation() {
        let l = Lattice::new(1, 32, 1.0).unwrap();
        let omega = released(&l, 1.0, 1);
        let v = gaussian(&l, 1.0, 0.2);
        let rho = density_profile(&omega, &l).unwrap();
        let w = direct_term(&rho, &v, &l).unwrap() - exchange_term(&omega, &v, &l).unwrap();
        let eig = crate::linalg::HermitianEigen::new(&omega.matrix);
        let f = eig.vectors.column(31).into_owned();
        assert!((&w * &f).norm() < 1e-10);

        let params = ModelParams::new(1, &l).unwrap();
        let hf = generator(&omega, MeanFieldKind::HartreeFock, &v, &params, &l).unwrap();
        let free = generator(&omega, MeanFieldKind::Free, &v, &params, &l).unwrap();
        assert!(((&hf - &free) * &f).norm() < 1e-10);
        assert!(max_abs_entry(&(free - kinetic_operator(&l, 1.0))) == 0.0);
        let hartree = generator(&omega, MeanFieldKind::Hartree, &v, &params, &l).unwrap();
        assert!(max_abs_entry(&(hartree - hf - exchange_term(&omega, &v, &l).unwrap())) < 1e-12);
    }

    #[test]
    fn step_preserves_spectrum_and_free_step_is_exact() {
        let l = Lattice::new(1, 32, 1.0).unwrap();
        let params = ModelParams::new(4, &l).unwrap();
        let v = gaussian(&l, 1.0, 0.2);
        let omega = released(&l, params.hbar(), 4);
        let cfg = EvolutionConfig::new(0.01, 1.0);
        let next = step(&omega, &cfg, MeanFieldKind::HartreeFock, &v, &params, &l).unwrap();
        for (a, b) in omega.eigenvalues().iter().zip(next.eigenvalues()) {
            assert!((a - b).abs() < 1e-10);
        }
        let free = step(&omega, &cfg, MeanFieldKind::Free, &v, &params, &l).unwrap();
        let u = unitary_propagator(&kinetic_operator(&l, params.hbar()), 0.01 / params.hbar());
        assert!(max_abs_entry(&(&u * &omega.matrix * u.adjoint() - free.matrix)) < 1e-12);
    }

    #[test]
    fn midpoint_local_error_is_third_order() {
        let l = Lattice::new(1, 16, 1.0).unwrap();
        let params = ModelParams::new(4, &l).unwrap();
        let v = gaussian(&l, 4.0, 0.2);
        let omega = released(&l, params.hbar(), 4);
        let mf = MeanField::new(MeanFieldKind::HartreeFock, &v, params, &l);
        let local = |dt: f64| {
            let coarse = mf.step(&omega.matrix, dt, Scheme::MidpointExponential);
            let mut fine = omega.matrix.clone();
            for _ in 0..100 {
                fine = mf.step(&fine, dt / 100.0, Scheme::MidpointExponential);
            }
            frobenius(&(coarse - fine))
        };
        let ratio = local(0.005) / local(0.0025);
        assert!((6.0..=10.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn split_scheme_is_exact_for_one_particle() {
        let l = Lattice::new(1, 32, 1.0).unwrap();
        let params = ModelParams::new(1, &l).unwrap();
        let v = gaussian(&l, 1.0, 0.2);
        let omega = released(&l, params.hbar(), 1);
        let hf = MeanField::new(MeanFieldKind::HartreeFock, &v, params, &l);
        let free = MeanField::new(MeanFieldKind::Free, &v, params, &l);
        let (mut a, mut b) = (omega.matrix.clone(), omega.matrix.clone());
        for _ in 0..50 {
            a = hf.step(&a, 0.01, Scheme::SplitMidpoint);
            b = free.step(&b, 0.01, Scheme::SplitMidpoint);
        }
        assert!(trace_norm(&(a - b)).unwrap() < 1e-11);
    }

    #[test]
    fn split_local_error_is_third_order() {
        let l = Lattice::new(1, 16, 1.0).unwrap();
        let params = ModelParams::new(4, &l).unwrap();
        let v = gaussian(&l, 4.0, 0.2);
        let omega = released(&l, params.hbar(), 4);
        let mf = MeanField::new(MeanFieldKind::HartreeFock, &v, params, &l);
        let local = |dt: f64| {
            let coarse = mf.step(&omega.matrix, dt, Scheme::SplitMidpoint);
            let mut fine = omega.matrix.clone();
            for _ in 0..100 {
                fine = mf.step(&fine, dt / 100.0, Scheme::MidpointExponential);
            }
            frobenius(&(coarse - fine))
        };
        let ratio = local(0.005) / local(0.0025);
        assert!((6.0..=10.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn free_ball_is_stationary() {
        let l = Lattice::new(1, 32, 1.0).unwrap();
        let params = ModelParams::new(5, &l).unwrap();
        let ball = plane_wave_projection(&l, &fermi_ball(&l, 5).unwrap()).unwrap();
        let zero = Potential::build(&PotentialSpec::Zero, &l).unwrap();
        let traj = evolve(&ball, &EvolutionConfig::new(0.01, 1.0), MeanFieldKind::HartreeFock, &zero, &params, &l, &[])
            .unwrap();
        assert!(max_abs_entry(&(&traj.final_state().matrix - &ball.matrix)) < 1e-10);
    }

    #[test]
    fn trace_and_projection_are_preserved() {
        let l = Lattice::new(1, 16, 1.0).unwrap();
        let params = ModelParams::new(3, &l).unwrap();
        let v = gaussian(&l, 1.0, 0.2);
        let omega = released(&l, params.hbar(), 3);
        let cfg = EvolutionConfig::new(1e-3, 1.0).with_stride(100);
        let traj = evolve(&omega, &cfg, MeanFieldKind::HartreeFock, &v, &params, &l, &[]).unwrap();
        assert_eq!(traj.records.len(), 1001);
        assert_eq!(traj.states.len(), 11);
        assert!(traj.max_trace_drift() <= 1e-9);
        assert!(traj.max_idempotency_defect() <= 1e-8);
    }

    #[test]
    fn energy_examples() {
        let l = Lattice::new(1, 8, 1.0).unwrap();
        let hbar = 0.3;
        let params = ModelParams::with_hbar(3, hbar).unwrap();
        let ks: Vec<usize> = [-1, 0, 1].iter().map(|&k| l.momentum_index(&[k]).unwrap()).collect();
        let ball = plane_wave_projection(&l, &ks).unwrap();
        let zero = Potential::build(&PotentialSpec::Zero, &l).unwrap();
        let e = hf_energy(&ball, &zero, &params, &l, None).unwrap();
        assert!((e - 2.0 * hbar * hbar * (2.0 * PI).powi(2)).abs() < 1e-10);
        let v = gaussian(&l, 1.0, 0.2);
        let empty = DensityMatrix::new(CMatrix::zeros(8, 8), 3);
        assert_eq!(hf_energy(&empty, &v, &params, &l, None).unwrap(), 0.0);
    }

    #[test]
    fn energy_drift_shrinks_quadratically() {
        let l = Lattice::new(1, 16, 1.0).unwrap();
        let params = ModelParams::new(4, &l).unwrap();
        let v = gaussian(&l, 1.0, 0.2);
        let omega = released(&l, params.hbar(), 4);
        let drift = |dt: f64| {
            evolve(&omega, &EvolutionConfig::new(dt, 0.5), MeanFieldKind::HartreeFock, &v, &params, &l, &[])
                .unwrap()
                .max_relative_energy_drift()
        };
        let ratio = drift(4e-3) / drift(2e-3);
        assert!(ratio > 3.0, "ratio {ratio}");
    }

    #[test]
    fn hf_hartree_gap_vanishes_without_interaction() {
        let l = Lattice::new(1, 16, 1.0).unwrap();
        let params = ModelParams::new(3, &l).unwrap();
        let omega = released(&l, params.hbar(), 3);
        let cfg = EvolutionConfig::new(0.01, 0.2).with_stride(5);
        let zero = Potential::build(&PotentialSpec::Zero, &l).unwrap();
        let gap = compare_hf_hartree(&omega, &cfg, &zero, &params, &l).unwrap();
        assert!(gap.gaps.iter().all(|&g| g < 1e-12));
        let v = gaussian(&l, 1.0, 0.2);
        let gap = compare_hf_hartree(&omega, &cfg, &v, &params, &l).unwrap();
        assert!(gap.gaps[0] == 0.0);
        assert!(gap.gaps.last().unwrap() > &0.0);
    }

    #[test]
    fn evolve_rejects_invalid_input() {
        let l = Lattice::new(1, 8, 1.0).unwrap();
        let params = ModelParams::new(2, &l).unwrap();
        let zero = Potential::build(&PotentialSpec::Zero, &l).unwrap();
        let bad = DensityMatrix::new(CMatrix::identity(8, 8).scale(2.0), 2);
        let cfg = EvolutionConfig::new(0.1, 1.0);
        assert!(matches!(
            evolve(&bad, &cfg, MeanFieldKind::Free, &zero, &params, &l, &[]),
            Err(Error::NotADensity(_))
        ));
        let ok = plane_wave_projection(&l, &[3, 4]).unwrap();
        assert!(evolve(&ok, &EvolutionConfig::new(-0.1, 1.0), MeanFieldKind::Free, &zero, &params, &l, &[]).is_err());
        assert!(evolve(&ok, &cfg.with_stride(0), MeanFieldKind::Free, &zero, &params, &l, &[]).is_err());
    }

    #[test]
    fn hooks_run_at_snapshots() {
        let l = Lattice::new(1, 8, 1.0).unwrap();
        let params = ModelParams::new(2, &l).unwrap();
        let zero = Potential::build(&PotentialSpec::Zero, &l).unwrap();
        let ok = plane_wave_projection(&l, &[3, 4]).unwrap();
        let hooks = [Hook::new("trace_again", |_, w: &DensityMatrix| Ok(w.trace()))];
        let traj = evolve(&ok, &EvolutionConfig::new(0.1, 1.0).with_stride(3), MeanFieldKind::Free, &zero, &params, &l, &hooks)
            .unwrap();
        assert_eq!(traj.times.len(), 5);
        assert!(traj.records[3].hooks[0].is_some() && traj.records[4].hooks[0].is_none());
        assert!(traj.records[10].hooks[0].is_some());
        let csv = traj.to_csv();
        assert!(csv.starts_with("t,trace,energy,idempotency_defect,trace_again\n"));
        assert_eq!(csv.lines().count(), 12);
    }
}
