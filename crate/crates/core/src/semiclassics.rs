//! Discrete Wigner transform on one-dimensional lattices and a split-step
//! semi-Lagrangian Vlasov solver on the matching phase-space grid.
//!
//! For a lattice with `d` sites (even), spacing `a` and `M = d/2` momenta
//!
//! ```text
//! W(x_j, p_k) = 1/(πħ) Σ_{m ∈ S} c_m ω(j+m; j-m) exp(-2πi k m / M)
//! p_k = 2πħ k / (d a),   k = -⌊M/2⌋, …, M - 1 - ⌊M/2⌋
//! ```
//!
//! where `S = {m : -d/4 ≤ m ≤ d/4}` and `c_m = 1/2` on the two endpoints when
//! `4 | d`, `c_m = 1` otherwise. Every cell carries the weight `a · 2πħ/(d a)`
//! and `Σ_{j,k} W(x_j, p_k) · weight = tr ω`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::initial_data::DensityMatrix;
use crate::linalg::fft_nd;
use crate::meanfield::{convolve, EvolutionConfig, Trajectory};
use crate::model::{Lattice, ModelParams, Potential};

/// Phase-space grid shared by Wigner functions and Vlasov densities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub d: usize,
    pub spacing: f64,
    pub hbar: f64,
    pub dp: f64,
    pub momenta: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(lattice: &Lattice, hbar: f64) -> Result<Self> {
        if lattice.ds() != 1 {
            return Err(Error::InvalidLattice(format!("phase space needs ds = 1, got {}", lattice.ds())));
        }
        let d = lattice.d();
        if !d.is_multiple_of(2) {
            return Err(Error::InvalidLattice(format!("Wigner transform needs even d, got {d}")));
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        let m = d / 2;
        let dp = 2.0 * PI * hbar / lattice.length();
        let momenta = (0..m).map(|k| (k as i64 - (m / 2) as i64) as f64 * dp).collect();
        Ok(Self { d, spacing: lattice.spacing(), hbar, dp, momenta })
    }

    pub fn momentum_count(&self) -> usize {
        self.momenta.len()
    }

    pub fn cell_weight(&self) -> f64 {
        self.spacing * self.dp
    }

    fn check(&self, other: &PhaseGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "d={} dp={} vs d={} dp={}",
                self.d, self.dp, other.d, other.dp
            )));
        }
        Ok(())
    }
}

/// Relative offsets `m` and their weights `c_m`.
pub fn offset_weights(d: usize) -> Vec<(i64, f64)> {
    let q = (d / 4) as i64;
    (-q..=q)
        .map(|m| {
            let c = if d.is_multiple_of(4) && m.abs() == q { 0.5 } else { 1.0 };
            (m, c)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct WignerFunction {
    /// Rows are sites, columns momenta.
    pub values: DMatrix<f64>,
    pub grid: PhaseGrid,
    /// Largest discarded imaginary part.
    pub max_imag: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WignerMetadata {
    pub formula: String,
    pub normalization: f64,
    pub cell_weight: f64,
    pub offsets: Vec<(i64, f64)>,
    pub grid: PhaseGrid,
}

impl WignerFunction {
    pub fn weighted_total(&self) -> f64 {
        self.values.sum() * self.grid.cell_weight()
    }

    /// `Σ_k W(x_j, p_k) · weight`, which equals `ω_jj`.
    pub fn position_marginal(&self) -> Vec<f64> {
        let w = self.grid.cell_weight();
        self.values.row_iter().map(|r| r.sum() * w).collect()
    }

    pub fn metadata(&self) -> WignerMetadata {
        WignerMetadata {
            formula: "W(x_j,p_k) = 1/(pi hbar) sum_m c_m omega(j+m; j-m) exp(-2 pi i k m / M), M = d/2".into(),
            normalization: 1.0 / (PI * self.grid.hbar),
            cell_weight: self.grid.cell_weight(),
            offsets: offset_weights(self.grid.d),
            grid: self.grid.clone(),
        }
    }
}

pub fn wigner(omega: &DensityMatrix, lattice: &Lattice, hbar: f64) -> Result<WignerFunction> {
    let grid = PhaseGrid::new(lattice, hbar)?;
    let d = grid.d;
    if omega.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: omega.dim() });
    }
    let mm = grid.momentum_count();
    let offsets = offset_weights(d);
    let norm = 1.0 / (PI * hbar);
    let wrap = |i: i64| i.rem_euclid(d as i64) as usize;
    let mut values = DMatrix::zeros(d, mm);
    let mut max_imag: f64 = 0.0;
    for j in 0..d {
        let slice: Vec<(i64, Complex64)> = offsets
            .iter()
            .map(|&(m, c)| (m, omega.matrix[(wrap(j as i64 + m), wrap(j as i64 - m))] * c))
            .collect();
        for (col, p) in grid.momenta.iter().enumerate() {
            let k = (p / grid.dp).round() as i64;
            let z: Complex64 = slice
                .iter()
                .map(|&(m, w)| w * Complex64::from_polar(1.0, -2.0 * PI * (k * m) as f64 / mm as f64))
                .sum::<Complex64>()
                * norm;
            values[(j, col)] = z.re;
            max_imag = max_imag.max(z.im.abs());
        }
    }
    Ok(WignerFunction { values, grid, max_imag })
}

/// A real phase-space density evolved by the Vlasov flow
/// `∂_t W + 2p ∂_x W - ∂_x U ∂_p W = 0` with `U = (1/N) Σ_y V(x-y) ρ(y)`.
#[derive(Clone, Debug)]
pub struct PhaseSpaceDensity {
    pub values: DMatrix<f64>,
    pub grid: PhaseGrid,
    pub n_particles: usize,
}

impl PhaseSpaceDensity {
    pub fn from_wigner(w: &WignerFunction, n_particles: usize) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::InvalidArgument("need at least one particle".into()));
        }
        Ok(Self { values: w.values.clone(), grid: w.grid.clone(), n_particles })
    }

    pub fn mass(&self) -> f64 {
        self.values.sum() * self.grid.cell_weight()
    }

    pub fn slice_masses(&self) -> Vec<f64> {
        let w = self.grid.cell_weight();
        self.values.column_iter().map(|c| c.sum() * w).collect()
    }

    /// Per-site occupation `Σ_k W · weight`.
    pub fn occupation(&self) -> Vec<f64> {
        let w = self.grid.cell_weight();
        self.values.row_iter().map(|r| r.sum() * w).collect()
    }

    pub fn weighted_l1(&self, other: &DMatrix<f64>) -> Result<f64> {
        if other.shape() != self.values.shape() {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.values.shape(), other.shape())));
        }
        Ok((&self.values - other).abs().sum() * self.grid.cell_weight())
    }
}

/// `out[i] = f(i - s)` on a periodic grid by four-point Lagrange
/// interpolation. Integer shifts are exact.
fn shift_periodic(src: &[f64], s: f64) -> Vec<f64> {
    let n = src.len() as i64;
    let q = s.floor();
    let t = 1.0 - (s - q);
    let weights = [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ];
    let q = q as i64;
    (0..n)
        .map(|i| {
            let base = i - q - 1;
            weights
                .iter()
                .enumerate()
                .map(|(o, w)| w * src[(base + o as i64 - 1).rem_euclid(n) as usize])
                .sum()
        })
        .collect()
}

fn transport(values: &mut DMatrix<f64>, grid: &PhaseGrid, tau: f64) {
    for (k, p) in grid.momenta.iter().enumerate() {
        let col: Vec<f64> = values.column(k).iter().copied().collect();
        let shifted = shift_periodic(&col, 2.0 * p * tau / grid.spacing);
        values.column_mut(k).iter_mut().zip(shifted).for_each(|(v, s)| *v = s);
    }
}

/// `∂_x U` for the mean-field potential of `w`, by spectral differentiation.
pub fn mean_field_force(w: &PhaseSpaceDensity, v: &Potential, lattice: &Lattice) -> Vec<f64> {
    let d = w.grid.d;
    let norm = w.n_particles as f64 * lattice.spacing();
    let rho: Vec<f64> = w.occupation().iter().map(|o| o / norm).collect();
    let u = convolve(&rho, v, lattice);
    let mut z: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_nd(&mut z, d, 1, false);
    let step = 2.0 * PI / lattice.length();
    for (m, c) in z.iter_mut().enumerate() {
        let k = if m < d / 2 { m as f64 } else if m == d / 2 { 0.0 } else { m as f64 - d as f64 };
        *c *= Complex64::new(0.0, k * step) / d as f64;
    }
    fft_nd(&mut z, d, 1, true);
    z.iter().map(|c| c.re).collect()
}

/// Strang step: half transport, momentum kick `p → p - ∂_x U dt`, half
/// transport. The momentum axis is periodic like the discrete Wigner
/// function itself.
pub fn vlasov_step(w: &PhaseSpaceDensity, dt: f64, v: &Potential, lattice: &Lattice) -> Result<PhaseSpaceDensity> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    w.grid.check(&PhaseGrid::new(lattice, w.grid.hbar)?)?;
    let mut out = w.clone();
    transport(&mut out.values, &w.grid, 0.5 * dt);
    if !v.is_zero() {
        let force = mean_field_force(&out, v, lattice);
        for (j, f) in force.iter().enumerate() {
            let row: Vec<f64> = out.values.row(j).iter().copied().collect();
            let shifted = shift_periodic(&row, -f * dt / w.grid.dp);
            out.values.row_mut(j).iter_mut().zip(shifted).for_each(|(v, s)| *v = s);
        }
    }
    transport(&mut out.values, &w.grid, 0.5 * dt);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct WignerVlasovSeries {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// `distance / (ħN)`.
    pub normalized: Vec<f64>,
}

impl WignerVlasovSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,distance,normalized\n");
        for i in 0..self.times.len() {
            s.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", self.times[i], self.distances[i], self.normalized[i]));
        }
        s
    }
}

/// Weighted L¹ distance between the Wigner transform of each snapshot and
/// the Vlasov density started from the first one. Between snapshots the
/// Vlasov flow takes equal steps no longer than `cfg.dt`.
pub fn compare_wigner_vlasov(
    traj: &Trajectory,
    v: &Potential,
    params: &ModelParams,
    lattice: &Lattice,
    cfg: &EvolutionConfig,
) -> Result<WignerVlasovSeries> {
    cfg.validate()?;
    let first = traj.states.first().ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    if first.dim() != lattice.site_count() {
        return Err(Error::GridMismatch(format!(
            "trajectory has {} sites, lattice {}",
            first.dim(),
            lattice.site_count()
        )));
    }
    let hbar = params.hbar();
    let scale = hbar * params.n_particles() as f64;
    let mut vl = PhaseSpaceDensity::from_wigner(&wigner(first, lattice, hbar)?, params.n_particles())?;
    let mut t_prev = traj.times[0];
    let mut series = WignerVlasovSeries { times: Vec::new(), distances: Vec::new(), normalized: Vec::new() };
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let span = t - t_prev;
        if span > 0.0 {
            let steps = (span / cfg.dt - 1e-9).ceil().max(1.0) as usize;
            for _ in 0..steps {
                vl = vlasov_step(&vl, span / steps as f64, v, lattice)?;
            }
        }
        t_prev = *t;
        let dist = vl.weighted_l1(&wigner(state, lattice, hbar)?.values)?;
        series.times.push(*t);
        series.distances.push(dist);
        series.normalized.push(dist / scale);
    }
    Ok(series)
}
