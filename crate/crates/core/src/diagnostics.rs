//! Trace-norm machinery, semiclassical commutator diagnostics, distances
//! between reduced densities and growth fits.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, singular_values, CMatrix, HermitianEigen};
use crate::meanfield::Trajectory;
use crate::model::{momentum_operator, Lattice, ModelParams};

/// `tr|A| = tr √(A*A)`, the sum of singular values.
pub fn trace_norm(a: &CMatrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(a: &CMatrix) -> f64 {
    frobenius(a)
}

/// `tr|[e^{ir·x}, ω]|`.
pub fn commutator_phase(omega: &CMatrix, r: &[f64], lattice: &Lattice) -> Result<f64> {
    let s = lattice.site_count();
    let phases: Vec<Complex64> = (0..s)
        .map(|j| {
            let t: f64 = lattice.site_position(j).iter().zip(r).map(|(x, r)| x * r).sum();
            Complex64::from_polar(1.0, t)
        })
        .collect();
    let c = CMatrix::from_fn(s, s, |j, i| (phases[j] - phases[i]) * omega[(j, i)]);
    trace_norm(&c)
}

/// `Σ_axes tr|[ħ∇_axis, ω]|`.
pub fn commutator_momentum(omega: &CMatrix, hbar: f64, lattice: &Lattice) -> Result<f64> {
    let mut total = 0.0;
    for axis in 0..lattice.ds() {
        let g = momentum_operator(lattice, hbar, axis)?;
        total += trace_norm(&(&g * omega - omega * &g))?;
    }
    Ok(total)
}

/// Normalized semiclassical commutators along a trajectory.
#[derive(Clone, Debug)]
pub struct CommutatorSeries {
    pub times: Vec<f64>,
    /// `sup_p tr|[e^{ip·x}, ω_t]| / ((1+|p|) N ħ)`.
    pub c_phase: Vec<f64>,
    /// `Σ_axes tr|[ħ∇, ω_t]| / (N ħ)`.
    pub c_momentum: Vec<f64>,
    pub normalization: f64,
    pub p_set: Vec<Vec<f64>>,
}

impl CommutatorSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,c_phase,c_momentum\n");
        for ((t, a), b) in self.times.iter().zip(&self.c_phase).zip(&self.c_momentum) {
            out.push_str(&format!("{t:.17e},{a:.17e},{b:.17e}\n"));
        }
        out
    }
}

pub fn semiclassical_series(
    trajectory: &Trajectory,
    p_set: &[Vec<f64>],
    params: &ModelParams,
    lattice: &Lattice,
) -> Result<CommutatorSeries> {
    if p_set.is_empty() {
        return Err(Error::InvalidArgument("momentum set is empty".into()));
    }
    let normalization = params.n_particles() as f64 * params.hbar();
    let mut c_phase = Vec::with_capacity(trajectory.states.len());
    let mut c_momentum = Vec::with_capacity(trajectory.states.len());
    for state in &trajectory.states {
        let mut sup: f64 = 0.0;
        for p in p_set {
            let abs_p = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            sup = sup.max(commutator_phase(&state.matrix, p, lattice)? / ((1.0 + abs_p) * normalization));
        }
        c_phase.push(sup);
        c_momentum.push(commutator_momentum(&state.matrix, params.hbar(), lattice)? / normalization);
    }
    Ok(CommutatorSeries {
        times: trajectory.times.clone(),
        c_phase,
        c_momentum,
        normalization,
        p_set: p_set.to_vec(),
    })
}

/// `v(t) ≈ K e^{c t}`, fitted by least squares on `log v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthFit {
    pub amplitude: f64,
    pub rate: f64,
    /// RMS of the log-residuals.
    pub residual: f64,
}

impl GrowthFit {
    pub fn envelope(&self, t: f64) -> f64 {
        self.amplitude * (self.rate * t).exp()
    }
}

fn check_positive(values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveSeries { index, value });
        }
    }
    Ok(())
}

/// Least-squares line through `(t_i, y_i)`; returns intercept and slope.
fn linear_fit(times: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let stt: f64 = times.iter().map(|t| (t - tm).powi(2)).sum();
    let sty: f64 = times.iter().zip(ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    (ym - slope * tm, slope)
}

pub fn fit_exponential(values: &[f64], times: &[f64]) -> Result<GrowthFit> {
    if values.len() != times.len() || values.is_empty() {
        return Err(Error::GridMismatch(format!("{} values vs {} times", values.len(), times.len())));
    }
    check_positive(values)?;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (intercept, rate) = linear_fit(times, &logs);
    let residual = rms(times.iter().zip(&logs).map(|(t, y)| y - intercept - rate * t));
    Ok(GrowthFit { amplitude: intercept.exp(), rate, residual })
}

/// Slope of `log v` against `log t`.
pub fn log_log_slope(values: &[f64], times: &[f64]) -> Result<f64> {
    check_positive(values)?;
    check_positive(times)?;
    let lt: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let lv: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lt, &lv).1)
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), r| (s + r * r, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// `v(t) ≈ exp(A + B e^{c t})`, the double-exponential envelope shape of the
/// fluctuation number bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleExponentialFit {
    pub log_amplitude: f64,
    pub inner_amplitude: f64,
    pub rate: f64,
    /// RMS of the log-residuals.
    pub residual: f64,
    /// Largest excess of `log v` over the envelope.
    pub max_excess: f64,
}

impl DoubleExponentialFit {
    pub fn envelope(&self, t: f64) -> f64 {
        (self.log_amplitude + self.inner_amplitude * (self.rate * t).exp()).exp()
    }
}

/// Fits `log v = A + B e^{c t}` with `c ∈ [0, max_rate]`. For fixed `c` the
/// problem is linear in `(A, B)`; `c` is scanned on a grid and refined by
/// golden-section search.
pub fn fit_double_exponential(values: &[f64], times: &[f64], max_rate: f64) -> Result<DoubleExponentialFit> {
    if values.len() != times.len() || values.len() < 3 {
        return Err(Error::GridMismatch(format!("{} values vs {} times", values.len(), times.len())));
    }
    check_positive(values)?;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let solve = |c: f64| -> (f64, f64, f64) {
        let basis: Vec<f64> = times.iter().map(|t| (c * t).exp()).collect();
        let (a, b) = linear_fit(&basis, &logs);
        let r = rms(basis.iter().zip(&logs).map(|(e, y)| y - a - b * e));
        (a, b, r)
    };
    let grid = 200;
    let mut best = (f64::INFINITY, 1e-6);
    for i in 0..=grid {
        let c = 1e-6 + max_rate * i as f64 / grid as f64;
        let r = solve(c).2;
        if r < best.0 {
            best = (r, c);
        }
    }
    let step = max_rate / grid as f64;
    let (mut lo, mut hi) = ((best.1 - step).max(1e-6), best.1 + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if solve(m1).2 < solve(m2).2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let rate = 0.5 * (lo + hi);
    let (a, b, residual) = solve(rate);
    let max_excess = times
        .iter()
        .zip(&logs)
        .map(|(t, y)| y - a - b * (rate * t).exp())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DoubleExponentialFit { log_amplitude: a, inner_amplitude: b, rate, residual, max_excess })
}

/// Distances between two matched series of one-particle densities.
#[derive(Clone, Debug)]
pub struct DistanceSeries {
    pub times: Vec<f64>,
    pub hs: Vec<f64>,
    pub tr: Vec<f64>,
    /// `(q, p)` pairs and, per time, `|tr e^{ix·q + ħp·∇}(γ - ω)|`.
    pub observables: Vec<(Vec<f64>, Vec<f64>)>,
    pub observable_values: Vec<Vec<f64>>,
}

impl DistanceSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,hs,tr");
        for i in 0..self.observables.len() {
            out.push_str(&format!(",obs{i}"));
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t:.17e},{:.17e},{:.17e}", self.hs[i], self.tr[i]));
            for v in &self.observable_values[i] {
                out.push_str(&format!(",{v:.17e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// `exp(i x·q + ħ p·∇)` as a single matrix exponential of the anti-Hermitian
/// generator.
pub fn observable_exponential(lattice: &Lattice, hbar: f64, q: &[f64], p: &[f64]) -> Result<CMatrix> {
    let s = lattice.site_count();
    // Hermitian h with generator i·h.
    let mut h = CMatrix::zeros(s, s);
    for j in 0..s {
        let t: f64 = lattice.site_position(j).iter().zip(q).map(|(x, q)| x * q).sum();
        h[(j, j)] = Complex64::new(t, 0.0);
    }
    for (axis, &pa) in p.iter().enumerate().take(lattice.ds()) {
        if pa != 0.0 {
            let g = momentum_operator(lattice, hbar, axis)?;
            h += g.map(|z| z * Complex64::new(0.0, -pa));
        }
    }
    Ok(HermitianEigen::new(&h).apply_fn(|l| Complex64::from_polar(1.0, l)))
}

pub fn distance_series(
    gamma_series: &[(f64, CMatrix)],
    omega_series: &[(f64, CMatrix)],
    observables: &[(Vec<f64>, Vec<f64>)],
    hbar: f64,
    lattice: &Lattice,
) -> Result<DistanceSeries> {
    if gamma_series.len() != omega_series.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} snapshots",
            gamma_series.len(),
            omega_series.len()
        )));
    }
    let exps = observables
        .iter()
        .map(|(q, p)| observable_exponential(lattice, hbar, q, p))
        .collect::<Result<Vec<_>>>()?;
    let mut out = DistanceSeries {
        times: Vec::new(),
        hs: Vec::new(),
        tr: Vec::new(),
        observables: observables.to_vec(),
        observable_values: Vec::new(),
    };
    for ((tg, g), (tw, w)) in gamma_series.iter().zip(omega_series) {
        if (tg - tw).abs() > 1e-12 * (1.0 + tg.abs()) {
            return Err(Error::GridMismatch(format!("times {tg} and {tw} differ")));
        }
        let diff = g - w;
        out.times.push(*tg);
        out.hs.push(hs_norm(&diff));
        out.tr.push(trace_norm(&diff)?);
        out.observable_values.push(
            exps.iter()
                .map(|e| (e * &diff).diagonal().iter().sum::<Complex64>().norm())
                .collect(),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, identity};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let a = random_matrix(n, rng);
        crate::linalg::unitary_propagator(&(&a + a.adjoint()), 1.0)
    }

    #[test]
    fn trace_norm_examples() {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0, 0.0), c64(-2.0, 0.0)]));
        assert!((trace_norm(&d).unwrap() - 3.0).abs() < 1e-14);

        let u = nalgebra::DVector::from_vec(vec![c64(1.0, 2.0), c64(0.0, -1.0), c64(3.0, 0.0)]);
        let v = nalgebra::DVector::from_vec(vec![c64(0.5, 0.0), c64(1.0, 1.0), c64(-2.0, 0.5)]);
        let rank_one = &u * v.adjoint();
        assert!((trace_norm(&rank_one).unwrap() - u.norm() * v.norm()).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let a = random_matrix(6, &mut rng);
            let eig = (a.adjoint() * &a).symmetric_eigen();
            let oracle: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
            assert!((trace_norm(&a).unwrap() - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn hs_norm_examples() {
        assert!((hs_norm(&identity(4)) - 2.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_matrix(5, &mut rng);
            assert!(hs_norm(&a) <= trace_norm(&a).unwrap() + 1e-12);
        }
        let l = Lattice::new(1, 16, 1.0).unwrap();
        let w = crate::initial_data::plane_wave_projection(&l, &[3, 5, 9]).unwrap();
        assert!((hs_norm(&w.matrix).powi(2) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_is_a_unitarily_invariant_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_matrix(7, &mut rng);
            let b = random_matrix(7, &mut rng);
            let c = random_matrix(7, &mut rng);
            let na = trace_norm(&a).unwrap();
            let nb = trace_norm(&b).unwrap();
            assert!(trace_norm(&(&a + &b)).unwrap() <= na + nb + 1e-10);
            assert!(trace_norm(&(&a + &c)).unwrap() <= na + trace_norm(&c).unwrap() + 1e-10);
            let s = c64(-1.7, 0.4);
            assert!((trace_norm(&a.map(|z| z * s)).unwrap() - s.norm() * na).abs() < 1e-10);
            let u = random_unitary(7, &mut rng);
            let v = random_unitary(7, &mut rng);
            assert!((trace_norm(&(&u * &a * &v)).unwrap() - na).abs() < 1e-9);
        }
    }

    #[test]
    fn phase_commutator_examples() {
        let l = Lattice::new(1, 8, 1.0).unwrap();
        let ks: Vec<usize> = [-1, 0, 1].iter().map(|&k| l.momentum_index(&[k]).unwrap()).collect();
        let w = crate::initial_data::plane_wave_projection(&l, &ks).unwrap();
        assert!(commutator_phase(&w.matrix, &[0.0], &l).unwrap() < 1e-14);
        assert!(commutator_phase(&identity(8), &[2.3], &l).unwrap() < 1e-14);
        let r = 2.0 * std::f64::consts::PI;
        assert!((commutator_phase(&w.matrix, &[r], &l).unwrap() - 2.0).abs() < 1e-12);

        // Nonzero singular values all equal one.
        let s = l.site_count();
        let phases: Vec<Complex64> = (0..s).map(|j| Complex64::from_polar(1.0, r * l.site_position(j)[0])).collect();
        let c = CMatrix::from_fn(s, s, |j, i| (phases[j] - phases[i]) * w.matrix[(j, i)]);
        let sv = singular_values(&c).unwrap();
        assert!((sv[0] - 1.0).abs() < 1e-12 && (sv[1] - 1.0).abs() < 1e-12 && sv[2] < 1e-12);

        // Diagonal ω commutes with every phase.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(8, |_, _| c64(rng.gen(), 0.0)));
        assert!(commutator_phase(&diag, &[1.234], &l).unwrap() <= 1e-12);
    }

    #[test]
    fn momentum_commutator_flags_localized_states() {
        let l = Lattice::new(1, 64, 1.0).unwrap();
        let n = 8;
        let hbar = 1.0 / 8.0;
        let ball = crate::initial_data::plane_wave_projection(&l, &crate::initial_data::fermi_ball(&l, n).unwrap()).unwrap();
        assert!(commutator_momentum(&ball.matrix, hbar, &l).unwrap() < 1e-10);
        let mut local = CMatrix::zeros(64, 64);
        for j in 0..n {
            local[(j * 8, j * 8)] = c64(1.0, 0.0);
        }
        let value = commutator_momentum(&local, hbar, &l).unwrap();
        assert!(value > n as f64 * hbar * 10.0, "value {value}");
    }

    #[test]
    fn exponential_fit_examples() {
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let exact: Vec<f64> = times.iter().map(|t| 3.0 * (0.5 * t).exp()).collect();
        let fit = fit_exponential(&exact, &times).unwrap();
        assert!((fit.amplitude - 3.0).abs() < 1e-10);
        assert!((fit.rate - 0.5).abs() < 1e-10);
        assert!(fit.residual < 1e-12);

        let flat = vec![2.0; 20];
        assert!(fit_exponential(&flat, &times).unwrap().rate.abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let noisy: Vec<f64> = exact.iter().map(|v| v * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))).collect();
        assert!((fit_exponential(&noisy, &times).unwrap().rate - 0.5).abs() < 0.05);

        let bad = vec![1.0, 0.0, 2.0];
        assert!(matches!(
            fit_exponential(&bad, &times[..3]),
            Err(Error::NonPositiveSeries { index: 1, .. })
        ));
    }

    #[test]
    fn double_exponential_fit_recovers_model() {
        let times: Vec<f64> = (0..30).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = times.iter().map(|t| (0.2 + 0.3 * (1.5 * t).exp()).exp()).collect();
        let fit = fit_double_exponential(&values, &times, 5.0).unwrap();
        assert!(fit.residual < 1e-8, "{fit:?}");
        assert!((fit.rate - 1.5).abs() < 1e-4);
        for (t, v) in times.iter().zip(&values) {
            assert!((fit.envelope(*t) / v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn distance_series_examples() {
        let l = Lattice::new(1, 8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let series: Vec<(f64, CMatrix)> = (0..3).map(|i| (i as f64, random_matrix(8, &mut rng))).collect();
        let obs = vec![(vec![2.0 * std::f64::consts::PI], vec![0.5])];
        let same = distance_series(&series, &series, &obs, 0.25, &l).unwrap();
        assert!(same.hs.iter().chain(&same.tr).all(|&v| v == 0.0));
        assert!(same.observable_values.iter().flatten().all(|&v| v == 0.0));

        let other: Vec<(f64, CMatrix)> = (0..3).map(|i| (i as f64, random_matrix(8, &mut rng))).collect();
        let d = distance_series(&series, &other, &obs, 0.25, &l).unwrap();
        for (h, t) in d.hs.iter().zip(&d.tr) {
            assert!(h <= t);
        }
        let shifted: Vec<(f64, CMatrix)> = other.iter().map(|(t, m)| (t + 0.5, m.clone())).collect();
        assert!(matches!(distance_series(&series, &shifted, &obs, 0.25, &l), Err(Error::GridMismatch(_))));
        assert!(distance_series(&series, &other[..2], &obs, 0.25, &l).is_err());
    }

    #[test]
    fn observable_exponential_is_unitary() {
        let l = Lattice::new(1, 16, 1.0).unwrap();
        let e = observable_exponential(&l, 0.2, &[2.0 * std::f64::consts::PI], &[0.7]).unwrap();
        assert!(crate::linalg::max_abs_entry(&(&e * e.adjoint() - identity(16))) < 1e-12);
        let pure_phase = observable_exponential(&l, 0.2, &[2.0 * std::f64::consts::PI], &[0.0]).unwrap();
        let direct = crate::model::phase_operator(&l, &[2.0 * std::f64::consts::PI]);
        assert!(crate::linalg::max_abs_entry(&(pure_phase - direct)) < 1e-12);
    }
}
