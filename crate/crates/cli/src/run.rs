//! Scenario dispatch.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use fermiflow::diagnostics::{distance_series, fit_double_exponential, fit_exponential, log_log_slope};
use fermiflow::fock::{
    bogoliubov_from_projection, car_defect, generalized_density, hamiltonian, number_moment, quasi_free_state, rdm1,
    rdmk, verify_operator_bounds, wick_rdmk, ExactPropagator, FluctuationDynamics, FockSpace, FockVector,
};
use fermiflow::initial_data::semiclassical_constant;
use fermiflow::linalg::{max_abs_entry, unitary_propagator, CMatrix};
use fermiflow::meanfield::{compare_hf_hartree, density_profile, hf_energy, Hook, MeanField, MeanFieldKind};
use fermiflow::model::kinetic_operator;
use fermiflow::semiclassics::{compare_wigner_vlasov, vlasov_step, wigner, PhaseSpaceDensity};
use fermiflow::snapshot::{real_to_complex, write_fmf1};

use crate::config::{RunConfig, Scenario};
use crate::error::RunnerError;
use crate::summary::{versions, write_summary_atomically, CriterionResult, FitRecord, Outputs, RunSummary};

#[derive(Debug, Default)]
struct Report {
    metrics: BTreeMap<String, f64>,
    criteria: Vec<CriterionResult>,
    fits: Vec<FitRecord>,
}

impl Report {
    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }
}

fn fmf1(ds: usize, d: usize, m: &CMatrix) -> Result<Vec<u8>, RunnerError> {
    let mut buf = Vec::new();
    write_fmf1(&mut buf, ds as u32, d as u32, m)?;
    Ok(buf)
}

fn csv_rows(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Runs the configured scenario, writes all outputs and finally the summary.
/// Failures are recorded in a summary with status `"failed"` and returned.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunnerError> {
    let mut config = config.clone();
    config.validate()?;
    let scenario = config.scenario()?;
    let started = Instant::now();
    let mut outputs = Outputs::create(&config.output_dir)?;
    let result = match scenario {
        Scenario::Evolve => evolve(&config, &mut outputs),
        Scenario::CompareHfHartree => compare(&config, &mut outputs),
        Scenario::ExactVsMeanfield => exact_vs_meanfield(&config, &mut outputs),
        Scenario::FockVerify => fock_verify(&config, &mut outputs),
        Scenario::Fluctuation => fluctuation(&config, &mut outputs),
        Scenario::Semiclassics => semiclassics(&config, &mut outputs),
        Scenario::DiagnosticsOnly => diagnostics_only(&config, &mut outputs),
    };
    let (report, error) = match result {
        Ok(r) => (r, None),
        Err(e) => (Report::default(), Some(e)),
    };
    let summary = RunSummary {
        status: if error.is_none() { "success" } else { "failed" }.into(),
        scenario: scenario.name().into(),
        seed: config.seed,
        config: config.clone(),
        versions: versions(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        metrics: report.metrics,
        criteria: report.criteria,
        fits: report.fits,
        files: outputs.manifest(),
        error: error.as_ref().map(|e| e.to_string()),
    };
    write_summary_atomically(outputs.root(), &summary)?;
    match error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

fn evolve(config: &RunConfig, out: &mut Outputs) -> Result<Report, RunnerError> {
    let (lattice, params, v, omega0) = (config.lattice()?, config.params()?, config.potential()?, config.initial_state()?);
    let cfg = config.evolution.config();
    let kind = config.evolution.kind();
    let p_set = config.p_set()?;
    let hbar = params.hbar();
    let mut hooks = Vec::new();
    if config.commutators {
        hooks.push(Hook::new("c_phase", |_, w| Ok(semiclassical_constant(w, &lattice, hbar, &p_set)?.c_phase)));
        hooks.push(Hook::new("c_momentum", |_, w| Ok(semiclassical_constant(w, &lattice, hbar, &p_set)?.c_momentum)));
    }
    let clock = Instant::now();
    let traj = MeanField::new(kind, &v, params, &lattice).evolve(&omega0, &cfg, &hooks)?;
    let mut report = Report::default();
    report.metric("evolve_seconds", clock.elapsed().as_secs_f64());
    out.write("series.csv", traj.to_csv().as_bytes())?;
    if config.snapshots {
        for (i, s) in traj.states.iter().enumerate() {
            out.write(&format!("snapshots/state_{i:05}.fmf1"), &fmf1(lattice.ds(), lattice.d(), &s.matrix)?)?;
        }
    }
    let (defect, trace, energy) =
        (traj.max_idempotency_defect(), traj.max_trace_drift(), traj.max_relative_energy_drift());
    report.metric("max_idempotency_defect", defect);
    report.metric("max_trace_drift", trace);
    report.metric("max_relative_energy_drift", energy);
    report.metric("t_final", *traj.times.last().unwrap_or(&0.0));
    report.criteria.push(CriterionResult::at_most("idempotency_defect", defect, 1e-8));
    report.criteria.push(CriterionResult::at_most("trace_drift", trace, 1e-9));
    report.criteria.push(CriterionResult::at_most("relative_energy_drift", energy, 1e-6));
    if kind == MeanFieldKind::Free || v.is_zero() {
        let t = *traj.times.last().unwrap_or(&0.0);
        let u = unitary_propagator(&kinetic_operator(&lattice, hbar), t / hbar);
        let exact = &u * &omega0.matrix * u.adjoint();
        let err = (&traj.final_state().matrix - exact).norm();
        report.metric("free_flow_error", err);
        report.criteria.push(CriterionResult::at_most("free_flow_error", err, 1e-10));
    }
    for (h, name) in traj.hook_names.iter().enumerate() {
        let (times, values): (Vec<f64>, Vec<f64>) =
            traj.records.iter().filter_map(|r| r.hooks[h].map(|v| (r.t, v))).unzip();
        let fit = fit_exponential(&values, &times)?;
        let worst = values.iter().zip(&times).map(|(v, t)| v / fit.envelope(*t)).fold(0.0, f64::max);
        let initial = semiclassical_constant(&omega0, &lattice, hbar, &p_set)?;
        let expected = if name == "c_phase" { initial.c_phase } else { initial.c_momentum };
        report.metric(&format!("{name}_initial"), values[0]);
        report.metric(&format!("{name}_envelope_ratio"), worst);
        report.criteria.push(CriterionResult::below(&format!("{name}_fit_residual"), fit.residual, 0.2));
        report.criteria.push(CriterionResult::at_most(&format!("{name}_envelope_ratio"), worst, 3.0));
        report.criteria.push(CriterionResult::at_most(
            &format!("{name}_initial_mismatch"),
            (values[0] - expected).abs(),
            1e-10,
        ));
        report.fits.push(FitRecord {
            series: name.clone(),
            model: "K exp(c t)".into(),
            parameters: BTreeMap::from([("K".to_string(), fit.amplitude), ("c".to_string(), fit.rate)]),
            residual: fit.residual,
        });
    }
    Ok(report)
}

fn compare(config: &RunConfig, out: &mut Outputs) -> Result<Report, RunnerError> {
    let (lattice, params, v, omega0) = (config.lattice()?, config.params()?, config.potential()?, config.initial_state()?);
    let gaps = compare_hf_hartree(&omega0, &config.evolution.config(), &v, &params, &lattice)?;
    out.write("series.csv", gaps.to_csv().as_bytes())?;
    let mut report = Report::default();
    report.metric("final_gap", *gaps.gaps.last().unwrap_or(&0.0));
    report.metric("max_gap", gaps.gaps.iter().copied().fold(0.0, f64::max));
    report.criteria.push(CriterionResult::at_most("initial_gap", gaps.gaps[0], 0.0));
    Ok(report)
}

fn exact_vs_meanfield(config: &RunConfig, out: &mut Outputs) -> Result<Report, RunnerError> {
    let (lattice, params, v, omega0) = (config.lattice()?, config.params()?, config.potential()?, config.initial_state()?);
    let space = FockSpace::new(lattice.site_count())?;
    let psi0 = quasi_free_state(space, &omega0.matrix)?;
    let traj = MeanField::new(config.evolution.kind(), &v, params, &lattice).evolve(&omega0, &config.evolution.config(), &[])?;
    let mut exact = ExactPropagator::new(space, hamiltonian(space, &v, &params, &lattice)?, params.hbar())?;
    let mut gammas = Vec::with_capacity(traj.times.len());
    for &t in &traj.times {
        gammas.push((t, rdm1(&exact.evolve(&psi0, t)?)));
    }
    let omegas: Vec<(f64, CMatrix)> = traj.times.iter().copied().zip(traj.states.iter().map(|s| s.matrix.clone())).collect();
    let observables = vec![(vec![2.0 * PI / lattice.length()], vec![0.0]), (vec![0.0], vec![1.0])];
    let series = distance_series(&gammas, &omegas, &observables, params.hbar(), &lattice)?;
    out.write("series.csv", series.to_csv().as_bytes())?;
    let mut report = Report::default();
    let max_hs = series.hs.iter().copied().fold(0.0, f64::max);
    report.metric("max_hs_distance", max_hs);
    report.metric("max_trace_distance", series.tr.iter().copied().fold(0.0, f64::max));
    if v.is_zero() {
        report.criteria.push(CriterionResult::at_most("free_distance", max_hs, 1e-8));
    } else {
        let [lo, hi] = config.fock.fit_window;
        let (times, values): (Vec<f64>, Vec<f64>) = series
            .times
            .iter()
            .zip(&series.hs)
            .filter(|(t, _)| **t >= lo - 1e-12 && **t <= hi + 1e-12)
            .map(|(t, v)| (*t, *v))
            .unzip();
        if times.len() < 2 {
            return Err(RunnerError::Validation {
                key: "fock.fit_window".into(),
                message: format!("only {} snapshots fall inside the fit window", times.len()),
            });
        }
        let slope = log_log_slope(&values, &times)?;
        report.metric("log_log_slope", slope);
        report.criteria.push(CriterionResult::within("log_log_slope", slope, 1.8, 2.2));
        report.fits.push(FitRecord {
            series: "hs_distance".into(),
            model: "A t^s".into(),
            parameters: BTreeMap::from([("s".to_string(), slope)]),
            residual: f64::NAN,
        });
    }
    Ok(report)
}

fn fock_verify(config: &RunConfig, out: &mut Outputs) -> Result<Report, RunnerError> {
    let (lattice, omega0) = (config.lattice()?, config.initial_state()?);
    let space = FockSpace::new(lattice.site_count())?;
    let mut report = Report::default();
    let car = car_defect(space)?;
    report.metric("car_defect", car);
    report.criteria.push(CriterionResult::at_most("car_defect", car, 1e-13));

    let bounds = verify_operator_bounds(space, config.fock.trials, config.seed)?;
    out.write("bounds.json", bounds.to_json().as_bytes())?;
    let mut table = String::from("check,violations,worst_slack,worst_ratio\n");
    for c in &bounds.checks {
        table.push_str(&format!("{},{},{:.17e},{:.17e}\n", c.name, c.violations, c.worst_slack, c.worst_ratio));
    }
    out.write("series.csv", table.as_bytes())?;
    report.metric("bound_violations", bounds.total_violations() as f64);
    report.criteria.push(CriterionResult::at_most("bound_violations", bounds.total_violations() as f64, 0.0));

    let spec = bogoliubov_from_projection(&omega0.matrix)?;
    report.metric("bogoliubov_normalization_defect", spec.normalization_defect());
    report.metric("bogoliubov_pairing_defect", spec.pairing_defect());
    let psi = quasi_free_state(space, &omega0.matrix)?;
    let rdm_err = max_abs_entry(&(rdm1(&psi) - &omega0.matrix));
    report.metric("rdm1_error", rdm_err);
    report.criteria.push(CriterionResult::at_most("rdm1_error", rdm_err, 1e-10));
    if omega0.n_particles >= 2 {
        let wick = rdmk(&psi, 2)?.max_abs_diff(&wick_rdmk(&omega0.matrix, 2)?);
        report.metric("wick2_error", wick);
        report.criteria.push(CriterionResult::at_most("wick2_error", wick, 1e-10));
    }
    let g = generalized_density(&psi);
    let gamma = max_abs_entry(&(&g * &g - &g));
    report.metric("generalized_density_idempotency", gamma);
    report.criteria.push(CriterionResult::at_most("generalized_density_idempotency", gamma, 1e-10));
    let column = CMatrix::from_column_slice(psi.amplitudes.len(), 1, psi.amplitudes.as_slice());
    out.write("snapshots/slater.fmf1", &fmf1(1, lattice.d(), &column)?)?;
    Ok(report)
}

fn snapshot_times(config: &RunConfig) -> Vec<f64> {
    let cfg = config.evolution.config();
    let steps = cfg.steps();
    let mut times: Vec<f64> = (0..=steps).step_by(cfg.snapshot_stride).map(|i| i as f64 * cfg.dt).collect();
    if !steps.is_multiple_of(cfg.snapshot_stride) {
        times.push(steps as f64 * cfg.dt);
    }
    times
}

fn fluctuation(config: &RunConfig, out: &mut Outputs) -> Result<Report, RunnerError> {
    let (lattice, params, v, omega0) = (config.lattice()?, config.params()?, config.potential()?, config.initial_state()?);
    let cfg = config.evolution.config();
    let mut dynamics = FluctuationDynamics::new(&omega0, &v, &params, &lattice, cfg.dt, cfg.scheme)?;
    let vacuum = FockVector::vacuum(dynamics.space());
    let k = config.fock.moment;
    let times = snapshot_times(config);
    let mut rows = Vec::with_capacity(times.len());
    let mut norm_drift: f64 = 0.0;
    for &t in &times {
        let xi = dynamics.evolve(&vacuum, t)?;
        norm_drift = norm_drift.max((xi.norm() - 1.0).abs());
        rows.push(vec![t, number_moment(&xi, 1)? - 1.0, number_moment(&xi, k)?]);
    }
    out.write("series.csv", csv_rows(&format!("t,number,moment_{k}"), rows.iter().cloned()).as_bytes())?;
    let mut report = Report::default();
    let max_number = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    report.metric("max_number", max_number);
    report.metric("norm_drift", norm_drift);
    report.criteria.push(CriterionResult::at_most("norm_drift", norm_drift, 1e-9));
    if v.is_zero() {
        report.criteria.push(CriterionResult::at_most("vacuum_number", max_number, 1e-9));
    } else {
        let values: Vec<f64> = rows.iter().map(|r| r[2]).collect();
        let fit = fit_double_exponential(&values, &times, config.fock.max_rate)?;
        report.metric("envelope_max_log_excess", fit.max_excess);
        report.criteria.push(CriterionResult::below("envelope_log_residual", fit.residual, 0.3));
        report.criteria.push(CriterionResult::below("envelope_max_log_excess", fit.max_excess, 0.3));
        report.fits.push(FitRecord {
            series: format!("moment_{k}"),
            model: "exp(A + B exp(c t))".into(),
            parameters: BTreeMap::from([
                ("A".to_string(), fit.log_amplitude),
                ("B".to_string(), fit.inner_amplitude),
                ("c".to_string(), fit.rate),
            ]),
            residual: fit.residual,
        });
    }
    Ok(report)
}

fn semiclassics(config: &RunConfig, out: &mut Outputs) -> Result<Report, RunnerError> {
    let (lattice, params, v, omega0) = (config.lattice()?, config.params()?, config.potential()?, config.initial_state()?);
    let cfg = config.evolution.config();
    let hbar = params.hbar();
    let w0 = wigner(&omega0, &lattice, hbar)?;
    out.write("snapshots/wigner_00000.fmf1", &fmf1(1, lattice.d(), &real_to_complex(&w0.values))?)?;
    let meta = serde_json::to_string_pretty(&w0.metadata()).map_err(std::io::Error::other)?;
    out.write("wigner_metadata.json", meta.as_bytes())?;
    let mut report = Report::default();
    let sum_rule = (w0.weighted_total() - omega0.trace()).abs();
    report.metric("wigner_sum_rule_error", sum_rule);
    report.metric("wigner_max_imag", w0.max_imag);
    report.criteria.push(CriterionResult::at_most("wigner_sum_rule_error", sum_rule, 1e-8));
    report.criteria.push(CriterionResult::at_most("wigner_max_imag", w0.max_imag, 1e-10));
    let phase = PhaseSpaceDensity::from_wigner(&w0, params.n_particles())?;
    let mass = (vlasov_step(&phase, cfg.dt, &v, &lattice)?.mass() - phase.mass()).abs();
    report.metric("vlasov_mass_drift_per_step", mass);
    report.criteria.push(CriterionResult::at_most("vlasov_mass_drift_per_step", mass, 1e-10));

    let traj = MeanField::new(config.evolution.kind(), &v, params, &lattice).evolve(&omega0, &cfg, &[])?;
    let series = compare_wigner_vlasov(&traj, &v, &params, &lattice, &cfg)?;
    out.write("series.csv", series.to_csv().as_bytes())?;
    report.metric("final_distance", *series.distances.last().unwrap_or(&0.0));
    report.metric("final_normalized_gap", *series.normalized.last().unwrap_or(&0.0));
    if let Some(i) = series.times.iter().position(|&t| t >= 0.1 - 1e-12) {
        let reference = series.normalized[i];
        if reference > 0.0 {
            let spread = series.normalized[i..]
                .iter()
                .map(|g| (g / reference).max(reference / g))
                .fold(1.0, f64::max);
            report.metric("normalized_gap_spread", spread);
        }
    }
    Ok(report)
}

fn diagnostics_only(config: &RunConfig, out: &mut Outputs) -> Result<Report, RunnerError> {
    let (lattice, params, v, omega0) = (config.lattice()?, config.params()?, config.potential()?, config.initial_state()?);
    let sc = semiclassical_constant(&omega0, &lattice, params.hbar(), &config.p_set()?)?;
    let rho = density_profile(&omega0, &lattice)?;
    out.write(
        "series.csv",
        csv_rows("site,density", rho.iter().enumerate().map(|(j, r)| vec![j as f64, *r])).as_bytes(),
    )?;
    let mut report = Report::default();
    report.metric("c_phase", sc.c_phase);
    report.metric("c_momentum", sc.c_momentum);
    report.metric("hf_energy", hf_energy(&omega0, &v, &params, &lattice, None)?);
    report.metric("potential_assumption_weight", v.assumption_weight());
    let trace_err = (omega0.trace() - params.n_particles() as f64).abs();
    report.metric("trace_error", trace_err);
    report.metric("idempotency_defect", omega0.idempotency_defect());
    report.criteria.push(CriterionResult::at_most("trace_error", trace_err, 1e-10));
    report.criteria.push(CriterionResult::at_most("idempotency_defect", omega0.idempotency_defect(), 1e-10));
    Ok(report)
}
