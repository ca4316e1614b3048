use fermiflow::diagnostics::{hs_norm, trace_norm};
use fermiflow::fock::{hamiltonian, quasi_free_state, rdm1, ExactPropagator, FockSpace};
use fermiflow::initial_data::{fermi_ball, harmonic_trap, plane_wave_projection, trapped_slater};
use fermiflow::linalg::{c64, unitary_propagator, CMatrix};
use fermiflow::meanfield::{evolve, EvolutionConfig, MeanFieldKind};
use fermiflow::model::kinetic_operator;
use fermiflow::semiclassics::wigner;
use fermiflow::snapshot::{load_fmf1, read_fmf1, save_fmf1, write_fmf1};
use fermiflow::{Error, Lattice, ModelParams, Potential, PotentialSpec};

fn setup(d: usize, n: usize, length: f64) -> (Lattice, ModelParams) {
    let l = Lattice::new(1, d, length).unwrap();
    let p = ModelParams::new(n, &l).unwrap();
    (l, p)
}

#[test]
fn free_hartree_fock_matches_the_one_body_propagator() {
    let (l, p) = setup(32, 4, 1.0);
    let zero = Potential::build(&PotentialSpec::Zero, &l).unwrap();
    let omega = trapped_slater(&l, p.hbar(), &harmonic_trap(&l, 50.0), 4).unwrap();
    let traj = evolve(&omega, &EvolutionConfig::new(1e-2, 0.5), MeanFieldKind::HartreeFock, &zero, &p, &l, &[]).unwrap();
    let u = unitary_propagator(&kinetic_operator(&l, p.hbar()), 0.5 / p.hbar());
    let exact = &u * &omega.matrix * u.adjoint();
    assert!((&traj.final_state().matrix - exact).norm() < 1e-10);
}

#[test]
fn exact_and_mean_field_agree_without_interaction() {
    let (l, p) = setup(6, 2, 6.0);
    let zero = Potential::build(&PotentialSpec::Zero, &l).unwrap();
    let omega = plane_wave_projection(&l, &fermi_ball(&l, 2).unwrap()).unwrap();
    let space = FockSpace::new(6).unwrap();
    let psi = quasi_free_state(space, &omega.matrix).unwrap();
    let mut exact = ExactPropagator::new(space, hamiltonian(space, &zero, &p, &l).unwrap(), p.hbar()).unwrap();
    let gamma = rdm1(&exact.evolve(&psi, 0.7).unwrap());
    let traj = evolve(&omega, &EvolutionConfig::new(1e-2, 0.7), MeanFieldKind::HartreeFock, &zero, &p, &l, &[]).unwrap();
    assert!(hs_norm(&(gamma - &traj.final_state().matrix)) < 1e-10);
}

#[test]
fn hartree_and_hartree_fock_split_with_interaction() {
    let (l, p) = setup(16, 3, 1.0);
    let v = Potential::build(&PotentialSpec::Gaussian { lambda: 2.0, sigma: 0.2 }, &l).unwrap();
    let omega = trapped_slater(&l, p.hbar(), &harmonic_trap(&l, 50.0), 3).unwrap();
    let cfg = EvolutionConfig::new(1e-2, 0.5);
    let hf = evolve(&omega, &cfg, MeanFieldKind::HartreeFock, &v, &p, &l, &[]).unwrap();
    let h = evolve(&omega, &cfg, MeanFieldKind::Hartree, &v, &p, &l, &[]).unwrap();
    assert!(trace_norm(&(&hf.final_state().matrix - &h.final_state().matrix)).unwrap() > 1e-6);
    assert!(hf.max_idempotency_defect() < 1e-10);
}

#[test]
fn wigner_sum_rule_on_a_fermi_ball() {
    let (l, p) = setup(32, 5, 2.0);
    let omega = plane_wave_projection(&l, &fermi_ball(&l, 5).unwrap()).unwrap();
    let w = wigner(&omega, &l, p.hbar()).unwrap();
    assert!((w.weighted_total() - 5.0).abs() < 1e-10);
    assert!(w.max_imag < 1e-12);
}

#[test]
fn snapshots_round_trip_bit_exactly() {
    let m = CMatrix::from_fn(5, 3, |i, j| c64(i as f64 / 7.0 - j as f64, (i * j) as f64 * 1e-300));
    let mut buf = Vec::new();
    write_fmf1(&mut buf, 1, 5, &m).unwrap();
    assert_eq!(&buf[..4], b"FMF1");
    assert_eq!(buf.len(), 4 + 4 + 4 + 8 + 8 + 15 * 16);
    let (header, back) = read_fmf1(buf.as_slice()).unwrap();
    assert_eq!((header.ds, header.d, header.rows, header.cols), (1, 5, 5, 3));
    assert_eq!(back, m);

    let path = std::env::temp_dir().join(format!("fermiflow-roundtrip-{}.fmf1", std::process::id()));
    save_fmf1(&path, 1, 5, &m).unwrap();
    let (_, loaded) = load_fmf1(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(loaded, m);
}

#[test]
fn corrupt_snapshots_are_rejected() {
    assert!(matches!(read_fmf1(&b"FMF2\0\0\0\0"[..]), Err(Error::Format(_))));
    let mut buf = Vec::new();
    write_fmf1(&mut buf, 1, 2, &CMatrix::zeros(2, 2)).unwrap();
    buf.truncate(buf.len() - 3);
    assert!(read_fmf1(buf.as_slice()).is_err());
}
