use dirac_clock::boost::*;
use dirac_clock::chronos::{build_time_operator, expect_time};
use dirac_clock::dynamics::*;
use dirac_clock::{Error, Lattice, SpinorField};
use std::f64::consts::PI;

fn model() -> Model {
    Model::natural(1).unwrap()
}

fn packet(n: usize, l: f64, k0: f64, sigma: f64, branch: Branch) -> SpinorField {
    make_packet(&model(), &Lattice::new(1, n, l).unwrap(), &PacketSpec::new(k0, sigma, branch)).unwrap()
}

#[test]
fn step_is_unitary_and_composes() {
    let m = model();
    let psi = packet(512, 80.0, 0.3, 2.0, Branch::Positive);
    let op = build_time_operator(psi.lattice(), &m).unwrap();
    let same = boost_step(&op, &psi, 0.0, 1.0).unwrap();
    assert!(same.max_abs_diff(&psi.to_position()).unwrap() <= 1e-15);
    let d = 0.037;
    let one = boost_step(&op, &psi, 2.0 * d, 1.0).unwrap();
    let two = boost_step(&op, &boost_step(&op, &psi, d, 1.0).unwrap(), d, 1.0).unwrap();
    assert!(one.max_abs_diff(&two).unwrap() <= 1e-12);
    assert!((one.norm() - 1.0).abs() <= 1e-12);
}

#[test]
fn norm_drift_over_ten_thousand_steps() {
    let m = model();
    let psi = packet(256, 60.0, 0.2, 2.0, Branch::Positive);
    let op = build_time_operator(psi.lattice(), &m).unwrap();
    let mut f = psi.to_position();
    for _ in 0..10_000 {
        f = boost_step(&op, &f, 1e-4, 1.0).unwrap();
    }
    assert!((f.norm() - 1.0).abs() <= 1e-9);
}

#[test]
fn run_group_law_and_time_invariance() {
    let m = model();
    let psi = packet(512, 80.0, 0.3, 2.0, Branch::Positive);
    let a = boost_run(&m, &psi, 0.05, 10).unwrap();
    let b = boost_run(&m, &a.final_field, 0.07, 7).unwrap();
    let ab = boost_run(&m, &psi, 0.12, 3).unwrap();
    assert!(b.final_field.max_abs_diff(&ab.final_field).unwrap() <= 1e-10);
    let t0 = expect_time(&m, &psi).unwrap();
    let t1 = expect_time(&m, &ab.final_field).unwrap();
    assert!((t0 - t1).abs() <= 1e-10);
    for r in &ab.records {
        assert!((r.norm - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn first_order_momentum_response() {
    let m = model();
    let psi = packet(1024, 120.0, 0.3, 4.0, Branch::Positive);
    let r = momentum_response(&m, &psi, 1e-4).unwrap();
    assert!(r.rel_err <= 5e-3, "{r:?}");
    // the response points against ⟨α⟩
    assert!(r.dp_deps[0] < 0.0);
}

#[test]
fn small_eps_leakage_and_energy_support() {
    let m = model();
    let psi = packet(512, 80.0, 0.3, 2.0, Branch::Positive);
    let run = boost_run(&m, &psi, 1e-4, 100).unwrap();
    let p = pauli_diagnostic(&m, &run, 1e-12);
    assert_eq!(p.branch, "positive");
    assert!(p.leakage_max <= 1e-6, "{}", p.leakage_max);
    assert!(p.leakage_monotone);
    assert!(p.within_branch);
    assert!(p.min_positive_energy.unwrap() >= 1.0 - 1e-12);
}

#[test]
fn large_eps_leakage_is_reported() {
    let m = model();
    let psi = packet(1024, 120.0, 0.3, 3.0, Branch::Positive);
    let run = boost_run(&m, &psi, 0.5, 50).unwrap();
    let p = pauli_diagnostic(&m, &run, 1e-12);
    assert!(p.leakage_final.is_finite() && p.leakage_final > 0.0);
    assert!(p.within_branch);
}

#[test]
fn phase_per_unit_eps_follows_beta() {
    let m = model();
    let plus = packet(1024, 160.0, 0.0, 10.0, Branch::Positive);
    let minus = packet(1024, 160.0, 0.0, 10.0, Branch::Negative);
    let rp = phase_shift_check(&m, &boost_run(&m, &plus, 1e-3, 100).unwrap());
    let rm = phase_shift_check(&m, &boost_run(&m, &minus, 1e-3, 100).unwrap());
    assert!((rp.per_unit_eps / (2.0 * PI) - 1.0).abs() <= 1e-2, "{}", rp.per_unit_eps);
    assert!((rp.per_unit_eps / rp.expected_per_unit_eps - 1.0).abs() <= 1e-2);
    assert!((rm.per_unit_eps / rm.expected_per_unit_eps - 1.0).abs() <= 1e-2);
    assert!(rp.sign_ok && rm.sign_ok);
    assert!(rp.per_unit_eps > 0.0 && rm.per_unit_eps < 0.0);
}

#[test]
fn rest_energy_boost_accumulates_two_pi() {
    let m = model();
    let psi = packet(1024, 160.0, 0.0, 10.0, Branch::Positive);
    let beta = expect_re(&m, &psi, Observable::Beta).unwrap();
    let run = boost_run(&m, &psi, m.params.rest_energy() / beta, 400).unwrap();
    let rep = phase_shift_check(&m, &run);
    assert!((rep.total / (2.0 * PI) - 1.0).abs() <= 2e-2, "{}", rep.total);
}

#[test]
fn mixed_input_reports_per_branch_phases() {
    let m = model();
    let psi = packet(512, 80.0, 0.2, 3.0, Branch::Mixed { weight_plus: 0.5 });
    let rep = phase_shift_check(&m, &boost_run(&m, &psi, 1e-3, 10).unwrap());
    assert_eq!(rep.branch, "mixed");
    assert!(rep.total_plus.unwrap() > 0.0 && rep.total_minus.unwrap() < 0.0);
}

#[test]
fn finite_boost_momentum_shift() {
    // wide in x so ⟨α⟩ stays near v_gp/c over the whole run
    let m = model();
    let psi = packet(8192, 1400.0, 0.3, 100.0, Branch::Positive);
    let h = expect_re(&m, &psi, Observable::Energy).unwrap();
    let run = boost_run(&m, &psi, h, 100).unwrap();
    let curve = momentum_shift_curve(&m, &run);
    let end = curve.last().unwrap();
    assert!(end.dev_pre <= 0.10, "{end:?}");
    assert!(curve[0].dev_pre <= 1e-2);
}

#[test]
fn de_broglie_relations() {
    let m = model();
    let psi = packet(2048, 400.0, 0.5, 20.0, Branch::Positive);
    let r = de_broglie_check(&m, &psi).unwrap();
    assert!((r.lambda - 4.0 * PI).abs() <= 1e-2 * 4.0 * PI, "{}", r.lambda);
    assert!(r.rel_err_lambda <= 1e-2);
    assert!(r.rel_err_velocity <= 1e-2);

    // ε·|x| must stay small across the packet for the boosted state to remain branch-pure
    let boosted = boost_run(&m, &packet(1024, 160.0, 0.3, 8.0, Branch::Positive), 2e-3, 10).unwrap();
    let r = de_broglie_check(&m, &boosted.final_field).unwrap();
    assert!(r.rel_err_lambda <= 1e-2 && r.rel_err_velocity <= 1e-2, "{r:?}");

    let rest = packet(512, 80.0, 0.0, 4.0, Branch::Positive);
    assert!(matches!(
        de_broglie_check(&m, &rest),
        Err(Error::Precondition { name: "nonzero_momentum", .. })
    ));
}

#[test]
fn hamiltonian_step_rest_mode() {
    let m = model();
    let lat = Lattice::new(1, 64, 40.0).unwrap();
    let psi = plane_wave(&m, &lat, [0; 3], Branch::Positive, SpinLabel::Up).unwrap();
    let r = hamiltonian_step_check(&m, &psi, m.params.tau0(), 64).unwrap();
    assert!((r.phase_comoving - 2.0 * PI).abs() <= 1e-6 * 2.0 * PI);
    let z = hamiltonian_step_check(&m, &psi, 0.0, 1).unwrap();
    assert_eq!(z.phase_comoving, 0.0);
    assert!(z.shift.iter().all(|s| s.abs() < 1e-12));
}

#[test]
fn hamiltonian_step_moving_packet() {
    let m = model();
    let psi = packet(4096, 400.0, 0.5, 10.0, Branch::Positive);
    let g = gamma(&m, &psi).unwrap();
    let r = hamiltonian_step_check(&m, &psi, g * m.params.tau0(), 2000).unwrap();
    assert!((g - 1.118).abs() < 2e-3);
    assert!(r.phase_rel_err <= 2e-2, "{r:?}");
    assert!((r.phase_comoving / (2.0 * PI) - 1.0).abs() <= 2e-2);
    assert!(r.shift_rel_err <= 5e-3);
    // the lab-frame phase carries the extra γ²
    assert!((r.phase_lab / (2.0 * PI * g * g) - 1.0).abs() <= 2e-2);
}

#[test]
fn hamiltonian_step_rejects_mixed_and_undersampled() {
    let m = model();
    let mixed = packet(512, 80.0, 0.0, 3.0, Branch::Mixed { weight_plus: 0.5 });
    assert!(hamiltonian_step_check(&m, &mixed, 1.0, 10).is_err());
    let psi = packet(512, 80.0, 0.0, 3.0, Branch::Positive);
    assert!(matches!(
        hamiltonian_step_check(&m, &psi, 10.0, 2),
        Err(Error::Precondition { name: "phase_sampling", .. })
    ));
}

#[test]
fn momentum_edge_aborts_with_step() {
    let m = model();
    // Δk = 2π/L is coarse here, so a unit boost reaches the band edge quickly
    let psi = packet(64, 64.0, 0.0, 4.0, Branch::Positive);
    let err = boost_run(&m, &psi, 40.0, 200).unwrap_err();
    match err {
        Error::BoostEdge { step, .. } => assert!(step >= 1),
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn csv_layout() {
    let m = model();
    let psi = packet(256, 60.0, 0.2, 2.0, Branch::Positive);
    let run = boost_run(&m, &psi, 1e-3, 4).unwrap();
    let mut out = Vec::new();
    run.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,eps_accum,p_mean,H_mean,beta_mean,pop_plus,pop_minus,phase_step");
    assert_eq!(lines.len(), 6);
    assert!(lines[5].starts_with("4,"));
}
