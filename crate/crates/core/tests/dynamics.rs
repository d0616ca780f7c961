use dirac_clock::dense;
use dirac_clock::dynamics::*;
use dirac_clock::{Lattice, Space};
use num_complex::Complex64 as C64;

fn model1() -> Model {
    Model::natural(1).unwrap()
}

fn energy(k: f64) -> f64 {
    (k * k + 1.0).sqrt()
}

#[test]
fn positive_packet_has_no_negative_weight() {
    let m = model1();
    let lat = Lattice::new(1, 512, 120.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.4, 3.0, Branch::Positive)).unwrap();
    let (pp, pm) = branch_populations(&m, &psi).unwrap();
    assert!(pm <= 1e-12, "negative weight {pm}");
    assert!((pp - 1.0).abs() <= 1e-12);
}

#[test]
fn rest_mode_beta_is_one() {
    let m = model1();
    let lat = Lattice::new(1, 64, 40.0).unwrap();
    let psi = plane_wave(&m, &lat, [0; 3], Branch::Positive, SpinLabel::Up).unwrap();
    let b = expect_re(&m, &psi, Observable::Beta).unwrap();
    assert!((b - 1.0).abs() <= 1e-10);
}

#[test]
fn narrow_packet_beta_is_inverse_gamma() {
    let m = model1();
    let lat = Lattice::new(1, 1024, 300.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.5, 20.0, Branch::Positive)).unwrap();
    let b = expect_re(&m, &psi, Observable::Beta).unwrap();
    let target = 1.0 / energy(0.5);
    assert!((b / target - 1.0).abs() < 1e-2, "beta = {b}");
    assert!((target - 0.894427).abs() < 1e-6);

    let v = group_velocity(&m, &psi).unwrap()[0];
    assert!((v / (0.5 / energy(0.5)) - 1.0).abs() < 5e-3, "v = {v}");
    let g = gamma(&m, &psi).unwrap();
    assert!((g / energy(0.5) - 1.0).abs() < 5e-3, "gamma = {g}");
}

#[test]
fn packet_preconditions() {
    let m = model1();
    let lat = Lattice::new(1, 256, 40.0).unwrap();
    let coarse = PacketSpec::new(0.0, 0.3, Branch::Positive);
    assert!(matches!(
        make_packet(&m, &lat, &coarse),
        Err(dirac_clock::Error::Precondition { name: "sigma_resolution", .. })
    ));
    let near_edge = PacketSpec::new(0.0, 2.0, Branch::Positive).at(12.0);
    assert!(matches!(
        make_packet(&m, &lat, &near_edge),
        Err(dirac_clock::Error::Precondition { name: "edge_clearance", .. })
    ));
    let fast = PacketSpec::new(12.0, 2.0, Branch::Positive);
    assert!(matches!(
        make_packet(&m, &lat, &fast),
        Err(dirac_clock::Error::Precondition { name: "k0_band", .. })
    ));
    // a looser clearance factor admits the same packet
    assert!(make_packet(&m, &lat, &near_edge.clearance(3.0)).is_ok());
}

#[test]
fn zero_time_is_identity_and_evolution_is_unitary() {
    let m = model1();
    let lat = Lattice::new(1, 512, 100.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.7, 2.0, Branch::Mixed { weight_plus: 0.5 })).unwrap();
    assert_eq!(evolve(&m, &psi, 0.0).unwrap(), psi);
    for t in [0.3, 7.0, 123.4] {
        let n = evolve(&m, &psi, t).unwrap().norm_sqr();
        assert!((n - 1.0).abs() <= 1e-12);
    }
    let pos = psi.to_position();
    let moved = evolve(&m, &pos, 5.0).unwrap();
    assert_eq!(moved.space(), Space::Momentum);
    assert!((moved.norm_sqr() - 1.0).abs() <= 1e-12);
}

#[test]
fn rest_mode_returns_after_one_period() {
    let m = model1();
    let lat = Lattice::new(1, 64, 40.0).unwrap();
    let psi = plane_wave(&m, &lat, [0; 3], Branch::Positive, SpinLabel::Up).unwrap();
    let back = evolve(&m, &psi, m.params.tau0()).unwrap();
    assert!(back.max_abs_diff(&psi).unwrap() <= 1e-10);
}

#[test]
fn evolution_composes() {
    let m = model1();
    let lat = Lattice::new(1, 256, 60.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(-0.3, 2.0, Branch::Mixed { weight_plus: 0.3 })).unwrap();
    let two = evolve(&m, &evolve(&m, &psi, 1.7).unwrap(), 4.1).unwrap();
    let one = evolve(&m, &psi, 5.8).unwrap();
    assert!(two.max_abs_diff(&one).unwrap() <= 1e-12);
}

#[test]
fn dense_exponential_matches_mode_evolution() {
    let m = model1();
    let lat = Lattice::new(1, 64, 30.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.4, 2.0, Branch::Mixed { weight_plus: 0.5 })).unwrap();
    let h = dense::hamiltonian(&m.rep, &lat, &m.params).unwrap();
    for t in [0.5, 3.0, 9.0] {
        let u = dense::expm_hermitian(&h, t / m.params.hbar);
        let oracle = dense::apply(&u, &psi);
        let spectral = evolve(&m, &psi, t).unwrap().to_position();
        let d = spectral.max_abs_diff(&oracle).unwrap();
        assert!(d <= 1e-10, "t = {t}: {d}");
    }
}

#[test]
fn dense_hamiltonian_expectation_matches_modes() {
    let m = Model::natural(3).unwrap();
    let lat = Lattice::new(3, 8, 8.0).unwrap();
    // an N = 8 grid cannot host a resolved packet, so use a generic smooth field
    let psi = dirac_clock::SpinorField::from_position_fn(lat, 4, |x, s| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        C64::from_polar((-r2 / 4.0).exp() * (1.0 + s as f64), 0.3 * x[0] - 0.2 * x[1] + s as f64)
    })
    .normalized();
    let h = dense::hamiltonian(&m.rep, &lat, &m.params).unwrap();
    let v = dense::to_vector(&psi);
    let e_dense = v.dotc(&(&h * &v));
    let e_modes = expectation(&m, &psi, Observable::Energy).unwrap();
    assert!((e_dense - e_modes).norm() < 1e-12);
}

#[test]
fn branch_pure_transport_and_constant_beta() {
    let m = model1();
    let lat = Lattice::new(1, 1024, 200.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.5, 4.0, Branch::Positive).at(-40.0)).unwrap();
    let tau0 = m.params.tau0();
    let times = uniform_times(10.0 * tau0, 201);
    let series = observable_series_multi(
        &m,
        &psi,
        &[Observable::Position(0), Observable::Beta, Observable::Momentum(0), Observable::Energy],
        &times,
    )
    .unwrap();
    let (_, slope) = fit_line(&times, &series[0].real());
    let v = group_velocity(&m, &psi).unwrap()[0];
    assert!((slope / v - 1.0).abs() < 1e-3, "slope {slope} vs {v}");

    let b = series[1].real();
    let spread = b.iter().fold(0.0f64, |s, x| s.max((x - b[0]).abs()));
    assert!(spread < 1e-6, "beta varies by {spread}");

    for s in &series[2..] {
        let r = s.real();
        assert!(r.iter().all(|x| (x - r[0]).abs() <= 1e-12));
    }
}

#[test]
fn mixed_rest_packet_trembles_at_twice_the_rest_energy() {
    let m = model1();
    let lat = Lattice::new(1, 1024, 200.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.0, 3.0, Branch::Mixed { weight_plus: 0.5 })).unwrap();
    let times = uniform_times(20.0 * m.params.tau0(), 1024);
    let s = observable_series(&m, &psi, Observable::Alpha(0), &times).unwrap();
    let zb = zb_spectrum(&s).unwrap();
    let peak = zb.peak.expect("oscillation");
    let e = expect_re(&m, &psi, Observable::ModeEnergy).unwrap();
    assert!((peak.omega - 2.0 * e).abs() <= zb.bin_width, "{} vs {}", peak.omega, 2.0 * e);
    assert!((peak.omega - 2.0).abs() <= zb.bin_width);
}

#[test]
fn mixed_moving_packet_trembles_at_twice_its_energy() {
    let m = model1();
    let lat = Lattice::new(1, 2048, 400.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.5, 10.0, Branch::Mixed { weight_plus: 0.5 })).unwrap();
    let times = uniform_times(20.0 * m.params.tau0(), 1024);
    let s = observable_series(&m, &psi, Observable::Beta, &times).unwrap();
    let zb = zb_spectrum(&s).unwrap();
    let peak = zb.peak.expect("oscillation");
    assert!((peak.omega - 2.0 * energy(0.5)).abs() <= zb.bin_width, "{}", peak.omega);
}

#[test]
fn branch_pure_packet_shows_no_tremble() {
    let m = model1();
    let lat = Lattice::new(1, 1024, 200.0).unwrap();
    for branch in [Branch::Positive, Branch::Negative] {
        let psi = make_packet(&m, &lat, &PacketSpec::new(0.5, 3.0, branch)).unwrap();
        let times = uniform_times(20.0 * m.params.tau0(), 512);
        for obs in [Observable::Alpha(0), Observable::Beta] {
            let s = observable_series(&m, &psi, obs, &times).unwrap();
            assert!(zb_spectrum(&s).unwrap().peak.is_none(), "{branch} {obs:?}");
        }
    }
}

#[test]
fn zb_rejects_short_or_coarse_series() {
    let m = model1();
    let lat = Lattice::new(1, 256, 60.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.0, 2.0, Branch::Mixed { weight_plus: 0.5 })).unwrap();
    let s = observable_series(&m, &psi, Observable::Alpha(0), &uniform_times(10.0, 100)).unwrap();
    assert!(zb_spectrum(&s).is_err());
}

#[test]
fn balanced_packet_has_no_gamma() {
    let m = model1();
    let lat = Lattice::new(1, 256, 60.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.0, 2.0, Branch::Mixed { weight_plus: 0.5 })).unwrap();
    assert!(matches!(gamma(&m, &psi), Err(dirac_clock::Error::BalancedPacket(_))));
    let rest = make_packet(&m, &lat, &PacketSpec::new(0.0, 2.0, Branch::Positive)).unwrap();
    assert!(group_velocity(&m, &rest).unwrap()[0].abs() < 1e-10);
}

#[test]
fn csv_layout() {
    let s = ObservableSeries {
        label: "beta".into(),
        times: vec![0.0, 0.5],
        values: vec![C64::new(1.0, 0.0), C64::new(0.25, -1e-17)],
        meta: vec![("branch".into(), "positive".into())],
    };
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# observable: beta");
    assert_eq!(lines[1], "# branch: positive");
    assert_eq!(lines[2], "t,re,im");
    let v: f64 = lines[4].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(v, 0.25);
}

#[test]
fn velocity_remainder_is_reported() {
    let m = model1();
    let lat = Lattice::new(1, 512, 100.0).unwrap();
    let pure = make_packet(&m, &lat, &PacketSpec::new(0.5, 4.0, Branch::Positive)).unwrap();
    // on a single branch cα·(cp/H) and (cp/H)² share their expectation
    assert!(velocity_projection_remainder(&m, &pure).unwrap().abs() < 1e-12);
    let mixed = make_packet(&m, &lat, &PacketSpec::new(0.5, 4.0, Branch::Mixed { weight_plus: 0.5 })).unwrap();
    assert!(velocity_projection_remainder(&m, &mixed).unwrap().is_finite());
}

#[test]
fn zb_window_must_hold_ten_periods() {
    let times = uniform_times(10.0, 300);
    assert!(check_zb_window(&times, 2.0).is_err());
    assert!(check_zb_window(&times, 7.0).is_ok());
}
