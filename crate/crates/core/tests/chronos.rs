use dirac_clock::chronos::*;
use dirac_clock::dynamics::*;
use dirac_clock::lattice::{gaussian_field, xp_commutator_defect};
use dirac_clock::{Error, Lattice, SpinorField};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn up(sd: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); sd];
    v[0] = C64::new(1.0, 0.0);
    v
}

#[test]
fn tau0_is_two_pi_and_blocks_square_to_tau_r() {
    let m = Model::natural(3).unwrap();
    assert_eq!(m.params.tau0(), 2.0 * PI);
    let lat = Lattice::new(3, 8, 10.0).unwrap();
    let op = build_time_operator(&lat, &m).unwrap();
    for idx in 0..lat.points() {
        let b = op.block(idx);
        assert!(b.hermiticity_residual() <= 1e-13);
        let tr = op.tau_r_at(lat.position(idx));
        let defect = b * b - dirac_clock::SpinMatrix::identity(4).scale_re(tr * tr);
        assert!(defect.max_abs() <= 1e-12 * tr * tr);
    }
}

#[test]
fn spectrum_on_a_16_cube() {
    let m = Model::natural(3).unwrap();
    let lat = Lattice::new(3, 16, 12.0).unwrap();
    let op = build_time_operator(&lat, &m).unwrap();
    let check = spectrum_check(&op, (0..lat.points()).map(|i| lat.position(i)));
    assert_eq!(check.sites, 4096);
    assert!(check.eigenvalue_rel_err <= 1e-10, "{check:?}");
    assert!((check.min_gap - 2.0 * op.tau0()).abs() <= 1e-10 * op.tau0());
    assert!(check.orthonormality <= 1e-12);
    assert!(check.completeness <= 1e-12);
    assert!(check.eigen_residual <= 1e-12 * 20.0);
    assert!(check.min_abs_eigenvalue >= op.tau0() * (1.0 - 1e-12));
    assert!(check.asymmetry <= 1e-12 * 20.0);
}

#[test]
fn spectrum_at_origin_and_unit_radius() {
    let m = Model::natural(3).unwrap();
    let lat = Lattice::new(3, 4, 4.0).unwrap();
    let op = build_time_operator(&lat, &m).unwrap();
    let s = spectrum_at(&op, [0.0; 3]);
    let t0 = op.tau0();
    for (i, lam) in s.eigenvalues.iter().enumerate() {
        let expect = if i < 2 { t0 } else { -t0 };
        assert!((lam - expect).abs() <= 1e-12);
    }
    let r1 = spectrum_at(&op, [1.0 / 3f64.sqrt(); 3]);
    assert!((r1.tau_r - (1.0 + 4.0 * PI * PI).sqrt()).abs() < 1e-12);
    assert!((r1.tau_r - 6.362265).abs() < 1e-6);
}

#[test]
fn helicity_labels_are_eigenvalues_of_sigma_dot_n() {
    let m = Model::natural(3).unwrap();
    let lat = Lattice::new(3, 4, 4.0).unwrap();
    let op = build_time_operator(&lat, &m).unwrap();
    let x: [f64; 3] = [0.3, -1.1, 0.4];
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let sn = (0..3).fold(dirac_clock::SpinMatrix::zeros(4), |acc, a| acc + m.rep.sigma(a).scale_re(x[a] / r));
    let s = spectrum_at(&op, x);
    for (u, h) in s.eigenspinors.iter().zip(&s.spin) {
        let v = sn.sandwich(&u[..4], &u[..4]).re;
        assert!((v - 2.0 * h).abs() < 1e-12);
    }
    // at the origin the labels are s_z eigenvalues
    let s0 = spectrum_at(&op, [0.0; 3]);
    assert_eq!(s0.basis, SpinBasis::Sz);
    for (u, h) in s0.eigenspinors.iter().zip(&s0.spin) {
        assert!((m.rep.spins[2].sandwich(&u[..4], &u[..4]).re - h).abs() < 1e-12);
    }
}

#[test]
fn one_dimensional_spectrum() {
    let m = Model::natural(1).unwrap();
    let lat = Lattice::new(1, 64, 20.0).unwrap();
    let op = build_time_operator(&lat, &m).unwrap();
    let check = spectrum_check(&op, (0..lat.points()).map(|i| lat.position(i)));
    assert!(check.eigenvalue_rel_err <= 1e-10);
    assert!((check.min_gap - 2.0 * op.tau0()).abs() <= 1e-10 * op.tau0());
    assert!(check.orthonormality <= 1e-12 && check.completeness <= 1e-12);
}

fn random_field(lat: Lattice, sd: usize, seed: &[f64]) -> SpinorField {
    SpinorField::from_position_fn(lat, sd, |x, s| {
        let a = seed[s % seed.len()];
        let b = seed[(s + 1) % seed.len()];
        C64::new((a * x[0] + b).sin(), (b * x[0] * x[0] - a).cos())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn time_operator_is_self_adjoint(seed in prop::collection::vec(-3.0f64..3.0, 4)) {
        let m = Model::natural(1).unwrap();
        let lat = Lattice::new(1, 64, 16.0).unwrap();
        let op = build_time_operator(&lat, &m).unwrap();
        let phi = random_field(lat, 2, &seed);
        let psi = random_field(lat, 2, &[seed[2], seed[0], seed[3]]);
        let a = phi.inner(&op.apply(&psi).unwrap()).unwrap();
        let b = op.apply(&phi).unwrap().inner(&psi).unwrap();
        let scale = phi.norm() * psi.norm() * op.tau_r_at([8.0, 0.0, 0.0]);
        prop_assert!((a - b).norm() <= 1e-12 * scale);
    }
}

#[test]
fn rest_mode_time_series_is_flat_at_tau0() {
    let m = Model::natural(1).unwrap();
    let lat = Lattice::new(1, 64, 40.0).unwrap();
    let psi = plane_wave(&m, &lat, [0; 3], Branch::Positive, SpinLabel::Up).unwrap();
    let times = uniform_times(10.0 * m.params.tau0(), 64);
    let r = series_t(&m, &psi, &times).unwrap();
    assert!(r.slope.abs() <= 1e-6);
    assert!((r.intercept - m.params.tau0()).abs() <= 1e-2 * m.params.tau0());
}

#[test]
fn rest_packet_intercept_is_tau0_over_gamma() {
    let m = Model::natural(1).unwrap();
    let lat = Lattice::new(1, 1024, 160.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.0, 10.0, Branch::Positive)).unwrap();
    let r = series_t(&m, &psi, &uniform_times(10.0 * m.params.tau0(), 101)).unwrap();
    let g = gamma(&m, &psi).unwrap();
    assert!((r.intercept / (m.params.tau0() / g) - 1.0).abs() <= 1e-2);
}

#[test]
fn moving_packet_time_slope() {
    let m = Model::natural(1).unwrap();
    let lat = Lattice::new(1, 2048, 600.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.5, 30.0, Branch::Positive).at(-60.0)).unwrap();
    let r = series_t(&m, &psi, &uniform_times(10.0 * m.params.tau0(), 101)).unwrap();
    assert!((r.slope / r.expected_slope - 1.0).abs() <= 1e-2);
    assert!((r.slope / 0.2 - 1.0).abs() <= 1e-2, "slope {}", r.slope);
    assert!(!r.mixed && r.zb.is_none());
}

#[test]
fn mixed_packet_time_series_trembles() {
    let m = Model::natural(1).unwrap();
    // narrow in k so the stationary point at k = 0 carries no weight
    let lat = Lattice::new(1, 2048, 400.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.5, 20.0, Branch::Mixed { weight_plus: 0.5 })).unwrap();
    let r = series_t(&m, &psi, &uniform_times(20.0 * m.params.tau0(), 512)).unwrap();
    assert!(r.mixed);
    let zb = r.zb.unwrap();
    let e = expect_re(&m, &psi, Observable::ModeEnergy).unwrap();
    assert!((zb.peak.unwrap().omega - 2.0 * e).abs() <= zb.bin_width, "{zb:?} e={e}");
}

#[test]
fn short_window_is_rejected() {
    let m = Model::natural(1).unwrap();
    let lat = Lattice::new(1, 64, 40.0).unwrap();
    let psi = plane_wave(&m, &lat, [0; 3], Branch::Positive, SpinLabel::Up).unwrap();
    let err = series_t(&m, &psi, &uniform_times(5.0 * m.params.tau0(), 64)).unwrap_err();
    assert!(matches!(err, Error::Precondition { name: "series_window", .. }));
}

#[test]
fn one_dimensional_commutator_identity() {
    // R must reduce to ([x, p] − iħ) ⊗ I
    let m = Model::natural(1).unwrap();
    for n in [64, 128] {
        let lat = Lattice::new(1, n, 20.0).unwrap();
        let psi = random_field(lat, 2, &[0.7, -1.3, 2.1]).normalized();
        let dense = commutator_th_dense(&m, &psi).unwrap();
        let free = commutator_th(&m, &psi).unwrap();
        let defect = xp_commutator_defect(&psi, 1.0).norm();
        assert!((dense.residual - defect).abs() <= 1e-9 * defect.max(1.0));
        assert!((free.residual - defect).abs() <= 1e-9 * defect.max(1.0));
        assert!(dense.within_bound);
    }
}

#[test]
fn three_dimensional_commutator_identity() {
    let m = Model::natural(3).unwrap();
    let lat = Lattice::new(3, 8, 6.0).unwrap();
    let psi = SpinorField::from_position_fn(lat, 4, |x, s| {
        C64::from_polar((-(x[0] * x[0] + 2.0 * x[1] * x[1] + x[2] * x[2]) / 3.0).exp(), s as f64 + x[0] - x[2])
    })
    .normalized();
    let dense = commutator_th_dense(&m, &psi).unwrap();
    let free = commutator_th(&m, &psi).unwrap();
    let defect = xp_commutator_defect(&psi, 1.0).norm();
    assert!((dense.residual - defect).abs() <= 1e-9 * defect.max(1.0));
    assert!((free.residual - dense.residual).abs() <= 1e-9 * defect.max(1.0));
    assert!(dense.within_bound);
}

#[test]
fn commutator_on_zero_field() {
    let m = Model::natural(1).unwrap();
    let lat = Lattice::new(1, 64, 20.0).unwrap();
    let zero = SpinorField::zeros(lat, 2, dirac_clock::Space::Position);
    assert_eq!(commutator_th_dense(&m, &zero).unwrap().residual, 0.0);
}

#[test]
fn commutator_residual_decreases_with_resolution() {
    let m = Model::natural(1).unwrap();
    let mut last = f64::INFINITY;
    for n in [64, 128, 256] {
        let lat = Lattice::new(1, n, 320.0).unwrap();
        let psi = gaussian_field(lat, &up(2), [0.0; 3], 1.0, [0.0; 3]);
        let r = commutator_th_dense(&m, &psi).unwrap();
        assert!(r.within_bound, "N={n}");
        assert!(r.residual < last, "N={n}");
        last = r.residual;
    }
}

#[test]
fn equal_width_inequalities_hold_for_1d_packets() {
    let m = Model::natural(1).unwrap();
    let lat = Lattice::new(1, 1024, 200.0).unwrap();
    for branch in [Branch::Positive, Branch::Negative, Branch::Mixed { weight_plus: 0.4 }, Branch::Bare] {
        let psi = make_packet(&m, &lat, &PacketSpec::new(0.3, 4.0, branch).at(10.0)).unwrap();
        let u = uncertainty_th(&m, &psi, UncertaintyTolerance::default()).unwrap();
        assert!(u.pass_eq29, "{branch}");
        assert!(u.product() >= u.robertson * (1.0 - 1e-12));
        assert!(u.d_t >= 0.0 && u.d_h >= 0.0 && u.dr >= 0.0 && u.dp >= 0.0);
    }
}

#[test]
fn l0_bare_packet_meets_the_3d_bounds() {
    let m = Model::natural(3).unwrap();
    let lat = Lattice::new(3, 64, 14.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.0, 1.0, Branch::Bare)).unwrap();
    let u = uncertainty_th(&m, &psi, UncertaintyTolerance::default()).unwrap();
    assert!((u.bound_eq28 - 1.5).abs() < 1e-10);
    assert!(u.pass_eq29 && u.pass_eq30 && u.pass_eq31 && u.pass_eq28, "{u:?}");
    assert!(u.product() >= 1.5 * (1.0 - 1e-6));
    let json = serde_json::to_value(u).unwrap();
    let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(|s| s.as_str()).collect();
    keys.sort();
    let mut want = vec![
        "dT", "dH", "dr", "dp", "bound_eq28", "bound_eq31", "mt_time", "dTdt", "pass_eq29", "pass_eq30", "pass_eq31",
        "pass_eq36",
    ];
    want.sort();
    assert_eq!(keys, want);
}

#[test]
fn zero_tolerance_exposes_the_lattice_deficit() {
    let m = Model::natural(1).unwrap();
    let lat = Lattice::new(1, 256, 24.0).unwrap();
    let psi = make_packet(&m, &lat, &PacketSpec::new(0.0, 2.0, Branch::Bare)).unwrap();
    let strict = uncertainty_th(&m, &psi, UncertaintyTolerance { abs: 0.0, rel: 0.0 }).unwrap();
    let loose = uncertainty_th(&m, &psi, UncertaintyTolerance::default()).unwrap();
    assert!(!strict.pass_eq31);
    assert!(loose.pass_eq31);
}

#[test]
fn mandelstam_tamm_limits() {
    let m = Model::natural(1).unwrap();
    let times = uniform_times(10.0 * m.params.tau0(), 101);

    let lat = Lattice::new(1, 2048, 600.0).unwrap();
    let nr = make_packet(&m, &lat, &PacketSpec::new(0.1, 40.0, Branch::Positive).at(-50.0)).unwrap();
    let r = mt_report(&m, &nr, &times, UncertaintyTolerance::default()).unwrap();
    assert!((r.ratio / r.nr_target - 1.0).abs() <= 0.05, "{} vs {}", r.ratio, r.nr_target);
    assert!((r.nr_target - 101.0).abs() < 1.0);
    assert_eq!(r.uncertainty.pass_eq36, Some(true));

    let lat = Lattice::new(1, 4096, 200.0).unwrap();
    let ur = make_packet(&m, &lat, &PacketSpec::new(20.0, 4.0, Branch::Positive).at(-60.0)).unwrap();
    let r = mt_report(&m, &ur, &times, UncertaintyTolerance::default()).unwrap();
    assert!((r.ratio - 1.0).abs() <= 0.05);
    assert_eq!(r.uncertainty.pass_eq36, Some(true));
}

#[test]
fn rest_mode_mt_time_diverges() {
    let m = Model::natural(1).unwrap();
    let lat = Lattice::new(1, 64, 40.0).unwrap();
    let psi = plane_wave(&m, &lat, [0; 3], Branch::Positive, SpinLabel::Up).unwrap();
    let err = mt_report(&m, &psi, &uniform_times(10.0 * m.params.tau0(), 64), UncertaintyTolerance::default()).unwrap_err();
    assert!(matches!(err, Error::DivergentMtTime(_)));
}
