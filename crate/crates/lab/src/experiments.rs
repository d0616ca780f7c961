//! The experiment catalog. Each experiment parses its config completely, checks
//! packet preconditions, then computes; artifacts stay in memory until the
//! runner writes them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use dirac_clock::algebra::{build_rep, clifford_residual};
use dirac_clock::boost::{
    boost_run, de_broglie_check, hamiltonian_step_check, momentum_response, momentum_shift_curve, pauli_diagnostic,
    phase_shift_check, BoostRun,
};
use dirac_clock::chronos::{
    build_time_operator, commutator_th, commutator_th_dense, mt_report, series_t, spectrum_at, spectrum_check,
    uncertainty_th, UncertaintyReport, UncertaintyTolerance,
};
use dirac_clock::dense;
use dirac_clock::dynamics::{
    check_packet, check_zb_window, evolve, expect_re, fit_line, gamma, group_velocity, make_packet,
    observable_series_multi, uniform_times, zb_spectrum, Branch, Model, Observable, PacketSpec, SpinLabel,
};
use dirac_clock::lattice::{
    gaussian_field, mean_position, translate, uncertainty_xp, xp_commutator_residual, tail_bound,
};
use dirac_clock::{Error, Lattice, PhysParams, SpinorField};

use crate::config::{Config, ConfigError};

/// Why an experiment stopped before producing an outcome.
#[derive(Debug)]
pub enum Fail {
    Config(ConfigError),
    Core(Error),
}

impl From<ConfigError> for Fail {
    fn from(e: ConfigError) -> Self {
        Fail::Config(e)
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter { .. }
            | Error::LatticeSize(_)
            | Error::Dimension(_)
            | Error::Oversize { .. }
            | Error::UnknownObservable(_) => Fail::Config(ConfigError(e.to_string())),
            e => Fail::Core(e),
        }
    }
}

/// Flags, values and files produced by one experiment.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Enabled assertions; the run passes iff all are true.
    pub flags: BTreeMap<String, bool>,
    /// Reported, never failed.
    pub informational: BTreeMap<String, bool>,
    pub values: BTreeMap<String, Value>,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    fn flag(&mut self, name: impl Into<String>, ok: bool) {
        self.flags.insert(name.into(), ok);
    }

    fn info(&mut self, name: impl Into<String>, ok: bool) {
        self.informational.insert(name.into(), ok);
    }

    fn value(&mut self, name: impl Into<String>, v: impl Serialize) {
        self.values.insert(name.into(), serde_json::to_value(v).expect("serializable"));
    }

    fn file(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn json(&mut self, name: impl Into<String>, v: &impl Serialize) {
        let mut s = serde_json::to_vec_pretty(v).expect("serializable");
        s.push(b'\n');
        self.file(name, s);
    }

    pub fn failed(&self) -> Vec<&str> {
        self.flags.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.as_str()).collect()
    }
}

pub struct Experiment {
    pub name: &'static str,
    pub anchor: &'static str,
    pub about: &'static str,
    keys: &'static [&'static [&'static str]],
    run: fn(&Config) -> Result<Outcome, Fail>,
}

impl Experiment {
    pub fn run(&self, cfg: &Config) -> Result<Outcome, Fail> {
        let mut allowed: Vec<&str> = COMMON.to_vec();
        for g in self.keys {
            allowed.extend_from_slice(g);
        }
        cfg.check_keys(&allowed)?;
        (self.run)(cfg)
    }
}

const COMMON: &[&str] = &["experiment", "out", "hbar", "c", "m0"];
const LATTICE: [&str; 3] = ["dim", "n", "length"];
const PACKET: [&str; 7] = ["k0", "sigma", "x0", "branch", "weight_plus", "spin", "clearance"];

pub static CATALOG: &[Experiment] = &[
    Experiment {
        name: "clifford",
        anchor: "Eq. 2",
        about: "anticommutation relations of the 1D and 3D representations",
        keys: &[&["tol"]],
        run: clifford,
    },
    Experiment {
        name: "appendixA",
        anchor: "Eqs. A.1–A.19",
        about: "DFT pairing, translation, minimum uncertainty and the [x,p] defect",
        keys: &[&["n", "length", "sigma", "shift", "commutator_n", "commutator_length", "commutator_sigma"]],
        run: appendix_a,
    },
    Experiment {
        name: "spectrum",
        anchor: "Eqs. 8–11",
        about: "per-site eigenvalues, gap and eigenspinors of T",
        keys: &[&["dim", "n", "length"]],
        run: spectrum,
    },
    Experiment {
        name: "evolve",
        anchor: "Eqs. 4–7",
        about: "transport of branch-pure packets and the dense evolution oracle",
        keys: &[&LATTICE, &PACKET, &["t_end", "n_times", "dense_n", "dense_length", "dense_sigma"]],
        run: evolve_exp,
    },
    Experiment {
        name: "zitter",
        anchor: "Eqs. 4–5",
        about: "Zitterbewegung frequency of mixed packets",
        keys: &[&LATTICE, &PACKET, &["t_end", "n_times", "observable"]],
        run: zitter,
    },
    Experiment {
        name: "timeseries",
        anchor: "Eq. 3",
        about: "<T(t)> slope and intercept",
        keys: &[&LATTICE, &PACKET, &["t_end", "n_times"]],
        run: timeseries,
    },
    Experiment {
        name: "commutator",
        anchor: "Eq. 27",
        about: "[T,H] residual against the lattice tail bound",
        keys: &[&[
            "n_1d", "length_1d", "sigma_1d", "n_3d", "length_3d", "sigma_3d", "dense_max", "assert_halving",
        ]],
        run: commutator,
    },
    Experiment {
        name: "uncertainty",
        anchor: "Eqs. 28–31",
        about: "uncertainty chain on randomized l=0 packets",
        keys: &[&[
            "n", "packets", "seed", "sigma_min", "sigma_max", "l_over_sigma_min", "l_over_sigma_max", "tol_abs",
            "tol_rel", "informational_branch",
        ]],
        run: uncertainty,
    },
    Experiment {
        name: "mt",
        anchor: "Eqs. 34–41",
        about: "Mandelstam–Tamm time in the NR and UR limits",
        keys: &[&LATTICE, &PACKET, &["t_end", "n_times", "expect", "tol_abs", "tol_rel", "ratio_tol"]],
        run: mt,
    },
    Experiment {
        name: "boost",
        anchor: "Eqs. 12–22",
        about: "momentum response, branch phase and finite-boost shift",
        keys: &[&LATTICE, &PACKET, &["eps_total", "n_steps", "eps_small", "n_small", "fd_step"]],
        run: boost,
    },
    Experiment {
        name: "debroglie",
        anchor: "Eqs. 23–24",
        about: "de Broglie wavelength and v_ph v_gp = c²",
        keys: &[&LATTICE, &PACKET, &["eps_total", "n_steps"]],
        run: debroglie,
    },
    Experiment {
        name: "pauli",
        anchor: "Eqs. 18–22",
        about: "branch leakage and energy support under the boost",
        keys: &[&LATTICE, &PACKET, &["eps_total", "n_steps", "eps_large", "n_large", "grid_tol"]],
        run: pauli,
    },
    Experiment {
        name: "hamstep",
        anchor: "Eqs. 25–26",
        about: "dual Hamiltonian step: centroid shift and co-moving phase",
        keys: &[&LATTICE, &PACKET, &["substeps"]],
        run: hamstep,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    CATALOG.iter().find(|e| e.name == name)
}

// ---------------------------------------------------------------- shared parsing

fn params(cfg: &Config) -> Result<PhysParams, Fail> {
    Ok(PhysParams::new(cfg.f64_or("hbar", 1.0)?, cfg.f64_or("c", 1.0)?, cfg.f64_or("m0", 1.0)?)?)
}

fn model(cfg: &Config, dim: usize) -> Result<Model, Fail> {
    Ok(Model::new(dim, params(cfg)?)?)
}

fn lattice(cfg: &Config, dim: usize, n: usize, length: f64) -> Result<Lattice, Fail> {
    Ok(Lattice::new(cfg.usize_or("dim", dim)?, cfg.usize_or("n", n)?, cfg.f64_or("length", length)?)?)
}

struct PacketDefaults {
    k0: f64,
    sigma: f64,
    x0: f64,
    branch: &'static str,
}

/// Packet spec for wavenumber `k0`, which the caller may take from a list.
fn packet_spec(cfg: &Config, d: &PacketDefaults, k0: f64) -> Result<PacketSpec, Fail> {
    let branch = match cfg.choice_or("branch", &["positive", "negative", "mixed", "bare"], d.branch)? {
        "positive" => Branch::Positive,
        "negative" => Branch::Negative,
        "bare" => Branch::Bare,
        _ => {
            let w = cfg.f64_or("weight_plus", 0.5)?;
            if !(0.0..=1.0).contains(&w) {
                return Err(ConfigError(format!("{}: `weight_plus` must lie in [0, 1], got {w}", cfg.origin)).into());
            }
            Branch::Mixed { weight_plus: w }
        }
    };
    if cfg.raw("weight_plus").is_some() && !matches!(branch, Branch::Mixed { .. }) {
        return Err(ConfigError(format!("{}: `weight_plus` only applies to `branch = mixed`", cfg.origin)).into());
    }
    let spin = match cfg.choice_or("spin", &["up", "down"], "up")? {
        "down" => SpinLabel::Down,
        _ => SpinLabel::Up,
    };
    let mut spec = PacketSpec::new(k0, cfg.f64_or("sigma", d.sigma)?, branch)
        .at(cfg.f64_or("x0", d.x0)?)
        .spin(spin);
    if cfg.raw("clearance").is_some() {
        spec = spec.clearance(cfg.f64_or("clearance", 6.0)?);
    }
    Ok(spec)
}

fn single_packet(cfg: &Config, d: &PacketDefaults) -> Result<PacketSpec, Fail> {
    let k0 = cfg.f64_or("k0", d.k0)?;
    packet_spec(cfg, d, k0)
}

fn times(cfg: &Config, m: &Model, t_end_tau0: f64, n: usize) -> Result<Vec<f64>, Fail> {
    let tau0 = m.params.tau0();
    let t_end = cfg.time_or("t_end", t_end_tau0 * tau0, tau0)?;
    let n = cfg.usize_or("n_times", n)?;
    if n < 2 || t_end <= 0.0 {
        return Err(ConfigError(format!("{}: time grid needs t_end > 0 and n_times ≥ 2", cfg.origin)).into());
    }
    Ok(uniform_times(t_end, n))
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

fn fmt_k(k: f64) -> String {
    format!("{k}")
}

fn csv_series(series: &dirac_clock::dynamics::ObservableSeries) -> Result<Vec<u8>, Fail> {
    let mut out = Vec::new();
    series.write_csv(&mut out)?;
    Ok(out)
}

fn upper_spinor(sd: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); sd];
    v[0] = C64::new(1.0, 0.0);
    v
}

// ---------------------------------------------------------------- experiments

fn clifford(cfg: &Config) -> Result<Outcome, Fail> {
    let tol = cfg.f64_or("tol", 1e-13)?;
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for dim in [1, 3] {
        let rep = build_rep(dim)?;
        let r = clifford_residual(&rep);
        out.value(format!("residual_{dim}d"), r);
        rows.push(json!({"dim": dim, "spinor_dim": rep.spinor_dim, "residual": r}));
        out.flag(format!("pass_eq2_{dim}d"), r <= tol);
    }
    out.json("clifford.json", &rows);
    Ok(out)
}

fn appendix_a(cfg: &Config) -> Result<Outcome, Fail> {
    let p = params(cfg)?;
    let hbar = p.hbar;
    let lat = Lattice::new(1, cfg.usize_or("n", 256)?, cfg.f64_or("length", 40.0)?)?;
    let sigma = cfg.f64_or("sigma", 2.0)?;
    let shift = cfg.f64_or("shift", 3.5)?;
    let cn = cfg.list_usize_or("commutator_n", &[128, 256, 512])?;
    let cl = cfg.f64_or("commutator_length", 320.0)?;
    let cs = cfg.f64_or("commutator_sigma", 1.0)?;
    let clats: Vec<Lattice> = cn.iter().map(|&n| Lattice::new(1, n, cl)).collect::<Result<_, _>>()?;
    if !(sigma > 0.0 && cs > 0.0) {
        return Err(ConfigError(format!("{}: widths must be positive", cfg.origin)).into());
    }
    let mut out = Outcome::default();
    let up = upper_spinor(2);

    // round trip on a generic field and on a Gaussian
    let generic = SpinorField::from_position_fn(lat, 2, |x, s| {
        C64::new((0.7 * x[0] + s as f64).sin(), (0.05 * x[0] * x[0]).cos() * (-(x[0] / 9.0).powi(2)).exp())
    });
    let g = gaussian_field(lat, &up, [0.0; 3], sigma, [0.5, 0.0, 0.0]);
    let mut rt: f64 = 0.0;
    for f in [&generic, &g] {
        rt = rt.max(f.dft_forward()?.dft_inverse()?.max_abs_diff(f)?);
    }
    out.value("roundtrip_max_abs", rt);
    out.flag("pass_roundtrip", rt <= 1e-12);

    let moved = translate(&g, [shift, 0.0, 0.0])?;
    let dx = mean_position(&moved)[0] - mean_position(&g)[0];
    out.value("translate_shift", dx);
    out.flag("pass_translate", (dx - shift).abs() <= 1e-9);

    let u = uncertainty_xp(&gaussian_field(lat, &up, [0.0; 3], sigma, [0.0; 3]), hbar)?;
    out.value("a19_product", u.product);
    out.flag("pass_a19", rel(u.product, hbar / 2.0) <= 5e-3);

    let mut csv = String::from("n,residual,tail_bound\n");
    let mut res = Vec::new();
    let mut within = true;
    for l in &clats {
        let psi = gaussian_field(*l, &up, [0.0; 3], cs, [0.0; 3]);
        let r = xp_commutator_residual(&psi, hbar);
        let b = tail_bound(&psi, hbar);
        within &= r <= b;
        writeln!(csv, "{},{:.16e},{:.16e}", l.n(), r, b).unwrap();
        res.push(r);
    }
    out.value("commutator_residuals", &res);
    out.flag("pass_commutator_monotone", res.windows(2).all(|w| w[1] < w[0]));
    out.flag("pass_commutator_bound", within);
    out.file("commutator_vs_n.csv", csv.into_bytes());
    Ok(out)
}

fn spectrum(cfg: &Config) -> Result<Outcome, Fail> {
    let lat = lattice(cfg, 3, 16, 12.0)?;
    let m = model(cfg, lat.dim())?;
    let op = build_time_operator(&lat, &m)?;
    let check = spectrum_check(&op, (0..lat.points()).map(|i| lat.position(i)));
    let t0 = op.tau0();
    let mut out = Outcome::default();
    out.flag("pass_eq9", check.eigenvalue_rel_err <= 1e-10);
    out.flag("pass_gap", (check.min_gap - 2.0 * t0).abs() <= 1e-10 * 2.0 * t0);
    out.flag("pass_orthonormality", check.orthonormality <= 1e-12);
    out.flag("pass_completeness", check.completeness <= 1e-12);
    out.info("symmetric_branches", check.asymmetry <= 1e-10 * t0);
    out.value("check", check);

    let sd = m.rep.spinor_dim;
    let mut csv = String::from("r,tau_r");
    for i in 0..sd {
        write!(csv, ",e{i}").unwrap();
    }
    csv.push('\n');
    for idx in 0..lat.points() {
        let x = lat.position(idx);
        let s = spectrum_at(&op, x);
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        write!(csv, "{r:.16e},{:.16e}", s.tau_r).unwrap();
        for e in s.eigenvalues.iter() {
            write!(csv, ",{e:.16e}").unwrap();
        }
        csv.push('\n');
    }
    out.file("spectrum.csv", csv.into_bytes());
    out.json("spectrum.json", &json!({"tau0": t0, "check": check}));
    Ok(out)
}

fn evolve_exp(cfg: &Config) -> Result<Outcome, Fail> {
    let lat = lattice(cfg, 1, 1024, 200.0)?;
    let m = model(cfg, lat.dim())?;
    let spec = single_packet(cfg, &PacketDefaults { k0: 0.5, sigma: 4.0, x0: -40.0, branch: "positive" })?;
    if !matches!(spec.branch, Branch::Positive | Branch::Negative) {
        return Err(Error::Precondition {
            name: "branch_pure",
            detail: format!("evolve needs a branch-pure packet, got {}", spec.branch),
        }
        .into());
    }
    let ts = times(cfg, &m, 10.0, 201)?;
    let dn = cfg.usize_or("dense_n", 64)?;
    let dl = cfg.f64_or("dense_length", 64.0)?;
    let ds = cfg.f64_or("dense_sigma", 4.0)?;
    let dlat = Lattice::new(1, dn, dl)?;
    let dm = model(cfg, 1)?;
    let dspec = PacketSpec::new(0.3, ds, Branch::Mixed { weight_plus: 0.5 });
    check_packet(&lat, &spec)?;
    check_packet(&dlat, &dspec)?;

    let psi = make_packet(&m, &lat, &spec)?;
    let mut out = Outcome::default();
    let series = observable_series_multi(&m, &psi, &[Observable::Position(0), Observable::Beta], &ts)?;
    let (r, b) = (&series[0], &series[1]);
    let (_, slope) = fit_line(&r.times, &r.real());
    let v = group_velocity(&m, &psi)?[0];
    out.value("slope_r", slope);
    out.value("v_gp", v);
    out.flag("pass_eq6_slope", rel(slope, v) <= 1e-3);
    let beta = b.real();
    let drift = beta.iter().map(|y| (y - beta[0]).abs()).fold(0.0, f64::max);
    out.value("beta_drift", drift);
    out.flag("pass_eq5_beta_constant", drift <= 1e-6);
    out.file("series_r_x.csv", csv_series(r)?);
    out.file("series_beta.csv", csv_series(b)?);

    // dense oracle: exp(−iHt/ħ) by eigendecomposition
    let dpsi = make_packet(&dm, &dlat, &dspec)?.to_position();
    let h = dense::hamiltonian(&dm.rep, &dlat, &dm.params)?;
    let mut worst: f64 = 0.0;
    for t in [0.7, 3.1, dm.params.tau0()] {
        let u = dense::expm_hermitian(&h, t / dm.params.hbar);
        let want = dense::apply(&u, &dpsi);
        let got = evolve(&dm, &dpsi, t)?.to_position();
        worst = worst.max(got.max_abs_diff(&want)?);
    }
    out.value("dense_oracle_max_abs", worst);
    out.flag("pass_dense_oracle", worst <= 1e-10);
    Ok(out)
}

fn zitter(cfg: &Config) -> Result<Outcome, Fail> {
    let lat = lattice(cfg, 1, 1024, 200.0)?;
    let m = model(cfg, lat.dim())?;
    let spec = single_packet(cfg, &PacketDefaults { k0: 0.0, sigma: 3.0, x0: 0.0, branch: "mixed" })?;
    let obs = Observable::parse(cfg.raw("observable").unwrap_or("alpha_x"))?;
    let ts = times(cfg, &m, 20.0, 512)?;
    check_packet(&lat, &spec)?;
    let psi = make_packet(&m, &lat, &spec)?;
    let e = expect_re(&m, &psi, Observable::ModeEnergy)?;
    let omega = 2.0 * e / m.params.hbar;
    check_zb_window(&ts, omega)?;
    let series = observable_series_multi(&m, &psi, &[obs], &ts)?.remove(0);
    let zb = zb_spectrum(&series)?;
    let mut out = Outcome::default();
    out.value("expected_omega", omega);
    out.value("spectrum", zb);
    let ok = zb.peak.is_some_and(|p| (p.omega - omega).abs() <= zb.bin_width);
    out.flag("pass_zb_frequency", ok);
    out.file(format!("series_{}.csv", obs.label()), csv_series(&series)?);
    out.json("zb.json", &json!({"expected_omega": omega, "spectrum": zb}));
    Ok(out)
}

fn timeseries(cfg: &Config) -> Result<Outcome, Fail> {
    let lat = lattice(cfg, 1, 1024, 240.0)?;
    let m = model(cfg, lat.dim())?;
    let d = PacketDefaults { k0: 0.0, sigma: 10.0, x0: -40.0, branch: "positive" };
    let ks = cfg.list_f64_or("k0", &[0.0, 0.1, 0.5, 2.0])?;
    let specs: Vec<PacketSpec> = ks.iter().map(|&k| packet_spec(cfg, &d, k)).collect::<Result<_, _>>()?;
    let ts = times(cfg, &m, 10.0, 101)?;
    for s in &specs {
        check_packet(&lat, s)?;
    }
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for spec in &specs {
        let psi = make_packet(&m, &lat, spec)?;
        let r = series_t(&m, &psi, &ts)?;
        let k = fmt_k(spec.k0[0]);
        let mut row = json!({"k0": spec.k0[0], "slope": r.slope, "intercept": r.intercept,
            "expected_slope": r.expected_slope});
        if spec.k0[0] == 0.0 {
            let g = gamma(&m, &psi)?;
            let target = m.params.tau0() / g;
            row["expected_intercept"] = json!(target);
            out.flag(format!("pass_eq3_intercept_k0_{k}"), rel(r.intercept, target) <= 1e-2);
        } else {
            out.flag(format!("pass_eq3_slope_k0_{k}"), rel(r.slope, r.expected_slope) <= 1e-2);
        }
        out.file(format!("series_T_k0_{k}.csv"), csv_series(&r.series)?);
        rows.push(row);
    }
    out.value("fits", &rows);
    out.json("timeseries.json", &rows);
    Ok(out)
}

fn commutator(cfg: &Config) -> Result<Outcome, Fail> {
    let m1 = model(cfg, 1)?;
    let m3 = model(cfg, 3)?;
    let n1 = cfg.list_usize_or("n_1d", &[64, 128, 256])?;
    let n3 = cfg.list_usize_or("n_3d", &[8, 16])?;
    let l1 = cfg.f64_or("length_1d", 320.0)?;
    let l3 = cfg.f64_or("length_3d", 12.0)?;
    let s1 = cfg.f64_or("sigma_1d", 1.0)?;
    let s3 = cfg.f64_or("sigma_3d", 1.0)?;
    let dense_max = cfg.usize_or("dense_max", 2048)?;
    let halving = cfg.bool_or("assert_halving", true)?;
    let lats1: Vec<Lattice> = n1.iter().map(|&n| Lattice::new(1, n, l1)).collect::<Result<_, _>>()?;
    let lats3: Vec<Lattice> = n3.iter().map(|&n| Lattice::new(3, n, l3)).collect::<Result<_, _>>()?;

    let mut out = Outcome::default();
    let mut csv = String::from("dim,n,residual,tail_bound,ratio\n");
    let mut within = true;
    let mut halves = true;
    let mut agree: f64 = 0.0;
    for (m, lats, sigma) in [(&m1, &lats1, s1), (&m3, &lats3, s3)] {
        let mut prev: Option<f64> = None;
        for lat in lats.iter() {
            let sd = m.rep.spinor_dim;
            let psi = gaussian_field(*lat, &upper_spinor(sd), [0.0; 3], sigma, [0.0; 3]);
            let free = commutator_th(m, &psi)?;
            let r = if lat.points() * sd <= dense_max {
                let d = commutator_th_dense(m, &psi)?;
                agree = agree.max((d.residual - free.residual).abs() / free.residual.max(1.0));
                d
            } else {
                free
            };
            within &= r.within_bound;
            let ratio = prev.map(|p| r.residual / p);
            if let Some(q) = ratio {
                halves &= (0.375..=0.625).contains(&q);
            }
            writeln!(
                csv,
                "{},{},{:.16e},{:.16e},{}",
                lat.dim(),
                lat.n(),
                r.residual,
                r.tail_bound,
                ratio.map_or(String::new(), |q| format!("{q:.16e}"))
            )
            .unwrap();
            prev = Some(r.residual);
        }
    }
    out.flag("pass_eq27_bound", within);
    out.value("dense_matrix_free_rel_diff", agree);
    out.flag("pass_dense_agreement", agree <= 1e-9);
    if halving {
        out.flag("pass_halving", halves);
    } else {
        out.info("halving", halves);
    }
    out.file("commutator.csv", csv.into_bytes());
    Ok(out)
}

#[derive(Serialize)]
struct PacketRow {
    sigma: f64,
    length: f64,
    spin: &'static str,
    branch: String,
    report: UncertaintyReport,
    robertson: f64,
    beta_k: Option<f64>,
    chain_flag: bool,
    pass_eq28: bool,
}

fn uncertainty(cfg: &Config) -> Result<Outcome, Fail> {
    let m = model(cfg, 3)?;
    let n = cfg.usize_or("n", 64)?;
    let count = cfg.usize_or("packets", 20)?;
    let seed = cfg.usize_or("seed", 7)? as u64;
    let (smin, smax) = (cfg.f64_or("sigma_min", 0.8)?, cfg.f64_or("sigma_max", 1.6)?);
    let (lmin, lmax) = (cfg.f64_or("l_over_sigma_min", 12.0)?, cfg.f64_or("l_over_sigma_max", 16.0)?);
    let tol = UncertaintyTolerance {
        abs: cfg.f64_or("tol_abs", UncertaintyTolerance::default().abs)?,
        rel: cfg.f64_or("tol_rel", UncertaintyTolerance::default().rel)?,
    };
    let info_branch = cfg.choice_or("informational_branch", &["none", "positive", "negative"], "positive")?;
    if count == 0 || !(0.0 < smin && smin <= smax) || !(0.0 < lmin && lmin <= lmax) || tol.abs < 0.0 || tol.rel < 0.0 {
        return Err(ConfigError(format!("{}: invalid packet ranges or tolerances", cfg.origin)).into());
    }

    // draw every packet first so preconditions are checked before any work
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::new();
    for _ in 0..count {
        let sigma = rng.gen_range(smin..=smax);
        let length = sigma * rng.gen_range(lmin..=lmax);
        let spin = if rng.gen_bool(0.5) { SpinLabel::Up } else { SpinLabel::Down };
        jobs.push((sigma, length, spin, Branch::Bare));
    }
    if info_branch != "none" {
        let b = if info_branch == "positive" { Branch::Positive } else { Branch::Negative };
        jobs.push((smin, smin * lmin, SpinLabel::Up, b));
    }
    let mut prepared = Vec::new();
    for &(sigma, length, spin, branch) in &jobs {
        let lat = Lattice::new(3, n, length)?;
        let spec = PacketSpec::new(0.0, sigma, branch).spin(spin);
        check_packet(&lat, &spec)?;
        prepared.push((lat, spec));
    }

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(prepared.len());
    let results: Vec<Result<PacketRow, Error>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let prepared = &prepared;
                let m = &m;
                s.spawn(move || {
                    prepared
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| i % workers == w)
                        .map(|(i, (lat, spec))| {
                            let psi = make_packet(m, lat, spec)?;
                            let u = uncertainty_th(m, &psi, tol)?;
                            Ok((
                                i,
                                PacketRow {
                                    sigma: spec.sigma,
                                    length: lat.length(),
                                    spin: if spec.spin == SpinLabel::Up { "up" } else { "down" },
                                    branch: spec.branch.to_string(),
                                    robertson: u.robertson,
                                    beta_k: u.beta_k,
                                    chain_flag: u.chain_flag,
                                    pass_eq28: u.pass_eq28,
                                    report: u,
                                },
                            ))
                        })
                        .collect::<Vec<Result<(usize, PacketRow), Error>>>()
                })
            })
            .collect();
        let mut all: Vec<(usize, Result<PacketRow, Error>)> = Vec::new();
        for h in handles {
            for r in h.join().expect("worker panicked") {
                match r {
                    Ok((i, row)) => all.push((i, Ok(row))),
                    Err(e) => all.push((usize::MAX, Err(e))),
                }
            }
        }
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, r)| r).collect()
    });
    let rows: Vec<PacketRow> = results.into_iter().collect::<Result<_, _>>()?;

    let mut out = Outcome::default();
    let (core, extra): (Vec<&PacketRow>, Vec<&PacketRow>) = rows.iter().partition(|r| r.branch == "bare");
    let all = |f: &dyn Fn(&PacketRow) -> bool| core.iter().all(|r| f(r));
    out.flag("pass_eq29", all(&|r| r.report.pass_eq29));
    out.flag("pass_eq30", all(&|r| r.report.pass_eq30));
    out.flag("pass_eq31", all(&|r| r.report.pass_eq31));
    out.flag("pass_eq28", all(&|r| r.pass_eq28));
    out.info("chain_intermediate_ok", core.iter().all(|r| !r.chain_flag));
    for r in &extra {
        out.info(format!("{}_pass_eq31", r.branch), r.report.pass_eq31);
        out.info(format!("{}_robertson_ok", r.branch), r.report.product() >= r.robertson * (1.0 - 1e-12));
    }
    let min_ratio = core.iter().map(|r| r.report.product() / r.report.bound_eq31).fold(f64::INFINITY, f64::min);
    out.value("min_product_over_bound_eq31", min_ratio);
    out.value("packets", core.len());
    out.json("uncertainty.json", &rows.iter().map(|r| &r.report).collect::<Vec<_>>());
    out.json("uncertainty_packets.json", &rows);
    Ok(out)
}

fn mt(cfg: &Config) -> Result<Outcome, Fail> {
    let expect = cfg.choice_or("expect", &["nr", "ur"], "nr")?;
    let (dn, dl, dk, ds, dx) = if expect == "nr" {
        (2048, 600.0, 0.1, 40.0, -50.0)
    } else {
        (4096, 200.0, 20.0, 4.0, -60.0)
    };
    let lat = lattice(cfg, 1, dn, dl)?;
    let m = model(cfg, lat.dim())?;
    let spec = single_packet(cfg, &PacketDefaults { k0: dk, sigma: ds, x0: dx, branch: "positive" })?;
    let ts = times(cfg, &m, 10.0, 101)?;
    let tol = UncertaintyTolerance {
        abs: cfg.f64_or("tol_abs", UncertaintyTolerance::default().abs)?,
        rel: cfg.f64_or("tol_rel", UncertaintyTolerance::default().rel)?,
    };
    let ratio_tol = cfg.f64_or("ratio_tol", 0.05)?;
    check_packet(&lat, &spec)?;
    let psi = make_packet(&m, &lat, &spec)?;
    let r = mt_report(&m, &psi, &ts, tol)?;
    let mut out = Outcome::default();
    out.flag("pass_eq36", r.uncertainty.pass_eq36 == Some(true));
    if expect == "nr" {
        out.flag("pass_eq39", rel(r.ratio, r.nr_target) <= ratio_tol);
    } else {
        out.flag("pass_eq41", rel(r.ratio, 1.0) <= ratio_tol);
    }
    out.value("ratio", r.ratio);
    out.value("nr_target", r.nr_target);
    out.value("v_gp", r.v_gp);
    out.json("mt.json", &r);
    out.json("uncertainty.json", &r.uncertainty);
    Ok(out)
}

/// `ε_total`, where the literal `H` means `⟨H⟩` of the packet.
fn eps_value(cfg: &Config, key: &str, default: f64, h_mean: impl FnOnce() -> Result<f64, Fail>) -> Result<f64, Fail> {
    match cfg.raw(key) {
        Some("H") => h_mean(),
        _ => Ok(cfg.f64_or(key, default)?),
    }
}

fn boost_csv(run: &BoostRun) -> Result<Vec<u8>, Fail> {
    let mut v = Vec::new();
    run.write_csv(&mut v)?;
    Ok(v)
}

fn boost(cfg: &Config) -> Result<Outcome, Fail> {
    let lat = lattice(cfg, 1, 8192, 1400.0)?;
    let m = model(cfg, lat.dim())?;
    let spec = single_packet(cfg, &PacketDefaults { k0: 0.3, sigma: 100.0, x0: 0.0, branch: "positive" })?;
    let n_steps = cfg.usize_or("n_steps", 100)?;
    let eps_small = cfg.f64_or("eps_small", 1e-4)?;
    let n_small = cfg.usize_or("n_small", 100)?;
    let fd = cfg.f64_or("fd_step", 1e-5)?;
    let opposite = match spec.branch {
        Branch::Positive => Branch::Negative,
        Branch::Negative => Branch::Positive,
        b => {
            return Err(Error::Precondition {
                name: "branch_pure",
                detail: format!("boost needs a branch-pure packet, got {b}"),
            }
            .into())
        }
    };
    let mirror = PacketSpec { branch: opposite, ..spec };
    check_packet(&lat, &spec)?;
    let psi = make_packet(&m, &lat, &spec)?;
    let eps_total = eps_value(cfg, "eps_total", 1.0, || Ok(expect_re(&m, &psi, Observable::Energy)?))?;

    let mut out = Outcome::default();
    let resp = momentum_response(&m, &psi, fd)?;
    out.value("momentum_response", resp);
    out.flag("pass_eq18", resp.rel_err <= 5e-3);

    let mut phases = Vec::new();
    let mut phase_ok = true;
    let mut signs = Vec::new();
    for s in [&spec, &mirror] {
        let f = make_packet(&m, &lat, s)?;
        let run = boost_run(&m, &f, eps_small, n_small)?;
        let rep = phase_shift_check(&m, &run);
        phase_ok &= rel(rep.per_unit_eps, rep.expected_per_unit_eps) <= 1e-2 && rep.sign_ok;
        signs.push(rep.per_unit_eps.signum());
        phases.push(json!({"branch": rep.branch, "per_unit_eps": rep.per_unit_eps,
            "expected_per_unit_eps": rep.expected_per_unit_eps, "total": rep.total,
            "expected_total": rep.expected_total}));
    }
    out.flag("pass_eq22", phase_ok && signs[0] != signs[1]);
    out.value("phase", &phases);

    let run = boost_run(&m, &psi, eps_total, n_steps)?;
    let drift = run.records.iter().map(|r| (r.norm - 1.0).abs()).fold(0.0, f64::max);
    out.flag("pass_unitarity", drift <= 1e-12);
    let curve = momentum_shift_curve(&m, &run);
    let last = curve.last().copied();
    out.value("eps_total", eps_total);
    out.value("eq19_final", last);
    out.flag("pass_eq19", last.is_some_and(|p| p.dev_pre <= 0.10));
    out.info("eq19_instantaneous_within_10pct", last.is_some_and(|p| p.dev_inst <= 0.10));

    let mut csv = String::from("eps,dp,target_pre,target_inst,dev_pre,dev_inst,leakage\n");
    for p in &curve {
        writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.eps, p.dp, p.target_pre, p.target_inst, p.dev_pre, p.dev_inst, p.leakage
        )
        .unwrap();
    }
    out.file("boost.csv", boost_csv(&run)?);
    out.file("boost_shift.csv", csv.into_bytes());
    out.json("boost.json", &json!({"momentum_response": resp, "phase": phases, "eq19": curve}));
    Ok(out)
}

fn debroglie(cfg: &Config) -> Result<Outcome, Fail> {
    let lat = lattice(cfg, 1, 2048, 400.0)?;
    let m = model(cfg, lat.dim())?;
    let spec = single_packet(cfg, &PacketDefaults { k0: 0.5, sigma: 20.0, x0: 0.0, branch: "positive" })?;
    let eps = cfg.f64_or("eps_total", 1e-4)?;
    let n_steps = cfg.usize_or("n_steps", 10)?;
    check_packet(&lat, &spec)?;
    let psi = make_packet(&m, &lat, &spec)?;
    let mut out = Outcome::default();
    let r = de_broglie_check(&m, &psi)?;
    let oracle = m.params.planck() / (m.params.hbar * spec.k0[0].abs());
    out.flag("pass_lambda_oracle", rel(r.lambda, oracle) <= 1e-2);
    out.flag("pass_eq24", r.rel_err_lambda <= 1e-2);
    out.flag("pass_velocity_product", r.rel_err_velocity <= 1e-2);
    let run = boost_run(&m, &psi, eps, n_steps)?;
    let rb = de_broglie_check(&m, &run.final_field)?;
    out.flag("pass_eq24_boosted", rb.rel_err_lambda <= 1e-2 && rb.rel_err_velocity <= 1e-2);
    out.value("lambda_oracle", oracle);
    out.value("initial", r);
    out.value("boosted", rb);
    out.json("debroglie.json", &json!({"lambda_oracle": oracle, "initial": r, "boosted": rb}));
    Ok(out)
}

fn pauli_csv(run: &BoostRun, leakage: &[f64]) -> Vec<u8> {
    let mut csv = String::from("step,eps,leakage,pop_plus,pop_minus,min_positive_energy\n");
    for (r, l) in run.records.iter().zip(leakage) {
        writeln!(
            csv,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.step,
            r.eps_accum,
            l,
            r.pop_plus,
            r.pop_minus,
            r.min_positive_energy.map_or(String::new(), |e| format!("{e:.16e}"))
        )
        .unwrap();
    }
    csv.into_bytes()
}

fn pauli(cfg: &Config) -> Result<Outcome, Fail> {
    let lat = lattice(cfg, 1, 1024, 120.0)?;
    let m = model(cfg, lat.dim())?;
    let spec = single_packet(cfg, &PacketDefaults { k0: 0.3, sigma: 3.0, x0: 0.0, branch: "positive" })?;
    let eps = cfg.f64_or("eps_total", 1e-4)?;
    let n_steps = cfg.usize_or("n_steps", 100)?;
    let eps_large = cfg.f64_or("eps_large", 0.5)?;
    let n_large = cfg.usize_or("n_large", 50)?;
    let grid_tol = cfg.f64_or("grid_tol", 1e-12)?;
    check_packet(&lat, &spec)?;
    let psi = make_packet(&m, &lat, &spec)?;
    let mut out = Outcome::default();

    let small = boost_run(&m, &psi, eps, n_steps)?;
    let ps = pauli_diagnostic(&m, &small, grid_tol);
    out.flag("pass_leakage", ps.leakage_max <= 1e-6);
    out.flag("pass_support", ps.within_branch);
    out.flag("pass_leakage_monotone", ps.leakage_monotone);
    out.value("small_leakage_max", ps.leakage_max);

    let large = boost_run(&m, &psi, eps_large, n_large)?;
    let pl = pauli_diagnostic(&m, &large, grid_tol);
    out.flag("pass_support_large", pl.within_branch);
    out.info("large_leakage_monotone", pl.leakage_monotone);
    out.value("large_leakage_final", pl.leakage_final);

    let trivial = pauli_diagnostic(&m, &boost_run(&m, &psi, 0.0, 0)?, grid_tol);
    out.flag("pass_trivial", trivial.leakage_final == 0.0);

    out.file("pauli_small.csv", pauli_csv(&small, &ps.leakage));
    out.file("pauli_large.csv", pauli_csv(&large, &pl.leakage));
    out.json("pauli.json", &json!({"small": ps, "large": pl}));
    Ok(out)
}

fn hamstep(cfg: &Config) -> Result<Outcome, Fail> {
    let lat = lattice(cfg, 1, 4096, 400.0)?;
    let m = model(cfg, lat.dim())?;
    let d = PacketDefaults { k0: 0.0, sigma: 10.0, x0: 0.0, branch: "positive" };
    let ks = cfg.list_f64_or("k0", &[0.0, 0.5])?;
    let specs: Vec<PacketSpec> = ks.iter().map(|&k| packet_spec(cfg, &d, k)).collect::<Result<_, _>>()?;
    let substeps = cfg.usize_or("substeps", 2000)?;
    for s in &specs {
        check_packet(&lat, s)?;
    }
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for spec in &specs {
        let psi = make_packet(&m, &lat, spec)?;
        let g = gamma(&m, &psi)?;
        let r = hamiltonian_step_check(&m, &psi, g * m.params.tau0(), substeps)?;
        let k = fmt_k(spec.k0[0]);
        out.flag(format!("pass_eq26_k0_{k}"), rel(r.phase_comoving.abs(), 2.0 * PI) <= 2e-2);
        out.flag(format!("pass_shift_k0_{k}"), r.shift_rel_err <= 5e-3);
        rows.push(json!({"k0": spec.k0[0], "report": r}));
    }
    out.value("reports", &rows);
    out.json("hamstep.json", &rows);
    Ok(out)
}
