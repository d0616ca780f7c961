//! Free Dirac evolution by exact per-mode diagonalization, wave-packet
//! construction with branch projection, observables and Zitterbewegung
//! extraction.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::algebra::{build_rep, DiracRep};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Space, SpinorField};
use crate::params::PhysParams;
use crate::spinmat::SpinMatrix;

/// Representation plus physical constants; everything the evolution needs
/// besides the field itself.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub rep: DiracRep,
    pub params: PhysParams,
}

impl Model {
    pub fn new(spatial_dim: usize, params: PhysParams) -> Result<Self> {
        Ok(Self {
            rep: build_rep(spatial_dim)?,
            params,
        })
    }

    pub fn natural(spatial_dim: usize) -> Result<Self> {
        Self::new(spatial_dim, PhysParams::default())
    }

    pub(crate) fn check_field(&self, field: &SpinorField) -> Result<()> {
        if field.lattice().dim() != self.rep.spatial_dim || field.spinor_dim() != self.rep.spinor_dim {
            return Err(Error::Mismatch);
        }
        Ok(())
    }

    /// Momentum `ħk` of a wavevector.
    #[inline]
    pub fn momentum(&self, k: [f64; 3]) -> [f64; 3] {
        k.map(|v| self.params.hbar * v)
    }
}

/// `H(p) = cα·p + βm₀c²` for momentum `p`.
pub fn hamiltonian_mode(rep: &DiracRep, p: [f64; 3], params: &PhysParams) -> SpinMatrix {
    rep.alpha_dot(p.map(|v| params.c * v)) + rep.beta.scale_re(params.rest_energy())
}

#[derive(Clone, Copy, Debug)]
pub struct ModeEigensystem {
    pub p: [f64; 3],
    /// `E(p) > 0`; the eigenvalues of `h` are `±energy`.
    pub energy: f64,
    pub h: SpinMatrix,
    pub plus: SpinMatrix,
    pub minus: SpinMatrix,
}

impl ModeEigensystem {
    pub fn new(rep: &DiracRep, p: [f64; 3], params: &PhysParams) -> Self {
        let h = hamiltonian_mode(rep, p, params);
        let energy = params.energy(p.iter().map(|v| v * v).sum());
        let id = SpinMatrix::identity(rep.spinor_dim);
        let hn = h.scale_re(0.5 / energy);
        Self {
            p,
            energy,
            h,
            plus: id.scale_re(0.5) + hn,
            minus: id.scale_re(0.5) - hn,
        }
    }

    /// `exp(−iH t/ħ) = cos(Et/ħ) I − i sin(Et/ħ) H/E`.
    pub fn propagator(&self, t: f64, hbar: f64) -> SpinMatrix {
        let (s, c) = (self.energy * t / hbar).sin_cos();
        let d = self.h.dim();
        SpinMatrix::identity(d).scale_re(c) + self.h.scale(C64::new(0.0, -s / self.energy))
    }

    pub fn projector(&self, sign: BranchSign) -> &SpinMatrix {
        match sign {
            BranchSign::Plus => &self.plus,
            BranchSign::Minus => &self.minus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchSign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Positive,
    Negative,
    /// `√w·u₊ + √(1−w)·u₋` per mode, `w` the positive-branch weight.
    Mixed { weight_plus: f64 },
    /// Unprojected upper-block spinor, a β = +1 eigenstate at every site.
    Bare,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Positive => write!(f, "positive"),
            Branch::Negative => write!(f, "negative"),
            Branch::Mixed { weight_plus } => write!(f, "mixed({weight_plus})"),
            Branch::Bare => write!(f, "bare"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinLabel {
    Up,
    Down,
}

/// Gaussian packet description. `sigma` is the position-space width
/// (`|ψ|² ∝ exp(−(x−x₀)²/2σ²)`), so the wavenumber width is `1/(2σ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub k0: [f64; 3],
    pub x0: [f64; 3],
    pub sigma: f64,
    pub branch: Branch,
    pub spin: SpinLabel,
    /// Required distance from the box edge in units of `sigma`.
    pub clearance: f64,
}

impl PacketSpec {
    pub fn new(k0: f64, sigma: f64, branch: Branch) -> Self {
        Self {
            k0: [k0, 0.0, 0.0],
            x0: [0.0; 3],
            sigma,
            branch,
            spin: SpinLabel::Up,
            clearance: 6.0,
        }
    }

    pub fn at(mut self, x0: f64) -> Self {
        self.x0[0] = x0;
        self
    }

    pub fn spin(mut self, spin: SpinLabel) -> Self {
        self.spin = spin;
        self
    }

    pub fn clearance(mut self, factor: f64) -> Self {
        self.clearance = factor;
        self
    }
}

/// Checks the grid-resolution, edge-clearance and band preconditions.
pub fn check_packet(lattice: &Lattice, spec: &PacketSpec) -> Result<()> {
    let dx = lattice.spacing();
    if !(spec.sigma.is_finite() && spec.sigma >= 4.0 * dx) {
        return Err(Error::precondition(
            "sigma_resolution",
            format!("sigma = {} must be ≥ 4Δx = {}", spec.sigma, 4.0 * dx),
        ));
    }
    let half = 0.5 * lattice.length();
    for a in 0..lattice.dim() {
        let reach = spec.x0[a].abs() + spec.clearance * spec.sigma;
        if !(reach <= half) {
            return Err(Error::precondition(
                "edge_clearance",
                format!(
                    "axis {a}: |x0| + {}σ = {reach} exceeds L/2 = {half}",
                    spec.clearance
                ),
            ));
        }
        if !(spec.k0[a].abs() < 0.5 * lattice.nyquist_wavenumber()) {
            return Err(Error::precondition(
                "k0_band",
                format!(
                    "axis {a}: |k0| = {} must be < k_Nyquist/2 = {}",
                    spec.k0[a].abs(),
                    0.5 * lattice.nyquist_wavenumber()
                ),
            ));
        }
    }
    Ok(())
}

/// Upper-block (`upper = true`) or lower-block base spinor for a spin label.
fn base_spinor(spinor_dim: usize, spin: SpinLabel, upper: bool) -> [C64; 4] {
    let mut v = [C64::new(0.0, 0.0); 4];
    let idx = match (spinor_dim, spin, upper) {
        (2, _, true) => 0,
        (2, _, false) => 1,
        (_, SpinLabel::Up, true) => 0,
        (_, SpinLabel::Down, true) => 1,
        (_, SpinLabel::Up, false) => 2,
        (_, SpinLabel::Down, false) => 3,
    };
    v[idx] = C64::new(1.0, 0.0);
    v
}

/// `Λ χ / ‖Λ χ‖`, or zero when the projection vanishes.
fn projected(lambda: &SpinMatrix, chi: &[C64; 4], sd: usize) -> [C64; 4] {
    let mut out = [C64::new(0.0, 0.0); 4];
    lambda.apply_into(&chi[..sd], &mut out[..sd]);
    let n: f64 = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if n > 1e-300 {
        out.iter_mut().for_each(|a| *a /= n);
    }
    out
}

/// Builds a normalized Gaussian packet, returned in momentum space.
///
/// Each mode carries a unit spinor from the requested branch, so the momentum
/// density is exactly Gaussian and the branch populations are exactly the
/// requested weights.
pub fn make_packet(model: &Model, lattice: &Lattice, spec: &PacketSpec) -> Result<SpinorField> {
    if lattice.dim() != model.rep.spatial_dim {
        return Err(Error::Mismatch);
    }
    if let Branch::Mixed { weight_plus } = spec.branch {
        if !(0.0..=1.0).contains(&weight_plus) {
            return Err(Error::parameter("weight_plus", format!("must lie in [0, 1], got {weight_plus}")));
        }
    }
    check_packet(lattice, spec)?;
    let sd = model.rep.spinor_dim;
    let s2 = spec.sigma * spec.sigma;
    let dim = lattice.dim();
    let amps: Vec<C64> = (0..lattice.points())
        .flat_map(|idx| {
            let k = lattice.wavevector(idx);
            let mut arg = 0.0;
            let mut phase = 0.0;
            for a in 0..dim {
                arg += (k[a] - spec.k0[a]).powi(2) * s2;
                phase -= k[a] * spec.x0[a];
            }
            let env = C64::from_polar((-arg).exp(), phase);
            let mode = ModeEigensystem::new(&model.rep, model.momentum(k), &model.params);
            let spinor = branch_spinor(&mode, spec.branch, spec.spin, sd);
            (0..sd).map(move |s| env * spinor[s])
        })
        .collect();
    Ok(SpinorField::from_amplitudes(*lattice, sd, Space::Momentum, amps)?.normalized())
}

/// Spinor of one mode for the requested branch.
fn branch_spinor(mode: &ModeEigensystem, branch: Branch, spin: SpinLabel, sd: usize) -> [C64; 4] {
    let up = base_spinor(sd, spin, true);
    let low = base_spinor(sd, spin, false);
    match branch {
        Branch::Bare => up,
        Branch::Positive => projected(&mode.plus, &up, sd),
        Branch::Negative => projected(&mode.minus, &low, sd),
        Branch::Mixed { weight_plus } => {
            let a = projected(&mode.plus, &up, sd);
            let b = projected(&mode.minus, &low, sd);
            let (wa, wb) = (weight_plus.sqrt(), (1.0 - weight_plus).sqrt());
            let mut s = [C64::new(0.0, 0.0); 4];
            for i in 0..sd {
                s[i] = a[i] * wa + b[i] * wb;
            }
            s
        }
    }
}

/// A single lattice mode with integer frequencies `m` (wavenumber
/// `2πm/L` per axis), in momentum space.
pub fn plane_wave(
    model: &Model,
    lattice: &Lattice,
    m: [i64; 3],
    branch: Branch,
    spin: SpinLabel,
) -> Result<SpinorField> {
    if lattice.dim() != model.rep.spatial_dim {
        return Err(Error::Mismatch);
    }
    let n = lattice.n() as i64;
    let mut ijk = [0usize; 3];
    for a in 0..lattice.dim() {
        if m[a] < -n / 2 || m[a] >= n / 2 {
            return Err(Error::parameter("mode", format!("frequency {} outside the grid", m[a])));
        }
        ijk[a] = m[a].rem_euclid(n) as usize;
    }
    let idx = lattice.flatten(ijk);
    let sd = model.rep.spinor_dim;
    let mode = ModeEigensystem::new(&model.rep, model.momentum(lattice.wavevector(idx)), &model.params);
    let spinor = branch_spinor(&mode, branch, spin, sd);
    let mut field = SpinorField::zeros(*lattice, sd, Space::Momentum);
    field.spinor_mut(idx).copy_from_slice(&spinor[..sd]);
    Ok(field.normalized())
}

/// Applies a per-mode spinor matrix built by `f(mode)` in momentum space.
fn map_modes(model: &Model, field: &SpinorField, mut f: impl FnMut(&ModeEigensystem) -> SpinMatrix) -> SpinorField {
    let mom = field.to_momentum();
    let lat = *mom.lattice();
    mom.map_spinors(|idx, src, dst| {
        let mode = ModeEigensystem::new(&model.rep, model.momentum(lat.wavevector(idx)), &model.params);
        f(&mode).apply_into(src, dst);
    })
}

/// `ψ(t) = exp(−iH_D t/ħ) ψ`, exact per mode. Returns a momentum-space field.
pub fn evolve(model: &Model, field: &SpinorField, t: f64) -> Result<SpinorField> {
    model.check_field(field)?;
    if t == 0.0 {
        return Ok(field.to_momentum());
    }
    let hbar = model.params.hbar;
    Ok(map_modes(model, field, |m| m.propagator(t, hbar)))
}

/// `Λ_sign ψ`, in momentum space.
pub fn project_branch(model: &Model, field: &SpinorField, sign: BranchSign) -> Result<SpinorField> {
    model.check_field(field)?;
    Ok(map_modes(model, field, |m| *m.projector(sign)))
}

/// `H_D ψ` in momentum space.
pub fn apply_hamiltonian(model: &Model, field: &SpinorField) -> Result<SpinorField> {
    model.check_field(field)?;
    Ok(map_modes(model, field, |m| m.h))
}

/// Norms² of the positive- and negative-branch components.
pub fn branch_populations(model: &Model, field: &SpinorField) -> Result<(f64, f64)> {
    model.check_field(field)?;
    let mom = field.to_momentum();
    let lat = *mom.lattice();
    let sd = mom.spinor_dim();
    let mut pp = 0.0;
    let mut pm = 0.0;
    let mut buf = [C64::new(0.0, 0.0); 4];
    for idx in 0..lat.points() {
        let mode = ModeEigensystem::new(&model.rep, model.momentum(lat.wavevector(idx)), &model.params);
        let v = mom.spinor(idx);
        mode.plus.apply_into(v, &mut buf[..sd]);
        pp += buf[..sd].iter().map(|a| a.norm_sqr()).sum::<f64>();
        mode.minus.apply_into(v, &mut buf[..sd]);
        pm += buf[..sd].iter().map(|a| a.norm_sqr()).sum::<f64>();
    }
    Ok((pp, pm))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    Position(usize),
    Alpha(usize),
    Beta,
    Momentum(usize),
    Energy,
    /// `⟨|H_D|⟩`, the mean mode energy `Σ E(k)|φ(k)|²`.
    ModeEnergy,
    Time,
}

impl Observable {
    pub fn label(&self) -> String {
        const AX: [&str; 3] = ["x", "y", "z"];
        match self {
            Observable::Position(a) => format!("r_{}", AX[*a]),
            Observable::Alpha(a) => format!("alpha_{}", AX[*a]),
            Observable::Beta => "beta".into(),
            Observable::Momentum(a) => format!("p_{}", AX[*a]),
            Observable::Energy => "H".into(),
            Observable::ModeEnergy => "absH".into(),
            Observable::Time => "T".into(),
        }
    }

    /// Parses `r`, `alpha`, `beta`, `p`, `H`, `absH`, `T`, with an optional
    /// axis suffix (`r_y`, `alpha_z`, ...).
    pub fn parse(s: &str) -> Result<Self> {
        let (head, axis) = match s.split_once('_') {
            Some((h, a)) => {
                let axis = match a {
                    "x" => 0,
                    "y" => 1,
                    "z" => 2,
                    _ => return Err(Error::UnknownObservable(s.into())),
                };
                (h, axis)
            }
            None => (s, 0),
        };
        let axis_ok = |o: Observable| if s.contains('_') && matches!(o, Observable::Beta | Observable::Energy | Observable::ModeEnergy | Observable::Time) { Err(Error::UnknownObservable(s.into())) } else { Ok(o) };
        match head {
            "r" | "x" => axis_ok(Observable::Position(axis)),
            "alpha" => axis_ok(Observable::Alpha(axis)),
            "p" => axis_ok(Observable::Momentum(axis)),
            "beta" => axis_ok(Observable::Beta),
            "H" => axis_ok(Observable::Energy),
            "absH" => axis_ok(Observable::ModeEnergy),
            "T" => axis_ok(Observable::Time),
            _ => Err(Error::UnknownObservable(s.into())),
        }
    }
}

/// `⟨ψ|O|ψ⟩` (not divided by the norm). Position, α, β and T are evaluated
/// in position space; p and H mode-wise in momentum space.
pub fn expectation(model: &Model, field: &SpinorField, obs: Observable) -> Result<C64> {
    model.check_field(field)?;
    let dim = field.lattice().dim();
    let axis_ok = |a: usize| if a < dim { Ok(()) } else { Err(Error::UnknownObservable(obs.label())) };
    let rep = &model.rep;
    let p = &model.params;
    match obs {
        Observable::Position(a) => {
            axis_ok(a)?;
            let pos = field.to_position();
            let lat = *pos.lattice();
            let d = pos.density();
            Ok(C64::new(d.iter().enumerate().map(|(i, w)| lat.position(i)[a] * w).sum(), 0.0))
        }
        Observable::Alpha(a) => {
            axis_ok(a)?;
            Ok(site_sum(&field.to_position(), |_| rep.alphas[a]))
        }
        Observable::Beta => Ok(site_sum(&field.to_position(), |_| rep.beta)),
        Observable::Time => {
            let pos = field.to_position();
            let lat = *pos.lattice();
            let tau0 = p.tau0();
            let c = p.c;
            Ok(site_sum(&pos, |i| {
                rep.alpha_dot(lat.position(i).map(|x| x / c)) + rep.beta.scale_re(tau0)
            }))
        }
        Observable::Momentum(a) => {
            axis_ok(a)?;
            let mom = field.to_momentum();
            let lat = *mom.lattice();
            let d = mom.density();
            Ok(C64::new(
                d.iter().enumerate().map(|(i, w)| p.hbar * lat.wavevector(i)[a] * w).sum(),
                0.0,
            ))
        }
        Observable::Energy => {
            let mom = field.to_momentum();
            let lat = *mom.lattice();
            Ok(site_sum(&mom, |i| hamiltonian_mode(rep, model.momentum(lat.wavevector(i)), p)))
        }
        Observable::ModeEnergy => Ok(C64::new(mode_average(model, field, |m| m.energy), 0.0)),
    }
}

/// Real part of [`expectation`].
pub fn expect_re(model: &Model, field: &SpinorField, obs: Observable) -> Result<f64> {
    Ok(expectation(model, field, obs)?.re)
}

/// `Σ_i ψ_i† M(i) ψ_i` in a fixed site order.
pub(crate) fn site_sum(field: &SpinorField, mut m: impl FnMut(usize) -> SpinMatrix) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for idx in 0..field.lattice().points() {
        let v = field.spinor(idx);
        acc += m(idx).sandwich(v, v);
    }
    acc
}

/// `Σ_k f(k)|φ(k)|²` for a scalar function of the mode.
pub fn mode_average(model: &Model, field: &SpinorField, mut f: impl FnMut(&ModeEigensystem) -> f64) -> f64 {
    let mom = field.to_momentum();
    let lat = *mom.lattice();
    let dens = mom.density();
    let mut acc = 0.0;
    for (idx, w) in dens.iter().enumerate() {
        let mode = ModeEigensystem::new(&model.rep, model.momentum(lat.wavevector(idx)), &model.params);
        acc += f(&mode) * w;
    }
    acc
}

/// Mode-wise `⟨c²p H⁻¹⟩`, using `H⁻¹ = H/E²` per mode.
pub fn group_velocity(model: &Model, field: &SpinorField) -> Result<[f64; 3]> {
    model.check_field(field)?;
    field.check_normalized()?;
    let mom = field.to_momentum();
    let lat = *mom.lattice();
    let c2 = model.params.c * model.params.c;
    let mut v = [0.0; 3];
    for idx in 0..lat.points() {
        let mode = ModeEigensystem::new(&model.rep, model.momentum(lat.wavevector(idx)), &model.params);
        let s = mom.spinor(idx);
        let hinv = mode.h.scale_re(1.0 / (mode.energy * mode.energy));
        let e = hinv.sandwich(s, s).re;
        for a in 0..lat.dim() {
            v[a] += c2 * mode.p[a] * e;
        }
    }
    Ok(v)
}

/// `γ = |⟨H⟩|/m₀c²`; fails for packets with `⟨H⟩ ≈ 0`.
pub fn gamma(model: &Model, field: &SpinorField) -> Result<f64> {
    field.check_normalized()?;
    let h = expect_re(model, field, Observable::Energy)?;
    let mc2 = model.params.rest_energy();
    if h.abs() < 1e-6 * mc2 {
        return Err(Error::BalancedPacket(h));
    }
    Ok(h.abs() / mc2)
}

/// `⟨(cp/H)²⟩ = Σ_k (c|p|/E)² |φ(k)|²`.
pub fn velocity_sq(model: &Model, field: &SpinorField) -> f64 {
    let c = model.params.c;
    mode_average(model, field, |m| {
        let p2: f64 = m.p.iter().map(|v| v * v).sum();
        c * c * p2 / (m.energy * m.energy)
    })
}

/// `⟨½{cα·cp H⁻¹}_sym⟩ − ⟨(cp/H)²⟩` at `t = 0`: how far `cα·(cp/H)` is from
/// `(cp/H)²` in expectation before its oscillating part averages out.
pub fn velocity_projection_remainder(model: &Model, field: &SpinorField) -> Result<f64> {
    model.check_field(field)?;
    let mom = field.to_momentum();
    let lat = *mom.lattice();
    let c = model.params.c;
    let mut acc = 0.0;
    for idx in 0..lat.points() {
        let mode = ModeEigensystem::new(&model.rep, model.momentum(lat.wavevector(idx)), &model.params);
        let s = mom.spinor(idx);
        let e2 = mode.energy * mode.energy;
        let a = model.rep.alpha_dot(mode.p.map(|v| v * c * c)) * mode.h.scale_re(1.0 / e2);
        let sym = (a + a.adjoint()).scale_re(0.5);
        let p2: f64 = mode.p.iter().map(|v| v * v).sum();
        let w: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        acc += sym.sandwich(s, s).re - c * c * p2 / e2 * w;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    /// `key: value` pairs written as `#` comments ahead of the CSV header.
    pub meta: Vec<(String, String)>,
}

impl ObservableSeries {
    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# observable: {}", self.label)?;
        for (k, v) in &self.meta {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "t,re,im")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t:.16e},{:.16e},{:.16e}", v.re, v.im)?;
        }
        Ok(())
    }
}

pub fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::parameter("times", "empty time grid"));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::parameter("times", "times must be finite and strictly increasing"));
    }
    Ok(())
}

/// `n` uniform samples `t_j = j·t_end/(n−1)`.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    let d = t_end / (n.max(2) - 1) as f64;
    (0..n).map(|j| j as f64 * d).collect()
}

/// Several observables along one evolution; one series per observable.
pub fn observable_series_multi(
    model: &Model,
    field0: &SpinorField,
    observables: &[Observable],
    times: &[f64],
) -> Result<Vec<ObservableSeries>> {
    model.check_field(field0)?;
    check_times(times)?;
    for &o in observables {
        // axis validation up front so a bad label fails before any evolution
        expectation(model, field0, o)?;
    }
    let mom0 = field0.to_momentum();
    let mut values = vec![Vec::with_capacity(times.len()); observables.len()];
    for &t in times {
        let psi = evolve(model, &mom0, t)?;
        let pos = psi.to_position();
        for (o, out) in observables.iter().zip(values.iter_mut()) {
            let f = match o {
                Observable::Momentum(_) | Observable::Energy | Observable::ModeEnergy => &psi,
                _ => &pos,
            };
            out.push(expectation(model, f, *o)?);
        }
    }
    Ok(observables
        .iter()
        .zip(values)
        .map(|(o, values)| ObservableSeries {
            label: o.label(),
            times: times.to_vec(),
            values,
            meta: Vec::new(),
        })
        .collect())
}

pub fn observable_series(
    model: &Model,
    field0: &SpinorField,
    obs: Observable,
    times: &[f64],
) -> Result<ObservableSeries> {
    Ok(observable_series_multi(model, field0, &[obs], times)?.remove(0))
}

/// Ordinary least-squares line `y ≈ a + b t`; returns `(a, b)`.
pub fn fit_line(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for (ti, yi) in t.iter().zip(y) {
        stt += (ti - tm) * (ti - tm);
        sty += (ti - tm) * (yi - ym);
    }
    let b = if stt > 0.0 { sty / stt } else { 0.0 };
    (ym - b * tm, b)
}

/// Required number of samples for [`zb_spectrum`].
pub const ZB_MIN_SAMPLES: usize = 256;
/// Minimum number of oscillation periods a ZB window must hold.
pub const ZB_MIN_PERIODS: f64 = 10.0;
/// Peak-to-median ratio required for a detection.
pub const ZB_PEAK_FACTOR: f64 = 5.0;
/// Peak amplitude below this fraction of the signal scale is treated as round-off.
pub const ZB_AMPLITUDE_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ZbPeak {
    pub omega: f64,
    pub amplitude: f64,
    pub periods_in_window: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ZbSpectrum {
    pub peak: Option<ZbPeak>,
    /// Angular-frequency spacing of the DFT bins.
    pub bin_width: f64,
    pub noise_floor: f64,
    pub max_amplitude: f64,
}

/// Fails unless `times` spans at least [`ZB_MIN_PERIODS`] periods of `omega`.
pub fn check_zb_window(times: &[f64], omega: f64) -> Result<()> {
    let window = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    let periods = omega * window / (2.0 * PI);
    if !(periods >= ZB_MIN_PERIODS) {
        return Err(Error::precondition(
            "zb_window",
            format!("window holds {periods:.2} periods of ω = {omega:.4}, need ≥ {ZB_MIN_PERIODS}"),
        ));
    }
    Ok(())
}

/// Dominant oscillation of the real part of a uniformly sampled series:
/// least-squares detrend, Hann window, DFT, peak over the positive bins.
pub fn zb_spectrum(series: &ObservableSeries) -> Result<ZbSpectrum> {
    let t = &series.times;
    let m = t.len();
    if m < ZB_MIN_SAMPLES {
        return Err(Error::precondition("zb_samples", format!("{m} samples, need ≥ {ZB_MIN_SAMPLES}")));
    }
    check_times(t)?;
    let dt = (t[m - 1] - t[0]) / (m - 1) as f64;
    if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs()) {
        return Err(Error::precondition("zb_uniform", "samples are not uniformly spaced"));
    }
    let y = series.real();
    let (a, b) = fit_line(t, &y);
    let scale = y.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let mut buf: Vec<C64> = (0..m)
        .map(|j| {
            let w = 0.5 * (1.0 - (2.0 * PI * j as f64 / (m - 1) as f64).cos());
            C64::new((y[j] - a - b * t[j]) * w, 0.0)
        })
        .collect();
    let wsum: f64 = (0..m)
        .map(|j| 0.5 * (1.0 - (2.0 * PI * j as f64 / (m - 1) as f64).cos()))
        .sum();
    FftPlanner::<f64>::new().plan_fft_forward(m).process(&mut buf);
    // bins below ZB_MIN_PERIODS carry residual drift, not resolvable oscillation
    let first = ZB_MIN_PERIODS.ceil() as usize;
    if m / 2 <= first + 1 {
        return Err(Error::precondition("zb_samples", "no bins above the minimum period count"));
    }
    let amps: Vec<f64> = buf[first..m / 2].iter().map(|z| 2.0 * z.norm() / wsum).collect();
    let (imax, &amax) = amps
        .iter()
        .enumerate()
        .fold((0, &0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let mut sorted = amps.clone();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let median = sorted[sorted.len() / 2];
    let window = dt * m as f64;
    let bin_width = 2.0 * PI / window;
    let detected = amax >= ZB_PEAK_FACTOR * median && amax >= ZB_AMPLITUDE_FLOOR * scale;
    let peak = detected.then(|| {
        let omega = (imax + first) as f64 * bin_width;
        ZbPeak {
            omega,
            amplitude: amax,
            periods_in_window: omega * window / (2.0 * PI),
        }
    });
    Ok(ZbSpectrum {
        peak,
        bin_width,
        noise_floor: median,
        max_amplitude: amax,
    })
}
