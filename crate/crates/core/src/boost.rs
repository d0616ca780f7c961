//! The unitary `U_T(ε) = exp(−iεT/ħ)`: momentum displacement, branch phase,
//! de Broglie relations, the dual Hamiltonian step and gap-leakage diagnostics.
//!
//! Sign convention: with `U_T(ε) = exp(−iεT/ħ)` the momentum moves as
//! `d⟨p⟩/dε = (i/ħ)⟨[T, p]⟩ = −⟨α⟩/c`. The accumulated phase of a step is
//! `−arg⟨ψ_before|ψ_after⟩`, so a positive-branch packet gains `+δε⟨β⟩τ₀/ħ`.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::chronos::{build_time_operator, TimeOperator};
use crate::dynamics::{evolve, group_velocity, BranchSign, Model, ModeEigensystem};
use crate::error::{Error, Result};
use crate::lattice::{max_edge_mass, mean_position, Space, SpinorField, ALIASING_TOL};

/// Minority-branch weight below which a packet counts as branch-pure.
pub const PURE_BRANCH_TOL: f64 = 1e-6;
/// Mode weight below which a mode does not count as energy support.
pub const SUPPORT_TOL: f64 = 1e-14;

/// `exp(−iδε T/ħ)ψ`, exact per site. Returns a position-space field.
pub fn boost_step(op: &TimeOperator, field: &SpinorField, d_eps: f64, hbar: f64) -> Result<SpinorField> {
    if !d_eps.is_finite() {
        return Err(Error::parameter("d_eps", format!("must be finite, got {d_eps}")));
    }
    op.exp_apply(field, d_eps / hbar)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoostRecord {
    pub step: usize,
    pub eps_accum: f64,
    pub p_mean: [f64; 3],
    pub h_mean: f64,
    pub beta_mean: f64,
    pub pop_plus: f64,
    pub pop_minus: f64,
    /// `⟨Λ₊ψ|H|Λ₊ψ⟩` and `⟨Λ₋ψ|H|Λ₋ψ⟩`.
    pub h_plus: f64,
    pub h_minus: f64,
    /// `−arg⟨ψ_{n−1}|ψ_n⟩`; zero at step 0.
    pub phase_step: f64,
    /// Same overlap restricted to each branch, `None` where the branch is empty.
    pub phase_plus: Option<f64>,
    pub phase_minus: Option<f64>,
    /// Smallest `E(k)` among modes carrying positive-branch weight.
    pub min_positive_energy: Option<f64>,
    /// Largest `−E(k)` among modes carrying negative-branch weight.
    pub max_negative_energy: Option<f64>,
    /// Instantaneous `⟨c²p H⁻¹⟩`.
    pub v_gp: [f64; 3],
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct BoostRun {
    pub eps_total: f64,
    pub n_steps: usize,
    pub d_eps: f64,
    /// `n_steps + 1` records, the first one for the input state.
    pub records: Vec<BoostRecord>,
    pub initial: SpinorField,
    pub final_field: SpinorField,
}

fn phase_of(z: C64) -> Option<f64> {
    (z.norm() > SUPPORT_TOL).then(|| -z.arg())
}

/// One pass over the modes of `cur` (momentum space), with overlaps against `prev`.
fn record(model: &Model, step: usize, eps: f64, prev: Option<&SpinorField>, cur: &SpinorField) -> BoostRecord {
    let lat = *cur.lattice();
    let sd = cur.spinor_dim();
    let c2 = model.params.c * model.params.c;
    let mut r = BoostRecord {
        step,
        eps_accum: eps,
        p_mean: [0.0; 3],
        h_mean: 0.0,
        beta_mean: 0.0,
        pop_plus: 0.0,
        pop_minus: 0.0,
        h_plus: 0.0,
        h_minus: 0.0,
        phase_step: 0.0,
        phase_plus: None,
        phase_minus: None,
        min_positive_energy: None,
        max_negative_energy: None,
        v_gp: [0.0; 3],
        norm: cur.norm(),
    };
    let (mut ov, mut ov_p, mut ov_m) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    let mut buf = [C64::new(0.0, 0.0); 4];
    for idx in 0..lat.points() {
        let mode = ModeEigensystem::new(&model.rep, model.momentum(lat.wavevector(idx)), &model.params);
        let v = cur.spinor(idx);
        let w: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        for a in 0..lat.dim() {
            r.p_mean[a] += mode.p[a] * w;
        }
        let e = mode.h.sandwich(v, v).re;
        r.h_mean += e;
        r.beta_mean += model.rep.beta.sandwich(v, v).re;
        let vg = e / (mode.energy * mode.energy);
        for a in 0..lat.dim() {
            r.v_gp[a] += c2 * mode.p[a] * vg;
        }
        mode.plus.apply_into(v, &mut buf[..sd]);
        let wp: f64 = buf[..sd].iter().map(|z| z.norm_sqr()).sum();
        let wm = (w - wp).max(0.0);
        r.pop_plus += wp;
        r.pop_minus += wm;
        r.h_plus += mode.energy * wp;
        r.h_minus -= mode.energy * wm;
        if wp > SUPPORT_TOL {
            r.min_positive_energy = Some(r.min_positive_energy.map_or(mode.energy, |m: f64| m.min(mode.energy)));
        }
        if wm > SUPPORT_TOL {
            r.max_negative_energy = Some(r.max_negative_energy.map_or(-mode.energy, |m: f64| m.max(-mode.energy)));
        }
        if let Some(p) = prev {
            let u = p.spinor(idx);
            ov += u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>();
            ov_p += mode.plus.sandwich(u, v);
            ov_m += mode.minus.sandwich(u, v);
        }
    }
    if prev.is_some() {
        r.phase_step = phase_of(ov).unwrap_or(0.0);
        r.phase_plus = phase_of(ov_p);
        r.phase_minus = phase_of(ov_m);
    }
    r
}

/// Applies `U_T(ε_total)` in `n_steps` equal steps, recording diagnostics after
/// each. Since every step is exact, `n_steps` only sets the sampling density.
/// Aborts with [`Error::BoostEdge`] once the momentum-space edge band holds
/// more than [`ALIASING_TOL`] of the norm.
pub fn boost_run(model: &Model, field: &SpinorField, eps_total: f64, n_steps: usize) -> Result<BoostRun> {
    model.check_field(field)?;
    if !eps_total.is_finite() {
        return Err(Error::parameter("eps_total", format!("must be finite, got {eps_total}")));
    }
    if n_steps == 0 && eps_total != 0.0 {
        return Err(Error::parameter("n_steps", "a nonzero ε_total needs at least one step"));
    }
    let op = build_time_operator(field.lattice(), model)?;
    let hbar = model.params.hbar;
    let d_eps = if n_steps == 0 { 0.0 } else { eps_total / n_steps as f64 };

    let initial = field.to_position();
    let mut mom = initial.to_momentum();
    let edge = max_edge_mass(&mom, Space::Momentum);
    if edge > ALIASING_TOL {
        return Err(Error::BoostEdge { step: 0, mass: edge });
    }
    let mut records = vec![record(model, 0, 0.0, None, &mom)];
    let mut pos = initial.clone();
    for step in 1..=n_steps {
        pos = boost_step(&op, &pos, d_eps, hbar)?;
        let next = pos.to_momentum();
        let edge = max_edge_mass(&next, Space::Momentum);
        if edge > ALIASING_TOL {
            return Err(Error::BoostEdge { step, mass: edge });
        }
        records.push(record(model, step, d_eps * step as f64, Some(&mom), &next));
        mom = next;
    }
    Ok(BoostRun {
        eps_total,
        n_steps,
        d_eps,
        records,
        initial,
        final_field: pos,
    })
}

impl BoostRun {
    /// CSV with columns `step, eps_accum, p_mean, H_mean, beta_mean, pop_plus,
    /// pop_minus, phase_step`. `p_mean` is the x component.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,eps_accum,p_mean,H_mean,beta_mean,pop_plus,pop_minus,phase_step")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.step, r.eps_accum, r.p_mean[0], r.h_mean, r.beta_mean, r.pop_plus, r.pop_minus, r.phase_step
            )?;
        }
        Ok(())
    }

    pub fn first(&self) -> &BoostRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &BoostRecord {
        self.records.last().expect("at least the initial record")
    }

    /// The dominant branch when the other one holds less than [`PURE_BRANCH_TOL`].
    pub fn pure_branch(&self) -> Option<BranchSign> {
        let r = self.first();
        if r.pop_minus <= PURE_BRANCH_TOL * r.norm * r.norm {
            Some(BranchSign::Plus)
        } else if r.pop_plus <= PURE_BRANCH_TOL * r.norm * r.norm {
            Some(BranchSign::Minus)
        } else {
            None
        }
    }
}

fn rel_err(value: f64, target: f64) -> f64 {
    if target == 0.0 {
        value.abs()
    } else {
        (value - target).abs() / target.abs()
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Central finite-difference `d⟨p⟩/dε` at `ε = 0` against `−⟨α⟩/c`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentumResponse {
    pub h: f64,
    pub dp_deps: [f64; 3],
    /// `−⟨α⟩/c`.
    pub expected: [f64; 3],
    /// `|dp/dε − expected| / |expected|`.
    pub rel_err: f64,
}

pub fn momentum_response(model: &Model, field: &SpinorField, h: f64) -> Result<MomentumResponse> {
    model.check_field(field)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::parameter("h", format!("must be positive, got {h}")));
    }
    let op = build_time_operator(field.lattice(), model)?;
    let hbar = model.params.hbar;
    let p_at = |eps: f64| -> Result<[f64; 3]> {
        let f = boost_step(&op, field, eps, hbar)?.to_momentum();
        Ok(record(model, 0, eps, None, &f).p_mean)
    };
    let (pp, pm) = (p_at(h)?, p_at(-h)?);
    let dp = [0, 1, 2].map(|a| (pp[a] - pm[a]) / (2.0 * h));
    let pos = field.to_position();
    let mut alpha = [0.0; 3];
    for idx in 0..pos.lattice().points() {
        let s = pos.spinor(idx);
        for (a, al) in model.rep.alphas.iter().enumerate() {
            alpha[a] += al.sandwich(s, s).re;
        }
    }
    let expected = alpha.map(|v| -v / model.params.c);
    let diff = [0, 1, 2].map(|a| dp[a] - expected[a]);
    let scale = dot(expected, expected).sqrt();
    let err = dot(diff, diff).sqrt();
    Ok(MomentumResponse {
        h,
        dp_deps: dp,
        expected,
        rel_err: if scale > 0.0 { err / scale } else { err },
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhaseStep {
    pub step: usize,
    pub phase: f64,
    /// `δε ⟨β⟩ τ₀/ħ` with `⟨β⟩` averaged over the step's end points.
    pub expected: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseReport {
    /// `"positive"`, `"negative"` or `"mixed"`.
    pub branch: &'static str,
    pub steps: Vec<PhaseStep>,
    pub total: f64,
    pub expected_total: f64,
    pub rel_err_total: f64,
    /// Largest per-step relative deviation.
    pub max_step_rel_err: f64,
    /// Accumulated phase divided by ε_total.
    pub per_unit_eps: f64,
    /// `⟨β⟩τ₀/ħ` of the input state.
    pub expected_per_unit_eps: f64,
    /// Sign of the phase agrees with the sign of the branch.
    pub sign_ok: bool,
    /// Per-branch accumulated phases; populated for mixed input.
    pub total_plus: Option<f64>,
    pub total_minus: Option<f64>,
}

/// Accumulated-phase check of a completed run.
pub fn phase_shift_check(model: &Model, run: &BoostRun) -> PhaseReport {
    let tau0 = model.params.tau0();
    let hbar = model.params.hbar;
    let mut steps = Vec::with_capacity(run.n_steps);
    let mut max_step = 0.0f64;
    let (mut plus, mut minus) = (0.0, 0.0);
    for w in run.records.windows(2) {
        let expected = run.d_eps * 0.5 * (w[0].beta_mean + w[1].beta_mean) * tau0 / hbar;
        max_step = max_step.max(rel_err(w[1].phase_step, expected));
        plus += w[1].phase_plus.unwrap_or(0.0);
        minus += w[1].phase_minus.unwrap_or(0.0);
        steps.push(PhaseStep {
            step: w[1].step,
            phase: w[1].phase_step,
            expected,
        });
    }
    let total: f64 = steps.iter().map(|s| s.phase).sum();
    let expected_total: f64 = steps.iter().map(|s| s.expected).sum();
    let pure = run.pure_branch();
    let branch = match pure {
        Some(BranchSign::Plus) => "positive",
        Some(BranchSign::Minus) => "negative",
        None => "mixed",
    };
    let sign_ok = match pure {
        Some(BranchSign::Plus) => total * run.eps_total.signum() > 0.0,
        Some(BranchSign::Minus) => total * run.eps_total.signum() < 0.0,
        None => true,
    } || run.n_steps == 0;
    let per_unit_eps = if run.eps_total != 0.0 { total / run.eps_total } else { 0.0 };
    PhaseReport {
        branch,
        steps,
        total,
        expected_total,
        rel_err_total: rel_err(total, expected_total),
        max_step_rel_err: max_step,
        per_unit_eps,
        expected_per_unit_eps: run.first().beta_mean * tau0 / hbar,
        sign_ok,
        total_plus: pure.is_none().then_some(plus),
        total_minus: pure.is_none().then_some(minus),
    }
}

/// Momentum shift of a finite boost against `γm₀v_gp = ε v_gp/c²` at `ε = ⟨H⟩`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShiftPoint {
    pub eps: f64,
    /// `|⟨p⟩(ε) − ⟨p⟩(0)|` along the initial group velocity.
    pub dp: f64,
    /// `ε |v_gp|/c²` with the pre-boost group velocity.
    pub target_pre: f64,
    /// Same with the instantaneous group velocity.
    pub target_inst: f64,
    pub dev_pre: f64,
    pub dev_inst: f64,
    /// Minority-branch weight at this ε.
    pub leakage: f64,
}

pub fn momentum_shift_curve(model: &Model, run: &BoostRun) -> Vec<ShiftPoint> {
    let c2 = model.params.c * model.params.c;
    let r0 = run.first();
    let v0 = r0.v_gp;
    let speed0 = dot(v0, v0).sqrt();
    let dir = if speed0 > 0.0 { v0.map(|v| v / speed0) } else { [1.0, 0.0, 0.0] };
    let minority = |r: &BoostRecord| match run.pure_branch() {
        Some(BranchSign::Minus) => r.pop_plus,
        _ => r.pop_minus,
    };
    run.records
        .iter()
        .skip(1)
        .map(|r| {
            let dp_vec = [0, 1, 2].map(|a| r.p_mean[a] - r0.p_mean[a]);
            let dp = dot(dp_vec, dir).abs();
            let eps = r.eps_accum.abs();
            let target_pre = eps * speed0 / c2;
            let target_inst = eps * dot(r.v_gp, dir).abs() / c2;
            ShiftPoint {
                eps: r.eps_accum,
                dp,
                target_pre,
                target_inst,
                dev_pre: rel_err(dp, target_pre),
                dev_inst: rel_err(dp, target_inst),
                leakage: (minority(r) - minority(r0)).max(0.0),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeBroglieReport {
    /// `|⟨p⟩|`.
    pub p: f64,
    /// Momentum at the peak of the momentum density, along `⟨p⟩`.
    pub p_peak: f64,
    pub h_mean: f64,
    /// Group velocity along `⟨p⟩`.
    pub v_gp: f64,
    /// `⟨H⟩/|⟨p⟩|`.
    pub v_ph: f64,
    /// `h/|⟨p⟩|`.
    pub lambda: f64,
    /// `h/p_peak`.
    pub lambda_peak: f64,
    /// `(1/ν)(c²/v_gp)` with `ν = ⟨H⟩/h`.
    pub lambda_identity: f64,
    pub rel_err_lambda: f64,
    /// `|v_ph v_gp/c² − 1|`.
    pub rel_err_velocity: f64,
}

pub fn de_broglie_check(model: &Model, field: &SpinorField) -> Result<DeBroglieReport> {
    model.check_field(field)?;
    field.check_normalized()?;
    let mom = field.to_momentum();
    let r = record(model, 0, 0.0, None, &mom);
    let p = dot(r.p_mean, r.p_mean).sqrt();
    let hbar = model.params.hbar;
    if p < 1e-9 * hbar {
        return Err(Error::precondition("nonzero_momentum", format!("|<p>| = {p:.3e}")));
    }
    let dir = r.p_mean.map(|v| v / p);
    let lat = *mom.lattice();
    let dens = mom.density();
    let peak = (0..lat.points()).fold(0, |b, i| if dens[i] > dens[b] { i } else { b });
    let p_peak = dot(model.momentum(lat.wavevector(peak)), dir);
    let h = 2.0 * std::f64::consts::PI * hbar;
    let c2 = model.params.c * model.params.c;
    let v_gp = dot(group_velocity(model, field)?, dir);
    let v_ph = r.h_mean / p;
    let lambda = h / p;
    let lambda_identity = h / r.h_mean * c2 / v_gp;
    Ok(DeBroglieReport {
        p,
        p_peak,
        h_mean: r.h_mean,
        v_gp,
        v_ph,
        lambda,
        lambda_peak: h / p_peak,
        lambda_identity,
        rel_err_lambda: rel_err(lambda_identity, lambda),
        rel_err_velocity: (v_ph * v_gp / c2 - 1.0).abs(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PauliReport {
    /// `"positive"`, `"negative"` or `"mixed"`.
    pub branch: &'static str,
    /// Minority-branch weight gained, per record.
    pub leakage: Vec<f64>,
    pub leakage_final: f64,
    pub leakage_max: f64,
    pub leakage_monotone: bool,
    /// Minimum over the run of the smallest supported positive-branch energy.
    pub min_positive_energy: Option<f64>,
    /// Supported positive-branch energies stay at or above `m₀c²`.
    pub within_branch: bool,
    /// Largest per-step change of the positive-branch mean energy.
    pub max_energy_jump: f64,
}

/// Energy support and branch leakage over a run. Leakage is admixture of the
/// empty branch; there is no state with energy inside `(−m₀c², m₀c²)`.
pub fn pauli_diagnostic(model: &Model, run: &BoostRun, grid_tol: f64) -> PauliReport {
    let pure = run.pure_branch();
    let branch = match pure {
        Some(BranchSign::Plus) => "positive",
        Some(BranchSign::Minus) => "negative",
        None => "mixed",
    };
    let minority = |r: &BoostRecord| match pure {
        Some(BranchSign::Minus) => r.pop_plus,
        _ => r.pop_minus,
    };
    let base = minority(run.first());
    let leakage: Vec<f64> = run.records.iter().map(|r| (minority(r) - base).max(0.0)).collect();
    let leakage_monotone = leakage.windows(2).all(|w| w[1] >= w[0]);
    let mc2 = model.params.rest_energy();
    let min_pos = run
        .records
        .iter()
        .filter_map(|r| r.min_positive_energy)
        .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.min(e))));
    let mean_pos = |r: &BoostRecord| if r.pop_plus > SUPPORT_TOL { r.h_plus / r.pop_plus } else { 0.0 };
    let max_jump = run
        .records
        .windows(2)
        .map(|w| (mean_pos(&w[1]) - mean_pos(&w[0])).abs())
        .fold(0.0, f64::max);
    PauliReport {
        branch,
        leakage_final: *leakage.last().unwrap_or(&0.0),
        leakage_max: leakage.iter().copied().fold(0.0, f64::max),
        leakage,
        leakage_monotone,
        min_positive_energy: min_pos,
        within_branch: min_pos.is_none_or(|e| e >= mc2 - grid_tol),
        max_energy_jump: max_jump,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HamStepReport {
    pub dt: f64,
    pub substeps: usize,
    pub v_gp: [f64; 3],
    pub gamma: f64,
    pub shift: [f64; 3],
    pub expected_shift: [f64; 3],
    /// `|shift − v_gp·δt| / |v_gp·δt|` (absolute when the expected shift is 0).
    pub shift_rel_err: f64,
    /// Accumulated `−arg⟨ψ(t−dt) translated by v_gp dt | ψ(t)⟩` over the substeps.
    pub phase_comoving: f64,
    /// Same without the translation.
    pub phase_lab: f64,
    /// `±m₀c²δt/(γħ)`, sign of the branch.
    pub expected_phase: f64,
    pub phase_rel_err: f64,
}

/// Evolves a branch-pure packet by `dt` in `substeps` exact steps and measures
/// the centroid shift and the phase accumulated in the frame moving at `v_gp`.
pub fn hamiltonian_step_check(model: &Model, field: &SpinorField, dt: f64, substeps: usize) -> Result<HamStepReport> {
    model.check_field(field)?;
    field.check_normalized()?;
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::parameter("dt", format!("must be finite and ≥ 0, got {dt}")));
    }
    if substeps == 0 {
        return Err(Error::parameter("substeps", "must be ≥ 1"));
    }
    let mom0 = field.to_momentum();
    let r0 = record(model, 0, 0.0, None, &mom0);
    let minority = r0.pop_plus.min(r0.pop_minus);
    if minority > PURE_BRANCH_TOL {
        return Err(Error::precondition("branch_pure", format!("minority weight {minority:.3e}")));
    }
    let hbar = model.params.hbar;
    let h = dt / substeps as f64;
    if r0.h_mean.abs() * h / hbar > 0.25 * std::f64::consts::PI {
        return Err(Error::precondition(
            "phase_sampling",
            format!("{substeps} substeps leave {:.3} rad per step", r0.h_mean.abs() * h / hbar),
        ));
    }
    let gamma = r0.h_mean.abs() / model.params.rest_energy();
    let v = r0.v_gp;
    let lat = *field.lattice();
    let mut cur = mom0.clone();
    let (mut comoving, mut lab) = (0.0, 0.0);
    if dt > 0.0 {
        for _ in 0..substeps {
            let next = evolve(model, &cur, h)?;
            let (mut ov, mut ov_lab) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for idx in 0..lat.points() {
                let k = lat.wavevector(idx);
                let kv: f64 = (0..lat.dim()).map(|a| k[a] * v[a] * h).sum();
                let o: C64 = cur.spinor(idx).iter().zip(next.spinor(idx)).map(|(a, b)| a.conj() * b).sum();
                // ⟨e^{−ik·vh}ψ_n|ψ_{n+1}⟩ = Σ e^{+ik·vh} ψ_n†ψ_{n+1}
                ov += C64::from_polar(1.0, kv) * o;
                ov_lab += o;
            }
            comoving -= ov.arg();
            lab -= ov_lab.arg();
            cur = next;
        }
    }
    let x0 = mean_position(&mom0.to_position());
    let x1 = mean_position(&cur.to_position());
    let shift = [0, 1, 2].map(|a| x1[a] - x0[a]);
    let expected_shift = v.map(|vi| vi * dt);
    let diff = [0, 1, 2].map(|a| shift[a] - expected_shift[a]);
    let es = dot(expected_shift, expected_shift).sqrt();
    let ds = dot(diff, diff).sqrt();
    let expected_phase = r0.h_mean.signum() * model.params.rest_energy() * dt / (gamma * hbar);
    Ok(HamStepReport {
        dt,
        substeps,
        v_gp: v,
        gamma,
        shift,
        expected_shift,
        shift_rel_err: if es > 0.0 { ds / es } else { ds },
        phase_comoving: comoving,
        phase_lab: lab,
        expected_phase,
        phase_rel_err: rel_err(comoving, expected_phase),
    })
}
