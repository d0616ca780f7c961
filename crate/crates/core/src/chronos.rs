//! The time operator `T = α·r/c + βτ₀`: blocks and spectrum, `⟨T(t)⟩`,
//! the `[T, H_D]` commutator and the uncertainty relations built on it.

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::algebra::{apply_spin_orbit_k, spin_orbit_k, DiracRep};
use crate::dense;
use crate::dynamics::{
    self, apply_hamiltonian, branch_populations, expect_re, fit_line, group_velocity, velocity_sq, zb_spectrum, Model,
    Observable, ObservableSeries, ZbSpectrum,
};
use crate::error::{Error, Result};
use crate::lattice::{tail_bound, variances, Lattice, Space, SpinorField};
use crate::spinmat::SpinMatrix;

/// Block-diagonal `T` on a lattice: one Hermitian spinor block per site.
#[derive(Clone, Debug)]
pub struct TimeOperator {
    lattice: Lattice,
    rep: DiracRep,
    tau0: f64,
    c: f64,
}

pub fn build_time_operator(lattice: &Lattice, model: &Model) -> Result<TimeOperator> {
    if lattice.dim() != model.rep.spatial_dim {
        return Err(Error::Mismatch);
    }
    Ok(TimeOperator {
        lattice: *lattice,
        rep: model.rep.clone(),
        tau0: model.params.tau0(),
        c: model.params.c,
    })
}

impl TimeOperator {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// `T(x) = α·x/c + βτ₀` at an arbitrary position.
    pub fn block_at(&self, x: [f64; 3]) -> SpinMatrix {
        self.rep.alpha_dot(x.map(|v| v / self.c)) + self.rep.beta.scale_re(self.tau0)
    }

    pub fn block(&self, idx: usize) -> SpinMatrix {
        self.block_at(self.lattice.position(idx))
    }

    /// `τ_r = √((|x|/c)² + τ₀²)`.
    pub fn tau_r_at(&self, x: [f64; 3]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (r2 / (self.c * self.c) + self.tau0 * self.tau0).sqrt()
    }

    /// `Tψ` in position space.
    pub fn apply(&self, field: &SpinorField) -> Result<SpinorField> {
        if field.lattice() != &self.lattice || field.spinor_dim() != self.rep.spinor_dim {
            return Err(Error::Mismatch);
        }
        let pos = field.to_position();
        Ok(pos.map_spinors(|idx, src, dst| self.block(idx).apply_into(src, dst)))
    }

    /// `exp(−i s T/ħ)ψ` with the closed form
    /// `cos(sτ_r/ħ) I − i sin(sτ_r/ħ) T/τ_r` per site.
    pub fn exp_apply(&self, field: &SpinorField, s_over_hbar: f64) -> Result<SpinorField> {
        if field.lattice() != &self.lattice || field.spinor_dim() != self.rep.spinor_dim {
            return Err(Error::Mismatch);
        }
        let pos = field.to_position();
        let id = SpinMatrix::identity(self.rep.spinor_dim);
        Ok(pos.map_spinors(|idx, src, dst| {
            let x = self.lattice.position(idx);
            let tr = self.tau_r_at(x);
            let (sn, cs) = (s_over_hbar * tr).sin_cos();
            let u = id.scale_re(cs) + self.block_at(x).scale(C64::new(0.0, -sn / tr));
            u.apply_into(src, dst);
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinBasis {
    /// `Σ·x̂`, defined away from the origin.
    Helicity,
    /// `Σ_z`, used at `x = 0` where the helicity axis is undefined.
    Sz,
    /// 1D: no spin label.
    None,
}

/// Eigen-decomposition of one `T(x)` block.
#[derive(Clone, Debug, Serialize)]
pub struct SiteSpectrum {
    pub position: [f64; 3],
    /// Closed-form `τ_r`.
    pub tau_r: f64,
    /// Eigenvalues from a general Hermitian eigensolver, descending.
    pub eigenvalues: Vec<f64>,
    /// Branch sign (+1/−1) of each constructed eigenspinor.
    pub branch: Vec<i8>,
    /// Spin label (±1/2) of each eigenspinor in `basis`; 0 in 1D.
    pub spin: Vec<f64>,
    pub basis: SpinBasis,
    #[serde(skip)]
    pub eigenspinors: Vec<[C64; 4]>,
}

impl SiteSpectrum {
    /// `max |⟨u_i|u_j⟩ − δ_ij|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let d = self.eigenspinors.len();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let ip: C64 = (0..d).map(|s| self.eigenspinors[i][s].conj() * self.eigenspinors[j][s]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).norm());
            }
        }
        worst
    }

    /// `max |Σ_i u_i u_i† − I|`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.eigenspinors.len();
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let s: C64 = self.eigenspinors.iter().map(|u| u[a] * u[b].conj()).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    /// `max_i ‖T u_i − λ_i u_i‖` with `λ_i = ±τ_r`.
    pub fn eigen_residual(&self, op: &TimeOperator) -> f64 {
        let t = op.block_at(self.position);
        let d = self.eigenspinors.len();
        let mut worst = 0.0f64;
        for (u, &b) in self.eigenspinors.iter().zip(&self.branch) {
            let mut tu = [C64::new(0.0, 0.0); 4];
            t.apply_into(&u[..d], &mut tu[..d]);
            let lam = b as f64 * self.tau_r;
            let r: f64 = (0..d).map(|s| (tu[s] - u[s] * lam).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(r);
        }
        worst
    }
}

/// Largest-norm column of a rank-one projector, normalized.
fn column_of(p: &SpinMatrix) -> [C64; 4] {
    let d = p.dim();
    let mut best = (0, 0.0);
    for j in 0..d {
        let n: f64 = (0..d).map(|i| p.get(i, j).norm_sqr()).sum();
        if n > best.1 {
            best = (j, n);
        }
    }
    let inv = 1.0 / best.1.sqrt();
    let mut out = [C64::new(0.0, 0.0); 4];
    for i in 0..d {
        out[i] = p.get(i, best.0) * inv;
    }
    out
}

fn hermitian_eigenvalues(m: &SpinMatrix) -> Vec<f64> {
    let d = m.dim();
    let mut full = Matrix4::<C64>::zeros();
    for i in 0..d {
        for j in 0..d {
            full[(i, j)] = m.get(i, j);
        }
    }
    let mut ev: Vec<f64> = if d == 4 {
        full.symmetric_eigen().eigenvalues.iter().copied().collect()
    } else {
        let sub = full.fixed_view::<2, 2>(0, 0).into_owned();
        sub.symmetric_eigen().eigenvalues.iter().copied().collect()
    };
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Spectrum and eigenspinors of `T(x)`.
///
/// Eigenspinors come from the commuting projectors `(I ± T/τ_r)/2` and, in 3D,
/// `(I ± Σ·x̂)/2`. At the origin the helicity projector is replaced by
/// `(I ± Σ_z)/2`.
pub fn spectrum_at(op: &TimeOperator, x: [f64; 3]) -> SiteSpectrum {
    let t = op.block_at(x);
    let tau_r = op.tau_r_at(x);
    let d = op.rep.spinor_dim;
    let id = SpinMatrix::identity(d);
    let eigenvalues = hermitian_eigenvalues(&t);
    let branch_proj = |s: f64| (id + t.scale_re(s / tau_r)).scale_re(0.5);
    let mut eigenspinors = Vec::with_capacity(d);
    let mut branch = Vec::with_capacity(d);
    let mut spin = Vec::with_capacity(d);
    let basis;
    if d == 2 {
        basis = SpinBasis::None;
        for s in [1.0, -1.0] {
            eigenspinors.push(column_of(&branch_proj(s)));
            branch.push(s as i8);
            spin.push(0.0);
        }
    } else {
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let axis = if r > 0.0 {
            basis = SpinBasis::Helicity;
            let n = x.map(|v| v / r);
            (0..3).fold(SpinMatrix::zeros(4), |acc, a| acc + op.rep.sigma(a).scale_re(n[a]))
        } else {
            basis = SpinBasis::Sz;
            op.rep.sigma(2)
        };
        for s in [1.0, -1.0] {
            for h in [1.0, -1.0] {
                let p = branch_proj(s) * (id + axis.scale_re(h)).scale_re(0.5);
                eigenspinors.push(column_of(&p));
                branch.push(s as i8);
                spin.push(0.5 * h);
            }
        }
    }
    SiteSpectrum {
        position: x,
        tau_r,
        eigenvalues,
        branch,
        spin,
        basis,
        eigenspinors,
    }
}

/// Aggregate spectrum checks over a set of sites.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectrumCheck {
    pub sites: usize,
    /// `max |λ|/τ_r − 1` over all eigenvalues and sites.
    pub eigenvalue_rel_err: f64,
    /// Smallest `λ₊ − λ₋` over the sites.
    pub min_gap: f64,
    pub orthonormality: f64,
    pub completeness: f64,
    pub eigen_residual: f64,
    /// `min |λ|`, expected to be `≥ τ₀`.
    pub min_abs_eigenvalue: f64,
    /// `max |sorted spectrum + reversed spectrum|`, zero for a symmetric spectrum.
    pub asymmetry: f64,
}

pub fn spectrum_check(op: &TimeOperator, sites: impl IntoIterator<Item = [f64; 3]>) -> SpectrumCheck {
    let mut out = SpectrumCheck {
        sites: 0,
        eigenvalue_rel_err: 0.0,
        min_gap: f64::INFINITY,
        orthonormality: 0.0,
        completeness: 0.0,
        eigen_residual: 0.0,
        min_abs_eigenvalue: f64::INFINITY,
        asymmetry: 0.0,
    };
    for x in sites {
        let s = spectrum_at(op, x);
        let d = s.eigenvalues.len();
        out.sites += 1;
        for (i, &lam) in s.eigenvalues.iter().enumerate() {
            let expected = if i < d / 2 { s.tau_r } else { -s.tau_r };
            out.eigenvalue_rel_err = out.eigenvalue_rel_err.max((lam / expected - 1.0).abs());
            out.min_abs_eigenvalue = out.min_abs_eigenvalue.min(lam.abs());
            out.asymmetry = out.asymmetry.max((lam + s.eigenvalues[d - 1 - i]).abs());
        }
        out.min_gap = out.min_gap.min(s.eigenvalues[d / 2 - 1] - s.eigenvalues[d / 2]);
        out.orthonormality = out.orthonormality.max(s.orthonormality_residual());
        out.completeness = out.completeness.max(s.completeness_residual());
        out.eigen_residual = out.eigen_residual.max(s.eigen_residual(op));
    }
    out
}

/// Result of fitting `⟨T(t)⟩`.
#[derive(Clone, Debug)]
pub struct TSeriesReport {
    pub series: ObservableSeries,
    pub slope: f64,
    pub intercept: f64,
    /// `⟨(cp/H)²⟩`, the predicted slope.
    pub expected_slope: f64,
    pub mixed: bool,
    pub zb: Option<ZbSpectrum>,
}

/// Minimum fitting window in units of τ₀.
pub const SERIES_MIN_WINDOW: f64 = 10.0;

/// `⟨T(t)⟩` with its least-squares slope and, for mixed packets, the ZB peak.
pub fn series_t(model: &Model, field0: &SpinorField, times: &[f64]) -> Result<TSeriesReport> {
    dynamics::check_times(times)?;
    let tau0 = model.params.tau0();
    let window = times[times.len() - 1] - times[0];
    if window < SERIES_MIN_WINDOW * tau0 * (1.0 - 1e-12) {
        return Err(Error::precondition(
            "series_window",
            format!("window {window} shorter than {SERIES_MIN_WINDOW}τ₀ = {}", SERIES_MIN_WINDOW * tau0),
        ));
    }
    let series = dynamics::observable_series(model, field0, Observable::Time, times)?;
    let (intercept, slope) = fit_line(times, &series.real());
    let (pp, pm) = branch_populations(model, field0)?;
    let mixed = pp.min(pm) > 1e-6;
    let zb = if mixed && times.len() >= dynamics::ZB_MIN_SAMPLES {
        Some(zb_spectrum(&series)?)
    } else {
        None
    };
    Ok(TSeriesReport {
        series,
        slope,
        intercept,
        expected_slope: velocity_sq(model, field0),
        mixed,
        zb,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CommutatorReport {
    pub n: usize,
    pub residual: f64,
    pub tail_bound: f64,
    pub within_bound: bool,
}

/// `Rψ = [T,H]ψ − iħ(I + 2βK)ψ − 2β(τ₀H − m₀c²T)ψ` in 3D; in 1D the
/// `2βK` term is absent. On the lattice `R = Σ_a([x_a, p_a] − iħ)`, so its
/// action is bounded by [`tail_bound`].
fn commutator_from(
    model: &Model,
    psi: &SpinorField,
    t_psi: &SpinorField,
    h_psi: &SpinorField,
    th_psi: &SpinorField,
    ht_psi: &SpinorField,
    k_psi: Option<&SpinorField>,
) -> Result<SpinorField> {
    let p = &model.params;
    let ih = C64::new(0.0, p.hbar);
    let one = C64::new(1.0, 0.0);
    let mut r = th_psi.add_scaled(-one, ht_psi)?.add_scaled(-ih, psi)?;
    let mut inner = h_psi.scaled(C64::new(p.tau0(), 0.0)).add_scaled(C64::new(-p.rest_energy(), 0.0), t_psi)?;
    if let Some(k) = k_psi {
        // 2β(τ₀H − mc²T) + 2iħβK = 2β(τ₀H − mc²T + iħK)
        inner = inner.add_scaled(ih, k)?;
    }
    let beta = model.rep.beta;
    let b_inner = inner.map_spinors(|_, src, dst| beta.apply_into(src, dst));
    r = r.add_scaled(C64::new(-2.0, 0.0), &b_inner)?;
    Ok(r)
}

/// Spectral (matrix-free) evaluation of `‖Rψ‖`.
pub fn commutator_th(model: &Model, field: &SpinorField) -> Result<CommutatorReport> {
    let lat = *field.lattice();
    let op = build_time_operator(&lat, model)?;
    let psi = field.to_position();
    let t_psi = op.apply(&psi)?;
    let h_psi = apply_hamiltonian(model, &psi)?.to_position();
    let th = op.apply(&h_psi)?;
    let ht = apply_hamiltonian(model, &t_psi)?.to_position();
    let k = if lat.dim() == 3 {
        Some(apply_spin_orbit_k(&model.rep, &psi, &model.params)?)
    } else {
        None
    };
    let r = commutator_from(model, &psi, &t_psi, &h_psi, &th, &ht, k.as_ref())?;
    let residual = r.norm();
    let bound = tail_bound(&psi, model.params.hbar);
    Ok(CommutatorReport {
        n: lat.n(),
        residual,
        tail_bound: bound,
        within_bound: residual <= bound,
    })
}

/// Dense-matrix evaluation of `‖Rψ‖` (total dimension ≤ `DENSE_LIMIT`).
pub fn commutator_th_dense(model: &Model, field: &SpinorField) -> Result<CommutatorReport> {
    let lat = *field.lattice();
    let t = dense::time_operator(&model.rep, &lat, &model.params)?;
    let h = dense::hamiltonian(&model.rep, &lat, &model.params)?;
    let psi = field.to_position();
    let v = dense::to_vector(&psi);
    let tv = &t * &v;
    let hv = &h * &v;
    let as_field = |x: &nalgebra::DVector<C64>| dense::from_vector(&psi, x);
    let k = if lat.dim() == 3 {
        let km = spin_orbit_k(&model.rep, &lat, &model.params)?;
        Some(as_field(&(km * &v)))
    } else {
        None
    };
    let r = commutator_from(
        model,
        &psi,
        &as_field(&tv),
        &as_field(&hv),
        &as_field(&(&t * &hv)),
        &as_field(&(&h * &tv)),
        k.as_ref(),
    )?;
    let residual = r.norm();
    let bound = tail_bound(&psi, model.params.hbar);
    Ok(CommutatorReport {
        n: lat.n(),
        residual,
        tail_bound: bound,
        within_bound: residual <= bound,
    })
}

/// Gates used by [`uncertainty_th`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UncertaintyTolerance {
    /// Absolute slack on the squared-width inequalities.
    pub abs: f64,
    /// Relative slack on the product bounds.
    pub rel: f64,
}

impl Default for UncertaintyTolerance {
    fn default() -> Self {
        Self { abs: 1e-10, rel: 1e-6 }
    }
}

/// Time-energy uncertainties with their bounds. Serializes to the fixed field
/// set `dT, dH, dr, dp, bound_eq28, bound_eq31, mt_time, dTdt, pass_eq29,
/// pass_eq30, pass_eq31, pass_eq36`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct UncertaintyReport {
    #[serde(rename = "dT")]
    pub d_t: f64,
    #[serde(rename = "dH")]
    pub d_h: f64,
    pub dr: f64,
    pub dp: f64,
    /// `(ħ/2)|⟨I + 2βK⟩|` in 3D, `ħ/2` in 1D.
    pub bound_eq28: f64,
    /// `3ħ/2` in 3D, `ħ/2` in 1D.
    pub bound_eq31: f64,
    pub mt_time: Option<f64>,
    #[serde(rename = "dTdt")]
    pub d_t_dt: Option<f64>,
    pub pass_eq29: bool,
    pub pass_eq30: bool,
    pub pass_eq31: bool,
    pub pass_eq36: Option<bool>,
    #[serde(skip)]
    pub pass_eq28: bool,
    /// `(Δr)(Δp) < bound_eq31`: the intermediate step fails while the
    /// product may still hold. Flagged, not failed.
    #[serde(skip)]
    pub chain_flag: bool,
    /// `½|⟨[T, H]⟩|`, the exact Robertson bound for this state.
    #[serde(skip)]
    pub robertson: f64,
    #[serde(skip)]
    pub beta_k: Option<f64>,
}

impl UncertaintyReport {
    pub fn product(&self) -> f64 {
        self.d_t * self.d_h
    }
}

/// ΔT from `T` applied block-wise in position space, ΔH mode-wise in
/// momentum space, Δr and Δp from second central moments summed over axes.
pub fn uncertainty_th(model: &Model, field: &SpinorField, tol: UncertaintyTolerance) -> Result<UncertaintyReport> {
    field.check_normalized()?;
    let lat = *field.lattice();
    let op = build_time_operator(&lat, model)?;
    let p = &model.params;
    let psi = field.to_position();
    let t_psi = op.apply(&psi)?;
    let h_psi = apply_hamiltonian(model, &psi)?.to_position();
    let t_mean = psi.inner(&t_psi)?.re;
    let h_mean = psi.inner(&h_psi)?.re;
    let var_t = (t_psi.norm_sqr() - t_mean * t_mean).max(0.0);
    let var_h = (h_psi.norm_sqr() - h_mean * h_mean).max(0.0);
    let (vx, vp) = variances(&psi, p.hbar);
    let var_r: f64 = vx.iter().sum();
    let var_p: f64 = vp.iter().sum();
    let (d_t, d_h, dr, dp) = (var_t.sqrt(), var_h.sqrt(), var_r.sqrt(), var_p.sqrt());
    let robertson = t_psi.inner(&h_psi)?.im.abs();

    let (bound_eq28, bound_eq31, beta_k) = if lat.dim() == 3 {
        let bk = crate::algebra::expect_beta_k(&model.rep, &psi, p)?;
        (0.5 * p.hbar * (1.0 + 2.0 * bk).abs(), 1.5 * p.hbar, Some(bk))
    } else {
        (0.5 * p.hbar, 0.5 * p.hbar, None)
    };
    let product = d_t * d_h;
    let c2 = p.c * p.c;
    Ok(UncertaintyReport {
        d_t,
        d_h,
        dr,
        dp,
        bound_eq28,
        bound_eq31,
        mt_time: None,
        d_t_dt: None,
        pass_eq29: var_t - var_r / c2 >= -tol.abs,
        pass_eq30: var_h - c2 * var_p >= -tol.abs,
        pass_eq31: product >= bound_eq31 * (1.0 - tol.rel),
        pass_eq36: None,
        pass_eq28: product >= bound_eq28 * (1.0 - tol.rel),
        chain_flag: dr * dp < bound_eq31 * (1.0 - tol.rel),
        robertson,
        beta_k,
    })
}

/// Mandelstam–Tamm comparison built from a fitted `⟨T(t)⟩`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MtReport {
    pub uncertainty: UncertaintyReport,
    /// `ΔT_MT / ΔT = 1/|d⟨T⟩/dt|`.
    pub ratio: f64,
    /// `(c/v_gp)²`, the non-relativistic expectation for `ratio`.
    pub nr_target: f64,
    pub v_gp: f64,
    pub expected_slope: f64,
}

/// `ΔT_MT = ΔT/|d⟨T⟩/dt|` with the derivative from the fitted slope.
pub fn mt_report(
    model: &Model,
    field: &SpinorField,
    times: &[f64],
    tol: UncertaintyTolerance,
) -> Result<MtReport> {
    let series = series_t(model, field, times)?;
    let slope = series.slope;
    // a fitted slope this small is indistinguishable from a k₀ = 0 packet
    if slope.abs() < 1e-9 {
        return Err(Error::DivergentMtTime(slope));
    }
    let mut u = uncertainty_th(model, field, tol)?;
    let mt = u.d_t / slope.abs();
    u.mt_time = Some(mt);
    u.d_t_dt = Some(slope);
    u.pass_eq36 = Some(mt * u.d_h >= 0.5 * model.params.hbar * (1.0 - tol.rel));
    let v = group_velocity(model, field)?;
    let v_gp = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(MtReport {
        uncertainty: u,
        ratio: mt / u.d_t,
        nr_target: (model.params.c / v_gp).powi(2),
        v_gp,
        expected_slope: series.expected_slope,
    })
}

/// `⟨T⟩` of a field.
pub fn expect_time(model: &Model, field: &SpinorField) -> Result<f64> {
    expect_re(model, &field.in_space(Space::Position), Observable::Time)
}
