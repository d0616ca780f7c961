//! Dirac matrices in the Dirac–Pauli representation, the Clifford residual,
//! and the spin-orbit operator `K = β(2s·l/ħ² + 1)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::dense;
use crate::error::{Error, Result};
use crate::lattice::{apply_momentum, apply_position, tail_bound_axis, Lattice, Space, SpinorField};
use crate::params::PhysParams;
use crate::spinmat::SpinMatrix;

const O: C64 = C64::new(0.0, 0.0);
const I1: C64 = C64::new(1.0, 0.0);
const IM: C64 = C64::new(0.0, 1.0);

/// Pauli matrix `σ_{axis+1}`.
pub fn pauli(axis: usize) -> SpinMatrix {
    match axis {
        0 => SpinMatrix::from_rows([[O, I1], [I1, O]]),
        1 => SpinMatrix::from_rows([[O, -IM], [IM, O]]),
        2 => SpinMatrix::from_rows([[I1, O], [O, -I1]]),
        _ => panic!("pauli axis {axis}"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiracRep {
    pub spatial_dim: usize,
    pub spinor_dim: usize,
    pub alphas: Vec<SpinMatrix>,
    pub beta: SpinMatrix,
    /// `s_i = Σ_i/2` in units of ħ; empty in 1D.
    pub spins: Vec<SpinMatrix>,
}

pub fn build_rep(spatial_dim: usize) -> Result<DiracRep> {
    match spatial_dim {
        1 => Ok(DiracRep {
            spatial_dim: 1,
            spinor_dim: 2,
            alphas: vec![pauli(0)],
            beta: pauli(2),
            spins: Vec::new(),
        }),
        3 => {
            let z = SpinMatrix::zeros(2);
            let id = SpinMatrix::identity(2);
            let alphas = (0..3)
                .map(|a| SpinMatrix::from_blocks(&z, &pauli(a), &pauli(a), &z))
                .collect();
            let beta = SpinMatrix::from_blocks(&id, &z, &z, &(-id));
            let spins = (0..3)
                .map(|a| SpinMatrix::from_blocks(&pauli(a), &z, &z, &pauli(a)).scale_re(0.5))
                .collect();
            Ok(DiracRep {
                spatial_dim: 3,
                spinor_dim: 4,
                alphas,
                beta,
                spins,
            })
        }
        d => Err(Error::Dimension(d)),
    }
}

impl DiracRep {
    /// `α·v` over the spatial axes of the representation.
    pub fn alpha_dot(&self, v: [f64; 3]) -> SpinMatrix {
        let mut out = SpinMatrix::zeros(self.spinor_dim);
        for (a, alpha) in self.alphas.iter().enumerate() {
            if v[a] != 0.0 {
                out = out + alpha.scale_re(v[a]);
            }
        }
        out
    }

    /// `Σ_i = 2 s_i` (3D only).
    pub fn sigma(&self, axis: usize) -> SpinMatrix {
        self.spins[axis].scale_re(2.0)
    }

    pub fn identity(&self) -> SpinMatrix {
        SpinMatrix::identity(self.spinor_dim)
    }
}

/// Largest max-norm violation of `α_i² = I`, `{α_i, α_j} = 0` (i ≠ j),
/// `{α_i, β} = 0`, `β² = I` and of Hermiticity.
pub fn clifford_residual(rep: &DiracRep) -> f64 {
    let id = rep.identity();
    let mut worst = (rep.beta * rep.beta - id).max_abs();
    worst = worst.max(rep.beta.hermiticity_residual());
    for (i, ai) in rep.alphas.iter().enumerate() {
        worst = worst.max(ai.hermiticity_residual());
        worst = worst.max(ai.anticommutator(&rep.beta).max_abs());
        worst = worst.max((*ai * *ai - id).max_abs());
        for aj in rep.alphas.iter().skip(i + 1) {
            worst = worst.max(ai.anticommutator(aj).max_abs());
        }
    }
    for s in &rep.spins {
        worst = worst.max(s.hermiticity_residual());
    }
    worst
}

fn require_3d(rep: &DiracRep, lattice: &Lattice) -> Result<()> {
    if rep.spatial_dim != 3 {
        return Err(Error::Dimension(rep.spatial_dim));
    }
    if lattice.dim() != 3 {
        return Err(Error::Dimension(lattice.dim()));
    }
    Ok(())
}

/// Dense `K = Σ_c (l_c/ħ) ⊗ βΣ_c + I ⊗ β` on (grid ⊗ spinor) space with the
/// lattice angular momentum `l = r × p`.
pub fn spin_orbit_k(rep: &DiracRep, lattice: &Lattice, params: &PhysParams) -> Result<DMatrix<C64>> {
    require_3d(rep, lattice)?;
    dense::check_dim(lattice.points() * rep.spinor_dim)?;
    let mut k = dense::kron_spin(&DMatrix::identity(lattice.points(), lattice.points()), &rep.beta);
    for c in 0..3 {
        let l = dense::angular_momentum(lattice, params.hbar, c)? / C64::new(params.hbar, 0.0);
        k += dense::kron_spin(&l, &(rep.beta * rep.sigma(c)));
    }
    Ok(k)
}

/// Matrix-free `Kψ`, returned in position space.
pub fn apply_spin_orbit_k(rep: &DiracRep, field: &SpinorField, params: &PhysParams) -> Result<SpinorField> {
    require_3d(rep, field.lattice())?;
    let pos = field.to_position();
    let mut acc = pos.clone();
    for c in 0..3 {
        let lpsi = angular_momentum_apply(&pos, c, params.hbar);
        let sc = rep.sigma(c).scale_re(1.0 / params.hbar);
        let mapped = lpsi.map_spinors(|_, src, dst| sc.apply_into(src, dst));
        acc = acc.add_scaled(I1, &mapped)?;
    }
    Ok(acc.map_spinors(|_, src, dst| rep.beta.apply_into(src, dst)))
}

/// `l_c ψ = (x_a p_b − x_b p_a)ψ` with `(a, b, c)` cyclic.
pub fn angular_momentum_apply(field: &SpinorField, c: usize, hbar: f64) -> SpinorField {
    let (a, b) = ((c + 1) % 3, (c + 2) % 3);
    let xp = apply_position(&apply_momentum(field, b, hbar), a);
    let yp = apply_position(&apply_momentum(field, a, hbar), b);
    xp.add_scaled(-I1, &yp).expect("same lattice")
}

/// `‖[K, H_D]ψ‖` against the bound implied by the lattice `[x, p]` defect.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct KhReport {
    pub residual: f64,
    pub bound: f64,
    /// `⟨ψ|βK|ψ⟩`.
    pub beta_k: f64,
}

/// Evaluates `[K, H_D]ψ` with dense operators.
///
/// In the continuum `K` commutes with `H_D`. On the lattice the only defect
/// comes from `[l_c, p_d] = ε_cdb [x_d, p_d] p_b`, so
/// `‖[K, H_D]ψ‖ ≤ (c/ħ) Σ_{ε_cdb ≠ 0} ε_tail,d(p_b ψ)`.
pub fn kh_commutator(
    rep: &DiracRep,
    field: &SpinorField,
    params: &PhysParams,
) -> Result<KhReport> {
    let lattice = *field.lattice();
    let k = spin_orbit_k(rep, &lattice, params)?;
    let h = dense::hamiltonian(rep, &lattice, params)?;
    let pos = field.to_position();
    let v = dense::to_vector(&pos);
    let kv = &k * &v;
    let r = &k * (&h * &v) - &h * &kv;
    let kpsi = dense::from_vector(&pos, &kv);
    let bkpsi = kpsi.map_spinors(|_, src, dst| rep.beta.apply_into(src, dst));
    let beta_k = v.dotc(&dense::to_vector(&bkpsi)).re;

    let mut bound = 0.0;
    for b in 0..3 {
        let pb = apply_momentum(&pos, b, params.hbar);
        for d in 0..3 {
            if d != b {
                bound += tail_bound_axis(&pb, params.hbar, d);
            }
        }
    }
    Ok(KhReport {
        residual: r.norm(),
        bound: params.c / params.hbar * bound,
        beta_k,
    })
}

/// `⟨ψ|βK|ψ⟩` for a normalized field, evaluated matrix-free.
pub fn expect_beta_k(rep: &DiracRep, field: &SpinorField, params: &PhysParams) -> Result<f64> {
    let kpsi = apply_spin_orbit_k(rep, field, params)?;
    let bk = kpsi.map_spinors(|_, src, dst| rep.beta.apply_into(src, dst));
    Ok(field.in_space(Space::Position).inner(&bk)?.re)
}
