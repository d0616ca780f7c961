//! Explicit matrices for small lattices. These are built independently of
//! the FFT path and serve as oracles for it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::algebra::DiracRep;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Space, SpinorField};
use crate::params::PhysParams;
use crate::spinmat::SpinMatrix;

/// Largest matrix dimension any dense routine will build.
pub const DENSE_LIMIT: usize = 8192;

pub fn check_dim(dim: usize) -> Result<()> {
    if dim > DENSE_LIMIT {
        return Err(Error::Oversize {
            dim,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

/// Unitary 1D DFT matrix in the lattice convention,
/// `F_qj = (−1)^q e^{−2πi qj/N} / √N`.
pub fn dft_matrix(n: usize) -> DMatrix<C64> {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |q, j| {
        let sign = if q % 2 == 1 { -s } else { s };
        // reduce q·j mod N before scaling to keep the phase exact
        let phase = -2.0 * PI * ((q * j) % n) as f64 / n as f64;
        C64::from_polar(sign, phase)
    })
}

/// Embeds a 1D operator on `axis` into the full grid, `I ⊗ … ⊗ A ⊗ … ⊗ I`.
fn embed_axis(lattice: &Lattice, axis: usize, one: &DMatrix<C64>) -> DMatrix<C64> {
    let pts = lattice.points();
    let mut out = DMatrix::zeros(pts, pts);
    for i in 0..pts {
        let ii = lattice.unflatten(i);
        for ja in 0..lattice.n() {
            let v = one[(ii[axis], ja)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let mut jj = ii;
            jj[axis] = ja;
            out[(i, lattice.flatten(jj))] = v;
        }
    }
    out
}

/// `x̂_axis` on the grid (diagonal).
pub fn position_operator(lattice: &Lattice, axis: usize) -> Result<DMatrix<C64>> {
    check_dim(lattice.points())?;
    let pts = lattice.points();
    Ok(DMatrix::from_fn(pts, pts, |i, j| {
        if i == j {
            C64::new(lattice.position(i)[axis], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// `p̂_axis = F† diag(ħk) F` on the grid.
pub fn momentum_operator(lattice: &Lattice, hbar: f64, axis: usize) -> Result<DMatrix<C64>> {
    check_dim(lattice.points())?;
    let n = lattice.n();
    let f = dft_matrix(n);
    let k = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(hbar * lattice.wavenumber(i), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let p1 = f.adjoint() * k * f;
    Ok(embed_axis(lattice, axis, &p1))
}

/// `l_c = x_a p_b − x_b p_a` with `(a, b, c)` cyclic.
pub fn angular_momentum(lattice: &Lattice, hbar: f64, c: usize) -> Result<DMatrix<C64>> {
    let (a, b) = ((c + 1) % 3, (c + 2) % 3);
    let xa = position_operator(lattice, a)?;
    let xb = position_operator(lattice, b)?;
    let pa = momentum_operator(lattice, hbar, a)?;
    let pb = momentum_operator(lattice, hbar, b)?;
    Ok(&xa * &pb - &xb * &pa)
}

/// `G ⊗ S` with the spinor index innermost.
pub fn kron_spin(grid: &DMatrix<C64>, spin: &SpinMatrix) -> DMatrix<C64> {
    let sd = spin.dim();
    let n = grid.nrows();
    let mut out = DMatrix::zeros(n * sd, n * sd);
    for i in 0..n {
        for j in 0..n {
            let g = grid[(i, j)];
            if g == C64::new(0.0, 0.0) {
                continue;
            }
            for s in 0..sd {
                for t in 0..sd {
                    out[(i * sd + s, j * sd + t)] = g * spin.get(s, t);
                }
            }
        }
    }
    out
}

/// Dense `H_D = Σ_a c p_a ⊗ α_a + I ⊗ βm₀c²`.
pub fn hamiltonian(rep: &DiracRep, lattice: &Lattice, params: &PhysParams) -> Result<DMatrix<C64>> {
    check_dim(lattice.points() * rep.spinor_dim)?;
    let pts = lattice.points();
    let mut h = kron_spin(&DMatrix::identity(pts, pts), &rep.beta.scale_re(params.rest_energy()));
    for a in 0..lattice.dim() {
        let p = momentum_operator(lattice, params.hbar, a)?;
        h += kron_spin(&p, &rep.alphas[a].scale_re(params.c));
    }
    Ok(h)
}

/// Dense `T = Σ_a x_a ⊗ α_a / c + I ⊗ βτ₀`.
pub fn time_operator(rep: &DiracRep, lattice: &Lattice, params: &PhysParams) -> Result<DMatrix<C64>> {
    check_dim(lattice.points() * rep.spinor_dim)?;
    let pts = lattice.points();
    let mut t = kron_spin(&DMatrix::identity(pts, pts), &rep.beta.scale_re(params.tau0()));
    for a in 0..lattice.dim() {
        let x = position_operator(lattice, a)?;
        t += kron_spin(&x, &rep.alphas[a].scale_re(1.0 / params.c));
    }
    Ok(t)
}

/// `exp(−i A s)` for Hermitian `A`, by eigendecomposition.
pub fn expm_hermitian(a: &DMatrix<C64>, s: f64) -> DMatrix<C64> {
    let eig = a.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * s)));
    v * d * v.adjoint()
}

/// Position-space amplitudes as a column vector.
pub fn to_vector(field: &SpinorField) -> DVector<C64> {
    let pos = field.to_position();
    DVector::from_column_slice(pos.amplitudes())
}

/// Inverse of [`to_vector`].
pub fn from_vector(template: &SpinorField, v: &DVector<C64>) -> SpinorField {
    SpinorField::from_amplitudes(
        *template.lattice(),
        template.spinor_dim(),
        Space::Position,
        v.as_slice().to_vec(),
    )
    .expect("vector length matches template")
}

/// `A ψ` for a dense operator in the position basis.
pub fn apply(a: &DMatrix<C64>, field: &SpinorField) -> SpinorField {
    from_vector(field, &(a * to_vector(field)))
}
