//! Periodic position/momentum lattice and spinor-valued fields on it.
//!
//! Grid conventions:
//!
//! * `N` points per axis, `N` a power of two, spacing `Δx = L/N`, positions
//!   `x_j = −L/2 + jΔx` for `j = 0..N`.
//! * Wavenumbers are stored in FFT order: bin `q` carries `k_q = (2π/L)·m_q`
//!   with `m_q = q` for `q < N/2` and `m_q = q − N` otherwise, so the Nyquist
//!   bin belongs to the negative side. Momentum is `p = ħk`.
//! * Amplitudes are cell-integrated (`a_j = ψ(x_j)·√Δx`), so the norm is the
//!   plain sum `Σ|a|²` in both spaces and the discrete transform is unitary.
//! * Storage is row-major over the grid (last axis fastest) with the spinor
//!   index innermost.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm deviation above which an input is rejected as not normalized.
pub const NORM_TOL: f64 = 1e-9;

/// Fraction of each axis (per side) treated as the edge band by the tail
/// diagnostics.
pub const EDGE_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Position,
    Momentum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    n: usize,
    length: f64,
}

impl Lattice {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::Dimension(dim));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::LatticeSize(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::parameter("length", format!("must be finite and > 0, got {length}")));
        }
        Ok(Self { dim, n, length })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of grid points, `N^dim`.
    #[inline]
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn coordinate(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    /// Signed integer frequency of FFT bin `q`.
    #[inline]
    pub fn frequency(&self, q: usize) -> i64 {
        if q < self.n / 2 {
            q as i64
        } else {
            q as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn wavenumber(&self, q: usize) -> f64 {
        2.0 * PI * self.frequency(q) as f64 / self.length
    }

    /// `π/Δx`, the modulus of the most negative wavenumber.
    pub fn nyquist_wavenumber(&self) -> f64 {
        PI / self.spacing()
    }

    /// Per-axis indices of a flat grid index; unused axes are zero.
    #[inline]
    pub fn unflatten(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    #[inline]
    pub fn flatten(&self, ijk: [usize; 3]) -> usize {
        let mut idx = 0;
        for &i in ijk.iter().take(self.dim) {
            idx = idx * self.n + i;
        }
        idx
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let ijk = self.unflatten(idx);
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            out[a] = self.coordinate(ijk[a]);
        }
        out
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let ijk = self.unflatten(idx);
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            out[a] = self.wavenumber(ijk[a]);
        }
        out
    }

    /// Index of the grid point at the origin (`j = N/2` on every axis).
    pub fn origin(&self) -> usize {
        self.flatten([self.n / 2; 3])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    lattice: Lattice,
    spinor_dim: usize,
    space: Space,
    amps: Vec<C64>,
}

impl SpinorField {
    pub fn zeros(lattice: Lattice, spinor_dim: usize, space: Space) -> Self {
        Self {
            lattice,
            spinor_dim,
            space,
            amps: vec![C64::new(0.0, 0.0); lattice.points() * spinor_dim],
        }
    }

    pub fn from_amplitudes(
        lattice: Lattice,
        spinor_dim: usize,
        space: Space,
        amps: Vec<C64>,
    ) -> Result<Self> {
        if amps.len() != lattice.points() * spinor_dim {
            return Err(Error::Mismatch);
        }
        Ok(Self {
            lattice,
            spinor_dim,
            space,
            amps,
        })
    }

    /// Samples `f(x, s)` at every grid point; the result is not normalized.
    pub fn from_position_fn(
        lattice: Lattice,
        spinor_dim: usize,
        mut f: impl FnMut([f64; 3], usize) -> C64,
    ) -> Self {
        let mut out = Self::zeros(lattice, spinor_dim, Space::Position);
        for idx in 0..lattice.points() {
            let x = lattice.position(idx);
            for s in 0..spinor_dim {
                out.amps[idx * spinor_dim + s] = f(x, s);
            }
        }
        out
    }

    /// Samples `f(k, s)` on the wavenumber grid; the result is not normalized.
    pub fn from_momentum_fn(
        lattice: Lattice,
        spinor_dim: usize,
        mut f: impl FnMut([f64; 3], usize) -> C64,
    ) -> Self {
        let mut out = Self::zeros(lattice, spinor_dim, Space::Momentum);
        for idx in 0..lattice.points() {
            let k = lattice.wavevector(idx);
            for s in 0..spinor_dim {
                out.amps[idx * spinor_dim + s] = f(k, s);
            }
        }
        out
    }

    #[inline]
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    #[inline]
    pub fn spinor_dim(&self) -> usize {
        self.spinor_dim
    }

    #[inline]
    pub fn space(&self) -> Space {
        self.space
    }

    #[inline]
    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    #[inline]
    pub fn spinor(&self, idx: usize) -> &[C64] {
        &self.amps[idx * self.spinor_dim..(idx + 1) * self.spinor_dim]
    }

    #[inline]
    pub fn spinor_mut(&mut self, idx: usize) -> &mut [C64] {
        let sd = self.spinor_dim;
        &mut self.amps[idx * sd..(idx + 1) * sd]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm. Zero fields are left untouched.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
        n
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n2 = self.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.lattice != other.lattice || self.spinor_dim != other.spinor_dim {
            return Err(Error::Mismatch);
        }
        if self.space != other.space {
            return Err(Error::Space {
                expected: self.space,
                found: other.space,
            });
        }
        Ok(())
    }

    /// `⟨self|other⟩`; both fields must share lattice and space.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_compatible(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, s: C64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.amps.iter_mut().zip(&other.amps) {
            *a += s * b;
        }
        Ok(out)
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.amps.iter_mut().for_each(|a| *a *= s);
        out
    }

    /// Largest amplitude difference against `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Applies a spinor matrix that varies over the grid, `ψ(i) ← M(i)·ψ(i)`.
    pub fn map_spinors(&self, mut f: impl FnMut(usize, &[C64], &mut [C64])) -> Self {
        let sd = self.spinor_dim;
        let mut out = self.clone();
        for idx in 0..self.lattice.points() {
            let src = &self.amps[idx * sd..(idx + 1) * sd];
            f(idx, src, &mut out.amps[idx * sd..(idx + 1) * sd]);
        }
        out
    }

    /// Forward transform to momentum space.
    pub fn dft_forward(&self) -> Result<Self> {
        if self.space != Space::Position {
            return Err(Error::Space {
                expected: Space::Position,
                found: self.space,
            });
        }
        let mut out = self.clone();
        transform(&mut out, false);
        out.space = Space::Momentum;
        Ok(out)
    }

    /// Inverse transform back to position space.
    pub fn dft_inverse(&self) -> Result<Self> {
        if self.space != Space::Momentum {
            return Err(Error::Space {
                expected: Space::Momentum,
                found: self.space,
            });
        }
        let mut out = self.clone();
        transform(&mut out, true);
        out.space = Space::Position;
        Ok(out)
    }

    /// Returns the field in the requested space, transforming if needed.
    pub fn in_space(&self, space: Space) -> Self {
        match (self.space, space) {
            (a, b) if a == b => self.clone(),
            (Space::Position, Space::Momentum) => self.dft_forward().expect("space checked"),
            _ => self.dft_inverse().expect("space checked"),
        }
    }

    pub fn to_position(&self) -> Self {
        self.in_space(Space::Position)
    }

    pub fn to_momentum(&self) -> Self {
        self.in_space(Space::Momentum)
    }

    /// Probability on each grid point (or momentum bin), summed over spinor components.
    pub fn density(&self) -> Vec<f64> {
        self.amps
            .chunks_exact(self.spinor_dim)
            .map(|s| s.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }

    /// Writes the documented binary layout:
    ///
    /// ```text
    /// magic   b"SPNR"
    /// u32     version (1)
    /// u32     spatial dimension
    /// u32     points per axis
    /// f64     box length
    /// u32     space tag (0 = position, 1 = momentum)
    /// u32     spinor dimension
    /// f64×2   re, im per amplitude, grid row-major then spinor
    /// ```
    ///
    /// All values little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.lattice.dim as u32).to_le_bytes())?;
        w.write_all(&(self.lattice.n as u32).to_le_bytes())?;
        w.write_all(&self.lattice.length.to_le_bytes())?;
        let tag: u32 = match self.space {
            Space::Position => 0,
            Space::Momentum => 1,
        };
        w.write_all(&tag.to_le_bytes())?;
        w.write_all(&(self.spinor_dim as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let n = read_u32(&mut r)? as usize;
        let length = read_f64(&mut r)?;
        let space = match read_u32(&mut r)? {
            0 => Space::Position,
            1 => Space::Momentum,
            t => return Err(Error::Format(format!("unknown space tag {t}"))),
        };
        let spinor_dim = read_u32(&mut r)? as usize;
        if spinor_dim == 0 || spinor_dim > crate::spinmat::MAX_SPINOR {
            return Err(Error::Format(format!("spinor dimension {spinor_dim}")));
        }
        let lattice = Lattice::new(dim, n, length)?;
        let count = lattice.points() * spinor_dim;
        let mut amps = Vec::with_capacity(count);
        for _ in 0..count {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            amps.push(C64::new(re, im));
        }
        Self::from_amplitudes(lattice, spinor_dim, space, amps)
    }
}

/// Normalized Gaussian `exp(−|x−x₀|²/4σ² + i k₀·x)·χ` sampled on the grid, with
/// no resolution or clearance checks. Useful for deliberately under-resolved
/// test states.
pub fn gaussian_field(lattice: Lattice, spinor: &[C64], x0: [f64; 3], sigma: f64, k0: [f64; 3]) -> SpinorField {
    let dim = lattice.dim;
    SpinorField::from_position_fn(lattice, spinor.len(), |x, s| {
        let mut r2 = 0.0;
        let mut ph = 0.0;
        for a in 0..dim {
            r2 += (x[a] - x0[a]).powi(2);
            ph += k0[a] * x[a];
        }
        C64::from_polar((-r2 / (4.0 * sigma * sigma)).exp(), ph) * spinor[s]
    })
    .normalized()
}

const MAGIC: &[u8; 4] = b"SPNR";

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Unitary DFT along every axis. The `(−1)^q` factor accounts for the grid
/// starting at `−L/2` instead of 0.
fn transform(field: &mut SpinorField, inverse: bool) {
    let lat = field.lattice;
    let n = lat.n;
    let sd = field.spinor_dim;
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let scale = 1.0 / (n as f64).sqrt();
    let mut line = vec![C64::new(0.0, 0.0); n];
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let points = lat.points();

    for axis in 0..lat.dim {
        // stride between consecutive points along `axis`, in grid points
        let stride = n.pow((lat.dim - 1 - axis) as u32);
        for start in 0..points {
            // visit each line once: its first point has index 0 along `axis`
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for s in 0..sd {
                for (q, v) in line.iter_mut().enumerate() {
                    let a = field.amps[(start + q * stride) * sd + s];
                    *v = if inverse && q % 2 == 1 { -a } else { a };
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (q, v) in line.iter().enumerate() {
                    let mut a = *v * scale;
                    if !inverse && q % 2 == 1 {
                        a = -a;
                    }
                    field.amps[(start + q * stride) * sd + s] = a;
                }
            }
        }
    }
}

/// `exp(−i α·p̂/ħ)`: shifts the field by `shift` (only the first `dim` entries are used).
pub fn translate(field: &SpinorField, shift: [f64; 3]) -> Result<SpinorField> {
    if field.space != Space::Position {
        return Err(Error::Space {
            expected: Space::Position,
            found: field.space,
        });
    }
    let lat = field.lattice;
    for &s in shift.iter().take(lat.dim) {
        if !(s.is_finite() && s.abs() < 0.5 * lat.length) {
            return Err(Error::parameter("shift", format!("|α| must be < L/2, got {s}")));
        }
    }
    let sd = field.spinor_dim;
    let mut mom = field.dft_forward()?;
    for idx in 0..lat.points() {
        let k = lat.wavevector(idx);
        let phase: f64 = (0..lat.dim).map(|a| k[a] * shift[a]).sum();
        let f = C64::from_polar(1.0, -phase);
        for a in &mut mom.amps[idx * sd..(idx + 1) * sd] {
            *a *= f;
        }
    }
    let out = mom.dft_inverse()?;
    let edge = max_edge_mass(&out, Space::Position);
    if edge > ALIASING_TOL {
        return Err(Error::Aliasing {
            space: Space::Position,
            mass: edge,
        });
    }
    Ok(out)
}

/// Edge-band mass above which a translated field counts as wrapped.
pub const ALIASING_TOL: f64 = 1e-8;

/// Norm² carried by the outer `EDGE_FRACTION` band (per side) of `axis`, in `space`.
pub fn edge_mass(field: &SpinorField, space: Space, axis: usize) -> f64 {
    let f = field.in_space(space);
    let lat = f.lattice;
    let n = lat.n as f64;
    let dens = f.density();
    let mut mass = 0.0;
    for (idx, d) in dens.iter().enumerate() {
        let j = lat.unflatten(idx)[axis];
        let edge = match space {
            Space::Position => lat.coordinate(j).abs() >= (1.0 - EDGE_FRACTION) * 0.5 * lat.length,
            Space::Momentum => (lat.frequency(j).unsigned_abs() as f64) >= (1.0 - EDGE_FRACTION) * 0.5 * n,
        };
        if edge {
            mass += d;
        }
    }
    mass
}

/// Largest `edge_mass` over the axes of the lattice.
pub fn max_edge_mass(field: &SpinorField, space: Space) -> f64 {
    (0..field.lattice.dim)
        .map(|a| edge_mass(field, space, a))
        .fold(0.0, f64::max)
}

/// Mean coordinate along each axis (position-space expectation).
pub fn mean_position(field: &SpinorField) -> [f64; 3] {
    let f = field.to_position();
    let lat = f.lattice;
    let dens = f.density();
    let mut out = [0.0; 3];
    for (idx, d) in dens.iter().enumerate() {
        let x = lat.position(idx);
        for a in 0..lat.dim {
            out[a] += x[a] * d;
        }
    }
    out
}

/// Mean momentum `⟨ħk⟩` along each axis.
pub fn mean_momentum(field: &SpinorField, hbar: f64) -> [f64; 3] {
    let f = field.to_momentum();
    let lat = f.lattice;
    let dens = f.density();
    let mut out = [0.0; 3];
    for (idx, d) in dens.iter().enumerate() {
        let k = lat.wavevector(idx);
        for a in 0..lat.dim {
            out[a] += hbar * k[a] * d;
        }
    }
    out
}

/// Per-axis second central moments `(Var x_a, Var p_a)`.
pub fn variances(field: &SpinorField, hbar: f64) -> ([f64; 3], [f64; 3]) {
    let pos = field.to_position();
    let mom = field.to_momentum();
    let lat = pos.lattice;
    let n2 = pos.norm_sqr();
    let mut vx = [0.0; 3];
    let mut vp = [0.0; 3];
    let mx = mean_position(&pos);
    let mp = mean_momentum(&mom, hbar);
    for (idx, d) in pos.density().iter().enumerate() {
        let x = lat.position(idx);
        for a in 0..lat.dim {
            vx[a] += (x[a] - mx[a]).powi(2) * d;
        }
    }
    for (idx, d) in mom.density().iter().enumerate() {
        let k = lat.wavevector(idx);
        for a in 0..lat.dim {
            vp[a] += (hbar * k[a] - mp[a]).powi(2) * d;
        }
    }
    for a in 0..lat.dim {
        vx[a] /= n2;
        vp[a] /= n2;
    }
    (vx, vp)
}

/// Position-momentum uncertainty along the first axis.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct XpUncertainty {
    pub dx: f64,
    pub dp: f64,
    pub product: f64,
    /// Relative slack granted to `product ≥ ħ/2` by finite box and band.
    pub grid_tol: f64,
}

impl XpUncertainty {
    pub fn satisfies_bound(&self, hbar: f64) -> bool {
        self.product >= 0.5 * hbar * (1.0 - self.grid_tol)
    }
}

pub fn uncertainty_xp(field: &SpinorField, hbar: f64) -> Result<XpUncertainty> {
    field.check_normalized()?;
    let (vx, vp) = variances(field, hbar);
    let dx = vx[0].sqrt();
    let dp = vp[0].sqrt();
    let tail = edge_mass(field, Space::Position, 0) + edge_mass(field, Space::Momentum, 0);
    Ok(XpUncertainty {
        dx,
        dp,
        product: dx * dp,
        grid_tol: 10.0 * tail + 1e-12,
    })
}

/// `p̂_a ψ` in position space (spectral derivative).
pub fn apply_momentum(field: &SpinorField, axis: usize, hbar: f64) -> SpinorField {
    let mut mom = field.to_momentum();
    let lat = mom.lattice;
    let sd = mom.spinor_dim;
    for idx in 0..lat.points() {
        let p = hbar * lat.wavevector(idx)[axis];
        for a in &mut mom.amps[idx * sd..(idx + 1) * sd] {
            *a *= p;
        }
    }
    mom.dft_inverse().expect("momentum space")
}

/// `x̂_a ψ` in position space.
pub fn apply_position(field: &SpinorField, axis: usize) -> SpinorField {
    let pos = field.to_position();
    let lat = pos.lattice;
    pos.map_spinors(|idx, src, dst| {
        let x = lat.position(idx)[axis];
        for (d, s) in dst.iter_mut().zip(src) {
            *d = *s * x;
        }
    })
}

/// `Σ_a ([x̂_a, p̂_a] − iħ) ψ`, evaluated with spectral derivatives.
pub fn xp_commutator_defect(field: &SpinorField, hbar: f64) -> SpinorField {
    let pos = field.to_position();
    let lat = pos.lattice;
    let mut out = SpinorField::zeros(lat, pos.spinor_dim, Space::Position);
    let ih = C64::new(0.0, hbar);
    for axis in 0..lat.dim {
        let xp = apply_position(&apply_momentum(&pos, axis, hbar), axis);
        let px = apply_momentum(&apply_position(&pos, axis), axis, hbar);
        for ((o, a), (b, c)) in out
            .amps
            .iter_mut()
            .zip(&xp.amps)
            .zip(px.amps.iter().zip(&pos.amps))
        {
            *o += a - b - ih * c;
        }
    }
    out
}

/// `‖Σ_a([x̂_a, p̂_a] − iħ)ψ‖`.
pub fn xp_commutator_residual(field: &SpinorField, hbar: f64) -> f64 {
    xp_commutator_defect(field, hbar).norm()
}

/// Upper bound on `‖([x̂_a, p̂_a] − iħ)ψ‖` summed over axes.
///
/// On a periodic lattice the defect is carried entirely by the state's
/// amplitude near the box edge and near the Nyquist edge, with
/// `‖[x̂, p̂] − iħ‖ ≤ ħ(πN + 1)`. Per axis,
///
/// `ε_a = ħ(πN + 1)·min(‖ψ‖, √(2(w_x + w_p))) + ħ(πN + 1)·16ε·√D·‖ψ‖`
///
/// where `w_x`, `w_p` are the norms² in the outer quarter of the position and
/// wavenumber axes, `D` the number of amplitudes, and the last term a
/// round-off floor.
pub fn tail_bound(field: &SpinorField, hbar: f64) -> f64 {
    (0..field.lattice.dim).map(|a| tail_bound_axis(field, hbar, a)).sum()
}

/// The single-axis term `ε_a` of [`tail_bound`].
pub fn tail_bound_axis(field: &SpinorField, hbar: f64, axis: usize) -> f64 {
    let lat = field.lattice;
    let norm = field.norm();
    let op_norm = hbar * (PI * lat.n as f64 + 1.0);
    let floor = op_norm * 16.0 * f64::EPSILON * ((lat.points() * field.spinor_dim) as f64).sqrt() * norm;
    let w = edge_mass(field, Space::Position, axis) + edge_mass(field, Space::Momentum, axis);
    op_norm * norm.min((2.0 * w).sqrt()) + floor
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(lat: Lattice, x0: f64, sigma: f64, k0: f64) -> SpinorField {
        SpinorField::from_position_fn(lat, 1, |x, _| {
            C64::from_polar((-(x[0] - x0).powi(2) / (4.0 * sigma * sigma)).exp(), k0 * x[0])
        })
        .normalized()
    }

    #[test]
    fn rejects_bad_lattices() {
        assert!(matches!(Lattice::new(2, 8, 1.0), Err(Error::Dimension(2))));
        assert!(matches!(Lattice::new(1, 12, 1.0), Err(Error::LatticeSize(12))));
        assert!(Lattice::new(1, 8, -1.0).is_err());
    }

    #[test]
    fn grid_conventions() {
        let lat = Lattice::new(1, 8, 4.0).unwrap();
        assert_eq!(lat.coordinate(0), -2.0);
        assert_eq!(lat.coordinate(4), 0.0);
        assert_eq!(lat.frequency(3), 3);
        assert_eq!(lat.frequency(4), -4);
        assert_eq!(lat.n() as f64 * lat.spacing(), lat.length());
        let l3 = Lattice::new(3, 4, 1.0).unwrap();
        for idx in 0..l3.points() {
            assert_eq!(l3.flatten(l3.unflatten(idx)), idx);
        }
        assert_eq!(l3.position(l3.origin()), [0.0; 3]);
    }

    #[test]
    fn wrong_space_is_rejected() {
        let lat = Lattice::new(1, 8, 4.0).unwrap();
        let f = SpinorField::zeros(lat, 2, Space::Momentum);
        assert!(matches!(f.dft_forward(), Err(Error::Space { .. })));
        assert!(translate(&f, [0.1, 0.0, 0.0]).is_err());
    }

    #[test]
    fn round_trip_1d_and_3d() {
        let lat = Lattice::new(1, 64, 10.0).unwrap();
        let f = gaussian(lat, 0.7, 0.8, 1.3);
        let back = f.dft_forward().unwrap().dft_inverse().unwrap();
        assert!(back.max_abs_diff(&f).unwrap() <= 1e-12);

        let l3 = Lattice::new(3, 8, 6.0).unwrap();
        let f3 = SpinorField::from_position_fn(l3, 4, |x, s| {
            C64::new((x[0] + 2.0 * x[1] - x[2]).sin(), s as f64 * x[2])
        });
        let back3 = f3.dft_forward().unwrap().dft_inverse().unwrap();
        assert!(back3.max_abs_diff(&f3).unwrap() <= 1e-12);
        assert!((f3.dft_forward().unwrap().norm_sqr() - f3.norm_sqr()).abs() <= 1e-12 * f3.norm_sqr());
    }

    #[test]
    fn plane_wave_lands_in_one_bin() {
        let lat = Lattice::new(1, 32, 8.0).unwrap();
        let m = 5;
        let k = 2.0 * PI * m as f64 / lat.length();
        let f = SpinorField::from_position_fn(lat, 1, |x, _| C64::from_polar(1.0, k * x[0])).normalized();
        let mom = f.dft_forward().unwrap();
        for q in 0..lat.n() {
            let a = mom.amplitudes()[q].norm();
            if lat.frequency(q) == m {
                assert!((a - 1.0).abs() < 1e-12);
            } else {
                assert!(a < 1e-12, "bin {q} has {a}");
            }
        }
    }

    #[test]
    fn transform_matches_direct_sum() {
        // continuum pairing Φ(p) = Σ_j e^{−i p x_j/ħ} a_j / √N
        let lat = Lattice::new(1, 16, 5.0).unwrap();
        let f = gaussian(lat, -0.4, 0.6, 0.9);
        let mom = f.dft_forward().unwrap();
        for q in 0..lat.n() {
            let k = lat.wavenumber(q);
            let direct: C64 = (0..lat.n())
                .map(|j| C64::from_polar(1.0, -k * lat.coordinate(j)) * f.amplitudes()[j])
                .sum::<C64>()
                / (lat.n() as f64).sqrt();
            assert!((direct - mom.amplitudes()[q]).norm() < 1e-13);
        }
    }

    #[test]
    fn gaussian_momentum_width() {
        let lat = Lattice::new(1, 256, 40.0).unwrap();
        let sigma = 1.3;
        let f = gaussian(lat, 0.0, sigma, 0.0);
        let u = uncertainty_xp(&f, 1.0).unwrap();
        assert!((u.dp - 1.0 / (2.0 * sigma)).abs() < 1e-10);
        assert!((u.dx - sigma).abs() < 1e-10);
    }

    #[test]
    fn translate_moves_the_mean() {
        let lat = Lattice::new(1, 256, 40.0).unwrap();
        let f = gaussian(lat, 0.0, 1.0, 0.0);
        let g = translate(&f, [1.0, 0.0, 0.0]).unwrap();
        assert!((mean_position(&g)[0] - 1.0).abs() < 1e-9);
        assert!((g.norm_sqr() - 1.0).abs() < 1e-12);
        let same = translate(&f, [0.0; 3]).unwrap();
        assert!(same.max_abs_diff(&f).unwrap() < 1e-13);
    }

    #[test]
    fn translate_group_law() {
        let lat = Lattice::new(1, 256, 40.0).unwrap();
        let f = gaussian(lat, -1.0, 1.2, 0.4);
        let two = translate(&translate(&f, [0.73, 0.0, 0.0]).unwrap(), [1.41, 0.0, 0.0]).unwrap();
        let one = translate(&f, [2.14, 0.0, 0.0]).unwrap();
        assert!(two.max_abs_diff(&one).unwrap() <= 1e-12);
    }

    #[test]
    fn translate_flags_wrapping() {
        let lat = Lattice::new(1, 128, 20.0).unwrap();
        let f = gaussian(lat, 6.0, 1.0, 0.0);
        assert!(matches!(translate(&f, [3.0, 0.0, 0.0]), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn minimum_uncertainty_and_excited_state() {
        let lat = Lattice::new(1, 512, 60.0).unwrap();
        for sigma in [1.0, 2.0] {
            let u = uncertainty_xp(&gaussian(lat, 0.0, sigma, 0.0), 1.0).unwrap();
            assert!((u.product / 0.5 - 1.0).abs() < 5e-3);
            assert!(u.satisfies_bound(1.0));
        }
        let a = uncertainty_xp(&gaussian(lat, 0.0, 1.0, 0.0), 1.0).unwrap();
        let b = uncertainty_xp(&gaussian(lat, 0.0, 2.0, 0.0), 1.0).unwrap();
        assert!((b.dx / a.dx - 2.0).abs() < 1e-9);
        assert!((b.dp / a.dp - 0.5).abs() < 1e-9);

        // first Hermite-Gaussian: ΔxΔp = 3ħ/2
        let h1 = SpinorField::from_position_fn(lat, 1, |x, _| C64::new(x[0] * (-x[0] * x[0] / 4.0).exp(), 0.0))
            .normalized();
        let u = uncertainty_xp(&h1, 1.0).unwrap();
        assert!((u.product / 1.5 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn uncertainty_rejects_unnormalized() {
        let lat = Lattice::new(1, 32, 8.0).unwrap();
        let f = gaussian(lat, 0.0, 1.0, 0.0).scaled(C64::new(2.0, 0.0));
        assert!(matches!(uncertainty_xp(&f, 1.0), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn commutator_defect_within_tail_bound() {
        for n in [64, 128, 256, 512] {
            let lat = Lattice::new(1, n, 320.0).unwrap();
            let f = gaussian(lat, 0.0, 1.0, 0.0);
            let r = xp_commutator_residual(&f, 1.0);
            assert!(r <= tail_bound(&f, 1.0), "N={n}");
        }
    }

    #[test]
    fn binary_round_trip() {
        let lat = Lattice::new(3, 4, 2.0).unwrap();
        let f = SpinorField::from_position_fn(lat, 4, |x, s| C64::new(x[0] - s as f64, x[1] * x[2]));
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 * 3 + 8 + 4 * 2 + 16 * 64 * 4);
        let back = SpinorField::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, f);
        buf[0] = b'X';
        assert!(SpinorField::read_binary(buf.as_slice()).is_err());
    }
}
