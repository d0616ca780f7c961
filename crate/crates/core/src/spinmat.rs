//! Small dense complex matrices acting on a single spinor (2×2 or 4×4).
//!
//! Storage is a fixed 4×4 array so that per-mode and per-site kernels never
//! allocate; only the leading `dim × dim` block is meaningful.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

pub const MAX_SPINOR: usize = 4;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinMatrix {
    dim: usize,
    m: [[C64; MAX_SPINOR]; MAX_SPINOR],
}

impl SpinMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_SPINOR).contains(&dim), "spinor dimension {dim}");
        Self {
            dim,
            m: [[ZERO; MAX_SPINOR]; MAX_SPINOR],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.m[i][i] = ONE;
        }
        out
    }

    /// Builds a matrix from row-major entries; `rows.len()` sets the dimension.
    pub fn from_rows<const D: usize>(rows: [[C64; D]; D]) -> Self {
        let mut out = Self::zeros(D);
        for (i, row) in rows.iter().enumerate() {
            out.m[i][..D].copy_from_slice(row);
        }
        out
    }

    /// Block matrix `[[a, b], [c, d]]` from four 2×2 blocks.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        assert!(a.dim == 2 && b.dim == 2 && c.dim == 2 && d.dim == 2);
        let mut out = Self::zeros(4);
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = a.m[i][j];
                out.m[i][j + 2] = b.m[i][j];
                out.m[i + 2][j] = c.m[i][j];
                out.m[i + 2][j + 2] = d.m[i][j];
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.m[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.m[i][j] = v;
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] *= s;
            }
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] = self.m[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                best = best.max(self.m[i][j].norm());
            }
        }
        best
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// `‖A − A†‖_max`.
    pub fn hermiticity_residual(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    /// `out = A·v`, both slices of length `dim`.
    #[inline]
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for i in 0..d {
            let mut acc = ZERO;
            for j in 0..d {
                acc += self.m[i][j] * v[j];
            }
            out[i] = acc;
        }
    }

    /// `⟨u|A|v⟩`.
    #[inline]
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            let mut row = ZERO;
            for j in 0..d {
                row += self.m[i][j] * v[j];
            }
            acc += u[i].conj() * row;
        }
        acc
    }
}

impl Add for SpinMatrix {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] += rhs.m[i][j];
            }
        }
        out
    }
}

impl Sub for SpinMatrix {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] -= rhs.m[i][j];
            }
        }
        out
    }
}

impl Neg for SpinMatrix {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for SpinMatrix {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.m[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.m[i][j] += a * rhs.m[k][j];
                }
            }
        }
        out
    }
}
