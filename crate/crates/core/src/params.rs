use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the free electron problem. Natural units
/// (`ħ = c = m₀ = 1`) are the default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub hbar: f64,
    pub c: f64,
    pub m0: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            c: 1.0,
            m0: 1.0,
        }
    }
}

impl PhysParams {
    pub fn new(hbar: f64, c: f64, m0: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("c", c), ("m0", m0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::parameter(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(Self { hbar, c, m0 })
    }

    /// Planck's constant `h = 2πħ`.
    pub fn planck(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    /// Rest energy `m₀c²`.
    pub fn rest_energy(&self) -> f64 {
        self.m0 * self.c * self.c
    }

    /// The internal period `τ₀ = h / m₀c²`.
    pub fn tau0(&self) -> f64 {
        self.planck() / self.rest_energy()
    }

    pub fn compton_length(&self) -> f64 {
        self.hbar / (self.m0 * self.c)
    }

    /// Free dispersion `E(p) = √((c|p|)² + (m₀c²)²)` for `|p|² = p2`.
    #[inline]
    pub fn energy(&self, p2: f64) -> f64 {
        let mc2 = self.rest_energy();
        (self.c * self.c * p2 + mc2 * mc2).sqrt()
    }
}
