//! Transmit alphabet: BS constellations, RIS phase-offset codebooks, bit
//! mapping, received-signal synthesis and the equivalent channel.

mod alphabet;
mod codebook;
mod constellation;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use alphabet::{Alphabet, SymbolPair};
pub use codebook::{CodebookKind, RisCodebook};
pub use constellation::{gray, gray_inverse, Constellation, ConstellationKind};

/// RIS signalling scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Superimposed phase offsets `k_l·Δθ`, `k_l ∈ {-K..K}`.
    #[default]
    Srpm,
    /// Passive beamforming only; the RIS carries no information.
    Pbf,
    /// Each sub-surface switched on or off.
    Pbit,
    /// Exactly `p` sub-surfaces switched off.
    Rpm(usize),
    /// Exactly `p` sub-surfaces rotated by `π/2`.
    Qrm(usize),
}

/// Scalar system parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// RIS elements.
    pub n: usize,
    /// BS antennas.
    pub n_t: usize,
    /// User antennas.
    pub n_r: usize,
    /// Sub-surfaces.
    pub l: usize,
    /// Data streams.
    pub n_s: usize,
    /// Constellation order.
    pub m: usize,
    /// RIS modulation order.
    pub k: usize,
    /// Phase-offset step. Defaults to `2π/(2K+1)`.
    pub delta_theta: Option<f64>,
    /// Transmit power (linear).
    pub p: f64,
    /// Noise variance (linear).
    pub sigma2: f64,
    pub scheme: Scheme,
    pub modulation: ConstellationKind,
    /// Quantization bits of a discrete-phase RIS.
    pub phase_bits: Option<u32>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n: 128,
            n_t: 8,
            n_r: 4,
            l: 2,
            n_s: 1,
            m: 2,
            k: 1,
            delta_theta: None,
            p: 1.0,
            sigma2: 1.0,
            scheme: Scheme::Srpm,
            modulation: ConstellationKind::Qam,
            phase_bits: None,
        }
    }
}

impl SystemConfig {
    /// Effective phase-offset step.
    pub fn delta_theta(&self) -> f64 {
        self.delta_theta.unwrap_or(if self.k == 0 { PI } else { 2.0 * PI / (2 * self.k + 1) as f64 })
    }

    /// Elements per sub-surface.
    pub fn group_size(&self) -> usize {
        self.n / self.l
    }

    /// `⌊log2 M⌋`.
    pub fn bits_per_symbol(&self) -> usize {
        self.m.trailing_zeros() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("n", self.n), ("n_t", self.n_t), ("n_r", self.n_r), ("l", self.l), ("n_s", self.n_s)];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.n % self.l != 0 {
            return Err(Error::Config(format!("n = {} is not divisible by l = {}", self.n, self.l)));
        }
        if self.m < 2 || !self.m.is_power_of_two() {
            return Err(Error::Config(format!("m = {} is not a power of two >= 2", self.m)));
        }
        if self.n_s > self.n_t {
            return Err(Error::Config(format!("n_s = {} exceeds n_t = {}", self.n_s, self.n_t)));
        }
        let dt = self.delta_theta();
        if !(dt > 0.0 && dt <= PI) {
            return Err(Error::Config(format!("delta_theta = {dt} outside (0, π]")));
        }
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return Err(Error::Config("p must be finite and nonnegative".into()));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Config("sigma2 must be finite and nonnegative".into()));
        }
        match self.scheme {
            Scheme::Rpm(p) | Scheme::Qrm(p) if p == 0 || p >= self.l => {
                return Err(Error::Config(format!("pattern weight p = {p} must satisfy 0 < p < l = {}", self.l)));
            }
            _ => {}
        }
        if let Some(b) = self.phase_bits {
            if b == 0 || b > 16 {
                return Err(Error::Config(format!("phase_bits = {b} outside 1..=16")));
            }
            let quantum = PI / f64::from(1u32 << (b - 1));
            let ratio = dt / quantum;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
                return Err(Error::Config(format!("delta_theta = {dt} is not a multiple of π/2^{}", b - 1)));
            }
            if self.k > (1usize << (b - 1)) {
                return Err(Error::Config(format!("k = {} exceeds 2^{} allowed by {b} phase bits", self.k, b - 1)));
            }
        }
        let bits = self.n_s * self.bits_per_symbol() + codebook::ris_bits(self);
        if bits > 63 {
            return Err(Error::Config(format!("{bits} bits per channel use exceeds 63")));
        }
        Ok(())
    }

    /// Bits per channel use, `N_s log2 M + (RIS bits)`.
    pub fn rate_bits(&self) -> usize {
        self.n_s * self.bits_per_symbol() + codebook::ris_bits(self)
    }
}
